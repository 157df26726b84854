#pragma once

#include "coalim/chain.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace coalim {

double poisson_pmf(double lambda, std::int64_t k);

struct GofBin {
    std::int64_t k_lo = 0;
    std::int64_t k_hi = 0;  // inclusive; -1 marks an open tail [k_lo, inf)
    double observed = 0.0;
    double expected = 0.0;
};

struct GofReport {
    double lambda = 0.0;
    std::size_t sample_size = 0;
    std::vector<std::int64_t> histogram;  // observed count of each k from 0 to max sample
    std::vector<double> reference_pmf;     // Poisson pmf over the same k
    std::vector<GofBin> bins;              // pooled so every expected count is >= 5
    double chi_square = 0.0;
    int degrees_of_freedom = 0;
    double p_value = 1.0;
    double total_variation = 0.0;
};

inline constexpr std::size_t kMinGofSamples = 1000;
inline constexpr double kMinExpectedPerBin = 5.0;

// Chi-square goodness of fit of integer samples against Poisson(lambda)
// plus the total-variation distance between empirical and exact pmf.
GofReport poisson_gof(std::span<const std::int64_t> samples, double lambda);

// 0.5 * sum_k |pmf[k] - Poisson(lambda)(k)| with the Poisson mass beyond
// the end of `pmf` counted in full.
double poisson_tv_distance(std::span<const double> pmf, double lambda);

// Weighted empirical pmf: entry k is sum_i w_i [x_i = k] / N.
std::vector<double> weighted_pmf(std::span<const std::int64_t> samples, std::span<const double> weights);

double pearson_correlation(std::span<const double> x, std::span<const double> y);

// Chi-square survival function.
double chi_square_sf(double statistic, int dof);

// sup over s in [0, t] of the sum-norm distance between the scaled path and
// the deterministic limit started at y0 (toward the origin for backward
// paths, outward for forward ones). Evaluated at every jump time k/n <= t
// and at the left limit just before the next jump.
double path_sup_deviation(const ScaledPath& path, std::span<const double> y0, double t);

double median(std::vector<double> values);

}  // namespace coalim
