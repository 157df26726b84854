#pragma once

#include "coalim/chain.hpp"
#include "coalim/model.hpp"
#include "coalim/position.hpp"
#include "coalim/rng.hpp"
#include "coalim/test_function.hpp"

#include <span>
#include <vector>

namespace coalim {

// Y(t) = y0 - (y0/|y0|)(t ^ |y0|) in the sum norm.
std::vector<double> deterministic_position(std::span<const double> y0, double t);

// Forward limit: y0 + (y0/|y0|) t. Every component of y0 must be positive.
std::vector<double> forward_limit_position(std::span<const double> y0, double t);

// lambda_ij(y) = theta P_ij y_i / |y|^2, row-major d x d; zero at infinity.
std::vector<double> jump_intensity(const Position& y, const MutationModel& model);

struct CumulativeIntensity {
    std::size_t dimension = 0;
    std::vector<double> matrix;  // row-major d x d
    double total = 0.0;

    double operator()(std::size_t i, std::size_t j) const { return matrix[i * dimension + j]; }
};

// Integral of the intensities along the backward (toward the origin, t < |y|)
// or forward (away from the origin) deterministic line started at y.
CumulativeIntensity cumulative_intensity(std::span<const double> y, double t, const MutationModel& model,
                                         Direction direction = Direction::Backward);

// Product-Poisson probability that the counts increase by exactly w over [0, t].
double mutation_count_pmf(std::span<const double> y, double t, const MutationModel& model,
                          const MutationCountMatrix& w, Direction direction = Direction::Backward);

// Independent Poisson(Lambda_ij) draws.
MutationCountMatrix sample_limit(std::span<const double> y0, double t, const MutationModel& model, Rng& rng,
                                 Direction direction = Direction::Backward);

// Event times of each (i, j) component up to `horizon`, row-major, each list
// increasing. Times come from analytic inversion of Lambda_ij applied to the
// arrival times of a unit-rate Poisson process.
std::vector<std::vector<double>> sample_limit_path(std::span<const double> y0, double horizon,
                                                   const MutationModel& model, Rng& rng,
                                                   Direction direction = Direction::Backward);

// Time at which Lambda_ij(., y) reaches `u` (inverse of the cumulative intensity).
double invert_cumulative_intensity(std::span<const double> y, std::size_t i, std::size_t j, double u,
                                   const MutationModel& model, Direction direction = Direction::Backward);

struct SemigroupValue {
    double value = 0.0;
    // Only w with |w| < truncation_order enter the sum.
    std::int64_t truncation_order = 0;
    // P(Po(Lambda) >= truncation_order); the neglected mass is at most tail_bound * sup|f|.
    double tail_bound = 0.0;
    std::size_t terms = 0;
};

// P(Po(lambda) >= k).
double poisson_tail(double lambda, std::int64_t k);

// T(t) f(y, m) for the limit semigroup. Terms where f vanishes identically
// (m + w beyond the test function's m support) are skipped; the remaining
// sum is cut where the Poisson tail of the total count drops below
// tolerance / sup|f|.
SemigroupValue limit_semigroup_apply(const TestFunction& f, const Position& y, const MutationCountMatrix& m, double t,
                                     const MutationModel& model, double tolerance = 1e-12,
                                     std::size_t term_budget = 50'000'000);

}  // namespace coalim
