#pragma once

#include "coalim/chain.hpp"
#include "coalim/limit.hpp"
#include "coalim/model.hpp"
#include "coalim/position.hpp"
#include "coalim/test_function.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace coalim {

// A^(n) f(y, m) = n (T^(n) - I) f at y = config / n.
double discrete_generator_apply(const TestFunction& f, const TypeConfiguration& config, const MutationCountMatrix& m,
                                std::int64_t n, const MutationModel& model);

// A f(y, m) = -<grad_y f, y/|y|> + sum_ij [f(y, m + e_ij) - f(y, m)] lambda_ij(y); zero at infinity.
double limit_generator_apply(const TestFunction& f, const Position& y, const MutationCountMatrix& m,
                             const MutationModel& model);

struct GapReport {
    std::vector<std::int64_t> n_values;
    std::vector<double> gaps;
    double slope = 0.0;
};

// Least-squares slope of log(gap) against log(n).
double log_log_slope(std::span<const std::int64_t> n_values, std::span<const double> gaps);

// sup |A^(n) f - A f| over every grid point (config/n, m) of E^(n). Outside
// the support of f enlarged by 2/n in y and by one in each m_ij both
// generators vanish, so the maximum runs over that finite set.
double generator_gap(const TestFunction& f, std::int64_t n, const MutationModel& model, unsigned threads = 1,
                     std::size_t point_budget = 2'000'000'000);

GapReport generator_gap_sweep(const TestFunction& f, std::span<const std::int64_t> n_values,
                              const MutationModel& model, unsigned threads = 1);

// (T^(n))^{floor(tn)} f at (initial/n, 0) by exact propagation of the chain's
// law. States whose mutation counts reach the test function's m_cap are
// dropped since f vanishes there from then on.
double discrete_semigroup_apply(const TestFunction& f, const TypeConfiguration& initial, std::int64_t n, double t,
                                const MutationModel& model, std::size_t state_budget = 5'000'000);

}  // namespace coalim
