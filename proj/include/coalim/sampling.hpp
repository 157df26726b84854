#pragma once

#include "coalim/chain.hpp"
#include "coalim/model.hpp"

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace coalim {

// Log of the PIM sampling probability (Dirichlet-multinomial mass):
//   (s!/prod n_j!) Gamma(theta)/Gamma(theta+s) prod_j Gamma(theta Q_j + n_j)/Gamma(theta Q_j).
// Returns -infinity when a type with Q_j = 0 has a positive count.
double log_pim_sampling_probability(const TypeConfiguration& config, double theta, std::span<const double> q);
double pim_sampling_probability(const TypeConfiguration& config, double theta, std::span<const double> q);

// Dirichlet(theta Q) density on the simplex, w.r.t. Lebesgue measure on the
// first d-1 coordinates. `x` must be strictly positive and sum to 1.
double dirichlet_density(std::span<const double> x, double theta, std::span<const double> q);

// p~_Q(y/|y|) |y|^{1-d} n^{1-d}.
double pim_asymptotic_approx(std::span<const double> y, std::int64_t n, double theta, std::span<const double> q);

// Maps configurations to sampling probabilities for one mutation model.
class SamplingProbabilityOracle {
  public:
    virtual ~SamplingProbabilityOracle() = default;
    virtual double log_probability(const TypeConfiguration& config) const = 0;
    virtual std::string id() const = 0;

    double probability(const TypeConfiguration& config) const;
};

class PimSamplingOracle final : public SamplingProbabilityOracle {
  public:
    PimSamplingOracle(double theta, std::vector<double> q);
    explicit PimSamplingOracle(const MutationModel& model);

    double log_probability(const TypeConfiguration& config) const override;
    std::string id() const override;

  private:
    double theta_;
    std::vector<double> q_;
};

// Forward kernel from `config` (size >= 2): growth of type j with probability
// (n_j/s)(s-1)/(s-1+theta), mutation i -> j with probability (n_i/s) theta P_ij/(s-1+theta).
// Growth events first by j, then mutations in (i, j) order; zero entries are dropped.
std::vector<Event> forward_event_distribution(const TypeConfiguration& config, const MutationModel& model);

// Full d + d^2 table in the same order, zeros included.
void forward_event_table(const TypeConfiguration& config, const MutationModel& model, std::vector<double>& out);

}  // namespace coalim
