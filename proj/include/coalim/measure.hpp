#pragma once

#include "coalim/chain.hpp"
#include "coalim/model.hpp"
#include "coalim/sampling.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace coalim {

// c(m) = prod_ij (P_ij / Q_j)^{m_ij}. Zero when some m_ij > 0 has P_ij = 0;
// InvalidArgument when some m_ij > 0 has Q_j = 0.
double log_mutation_weight(const MutationCountMatrix& m, const MutationModel& target, std::span<const double> q);
double mutation_weight(const MutationCountMatrix& m, const MutationModel& target, std::span<const double> q);

// Sampling probabilities at single-lineage configurations from the invariant
// distribution of P. Any larger configuration raises OracleMissing.
class MrcaOracle final : public SamplingProbabilityOracle {
  public:
    explicit MrcaOracle(const MutationModel& model);
    double log_probability(const TypeConfiguration& config) const override;
    std::string id() const override { return "mrca-stationary"; }

  private:
    std::vector<double> pi_;
};

// r_n = [p_P(config) / p_Q(config)] * [p_Q(initial) / p_P(initial)].
// A null target oracle raises OracleMissing.
double sampling_ratio(const TypeConfiguration& config, const TypeConfiguration& initial,
                      const SamplingProbabilityOracle* oracle_p, const SamplingProbabilityOracle& oracle_q);

// Likelihood ratio of a backward path under P against Q, through its endpoint
// H(K) and its mutation counts only.
//   Forward:  p_P(H(K)) / p_Q(H(K)) * c(m)
//   Backward: r_n(H(K), H(0)) * c(m)
double history_likelihood_ratio(const ScaledPath& path, Direction direction,
                                const SamplingProbabilityOracle* oracle_p, const SamplingProbabilityOracle& oracle_q,
                                const MutationModel& target, std::span<const double> q);

enum class RMode : std::uint8_t { Exact, Asymptotic };

struct WeightedSample {
    TypeConfiguration config;   // H(floor(nt) ^ tau)
    MutationCountMatrix m;      // mutation counts at the same step
    double c_value = 1.0;
    double r_value = 1.0;
    double weight() const { return c_value * r_value; }
};

struct ImportanceSpec {
    TypeConfiguration initial;
    std::int64_t scale = 1;
    double t = 0.0;
    std::size_t num_paths = 0;
    std::uint64_t seed = 0;
    std::uint64_t stream_offset = 0;
    RMode r_mode = RMode::Exact;
    unsigned threads = 1;
};

// Simulates num_paths PIM(Q) paths to step floor(nt) and weights each by
// c(M(t)) r_n(Y(t), y0). Path k uses stream stream_offset + k. In exact mode
// the target must be PIM unless `oracle_p` is supplied.
std::vector<WeightedSample> weighted_samples(const ImportanceSpec& spec, const MutationModel& target,
                                             const MutationModel& proposal,
                                             const SamplingProbabilityOracle* oracle_p = nullptr);

struct Estimate {
    double mean = 0.0;
    double standard_error = 0.0;
    std::size_t count = 0;
};

// Plain mean and standard error (no self-normalization).
Estimate mean_and_error(std::span<const double> values);

using PathFunctional = std::function<double(const WeightedSample&)>;

// Mean of g(Q-path) r_n c(m) over the weighted samples.
Estimate importance_expectation(const PathFunctional& g, const ImportanceSpec& spec, const MutationModel& target,
                                const MutationModel& proposal, const SamplingProbabilityOracle* oracle_p = nullptr);

// Exact E[C R] over all K-step backward histories of the PIM(q_proposal)
// chain, with target PIM(q_target). Raises BudgetExceeded past node_budget.
double enumerate_unit_expectation(const TypeConfiguration& initial, std::size_t steps, double theta,
                                  std::span<const double> q_target, std::span<const double> q_proposal,
                                  std::size_t node_budget = 10'000'000);

// prod_ij exp(Lambda_Q,ij(t, y0) (P_ij/Q_j - 1)) for the limit process; equals 1.
double analytic_unit_expectation(std::span<const double> y0, double t, const MutationModel& target,
                                 std::span<const double> q);

}  // namespace coalim
