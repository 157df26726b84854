#include "coalim/measure.hpp"

#include "coalim/limit.hpp"
#include "coalim/parallel.hpp"

#include <cmath>
#include <limits>
#include <memory>

namespace coalim {

double log_mutation_weight(const MutationCountMatrix& m, const MutationModel& target, std::span<const double> q) {
    const std::size_t d = target.dimension();
    if (m.dimension() != d || q.size() != d) throw InvalidArgument("dimension mismatch in mutation weight");
    double lw = 0.0;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const auto k = m(i, j);
            if (k == 0) continue;
            if (!(q[j] > 0.0)) throw InvalidArgument("invalid support: mutation into a type with Q_j = 0");
            if (!(target(i, j) > 0.0)) return -std::numeric_limits<double>::infinity();
            lw += static_cast<double>(k) * std::log(target(i, j) / q[j]);
        }
    return lw;
}

double mutation_weight(const MutationCountMatrix& m, const MutationModel& target, std::span<const double> q) {
    return std::exp(log_mutation_weight(m, target, q));
}

MrcaOracle::MrcaOracle(const MutationModel& model) : pi_(stationary_distribution(model)) {}

double MrcaOracle::log_probability(const TypeConfiguration& config) const {
    if (config.dimension() != pi_.size()) throw InvalidArgument("configuration dimension does not match model");
    if (config.size() != 1) throw OracleMissing("sampling probability of a general-P model is only known at a single lineage");
    for (std::size_t j = 0; j < pi_.size(); ++j)
        if (config[j] == 1) return std::log(pi_[j]);
    throw InvalidArgument("malformed single-lineage configuration");
}

double sampling_ratio(const TypeConfiguration& config, const TypeConfiguration& initial,
                      const SamplingProbabilityOracle* oracle_p, const SamplingProbabilityOracle& oracle_q) {
    if (config == initial) return 1.0;
    if (oracle_p == nullptr)
        throw OracleMissing("no sampling-probability oracle for the target model; use the asymptotic r-mode");
    const double lr = oracle_p->log_probability(config) - oracle_q.log_probability(config) +
                      oracle_q.log_probability(initial) - oracle_p->log_probability(initial);
    return std::exp(lr);
}

double history_likelihood_ratio(const ScaledPath& path, Direction direction,
                                const SamplingProbabilityOracle* oracle_p, const SamplingProbabilityOracle& oracle_q,
                                const MutationModel& target, std::span<const double> q) {
    auto [end, m] = path.state_at_step(path.steps());
    const double c = mutation_weight(m, target, q);
    if (c == 0.0) return 0.0;
    if (direction == Direction::Forward) {
        if (oracle_p == nullptr) throw OracleMissing("no sampling-probability oracle for the target model");
        return std::exp(oracle_p->log_probability(end) - oracle_q.log_probability(end)) * c;
    }
    return sampling_ratio(end, path.initial, oracle_p, oracle_q) * c;
}

std::vector<WeightedSample> weighted_samples(const ImportanceSpec& spec, const MutationModel& target,
                                             const MutationModel& proposal,
                                             const SamplingProbabilityOracle* oracle_p) {
    if (!proposal.is_pim()) throw InvalidArgument("proposal must be parent independent");
    if (target.dimension() != proposal.dimension()) throw InvalidArgument("target and proposal dimensions differ");
    if (target.theta() != proposal.theta()) throw InvalidArgument("target and proposal must share theta");
    for (double v : proposal.q())
        if (!(v > 0.0)) throw InvalidArgument("proposal Q must be strictly positive");
    if (!(spec.t > 0.0)) throw InvalidArgument("time must be positive");

    std::unique_ptr<PimSamplingOracle> own_p;
    if (spec.r_mode == RMode::Exact && oracle_p == nullptr) {
        if (!target.is_pim())
            throw OracleMissing("exact r-mode needs a sampling-probability oracle for a parent-dependent target");
        own_p = std::make_unique<PimSamplingOracle>(target);
        oracle_p = own_p.get();
    }
    const PimSamplingOracle oracle_q(proposal);
    const auto q = proposal.q();
    const std::size_t steps = scaled_steps(spec.scale, spec.t);

    std::vector<WeightedSample> out(spec.num_paths);
    parallel_for(spec.num_paths, spec.threads, [&](std::size_t k) {
        Rng rng = Rng::for_stream(spec.seed, spec.stream_offset + k);
        const auto path = simulate_backward(spec.initial, proposal, spec.scale, rng, steps);
        auto [config, m] = path.state_at_step(steps);
        WeightedSample& s = out[k];
        s.c_value = mutation_weight(m, target, q);
        s.r_value = spec.r_mode == RMode::Exact ? sampling_ratio(config, spec.initial, oracle_p, oracle_q) : 1.0;
        s.config = std::move(config);
        s.m = std::move(m);
    });
    return out;
}

Estimate mean_and_error(std::span<const double> values) {
    Estimate e;
    e.count = values.size();
    if (values.empty()) return e;
    double sum = 0.0;
    for (double v : values) sum += v;
    e.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - e.mean) * (v - e.mean);
        e.standard_error = std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()));
    }
    return e;
}

Estimate importance_expectation(const PathFunctional& g, const ImportanceSpec& spec, const MutationModel& target,
                                const MutationModel& proposal, const SamplingProbabilityOracle* oracle_p) {
    const auto samples = weighted_samples(spec, target, proposal, oracle_p);
    std::vector<double> values(samples.size());
    for (std::size_t k = 0; k < samples.size(); ++k) values[k] = g(samples[k]) * samples[k].weight();
    return mean_and_error(values);
}

double enumerate_unit_expectation(const TypeConfiguration& initial, std::size_t steps, double theta,
                                  std::span<const double> q_target, std::span<const double> q_proposal,
                                  std::size_t node_budget) {
    const auto proposal = MutationModel::pim(theta, std::vector<double>(q_proposal.begin(), q_proposal.end()));
    const auto target = MutationModel::pim(theta, std::vector<double>(q_target.begin(), q_target.end()));
    const PimSamplingOracle oracle_p(target);
    const PimSamplingOracle oracle_q(proposal);
    if (initial.size() < 1) throw InvalidArgument("initial configuration must hold at least one lineage");
    const double log_q0 = oracle_q.log_probability(initial) - oracle_p.log_probability(initial);

    std::size_t nodes = 0;
    double total = 0.0;
    TypeConfiguration c = initial;
    MutationCountMatrix m(initial.dimension());
    auto visit = [&](auto&& self, std::size_t depth, double prob) -> void {
        if (++nodes > node_budget) throw BudgetExceeded("history enumeration exceeds the node budget");
        if (depth == steps || c.size() == 1) {
            const double lr = oracle_p.log_probability(c) - oracle_q.log_probability(c) + log_q0;
            total += prob * std::exp(lr) * mutation_weight(m, target, q_proposal);
            return;
        }
        for (const auto& e : backward_event_distribution(c, proposal)) {
            const TypeConfiguration saved_c = c;
            const MutationCountMatrix saved_m = m;
            apply_event(e, Direction::Backward, c, m);
            self(self, depth + 1, prob * e.probability);
            c = saved_c;
            m = saved_m;
        }
    };
    visit(visit, 0, 1.0);
    return total;
}

double analytic_unit_expectation(std::span<const double> y0, double t, const MutationModel& target,
                                 std::span<const double> q) {
    const std::size_t d = target.dimension();
    if (q.size() != d) throw InvalidArgument("dimension mismatch");
    const auto proposal = MutationModel(target.theta(), d, [&] {
        std::vector<double> flat;
        for (std::size_t i = 0; i < d; ++i) flat.insert(flat.end(), q.begin(), q.end());
        return flat;
    }());
    const auto lam = cumulative_intensity(y0, t, proposal, Direction::Backward);
    double log_prod = 0.0;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            if (!(q[j] > 0.0)) {
                if (target(i, j) > 0.0) throw InvalidArgument("invalid support: P_ij > 0 with Q_j = 0");
                continue;
            }
            log_prod += lam(i, j) * (target(i, j) / q[j] - 1.0);
        }
    return std::exp(log_prod);
}

}  // namespace coalim
