#include "coalim/chain.hpp"

#include "inverse_cdf.hpp"
#include "pim_kernel.hpp"

#include <algorithm>
#include <cmath>

namespace coalim {

void apply_event(const Event& e, Direction dir, TypeConfiguration& config, MutationCountMatrix& m) {
    switch (e.kind) {
        case EventKind::Coalescence:
            --config.counts[e.to];
            break;
        case EventKind::Growth:
            ++config.counts[e.to];
            break;
        case EventKind::Mutation:
            if (dir == Direction::Backward) {
                --config.counts[e.to];
                ++config.counts[e.from];
            } else {
                --config.counts[e.from];
                ++config.counts[e.to];
            }
            ++m(e.from, e.to);
            break;
    }
}

std::size_t ScaledPath::tau() const {
    if (!absorbed) throw DomainError("path was truncated before reaching a single lineage");
    return events.size();
}

std::pair<TypeConfiguration, MutationCountMatrix> ScaledPath::state_at_step(std::size_t step) const {
    if (step > events.size() && !absorbed && direction == Direction::Backward)
        throw DomainError("requested step lies beyond the simulated part of the path");
    if (step > events.size() && direction == Direction::Forward)
        throw DomainError("requested step lies beyond the simulated part of the path");
    TypeConfiguration c = initial;
    MutationCountMatrix m(initial.dimension());
    const std::size_t k = std::min(step, events.size());
    for (std::size_t s = 0; s < k; ++s) apply_event(events[s], direction, c, m);
    return {std::move(c), std::move(m)};
}

MutationCountMatrix ScaledPath::final_mutations() const { return state_at_step(events.size()).second; }

std::size_t scaled_steps(std::int64_t n, double t) {
    if (!(t >= 0.0)) throw InvalidArgument("time must be nonnegative");
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * t + 1e-9));
}

namespace {

void check_backward_state(const TypeConfiguration& config, const MutationModel& model) {
    if (!model.is_pim()) throw InvalidArgument("backward transition probabilities need a parent-independent model");
    if (config.dimension() != model.dimension()) throw InvalidArgument("configuration dimension does not match model");
    if (config.size() < 2) throw DomainError("chain is absorbed: configuration size below 2");
    const auto q = model.q();
    for (std::size_t j = 0; j < config.dimension(); ++j) {
        if (config[j] < 0) throw InvalidArgument("negative type count");
        if (config[j] > 0 && q[j] <= 0.0)
            throw DomainError("configuration has probability zero under Q (positive count of a type with Q_j = 0)");
    }
}

// Fills `out` with the d + d^2 probabilities in the documented order.
void fill_backward_table(const TypeConfiguration& config, const MutationModel& model, std::vector<double>& out) {
    const std::size_t d = model.dimension();
    out.resize(d + d * d);
    detail::pim_backward_rates(config.counts, model.theta(), model.q(), out.data());
}

}  // namespace

void backward_probability_table(const TypeConfiguration& config, const MutationModel& model, std::vector<double>& out) {
    check_backward_state(config, model);
    fill_backward_table(config, model, out);
}

double coalescence_probability(const TypeConfiguration& config, const MutationModel& model, std::size_t j) {
    check_backward_state(config, model);
    if (j >= model.dimension()) throw InvalidArgument("type index out of range");
    const double s = static_cast<double>(config.size());
    const double cj = static_cast<double>(config[j]);
    if (config[j] < 2) return 0.0;
    return cj * (cj - 1.0) / (s * (cj - 1.0 + model.theta() * model.q()[j]));
}

double mutation_probability(const TypeConfiguration& config, const MutationModel& model, std::size_t i,
                            std::size_t j) {
    check_backward_state(config, model);
    const std::size_t d = model.dimension();
    if (i >= d || j >= d) throw InvalidArgument("type index out of range");
    if (config[j] == 0) return 0.0;
    const auto q = model.q();
    const double theta = model.theta();
    const double s = static_cast<double>(config.size());
    const double cj = static_cast<double>(config[j]);
    const double ci = static_cast<double>(config[i]) - (i == j ? 1.0 : 0.0);
    return theta * q[j] * cj * (ci + theta * q[i]) / (s * (s - 1.0 + theta) * (cj - 1.0 + theta * q[j]));
}

std::vector<BackwardEvent> backward_event_distribution(const TypeConfiguration& config, const MutationModel& model) {
    check_backward_state(config, model);
    std::vector<double> table;
    fill_backward_table(config, model, table);
    const std::size_t d = model.dimension();
    std::vector<BackwardEvent> events;
    for (std::size_t j = 0; j < d; ++j)
        if (table[j] > 0.0) events.push_back(Event::coalescence(j, table[j]));
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            if (table[d + i * d + j] > 0.0) events.push_back(Event::mutation(i, j, table[d + i * d + j]));
    return events;
}


ScaledPath simulate_backward(const TypeConfiguration& initial, const MutationModel& model, std::int64_t scale, Rng& rng,
                             std::size_t max_steps) {
    if (scale < 1) throw InvalidArgument("scale must be at least 1");
    if (initial.dimension() != model.dimension()) throw InvalidArgument("configuration dimension does not match model");
    if (initial.size() < 1) throw InvalidArgument("initial configuration must hold at least one lineage");
    if (!model.is_pim()) throw InvalidArgument("backward simulation needs a parent-independent model");

    ScaledPath path;
    path.scale = scale;
    path.direction = Direction::Backward;
    path.initial = initial;
    TypeConfiguration c = initial;
    MutationCountMatrix m(initial.dimension());
    const std::size_t d = model.dimension();
    std::vector<double> table;
    while (c.size() > 1 && path.events.size() < max_steps) {
        check_backward_state(c, model);
        fill_backward_table(c, model, table);
        const std::size_t k = detail::pick(table, rng.uniform());
        const Event e = k < d ? Event::coalescence(k, table[k]) : Event::mutation((k - d) / d, (k - d) % d, table[k]);
        apply_event(e, Direction::Backward, c, m);
        path.events.push_back(e);
    }
    path.absorbed = c.size() == 1;
    return path;
}

ScaledState scaled_state_at(const ScaledPath& path, double t) {
    const std::size_t k = scaled_steps(path.scale, t);
    auto [c, m] = path.state_at_step(k);
    return {c.scaled(path.scale), std::move(m)};
}

}  // namespace coalim
