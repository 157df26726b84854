#pragma once

#include "coalim/model.hpp"
#include "coalim/rng.hpp"

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

namespace coalim {

enum class EventKind : std::uint8_t { Coalescence, Mutation, Growth };

// One jump of the typed chain. Coalescence and Growth use `to` as the type j;
// Mutation(i, j) records a mutation from type i (`from`) to type j (`to`).
struct Event {
    EventKind kind = EventKind::Coalescence;
    std::uint32_t from = 0;
    std::uint32_t to = 0;
    double probability = 0.0;

    static Event coalescence(std::size_t j, double p = 0.0) {
        return {EventKind::Coalescence, static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(j), p};
    }
    static Event growth(std::size_t j, double p = 0.0) {
        return {EventKind::Growth, static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(j), p};
    }
    static Event mutation(std::size_t i, std::size_t j, double p = 0.0) {
        return {EventKind::Mutation, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), p};
    }
};

using BackwardEvent = Event;

enum class Direction : std::uint8_t { Backward, Forward };

// Apply a single jump in count space. Backward mutation i->j turns a type-j
// lineage into type i; forward mutation i->j turns a type-i individual into j.
void apply_event(const Event& e, Direction dir, TypeConfiguration& config, MutationCountMatrix& m);

// One realization of (Y^(n), M^(n)). Only events are stored; states are
// rebuilt on demand.
struct ScaledPath {
    std::int64_t scale = 1;
    Direction direction = Direction::Backward;
    TypeConfiguration initial;
    std::vector<Event> events;
    // True when a backward path ended at a single lineage. tau() is then the
    // number of events.
    bool absorbed = false;

    std::size_t tau() const;
    std::size_t steps() const { return events.size(); }

    // Configuration and mutation counts after `step` jumps, frozen after the
    // last stored event for absorbed paths.
    std::pair<TypeConfiguration, MutationCountMatrix> state_at_step(std::size_t step) const;
    MutationCountMatrix final_mutations() const;
};

// floor(n t) guarded against representation error in n*t.
std::size_t scaled_steps(std::int64_t n, double t);

// Backward transition probabilities of the PIM chain from `config`. They
// depend on y = config/n only through the counts, so no scale is needed.
double coalescence_probability(const TypeConfiguration& config, const MutationModel& model, std::size_t j);
double mutation_probability(const TypeConfiguration& config, const MutationModel& model, std::size_t i,
                            std::size_t j);

// All d + d^2 backward probabilities in the documented order (coalescence j
// at index j, mutation i -> j at d + i*d + j), zeros included.
void backward_probability_table(const TypeConfiguration& config, const MutationModel& model, std::vector<double>& out);

// Every event of positive probability, coalescences by j first, then
// mutations in lexicographic (i, j) order.
std::vector<BackwardEvent> backward_event_distribution(const TypeConfiguration& config, const MutationModel& model);

// Sample until a single lineage remains, or until `max_steps` jumps.
ScaledPath simulate_backward(const TypeConfiguration& initial, const MutationModel& model, std::int64_t scale, Rng& rng,
                             std::size_t max_steps = std::numeric_limits<std::size_t>::max());

struct ScaledState {
    std::vector<double> y;
    MutationCountMatrix m;
};

// State at step floor(n t) ^ tau; Y is reported as configuration / n.
ScaledState scaled_state_at(const ScaledPath& path, double t);

}  // namespace coalim
