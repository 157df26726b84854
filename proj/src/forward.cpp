#include "coalim/forward.hpp"

#include "coalim/sampling.hpp"
#include "inverse_cdf.hpp"

namespace coalim {

ScaledPath simulate_forward(const TypeConfiguration& initial, const MutationModel& model, std::int64_t scale,
                            std::size_t steps, Rng& rng, double min_fraction) {
    if (scale < 1) throw InvalidArgument("scale must be at least 1");
    if (initial.dimension() != model.dimension()) throw InvalidArgument("configuration dimension does not match model");
    if (initial.size() < 2) throw DomainError("forward chain needs at least two individuals to start");
    for (std::size_t j = 0; j < initial.dimension(); ++j) {
        if (initial[j] < 1) throw DomainError("forward chain needs every type present initially");
        if (static_cast<double>(initial[j]) / static_cast<double>(scale) < min_fraction)
            throw DomainError("initial scaled component below the required minimum fraction");
    }

    ScaledPath path;
    path.scale = scale;
    path.direction = Direction::Forward;
    path.initial = initial;
    path.events.reserve(steps);
    TypeConfiguration c = initial;
    MutationCountMatrix m(initial.dimension());
    const std::size_t d = model.dimension();
    std::vector<double> table;
    for (std::size_t k = 0; k < steps; ++k) {
        forward_event_table(c, model, table);
        const std::size_t idx = detail::pick(table, rng.uniform());
        const Event e = idx < d ? Event::growth(idx, table[idx]) : Event::mutation((idx - d) / d, (idx - d) % d, table[idx]);
        apply_event(e, Direction::Forward, c, m);
        path.events.push_back(e);
    }
    return path;
}

}  // namespace coalim
