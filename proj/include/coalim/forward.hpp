#pragma once

#include "coalim/chain.hpp"
#include "coalim/limit.hpp"
#include "coalim/model.hpp"
#include "coalim/rng.hpp"

#include <cstdint>

namespace coalim {

// Forward-in-time chain for `steps` jumps. The initial configuration needs
// size >= 2 and every scaled component counts_j / n >= min_fraction (and at
// least one individual of each type).
ScaledPath simulate_forward(const TypeConfiguration& initial, const MutationModel& model, std::int64_t scale,
                            std::size_t steps, Rng& rng, double min_fraction = 0.0);

}  // namespace coalim
