#pragma once

#include <cstdint>
#include <span>

namespace coalim::detail {

// Backward PIM probabilities from raw counts, written to out[0 .. d + d^2):
// coalescence of j at j, mutation i -> j at d + i*d + j. No validation.
inline void pim_backward_rates(std::span<const std::int64_t> counts, double theta, std::span<const double> q,
                               double* out) {
    const std::size_t d = counts.size();
    std::int64_t size = 0;
    for (auto c : counts) size += c;
    const double s = static_cast<double>(size);
    const double common = theta / (s * (s - 1.0 + theta));
    for (std::size_t j = 0; j < d; ++j) {
        const double cj = static_cast<double>(counts[j]);
        out[j] = counts[j] < 2 ? 0.0 : cj * (cj - 1.0) / (s * (cj - 1.0 + theta * q[j]));
        const double into_j = counts[j] == 0 ? 0.0 : common * q[j] * cj / (cj - 1.0 + theta * q[j]);
        for (std::size_t i = 0; i < d; ++i) {
            const double ci = static_cast<double>(counts[i]) - (i == j ? 1.0 : 0.0);
            out[d + i * d + j] = into_j * (ci + theta * q[i]);
        }
    }
}

}  // namespace coalim::detail
