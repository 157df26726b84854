#pragma once

#include <cstddef>
#include <vector>

namespace coalim::detail {

// Inverse CDF over a fixed-order table. Falls back to the last positive entry
// if rounding leaves u above the running sum.
inline std::size_t pick(const std::vector<double>& table, double u) {
    double acc = 0.0;
    std::size_t last = table.size();
    for (std::size_t k = 0; k < table.size(); ++k) {
        if (table[k] <= 0.0) continue;
        acc += table[k];
        last = k;
        if (u < acc) return k;
    }
    return last;
}

}  // namespace coalim::detail
