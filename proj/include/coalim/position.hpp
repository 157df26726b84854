#pragma once

#include <span>
#include <vector>

namespace coalim {

// A point of the orthant with an explicit marker for the isolated point at
// infinity. Coordinates never hold floating-point infinities.
class Position {
  public:
    Position() = default;
    Position(std::vector<double> y) : y_(std::move(y)) {}  // NOLINT: implicit from coordinates
    static Position infinity() {
        Position p;
        p.at_infinity_ = true;
        return p;
    }

    bool is_infinity() const { return at_infinity_; }
    std::span<const double> coords() const { return y_; }
    std::size_t dimension() const { return y_.size(); }

  private:
    std::vector<double> y_;
    bool at_infinity_ = false;
};

}  // namespace coalim
