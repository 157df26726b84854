#include "coalim/limit.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace coalim {

namespace {

double checked_norm(std::span<const double> y) {
    for (double v : y)
        if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("position must have finite nonnegative components");
    const double s = sum_norm(y);
    if (!(s > 0.0)) throw DomainError("position is the origin");
    return s;
}

}  // namespace

std::vector<double> deterministic_position(std::span<const double> y0, double t) {
    const double r = checked_norm(y0);
    if (!(t >= 0.0)) throw InvalidArgument("time must be nonnegative");
    const double step = std::min(t, r);
    std::vector<double> y(y0.begin(), y0.end());
    if (step >= r) {
        std::fill(y.begin(), y.end(), 0.0);
        return y;
    }
    for (auto& v : y) v -= v / r * step;
    return y;
}

std::vector<double> forward_limit_position(std::span<const double> y0, double t) {
    for (double v : y0)
        if (!(v > 0.0)) throw DomainError("forward limit needs every component of y0 positive");
    if (!(t >= 0.0)) throw InvalidArgument("time must be nonnegative");
    const double r = sum_norm(y0);
    std::vector<double> y(y0.begin(), y0.end());
    for (auto& v : y) v += v / r * t;
    return y;
}

std::vector<double> jump_intensity(const Position& y, const MutationModel& model) {
    const std::size_t d = model.dimension();
    std::vector<double> lambda(d * d, 0.0);
    if (y.is_infinity()) return lambda;
    if (y.dimension() != d) throw InvalidArgument("position dimension does not match model");
    const double r = checked_norm(y.coords());
    const double scale = model.theta() / (r * r);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) lambda[i * d + j] = scale * model(i, j) * y.coords()[i];
    return lambda;
}

CumulativeIntensity cumulative_intensity(std::span<const double> y, double t, const MutationModel& model,
                                         Direction direction) {
    const std::size_t d = model.dimension();
    if (y.size() != d) throw InvalidArgument("position dimension does not match model");
    const double r = checked_norm(y);
    if (!(t >= 0.0)) throw InvalidArgument("time must be nonnegative");
    double log_factor = 0.0;
    if (direction == Direction::Backward) {
        if (t >= r) throw DomainError("backward horizon must lie before the limit reaches the origin (t < |y|)");
        log_factor = -std::log1p(-t / r);
    } else {
        log_factor = std::log1p(t / r);
    }
    CumulativeIntensity out;
    out.dimension = d;
    out.matrix.assign(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double v = model.theta() * model(i, j) * y[i] / r * log_factor;
            out.matrix[i * d + j] = v;
            out.total += v;
        }
    return out;
}

double mutation_count_pmf(std::span<const double> y, double t, const MutationModel& model,
                          const MutationCountMatrix& w, Direction direction) {
    const auto lam = cumulative_intensity(y, t, model, direction);
    if (w.dimension() != model.dimension()) throw InvalidArgument("count matrix dimension does not match model");
    double log_p = -lam.total;
    for (std::size_t k = 0; k < lam.matrix.size(); ++k) {
        const auto wk = w.entries()[k];
        if (wk == 0) continue;
        if (lam.matrix[k] <= 0.0) return 0.0;
        log_p += static_cast<double>(wk) * std::log(lam.matrix[k]) - std::lgamma(static_cast<double>(wk) + 1.0);
    }
    return std::exp(log_p);
}

MutationCountMatrix sample_limit(std::span<const double> y0, double t, const MutationModel& model, Rng& rng,
                                 Direction direction) {
    const auto lam = cumulative_intensity(y0, t, model, direction);
    const std::size_t d = model.dimension();
    MutationCountMatrix m(d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double mean = lam(i, j);
            if (mean > 0.0) m(i, j) = std::poisson_distribution<std::int64_t>(mean)(rng);
        }
    return m;
}

double invert_cumulative_intensity(std::span<const double> y, std::size_t i, std::size_t j, double u,
                                   const MutationModel& model, Direction direction) {
    const double r = checked_norm(y);
    const double rate = model.theta() * model(i, j) * y[i] / r;
    if (!(rate > 0.0)) throw DomainError("component has zero intensity");
    if (direction == Direction::Backward) return -r * std::expm1(-u / rate);
    return r * std::expm1(u / rate);
}

std::vector<std::vector<double>> sample_limit_path(std::span<const double> y0, double horizon,
                                                   const MutationModel& model, Rng& rng, Direction direction) {
    const std::size_t d = model.dimension();
    if (y0.size() != d) throw InvalidArgument("position dimension does not match model");
    const double r = checked_norm(y0);
    if (!(horizon >= 0.0)) throw InvalidArgument("horizon must be nonnegative");
    if (direction == Direction::Backward && horizon >= r)
        throw DomainError("backward horizon must lie before the limit reaches the origin (t < |y|)");
    std::vector<std::vector<double>> times(d * d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            if (!(model(i, j) * y0[i] > 0.0)) continue;
            double u = 0.0;
            for (;;) {
                u += rng.exponential();
                const double s = invert_cumulative_intensity(y0, i, j, u, model, direction);
                if (s > horizon) break;
                times[i * d + j].push_back(s);
            }
        }
    return times;
}

double poisson_tail(double lambda, std::int64_t k) {
    if (k <= 0) return 1.0;
    if (lambda <= 0.0) return 0.0;
    return boost::math::gamma_p(static_cast<double>(k), lambda);
}

SemigroupValue limit_semigroup_apply(const TestFunction& f, const Position& y, const MutationCountMatrix& m, double t,
                                     const MutationModel& model, double tolerance, std::size_t term_budget) {
    if (!(tolerance > 0.0)) throw InvalidArgument("tolerance must be positive");
    if (!(t >= 0.0)) throw InvalidArgument("time must be nonnegative");
    SemigroupValue out;
    if (y.is_infinity()) {
        out.value = f(y, m);
        return out;
    }
    const double r = checked_norm(y.coords());
    if (t >= r) return out;
    if (t == 0.0) {
        out.value = f(y, m);
        out.terms = 1;
        out.truncation_order = 1;
        return out;
    }

    const auto lam = cumulative_intensity(y.coords(), t, model, Direction::Backward);
    const double sup = f.sup_abs();
    std::int64_t order = 0;
    if (sup > 0.0) {
        while (poisson_tail(lam.total, order) * sup >= tolerance) ++order;
    }
    out.truncation_order = order;
    out.tail_bound = poisson_tail(lam.total, order);
    if (order == 0) return out;

    const auto yt = deterministic_position(y.coords(), t);
    const double y_part = f.y_factor(yt);
    const std::size_t cells = lam.matrix.size();
    std::vector<double> log_lam(cells);
    for (std::size_t k = 0; k < cells; ++k) log_lam[k] = lam.matrix[k] > 0.0 ? std::log(lam.matrix[k]) : 0.0;

    // Largest increment per cell that keeps f possibly nonzero.
    std::vector<std::int64_t> room(cells);
    for (std::size_t k = 0; k < cells; ++k) {
        room[k] = std::max<std::int64_t>(-1, f.m_cap() - 1 - m.entries()[k]);
        if (lam.matrix[k] <= 0.0) room[k] = std::min<std::int64_t>(room[k], 0);
    }
    if (std::any_of(room.begin(), room.end(), [](auto v) { return v < 0; })) return out;

    const std::size_t d = model.dimension();
    MutationCountMatrix shifted = m;
    double sum = 0.0;
    std::size_t terms = 0;
    // Depth-first over cells, tracking the running log weight and |w|.
    auto recurse = [&](auto&& self, std::size_t cell, std::int64_t used, double log_w) -> void {
        if (cell == cells) {
            if (++terms > term_budget) throw BudgetExceeded("semigroup truncation exceeds the term budget");
            const double fv = f.amplitude() * y_part * f.m_factor(shifted);
            if (fv != 0.0) sum += fv * std::exp(log_w - lam.total);
            return;
        }
        const std::size_t i = cell / d, j = cell % d;
        const std::int64_t base = shifted(i, j);
        for (std::int64_t w = 0; w <= room[cell] && used + w < order; ++w) {
            shifted(i, j) = base + w;
            const double lw = log_w + static_cast<double>(w) * log_lam[cell] - std::lgamma(static_cast<double>(w) + 1.0);
            self(self, cell + 1, used + w, lw);
        }
        shifted(i, j) = base;
    };
    recurse(recurse, 0, 0, 0.0);
    out.value = sum;
    out.terms = terms;
    return out;
}

}  // namespace coalim
