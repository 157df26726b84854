#include "coalim/test_function.hpp"

#include <cmath>

namespace coalim {

namespace {

double bump(double u) { return u > 0.0 ? std::exp(-1.0 / u) : 0.0; }
double bump_derivative(double u) { return u > 0.0 ? std::exp(-1.0 / u) / (u * u) : 0.0; }

}  // namespace

double smooth_step(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    const double a = bump(u);
    const double b = bump(1.0 - u);
    return a / (a + b);
}

double smooth_step_derivative(double u) {
    if (u <= 0.0 || u >= 1.0) return 0.0;
    const double a = bump(u);
    const double b = bump(1.0 - u);
    const double s = a + b;
    return (bump_derivative(u) * b + a * bump_derivative(1.0 - u)) / (s * s);
}

TestFunction::TestFunction(std::size_t dimension, double delta, double radius, std::int64_t m_cap, double amplitude)
    : d_(dimension), delta_(delta), radius_(radius), m_cap_(m_cap), amplitude_(amplitude) {
    if (d_ < 1) throw InvalidArgument("test function dimension must be at least 1");
    if (!(delta_ > 0.0)) throw InvalidArgument("test function delta must be positive");
    if (!(2.0 * delta_ * static_cast<double>(d_) < radius_))
        throw InvalidArgument("test function parameters must satisfy 2 * delta * d < radius");
    if (m_cap_ < 1) throw InvalidArgument("test function m_cap must be at least 1");
}

double TestFunction::sup_abs() const { return std::abs(amplitude_); }

double TestFunction::chi(std::int64_t k) const {
    if (k >= m_cap_) return 0.0;
    return 1.0 - static_cast<double>(k) / static_cast<double>(m_cap_);
}

double TestFunction::m_factor(const MutationCountMatrix& m) const {
    double v = 1.0;
    for (auto k : m.entries()) {
        v *= chi(k);
        if (v == 0.0) return 0.0;
    }
    return v;
}

double TestFunction::y_factor(std::span<const double> y) const {
    double v = 1.0;
    for (double yj : y) {
        v *= smooth_step((yj - delta_) / delta_);
        if (v == 0.0) return 0.0;
    }
    return v * (1.0 - smooth_step(2.0 * euclidean_norm(y) / radius_ - 1.0));
}

std::vector<double> TestFunction::y_factor_gradient(std::span<const double> y) const {
    const std::size_t d = y.size();
    std::vector<double> ramps(d), dramps(d);
    for (std::size_t j = 0; j < d; ++j) {
        const double u = (y[j] - delta_) / delta_;
        ramps[j] = smooth_step(u);
        dramps[j] = smooth_step_derivative(u) / delta_;
    }
    const double r = euclidean_norm(y);
    const double v = 2.0 * r / radius_ - 1.0;
    const double cutoff = 1.0 - smooth_step(v);
    const double dcutoff_dr = -smooth_step_derivative(v) * 2.0 / radius_;

    double all = 1.0;
    for (double g : ramps) all *= g;
    std::vector<double> grad(d, 0.0);
    for (std::size_t k = 0; k < d; ++k) {
        double others = 1.0;
        for (std::size_t j = 0; j < d; ++j)
            if (j != k) others *= ramps[j];
        grad[k] = others * dramps[k] * cutoff;
        if (r > 0.0) grad[k] += all * dcutoff_dr * y[k] / r;
    }
    return grad;
}

double TestFunction::operator()(std::span<const double> y, const MutationCountMatrix& m) const {
    if (amplitude_ == 0.0) return 0.0;
    const double mf = m_factor(m);
    if (mf == 0.0) return 0.0;
    return amplitude_ * mf * y_factor(y);
}

double TestFunction::operator()(const Position& y, const MutationCountMatrix& m) const {
    if (y.is_infinity()) return 0.0;
    return (*this)(y.coords(), m);
}

std::vector<double> TestFunction::gradient(std::span<const double> y, const MutationCountMatrix& m) const {
    auto g = y_factor_gradient(y);
    const double scale = amplitude_ * m_factor(m);
    for (auto& v : g) v *= scale;
    return g;
}

TestFunction make_test_function(std::size_t dimension, double delta, double radius, std::int64_t m_cap,
                                double amplitude) {
    return TestFunction(dimension, delta, radius, m_cap, amplitude);
}

double psi1_distance(const Position& a, const Position& b) {
    if (a.is_infinity() && b.is_infinity()) return 0.0;
    auto inverted = [](const Position& p) {
        const auto y = p.coords();
        const double r2 = [&] {
            double s = 0.0;
            for (double v : y) s += v * v;
            return s;
        }();
        if (!(r2 > 0.0)) throw DomainError("psi metric is undefined at the origin");
        std::vector<double> out(y.begin(), y.end());
        for (auto& v : out) v /= r2;
        return out;
    };
    if (a.is_infinity()) return euclidean_norm(inverted(b));
    if (b.is_infinity()) return euclidean_norm(inverted(a));
    if (a.dimension() != b.dimension()) throw InvalidArgument("psi metric: dimension mismatch");
    auto ia = inverted(a);
    const auto ib = inverted(b);
    for (std::size_t j = 0; j < ia.size(); ++j) ia[j] -= ib[j];
    return euclidean_norm(ia);
}

double psi_distance(const Position& ya, const MutationCountMatrix& ma, const Position& yb,
                    const MutationCountMatrix& mb) {
    if (ma.dimension() != mb.dimension()) throw InvalidArgument("psi metric: mutation dimension mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < ma.entries().size(); ++k) {
        const double diff = static_cast<double>(ma.entries()[k] - mb.entries()[k]);
        s += diff * diff;
    }
    return psi1_distance(ya, yb) + std::sqrt(s);
}

}  // namespace coalim
