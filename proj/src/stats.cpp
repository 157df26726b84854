#include "coalim/stats.hpp"

#include "coalim/limit.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>

namespace coalim {

double poisson_pmf(double lambda, std::int64_t k) {
    if (k < 0) return 0.0;
    if (lambda <= 0.0) return k == 0 ? 1.0 : 0.0;
    const double kd = static_cast<double>(k);
    return std::exp(kd * std::log(lambda) - lambda - std::lgamma(kd + 1.0));
}

double chi_square_sf(double statistic, int dof) {
    if (dof <= 0) return 1.0;
    if (statistic <= 0.0) return 1.0;
    return boost::math::gamma_q(0.5 * dof, 0.5 * statistic);
}

double poisson_tv_distance(std::span<const double> pmf, double lambda) {
    double tv = 0.0, covered = 0.0;
    for (std::size_t k = 0; k < pmf.size(); ++k) {
        const double ref = poisson_pmf(lambda, static_cast<std::int64_t>(k));
        covered += ref;
        tv += std::abs(pmf[k] - ref);
    }
    tv += std::max(0.0, 1.0 - covered);
    return 0.5 * tv;
}

GofReport poisson_gof(std::span<const std::int64_t> samples, double lambda) {
    if (!(lambda > 0.0)) throw InvalidArgument("Poisson goodness of fit needs lambda > 0");
    if (samples.size() < kMinGofSamples) throw InvalidArgument("insufficient samples for a goodness-of-fit test (need >= 1000)");
    GofReport r;
    r.lambda = lambda;
    r.sample_size = samples.size();
    std::int64_t kmax = 0;
    for (auto x : samples) {
        if (x < 0) throw InvalidArgument("negative count sample");
        kmax = std::max(kmax, x);
    }
    r.histogram.assign(static_cast<std::size_t>(kmax + 1), 0);
    for (auto x : samples) ++r.histogram[static_cast<std::size_t>(x)];
    const double n = static_cast<double>(samples.size());
    std::vector<double> emp(r.histogram.size());
    for (std::size_t k = 0; k < emp.size(); ++k) {
        r.reference_pmf.push_back(poisson_pmf(lambda, static_cast<std::int64_t>(k)));
        emp[k] = static_cast<double>(r.histogram[k]) / n;
    }
    r.total_variation = poisson_tv_distance(emp, lambda);

    // Pool left to right until each bin expects >= 5; the last bin is the open tail.
    double cdf = 0.0;
    GofBin cur{0, 0, 0.0, 0.0};
    for (std::int64_t k = 0;; ++k) {
        const double p = poisson_pmf(lambda, k);
        const double tail_after = std::max(0.0, 1.0 - (cdf + p));
        cur.k_hi = k;
        cur.expected += n * p;
        cur.observed += k <= kmax ? static_cast<double>(r.histogram[static_cast<std::size_t>(k)]) : 0.0;
        cdf += p;
        if (n * tail_after < kMinExpectedPerBin) {
            // Everything beyond k joins the current bin as the open tail.
            cur.k_hi = -1;
            cur.expected += n * tail_after;
            for (std::int64_t j = k + 1; j <= kmax; ++j) cur.observed += static_cast<double>(r.histogram[static_cast<std::size_t>(j)]);
            if (cur.expected < kMinExpectedPerBin && !r.bins.empty()) {
                auto& prev = r.bins.back();
                prev.k_hi = -1;
                prev.expected += cur.expected;
                prev.observed += cur.observed;
            } else {
                r.bins.push_back(cur);
            }
            break;
        }
        if (cur.expected >= kMinExpectedPerBin) {
            r.bins.push_back(cur);
            cur = GofBin{k + 1, k + 1, 0.0, 0.0};
        }
    }
    for (const auto& b : r.bins) r.chi_square += (b.observed - b.expected) * (b.observed - b.expected) / b.expected;
    r.degrees_of_freedom = static_cast<int>(r.bins.size()) - 1;
    r.p_value = chi_square_sf(r.chi_square, r.degrees_of_freedom);
    return r;
}

std::vector<double> weighted_pmf(std::span<const std::int64_t> samples, std::span<const double> weights) {
    if (samples.size() != weights.size()) throw InvalidArgument("samples and weights differ in length");
    std::int64_t kmax = 0;
    for (auto x : samples) kmax = std::max(kmax, x);
    std::vector<double> pmf(static_cast<std::size_t>(kmax + 1), 0.0);
    for (std::size_t i = 0; i < samples.size(); ++i) pmf[static_cast<std::size_t>(samples[i])] += weights[i];
    for (auto& v : pmf) v /= static_cast<double>(samples.size());
    return pmf;
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("correlation needs two aligned samples");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

double path_sup_deviation(const ScaledPath& path, std::span<const double> y0, double t) {
    const bool backward = path.direction == Direction::Backward;
    const double r0 = sum_norm(y0);
    if (backward && !(t < r0)) throw DomainError("deviation horizon must satisfy t < |y0|");
    if (!(t >= 0.0)) throw InvalidArgument("time must be nonnegative");
    const std::size_t last = scaled_steps(path.scale, t);
    if (last > path.steps() && !(backward && path.absorbed))
        throw DomainError("path is shorter than the deviation horizon");

    const double nd = static_cast<double>(path.scale);
    auto limit_at = [&](double s) { return backward ? deterministic_position(y0, s) : forward_limit_position(y0, s); };
    auto distance = [&](const TypeConfiguration& c, double s) {
        const auto ref = limit_at(s);
        double dev = 0.0;
        for (std::size_t j = 0; j < ref.size(); ++j) dev += std::abs(static_cast<double>(c[j]) / nd - ref[j]);
        return dev;
    };

    TypeConfiguration c = path.initial;
    MutationCountMatrix m(c.dimension());
    double sup = 0.0;
    for (std::size_t k = 0; k <= last; ++k) {
        if (k > 0 && k - 1 < path.steps()) apply_event(path.events[k - 1], path.direction, c, m);
        const double s = static_cast<double>(k) / nd;
        sup = std::max(sup, distance(c, std::min(s, t)));
        sup = std::max(sup, distance(c, std::min(static_cast<double>(k + 1) / nd, t)));
    }
    return sup;
}

double median(std::vector<double> values) {
    if (values.empty()) throw InvalidArgument("median of an empty sample");
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

}  // namespace coalim
