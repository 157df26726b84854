#include "coalim/generator.hpp"

#include "pim_kernel.hpp"

#include "coalim/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace coalim {

double discrete_generator_apply(const TestFunction& f, const TypeConfiguration& config, const MutationCountMatrix& m,
                                std::int64_t n, const MutationModel& model) {
    if (n < 1) throw InvalidArgument("scale must be at least 1");
    const std::size_t d = model.dimension();
    std::vector<double> rho;
    backward_probability_table(config, model, rho);
    const auto y = config.scaled(n);
    const double f0 = f(y, m);
    const double nd = static_cast<double>(n);

    double out = 0.0;
    TypeConfiguration moved = config;
    for (std::size_t j = 0; j < d; ++j) {
        if (rho[j] == 0.0) continue;
        --moved.counts[j];
        out += nd * (f(moved.scaled(n), m) - f0) * rho[j];
        ++moved.counts[j];
    }
    MutationCountMatrix shifted = m;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double p = rho[d + i * d + j];
            if (p == 0.0) continue;
            --moved.counts[j];
            ++moved.counts[i];
            ++shifted(i, j);
            out += (f(moved.scaled(n), shifted) - f0) * nd * p;
            --shifted(i, j);
            ++moved.counts[j];
            --moved.counts[i];
        }
    return out;
}

double limit_generator_apply(const TestFunction& f, const Position& y, const MutationCountMatrix& m,
                             const MutationModel& model) {
    if (y.is_infinity()) return 0.0;
    const auto lambda = jump_intensity(y, model);
    const auto coords = y.coords();
    const double r = sum_norm(coords);
    const auto grad = f.gradient(coords, m);
    const double f0 = f(coords, m);
    double out = 0.0;
    for (std::size_t k = 0; k < coords.size(); ++k) out -= grad[k] * coords[k] / r;
    const std::size_t d = model.dimension();
    MutationCountMatrix shifted = m;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            if (lambda[i * d + j] == 0.0) continue;
            ++shifted(i, j);
            out += (f(coords, shifted) - f0) * lambda[i * d + j];
            --shifted(i, j);
        }
    return out;
}

double log_log_slope(std::span<const std::int64_t> n_values, std::span<const double> gaps) {
    if (n_values.size() != gaps.size() || n_values.size() < 2) throw InvalidArgument("slope needs two aligned points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double k = static_cast<double>(n_values.size());
    for (std::size_t i = 0; i < n_values.size(); ++i) {
        if (!(gaps[i] > 0.0)) throw DomainError("log-log slope needs positive gaps");
        const double x = std::log(static_cast<double>(n_values[i]));
        const double yv = std::log(gaps[i]);
        sx += x;
        sy += yv;
        sxx += x * x;
        sxy += x * yv;
    }
    return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

namespace {

// Every choice of the m_ij in {0, ..., m_cap - 1}, stored flat: for choice k,
// x[k] = prod chi(m_ij) and ratio[k * cells + c] = chi(m_c + 1) / chi(m_c).
struct MChoices {
    std::vector<double> x;
    std::vector<double> ratio;
};

MChoices enumerate_m_choices(const TestFunction& f, std::size_t cells) {
    MChoices out;
    std::vector<std::int64_t> k(cells, 0);
    for (;;) {
        double x = 1.0;
        for (std::size_t i = 0; i < cells; ++i) {
            x *= f.chi(k[i]);
            out.ratio.push_back(f.chi(k[i] + 1) / f.chi(k[i]));
        }
        out.x.push_back(x);
        std::size_t pos = 0;
        while (pos < cells && ++k[pos] == f.m_cap()) k[pos++] = 0;
        if (pos == cells) break;
    }
    return out;
}

}  // namespace

double generator_gap(const TestFunction& f, std::int64_t n, const MutationModel& model, unsigned threads,
                     std::size_t point_budget) {
    if (n < 1) throw InvalidArgument("scale must be at least 1");
    if (!model.is_pim()) throw InvalidArgument("generator gap needs a parent-independent model");
    const std::size_t d = model.dimension();
    if (f.dimension() != d) throw InvalidArgument("test function dimension does not match model");
    if (f.amplitude() == 0.0) return 0.0;

    const double nd = static_cast<double>(n);
    const double delta = f.delta();
    const double radius = f.radius();
    const std::int64_t lo = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(delta * nd)) - 2);
    const std::int64_t hi = static_cast<std::int64_t>(std::ceil(radius * nd)) + 2;
    const std::size_t width = static_cast<std::size_t>(hi - lo + 1);
    {
        double pts = 1.0;
        for (std::size_t j = 0; j < d; ++j) pts *= static_cast<double>(width);
        if (pts > static_cast<double>(point_budget)) throw BudgetExceeded("generator gap grid exceeds the point budget");
    }

    // Ramps are separable in the coordinates; cache them over the count range plus one.
    const std::int64_t clo = std::max<std::int64_t>(0, lo - 1);
    const std::int64_t chi_c = hi + 1;
    std::vector<double> ramp(static_cast<std::size_t>(chi_c - clo + 1)), dramp(ramp.size());
    for (std::int64_t c = clo; c <= chi_c; ++c) {
        const double u = (static_cast<double>(c) / nd - delta) / delta;
        ramp[static_cast<std::size_t>(c - clo)] = smooth_step(u);
        dramp[static_cast<std::size_t>(c - clo)] = smooth_step_derivative(u) / delta;
    }
    auto cutoff = [&](double r) { return 1.0 - smooth_step(2.0 * r / radius - 1.0); };
    auto dcutoff = [&](double r) { return -smooth_step_derivative(2.0 * r / radius - 1.0) * 2.0 / radius; };
    auto ramp_at = [&](std::int64_t c) { return ramp[static_cast<std::size_t>(c - clo)]; };
    auto y_part = [&](const std::vector<std::int64_t>& c) {
        double v = 1.0, r2 = 0.0;
        for (auto cj : c) {
            v *= ramp_at(cj);
            if (v == 0.0) return 0.0;
            const double yj = static_cast<double>(cj) / nd;
            r2 += yj * yj;
        }
        return v * cutoff(std::sqrt(r2));
    };

    const std::size_t cells = d * d;
    const std::size_t cells_a = cells / 2;
    const auto half_a = enumerate_m_choices(f, cells_a);
    const auto half_b = enumerate_m_choices(f, cells - cells_a);
    const auto q = model.q();
    const double theta = model.theta();
    const double amp = f.amplitude();
    const double reach = radius + 2.0 / nd;

    std::vector<double> row_max(width, 0.0);
    parallel_for(width, threads, [&](std::size_t first) {
        std::vector<std::int64_t> c(d, lo);
        c[0] = lo + static_cast<std::int64_t>(first);
        std::vector<double> rho(d + cells), beta(cells);
        std::vector<double> sum_a(half_a.x.size()), sum_b(half_b.x.size());
        double best = 0.0;
        for (;;) {
            double r2 = 0.0;
            std::int64_t size = 0;
            for (auto cj : c) {
                const double yj = static_cast<double>(cj) / nd;
                r2 += yj * yj;
                size += cj;
            }
            if (size >= 2 && std::sqrt(r2) <= reach) {
                detail::pim_backward_rates(c, theta, q, rho.data());
                const double s1 = static_cast<double>(size) / nd;
                const double f0 = y_part(c);

                // Analytic gradient of the y part.
                const double r = std::sqrt(r2);
                const double h = cutoff(r), dh = dcutoff(r);
                double all = 1.0;
                for (auto cj : c) all *= ramp_at(cj);
                double drift = 0.0;
                for (std::size_t k = 0; k < d; ++k) {
                    double others = 1.0;
                    for (std::size_t j = 0; j < d; ++j)
                        if (j != k) others *= ramp_at(c[j]);
                    const double yk = static_cast<double>(c[k]) / nd;
                    double g = others * dramp[static_cast<std::size_t>(c[k] - clo)] * h;
                    if (r > 0.0) g += all * dh * yk / r;
                    drift += g * yk / s1;
                }

                double alpha = drift;
                double lambda_total = 0.0;
                double mut_total = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    if (rho[j] == 0.0) continue;
                    --c[j];
                    alpha += nd * (y_part(c) - f0) * rho[j];
                    ++c[j];
                }
                for (std::size_t i = 0; i < d; ++i)
                    for (std::size_t j = 0; j < d; ++j) {
                        const double lam = theta * q[j] * (static_cast<double>(c[i]) / nd) / (s1 * s1);
                        const double nrho = nd * rho[d + i * d + j];
                        lambda_total += lam;
                        mut_total += nrho;
                        double fm = 0.0;
                        if (nrho != 0.0) {
                            --c[j];
                            ++c[i];
                            fm = y_part(c);
                            --c[i];
                            ++c[j];
                        }
                        beta[i * d + j] = fm * nrho - f0 * lam;
                    }
                alpha += f0 * (lambda_total - mut_total);

                // chi is nonincreasing, so X <= 1 and every ratio lies in [0, 1]; points whose
                // bound cannot beat the running maximum are skipped without changing the sup.
                double bound = std::abs(alpha);
                for (double b : beta) bound += std::abs(b);
                if (std::abs(amp) * bound <= best) goto next_point;
                {
                // The m part splits over two halves of the cells: v = alpha + S_a + S_b, X = X_a X_b.
                auto partial = [&](const MChoices& half, std::size_t offset, std::vector<double>& sums) {
                    const std::size_t width_h = half.ratio.size() / half.x.size();
                    const double* ratio = half.ratio.data();
                    for (std::size_t k = 0; k < half.x.size(); ++k, ratio += width_h) {
                        double v = 0.0;
                        for (std::size_t c2 = 0; c2 < width_h; ++c2) v += beta[offset + c2] * ratio[c2];
                        sums[k] = v;
                    }
                };
                partial(half_a, 0, sum_a);
                partial(half_b, cells_a, sum_b);
                for (std::size_t a = 0; a < half_a.x.size(); ++a) {
                    const double va = alpha + sum_a[a];
                    const double xa = amp * half_a.x[a];
                    for (std::size_t b = 0; b < half_b.x.size(); ++b)
                        best = std::max(best, std::abs(xa * half_b.x[b] * (va + sum_b[b])));
                }
                }
            }
        next_point:
            std::size_t pos = 1;
            while (pos < d && ++c[pos] > hi) c[pos++] = lo;
            if (pos >= d) break;
        }
        row_max[first] = best;
    });
    return *std::max_element(row_max.begin(), row_max.end());
}

GapReport generator_gap_sweep(const TestFunction& f, std::span<const std::int64_t> n_values,
                              const MutationModel& model, unsigned threads) {
    GapReport report;
    report.n_values.assign(n_values.begin(), n_values.end());
    for (auto n : n_values) report.gaps.push_back(generator_gap(f, n, model, threads));
    if (report.gaps.size() >= 2 && std::all_of(report.gaps.begin(), report.gaps.end(), [](double g) { return g > 0.0; }))
        report.slope = log_log_slope(report.n_values, report.gaps);
    return report;
}

double discrete_semigroup_apply(const TestFunction& f, const TypeConfiguration& initial, std::int64_t n, double t,
                                const MutationModel& model, std::size_t state_budget) {
    if (n < 1) throw InvalidArgument("scale must be at least 1");
    if (!model.is_pim()) throw InvalidArgument("discrete semigroup needs a parent-independent model");
    const std::size_t d = model.dimension();
    if (initial.dimension() != d || f.dimension() != d) throw InvalidArgument("dimension mismatch");
    if (initial.size() < 1) throw InvalidArgument("initial configuration must hold at least one lineage");
    const std::size_t steps = scaled_steps(n, t);
    const MutationCountMatrix zero(d);
    if (steps == 0 || f.amplitude() == 0.0) return f(initial.scaled(n), zero);

    using State = std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>>;
    std::map<State, double> level{{State{initial.counts, std::vector<std::int64_t>(d * d, 0)}, 1.0}};
    std::vector<double> rho;
    for (std::size_t k = 0; k < steps; ++k) {
        std::map<State, double> next;
        for (const auto& [state, mass] : level) {
            TypeConfiguration c(state.first);
            if (c.size() <= 1) {
                next[state] += mass;
                continue;
            }
            backward_probability_table(c, model, rho);
            for (std::size_t e = 0; e < rho.size(); ++e) {
                if (rho[e] == 0.0) continue;
                State s = state;
                if (e < d) {
                    --s.first[e];
                } else {
                    const std::size_t i = (e - d) / d, j = (e - d) % d;
                    if (s.second[i * d + j] + 1 >= f.m_cap()) continue;
                    --s.first[j];
                    ++s.first[i];
                    ++s.second[i * d + j];
                }
                next[s] += mass * rho[e];
            }
        }
        if (next.size() > state_budget) throw BudgetExceeded("semigroup propagation exceeds the state budget");
        level = std::move(next);
    }
    double value = 0.0;
    for (const auto& [state, mass] : level) {
        const MutationCountMatrix m(d, state.second);
        value += mass * f(TypeConfiguration(state.first).scaled(n), m);
    }
    return value;
}

}  // namespace coalim
