#include "coalim/experiments.hpp"

#include "coalim/chain.hpp"
#include "coalim/forward.hpp"
#include "coalim/generator.hpp"
#include "coalim/limit.hpp"
#include "coalim/measure.hpp"
#include "coalim/parallel.hpp"
#include "coalim/sampling.hpp"
#include "coalim/stats.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

extern char** environ;

namespace coalim {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Config access

std::string join_path(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }

class Cfg {
  public:
    Cfg(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

    bool has(const std::string& key) const { return j_.is_object() && j_.contains(key) && !j_.at(key).is_null(); }
    std::string path(const std::string& key) const { return join_path(path_, key); }

    const json& raw(const std::string& key) const {
        if (!has(key)) throw ConfigError(path(key), "missing required key");
        return j_.at(key);
    }

    Cfg sub(const std::string& key) const {
        const auto& v = raw(key);
        if (!v.is_object()) throw ConfigError(path(key), "expected an object");
        return Cfg(v, path(key));
    }

    double number(const std::string& key) const {
        const auto& v = raw(key);
        if (!v.is_number()) throw ConfigError(path(key), "expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ConfigError(path(key), "expected a finite number");
        return x;
    }
    double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

    double positive(const std::string& key) const {
        const double x = number(key);
        if (!(x > 0.0)) throw ConfigError(path(key), "must be positive");
        return x;
    }
    double positive(const std::string& key, double fallback) const { return has(key) ? positive(key) : fallback; }

    std::int64_t integer(const std::string& key) const {
        const auto& v = raw(key);
        if (!v.is_number_integer()) throw ConfigError(path(key), "expected an integer");
        return v.get<std::int64_t>();
    }
    std::int64_t integer(const std::string& key, std::int64_t fallback) const {
        return has(key) ? integer(key) : fallback;
    }

    std::uint64_t unsigned_integer(const std::string& key) const {
        const auto& v = raw(key);
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
            throw ConfigError(path(key), "expected a nonnegative integer");
        return v.get<std::uint64_t>();
    }

    std::string string(const std::string& key, const std::string& fallback) const {
        if (!has(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_string()) throw ConfigError(path(key), "expected a string");
        return v.get<std::string>();
    }

    std::vector<double> vector(const std::string& key) const {
        const auto& v = raw(key);
        if (!v.is_array() || v.empty()) throw ConfigError(path(key), "expected a nonempty array of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) throw ConfigError(path(key), "expected a nonempty array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    std::vector<std::int64_t> int_list(const std::string& key) const {
        const auto& v = raw(key);
        std::vector<std::int64_t> out;
        if (v.is_number_integer()) {
            out.push_back(v.get<std::int64_t>());
        } else if (v.is_array() && !v.empty()) {
            for (const auto& e : v) {
                if (!e.is_number_integer()) throw ConfigError(path(key), "expected an integer or array of integers");
                out.push_back(e.get<std::int64_t>());
            }
        } else {
            throw ConfigError(path(key), "expected an integer or array of integers");
        }
        for (auto x : out)
            if (x < 1) throw ConfigError(path(key), "values must be at least 1");
        return out;
    }

  private:
    const json& j_;
    std::string path_;
};

MutationModel parse_model(const Cfg& root) {
    const Cfg m = root.sub("model");
    const double theta = m.number("theta");
    if (!(theta > 0.0)) throw ConfigError(m.path("theta"), "must be positive");
    const bool has_pim = m.has("pim");
    const bool has_matrix = m.has("matrix");
    if (has_pim == has_matrix) throw ConfigError(root.path("model"), "give exactly one of \"pim\" or \"matrix\"");
    std::vector<double> flat;
    std::size_t d = 0;
    if (has_pim) {
        const auto q = m.vector("pim");
        d = q.size();
        for (std::size_t i = 0; i < d; ++i) flat.insert(flat.end(), q.begin(), q.end());
    } else {
        const auto& rows = m.raw("matrix");
        if (!rows.is_array() || rows.empty()) throw ConfigError(m.path("matrix"), "expected a square array of rows");
        d = rows.size();
        for (const auto& r : rows) {
            if (!r.is_array() || r.size() != d) throw ConfigError(m.path("matrix"), "expected a square array of rows");
            for (const auto& e : r) {
                if (!e.is_number()) throw ConfigError(m.path("matrix"), "entries must be numbers");
                flat.push_back(e.get<double>());
            }
        }
    }
    MutationModel model(theta, d, std::move(flat));
    const auto report = model.validate();
    if (!report.valid) throw ConfigError(m.path(has_pim ? "pim" : "matrix"), report.violations.front());
    return model;
}

MutationModel require_pim(const MutationModel& model, const std::string& why) {
    if (!model.is_pim()) throw ConfigError("model", why);
    return model;
}

std::vector<double> parse_y0(const Cfg& root, std::size_t d) {
    auto y0 = root.vector("y0");
    if (y0.size() != d) throw ConfigError(root.path("y0"), "length must match the model dimension");
    for (double v : y0)
        if (!(v >= 0.0)) throw ConfigError(root.path("y0"), "components must be nonnegative");
    if (!(sum_norm(y0) > 0.0)) throw ConfigError(root.path("y0"), "must not be the origin");
    return y0;
}

Direction parse_direction(const Cfg& root) {
    const auto s = root.string("direction", "backward");
    if (s == "backward") return Direction::Backward;
    if (s == "forward") return Direction::Forward;
    throw ConfigError(root.path("direction"), "expected \"backward\" or \"forward\"");
}

RMode parse_r_mode(const Cfg& root, RMode fallback) {
    if (!root.has("r_mode")) return fallback;
    const auto s = root.string("r_mode", "");
    if (s == "exact") return RMode::Exact;
    if (s == "asymptotic") return RMode::Asymptotic;
    throw ConfigError(root.path("r_mode"), "expected \"exact\" or \"asymptotic\"");
}

TestFunction parse_test_function(const Cfg& root, std::size_t d) {
    const Cfg tf = root.sub("test_function");
    const double delta = tf.positive("delta");
    const double radius = tf.positive("radius");
    const auto m_cap = tf.integer("m_cap");
    const double amplitude = tf.number("amplitude", 1.0);
    if (m_cap < 1) throw ConfigError(tf.path("m_cap"), "must be at least 1");
    if (!(2.0 * delta * static_cast<double>(d) < radius))
        throw ConfigError(root.path("test_function"), "parameters must satisfy 2 * delta * d < radius");
    return TestFunction(d, delta, radius, m_cap, amplitude);
}

std::size_t parse_paths(const Cfg& root) {
    const auto p = root.integer("paths");
    if (p < 1) throw ConfigError(root.path("paths"), "must be at least 1");
    return static_cast<std::size_t>(p);
}

// ---------------------------------------------------------------------------
// Output

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

class Csv {
  public:
    explicit Csv(std::vector<std::string> header) : header_(std::move(header)) {}

    Csv& row() {
        rows_.emplace_back();
        return *this;
    }
    Csv& operator<<(const std::string& s) {
        rows_.back().push_back(s);
        return *this;
    }
    Csv& operator<<(const char* s) { return *this << std::string(s); }
    Csv& operator<<(double v) { return *this << format_number(v); }
    Csv& operator<<(std::int64_t v) { return *this << std::to_string(v); }
    Csv& operator<<(std::size_t v) { return *this << std::to_string(v); }
    Csv& operator<<(int v) { return *this << std::to_string(v); }
    Csv& operator<<(bool v) { return *this << std::string(v ? "true" : "false"); }

    std::string str() const {
        std::string out;
        auto line = [&out](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + csv_escape(cells[i]);
            out += "\n";
        };
        line(header_);
        for (const auto& r : rows_) line(r);
        return out;
    }

  private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

struct Checks {
    json list = json::array();
    bool all = true;

    void add(const std::string& name, bool passed, json value, json threshold) {
        list.push_back({{"name", name}, {"passed", passed}, {"value", std::move(value)}, {"threshold", std::move(threshold)}});
        all = all && passed;
    }
};

// Doubles that JSON cannot hold (nan/inf) go out as strings.
json num(double v) {
    if (std::isfinite(v)) return v;
    return format_number(v);
}

std::string cell_name(std::size_t i, std::size_t j) { return "m_" + std::to_string(i + 1) + "_" + std::to_string(j + 1); }

std::vector<std::string> state_header(std::size_t d) {
    std::vector<std::string> h;
    for (std::size_t j = 0; j < d; ++j) h.push_back("y_" + std::to_string(j + 1));
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) h.push_back(cell_name(i, j));
    return h;
}

bool strictly_decreasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] < v[i - 1])) return false;
    return true;
}

json to_json(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

// Stream index for path k of sweep point `sweep`.
std::uint64_t stream_index(std::size_t sweep, std::size_t k) {
    return (static_cast<std::uint64_t>(sweep) << 40) + static_cast<std::uint64_t>(k);
}

struct Context {
    std::string kind;
    Cfg cfg;
    std::uint64_t seed;
    unsigned threads;
    json statistics = json::object();
    json tolerances = json::object();
    json metadata = json::object();
    Checks checks;
    std::string csv;
};

// ---------------------------------------------------------------------------
// Experiments

struct SimRecord {
    std::size_t steps = 0;
    bool absorbed = false;
    TypeConfiguration config;
    MutationCountMatrix m;
};

void run_simulate(Context& ctx, Direction direction) {
    const auto model = parse_model(ctx.cfg);
    if (direction == Direction::Backward) require_pim(model, "backward simulation needs a parent-independent model");
    const std::size_t d = model.dimension();
    const auto y0 = parse_y0(ctx.cfg, d);
    const auto ns = ctx.cfg.int_list("n");
    const auto paths = parse_paths(ctx.cfg);
    const bool has_t = ctx.cfg.has("t");
    const double t = has_t ? ctx.cfg.number("t") : 0.0;
    if (has_t && !(t >= 0.0)) throw ConfigError(ctx.cfg.path("t"), "must be nonnegative");
    if (direction == Direction::Forward && !has_t) throw ConfigError(ctx.cfg.path("t"), "forward simulation needs a horizon");
    const double min_fraction = ctx.cfg.has("tolerances") ? ctx.cfg.sub("tolerances").number("min_fraction", 0.0) : 0.0;
    if (direction == Direction::Forward) ctx.tolerances["min_fraction"] = min_fraction;

    auto header = std::vector<std::string>{"n", "path", "steps", "absorbed"};
    for (auto& h : state_header(d)) header.push_back(h);
    Csv csv(header);
    json per_n = json::array();

    for (std::size_t s = 0; s < ns.size(); ++s) {
        const auto n = ns[s];
        const auto initial = TypeConfiguration::from_scaled(y0, n);
        const std::size_t max_steps = has_t ? scaled_steps(n, t) : std::numeric_limits<std::size_t>::max();
        std::vector<SimRecord> recs(paths);
        parallel_for(paths, ctx.threads, [&](std::size_t k) {
            Rng rng = Rng::for_stream(ctx.seed, stream_index(s, k));
            const auto path = direction == Direction::Backward
                                  ? simulate_backward(initial, model, n, rng, max_steps)
                                  : simulate_forward(initial, model, n, max_steps, rng, min_fraction);
            auto [c, m] = path.state_at_step(path.steps());
            recs[k] = {path.steps(), path.absorbed, std::move(c), std::move(m)};
        });

        std::vector<double> mean_m(d * d, 0.0);
        double mean_steps = 0.0;
        for (std::size_t k = 0; k < paths; ++k) {
            const auto& r = recs[k];
            csv.row() << n << k << r.steps << r.absorbed;
            for (std::size_t j = 0; j < d; ++j) csv << static_cast<double>(r.config[j]) / static_cast<double>(n);
            for (auto v : r.m.entries()) csv << v;
            for (std::size_t c = 0; c < d * d; ++c) mean_m[c] += static_cast<double>(r.m.entries()[c]);
            mean_steps += static_cast<double>(r.steps);
        }
        for (auto& v : mean_m) v /= static_cast<double>(paths);
        json entry = {{"n", n}, {"mean_steps", num(mean_steps / static_cast<double>(paths))}, {"mean_mutations", to_json(mean_m)}};
        const auto y_init = initial.scaled(n);
        if (has_t && (direction == Direction::Forward || t < sum_norm(y_init)))
            entry["limit_cumulative_intensity"] = to_json(cumulative_intensity(y_init, t, model, direction).matrix);
        per_n.push_back(entry);
    }
    ctx.statistics["per_n"] = per_n;
    ctx.csv = csv.str();
}

void run_gof(Context& ctx) {
    const auto model = parse_model(ctx.cfg);
    const std::size_t d = model.dimension();
    const auto y0 = parse_y0(ctx.cfg, d);
    const auto n = ctx.cfg.int_list("n").front();
    const auto paths = parse_paths(ctx.cfg);
    const double t = ctx.cfg.positive("t");
    const auto direction = parse_direction(ctx.cfg);
    const bool weighted = ctx.cfg.has("proposal");

    double p_min = 0.001, tv_max = 0.02, corr_sigmas = 3.0;
    if (ctx.cfg.has("tolerances")) {
        const auto tol = ctx.cfg.sub("tolerances");
        p_min = tol.positive("p_min", p_min);
        tv_max = tol.positive("tv_max", tv_max);
        corr_sigmas = tol.positive("corr_sigmas", corr_sigmas);
    }

    const auto initial = TypeConfiguration::from_scaled(y0, n);
    const auto y_init = initial.scaled(n);
    if (direction == Direction::Backward && !(t < sum_norm(y_init)))
        throw ConfigError(ctx.cfg.path("t"), "backward horizon must satisfy t < |y0|");
    const auto lambda = cumulative_intensity(y_init, t, model, direction);
    const std::size_t steps = scaled_steps(n, t);

    Csv csv({"i", "j", "k", "empirical_pmf", "reference_pmf"});
    json cells = json::array();

    if (weighted) {
        if (direction != Direction::Backward) throw ConfigError(ctx.cfg.path("direction"), "weighted mode is backward only");
        auto q = ctx.cfg.vector("proposal");
        if (q.size() != d) throw ConfigError(ctx.cfg.path("proposal"), "length must match the model dimension");
        MutationModel proposal(model.theta(), d, [&] {
            std::vector<double> flat;
            for (std::size_t i = 0; i < d; ++i) flat.insert(flat.end(), q.begin(), q.end());
            return flat;
        }());
        const auto rep = proposal.validate();
        if (!rep.valid) throw ConfigError(ctx.cfg.path("proposal"), rep.violations.front());
        for (double v : q)
            if (!(v > 0.0)) throw ConfigError(ctx.cfg.path("proposal"), "entries must be strictly positive");
        const RMode mode = parse_r_mode(ctx.cfg, model.is_pim() ? RMode::Exact : RMode::Asymptotic);
        if (mode == RMode::Exact && !model.is_pim())
            throw ConfigError(ctx.cfg.path("r_mode"), "exact r-mode needs a parent-independent target model");
        ctx.metadata["r_mode"] = mode == RMode::Exact ? "exact" : "asymptotic";
        if (mode == RMode::Asymptotic)
            ctx.metadata["warning"] = "asymptotic r-mode: sampling-probability ratio r_n replaced by 1";

        ImportanceSpec spec{initial, n, t, paths, ctx.seed, 0, mode, ctx.threads};
        const auto samples = weighted_samples(spec, model, proposal);
        std::vector<double> weights(paths);
        for (std::size_t k = 0; k < paths; ++k) weights[k] = samples[k].weight();
        const auto w_est = mean_and_error(weights);
        ctx.statistics["mean_weight"] = num(w_est.mean);
        ctx.statistics["mean_weight_standard_error"] = num(w_est.standard_error);
        ctx.tolerances["tv_max"] = tv_max;

        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) {
                std::vector<std::int64_t> xs(paths);
                for (std::size_t k = 0; k < paths; ++k) xs[k] = samples[k].m(i, j);
                const auto pmf = weighted_pmf(xs, weights);
                const double lam = lambda(i, j);
                const double tv = poisson_tv_distance(pmf, lam);
                for (std::size_t k = 0; k < pmf.size(); ++k)
                    csv.row() << static_cast<std::int64_t>(i + 1) << static_cast<std::int64_t>(j + 1)
                              << static_cast<std::int64_t>(k) << pmf[k] << poisson_pmf(lam, static_cast<std::int64_t>(k));
                cells.push_back({{"i", i + 1}, {"j", j + 1}, {"lambda", num(lam)}, {"total_variation", num(tv)}});
                ctx.checks.add("tv_" + cell_name(i, j), tv <= tv_max, num(tv), tv_max);
            }
        ctx.statistics["cells"] = cells;
        ctx.csv = csv.str();
        return;
    }

    if (direction == Direction::Backward) require_pim(model, "backward goodness of fit needs a parent-independent model (or a proposal)");
    std::vector<MutationCountMatrix> ms(paths);
    const double min_fraction = 0.0;
    parallel_for(paths, ctx.threads, [&](std::size_t k) {
        Rng rng = Rng::for_stream(ctx.seed, k);
        const auto path = direction == Direction::Backward ? simulate_backward(initial, model, n, rng, steps)
                                                           : simulate_forward(initial, model, n, steps, rng, min_fraction);
        ms[k] = path.state_at_step(steps).second;
    });

    ctx.tolerances["p_min"] = p_min;
    ctx.tolerances["tv_max"] = tv_max;
    ctx.tolerances["corr_sigmas"] = corr_sigmas;
    std::vector<std::vector<double>> columns;
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double lam = lambda(i, j);
            if (!(lam > 0.0)) continue;
            std::vector<std::int64_t> xs(paths);
            for (std::size_t k = 0; k < paths; ++k) xs[k] = ms[k](i, j);
            const auto rep = poisson_gof(xs, lam);
            for (std::size_t k = 0; k < rep.histogram.size(); ++k)
                csv.row() << static_cast<std::int64_t>(i + 1) << static_cast<std::int64_t>(j + 1) << static_cast<std::int64_t>(k)
                          << static_cast<double>(rep.histogram[k]) / static_cast<double>(paths) << rep.reference_pmf[k];
            json bins = json::array();
            for (const auto& b : rep.bins)
                bins.push_back({{"k_lo", b.k_lo}, {"k_hi", b.k_hi}, {"observed", num(b.observed)}, {"expected", num(b.expected)}});
            cells.push_back({{"i", i + 1},
                             {"j", j + 1},
                             {"lambda", num(lam)},
                             {"chi_square", num(rep.chi_square)},
                             {"degrees_of_freedom", rep.degrees_of_freedom},
                             {"p_value", num(rep.p_value)},
                             {"total_variation", num(rep.total_variation)},
                             {"bins", bins}});
            ctx.checks.add("p_value_" + cell_name(i, j), rep.p_value > p_min, num(rep.p_value), p_min);
            ctx.checks.add("tv_" + cell_name(i, j), rep.total_variation <= tv_max, num(rep.total_variation), tv_max);
            std::vector<double> col(paths);
            for (std::size_t k = 0; k < paths; ++k) col[k] = static_cast<double>(xs[k]);
            columns.push_back(std::move(col));
            active.push_back(i * d + j);
        }
    const double corr_bound = corr_sigmas / std::sqrt(static_cast<double>(paths));
    json corrs = json::array();
    for (std::size_t a = 0; a < columns.size(); ++a)
        for (std::size_t b = a + 1; b < columns.size(); ++b) {
            const double rho = pearson_correlation(columns[a], columns[b]);
            const auto na = cell_name(active[a] / d, active[a] % d), nb = cell_name(active[b] / d, active[b] % d);
            corrs.push_back({{"a", na}, {"b", nb}, {"correlation", num(rho)}});
            ctx.checks.add("corr_" + na + "_" + nb, std::abs(rho) <= corr_bound, num(rho), corr_bound);
        }
    ctx.statistics["cells"] = cells;
    ctx.statistics["correlations"] = corrs;
    ctx.csv = csv.str();
}

void run_path_dev(Context& ctx) {
    const auto model = parse_model(ctx.cfg);
    const auto direction = parse_direction(ctx.cfg);
    if (direction == Direction::Backward) require_pim(model, "backward paths need a parent-independent model");
    const std::size_t d = model.dimension();
    const auto y0 = parse_y0(ctx.cfg, d);
    const auto ns = ctx.cfg.int_list("n");
    const auto paths = parse_paths(ctx.cfg);
    const double t = ctx.cfg.number("t");
    if (!(t >= 0.0)) throw ConfigError(ctx.cfg.path("t"), "must be nonnegative");
    if (direction == Direction::Backward && !(t < sum_norm(y0)))
        throw ConfigError(ctx.cfg.path("t"), "backward horizon must satisfy t < |y0|");
    std::optional<double> median_max;
    if (ctx.cfg.has("tolerances") && ctx.cfg.sub("tolerances").has("median_max"))
        median_max = ctx.cfg.sub("tolerances").positive("median_max");

    Csv csv({"n", "median", "mean"});
    std::vector<double> medians, means;
    for (std::size_t s = 0; s < ns.size(); ++s) {
        const auto n = ns[s];
        const auto initial = TypeConfiguration::from_scaled(y0, n);
        const std::size_t steps = scaled_steps(n, t);
        std::vector<double> dev(paths);
        parallel_for(paths, ctx.threads, [&](std::size_t k) {
            Rng rng = Rng::for_stream(ctx.seed, stream_index(s, k));
            const auto path = direction == Direction::Backward ? simulate_backward(initial, model, n, rng, steps)
                                                               : simulate_forward(initial, model, n, steps, rng);
            dev[k] = path_sup_deviation(path, y0, t);
        });
        double mean = 0.0;
        for (double v : dev) mean += v;
        mean /= static_cast<double>(paths);
        medians.push_back(median(dev));
        means.push_back(mean);
        csv.row() << n << medians.back() << mean;
    }
    ctx.statistics["n"] = ns;
    ctx.statistics["median"] = to_json(medians);
    ctx.statistics["mean"] = to_json(means);
    if (ns.size() >= 2) ctx.checks.add("median_strictly_decreasing", strictly_decreasing(medians), to_json(medians), nullptr);
    if (median_max) {
        ctx.tolerances["median_max"] = *median_max;
        ctx.checks.add("median_at_largest_n", medians.back() <= *median_max, num(medians.back()), *median_max);
    }
    ctx.csv = csv.str();
}

void run_generator_gap(Context& ctx) {
    const auto model = require_pim(parse_model(ctx.cfg), "generator gap needs a parent-independent model");
    const auto f = parse_test_function(ctx.cfg, model.dimension());
    const auto ns = ctx.cfg.int_list("n");
    double slope_min = -1.3, slope_max = -0.7;
    if (ctx.cfg.has("tolerances")) {
        const auto tol = ctx.cfg.sub("tolerances");
        slope_min = tol.number("slope_min", slope_min);
        slope_max = tol.number("slope_max", slope_max);
    }
    const auto report = generator_gap_sweep(f, ns, model, ctx.threads);
    Csv csv({"n", "gap"});
    for (std::size_t i = 0; i < ns.size(); ++i) csv.row() << ns[i] << report.gaps[i];
    ctx.statistics["n"] = ns;
    ctx.statistics["gaps"] = to_json(report.gaps);
    ctx.statistics["slope"] = num(report.slope);
    ctx.tolerances["slope_min"] = slope_min;
    ctx.tolerances["slope_max"] = slope_max;
    ctx.checks.add("gap_strictly_decreasing", strictly_decreasing(report.gaps), to_json(report.gaps), nullptr);
    if (ns.size() >= 2)
        ctx.checks.add("log_log_slope", report.slope >= slope_min && report.slope <= slope_max, num(report.slope),
                       json::array({slope_min, slope_max}));
    ctx.csv = csv.str();
}

void run_semigroup_gap(Context& ctx) {
    const auto model = require_pim(parse_model(ctx.cfg), "semigroup gap needs a parent-independent model");
    const std::size_t d = model.dimension();
    const auto f = parse_test_function(ctx.cfg, d);
    const auto y0 = parse_y0(ctx.cfg, d);
    const auto ns = ctx.cfg.int_list("n");
    const double t = ctx.cfg.number("t");
    if (!(t >= 0.0)) throw ConfigError(ctx.cfg.path("t"), "must be nonnegative");
    const double tol = ctx.cfg.has("tolerances") ? ctx.cfg.sub("tolerances").positive("truncation", 1e-12) : 1e-12;
    ctx.tolerances["truncation"] = tol;

    Csv csv({"n", "steps", "discrete", "limit", "gap", "truncation_order"});
    std::vector<double> gaps;
    json rows = json::array();
    for (auto n : ns) {
        const auto initial = TypeConfiguration::from_scaled(y0, n);
        const double discrete = discrete_semigroup_apply(f, initial, n, t, model);
        const auto limit = limit_semigroup_apply(f, Position(initial.scaled(n)), MutationCountMatrix(d), t, model, tol);
        const double gap = std::abs(discrete - limit.value);
        gaps.push_back(gap);
        csv.row() << n << scaled_steps(n, t) << discrete << limit.value << gap << limit.truncation_order;
        rows.push_back({{"n", n}, {"discrete", num(discrete)}, {"limit", num(limit.value)}, {"gap", num(gap)},
                        {"truncation_order", limit.truncation_order}, {"tail_bound", num(limit.tail_bound)}});
    }
    ctx.statistics["rows"] = rows;
    ctx.checks.add("gap_strictly_decreasing", strictly_decreasing(gaps), to_json(gaps), nullptr);
    ctx.csv = csv.str();
}

// Random row-stochastic rows with entries bounded away from zero.
std::vector<double> random_simplex(Rng& rng, std::size_t d) {
    std::vector<double> v(d);
    double s = 0.0;
    for (auto& x : v) {
        x = 0.05 + rng.uniform();
        s += x;
    }
    for (auto& x : v) x /= s;
    return v;
}

void run_lr_check(Context& ctx) {
    const auto target = parse_model(ctx.cfg);
    const std::size_t d = target.dimension();
    const auto q = ctx.cfg.vector("proposal");
    if (q.size() != d) throw ConfigError(ctx.cfg.path("proposal"), "length must match the model dimension");
    for (double v : q)
        if (!(v > 0.0)) throw ConfigError(ctx.cfg.path("proposal"), "entries must be strictly positive");
    const MutationModel proposal = [&] {
        try {
            return MutationModel::pim(target.theta(), q);
        } catch (const InvalidArgument& e) {
            throw ConfigError(ctx.cfg.path("proposal"), e.what());
        }
    }();

    double analytic_tol = 1e-12, enum_tol = 1e-10, mc_sigmas = 3.0;
    if (ctx.cfg.has("tolerances")) {
        const auto tol = ctx.cfg.sub("tolerances");
        analytic_tol = tol.positive("analytic", analytic_tol);
        enum_tol = tol.positive("enumeration", enum_tol);
        mc_sigmas = tol.positive("mc_sigmas", mc_sigmas);
    }
    ctx.tolerances["analytic"] = analytic_tol;
    ctx.tolerances["enumeration"] = enum_tol;
    ctx.tolerances["mc_sigmas"] = mc_sigmas;
    Csv csv({"check", "case", "value", "abs_error"});

    // Limit identity on random (P, Q, t, y0).
    const auto trials = ctx.cfg.integer("analytic_trials", 100);
    if (trials > 0) {
        Rng rng = Rng::for_stream(ctx.seed, stream_index(1, 0));
        double worst = 0.0;
        for (std::int64_t k = 0; k < trials; ++k) {
            const std::size_t dd = 1 + static_cast<std::size_t>(rng() % 5);
            std::vector<std::vector<double>> rows(dd);
            for (auto& r : rows) r = random_simplex(rng, dd);
            const auto p = MutationModel::general(0.1 + 10.0 * rng.uniform(), rows);
            const auto qq = random_simplex(rng, dd);
            std::vector<double> y(dd);
            for (auto& v : y) v = 0.05 + rng.uniform();
            const double t = sum_norm(y) * (0.01 + 0.98 * rng.uniform());
            const double value = analytic_unit_expectation(y, t, p, qq);
            worst = std::max(worst, std::abs(value - 1.0));
            csv.row() << "analytic" << k << value << std::abs(value - 1.0);
        }
        ctx.statistics["analytic_max_error"] = num(worst);
        ctx.checks.add("analytic_unit_expectation", worst <= analytic_tol, num(worst), analytic_tol);
    }

    // Exhaustive enumeration, PIM targets only.
    if (ctx.cfg.has("enumeration")) {
        const auto en = ctx.cfg.sub("enumeration");
        if (!target.is_pim()) throw ConfigError(ctx.cfg.path("enumeration"), "enumeration needs a parent-independent target");
        const auto max_steps = en.integer("max_steps");
        if (max_steps < 0) throw ConfigError(en.path("max_steps"), "must be nonnegative");
        const auto& inits = en.raw("initial");
        if (!inits.is_array()) throw ConfigError(en.path("initial"), "expected an array of count vectors");
        double worst = 0.0;
        json cases = json::array();
        for (const auto& init : inits) {
            if (!init.is_array() || init.size() != d) throw ConfigError(en.path("initial"), "count vectors must have length d");
            std::vector<std::int64_t> counts;
            for (const auto& c : init) {
                if (!c.is_number_integer() || c.get<std::int64_t>() < 0)
                    throw ConfigError(en.path("initial"), "counts must be nonnegative integers");
                counts.push_back(c.get<std::int64_t>());
            }
            const TypeConfiguration config(counts);
            if (config.size() < 1) throw ConfigError(en.path("initial"), "configurations must hold a lineage");
            for (std::int64_t k = 0; k <= max_steps; ++k) {
                const double value = enumerate_unit_expectation(config, static_cast<std::size_t>(k), target.theta(),
                                                                target.q(), proposal.q());
                worst = std::max(worst, std::abs(value - 1.0));
                std::ostringstream label;
                for (std::size_t j = 0; j < d; ++j) label << (j ? " " : "") << counts[j];
                label << " K=" << k;
                csv.row() << "enumeration" << label.str() << value << std::abs(value - 1.0);
                cases.push_back({{"initial", counts}, {"steps", k}, {"value", num(value)}});
            }
        }
        ctx.statistics["enumeration"] = cases;
        ctx.statistics["enumeration_max_error"] = num(worst);
        ctx.checks.add("enumerated_unit_expectation", worst <= enum_tol, num(worst), enum_tol);
    }

    // Monte Carlo E[C R].
    if (ctx.cfg.has("paths")) {
        const auto y0 = parse_y0(ctx.cfg, d);
        const auto n = ctx.cfg.int_list("n").front();
        const double t = ctx.cfg.positive("t");
        const auto paths = parse_paths(ctx.cfg);
        const RMode mode = parse_r_mode(ctx.cfg, target.is_pim() ? RMode::Exact : RMode::Asymptotic);
        if (mode == RMode::Exact && !target.is_pim())
            throw ConfigError(ctx.cfg.path("r_mode"), "exact r-mode needs a parent-independent target model");
        ctx.metadata["r_mode"] = mode == RMode::Exact ? "exact" : "asymptotic";
        if (mode == RMode::Asymptotic)
            ctx.metadata["warning"] = "asymptotic r-mode: sampling-probability ratio r_n replaced by 1";
        const auto initial = TypeConfiguration::from_scaled(y0, n);
        ImportanceSpec spec{initial, n, t, paths, ctx.seed, stream_index(2, 0), mode, ctx.threads};
        const auto est = importance_expectation([](const WeightedSample&) { return 1.0; }, spec, target, proposal);
        csv.row() << "monte_carlo" << n << est.mean << std::abs(est.mean - 1.0);
        ctx.statistics["monte_carlo_mean"] = num(est.mean);
        ctx.statistics["monte_carlo_standard_error"] = num(est.standard_error);
        ctx.checks.add("monte_carlo_unit_expectation", std::abs(est.mean - 1.0) <= mc_sigmas * est.standard_error,
                       num(est.mean), num(mc_sigmas * est.standard_error));
    }
    ctx.csv = csv.str();
}

void run_asymptotics(Context& ctx) {
    const auto model = require_pim(parse_model(ctx.cfg), "sampling asymptotics are built for parent-independent models");
    const std::size_t d = model.dimension();
    const auto y0 = parse_y0(ctx.cfg, d);
    for (double v : y0)
        if (!(v > 0.0)) throw ConfigError(ctx.cfg.path("y0"), "components must be strictly positive");
    const auto ns = ctx.cfg.int_list("n");
    const double gap_max = ctx.cfg.has("tolerances") ? ctx.cfg.sub("tolerances").positive("gap_max", 0.02) : 0.02;
    ctx.tolerances["gap_max"] = gap_max;
    const auto q = model.q();

    Csv csv({"n", "log_probability", "approximation", "ratio", "gap"});
    std::vector<double> gaps;
    json rows = json::array();
    for (auto n : ns) {
        const auto config = TypeConfiguration::from_scaled(y0, n);
        const double lp = log_pim_sampling_probability(config, model.theta(), q);
        const auto y = config.scaled(n);
        // p(n y) n^{d-1} / [p~(y/|y|) |y|^{1-d}], evaluated in log space.
        const double approx = pim_asymptotic_approx(y, n, model.theta(), q);
        const double ratio = std::exp(lp - std::log(approx));
        const double gap = std::abs(ratio - 1.0);
        gaps.push_back(gap);
        csv.row() << n << lp << approx << ratio << gap;
        rows.push_back({{"n", n}, {"ratio", num(ratio)}, {"gap", num(gap)}});
    }
    ctx.statistics["rows"] = rows;
    ctx.checks.add("gap_strictly_decreasing", strictly_decreasing(gaps), to_json(gaps), nullptr);
    ctx.checks.add("gap_at_largest_n", gaps.back() < gap_max, num(gaps.back()), gap_max);
    ctx.csv = csv.str();
}

void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot open output file " + p.string());
    out << content;
    if (!out) throw Error("failed writing output file " + p.string());
}

}  // namespace

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> kinds{"simulate-backward", "simulate-forward", "gof",        "path-dev",
                                                "generator-gap",     "semigroup-gap",    "lr-check", "asymptotics"};
    return kinds;
}

std::string canonical_config(const json& config) { return config.dump(2); }

std::string env_name_for(const std::string& key_path) {
    std::string out = kEnvPrefix;
    for (char c : key_path) {
        if (c == '.')
            out += "__";
        else
            out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return out;
}

std::optional<std::string> key_path_for(const std::string& env_name) {
    const std::string prefix = kEnvPrefix;
    if (env_name.size() <= prefix.size() || env_name.compare(0, prefix.size(), prefix) != 0) return std::nullopt;
    std::string out;
    for (std::size_t i = prefix.size(); i < env_name.size(); ++i) {
        if (env_name[i] == '_' && i + 1 < env_name.size() && env_name[i + 1] == '_') {
            out += '.';
            ++i;
        } else {
            out += static_cast<char>(std::tolower(static_cast<unsigned char>(env_name[i])));
        }
    }
    return out;
}

void apply_env_overrides(json& config, const std::map<std::string, std::string>& env) {
    if (!config.is_object()) throw ConfigError("", "configuration must be a JSON object");
    for (const auto& [name, value] : env) {
        const auto path = key_path_for(name);
        if (!path) continue;
        json parsed = json::parse(value, nullptr, false);
        if (parsed.is_discarded()) parsed = value;
        json* node = &config;
        std::string segment;
        std::istringstream is(*path);
        std::vector<std::string> segments;
        while (std::getline(is, segment, '.')) segments.push_back(segment);
        for (std::size_t i = 0; i + 1 < segments.size(); ++i) {
            json& next = (*node)[segments[i]];
            if (next.is_null()) next = json::object();
            if (!next.is_object()) throw ConfigError(*path, "environment override descends into a non-object key");
            node = &next;
        }
        (*node)[segments.back()] = parsed;
    }
}

std::map<std::string, std::string> prefixed_environment() {
    std::map<std::string, std::string> out;
    for (char** e = environ; e && *e; ++e) {
        const std::string entry(*e);
        const auto eq = entry.find('=');
        if (eq == std::string::npos) continue;
        const auto name = entry.substr(0, eq);
        if (key_path_for(name)) out[name] = entry.substr(eq + 1);
    }
    return out;
}

RunResult run_experiment(const std::string& kind, const json& input, const RunOptions& options) {
    const auto& kinds = experiment_kinds();
    if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) throw ConfigError("experiment", "unknown experiment kind '" + kind + "'");
    if (!input.is_object()) throw ConfigError("", "configuration must be a JSON object");

    json config = input;
    apply_env_overrides(config, options.env);
    if (options.seed_override) config["seed"] = *options.seed_override;
    if (config.contains("experiment")) {
        if (!config["experiment"].is_string() || config["experiment"].get<std::string>() != kind)
            throw ConfigError("experiment", "does not match the requested subcommand '" + kind + "'");
    } else {
        config["experiment"] = kind;
    }
    const Cfg cfg(config, "");
    const std::uint64_t seed = cfg.unsigned_integer("seed");

    std::string csv_name = kind + ".csv", json_name = kind + ".json";
    if (cfg.has("outputs")) {
        const auto out = cfg.sub("outputs");
        csv_name = out.string("csv", csv_name);
        json_name = out.string("json", json_name);
    }

    Context ctx{kind, cfg, seed, std::max(1u, options.threads), json::object(), json::object(), json::object(), {}, {}};
    if (kind == "simulate-backward")
        run_simulate(ctx, Direction::Backward);
    else if (kind == "simulate-forward")
        run_simulate(ctx, Direction::Forward);
    else if (kind == "gof")
        run_gof(ctx);
    else if (kind == "path-dev")
        run_path_dev(ctx);
    else if (kind == "generator-gap")
        run_generator_gap(ctx);
    else if (kind == "semigroup-gap")
        run_semigroup_gap(ctx);
    else if (kind == "lr-check")
        run_lr_check(ctx);
    else
        run_asymptotics(ctx);

    RunResult result;
    result.passed = ctx.checks.all;
    result.summary = {{"experiment", kind},
                      {"version", kVersion},
                      {"seed", seed},
                      {"config", config},
                      {"statistics", ctx.statistics},
                      {"tolerances", ctx.tolerances},
                      {"checks", ctx.checks.list},
                      {"passed", result.passed},
                      {"metadata", ctx.metadata},
                      {"outputs", {{"csv", csv_name}, {"json", json_name}}}};

    const std::filesystem::path dir(options.out_dir);
    std::filesystem::create_directories(dir);
    write_file(dir / csv_name, ctx.csv);
    write_file(dir / json_name, result.summary.dump(2) + "\n");
    result.written_files = {(dir / csv_name).string(), (dir / json_name).string()};
    return result;
}

RunResult run_experiment_text(const std::string& kind, const std::string& config_text, const RunOptions& options) {
    json config = json::parse(config_text, nullptr, false);
    if (config.is_discarded()) throw ConfigError("", "configuration is not valid JSON");
    return run_experiment(kind, config, options);
}

}  // namespace coalim
