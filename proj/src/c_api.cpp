#include "coalim/coalim.h"

#include "coalim/chain.hpp"
#include "coalim/experiments.hpp"
#include "coalim/forward.hpp"
#include "coalim/limit.hpp"
#include "coalim/model.hpp"
#include "coalim/sampling.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

struct coalim_model {
    coalim::MutationModel model;
};

struct coalim_path {
    coalim::ScaledPath path;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_field;

coalim_status fail(coalim_status s, const std::string& message, const std::string& field = {}) {
    g_error = message;
    g_field = field;
    return s;
}

template <class Fn>
coalim_status guarded(Fn&& fn) {
    try {
        fn();
        g_error.clear();
        g_field.clear();
        return COALIM_OK;
    } catch (const coalim::ConfigError& e) {
        return fail(COALIM_ERR_CONFIG, e.what(), e.field());
    } catch (const coalim::InvalidArgument& e) {
        return fail(COALIM_ERR_INVALID_ARGUMENT, e.what());
    } catch (const coalim::DomainError& e) {
        return fail(COALIM_ERR_DOMAIN, e.what());
    } catch (const coalim::BudgetExceeded& e) {
        return fail(COALIM_ERR_BUDGET_EXCEEDED, e.what());
    } catch (const coalim::OracleMissing& e) {
        return fail(COALIM_ERR_ORACLE_MISSING, e.what());
    } catch (const coalim::ReducibleMatrix& e) {
        return fail(COALIM_ERR_REDUCIBLE, e.what());
    } catch (const std::bad_alloc&) {
        return fail(COALIM_ERR_RUNTIME, "out of memory");
    } catch (const std::exception& e) {
        return fail(COALIM_ERR_RUNTIME, e.what());
    }
}

#define COALIM_REQUIRE(cond, name)                                                      \
    do {                                                                               \
        if (!(cond)) return fail(COALIM_ERR_INVALID_ARGUMENT, name " must not be null"); \
    } while (0)

coalim::TypeConfiguration counts_of(const coalim_model* m, const int64_t* counts) {
    const std::size_t d = m->model.dimension();
    return coalim::TypeConfiguration(std::vector<std::int64_t>(counts, counts + d));
}

void copy_table(const std::vector<double>& table, double* out) { std::copy(table.begin(), table.end(), out); }

}  // namespace

extern "C" {

const char* coalim_version(void) { return coalim::kVersion; }

const char* coalim_status_name(coalim_status status) {
    switch (status) {
        case COALIM_OK: return "ok";
        case COALIM_ERR_INVALID_ARGUMENT: return "invalid_argument";
        case COALIM_ERR_DOMAIN: return "domain_error";
        case COALIM_ERR_BUDGET_EXCEEDED: return "budget_exceeded";
        case COALIM_ERR_ORACLE_MISSING: return "oracle_missing";
        case COALIM_ERR_REDUCIBLE: return "reducible_matrix";
        case COALIM_ERR_CONFIG: return "config_error";
        case COALIM_ERR_RUNTIME: return "runtime_error";
    }
    return "unknown";
}

const char* coalim_last_error(void) { return g_error.c_str(); }
const char* coalim_last_error_field(void) { return g_field.c_str(); }

coalim_status coalim_model_create_pim(double theta, const double* q, size_t d, coalim_model** out) {
    COALIM_REQUIRE(q, "q");
    COALIM_REQUIRE(out, "out");
    return guarded([&] {
        *out = new coalim_model{coalim::MutationModel::pim(theta, std::vector<double>(q, q + d))};
    });
}

coalim_status coalim_model_create(double theta, const double* p, size_t d, coalim_model** out) {
    COALIM_REQUIRE(p, "p");
    COALIM_REQUIRE(out, "out");
    return guarded([&] {
        coalim::MutationModel model(theta, d, std::vector<double>(p, p + d * d));
        const auto report = model.validate();
        if (!report.valid) throw coalim::InvalidArgument(report.violations.front());
        *out = new coalim_model{std::move(model)};
    });
}

void coalim_model_free(coalim_model* model) { delete model; }

coalim_status coalim_model_dimension(const coalim_model* model, size_t* out) {
    COALIM_REQUIRE(model, "model");
    COALIM_REQUIRE(out, "out");
    *out = model->model.dimension();
    return COALIM_OK;
}

coalim_status coalim_model_is_pim(const coalim_model* model, int* out) {
    COALIM_REQUIRE(model, "model");
    COALIM_REQUIRE(out, "out");
    *out = model->model.is_pim() ? 1 : 0;
    return COALIM_OK;
}

coalim_status coalim_stationary_distribution(const coalim_model* model, double* out) {
    COALIM_REQUIRE(model, "model");
    COALIM_REQUIRE(out, "out");
    return guarded([&] { copy_table(coalim::stationary_distribution(model->model), out); });
}

coalim_status coalim_backward_probabilities(const coalim_model* model, const int64_t* counts, double* out) {
    COALIM_REQUIRE(model, "model");
    COALIM_REQUIRE(counts, "counts");
    COALIM_REQUIRE(out, "out");
    return guarded([&] {
        std::vector<double> table;
        coalim::backward_probability_table(counts_of(model, counts), model->model, table);
        copy_table(table, out);
    });
}

coalim_status coalim_forward_probabilities(const coalim_model* model, const int64_t* counts, double* out) {
    COALIM_REQUIRE(model, "model");
    COALIM_REQUIRE(counts, "counts");
    COALIM_REQUIRE(out, "out");
    return guarded([&] {
        std::vector<double> table;
        coalim::forward_event_table(counts_of(model, counts), model->model, table);
        copy_table(table, out);
    });
}

coalim_status coalim_log_sampling_probability(const coalim_model* model, const int64_t* counts, double* out) {
    COALIM_REQUIRE(model, "model");
    COALIM_REQUIRE(counts, "counts");
    COALIM_REQUIRE(out, "out");
    return guarded([&] {
        if (!model->model.is_pim()) throw coalim::InvalidArgument("sampling probabilities need a PIM model");
        *out = coalim::log_pim_sampling_probability(counts_of(model, counts), model->model.theta(), model->model.q());
    });
}

coalim_status coalim_cumulative_intensity(const coalim_model* model, const double* y, double t,
                                          coalim_direction direction, double* out) {
    COALIM_REQUIRE(model, "model");
    COALIM_REQUIRE(y, "y");
    COALIM_REQUIRE(out, "out");
    return guarded([&] {
        const std::vector<double> yy(y, y + model->model.dimension());
        const auto dir = direction == COALIM_FORWARD ? coalim::Direction::Forward : coalim::Direction::Backward;
        copy_table(coalim::cumulative_intensity(yy, t, model->model, dir).matrix, out);
    });
}

coalim_status coalim_simulate_backward(const coalim_model* model, const int64_t* counts, int64_t scale,
                                       size_t max_steps, uint64_t seed, uint64_t stream, coalim_path** out) {
    COALIM_REQUIRE(model, "model");
    COALIM_REQUIRE(counts, "counts");
    COALIM_REQUIRE(out, "out");
    return guarded([&] {
        auto rng = coalim::Rng::for_stream(seed, stream);
        *out = new coalim_path{coalim::simulate_backward(counts_of(model, counts), model->model, scale, rng, max_steps)};
    });
}

coalim_status coalim_simulate_forward(const coalim_model* model, const int64_t* counts, int64_t scale, size_t steps,
                                      uint64_t seed, uint64_t stream, coalim_path** out) {
    COALIM_REQUIRE(model, "model");
    COALIM_REQUIRE(counts, "counts");
    COALIM_REQUIRE(out, "out");
    return guarded([&] {
        auto rng = coalim::Rng::for_stream(seed, stream);
        *out = new coalim_path{coalim::simulate_forward(counts_of(model, counts), model->model, scale, steps, rng)};
    });
}

void coalim_path_free(coalim_path* path) { delete path; }

coalim_status coalim_path_steps(const coalim_path* path, size_t* out) {
    COALIM_REQUIRE(path, "path");
    COALIM_REQUIRE(out, "out");
    *out = path->path.steps();
    return COALIM_OK;
}

coalim_status coalim_path_absorbed(const coalim_path* path, int* out) {
    COALIM_REQUIRE(path, "path");
    COALIM_REQUIRE(out, "out");
    *out = path->path.absorbed ? 1 : 0;
    return COALIM_OK;
}

coalim_status coalim_path_state(const coalim_path* path, size_t step, int64_t* counts_out, int64_t* mutations_out) {
    COALIM_REQUIRE(path, "path");
    return guarded([&] {
        const auto [config, m] = path->path.state_at_step(step);
        if (counts_out) std::copy(config.counts.begin(), config.counts.end(), counts_out);
        if (mutations_out) std::copy(m.entries().begin(), m.entries().end(), mutations_out);
    });
}

size_t coalim_experiment_count(void) { return coalim::experiment_kinds().size(); }

const char* coalim_experiment_name(size_t index) {
    const auto& kinds = coalim::experiment_kinds();
    return index < kinds.size() ? kinds[index].c_str() : nullptr;
}

coalim_status coalim_run_experiment(const char* kind, const char* config_json, const char* out_dir,
                                    const uint64_t* seed_override, unsigned threads, int use_environment,
                                    char** summary_out, int* passed_out) {
    COALIM_REQUIRE(kind, "kind");
    COALIM_REQUIRE(config_json, "config_json");
    return guarded([&] {
        coalim::RunOptions opts;
        opts.out_dir = out_dir ? out_dir : ".";
        if (seed_override) opts.seed_override = *seed_override;
        opts.threads = threads;
        if (use_environment) opts.env = coalim::prefixed_environment();
        const auto result = coalim::run_experiment_text(kind, config_json, opts);
        if (passed_out) *passed_out = result.passed ? 1 : 0;
        if (summary_out) {
            const auto text = result.summary.dump(2);
            char* buf = static_cast<char*>(std::malloc(text.size() + 1));
            if (!buf) throw std::bad_alloc();
            std::memcpy(buf, text.c_str(), text.size() + 1);
            *summary_out = buf;
        }
    });
}

void coalim_string_free(char* s) { std::free(s); }

}  // extern "C"
