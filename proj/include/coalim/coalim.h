/* C interface to the coalim library. All functions return a coalim_status;
 * on failure coalim_last_error() describes the problem for the calling thread. */
#ifndef COALIM_H
#define COALIM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define COALIM_API __declspec(dllexport)
#else
#define COALIM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum coalim_status {
    COALIM_OK = 0,
    COALIM_ERR_INVALID_ARGUMENT = 1,
    COALIM_ERR_DOMAIN = 2,
    COALIM_ERR_BUDGET_EXCEEDED = 3,
    COALIM_ERR_ORACLE_MISSING = 4,
    COALIM_ERR_REDUCIBLE = 5,
    COALIM_ERR_CONFIG = 6,
    COALIM_ERR_RUNTIME = 7
} coalim_status;

typedef enum coalim_direction { COALIM_BACKWARD = 0, COALIM_FORWARD = 1 } coalim_direction;

typedef struct coalim_model coalim_model;
typedef struct coalim_path coalim_path;

COALIM_API const char* coalim_version(void);
COALIM_API const char* coalim_status_name(coalim_status status);

/* Message and config field (may be empty) of the last failure on this thread. */
COALIM_API const char* coalim_last_error(void);
COALIM_API const char* coalim_last_error_field(void);

/* Models. `q` has d entries; `p` is d*d row-major. */
COALIM_API coalim_status coalim_model_create_pim(double theta, const double* q, size_t d, coalim_model** out);
COALIM_API coalim_status coalim_model_create(double theta, const double* p, size_t d, coalim_model** out);
COALIM_API void coalim_model_free(coalim_model* model);
COALIM_API coalim_status coalim_model_dimension(const coalim_model* model, size_t* out);
COALIM_API coalim_status coalim_model_is_pim(const coalim_model* model, int* out);
COALIM_API coalim_status coalim_stationary_distribution(const coalim_model* model, double* out);

/* Kernels from integer counts (length d). `out` receives d + d*d entries:
 * coalescence or growth of j at index j, mutation i -> j at d + i*d + j. */
COALIM_API coalim_status coalim_backward_probabilities(const coalim_model* model, const int64_t* counts, double* out);
COALIM_API coalim_status coalim_forward_probabilities(const coalim_model* model, const int64_t* counts, double* out);

/* Log PIM sampling probability of the counts. */
COALIM_API coalim_status coalim_log_sampling_probability(const coalim_model* model, const int64_t* counts,
                                                          double* out);

/* Limit cumulative intensity Lambda_ij(t, y), d*d row-major. */
COALIM_API coalim_status coalim_cumulative_intensity(const coalim_model* model, const double* y, double t,
                                                      coalim_direction direction, double* out);

/* Scaled paths. `stream` selects an independent random stream under `seed`. */
COALIM_API coalim_status coalim_simulate_backward(const coalim_model* model, const int64_t* counts, int64_t scale,
                                                   size_t max_steps, uint64_t seed, uint64_t stream,
                                                   coalim_path** out);
COALIM_API coalim_status coalim_simulate_forward(const coalim_model* model, const int64_t* counts, int64_t scale,
                                                  size_t steps, uint64_t seed, uint64_t stream, coalim_path** out);
COALIM_API void coalim_path_free(coalim_path* path);
COALIM_API coalim_status coalim_path_steps(const coalim_path* path, size_t* out);
COALIM_API coalim_status coalim_path_absorbed(const coalim_path* path, int* out);
/* State after `step` jumps: d counts and d*d mutation counts. */
COALIM_API coalim_status coalim_path_state(const coalim_path* path, size_t step, int64_t* counts_out,
                                           int64_t* mutations_out);

/* Experiments. */
COALIM_API size_t coalim_experiment_count(void);
COALIM_API const char* coalim_experiment_name(size_t index);

/* Runs experiment `kind` from JSON text, writing its CSV and JSON summary
 * under `out_dir`. `seed_override` may be NULL. When `use_environment` is
 * nonzero, COALIM_* variables override config keys. On success *summary_out
 * (free with coalim_string_free) holds the JSON summary and *passed_out
 * whether every check passed. */
COALIM_API coalim_status coalim_run_experiment(const char* kind, const char* config_json, const char* out_dir,
                                               const uint64_t* seed_override, unsigned threads, int use_environment,
                                               char** summary_out, int* passed_out);
COALIM_API void coalim_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
