/* C interface to the starkshield simulator. All functions are thread-safe
 * with respect to distinct handles; ss_last_error() is per thread. */
#ifndef STARKSHIELD_H
#define STARKSHIELD_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(STARKSHIELD_BUILDING_LIBRARY)
#define SS_API __attribute__((visibility("default")))
#else
#define SS_API
#endif

typedef enum ss_status {
  SS_OK = 0,
  SS_ERR_INVALID_ARGUMENT = 1,
  SS_ERR_OUT_OF_RANGE = 2,
  SS_ERR_SINGULARITY = 3,
  SS_ERR_FIT_FAILED = 4,
  SS_ERR_CONFIG = 5,
  SS_ERR_NUMERICAL = 6,
  SS_ERR_IO = 7,
  SS_ERR_INTERNAL = 8
} ss_status;

typedef struct ss_config ss_config;
typedef struct ss_noise_trace ss_noise_trace;

SS_API const char* ss_version(void);
SS_API const char* ss_status_name(ss_status status);
/* Message of the last failed call on this thread; "" after a success. */
SS_API const char* ss_last_error(void);

/* Configuration. `experiment` may be NULL when the text sets run.experiment.
 * overrides holds n_overrides "section.key=value" strings applied before the
 * config is resolved, so they may supply required keys. */
SS_API ss_status ss_config_load(const char* path, const char* experiment,
                                const char* const* overrides, size_t n_overrides,
                                ss_config** out);
SS_API ss_status ss_config_parse(const char* ini_text, const char* experiment,
                                 const char* const* overrides, size_t n_overrides,
                                 ss_config** out);
/* key is "section.key"; the config is re-resolved and left unchanged on error. */
SS_API ss_status ss_config_set(ss_config* cfg, const char* key, const char* value);
SS_API ss_status ss_config_set_seed(ss_config* cfg, uint64_t seed);
SS_API ss_status ss_config_set_threads(ss_config* cfg, unsigned threads);
/* String getters copy into buf (NUL-terminated, truncated to cap) and report
 * the full length, excluding the NUL, through needed when non-NULL. */
SS_API ss_status ss_config_get(const ss_config* cfg, const char* key, char* buf, size_t cap,
                               size_t* needed);
SS_API ss_status ss_config_echo(const ss_config* cfg, char* buf, size_t cap, size_t* needed);
SS_API const char* ss_config_experiment(const ss_config* cfg);
SS_API int ss_config_equal(const ss_config* a, const ss_config* b);
SS_API void ss_config_destroy(ss_config* cfg);

/* Runs the experiment, writing CSVs and manifest.json into out_dir. */
SS_API ss_status ss_run(const ss_config* cfg, const char* out_dir);

/* Noise traces: n_steps + 1 samples on the grid t_k = k dt. */
SS_API ss_status ss_noise_ou(double b, double tau, double dt, uint64_t n_steps, uint64_t seed,
                             ss_noise_trace** out);
SS_API ss_status ss_noise_rtn(double xi, double chi, double dt, uint64_t n_steps, uint64_t seed,
                              ss_noise_trace** out);
SS_API size_t ss_noise_length(const ss_noise_trace* trace);
SS_API double ss_noise_dt(const ss_noise_trace* trace);
SS_API uint64_t ss_noise_jump_count(const ss_noise_trace* trace);
/* Copies min(cap, length) samples. */
SS_API ss_status ss_noise_copy(const ss_noise_trace* trace, double* buf, size_t cap);
SS_API ss_status ss_noise_write_csv(const ss_noise_trace* trace, const char* path);
SS_API void ss_noise_destroy(ss_noise_trace* trace);

/* Scalar physics helpers. */
SS_API double ss_bessel_j0(double x);
SS_API ss_status ss_protection_ratio(double s, double* out);
SS_API ss_status ss_stark_shift_linear(double omega, double delta, double s, double dv,
                                       double* out);
SS_API ss_status ss_stark_shift_exact(double omega, double delta, double s, double dv,
                                      double* out);
SS_API ss_status ss_analytic_fid(double b, double tau, double t, double* out);

#ifdef __cplusplus
}
#endif

#endif /* STARKSHIELD_H */
