#include "starkshield/starkshield.h"

#include <cstring>
#include <sstream>
#include <string>
#include <vector>

#include "starkshield/config.hpp"
#include "starkshield/emitter.hpp"
#include "starkshield/errors.hpp"
#include "starkshield/experiments.hpp"
#include "starkshield/noise.hpp"
#include "starkshield/run.hpp"
#include "starkshield/textio.hpp"

struct ss_config {
  starkshield::RunConfig cfg;
};

struct ss_noise_trace {
  starkshield::NoiseTrace trace;
};

namespace {

thread_local std::string g_last_error;

ss_status status_of(starkshield::ErrorCode code) {
  using starkshield::ErrorCode;
  switch (code) {
    case ErrorCode::invalid_argument: return SS_ERR_INVALID_ARGUMENT;
    case ErrorCode::out_of_range: return SS_ERR_OUT_OF_RANGE;
    case ErrorCode::singularity: return SS_ERR_SINGULARITY;
    case ErrorCode::fit_failed: return SS_ERR_FIT_FAILED;
    case ErrorCode::config: return SS_ERR_CONFIG;
    case ErrorCode::numerical: return SS_ERR_NUMERICAL;
    case ErrorCode::io: return SS_ERR_IO;
  }
  return SS_ERR_INTERNAL;
}

template <class Fn>
ss_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return SS_OK;
  } catch (const starkshield::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SS_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SS_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return SS_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) starkshield::fail(starkshield::ErrorCode::invalid_argument, std::string(what) + " is NULL");
}

void copy_out(const std::string& s, char* buf, size_t cap, size_t* needed) {
  if (needed) *needed = s.size();
  if (buf && cap > 0) {
    const size_t n = std::min(cap - 1, s.size());
    std::memcpy(buf, s.data(), n);
    buf[n] = '\0';
  }
}

std::string_view opt(const char* s) { return s ? std::string_view(s) : std::string_view(); }

std::vector<starkshield::Override> overrides_from(const char* const* items, size_t n) {
  if (n > 0) need(items, "overrides");
  std::vector<starkshield::Override> out;
  for (size_t i = 0; i < n; ++i) {
    need(items[i], "override");
    out.push_back(starkshield::parse_override(items[i]));
  }
  return out;
}

}  // namespace

extern "C" {

const char* ss_version(void) { return STARKSHIELD_VERSION; }

const char* ss_status_name(ss_status status) {
  switch (status) {
    case SS_OK: return "ok";
    case SS_ERR_INVALID_ARGUMENT: return "invalid-argument";
    case SS_ERR_OUT_OF_RANGE: return "out-of-range";
    case SS_ERR_SINGULARITY: return "singularity";
    case SS_ERR_FIT_FAILED: return "fit-failed";
    case SS_ERR_CONFIG: return "config";
    case SS_ERR_NUMERICAL: return "numerical";
    case SS_ERR_IO: return "io";
    case SS_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* ss_last_error(void) { return g_last_error.c_str(); }

ss_status ss_config_load(const char* path, const char* experiment,
                         const char* const* overrides, size_t n_overrides, ss_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    const auto ov = overrides_from(overrides, n_overrides);
    *out = new ss_config{starkshield::load_config(path, ov, opt(experiment))};
  });
}

ss_status ss_config_parse(const char* ini_text, const char* experiment,
                          const char* const* overrides, size_t n_overrides, ss_config** out) {
  return guarded([&] {
    need(ini_text, "ini_text");
    need(out, "out");
    *out = nullptr;
    const auto ov = overrides_from(overrides, n_overrides);
    *out = new ss_config{starkshield::parse_config(ini_text, ov, opt(experiment))};
  });
}

ss_status ss_config_set(ss_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    need(cfg, "cfg");
    need(key, "key");
    need(value, "value");
    const starkshield::Override o{key, value};
    cfg->cfg = starkshield::with_overrides(cfg->cfg, {&o, 1});
  });
}

ss_status ss_config_set_seed(ss_config* cfg, uint64_t seed) {
  return ss_config_set(cfg, "run.seed", std::to_string(seed).c_str());
}

ss_status ss_config_set_threads(ss_config* cfg, unsigned threads) {
  return ss_config_set(cfg, "run.threads", std::to_string(threads).c_str());
}

ss_status ss_config_get(const ss_config* cfg, const char* key, char* buf, size_t cap,
                        size_t* needed) {
  return guarded([&] {
    need(cfg, "cfg");
    need(key, "key");
    copy_out(cfg->cfg.get(key), buf, cap, needed);
  });
}

ss_status ss_config_echo(const ss_config* cfg, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    need(cfg, "cfg");
    copy_out(starkshield::echo_config(cfg->cfg), buf, cap, needed);
  });
}

const char* ss_config_experiment(const ss_config* cfg) {
  return cfg ? starkshield::to_string(cfg->cfg.kind) : "";
}

int ss_config_equal(const ss_config* a, const ss_config* b) {
  return a && b && a->cfg == b->cfg ? 1 : 0;
}

void ss_config_destroy(ss_config* cfg) { delete cfg; }

ss_status ss_run(const ss_config* cfg, const char* out_dir) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out_dir, "out_dir");
    starkshield::run_experiment(cfg->cfg, out_dir);
  });
}

ss_status ss_noise_ou(double b, double tau, double dt, uint64_t n_steps, uint64_t seed,
                      ss_noise_trace** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    *out = new ss_noise_trace{starkshield::generate_ou_trace({b, tau}, dt, n_steps, seed)};
  });
}

ss_status ss_noise_rtn(double xi, double chi, double dt, uint64_t n_steps, uint64_t seed,
                       ss_noise_trace** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    *out = new ss_noise_trace{starkshield::generate_rtn_trace({xi, chi}, dt, n_steps, seed)};
  });
}

size_t ss_noise_length(const ss_noise_trace* trace) { return trace ? trace->trace.size() : 0; }

double ss_noise_dt(const ss_noise_trace* trace) { return trace ? trace->trace.dt() : 0.0; }

uint64_t ss_noise_jump_count(const ss_noise_trace* trace) {
  return trace ? trace->trace.jump_count() : 0;
}

ss_status ss_noise_copy(const ss_noise_trace* trace, double* buf, size_t cap) {
  return guarded([&] {
    need(trace, "trace");
    need(buf, "buf");
    const auto v = trace->trace.values();
    std::copy_n(v.begin(), std::min(cap, v.size()), buf);
  });
}

ss_status ss_noise_write_csv(const ss_noise_trace* trace, const char* path) {
  return guarded([&] {
    need(trace, "trace");
    need(path, "path");
    std::ostringstream text;
    starkshield::write_trace_csv(trace->trace, text);
    starkshield::write_file_atomic(path, text.str());
  });
}

void ss_noise_destroy(ss_noise_trace* trace) { delete trace; }

double ss_bessel_j0(double x) { return starkshield::bessel_j0(x); }

ss_status ss_protection_ratio(double s, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = starkshield::protection_ratio(s);
  });
}

ss_status ss_stark_shift_linear(double omega, double delta, double s, double dv, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = starkshield::stark_shift_linear(omega, delta, s, dv);
  });
}

ss_status ss_stark_shift_exact(double omega, double delta, double s, double dv, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = starkshield::stark_shift_exact(omega, delta, s, dv);
  });
}

ss_status ss_analytic_fid(double b, double tau, double t, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = starkshield::analytic_fid(b, tau, t);
  });
}

}  // extern "C"
