#include "starkshield/run.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "starkshield/emitter.hpp"
#include "starkshield/errors.hpp"
#include "starkshield/experiments.hpp"
#include "starkshield/parallel.hpp"
#include "starkshield/rng.hpp"
#include "starkshield/textio.hpp"
#include "starkshield/tomography.hpp"

namespace starkshield {

using nlohmann::ordered_json;

std::vector<ProtectionRow> protection_table(std::span<const double> s_values) {
  std::vector<ProtectionRow> rows;
  for (double s : s_values) {
    ProtectionRow r;
    r.s = s;
    r.rhs = (s - 1.0) / (s + 1.0);
    r.ratio = protection_ratio(s);
    r.asymptote = 1.0 / std::sqrt(s + 1.0);
    r.residual = std::abs(bessel_j0(2.0 * std::numbers::sqrt2 * r.ratio) - r.rhs);
    rows.push_back(r);
  }
  return rows;
}

void write_protection_table_csv(std::span<const ProtectionRow> rows, std::ostream& out) {
  out << "s,rhs,ratio,asymptote,residual\n";
  for (const auto& r : rows)
    out << format_double(r.s) << ',' << format_double(r.rhs) << ',' << format_double(r.ratio)
        << ',' << format_double(r.asymptote) << ',' << format_double(r.residual) << '\n';
}

NoiseValidation noise_validate(const NoiseValidateConfig& cfg) {
  cfg.ou.validate();
  cfg.rtn.validate();
  require(cfg.n_traces >= 2, "noise validation needs at least two traces");
  require(cfg.horizon > 0.0 && cfg.dt > 0.0, "noise validation needs horizon, dt > 0");
  const std::size_t n_steps = steps_for_horizon(cfg.horizon, cfg.dt);
  AutocorrelationAccumulator ou_acc(cfg.dt, n_steps + 1, cfg.lags);
  AutocorrelationAccumulator rtn_acc(cfg.dt, n_steps + 1, cfg.lags);

  struct PerTrace {
    std::vector<double> ou;
    std::vector<double> rtn;
    double jumps = 0.0;
  };
  // Chunks bound memory; results are folded in trace order.
  constexpr std::size_t chunk = 256;
  double jump_mean = 0.0, jump_m2 = 0.0;
  std::size_t seen = 0;
  for (std::size_t lo = 0; lo < cfg.n_traces; lo += chunk) {
    const std::size_t n = std::min(chunk, cfg.n_traces - lo);
    const auto part = parallel_map(n, cfg.threads, [&](std::size_t j) {
      const std::size_t i = lo + j;
      const auto ou = generate_ou_trace(cfg.ou, cfg.dt, n_steps,
                                        derive_seed(cfg.master_seed, Stream::noise_validate_ou, i));
      const auto rtn = generate_rtn_trace(
          cfg.rtn, cfg.dt, n_steps, derive_seed(cfg.master_seed, Stream::noise_validate_rtn, i));
      return PerTrace{ou_acc.trace_estimates(ou), rtn_acc.trace_estimates(rtn),
                      static_cast<double>(rtn.jump_count())};
    });
    for (const auto& p : part) {
      ou_acc.add(p.ou);
      rtn_acc.add(p.rtn);
      ++seen;
      const double d = p.jumps - jump_mean;
      jump_mean += d / static_cast<double>(seen);
      jump_m2 += d * (p.jumps - jump_mean);
    }
  }

  NoiseValidation v;
  v.ou_autocorrelation = ou_acc.result();
  v.rtn_autocorrelation = rtn_acc.result();
  v.ou_decay_rate = fit_decay_rate(v.ou_autocorrelation);
  v.rtn_decay_rate = fit_decay_rate(v.rtn_autocorrelation);
  v.rtn_mean_jumps = jump_mean;
  v.rtn_jump_variance = jump_m2 / static_cast<double>(seen - 1);
  v.rtn_jump_std_error = std::sqrt(v.rtn_jump_variance / static_cast<double>(seen));
  return v;
}

NoiseValidateConfig noise_validate_config(const RunConfig& cfg) {
  NoiseValidateConfig c;
  c.ou = {cfg.number("noise_validate.b"), cfg.number("noise_validate.tau")};
  c.rtn = {cfg.number("noise_validate.xi"), cfg.number("noise_validate.chi")};
  c.n_traces = cfg.count("noise_validate.n_traces");
  c.horizon = cfg.number("noise_validate.horizon");
  c.dt = cfg.number("noise_validate.dt");
  c.lags = cfg.list("noise_validate.lags");
  c.master_seed = cfg.master_seed();
  c.threads = cfg.threads();
  return c;
}

void write_noise_validation_csv(const NoiseValidateConfig& cfg, const NoiseValidation& v,
                                std::ostream& out) {
  const auto row = [&](const char* process, const char* quantity, double lag, double est,
                       double se, double expected) {
    out << process << ',' << quantity << ',' << format_double(lag) << ',' << format_double(est)
        << ',' << format_double(se) << ',' << format_double(expected) << '\n';
  };
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out << "process,quantity,lag,estimate,stderr,expected\n";
  for (const auto& p : v.ou_autocorrelation)
    row("ou", "autocorrelation", p.lag, p.estimate, p.std_error,
        cfg.ou.b * cfg.ou.b * std::exp(-p.lag / cfg.ou.tau));
  row("ou", "decay_rate", nan, v.ou_decay_rate, nan, 1.0 / cfg.ou.tau);
  for (const auto& p : v.rtn_autocorrelation)
    row("rtn", "autocorrelation", p.lag, p.estimate, p.std_error,
        cfg.rtn.xi * cfg.rtn.xi * std::exp(-2.0 * cfg.rtn.chi * p.lag));
  row("rtn", "decay_rate", nan, v.rtn_decay_rate, nan, 2.0 * cfg.rtn.chi);
  const double horizon = cfg.dt * static_cast<double>(steps_for_horizon(cfg.horizon, cfg.dt));
  row("rtn", "mean_jumps", horizon, v.rtn_mean_jumps, v.rtn_jump_std_error,
      cfg.rtn.chi * horizon);
}

namespace {

class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {}

  template <class Writer>
  void write(const std::string& name, Writer&& writer) {
    std::ostringstream text;
    writer(text);
    write_file_atomic(dir_ / name, text.str());
    files.push_back(name);
  }

  std::vector<std::string> files;

 private:
  std::filesystem::path dir_;
};

ordered_json number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);  // JSON has no nan/inf literals
}

ordered_json chi_json(const ChiMatrix& chi) {
  ordered_json rows = ordered_json::array();
  for (int i = 0; i < 4; ++i) {
    ordered_json row = ordered_json::array();
    for (int j = 0; j < 4; ++j) row.push_back({chi(i, j).real(), chi(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

std::string signal_name(double s, double delta) {
  return "signal_s" + format_double(s) + "_delta" + format_double(delta) + ".csv";
}

ordered_json run_noise_validate(const RunConfig& cfg, OutputDir& out) {
  const auto c = noise_validate_config(cfg);
  const auto v = noise_validate(c);
  out.write("noise_validation.csv",
            [&](std::ostream& os) { write_noise_validation_csv(c, v, os); });
  const std::size_t n_steps = steps_for_horizon(c.horizon, c.dt);
  const auto n_export = std::min<std::uint64_t>(cfg.count("noise_validate.export_traces"), c.n_traces);
  for (std::uint64_t i = 0; i < n_export; ++i) {
    const auto ou = generate_ou_trace(c.ou, c.dt, n_steps,
                                      derive_seed(c.master_seed, Stream::noise_validate_ou, i));
    const auto rtn = generate_rtn_trace(c.rtn, c.dt, n_steps,
                                        derive_seed(c.master_seed, Stream::noise_validate_rtn, i));
    out.write("trace_ou_" + std::to_string(i) + ".csv",
              [&](std::ostream& os) { write_trace_csv(ou, os); });
    out.write("trace_rtn_" + std::to_string(i) + ".csv",
              [&](std::ostream& os) { write_trace_csv(rtn, os); });
  }
  return {{"ou_decay_rate", number(v.ou_decay_rate)},
          {"rtn_decay_rate", number(v.rtn_decay_rate)},
          {"rtn_mean_jumps", number(v.rtn_mean_jumps)},
          {"rtn_jump_stderr", number(v.rtn_jump_std_error)}};
}

ordered_json run_ramsey_experiment(const RunConfig& cfg, OutputDir& out) {
  const auto rc = ramsey_config(cfg);
  const auto res = run_ramsey(rc);
  out.write("ramsey_signal.csv", [&](std::ostream& os) { write_signal_csv(res.signal, os); });
  ordered_json s = {{"t2", number(res.fit.t2)},
                    {"t2_stderr", number(res.t2_std_error)},
                    {"fit_valid", res.fit.valid},
                    {"fit_residual_rms", number(res.fit.fit_residual_rms)},
                    {"ripple", number(res.signal.ripple_amplitude)},
                    {"omega", number(rc.emitter.omega_drive)}};
  if (rc.emitter.protection_on) {
    s["omega_over_delta"] = number(rc.emitter.omega_drive / rc.emitter.delta_drive);
    double sigma = 0.0;
    if (rc.noise.kind == NoiseKind::ou) sigma = rc.noise.ou.b;
    if (rc.noise.kind == NoiseKind::rtn) sigma = rc.noise.rtn.xi;
    if (rc.noise.kind == NoiseKind::static_value) sigma = std::abs(rc.noise.static_delta);
    s["s_sigma_over_delta"] = number(rc.emitter.s * sigma / rc.emitter.delta_drive);
  }
  if (!res.fit_error.empty()) s["fit_error"] = res.fit_error;
  if (res.fit.valid && rc.noise.kind == NoiseKind::ou)
    s["gain"] = number(coherence_gain(res.fit, rc.noise.ou.b, rc.noise.ou.tau));
  return s;
}

ordered_json run_gain_sweep(const RunConfig& cfg, OutputDir& out) {
  const auto base = ramsey_config(cfg);
  const auto s_values = cfg.list("sweep.s_values");
  const auto deltas = cfg.list("sweep.delta_values");
  const auto rows = gain_sweep(s_values, deltas, base);
  out.write("gain_table.csv", [&](std::ostream& os) { write_gain_table_csv(rows, os); });
  ordered_json failures = ordered_json::array();
  for (const auto& r : rows) {
    if (cfg.flag("sweep.write_signals") && !r.signal.times.empty())
      out.write(signal_name(r.s, r.delta),
                [&](std::ostream& os) { write_signal_csv(r.signal, os); });
    if (!r.error.empty())
      failures.push_back({{"s", r.s}, {"delta", r.delta}, {"error", r.error}});
  }
  return {{"rows", rows.size()}, {"row_errors", failures}};
}

ordered_json run_spectroscopy(const RunConfig& cfg, OutputDir& out) {
  const auto sc = spectroscopy_config(cfg);
  const auto map = probe_response_map(sc);
  out.write("probe_map.csv", [&](std::ostream& os) { write_map_csv(map, os); });
  ordered_json peaks = ordered_json::array();
  for (double chi : sc.chis) {
    const MapPoint* best = nullptr;
    for (const auto& p : map)
      if (p.chi == chi && (!best || p.excitation > best->excitation)) best = &p;
    peaks.push_back({{"chi", chi}, {"peak_delta_omega", best->delta_omega},
                     {"peak_excitation", best->excitation}});
  }
  return {{"protection", sc.emitter.protection_on},
          {"omega", number(sc.emitter.omega_drive)},
          {"peaks", peaks}};
}

ordered_json run_qpt(const RunConfig& cfg, OutputDir& out) {
  ordered_json gates = ordered_json::object();
  const auto names = qpt_gate_names(cfg);
  const auto configs = tomography_configs(cfg);
  for (std::size_t g = 0; g < configs.size(); ++g) {
    const auto res = qpt_experiment(configs[g]);
    const std::string& name = names[g];
    out.write("chi_" + name + "_ideal.csv", [&](std::ostream& os) { write_chi_csv(res.chi_ideal, os); });
    out.write("chi_" + name + "_noisy.csv", [&](std::ostream& os) { write_chi_csv(res.chi_noisy, os); });
    out.write("chi_" + name + "_protected.csv",
              [&](std::ostream& os) { write_chi_csv(res.chi_protected, os); });
    gates[name] = {{"fidelity_ideal", res.fidelity_ideal},
                   {"fidelity_noisy", res.fidelity_noisy},
                   {"fidelity_protected", res.fidelity_protected},
                   {"gate_duration", configs[g].gate.end_time()},
                   {"chi_target", chi_json(res.chi_target)}};
  }
  const auto& c0 = configs.front();
  ordered_json summary = {{"parameters",
                           {{"xi", c0.rtn.xi},
                            {"chi", c0.rtn.chi},
                            {"s", c0.emitter.s},
                            {"delta", c0.emitter.delta_drive},
                            {"omega", c0.emitter.omega_drive},
                            {"rabi", c0.gate.rabi},
                            {"shots", c0.shots},
                            {"exact", c0.exact_expectations},
                            {"n_realizations", c0.n_realizations},
                            {"seed", c0.master_seed}}},
                          {"gates", gates}};
  out.write("qpt_summary.json", [&](std::ostream& os) { os << summary.dump(2) << '\n'; });
  return gates;
}

ordered_json run_protection_table(const RunConfig& cfg, OutputDir& out) {
  const auto s_values = cfg.list("protection_table.s_values");
  for (double s : s_values)
    if (!(s >= 1.0)) fail(ErrorCode::config, "protection table s values must be >= 1");
  const auto rows = protection_table(s_values);
  out.write("protection_table.csv",
            [&](std::ostream& os) { write_protection_table_csv(rows, os); });
  double worst = 0.0;
  for (const auto& r : rows) worst = std::max(worst, r.residual);
  return {{"rows", rows.size()}, {"max_residual", worst}};
}

}  // namespace

RunOutcome run_experiment(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir))
    fail(ErrorCode::io, "cannot create output directory '" + out_dir.string() + "'");
  fs::remove(out_dir / kManifestName, ec);
  fs::remove(out_dir / kPartialMarker, ec);

  OutputDir out(out_dir);
  const auto start = std::chrono::steady_clock::now();
  ordered_json summary;
  try {
    switch (cfg.kind) {
      case ExperimentKind::noise_validate: summary = run_noise_validate(cfg, out); break;
      case ExperimentKind::ramsey: summary = run_ramsey_experiment(cfg, out); break;
      case ExperimentKind::gain_sweep: summary = run_gain_sweep(cfg, out); break;
      case ExperimentKind::spectroscopy: summary = run_spectroscopy(cfg, out); break;
      case ExperimentKind::qpt: summary = run_qpt(cfg, out); break;
      case ExperimentKind::protection_table: summary = run_protection_table(cfg, out); break;
    }
  } catch (const std::exception& e) {
    std::ostringstream marker;
    marker << "experiment: " << to_string(cfg.kind) << "\nerror: " << e.what() << "\nwritten:";
    for (const auto& f : out.files) marker << ' ' << f;
    marker << '\n';
    write_file_atomic(out_dir / kPartialMarker, marker.str());
    throw;
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  ordered_json manifest = {{"tool", "starkshield"},
                           {"version", STARKSHIELD_VERSION},
                           {"experiment", to_string(cfg.kind)},
                           {"seed", cfg.master_seed()},
                           {"threads", cfg.threads()},
                           {"unit", base_unit(cfg.kind)},
                           {"config", echo_config(cfg)},
                           {"duration_seconds", seconds},
                           {"files", out.files},
                           {"summary", summary}};
  write_file_atomic(out_dir / kManifestName, manifest.dump(2) + "\n");
  return {out.files, summary.dump()};
}

}  // namespace starkshield
