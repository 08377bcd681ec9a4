#include "starkshield/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include <boost/math/tools/minima.hpp>

#include "starkshield/errors.hpp"
#include "starkshield/parallel.hpp"
#include "starkshield/rng.hpp"
#include "starkshield/textio.hpp"

namespace starkshield {

void RamseyConfig::validate() const {
  emitter.validate();
  noise.validate();
  step.validate();
  require(std::isfinite(horizon) && horizon > 0.0, "Ramsey horizon must be > 0");
  require(n_trajectories >= 1, "n_trajectories must be >= 1");
  require(n_sample_times >= 2, "n_sample_times must be >= 2");
  if (noise_dt) require(*noise_dt > 0.0, "noise dt must be > 0");
}

std::vector<double> uniform_sample_times(double horizon, std::size_t n) {
  require(n >= 2, "need at least two sample times");
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i)
    t[i] = horizon * static_cast<double>(i) / static_cast<double>(n - 1);
  t.back() = horizon;
  return t;
}

PureState ramsey_initial_state() {
  PureState psi;
  psi.amplitudes(0) = (1.0 / std::numbers::sqrt2);
  psi.amplitudes(1) = (1.0 / std::numbers::sqrt2);
  return psi;
}

std::vector<double> ramsey_trajectory(const NoiseTrace& noise,
                                      const EmitterConfig& emitter,
                                      std::span<const double> sample_times,
                                      const StepControl& step) {
  require(!sample_times.empty(), "need at least one sample time");
  HamiltonianSpec spec(emitter, noise);
  const auto evo = evolve_pure(ramsey_initial_state(), spec, 0.0, sample_times.back(),
                               step, sample_times);
  std::vector<double> out(evo.samples.size());
  std::transform(evo.samples.begin(), evo.samples.end(), out.begin(), coherence_signal);
  return out;
}

namespace {

using SignalMatrix = std::vector<std::vector<double>>;

SignalMatrix simulate_trajectories(const RamseyConfig& cfg, std::span<const double> times) {
  cfg.validate();
  return parallel_map(cfg.n_trajectories, cfg.threads, [&](std::size_t i) {
    const auto seed = derive_seed(cfg.master_seed, Stream::ramsey_noise, i);
    const auto noise = cfg.noise.realize(cfg.horizon, cfg.noise_dt, seed);
    return ramsey_trajectory(noise, cfg.emitter, times, cfg.step);
  });
}

// Mean and standard error over trajectories [begin, end) minus [skip_b, skip_e),
// accumulated in trajectory order.
EnsembleSignal reduce(const SignalMatrix& rows, std::span<const double> times,
                      std::size_t skip_begin = 0, std::size_t skip_end = 0) {
  EnsembleSignal sig;
  sig.times.assign(times.begin(), times.end());
  const std::size_t m = times.size();
  std::vector<double> mean(m, 0.0), m2(m, 0.0);
  std::size_t count = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i >= skip_begin && i < skip_end) continue;
    ++count;
    const double inv = 1.0 / static_cast<double>(count);
    for (std::size_t k = 0; k < m; ++k) {
      const double d = rows[i][k] - mean[k];
      mean[k] += d * inv;
      m2[k] += d * (rows[i][k] - mean[k]);
    }
  }
  sig.mean = mean;
  sig.std_error.resize(m);
  for (std::size_t k = 0; k < m; ++k)
    sig.std_error[k] = count > 1 ? std::sqrt(m2[k] / static_cast<double>(count - 1) /
                                             static_cast<double>(count))
                                 : 0.0;
  return sig;
}

void attach_ripple(EnsembleSignal& sig, T2Fit& fit, std::string& error, FitMethod method) {
  try {
    fit = fit_t2(sig, method);
    if (fit.valid) sig.ripple_amplitude = ripple_amplitude(sig, fit);
  } catch (const Error& e) {
    error = e.what();
    fit = T2Fit{};
  }
}

}  // namespace

EnsembleSignal ramsey_ensemble(const RamseyConfig& cfg) {
  const auto times = uniform_sample_times(cfg.horizon, cfg.n_sample_times);
  const auto rows = simulate_trajectories(cfg, times);
  EnsembleSignal sig = reduce(rows, times);
  T2Fit fit;
  std::string err;
  attach_ripple(sig, fit, err, cfg.fit_method);
  return sig;
}

RamseyResult run_ramsey(const RamseyConfig& cfg) {
  const auto times = uniform_sample_times(cfg.horizon, cfg.n_sample_times);
  const auto rows = simulate_trajectories(cfg, times);
  RamseyResult res;
  res.signal = reduce(rows, times);
  attach_ripple(res.signal, res.fit, res.fit_error, cfg.fit_method);

  constexpr std::size_t blocks = 10;
  const std::size_t n = rows.size();
  if (!res.fit.valid || n < 2 * blocks) return res;
  std::vector<double> t2s;
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t lo = b * n / blocks, hi = (b + 1) * n / blocks;
    try {
      const auto f = fit_t2(reduce(rows, times, lo, hi), cfg.fit_method);
      if (!f.valid) return res;
      t2s.push_back(f.t2);
    } catch (const Error&) {
      return res;
    }
  }
  double mean = 0.0;
  for (double v : t2s) mean += v;
  mean /= blocks;
  double ss = 0.0;
  for (double v : t2s) ss += (v - mean) * (v - mean);
  res.t2_std_error = std::sqrt(ss * (blocks - 1) / blocks);
  return res;
}

double analytic_fid_raw(double b, double tau, double t) {
  require(b > 0.0 && tau > 0.0, "analytic FID needs b > 0 and tau > 0");
  require(t >= 0.0, "analytic FID needs t >= 0");
  const double x = t / tau;
  return std::exp(-b * b * tau * tau * (std::expm1(-x) + x));
}

double analytic_fid(double b, double tau, double t) {
  return 0.5 * (1.0 + analytic_fid_raw(b, tau, t));
}

namespace {

double decay_model(double t, double t2) { return 0.5 * (1.0 + std::exp(-t / t2)); }

double sse(const EnsembleSignal& sig, double t2) {
  double acc = 0.0;
  for (std::size_t i = 0; i < sig.times.size(); ++i) {
    const double r = sig.mean[i] - decay_model(sig.times[i], t2);
    acc += r * r;
  }
  return acc;
}

T2Fit finish(const EnsembleSignal& sig, double t2) {
  T2Fit fit;
  fit.t2 = t2;
  fit.valid = true;
  fit.fit_residual_rms = std::sqrt(sse(sig, t2) / static_cast<double>(sig.times.size()));
  return fit;
}

T2Fit fit_nonlinear(const EnsembleSignal& sig) {
  const double span = sig.times.back() - sig.times.front();
  const double step = std::max(span, 1e-300) / static_cast<double>(sig.times.size());
  // Coarse scan in log t2, then Brent inside the best bracket.
  const double lo = std::log(step * 1e-3), hi = std::log(span * 1e4);
  constexpr int n = 240;
  int best = 0;
  double best_val = INFINITY;
  for (int i = 0; i <= n; ++i) {
    const double u = lo + (hi - lo) * i / n;
    const double v = sse(sig, std::exp(u));
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  const double a = lo + (hi - lo) * std::max(best - 1, 0) / n;
  const double b = lo + (hi - lo) * std::min(best + 1, n) / n;
  const auto [u, val] = boost::math::tools::brent_find_minima(
      [&](double x) { return sse(sig, std::exp(x)); }, a, b, 52);
  (void)val;
  return finish(sig, std::exp(u));
}

}  // namespace

T2Fit fit_t2(const EnsembleSignal& signal, FitMethod method) {
  const std::size_t n = signal.times.size();
  if (n < 10 || signal.mean.size() != n)
    fail(ErrorCode::fit_failed, "T2 fit needs at least 10 signal points");
  for (std::size_t i = 1; i < n; ++i)
    if (!(signal.times[i] > signal.times[i - 1]))
      fail(ErrorCode::fit_failed, "signal times must be strictly increasing");

  const double lowest = *std::min_element(signal.mean.begin(), signal.mean.end());
  const bool any_above_floor =
      std::any_of(signal.mean.begin(), signal.mean.end(), [](double m) { return m > 0.52; });
  if (!any_above_floor) fail(ErrorCode::fit_failed, "signal never rises above the 0.52 floor");
  if (lowest >= 0.95) return T2Fit{};  // never decayed: t2 stays +inf, valid = false

  if (method == FitMethod::linearized) {
    const bool weighted = signal.std_error.size() == n &&
                          std::all_of(signal.std_error.begin(), signal.std_error.end(),
                                      [](double e) { return e > 0.0; });
    double num = 0.0, den = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double m = signal.mean[i], t = signal.times[i];
      if (!(m > 0.52) || !(t > 0.0)) continue;
      const double y = std::log(2.0 * m - 1.0);
      double w = 1.0;
      if (weighted) {
        const double sy = 2.0 * signal.std_error[i] / (2.0 * m - 1.0);
        w = 1.0 / (sy * sy);
      }
      num += w * t * y;
      den += w * t * t;
      ++used;
    }
    if (used >= 10 && num < 0.0) return finish(signal, -den / num);
  }
  return fit_nonlinear(signal);
}

double coherence_gain(const T2Fit& fit, double b, double tau, GainReference reference) {
  require(fit.valid && fit.t2 > 0.0 && std::isfinite(fit.t2), "coherence gain needs a valid fit");
  require(b > 0.0 && tau > 0.0, "coherence gain needs b > 0 and tau > 0");
  const double t2_star = reference == GainReference::slow_bath ? std::numbers::sqrt2 / b
                                                               : 1.0 / (b * b * tau);
  return fit.t2 / t2_star;
}

double ripple_amplitude(const EnsembleSignal& signal, const T2Fit& fit) {
  require(fit.valid, "ripple amplitude needs a valid fit");
  require(!signal.times.empty(), "ripple amplitude needs a non-empty signal");
  double acc = 0.0;
  for (std::size_t i = 0; i < signal.times.size(); ++i) {
    const double r = signal.mean[i] - decay_model(signal.times[i], fit.t2);
    acc += r * r;
  }
  return std::numbers::sqrt2 * std::sqrt(acc / static_cast<double>(signal.times.size()));
}

std::vector<GainRow> gain_sweep(std::span<const double> s_values,
                                std::span<const double> delta_values,
                                const RamseyConfig& base) {
  std::vector<GainRow> rows;
  for (double s : s_values) {
    for (double delta : delta_values) {
      GainRow row;
      row.s = s;
      row.delta = delta;
      RamseyConfig cfg = base;
      EmitterConfig em = protected_emitter(s, delta);
      em.gamma = base.emitter.gamma;
      cfg.emitter = em;
      row.omega = em.omega_drive;
      try {
        auto res = run_ramsey(cfg);
        row.signal = std::move(res.signal);
        row.error = res.fit_error;
        if (res.fit.valid) {
          row.t2 = res.fit.t2;
          row.ripple = row.signal.ripple_amplitude;
          row.std_error = res.t2_std_error;
          if (cfg.noise.kind == NoiseKind::ou)
            row.gain = coherence_gain(res.fit, cfg.noise.ou.b, cfg.noise.ou.tau);
        } else if (row.error.empty()) {
          row.t2 = res.fit.t2;
          row.error = "signal did not decay below 0.95";
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::fit_failed) throw;
        row.error = e.what();
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_gain_table_csv(std::span<const GainRow> rows, std::ostream& out) {
  out << "s,delta,omega,t2,gain,ripple,stderr\n";
  for (const auto& r : rows)
    out << format_double(r.s) << ',' << format_double(r.delta) << ','
        << format_double(r.omega) << ',' << format_double(r.t2) << ','
        << format_double(r.gain) << ',' << format_double(r.ripple) << ','
        << format_double(r.std_error) << '\n';
}

void write_signal_csv(const EnsembleSignal& signal, std::ostream& out) {
  out << "t,mean,stderr\n";
  for (std::size_t i = 0; i < signal.times.size(); ++i)
    out << format_double(signal.times[i]) << ',' << format_double(signal.mean[i]) << ','
        << format_double(signal.std_error[i]) << '\n';
}

void SpectroscopyConfig::validate() const {
  emitter.validate();
  step.validate();
  require(emitter.gamma > 0.0, "spectroscopy needs gamma > 0");
  require(emitter.probe && emitter.probe->g > 0.0, "spectroscopy needs a probe with g > 0");
  require(xi > 0.0, "RTN amplitude xi must be > 0");
  require(!delta_omegas.empty() && !chis.empty(), "spectroscopy grid must not be empty");
  for (double c : chis) require(c >= 0.0, "RTN jump rate must be >= 0");
  require(evolve_time > 0.0, "evolve time must be > 0");
  require(n_trajectories >= 1, "n_trajectories must be >= 1");
  if (noise_dt) require(*noise_dt > 0.0, "noise dt must be > 0");
}

std::vector<MapPoint> probe_response_map(const SpectroscopyConfig& cfg) {
  cfg.validate();
  const std::size_t n_chi = cfg.chis.size(), n_dw = cfg.delta_omegas.size();
  const std::size_t n_traj = cfg.n_trajectories;

  const auto per_item = parallel_map(n_chi * n_traj, cfg.threads, [&](std::size_t item) {
    const std::size_t c = item / n_traj;
    const RTNParams rtn{cfg.xi, cfg.chis[c]};
    const auto seed = derive_seed(cfg.master_seed, Stream::spectroscopy_noise, item);
    const double dt = cfg.noise_dt.value_or(default_rtn_dt(rtn, cfg.evolve_time));
    const auto noise = generate_rtn_trace(rtn, dt, steps_for_horizon(cfg.evolve_time, dt), seed);
    std::vector<double> excitation(n_dw);
    for (std::size_t d = 0; d < n_dw; ++d) {
      EmitterConfig em = cfg.emitter;
      em.probe->delta_omega = cfg.delta_omegas[d];
      HamiltonianSpec spec(em, noise);
      const auto evo = evolve_lindblad(DensityMatrix::from_pure(PureState::basis(0)), spec,
                                       0.0, cfg.evolve_time, cfg.step);
      excitation[d] = evo.final_state.population(1);
    }
    return excitation;
  });

  std::vector<MapPoint> map;
  map.reserve(n_chi * n_dw);
  for (std::size_t c = 0; c < n_chi; ++c) {
    for (std::size_t d = 0; d < n_dw; ++d) {
      double mean = 0.0, m2 = 0.0;
      for (std::size_t j = 0; j < n_traj; ++j) {
        const double x = per_item[c * n_traj + j][d];
        const double delta = x - mean;
        mean += delta / static_cast<double>(j + 1);
        m2 += delta * (x - mean);
      }
      const double se = n_traj > 1 ? std::sqrt(m2 / static_cast<double>(n_traj - 1) /
                                               static_cast<double>(n_traj))
                                   : 0.0;
      map.push_back({cfg.delta_omegas[d], cfg.chis[c], mean, se});
    }
  }
  return map;
}

void write_map_csv(std::span<const MapPoint> map, std::ostream& out) {
  out << "delta_omega,chi,excitation,stderr\n";
  for (const auto& p : map)
    out << format_double(p.delta_omega) << ',' << format_double(p.chi) << ','
        << format_double(p.excitation) << ',' << format_double(p.std_error) << '\n';
}

}  // namespace starkshield
