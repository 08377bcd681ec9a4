#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace starkshield {

enum class NoiseKind { ou, rtn, static_value };

const char* to_string(NoiseKind kind);

/// Ornstein-Uhlenbeck frequency noise with correlation b^2 exp(-|t|/tau).
struct OUParams {
  double b = 0.0;
  double tau = 1.0;

  void validate() const;
};

/// Random telegraph noise switching between +xi and -xi at rate chi.
struct RTNParams {
  double xi = 0.0;
  double chi = 0.0;

  void validate() const;
};

/// A sampled frequency-noise path delta(t_k), t_k = k * dt, k = 0..size()-1.
/// Consumers hold each sample constant on [t_k, t_{k+1}).
class NoiseTrace {
 public:
  NoiseTrace(NoiseKind kind, double dt, std::vector<double> values,
             std::uint64_t seed, std::size_t jump_count = 0);

  NoiseKind kind() const { return kind_; }
  double dt() const { return dt_; }
  std::uint64_t seed() const { return seed_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double horizon() const { return dt_ * static_cast<double>(values_.size() - 1); }

  /// Number of RTN switching events in [0, horizon]; zero for other kinds.
  std::size_t jump_count() const { return jump_count_; }

  /// Index of the hold cell containing t. Throws out_of_range beyond horizon.
  std::size_t cell_index(double t) const;
  double value_at(double t) const { return values_[cell_index(t)]; }

 private:
  NoiseKind kind_;
  double dt_;
  std::vector<double> values_;
  std::uint64_t seed_;
  std::size_t jump_count_;
};

/// Exact OU update: stationary start N(0, b^2), then
/// delta_{k+1} = mu delta_k + b sqrt(1 - mu^2) n_k with mu = exp(-dt/tau).
/// Produces n_steps + 1 samples.
NoiseTrace generate_ou_trace(const OUParams& params, double dt,
                             std::size_t n_steps, std::uint64_t seed);

/// Event-driven RTN: exponential waiting times at rate chi, sampled onto the
/// grid afterwards, so jump times do not depend on dt for a fixed seed.
NoiseTrace generate_rtn_trace(const RTNParams& params, double dt,
                              std::size_t n_steps, std::uint64_t seed);

NoiseTrace make_static_trace(double delta, double dt, std::size_t n_steps);

double default_ou_dt(const OUParams& params, double horizon);
double default_rtn_dt(const RTNParams& params, double horizon);

/// Smallest step count whose grid covers the horizon.
std::size_t steps_for_horizon(double horizon, double dt);

/// Noise description shared by the experiment configs.
struct NoiseModel {
  NoiseKind kind = NoiseKind::ou;
  OUParams ou;
  RTNParams rtn;
  double static_delta = 0.0;

  void validate() const;
  double default_dt(double horizon) const;
  NoiseTrace realize(double horizon, std::optional<double> dt,
                     std::uint64_t seed) const;
};

struct AutocorrelationPoint {
  double lag = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Streaming form of estimate_autocorrelation: per-trace estimates are
/// computed independently (safe to call concurrently) and folded in with add()
/// in a fixed order.
class AutocorrelationAccumulator {
 public:
  AutocorrelationAccumulator(double dt, std::size_t length, std::span<const double> lags);

  std::vector<double> trace_estimates(const NoiseTrace& trace) const;
  void add(std::span<const double> estimates);
  std::vector<AutocorrelationPoint> result() const;

 private:
  double dt_;
  std::size_t length_;
  std::vector<double> lags_;
  std::vector<std::size_t> lag_steps_;
  std::vector<double> mean_;
  std::vector<double> m2_;
  std::size_t count_ = 0;
};

/// Ensemble estimate of <delta(t + lag) delta(t)>. Each trace contributes the
/// mean over all valid start points; the spread of those per-trace means gives
/// the standard error, so within-trace correlations do not bias it.
std::vector<AutocorrelationPoint> estimate_autocorrelation(
    std::span<const NoiseTrace> traces, std::span<const double> lags);

/// Decay rate from a log-linear fit of positive autocorrelation estimates.
double fit_decay_rate(std::span<const AutocorrelationPoint> points);

/// Sign changes visible on the sampling grid (misses paired jumps in a cell).
std::size_t count_grid_transitions(const NoiseTrace& trace);

/// CSV export: header `t,delta`, one row per grid point, 17 significant digits.
void write_trace_csv(const NoiseTrace& trace, std::ostream& out);

}  // namespace starkshield
