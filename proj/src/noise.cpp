#include "starkshield/noise.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <string>

#include "starkshield/errors.hpp"
#include "starkshield/rng.hpp"
#include "starkshield/textio.hpp"

namespace starkshield {

const char* to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::ou: return "ou";
    case NoiseKind::rtn: return "rtn";
    case NoiseKind::static_value: return "static";
  }
  return "unknown";
}

void OUParams::validate() const {
  // b = 0 is accepted as the degenerate zero path.
  require(std::isfinite(b) && b >= 0.0, "OU strength b must be >= 0");
  require(std::isfinite(tau) && tau > 0.0, "OU correlation time tau must be > 0");
}

void RTNParams::validate() const {
  require(std::isfinite(xi) && xi > 0.0, "RTN amplitude xi must be > 0");
  require(std::isfinite(chi) && chi >= 0.0, "RTN jump rate chi must be >= 0");
}

NoiseTrace::NoiseTrace(NoiseKind kind, double dt, std::vector<double> values,
                       std::uint64_t seed, std::size_t jump_count)
    : kind_(kind), dt_(dt), values_(std::move(values)), seed_(seed),
      jump_count_(jump_count) {
  require(std::isfinite(dt_) && dt_ > 0.0, "noise grid spacing must be > 0");
  require(!values_.empty(), "noise trace must not be empty");
}

std::size_t NoiseTrace::cell_index(double t) const {
  const double h = horizon();
  if (!(t >= 0.0) || t > h * (1.0 + 1e-12) + 1e-15)
    fail(ErrorCode::out_of_range,
         "time " + format_double(t) + " outside noise horizon [0, " + format_double(h) + "]");
  const auto k = static_cast<std::size_t>(std::floor(t / dt_ + 1e-9));
  return std::min(k, values_.size() - 1);
}

namespace {

void check_grid(double dt, std::size_t n_steps) {
  require(std::isfinite(dt) && dt > 0.0, "dt must be > 0");
  require(n_steps >= 1, "n_steps must be >= 1");
}

}  // namespace

NoiseTrace generate_ou_trace(const OUParams& params, double dt,
                             std::size_t n_steps, std::uint64_t seed) {
  params.validate();
  check_grid(dt, n_steps);

  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double mu = std::exp(-dt / params.tau);
  const double kick = params.b * std::sqrt(1.0 - mu * mu);

  std::vector<double> values(n_steps + 1);
  values[0] = params.b * normal(rng);
  for (std::size_t k = 0; k < n_steps; ++k)
    values[k + 1] = mu * values[k] + kick * normal(rng);
  return NoiseTrace(NoiseKind::ou, dt, std::move(values), seed);
}

NoiseTrace generate_rtn_trace(const RTNParams& params, double dt,
                              std::size_t n_steps, std::uint64_t seed) {
  params.validate();
  check_grid(dt, n_steps);

  Rng rng = make_rng(seed);
  const double initial = std::bernoulli_distribution(0.5)(rng) ? params.xi : -params.xi;
  double state = initial;
  std::size_t jumps = 0;
  std::vector<double> values(n_steps + 1);

  if (params.chi == 0.0) {
    std::fill(values.begin(), values.end(), initial);
    return NoiseTrace(NoiseKind::rtn, dt, std::move(values), seed, 0);
  }

  std::exponential_distribution<double> wait(params.chi);
  double next_jump = wait(rng);
  for (std::size_t k = 0; k <= n_steps; ++k) {
    const double t = dt * static_cast<double>(k);
    while (next_jump <= t) {
      state = -state;
      ++jumps;
      next_jump += wait(rng);
    }
    values[k] = state;
  }
  return NoiseTrace(NoiseKind::rtn, dt, std::move(values), seed, jumps);
}

NoiseTrace make_static_trace(double delta, double dt, std::size_t n_steps) {
  check_grid(dt, n_steps);
  require(std::isfinite(delta), "static delta must be finite");
  return NoiseTrace(NoiseKind::static_value, dt,
                    std::vector<double>(n_steps + 1, delta), 0);
}

double default_ou_dt(const OUParams& params, double horizon) {
  return std::min(params.tau / 200.0, horizon / 2000.0);
}

double default_rtn_dt(const RTNParams& params, double horizon) {
  const double by_horizon = horizon / 2000.0;
  if (params.chi <= 0.0) return by_horizon;
  return std::min(1.0 / (50.0 * params.chi), by_horizon);
}

std::size_t steps_for_horizon(double horizon, double dt) {
  require(std::isfinite(horizon) && horizon > 0.0, "horizon must be > 0");
  require(std::isfinite(dt) && dt > 0.0, "dt must be > 0");
  const double ratio = horizon / dt;
  auto n = static_cast<std::size_t>(std::ceil(ratio - 1e-9));
  return std::max<std::size_t>(n, 1);
}

void NoiseModel::validate() const {
  switch (kind) {
    case NoiseKind::ou: ou.validate(); break;
    case NoiseKind::rtn: rtn.validate(); break;
    case NoiseKind::static_value:
      require(std::isfinite(static_delta), "static delta must be finite");
      break;
  }
}

double NoiseModel::default_dt(double horizon) const {
  switch (kind) {
    case NoiseKind::ou: return default_ou_dt(ou, horizon);
    case NoiseKind::rtn: return default_rtn_dt(rtn, horizon);
    case NoiseKind::static_value: return horizon / 2000.0;
  }
  return horizon / 2000.0;
}

NoiseTrace NoiseModel::realize(double horizon, std::optional<double> dt,
                               std::uint64_t seed) const {
  const double step = dt.value_or(default_dt(horizon));
  const std::size_t n = steps_for_horizon(horizon, step);
  switch (kind) {
    case NoiseKind::ou: return generate_ou_trace(ou, step, n, seed);
    case NoiseKind::rtn: return generate_rtn_trace(rtn, step, n, seed);
    case NoiseKind::static_value: return make_static_trace(static_delta, step, n);
  }
  fail(ErrorCode::invalid_argument, "unknown noise kind");
}

AutocorrelationAccumulator::AutocorrelationAccumulator(double dt, std::size_t length,
                                                       std::span<const double> lags)
    : dt_(dt), length_(length), lags_(lags.begin(), lags.end()) {
  require(dt > 0.0 && length >= 1, "autocorrelation grid must be non-empty");
  for (double lag : lags_) {
    require(std::isfinite(lag) && lag >= 0.0, "lag must be >= 0");
    const double steps = lag / dt;
    const auto m = static_cast<std::size_t>(std::llround(steps));
    require(std::abs(steps - static_cast<double>(m)) <= 1e-6 * std::max(1.0, steps),
            "lag " + format_double(lag) + " is not a multiple of dt");
    require(m < length, "lag " + format_double(lag) + " exceeds trace length");
    lag_steps_.push_back(m);
  }
  mean_.assign(lags_.size(), 0.0);
  m2_.assign(lags_.size(), 0.0);
}

std::vector<double> AutocorrelationAccumulator::trace_estimates(const NoiseTrace& trace) const {
  require(trace.dt() == dt_ && trace.size() == length_,
          "autocorrelation traces must share grid spacing and length");
  const auto v = trace.values();
  std::vector<double> out;
  out.reserve(lag_steps_.size());
  for (std::size_t m : lag_steps_) {
    double acc = 0.0;
    for (std::size_t k = 0; k + m < length_; ++k) acc += v[k] * v[k + m];
    out.push_back(acc / static_cast<double>(length_ - m));
  }
  return out;
}

void AutocorrelationAccumulator::add(std::span<const double> estimates) {
  require(estimates.size() == lags_.size(), "estimate count must match lag count");
  ++count_;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double d = estimates[i] - mean_[i];
    mean_[i] += d / static_cast<double>(count_);
    m2_[i] += d * (estimates[i] - mean_[i]);
  }
}

std::vector<AutocorrelationPoint> AutocorrelationAccumulator::result() const {
  require(count_ >= 1, "autocorrelation needs at least one trace");
  std::vector<AutocorrelationPoint> out;
  const double n = static_cast<double>(count_);
  for (std::size_t i = 0; i < lags_.size(); ++i) {
    const double var = count_ > 1 ? m2_[i] / (n - 1.0) : 0.0;
    out.push_back({lags_[i], mean_[i], std::sqrt(var / n)});
  }
  return out;
}

std::vector<AutocorrelationPoint> estimate_autocorrelation(
    std::span<const NoiseTrace> traces, std::span<const double> lags) {
  require(!traces.empty(), "autocorrelation needs at least one trace");
  AutocorrelationAccumulator acc(traces.front().dt(), traces.front().size(), lags);
  for (const auto& tr : traces) acc.add(acc.trace_estimates(tr));
  return acc.result();
}

double fit_decay_rate(std::span<const AutocorrelationPoint> points) {
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& p : points) {
    if (!(p.estimate > 0.0)) continue;
    const double y = std::log(p.estimate);
    const double rel = p.std_error > 0.0 ? p.std_error / p.estimate : 1.0;
    const double w = 1.0 / (rel * rel);
    sw += w;
    sx += w * p.lag;
    sy += w * y;
    sxx += w * p.lag * p.lag;
    sxy += w * p.lag * y;
  }
  const double det = sw * sxx - sx * sx;
  require(sw > 0.0 && det > 0.0, "decay-rate fit needs two distinct positive lags");
  return -(sw * sxy - sx * sy) / det;
}

std::size_t count_grid_transitions(const NoiseTrace& trace) {
  const auto v = trace.values();
  std::size_t n = 0;
  for (std::size_t k = 1; k < v.size(); ++k)
    if (v[k] != v[k - 1]) ++n;
  return n;
}

void write_trace_csv(const NoiseTrace& trace, std::ostream& out) {
  out << "t,delta\n";
  const auto v = trace.values();
  for (std::size_t k = 0; k < v.size(); ++k)
    out << format_double(trace.dt() * static_cast<double>(k)) << ','
        << format_double(v[k]) << '\n';
}

}  // namespace starkshield
