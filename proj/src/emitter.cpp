#include "starkshield/emitter.hpp"

#include <cmath>
#include <numbers>

#include "starkshield/errors.hpp"
#include "starkshield/textio.hpp"

namespace starkshield {

void EmitterConfig::validate() const {
  require(std::isfinite(s) && s >= 1.0, "sensitivity s must be >= 1");
  require(std::isfinite(omega_drive) && omega_drive >= 0.0, "drive amplitude must be >= 0");
  require(std::isfinite(gamma) && gamma >= 0.0, "decay rate gamma must be >= 0");
  require(std::isfinite(delta_drive), "drive detuning must be finite");
  if (protection_on) require(delta_drive > 0.0, "drive detuning must be > 0 with protection on");
  if (probe) require(std::isfinite(probe->g) && probe->g >= 0.0, "probe amplitude must be >= 0");
}

EmitterConfig protected_emitter(double s, double delta_drive) {
  EmitterConfig cfg;
  cfg.s = s;
  cfg.delta_drive = delta_drive;
  cfg.omega_drive = protection_ratio(s) * delta_drive;
  cfg.protection_on = true;
  cfg.validate();
  return cfg;
}

HamiltonianSpec::HamiltonianSpec(EmitterConfig emitter, NoiseTrace noise,
                                 std::vector<SquarePulse> pulses)
    : emitter_(emitter), noise_(std::move(noise)), pulses_(std::move(pulses)) {
  emitter_.validate();
  for (const auto& p : pulses_) {
    require(p.t_end >= p.t_start, "pulse must end after it starts");
    require(hermiticity_error(p.coupling) < 1e-12, "pulse coupling must be Hermitian");
  }
}

double HamiltonianSpec::drive_coefficient(double t) const {
  if (!emitter_.protection_on) return 0.0;
  return std::numbers::sqrt2 * emitter_.omega_drive * std::cos(emitter_.delta_drive * t);
}

Complex HamiltonianSpec::probe_coefficient(double t) const {
  if (!emitter_.probe) return {0.0, 0.0};
  return 0.5 * emitter_.probe->g * std::polar(1.0, emitter_.probe->delta_omega * t);
}

Matrix3 HamiltonianSpec::static_part(double delta, double t) const {
  Matrix3 h = Matrix3::Zero();
  h(1, 1) = -delta;
  h(2, 2) = emitter_.s * delta;
  for (const auto& p : pulses_)
    if (t >= p.t_start && t < p.t_end) h += p.coupling;
  return h;
}

Matrix3 hamiltonian_at(const HamiltonianSpec& spec, double t) {
  if (!std::isfinite(t)) fail(ErrorCode::out_of_range, "time must be finite");
  Matrix3 h = spec.static_part(spec.noise().value_at(t), t);
  const double c = spec.drive_coefficient(t);
  h(1, 2) += c;
  h(2, 1) += c;
  const Complex p = spec.probe_coefficient(t);
  h(0, 1) += p;
  h(1, 0) += std::conj(p);
  return h;
}

namespace {

// Power series sum_k (-x^2/4)^k / (k!)^2 in extended precision; the largest
// term at |x| = 17 is ~5e5, so long double keeps the sum near 1e-13.
double j0_series(double x) {
  const long double q = -static_cast<long double>(x) * x / 4.0L;
  long double term = 1.0L, sum = 1.0L;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<long double>(k) * k);
    sum += term;
    if (std::fabs(term) < 1e-22L * std::fabs(sum) && k > 2) break;
  }
  return static_cast<double>(sum);
}

// Hankel asymptotic expansion; for |x| > 17 the smallest term is below 1e-14.
double j0_asymptotic(double x) {
  const double z = 8.0 * x;
  double p = 0.0, q = 0.0;
  double term = 1.0;
  double last = INFINITY;
  for (int k = 0; k < 60; ++k) {
    // a_k = prod_{j=1..k} (-(2j-1)^2) / (k! z^k); P = a0 - a2 + a4 ..., Q = a1 - a3 + ...
    if (k > 0) term *= -((2.0 * k - 1.0) * (2.0 * k - 1.0)) / (k * z);
    if (std::abs(term) > last) break;
    last = std::abs(term);
    const double sign = (k / 2) % 2 == 0 ? 1.0 : -1.0;
    (k % 2 == 0 ? p : q) += sign * term;
  }
  const double chi = x - std::numbers::pi / 4.0;
  return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

}  // namespace

double bessel_j0(double x) {
  x = std::abs(x);
  return x <= 17.0 ? j0_series(x) : j0_asymptotic(x);
}

double protection_ratio(double s) {
  require(std::isfinite(s) && s >= 1.0, "sensitivity s must be >= 1, got " + format_double(s));
  const double target = (s - 1.0) / (s + 1.0);
  const double scale = 2.0 * std::numbers::sqrt2;
  // J0 falls monotonically from 1 to 0 on [0, j01], so the root is bracketed.
  double lo = 0.0;
  double hi = kBesselJ0FirstZero / scale;
  if (target == 0.0) return hi;
  for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (bessel_j0(scale * mid) > target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double stark_shift_linear(double omega, double delta, double s, double dv) {
  require(delta > 0.0, "drive detuning must be > 0");
  const double r = omega / delta;
  return r * r * s * dv;
}

double stark_shift_exact(double omega, double delta, double s, double dv) {
  const double sd = s * dv;
  const double denom = delta * delta - sd * sd;
  if (denom == 0.0)
    throw Error(ErrorCode::singularity, "Stark shift diverges at |s delta| = Delta");
  return omega * omega * sd / denom;
}

}  // namespace starkshield
