#pragma once

#include <optional>
#include <vector>

#include "starkshield/linalg.hpp"
#include "starkshield/noise.hpp"

namespace starkshield {

/// Weak transverse probe on the 1<->2 transition, kept after the rotating-wave
/// approximation: amplitude g/2 at detuning delta_omega = omega_p - omega_2.
struct ProbeConfig {
  double g = 0.0;
  double delta_omega = 0.0;
};

/// Three-level emitter in the frame rotating at the homogeneous level
/// frequencies. Level |2> shifts by -delta(t), level |3> by +s delta(t); two
/// drives at +/-delta_drive with amplitude omega_drive couple |2> and |3>.
struct EmitterConfig {
  double s = 1.0;
  double delta_drive = 0.0;
  double omega_drive = 0.0;
  double gamma = 0.0;
  bool protection_on = false;
  std::optional<ProbeConfig> probe;

  void validate() const;
};

/// Emitter with drives enabled and omega_drive set by the protection condition.
EmitterConfig protected_emitter(double s, double delta_drive);

/// A constant Hermitian term switched on for t in [t_start, t_end).
struct SquarePulse {
  double t_start = 0.0;
  double t_end = 0.0;
  Matrix3 coupling = Matrix3::Zero();
};

class HamiltonianSpec {
 public:
  HamiltonianSpec(EmitterConfig emitter, NoiseTrace noise,
                  std::vector<SquarePulse> pulses = {});

  const EmitterConfig& emitter() const { return emitter_; }
  const NoiseTrace& noise() const { return noise_; }
  const std::vector<SquarePulse>& pulses() const { return pulses_; }
  double horizon() const { return noise_.horizon(); }

  /// Drive coefficient on the |2><3| + h.c. element: sqrt(2) Omega cos(Delta t).
  double drive_coefficient(double t) const;
  /// Probe element <1|H|2> = (g/2) exp(+i delta_omega t).
  Complex probe_coefficient(double t) const;
  /// Terms that are constant while delta and the active pulse set are fixed.
  Matrix3 static_part(double delta, double t) const;

 private:
  EmitterConfig emitter_;
  NoiseTrace noise_;
  std::vector<SquarePulse> pulses_;
};

/// H(t) = -delta|2><2| + s delta|3><3| + drives + probe + active pulses, with
/// delta(t) the held noise sample. Throws out_of_range beyond the horizon.
Matrix3 hamiltonian_at(const HamiltonianSpec& spec, double t);

double bessel_j0(double x);

/// First zero of J0.
inline constexpr double kBesselJ0FirstZero = 2.404825557695772768621631879;

/// Smallest r > 0 with J0(2 sqrt(2) r) = (s - 1)/(s + 1), i.e. the drive
/// ratio Omega/Delta that cancels the noise-induced qubit shift.
double protection_ratio(double s);

/// Linearized ac-Stark shift of level |2>: (Omega/Delta)^2 s dv.
double stark_shift_linear(double omega, double delta, double s, double dv);

/// Two-drive ac-Stark shift before expansion:
/// -Omega^2/(2(Delta + s dv)) + Omega^2/(2(Delta - s dv)).
double stark_shift_exact(double omega, double delta, double s, double dv);

}  // namespace starkshield
