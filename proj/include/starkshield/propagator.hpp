#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "starkshield/emitter.hpp"
#include "starkshield/linalg.hpp"

namespace starkshield {

struct PureState {
  Vector3 amplitudes = Vector3::Zero();

  static PureState basis(int level);
  double norm() const { return amplitudes.norm(); }
};

struct DensityMatrix {
  Matrix3 rho = Matrix3::Zero();

  static DensityMatrix from_pure(const PureState& psi);
  double trace() const { return rho.trace().real(); }
  double min_eigenvalue() const;
  double population(int level) const { return rho(level, level).real(); }
};

/// Fixed-step RK4 control. The step inside a segment is the smallest of
///   drive period / steps_per_drive_period  (drive and probe carriers),
///   max_step,
///   max_phase / ||H||   (row-sum bound of the segment's Hamiltonian),
/// divided by `refinement`. Segments end on every noise-grid point, pulse
/// edge and requested sample time.
struct StepControl {
  int steps_per_drive_period = 40;
  double max_step = std::numeric_limits<double>::infinity();
  double max_phase = 0.015;
  int refinement = 1;

  void validate() const;
};

struct PureEvolution {
  std::vector<PureState> samples;
  PureState final_state;
  double max_norm_drift = 0.0;
  std::size_t steps = 0;
  /// True when no RK4 step crossed a noise-grid boundary.
  bool grid_aligned = true;
};

struct LindbladEvolution {
  std::vector<DensityMatrix> samples;
  DensityMatrix final_state;
  double max_trace_drift = 0.0;
  /// Smallest eigenvalue seen at sample times and at the end.
  double min_eigenvalue = 1.0;
  std::size_t steps = 0;
  bool grid_aligned = true;
};

/// Integrates i psi' = H(t) psi from t0 to t1. The state is never
/// renormalized; norm drift is reported instead, and a drift above 1e-2 or a
/// non-finite state raises ErrorCode::numerical.
PureEvolution evolve_pure(const PureState& initial, const HamiltonianSpec& spec,
                          double t0, double t1, const StepControl& ctl,
                          std::span<const double> sample_times = {});

/// GKSL equation with the single jump operator |1><2|:
///   rho' = -i[H, rho] + (gamma/2)(2 L rho L^+ - L^+ L rho - rho L^+ L).
/// The Hermitian part is kept after every step.
LindbladEvolution evolve_lindblad(const DensityMatrix& initial,
                                  const HamiltonianSpec& spec, double t0,
                                  double t1, const StepControl& ctl,
                                  std::span<const double> sample_times = {});

/// Ramsey readout (1 + 2 Re rho_12)/2 of the 1-2 coherence; level-3
/// population is not projected out.
double coherence_signal(const PureState& psi);

struct ConvergenceReport {
  double value_coarse = 0.0;  // step h
  double value_fine = 0.0;    // step h/2
  double value_finest = 0.0;  // step h/4
  double order = 0.0;         // log2 of the successive-difference ratio
};

using Observable = std::function<double(const PureState&)>;

/// Runs the same evolution at h, h/2 and h/4 and estimates the global order.
ConvergenceReport convergence_probe(const HamiltonianSpec& spec,
                                    const PureState& initial, double t1,
                                    const StepControl& ctl,
                                    const Observable& observable = coherence_signal);

/// Plain RK4 for an arbitrary Hamiltonian callable h(t) -> Matrix3, with
/// n_steps equal steps. Used for toy problems and cross-checks.
template <class HamiltonianFn>
PureState integrate_rk4(PureState state, HamiltonianFn&& h, double t0, double t1,
                        std::size_t n_steps) {
  const Complex minus_i(0.0, -1.0);
  const double step = (t1 - t0) / static_cast<double>(n_steps);
  Vector3 psi = state.amplitudes;
  for (std::size_t n = 0; n < n_steps; ++n) {
    const double t = t0 + step * static_cast<double>(n);
    const Matrix3 h0 = h(t), hm = h(t + 0.5 * step), h1 = h(t + step);
    const Vector3 k1 = minus_i * (h0 * psi);
    const Vector3 k2 = minus_i * (hm * (psi + 0.5 * step * k1));
    const Vector3 k3 = minus_i * (hm * (psi + 0.5 * step * k2));
    const Vector3 k4 = minus_i * (h1 * (psi + step * k3));
    psi += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  state.amplitudes = psi;
  return state;
}

}  // namespace starkshield
