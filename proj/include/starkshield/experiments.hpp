#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "starkshield/emitter.hpp"
#include "starkshield/noise.hpp"
#include "starkshield/propagator.hpp"

namespace starkshield {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum class FitMethod {
  /// Least squares of [exp(-t/T2) + 1]/2 against the signal itself.
  nonlinear,
  /// Weighted slope of log(2 mean - 1) through the origin, points above 0.52.
  linearized,
};

struct RamseyConfig {
  EmitterConfig emitter;
  NoiseModel noise;
  double horizon = 33.3;
  std::size_t n_trajectories = 10000;
  std::size_t n_sample_times = 400;
  std::uint64_t master_seed = 1;
  std::optional<double> noise_dt;
  StepControl step;
  FitMethod fit_method = FitMethod::nonlinear;
  unsigned threads = 1;

  void validate() const;
};

/// Trajectory-averaged Ramsey readout: 1 is full coherence, 0.5 none.
struct EnsembleSignal {
  std::vector<double> times;
  std::vector<double> mean;
  std::vector<double> std_error;
  double ripple_amplitude = kNaN;
};

struct T2Fit {
  double t2 = std::numeric_limits<double>::infinity();
  double fit_residual_rms = 0.0;
  bool valid = false;
};

/// n uniformly spaced times covering [0, horizon] inclusive.
std::vector<double> uniform_sample_times(double horizon, std::size_t n);

/// (|1> + |2>)/sqrt(2): the ground state after an exact pi/2 rotation.
PureState ramsey_initial_state();

/// Readout of one noise realization at each sample time.
std::vector<double> ramsey_trajectory(const NoiseTrace& noise,
                                      const EmitterConfig& emitter,
                                      std::span<const double> sample_times,
                                      const StepControl& step = {});

EnsembleSignal ramsey_ensemble(const RamseyConfig& cfg);

struct RamseyResult {
  EnsembleSignal signal;
  T2Fit fit;
  /// Delete-one-block jackknife error of t2 (10 trajectory blocks).
  double t2_std_error = kNaN;
  std::string fit_error;
};

/// Ensemble, T2 fit, ripple and jackknife error in one pass.
RamseyResult run_ramsey(const RamseyConfig& cfg);

/// Gaussian-bath free induction decay exp[-b^2 tau^2 (e^{-t/tau} + t/tau - 1)].
double analytic_fid_raw(double b, double tau, double t);
/// The same decay mapped onto the readout scale: (1 + raw)/2.
double analytic_fid(double b, double tau, double t);

T2Fit fit_t2(const EnsembleSignal& signal, FitMethod method = FitMethod::nonlinear);

enum class GainReference { slow_bath, fast_bath };

/// t2 relative to sqrt(2)/b (slow bath) or 1/(b^2 tau) (fast bath).
double coherence_gain(const T2Fit& fit, double b, double tau,
                      GainReference reference = GainReference::slow_bath);

/// sqrt(2) times the RMS deviation of the signal from the fitted decay.
double ripple_amplitude(const EnsembleSignal& signal, const T2Fit& fit);

struct GainRow {
  double s = 0.0;
  double delta = 0.0;
  double omega = 0.0;
  double t2 = kNaN;
  double gain = kNaN;
  double ripple = kNaN;
  double std_error = kNaN;
  std::string error;
  EnsembleSignal signal;
};

/// One ensemble and fit per (s, Delta), Omega from the protection condition.
/// Fit failures are recorded in the row rather than thrown.
std::vector<GainRow> gain_sweep(std::span<const double> s_values,
                                std::span<const double> delta_values,
                                const RamseyConfig& base);

void write_gain_table_csv(std::span<const GainRow> rows, std::ostream& out);
void write_signal_csv(const EnsembleSignal& signal, std::ostream& out);

struct SpectroscopyConfig {
  EmitterConfig emitter;  // gamma > 0 and a probe with g > 0
  double xi = 4.0;
  std::vector<double> delta_omegas;
  std::vector<double> chis;
  double evolve_time = 15.0;
  std::size_t n_trajectories = 100;
  std::uint64_t master_seed = 1;
  std::optional<double> noise_dt;
  StepControl step;
  unsigned threads = 1;

  void validate() const;
};

struct MapPoint {
  double delta_omega = 0.0;
  double chi = 0.0;
  double excitation = 0.0;
  double std_error = 0.0;
};

/// Final excited population Tr(|2><2| rho) averaged over RTN realizations,
/// starting from |1><1|. One noise trace per (chi, trajectory) is shared by
/// all probe detunings. Rows are ordered chi-major.
std::vector<MapPoint> probe_response_map(const SpectroscopyConfig& cfg);

void write_map_csv(std::span<const MapPoint> map, std::ostream& out);

}  // namespace starkshield
