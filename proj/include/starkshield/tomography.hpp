#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "starkshield/emitter.hpp"
#include "starkshield/linalg.hpp"
#include "starkshield/noise.hpp"
#include "starkshield/propagator.hpp"

namespace starkshield {

enum class PauliAxis { x, y };

/// R_A(angle) = exp(-i angle A / 2) on the {|1>, |2>} qubit.
struct Rotation {
  PauliAxis axis = PauliAxis::x;
  double angle = 0.0;
};

/// How a rotation angle maps onto a square pulse Omega * A of duration T.
enum class PulseArea {
  /// T = angle / (2 Omega): the noise-free pulse realizes R_A(angle) exactly.
  gate_exact,
  /// T = angle / Omega: the literal "angle = pulse area" reading.
  omega_t,
};

/// Back-to-back square pulses starting at t_start; rotations[0] is applied first.
struct GateSpec {
  std::vector<Rotation> rotations;
  double rabi = 1.0;
  double t_start = 0.0;
  PulseArea area = PulseArea::gate_exact;

  void validate() const;
  double pulse_duration(const Rotation& r) const;
  double end_time() const;

  static GateSpec x_pi(double rabi);
  /// U_H = R_X(pi) R_Y(pi/2): the Y pulse runs first.
  static GateSpec hadamard(double rabi);
};

/// Pauli matrix on the qubit: 0 = I, 1 = X, 2 = Y, 3 = Z (|1> is the +1 state of Z).
Matrix2 pauli(int index);

std::vector<SquarePulse> gate_pulses(const GateSpec& gate);

/// Sum of the pulse terms active at t (zero outside every pulse).
Matrix3 gate_pulse_hamiltonian(const GateSpec& gate, double t);

/// Product of the requested rotations, later rotations on the left.
Matrix2 ideal_unitary(const GateSpec& gate);

/// 4x4 process matrix in the {I, X, Y, Z} basis: E(rho) = sum chi_mn P_m rho P_n.
using ChiMatrix = Matrix4;

ChiMatrix chi_of_unitary(const Matrix2& u);
Matrix2 apply_chi(const ChiMatrix& chi, const Matrix2& rho);

/// Nearest positive semidefinite, unit-trace matrix by eigenvalue clipping.
Matrix2 project_physical(const Matrix2& rho);
ChiMatrix project_physical(const ChiMatrix& chi);

/// |1>, |2>, (|1> + |2>)/sqrt 2, (|1> + i|2>)/sqrt 2.
std::array<Matrix2, 4> tomography_inputs();

struct TomographyConfig {
  GateSpec gate;
  RTNParams rtn{8.0, 1.0};
  /// s, Delta and Omega of the correction drives; protection_on is set per run.
  EmitterConfig emitter;
  std::size_t shots = 10000;
  bool exact_expectations = false;
  std::size_t n_realizations = 100;
  std::uint64_t master_seed = 1;
  std::optional<double> noise_dt;
  StepControl step;
  unsigned threads = 1;

  void validate() const;
};

/// Defaults: RTN xi = 8, chi = 1; s = 80; Delta = 4000; protection off.
TomographyConfig default_tomography_config(const GateSpec& gate);

enum class Scenario { ideal, noisy, protected_drive };

const char* to_string(Scenario s);

struct ProcessData {
  std::array<Matrix2, 4> inputs;
  std::array<Matrix2, 4> outputs;
};

/// Noise-averaged qubit output for each tomography input. The ideal scenario
/// has neither noise nor drives; the others share the same RTN traces.
ProcessData simulate_process(const TomographyConfig& cfg, Scenario scenario);
ProcessData simulate_process(const TomographyConfig& cfg, bool protection_on);

/// Shot-sampled Pauli tomography: shots/3 projective measurements each of X,
/// Y and Z, linear inversion, then projection onto physical states.
Matrix2 state_tomography(const Matrix2& rho_true, std::size_t shots, std::uint64_t seed,
                         bool exact = false);

struct ChiResult {
  ChiMatrix raw;       // trace-normalized linear inversion
  ChiMatrix physical;  // eigenvalue-clipped variant
};

ChiResult chi_from_io(const std::array<Matrix2, 4>& inputs,
                      const std::array<Matrix2, 4>& outputs);

/// Re Tr(chi_ideal chi), clipped to [0, 1]. Both must be trace-normalized.
double process_fidelity(const ChiMatrix& chi, const ChiMatrix& chi_ideal);

struct QptResult {
  ChiMatrix chi_target;  // from the ideal unitary
  ChiMatrix chi_ideal;
  ChiMatrix chi_noisy;
  ChiMatrix chi_protected;
  double fidelity_ideal = 0.0;
  double fidelity_noisy = 0.0;
  double fidelity_protected = 0.0;
};

QptResult qpt_experiment(const TomographyConfig& cfg);

/// CSV with header `i,j,re,im`, 16 rows in row-major order.
void write_chi_csv(const ChiMatrix& chi, std::ostream& out);

}  // namespace starkshield
