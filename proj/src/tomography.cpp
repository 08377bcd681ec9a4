#include "starkshield/tomography.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "starkshield/errors.hpp"
#include "starkshield/parallel.hpp"
#include "starkshield/rng.hpp"
#include "starkshield/textio.hpp"

namespace starkshield {

namespace {
const Complex I1(0.0, 1.0);
}

void GateSpec::validate() const {
  require(!rotations.empty(), "gate needs at least one rotation");
  require(std::isfinite(rabi) && rabi > 0.0, "gate Rabi frequency must be > 0");
  require(std::isfinite(t_start) && t_start >= 0.0, "gate start must be >= 0");
  for (const auto& r : rotations)
    require(r.angle > 0.0 && r.angle <= 2.0 * std::numbers::pi + 1e-12,
            "rotation angle must lie in (0, 2 pi]");
}

double GateSpec::pulse_duration(const Rotation& r) const {
  return area == PulseArea::gate_exact ? r.angle / (2.0 * rabi) : r.angle / rabi;
}

double GateSpec::end_time() const {
  double t = t_start;
  for (const auto& r : rotations) t += pulse_duration(r);
  return t;
}

GateSpec GateSpec::x_pi(double rabi) {
  GateSpec g;
  g.rotations = {{PauliAxis::x, std::numbers::pi}};
  g.rabi = rabi;
  return g;
}

GateSpec GateSpec::hadamard(double rabi) {
  GateSpec g;
  g.rotations = {{PauliAxis::y, std::numbers::pi / 2.0}, {PauliAxis::x, std::numbers::pi}};
  g.rabi = rabi;
  return g;
}

Matrix2 pauli(int index) {
  Matrix2 p;
  switch (index) {
    case 0: p << 1, 0, 0, 1; break;
    case 1: p << 0, 1, 1, 0; break;
    case 2: p << 0, -I1, I1, 0; break;
    case 3: p << 1, 0, 0, -1; break;
    default: fail(ErrorCode::invalid_argument, "Pauli index must be 0..3");
  }
  return p;
}

std::vector<SquarePulse> gate_pulses(const GateSpec& gate) {
  gate.validate();
  std::vector<SquarePulse> pulses;
  double t = gate.t_start;
  for (const auto& r : gate.rotations) {
    const double len = gate.pulse_duration(r);
    SquarePulse p;
    p.t_start = t;
    p.t_end = t + len;
    const Matrix2 a = pauli(r.axis == PauliAxis::x ? 1 : 2);
    p.coupling.topLeftCorner<2, 2>() = gate.rabi * a;
    pulses.push_back(p);
    t += len;
  }
  return pulses;
}

Matrix3 gate_pulse_hamiltonian(const GateSpec& gate, double t) {
  Matrix3 h = Matrix3::Zero();
  for (const auto& p : gate_pulses(gate))
    if (t >= p.t_start && t < p.t_end) h += p.coupling;
  return h;
}

Matrix2 ideal_unitary(const GateSpec& gate) {
  gate.validate();
  Matrix2 u = Matrix2::Identity();
  for (const auto& r : gate.rotations) {
    const Matrix2 a = pauli(r.axis == PauliAxis::x ? 1 : 2);
    const Matrix2 rot = std::cos(r.angle / 2.0) * Matrix2::Identity() -
                        I1 * std::sin(r.angle / 2.0) * a;
    u = rot * u;
  }
  return u;
}

ChiMatrix chi_of_unitary(const Matrix2& u) {
  Eigen::Vector4cd c;
  for (int i = 0; i < 4; ++i) c(i) = 0.5 * (pauli(i).adjoint() * u).trace();
  return c * c.adjoint();
}

Matrix2 apply_chi(const ChiMatrix& chi, const Matrix2& rho) {
  Matrix2 out = Matrix2::Zero();
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n) out += chi(m, n) * pauli(m) * rho * pauli(n);
  return out;
}

namespace {

template <class M>
M clip_to_physical(const M& in) {
  const M herm = 0.5 * (in + in.adjoint());
  Eigen::SelfAdjointEigenSolver<M> solver(herm);
  auto vals = solver.eigenvalues().eval();
  for (int i = 0; i < vals.size(); ++i) vals(i) = std::max(vals(i), 0.0);
  const double total = vals.sum();
  require(total > 0.0, "cannot project a matrix without positive spectrum");
  vals /= total;
  return solver.eigenvectors() * vals.template cast<Complex>().asDiagonal() *
         solver.eigenvectors().adjoint();
}

}  // namespace

Matrix2 project_physical(const Matrix2& rho) { return clip_to_physical(rho); }
ChiMatrix project_physical(const ChiMatrix& chi) { return clip_to_physical(chi); }

std::array<Matrix2, 4> tomography_inputs() {
  const double h = (1.0 / std::numbers::sqrt2);
  const std::array<Eigen::Vector2cd, 4> kets = {
      Eigen::Vector2cd(1, 0), Eigen::Vector2cd(0, 1), Eigen::Vector2cd(h, h),
      Eigen::Vector2cd(h, I1 * h)};
  std::array<Matrix2, 4> out;
  for (int i = 0; i < 4; ++i) out[i] = kets[i] * kets[i].adjoint();
  return out;
}

void TomographyConfig::validate() const {
  gate.validate();
  rtn.validate();
  emitter.validate();
  step.validate();
  require(emitter.delta_drive > 0.0, "correction drive detuning must be > 0");
  require(exact_expectations || shots >= 3, "state tomography needs >= 3 shots");
  require(n_realizations >= 1, "need at least one noise realization");
  if (noise_dt) require(*noise_dt > 0.0, "noise dt must be > 0");
}

TomographyConfig default_tomography_config(const GateSpec& gate) {
  TomographyConfig cfg;
  cfg.gate = gate;
  cfg.rtn = {8.0, 1.0};
  cfg.emitter = protected_emitter(80.0, 4000.0);
  cfg.emitter.protection_on = false;
  return cfg;
}

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::ideal: return "ideal";
    case Scenario::noisy: return "noisy";
    case Scenario::protected_drive: return "protected";
  }
  return "unknown";
}

ProcessData simulate_process(const TomographyConfig& cfg, Scenario scenario) {
  cfg.validate();
  const double horizon = cfg.gate.end_time();
  const auto pulses = gate_pulses(cfg.gate);
  EmitterConfig em = cfg.emitter;
  em.gamma = 0.0;
  em.probe.reset();
  em.protection_on = scenario == Scenario::protected_drive;

  ProcessData data;
  data.inputs = tomography_inputs();
  const std::array<Eigen::Vector2cd, 4> kets = {
      Eigen::Vector2cd(1, 0), Eigen::Vector2cd(0, 1),
      Eigen::Vector2cd((1.0 / std::numbers::sqrt2), (1.0 / std::numbers::sqrt2)),
      Eigen::Vector2cd((1.0 / std::numbers::sqrt2), I1 * (1.0 / std::numbers::sqrt2))};

  const std::size_t n = scenario == Scenario::ideal ? 1 : cfg.n_realizations;
  // Evolve |1> and |2>; every input is a superposition of the two columns.
  const auto outputs = parallel_map(n, cfg.threads, [&](std::size_t r) {
    NoiseTrace noise = [&] {
      if (scenario == Scenario::ideal) return make_static_trace(0.0, horizon / 2000.0, 2000);
      const double dt = cfg.noise_dt.value_or(default_rtn_dt(cfg.rtn, horizon));
      return generate_rtn_trace(cfg.rtn, dt, steps_for_horizon(horizon, dt),
                                derive_seed(cfg.master_seed, Stream::qpt_noise, r));
    }();
    HamiltonianSpec spec(em, std::move(noise), pulses);
    Eigen::Matrix<Complex, 3, 2> cols;
    for (int b = 0; b < 2; ++b)
      cols.col(b) = evolve_pure(PureState::basis(b), spec, 0.0, horizon, cfg.step)
                        .final_state.amplitudes;
    std::array<Matrix2, 4> rhos;
    for (int i = 0; i < 4; ++i) {
      const Eigen::Vector2cd v = (cols * kets[i]).head<2>();
      rhos[i] = v * v.adjoint() / v.squaredNorm();
    }
    return rhos;
  });

  for (int i = 0; i < 4; ++i) {
    Matrix2 acc = Matrix2::Zero();
    for (const auto& o : outputs) acc += o[i];
    data.outputs[i] = acc / static_cast<double>(outputs.size());
  }
  return data;
}

ProcessData simulate_process(const TomographyConfig& cfg, bool protection_on) {
  return simulate_process(cfg, protection_on ? Scenario::protected_drive : Scenario::noisy);
}

Matrix2 state_tomography(const Matrix2& rho_true, std::size_t shots, std::uint64_t seed,
                         bool exact) {
  if (exact) return rho_true;
  require(shots >= 3, "state tomography needs >= 3 shots");
  const std::size_t per_axis = shots / 3;
  Rng rng = make_rng(seed);
  Matrix2 rho = 0.5 * Matrix2::Identity();
  for (int k = 1; k <= 3; ++k) {
    const double expectation = (rho_true * pauli(k)).trace().real();
    const double p_up = std::clamp(0.5 * (1.0 + expectation), 0.0, 1.0);
    std::binomial_distribution<std::size_t> draw(per_axis, p_up);
    const double ups = static_cast<double>(draw(rng));
    const double estimate = 2.0 * ups / static_cast<double>(per_axis) - 1.0;
    rho += 0.5 * estimate * pauli(k);
  }
  return project_physical(rho);
}

ChiResult chi_from_io(const std::array<Matrix2, 4>& inputs,
                      const std::array<Matrix2, 4>& outputs) {
  Eigen::Matrix<Complex, 16, 16> a;
  Eigen::Matrix<Complex, 16, 1> rhs;
  for (int j = 0; j < 4; ++j) {
    for (int m = 0; m < 4; ++m)
      for (int n = 0; n < 4; ++n) {
        const Matrix2 term = pauli(m) * inputs[j] * pauli(n);
        for (int r = 0; r < 2; ++r)
          for (int c = 0; c < 2; ++c) a(j * 4 + r * 2 + c, m * 4 + n) = term(r, c);
      }
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) rhs(j * 4 + r * 2 + c) = outputs[j](r, c);
  }
  Eigen::FullPivLU<Eigen::Matrix<Complex, 16, 16>> lu(a);
  lu.setThreshold(1e-10);
  if (lu.rank() < 16)
    fail(ErrorCode::invalid_argument, "tomography inputs do not span the operator space");
  const auto x = lu.solve(rhs).eval();

  ChiMatrix chi;
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n) chi(m, n) = x(m * 4 + n);
  chi = 0.5 * (chi + chi.adjoint()).eval();
  const Complex tr = chi.trace();
  require(std::abs(tr) > 1e-12, "reconstructed process has zero trace");
  chi /= tr.real();
  return {chi, project_physical(chi)};
}

double process_fidelity(const ChiMatrix& chi, const ChiMatrix& chi_ideal) {
  require(std::abs(chi.trace() - Complex(1.0)) < 1e-6, "chi must be trace-normalized");
  require(std::abs(chi_ideal.trace() - Complex(1.0)) < 1e-6,
          "ideal chi must be trace-normalized");
  return std::clamp((chi_ideal * chi).trace().real(), 0.0, 1.0);
}

QptResult qpt_experiment(const TomographyConfig& cfg) {
  cfg.validate();
  QptResult res;
  res.chi_target = chi_of_unitary(ideal_unitary(cfg.gate));
  const Scenario scenarios[] = {Scenario::ideal, Scenario::noisy, Scenario::protected_drive};
  ChiMatrix* slots[] = {&res.chi_ideal, &res.chi_noisy, &res.chi_protected};
  double* fids[] = {&res.fidelity_ideal, &res.fidelity_noisy, &res.fidelity_protected};
  for (int s = 0; s < 3; ++s) {
    const auto data = simulate_process(cfg, scenarios[s]);
    std::array<Matrix2, 4> measured;
    for (int i = 0; i < 4; ++i)
      measured[i] = state_tomography(
          data.outputs[i], cfg.shots,
          derive_seed(cfg.master_seed, Stream::qpt_shots, static_cast<std::uint64_t>(4 * s + i)),
          cfg.exact_expectations);
    *slots[s] = chi_from_io(data.inputs, measured).physical;
    *fids[s] = process_fidelity(*slots[s], res.chi_target);
  }
  return res;
}

void write_chi_csv(const ChiMatrix& chi, std::ostream& out) {
  out << "i,j,re,im\n";
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      out << i << ',' << j << ',' << format_double(chi(i, j).real()) << ','
          << format_double(chi(i, j).imag()) << '\n';
}

}  // namespace starkshield
