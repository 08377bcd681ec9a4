#include "starkshield/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "starkshield/errors.hpp"
#include "starkshield/textio.hpp"

namespace starkshield {

PureState PureState::basis(int level) {
  require(level >= 0 && level < 3, "basis level must be 0, 1 or 2");
  PureState s;
  s.amplitudes(level) = 1.0;
  return s;
}

DensityMatrix DensityMatrix::from_pure(const PureState& psi) {
  return {psi.amplitudes * psi.amplitudes.adjoint()};
}

double DensityMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Matrix3> solver(rho, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

void StepControl::validate() const {
  require(steps_per_drive_period >= 8, "steps_per_drive_period must be >= 8");
  require(max_step > 0.0, "max_step must be > 0");
  require(max_phase > 0.0 && std::isfinite(max_phase), "max_phase must be > 0");
  require(refinement >= 1, "refinement must be >= 1");
}

double coherence_signal(const PureState& psi) {
  const Complex rho12 = psi.amplitudes(0) * std::conj(psi.amplitudes(1));
  return 0.5 * (1.0 + 2.0 * rho12.real());
}

namespace {

/// Splits [t0, t1] into segments on which the noise sample and the active
/// pulse set are constant, and picks the RK4 substep count for each.
class Segmenter {
 public:
  Segmenter(const HamiltonianSpec& spec, double t0, double t1,
            const StepControl& ctl, std::span<const double> samples)
      : spec_(spec), ctl_(ctl), t1_(t1), samples_(samples) {
    ctl.validate();
    if (!(t1 >= t0) || !(t0 >= 0.0))
      fail(ErrorCode::invalid_argument, "evolution interval must satisfy 0 <= t0 <= t1");
    const double h = spec.horizon();
    if (t1 > h * (1.0 + 1e-12) + 1e-15)
      fail(ErrorCode::out_of_range, "evolution end " + format_double(t1) +
                                        " exceeds noise horizon " + format_double(h));
    for (std::size_t i = 0; i < samples.size(); ++i) {
      require(samples[i] >= t0 - tol(t0) && samples[i] <= t1 + tol(t1),
              "sample time " + format_double(samples[i]) + " outside evolution interval");
      require(i == 0 || samples[i] >= samples[i - 1], "sample times must be sorted");
    }
    for (const auto& p : spec.pulses()) {
      if (p.t_start > t0 && p.t_start < t1) edges_.push_back(p.t_start);
      if (p.t_end > t0 && p.t_end < t1) edges_.push_back(p.t_end);
    }
    std::sort(edges_.begin(), edges_.end());

    dt_ = spec.noise().dt();
    last_cell_ = spec.noise().size() - 1;
    cell_ = static_cast<std::size_t>(std::floor(t0 / dt_));
    while (boundary() <= t0 + tol(t0)) ++cell_;

    const auto& em = spec.emitter();
    if (em.protection_on) {
      drive_amp_ = std::numbers::sqrt2 * em.omega_drive;
      carrier_ = std::max(carrier_, em.delta_drive);
    }
    if (em.probe) {
      probe_amp_ = 0.5 * em.probe->g;
      carrier_ = std::max(carrier_, std::abs(em.probe->delta_omega));
    }
    cur_ = t0;
  }

  static double tol(double t) { return 1e-12 * std::max(1.0, std::abs(t)); }

  double boundary() const {
    return cell_ >= last_cell_ ? INFINITY : dt_ * static_cast<double>(cell_ + 1);
  }

  /// Emits samples at the current time; returns how many.
  template <class Fn>
  void emit_samples(Fn&& fn) {
    while (next_sample_ < samples_.size() && samples_[next_sample_] <= cur_ + tol(cur_)) {
      fn();
      ++next_sample_;
    }
  }

  bool done() const { return cur_ >= t1_ - tol(t1_); }

  struct Segment {
    double start, end, delta;
    std::size_t substeps;
    Matrix3 static_part;
  };

  Segment next() {
    double end = std::min(t1_, boundary());
    while (edge_ < edges_.size() && edges_[edge_] <= cur_ + tol(cur_)) ++edge_;
    if (edge_ < edges_.size()) end = std::min(end, edges_[edge_]);
    if (next_sample_ < samples_.size()) end = std::min(end, samples_[next_sample_]);

    const double delta = spec_.noise().values()[std::min(cell_, last_cell_)];
    Segment seg{cur_, end, delta, 0, spec_.static_part(delta, 0.5 * (cur_ + end))};

    Eigen::Matrix3d bound = seg.static_part.cwiseAbs();
    bound(1, 2) += drive_amp_;
    bound(2, 1) += drive_amp_;
    bound(0, 1) += probe_amp_;
    bound(1, 0) += probe_amp_;
    const double norm = bound.rowwise().sum().maxCoeff();

    double h = ctl_.max_step;
    if (carrier_ > 0.0)
      h = std::min(h, 2.0 * std::numbers::pi / (carrier_ * ctl_.steps_per_drive_period));
    if (norm > 0.0) h = std::min(h, ctl_.max_phase / norm);
    const double len = end - cur_;
    std::size_t n = 1;
    if (std::isfinite(h)) n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len / h - 1e-9)));
    seg.substeps = n * static_cast<std::size_t>(ctl_.refinement);

    aligned_ = aligned_ && end <= boundary() + tol(end);
    cur_ = end;
    if (cur_ >= boundary() - tol(cur_)) ++cell_;
    return seg;
  }

  bool aligned() const { return aligned_; }

 private:
  const HamiltonianSpec& spec_;
  const StepControl& ctl_;
  double t1_;
  std::span<const double> samples_;
  std::vector<double> edges_;
  std::size_t edge_ = 0;
  std::size_t next_sample_ = 0;
  double dt_ = 1.0;
  std::size_t cell_ = 0, last_cell_ = 0;
  double cur_ = 0.0;
  double drive_amp_ = 0.0, probe_amp_ = 0.0, carrier_ = 0.0;
  bool aligned_ = true;
};

// Norm or trace drift beyond this means the step is far too coarse for H.
constexpr double kDivergence = 1e-2;

void check_divergence(double drift, double t, bool finite) {
  if (!finite || !(drift <= kDivergence))
    fail(ErrorCode::numerical, "integration diverged at t = " + format_double(t) +
                                   " (drift " + format_double(drift) + "); reduce step.max_phase");
}

inline Matrix3 full_hamiltonian(const HamiltonianSpec& spec, const Matrix3& base, double t) {
  Matrix3 h = base;
  const double c = spec.drive_coefficient(t);
  h(1, 2) += c;
  h(2, 1) += c;
  const Complex p = spec.probe_coefficient(t);
  h(0, 1) += p;
  h(1, 0) += std::conj(p);
  return h;
}

}  // namespace

PureEvolution evolve_pure(const PureState& initial, const HamiltonianSpec& spec,
                          double t0, double t1, const StepControl& ctl,
                          std::span<const double> sample_times) {
  Segmenter seg(spec, t0, t1, ctl, sample_times);
  PureEvolution out;
  out.samples.reserve(sample_times.size());
  Vector3 psi = initial.amplitudes;
  const double norm0 = psi.norm();
  const Complex minus_i(0.0, -1.0);

  auto record = [&] { out.samples.push_back(PureState{psi}); };
  seg.emit_samples(record);

  while (!seg.done()) {
    const auto s = seg.next();
    const double h = (s.end - s.start) / static_cast<double>(s.substeps);
    Matrix3 h_start = full_hamiltonian(spec, s.static_part, s.start);
    for (std::size_t n = 0; n < s.substeps; ++n) {
      const double t = s.start + h * static_cast<double>(n);
      const Matrix3 h_mid = full_hamiltonian(spec, s.static_part, t + 0.5 * h);
      const Matrix3 h_end = full_hamiltonian(spec, s.static_part, t + h);
      const Vector3 k1 = minus_i * (h_start * psi);
      const Vector3 k2 = minus_i * (h_mid * (psi + (0.5 * h) * k1));
      const Vector3 k3 = minus_i * (h_mid * (psi + (0.5 * h) * k2));
      const Vector3 k4 = minus_i * (h_end * (psi + h * k3));
      psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      h_start = h_end;
    }
    out.steps += s.substeps;
    out.max_norm_drift = std::max(out.max_norm_drift, std::abs(psi.norm() - norm0));
    check_divergence(out.max_norm_drift, s.end, psi.allFinite());
    seg.emit_samples(record);
  }
  seg.emit_samples(record);
  out.final_state = PureState{psi};
  out.grid_aligned = seg.aligned();
  return out;
}

namespace {

// Generator for Hermitian rho; -i[H, rho] = -i(M - M^+) with M = H rho.
inline Matrix3 gksl(const Matrix3& h, const Matrix3& rho, double gamma) {
  const Matrix3 m = h * rho;
  Matrix3 out = Complex(0.0, -1.0) * (m - m.adjoint());
  if (gamma > 0.0) {
    const double half = 0.5 * gamma;
    out(0, 0) += gamma * rho(1, 1);
    for (int j = 0; j < 3; ++j) {
      out(1, j) -= half * rho(1, j);
      out(j, 1) -= half * rho(j, 1);
    }
  }
  return out;
}

}  // namespace

LindbladEvolution evolve_lindblad(const DensityMatrix& initial,
                                  const HamiltonianSpec& spec, double t0,
                                  double t1, const StepControl& ctl,
                                  std::span<const double> sample_times) {
  Segmenter seg(spec, t0, t1, ctl, sample_times);
  const double gamma = spec.emitter().gamma;
  LindbladEvolution out;
  out.samples.reserve(sample_times.size());
  Matrix3 rho = initial.rho;
  const double trace0 = rho.trace().real();

  auto record = [&] {
    DensityMatrix d{rho};
    out.min_eigenvalue = std::min(out.min_eigenvalue, d.min_eigenvalue());
    out.samples.push_back(d);
  };
  seg.emit_samples(record);

  while (!seg.done()) {
    const auto s = seg.next();
    const double h = (s.end - s.start) / static_cast<double>(s.substeps);
    Matrix3 h_start = full_hamiltonian(spec, s.static_part, s.start);
    for (std::size_t n = 0; n < s.substeps; ++n) {
      const double t = s.start + h * static_cast<double>(n);
      const Matrix3 h_mid = full_hamiltonian(spec, s.static_part, t + 0.5 * h);
      const Matrix3 h_end = full_hamiltonian(spec, s.static_part, t + h);
      const Matrix3 k1 = gksl(h_start, rho, gamma);
      const Matrix3 k2 = gksl(h_mid, rho + (0.5 * h) * k1, gamma);
      const Matrix3 k3 = gksl(h_mid, rho + (0.5 * h) * k2, gamma);
      const Matrix3 k4 = gksl(h_end, rho + h * k3, gamma);
      rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      rho = 0.5 * (rho + rho.adjoint()).eval();
      h_start = h_end;
    }
    out.steps += s.substeps;
    out.max_trace_drift = std::max(out.max_trace_drift, std::abs(rho.trace().real() - trace0));
    check_divergence(out.max_trace_drift, s.end, rho.allFinite());
    seg.emit_samples(record);
  }
  seg.emit_samples(record);
  out.final_state = DensityMatrix{rho};
  out.min_eigenvalue = std::min(out.min_eigenvalue, out.final_state.min_eigenvalue());
  out.grid_aligned = seg.aligned();
  return out;
}

ConvergenceReport convergence_probe(const HamiltonianSpec& spec,
                                    const PureState& initial, double t1,
                                    const StepControl& ctl,
                                    const Observable& observable) {
  ConvergenceReport rep;
  StepControl c = ctl;
  const int base = ctl.refinement;
  c.refinement = base;
  rep.value_coarse = observable(evolve_pure(initial, spec, 0.0, t1, c).final_state);
  c.refinement = 2 * base;
  rep.value_fine = observable(evolve_pure(initial, spec, 0.0, t1, c).final_state);
  c.refinement = 4 * base;
  rep.value_finest = observable(evolve_pure(initial, spec, 0.0, t1, c).final_state);
  const double d1 = std::abs(rep.value_coarse - rep.value_fine);
  const double d2 = std::abs(rep.value_fine - rep.value_finest);
  rep.order = (d1 > 0.0 && d2 > 0.0) ? std::log2(d1 / d2) : std::nan("");
  return rep;
}

}  // namespace starkshield
