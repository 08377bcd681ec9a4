#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "starkshield/errors.hpp"
#include "starkshield/tomography.hpp"

using namespace starkshield;

namespace {

const Complex I1(0.0, 1.0);

Matrix2 hadamard_matrix() {
  Matrix2 h;
  h << 1, 1, 1, -1;
  return h / std::numbers::sqrt2;
}

// Kraus operators of a random CPTP map from a random 4x2 isometry.
std::array<Matrix2, 2> random_kraus(unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::Matrix<Complex, 4, 4> a;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) a(i, j) = Complex(g(rng), g(rng));
  const Eigen::Matrix<Complex, 4, 4> q = Eigen::HouseholderQR<Eigen::Matrix<Complex, 4, 4>>(a).householderQ();
  return {q.block<2, 2>(0, 0), q.block<2, 2>(2, 0)};
}

Matrix2 apply_kraus(const std::array<Matrix2, 2>& k, const Matrix2& rho) {
  return k[0] * rho * k[0].adjoint() + k[1] * rho * k[1].adjoint();
}

// chi_mn = sum_k a_km conj(a_kn) with K_k = sum_m a_km sigma_m.
ChiMatrix chi_of_kraus(const std::array<Matrix2, 2>& k) {
  ChiMatrix chi = ChiMatrix::Zero();
  for (const auto& op : k) {
    Eigen::Vector4cd a;
    for (int m = 0; m < 4; ++m) a(m) = 0.5 * (pauli(m) * op).trace();
    chi += a * a.adjoint();
  }
  return chi;
}

Matrix2 random_state(unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix2 a;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) a(i, j) = Complex(g(rng), g(rng));
  Matrix2 rho = a * a.adjoint();
  return rho / rho.trace();
}

TomographyConfig quick_config(const GateSpec& gate) {
  TomographyConfig c = default_tomography_config(gate);
  c.exact_expectations = true;
  c.n_realizations = 8;
  return c;
}

}  // namespace

TEST_CASE("pauli basis") {
  for (int i = 0; i < 4; ++i) {
    CHECK((pauli(i) * pauli(i) - Matrix2::Identity()).norm() < 1e-15);
    for (int j = 0; j < 4; ++j)
      CHECK(std::abs((pauli(i).adjoint() * pauli(j)).trace()) == doctest::Approx(i == j ? 2.0 : 0.0));
  }
  CHECK((pauli(1) * pauli(2)).isApprox(I1 * pauli(3)));
  CHECK_THROWS_AS(pauli(4), Error);
}

TEST_CASE("gate unitaries") {
  const double rabi = 2.0;
  SUBCASE("x pi") {
    const Matrix2 u = ideal_unitary(GateSpec::x_pi(rabi));
    CHECK(process_fidelity(chi_of_unitary(u), chi_of_unitary(pauli(1))) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(GateSpec::x_pi(rabi).end_time() == doctest::Approx(std::numbers::pi / (2.0 * rabi)));
  }
  SUBCASE("hadamard") {
    const GateSpec g = GateSpec::hadamard(rabi);
    const Matrix2 u = ideal_unitary(g);
    CHECK(process_fidelity(chi_of_unitary(u), chi_of_unitary(hadamard_matrix())) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(g.rotations.size() == 2);
    CHECK(g.rotations[0].axis == PauliAxis::y);
  }
  SUBCASE("pulses are contiguous square pulses") {
    const auto p = gate_pulses(GateSpec::hadamard(rabi));
    REQUIRE(p.size() == 2);
    CHECK(p[0].t_start == 0.0);
    CHECK(p[1].t_start == doctest::Approx(p[0].t_end));
    CHECK(p[1].t_end == doctest::Approx(GateSpec::hadamard(rabi).end_time()));
  }
  SUBCASE("invalid gates") {
    GateSpec g = GateSpec::x_pi(rabi);
    g.rabi = 0.0;
    CHECK_THROWS_AS(g.validate(), Error);
    g = GateSpec{};
    CHECK_THROWS_AS(g.validate(), Error);
  }
}

TEST_CASE("chi of unitaries") {
  const ChiMatrix id = chi_of_unitary(Matrix2::Identity());
  CHECK(id(0, 0) == Complex(1.0));
  CHECK(id.cwiseAbs().sum() == doctest::Approx(1.0));
  CHECK(process_fidelity(id, id) == doctest::Approx(1.0));
  CHECK(process_fidelity(id, chi_of_unitary(pauli(1))) == doctest::Approx(0.0));
  const ChiMatrix h = chi_of_unitary(hadamard_matrix());
  CHECK(h.trace().real() == doctest::Approx(1.0));
  CHECK(std::abs(h(1, 3) - 0.5) < 1e-15);
  const Matrix2 rho = random_state(3);
  const Matrix2 expected = hadamard_matrix() * rho * hadamard_matrix().adjoint();
  CHECK((apply_chi(h, rho) - expected).norm() < 1e-14);
}

TEST_CASE("linear inversion recovers a random channel") {
  for (unsigned seed : {1u, 2u, 3u, 4u}) {
    const auto k = random_kraus(seed);
    const auto inputs = tomography_inputs();
    std::array<Matrix2, 4> outputs;
    for (int i = 0; i < 4; ++i) outputs[i] = apply_kraus(k, inputs[i]);
    const auto chi = chi_from_io(inputs, outputs);
    CHECK((chi.raw - chi_of_kraus(k)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((chi.physical - chi.raw).cwiseAbs().maxCoeff() < 1e-10);
    const Matrix2 rho = random_state(100 + seed);
    CHECK((apply_chi(chi.raw, rho) - apply_kraus(k, rho)).norm() < 1e-12);
  }
}

TEST_CASE("linear inversion rejects degenerate inputs") {
  auto inputs = tomography_inputs();
  inputs[3] = inputs[0];
  std::array<Matrix2, 4> outputs = inputs;
  CHECK_THROWS_AS(chi_from_io(inputs, outputs), Error);
}

TEST_CASE("process fidelity needs unit-trace chi") {
  ChiMatrix a = chi_of_unitary(Matrix2::Identity());
  CHECK_THROWS_AS(process_fidelity(2.0 * a, a), Error);
  CHECK_THROWS_AS(process_fidelity(a, 0.5 * a), Error);
}

TEST_CASE("physical projection") {
  ChiMatrix c = chi_of_unitary(Matrix2::Identity());
  c(1, 1) = -0.1;
  c(0, 0) = 1.1;
  const ChiMatrix p = project_physical(c);
  Eigen::SelfAdjointEigenSolver<ChiMatrix> es(p);
  CHECK(es.eigenvalues().minCoeff() >= -1e-15);
  CHECK(p.trace().real() == doctest::Approx(1.0));
  Matrix2 r;
  r << 1.2, 0, 0, -0.2;
  const Matrix2 q = project_physical(r);
  CHECK(q(0, 0).real() == doctest::Approx(1.0));
  CHECK(std::abs(q(1, 1)) < 1e-15);
}

TEST_CASE("state tomography") {
  Matrix2 plus;
  plus << 0.5, 0.5, 0.5, 0.5;
  SUBCASE("exact expectations reproduce the state") {
    const Matrix2 rho = random_state(9);
    CHECK((state_tomography(rho, 300, 1, true) - rho).norm() < 1e-14);
  }
  SUBCASE("finite shots converge like 1/sqrt(N)") {
    auto error = [&](std::size_t shots) {
      double sum = 0.0;
      for (std::uint64_t s = 0; s < 40; ++s) sum += (state_tomography(plus, shots, s) - plus).squaredNorm();
      return std::sqrt(sum / 40.0);
    };
    const double e1 = error(300), e2 = error(30000);
    CHECK(e1 / e2 == doctest::Approx(10.0).epsilon(0.3));
    const Matrix2 est = state_tomography(plus, 30000, 5);
    CHECK((plus * est).trace().real() > 0.98);
  }
  SUBCASE("seeded") {
    CHECK(state_tomography(plus, 300, 7) == state_tomography(plus, 300, 7));
    CHECK_THROWS_AS(state_tomography(plus, 0, 7), Error);
  }
}

TEST_CASE("noise-free gate simulation matches the target unitary") {
  for (const auto& gate : {GateSpec::x_pi(2.0), GateSpec::hadamard(2.0)}) {
    const auto cfg = quick_config(gate);
    const auto data = simulate_process(cfg, Scenario::ideal);
    const Matrix2 u = ideal_unitary(gate);
    for (int i = 0; i < 4; ++i)
      CHECK((data.outputs[i] - u * data.inputs[i] * u.adjoint()).norm() < 1e-6);
    const auto chi = chi_from_io(data.inputs, data.outputs);
    CHECK(process_fidelity(chi.physical, chi_of_unitary(u)) > 1.0 - 1e-6);
  }
}

TEST_CASE("protection restores gate fidelity under telegraph noise") {
  auto cfg = quick_config(GateSpec::x_pi(2.0));
  cfg.master_seed = 21;
  const auto res = qpt_experiment(cfg);
  CHECK(res.fidelity_ideal > 0.999);
  CHECK(res.fidelity_protected > res.fidelity_noisy + 0.5);
  CHECK(res.fidelity_protected > 0.98);

  cfg.threads = 3;
  const auto again = qpt_experiment(cfg);
  CHECK(again.chi_noisy == res.chi_noisy);
  CHECK(again.chi_protected == res.chi_protected);

  std::ostringstream os;
  write_chi_csv(res.chi_protected, os);
  const auto text = os.str();
  CHECK(text.rfind("i,j,re,im\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 17);
}

TEST_CASE("plus state at 1e4 shots") {
  Matrix2 plus;
  plus << 0.5, 0.5, 0.5, 0.5;
  int good = 0;
  const int trials = 400;
  for (int s = 0; s < trials; ++s)
    if ((plus * state_tomography(plus, 10000, 1000 + s)).trace().real() >= 0.995) ++good;
  CHECK(good >= trials * 99 / 100);
}

TEST_CASE("chi reconstruction error follows shots^-1/2") {
  const auto k = random_kraus(11);
  const auto inputs = tomography_inputs();
  std::array<Matrix2, 4> outputs;
  for (int i = 0; i < 4; ++i) outputs[i] = apply_kraus(k, inputs[i]);
  const ChiMatrix exact = chi_of_kraus(k);
  auto rms = [&](std::size_t shots) {
    double acc = 0.0;
    const int reps = 30;
    for (int r = 0; r < reps; ++r) {
      std::array<Matrix2, 4> measured;
      for (int i = 0; i < 4; ++i) measured[i] = state_tomography(outputs[i], shots, 97 * r + i);
      acc += (chi_from_io(inputs, measured).raw - exact).squaredNorm();
    }
    return std::sqrt(acc / reps);
  };
  const double e3 = rms(1000), e4 = rms(10000), e5 = rms(100000);
  CHECK(e3 / e4 == doctest::Approx(std::sqrt(10.0)).epsilon(0.25));
  CHECK(e4 / e5 == doctest::Approx(std::sqrt(10.0)).epsilon(0.25));
}

TEST_CASE("reconstructed channel acts correctly on random states") {
  const auto k = random_kraus(12);
  const auto inputs = tomography_inputs();
  std::array<Matrix2, 4> outputs;
  for (int i = 0; i < 4; ++i) outputs[i] = apply_kraus(k, inputs[i]);
  const auto chi = chi_from_io(inputs, outputs).physical;
  for (unsigned s = 0; s < 20; ++s) {
    const Matrix2 rho = random_state(500 + s);
    Eigen::SelfAdjointEigenSolver<Matrix2> es(apply_chi(chi, rho) - apply_kraus(k, rho));
    CHECK(0.5 * es.eigenvalues().cwiseAbs().sum() < 1e-8);
  }
}
