#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "oracles.hpp"
#include "sunivr/coherent.hpp"
#include "sunivr/dynamics.hpp"
#include "sunivr/fock.hpp"
#include "sunivr/model.hpp"
#include "support.hpp"

using namespace sunivr;

namespace {

CVector scalar_vector(Complex z) {
  CVector v(1);
  v(0) = z;
  return v;
}

void check_oracle(const test::OracleResult& r) {
  INFO(r.name << " = " << r.value << " (bound " << r.bound << ")");
  CHECK(r.passed());
}

// exp(-i H t) restricted to one particle, acting on (v, 1).
Complex linear_label(double omega, double t, Complex v0) {
  Eigen::Matrix2d h;
  h << omega, std::sqrt(2.0) * omega, std::sqrt(2.0) * omega, 0.0;
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(h);
  const Eigen::Matrix2cd u =
      es.eigenvectors().cast<Complex>() *
      (es.eigenvalues().cast<Complex>() * Complex(0.0, -t)).array().exp().matrix().asDiagonal() *
      es.eigenvectors().transpose().cast<Complex>();
  const Eigen::Vector2cd c = u * Eigen::Vector2cd(v0, 1.0);
  return c(0) / c(1);
}

}  // namespace

TEST_CASE("initial snapshot") {
  const auto model = su3_hamiltonian({3, 30, -1.0, -1.0});
  CVector w(2);
  w << Complex(0.3, 0.1), Complex(0.2, 0.0);
  const std::vector<double> times{0.0, 0.5};
  const TrajectoryRecord rec = integrate_trajectory(*model, w, w.conjugate(), times);
  REQUIRE(rec.snapshots.size() == 2);
  const TrajectorySnapshot& s = rec.snapshots[0];
  CHECK(s.t == 0.0);
  CHECK(s.m12.norm() == 0.0);
  CHECK((s.m22 - CMatrix::Identity(2, 2)).norm() == 0.0);
  CHECK(s.action == Complex(0.0));
  CHECK(s.correction == Complex(0.0));
  CHECK(s.log_det_m22 == Complex(0.0));
  CHECK(rec.outcome.status == TrajectoryStatus::Alive);
  CHECK(rec.outcome.outputs == 2);
}

TEST_CASE("output times are hit exactly") {
  const auto model = su2_hamiltonian({2, 30, -1.0, -1.0});
  const auto times = test::uniform_times(2.0, 9);
  const auto rec = integrate_trajectory(*model, scalar_vector(0.4),
                                        scalar_vector(0.4), times);
  REQUIRE(rec.snapshots.size() == times.size());
  for (std::size_t k = 0; k < times.size(); ++k) CHECK(rec.snapshots[k].t == times[k]);
  const std::vector<double> bad{0.0, 1.0, 0.5};
  CHECK_THROWS_AS(integrate_trajectory(*model, scalar_vector(0.4), scalar_vector(0.4), bad),
                  DomainError);
}

TEST_CASE("tangent blocks match finite-difference trajectories") {
  check_oracle(test::tangent_blocks_oracle());
}

TEST_CASE("energy is conserved along trajectories") {
  check_oracle(test::energy_conservation_oracle());
}

TEST_CASE("three-mode invariant subspaces are preserved") {
  check_oracle(test::invariant_subspace_oracle());
}

TEST_CASE("restricted three-mode trajectories equal two-mode trajectories") {
  check_oracle(test::reduction_equivalence_oracle());
}

TEST_CASE("action and correction are real on principal trajectories") {
  check_oracle(test::principal_reality_oracle());
}

TEST_CASE("linear reduced flow follows the single-particle rotation") {
  const double omega = -1.0;
  const auto model = su2_hamiltonian({2, 30, omega, 0.0});
  const Complex v0 = test::kTanPi8;
  const auto times = test::uniform_times(6.0, 61);
  const auto rec = integrate_trajectory(*model, scalar_vector(v0),
                                        scalar_vector(std::conj(v0)), times);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const Complex v = linear_label(omega, times[k], v0);
    CHECK(std::abs(rec.snapshots[k].state.w(0) - v) < 1e-6);
    CHECK(std::abs(std::conj(rec.snapshots[k].state.wbar(0)) - v) < 1e-6);
  }
}

TEST_CASE("propagator at t = 0 is the coherent overlap") {
  std::mt19937_64 rng(31);
  for (int modes : {2, 3}) {
    const auto model = make_model({modes, 30, -1.0, -1.0});
    for (int trial = 0; trial < 5; ++trial) {
      const CVector w = test::random_vector(rng, modes - 1, 0.5);
      const CVector wbar = test::random_vector(rng, modes - 1, 0.5);
      const std::vector<double> times{0.0};
      const auto rec = integrate_trajectory(*model, w, wbar, times);
      const Complex k0 = std::exp(rec.snapshots[0].log_amplitude);
      CHECK(std::abs(k0 - overlap(CVector(wbar.conjugate()), w, 30)) < 1e-12);
      const auto direct = propagator_log_amplitude(rec.snapshots[0], w, wbar, 30, modes);
      REQUIRE(direct.has_value());
      CHECK(std::abs(*direct - rec.snapshots[0].log_amplitude) < 1e-12);
    }
  }
}

TEST_CASE("linear propagator is exact including its phase") {
  std::mt19937_64 rng(32);
  const int n = 12;
  const auto times = test::uniform_times(6.0, 13);
  for (int modes : {2, 3}) {
    const ModelParams p{modes, n, -1.0, 0.0};
    const FockBasis b(modes, n);
    const auto h = modes == 2 ? build_reduced_hamiltonian(p, b) : build_hamiltonian(p, b);
    const ExactPropagator u(h);
    const auto model = make_model(p);
    for (int trial = 0; trial < 3; ++trial) {
      const CVector w = test::random_vector(rng, modes - 1, 0.5);
      const CVector wbar =
          CVector(w.conjugate()) + test::random_vector(rng, modes - 1, 0.2);
      const FockVector psi0 = coherent_amplitudes(w, b);
      const auto rec = integrate_trajectory(*model, w, wbar, times);
      REQUIRE(rec.outcome.status == TrajectoryStatus::Alive);
      double first = 0.0;
      for (std::size_t k = 0; k < times.size(); ++k) {
        const TrajectorySnapshot& s = rec.snapshots[k];
        const FockVector uf = coherent_amplitudes(s.state.wbar.conjugate(), b);
        const Complex exact = uf.amplitudes.dot(u.evolve(psi0, times[k]).amplitudes);
        const Complex semi = std::exp(s.log_amplitude);
        CHECK(std::abs(semi - exact) < 1e-6);
        if (k == 0) first = std::abs(semi);
        CHECK(std::abs(std::abs(semi) - first) < 1e-6);
      }
    }
  }
}

TEST_CASE("determinant blocks stay regular in the linear case") {
  const auto model = su2_hamiltonian({2, 30, -1.0, 0.0});
  const auto times = test::uniform_times(6.0, 25);
  const auto rec = integrate_trajectory(*model, scalar_vector(0.9),
                                        scalar_vector(Complex(0.2, 0.5)), times);
  for (const auto& s : rec.snapshots) {
    const double d = std::abs(s.m22.determinant());
    CHECK(d > 1e-2);
    CHECK(d < 1e2);
  }
}

TEST_CASE("boundary term") {
  const CVector zero = CVector::Zero(1);
  const CVector wt = scalar_vector(Complex(0.3, 0.4));
  const CVector wbt = scalar_vector(Complex(0.5, -0.1));
  const Complex g = boundary_term(zero, zero, wbt, wt, 10);
  CHECK(std::abs(g - (-kI * 5.0 * std::log(1.0 + wbt(0) * wt(0)))) < 1e-14);

  // A principal path gives -i (N/2) times a real logarithm.
  const CVector wi = scalar_vector(Complex(0.2, 0.1));
  const Complex gp = boundary_term(wi, wi.conjugate(), wt.conjugate(), wt, 10);
  CHECK(std::abs(gp.real()) < 1e-14);
  CHECK(gp.imag() == doctest::Approx(-5.0 * std::log((1.0 + wt.squaredNorm()) *
                                                     (1.0 + wi.squaredNorm()))));
}

TEST_CASE("boundary term follows a winding path continuously") {
  const int n = 30;
  const CVector zero = CVector::Zero(1);
  Complex previous_log = std::log(Complex(0.5, 0.0));
  Complex g = 0.0;
  const int steps = 400;
  for (int k = 0; k <= steps; ++k) {
    const double theta = 4.0 * kPi * k / steps;
    // 1 + wbar.w traces 0.5 exp(i theta), circling the origin twice.
    const CVector w = scalar_vector(0.5 * std::exp(Complex(0.0, theta)) - 1.0);
    const Complex next = boundary_term(zero, zero, CVector::Ones(1), w, n,
                                       previous_log);
    if (k > 0) CHECK(std::abs(next - g) < 0.5 * n * 0.1);
    g = next;
    previous_log = g / (-kI * (0.5 * n));
  }
  CHECK(std::abs(g - (-kI * 15.0 * (std::log(0.5) + Complex(0.0, 4.0 * kPi)))) < 1e-10);
}

TEST_CASE("logarithm unwrapping") {
  const Complex z = std::exp(Complex(0.2, 3.0));
  CHECK(std::abs(unwrap_log(z, Complex(0.0, 3.0 + 2 * kPi)) -
                 Complex(0.2, 3.0 + 2 * kPi)) < 1e-12);
  CHECK(std::abs(unwrap_log(z, Complex(0.0, -3.5)) - Complex(0.2, 3.0 - 2 * kPi)) < 1e-12);
}

TEST_CASE("focal points have no amplitude") {
  TrajectorySnapshot s;
  s.state = {CVector::Zero(1), CVector::Zero(1)};
  s.m12 = CMatrix::Zero(1, 1);
  s.m22 = CMatrix::Zero(1, 1);
  CHECK_FALSE(propagator_log_amplitude(s, CVector::Zero(1), CVector::Zero(1), 10, 2)
                  .has_value());
}

TEST_CASE("singular starting point is reported, not thrown") {
  const auto model = su2_hamiltonian({2, 10, -1.0, -1.0});
  const std::vector<double> times{0.0, 1.0};
  const auto rec = integrate_trajectory(*model, scalar_vector(1.0), scalar_vector(-1.0),
                                        times);
  CHECK(rec.outcome.status == TrajectoryStatus::Singular);
  CHECK(rec.outcome.t_stop == 0.0);
  CHECK(std::string(status_name(TrajectoryStatus::Singular)) == "singular");
}

TEST_CASE("accepted log-amplitude increments respect the phase guard") {
  struct Recorder final : StepMonitor {
    double worst = 0.0;
    bool on_step(double, Complex a, double, Complex b) override {
      worst = std::max(worst, std::abs(b.imag() - a.imag()));
      return true;
    }
  } recorder;
  const auto model = su2_hamiltonian({2, 30, -1.0, -8.0});
  const auto times = test::uniform_times(4.0, 5);
  integrate_trajectory(*model, scalar_vector(test::kTanPi8),
                       scalar_vector(Complex(0.6, 0.3)), times, {}, &recorder);
  CHECK(recorder.worst < kPi / 2);
}

TEST_CASE("a monitor can stop a trajectory") {
  struct StopLate final : StepMonitor {
    bool on_step(double t0, Complex, double, Complex) override { return t0 < 1.0; }
  } stop;
  const auto model = su2_hamiltonian({2, 30, -1.0, -1.0});
  const auto times = test::uniform_times(3.0, 7);
  const auto rec = integrate_trajectory(*model, scalar_vector(0.4), scalar_vector(0.4),
                                        times, {}, &stop);
  CHECK(rec.outcome.status == TrajectoryStatus::Filtered);
  CHECK(rec.outcome.t_stop >= 1.0);
  CHECK(rec.outcome.t_stop < 1.1);
  for (const auto& s : rec.snapshots) CHECK(s.t <= rec.outcome.t_stop);
}
