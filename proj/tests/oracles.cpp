#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "sunivr/coherent.hpp"
#include "sunivr/dynamics.hpp"
#include "sunivr/fock.hpp"
#include "sunivr/ivr.hpp"
#include "sunivr/model.hpp"
#include "support.hpp"

namespace sunivr::test {

namespace {

ModelParams su2_params(double chi) { return {2, 30, -1.0, chi}; }
ModelParams su3_params(double chi) { return {3, 30, -1.0, chi}; }

CVector reduced_initial() {
  CVector w(1);
  w(0) = kTanPi8;
  return w;
}

GridSpec fig1_grid() {
  return {CVector(reduced_initial().conjugate()), 0.7, 23};
}

IntegratorOptions tight() {
  IntegratorOptions o;
  o.rtol = 1e-12;
  o.atol = 1e-14;
  return o;
}

CVector su3_point() {
  CVector w(2);
  w << Complex(0.3, 0.1), Complex(0.25, -0.05);
  return w;
}

CVector su3_offset() {
  CVector d(2);
  d << Complex(0.05, 0.02), Complex(-0.03, 0.04);
  return d;
}

}  // namespace

OracleResult tangent_blocks_oracle() {
  const auto model = su3_hamiltonian(su3_params(-1.0));
  const CVector w = su3_point();
  const CVector wbar = CVector(w.conjugate()) + su3_offset();
  const std::vector<double> times{0.0, 1.0};
  const IntegratorOptions opts = tight();
  const TrajectoryRecord base = integrate_trajectory(*model, w, wbar, times, opts);
  const TrajectorySnapshot& end = base.snapshots.back();

  const double h = 1e-6;
  CMatrix fd12(2, 2), fd22(2, 2);
  for (int j = 0; j < 2; ++j) {
    CVector plus = wbar, minus = wbar;
    plus(j) += h;
    minus(j) -= h;
    const auto rp = integrate_trajectory(*model, w, plus, times, opts);
    const auto rm = integrate_trajectory(*model, w, minus, times, opts);
    const DoubledState& sp = rp.snapshots.back().state;
    const DoubledState& sm = rm.snapshots.back().state;
    fd12.col(j) = (sp.w - sm.w) / (2.0 * h);
    fd22.col(j) = (sp.wbar - sm.wbar) / (2.0 * h);
  }
  const double err =
      std::max(relative_error(end.m12, fd12), relative_error(end.m22, fd22));
  return {"tangent blocks vs finite differences (rel)", err, 1e-4};
}

OracleResult energy_conservation_oracle() {
  double worst = 0.0;
  const auto times = uniform_times(6.0, 61);
  auto track = [&](const ClassicalHamiltonianModel& model, const CVector& w,
                   const CVector& wbar) {
    const auto rec = integrate_trajectory(model, w, wbar, times);
    const Complex e0 = model.evaluate(rec.snapshots.front().state).value;
    for (const auto& s : rec.snapshots)
      worst = std::max(worst, std::abs(model.evaluate(s.state).value - e0) /
                                  std::abs(e0));
  };
  const auto su3 = su3_hamiltonian(su3_params(-1.0));
  track(*su3, su3_point(), CVector(su3_point().conjugate()) + su3_offset());
  track(*su3, su3_point(), CVector(su3_point().conjugate()));
  const auto su2 = su2_hamiltonian(su2_params(-8.0));
  track(*su2, reduced_initial(), CVector(reduced_initial().conjugate()));
  return {"energy conservation along trajectories (rel)", worst, 1e-7};
}

OracleResult overlap_fock_oracle() {
  std::mt19937_64 rng(7);
  double worst = 0.0;
  for (int modes : {2, 3}) {
    for (int particles : {1, 7, 30}) {
      const FockBasis basis(modes, particles);
      for (int trial = 0; trial < 100; ++trial) {
        const CVector a = random_vector(rng, modes - 1, 0.7);
        const CVector b = random_vector(rng, modes - 1, 0.7);
        const Complex fock =
            coherent_amplitudes(a, basis).amplitudes.dot(
                coherent_amplitudes(b, basis).amplitudes);
        worst = std::max(worst, std::abs(overlap(a, b, particles) - fock));
      }
    }
  }
  return {"overlap vs Fock inner product", worst, 1e-10};
}

OracleResult identity_resolution_oracle() {
  const GridSpec grid = fig1_grid();
  const CVector w0 = reduced_initial();
  double sum = 0.0;
  for (const CVector& g : build_grid(grid)) {
    const CVector u = g.conjugate();
    sum += grid.cell_volume() * measure_weight(u, 2, 30) *
           std::norm(overlap(u, w0, 30));
  }
  return {"identity-resolution quadrature on the lattice", std::abs(sum - 1.0),
          1e-3};
}

OracleResult factorization_oracle() {
  const auto model = su2_hamiltonian(su2_params(-1.0));
  const FockBasis basis(2, 30);
  EnsembleConfig cfg;
  cfg.grid = {CVector(reduced_initial().conjugate()), 0.7, 9};
  cfg.filter.lambda = 10.0;
  cfg.keep_contributions = true;
  const auto times = uniform_times(3.0, 7);
  const EnsembleResult ens = run_ensemble(*model, reduced_initial(), times, basis, cfg);
  std::mt19937_64 rng(11);
  double worst = 0.0;
  for (std::size_t k : {std::size_t{0}, std::size_t{3}, std::size_t{6}}) {
    for (int trial = 0; trial < 3; ++trial) {
      const CVector wf = random_vector(rng, 1, 0.5);
      worst = std::max(worst, std::abs(assemble_propagator(ens.table, k, wf, basis) -
                                       direct_propagator(ens, k, wf)));
    }
  }
  return {"factorized vs direct quadrature", worst, 1e-10};
}

OracleResult invariant_subspace_oracle() {
  const auto model = su3_hamiltonian(su3_params(-1.0));
  const auto times = uniform_times(6.0, 61);
  double worst = 0.0;

  CVector w(2), wbar(2);
  w.setConstant(Complex(0.2, 0.1));
  wbar.setConstant(Complex(0.3, -0.05));
  for (const auto& s : integrate_trajectory(*model, w, wbar, times).snapshots)
    worst = std::max({worst, std::abs(s.state.w(0) - s.state.w(1)),
                      std::abs(s.state.wbar(0) - s.state.wbar(1))});

  for (int j = 0; j < 2; ++j) {
    CVector a(2), b(2);
    a << Complex(0.4, 0.2), Complex(0.1, -0.3);
    b = a.conjugate();
    a(j) = b(j) = 1.0;
    for (const auto& s : integrate_trajectory(*model, a, b, times).snapshots)
      worst = std::max({worst, std::abs(s.state.w(j) - 1.0),
                        std::abs(s.state.wbar(j) - 1.0)});
  }
  return {"invariant subspaces of the three-mode flow", worst, 1e-8};
}

OracleResult reduction_equivalence_oracle() {
  const auto su3 = su3_hamiltonian(su3_params(-1.0));
  const auto su2 = su2_hamiltonian(su2_params(-1.0));
  const auto times = uniform_times(6.0, 61);
  const IntegratorOptions opts = [] {
    IntegratorOptions o;
    o.rtol = 1e-11;
    o.atol = 1e-13;
    return o;
  }();
  const Complex v(kTanPi8, 0.0), vbar = Complex(kTanPi8, 0.0) + Complex(0.05, 0.03);
  CVector w2(1), wbar2(1), w3(2), wbar3(2);
  w2 << v;
  wbar2 << vbar;
  w3.setConstant(v / std::sqrt(2.0));
  wbar3.setConstant(vbar / std::sqrt(2.0));
  const auto r2 = integrate_trajectory(*su2, w2, wbar2, times, opts);
  const auto r3 = integrate_trajectory(*su3, w3, wbar3, times, opts);
  double worst = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto& a = r2.snapshots[k];
    const auto& b = r3.snapshots[k];
    worst = std::max({worst, std::abs(std::sqrt(2.0) * b.state.w(0) - a.state.w(0)),
                      std::abs(std::sqrt(2.0) * b.state.wbar(0) - a.state.wbar(0))});
  }
  return {"three-mode flow restricted vs two-mode flow", worst, 1e-8};
}

OracleResult initial_fidelity_oracle() {
  const auto model = su2_hamiltonian(su2_params(-1.0));
  const FockBasis basis(2, 30);
  EnsembleConfig cfg;
  cfg.grid = fig1_grid();
  const std::vector<double> times{0.0};
  const EnsembleResult ens = run_ensemble(*model, reduced_initial(), times, basis, cfg);
  const double f = fidelity(reconstruct_state(ens.table, 0),
                            coherent_amplitudes(reduced_initial(), basis));
  return {"reconstruction fidelity at t = 0", f, 0.999, true};
}

OracleResult principal_reality_oracle() {
  const auto times = uniform_times(6.0, 61);
  double worst = 0.0;
  auto track = [&](const ClassicalHamiltonianModel& model, const CVector& w) {
    const auto rec = integrate_trajectory(model, w, CVector(w.conjugate()), times);
    for (const auto& s : rec.snapshots)
      worst = std::max({worst, std::abs(s.action.imag()) / model.particles(),
                        std::abs(s.correction.imag()) / model.particles()});
  };
  track(*su2_hamiltonian(su2_params(-1.0)), reduced_initial());
  track(*su2_hamiltonian(su2_params(-8.0)), reduced_initial());
  CVector w3(2);
  w3.setConstant(kTanPi8 / std::sqrt(2.0));
  track(*su3_hamiltonian(su3_params(-1.0)), w3);
  track(*su3_hamiltonian(su3_params(-1.0)), su3_point());
  return {"principal trajectory Im S, Im I per particle", worst, 1e-7};
}

OracleResult determinism_oracle() {
  const auto model = su2_hamiltonian(su2_params(-1.0));
  const FockBasis basis(2, 30);
  const auto times = uniform_times(2.0, 11);
  auto run = [&](int workers) {
    EnsembleConfig cfg;
    cfg.grid = {CVector(reduced_initial().conjugate()), 0.7, 9};
    cfg.workers = workers;
    cfg.block_size = 16;
    return run_ensemble(*model, reduced_initial(), times, basis, cfg);
  };
  const EnsembleResult a = run(1), b = run(3), c = run(1);
  double mismatches = 0.0;
  for (const EnsembleResult* other : {&b, &c}) {
    for (std::size_t k = 0; k < times.size(); ++k) {
      const CVector& x = a.table.amplitudes[k];
      const CVector& y = other->table.amplitudes[k];
      for (Eigen::Index i = 0; i < x.size(); ++i)
        if (x(i).real() != y(i).real() || x(i).imag() != y(i).imag()) mismatches += 1;
      if (a.table.alive[k] != other->table.alive[k]) mismatches += 1;
    }
    for (std::size_t i = 0; i < a.outcomes.size(); ++i)
      if (a.outcomes[i].status != other->outcomes[i].status ||
          a.outcomes[i].t_stop != other->outcomes[i].t_stop)
        mismatches += 1;
  }
  return {"rerun and worker-count determinism (mismatched entries)", mismatches, 0.0};
}

std::vector<OracleResult> run_oracles() {
  return {tangent_blocks_oracle(),      energy_conservation_oracle(),
          overlap_fock_oracle(),        identity_resolution_oracle(),
          factorization_oracle(),       invariant_subspace_oracle(),
          reduction_equivalence_oracle(), initial_fidelity_oracle(),
          principal_reality_oracle(),   determinism_oracle()};
}

}  // namespace sunivr::test
