#include "sunivr/model.hpp"

#include <cmath>
#include <string>

namespace sunivr {

namespace {

// Value, gradient and Hessian of a function of z = (w, wbar).
struct Jet {
  Complex v;
  CVector g;
  CMatrix h;
};

// f = p / d^k by the quotient rule.
Jet over_power(const Jet& p, const Jet& d, int k) {
  const Complex inv = 1.0 / d.v;
  const Complex invk = std::pow(inv, k);
  const double kk = k;
  Jet f;
  f.v = p.v * invk;
  f.g = invk * (p.g - kk * p.v * inv * d.g);
  f.h = invk * (p.h -
                kk * inv * (p.g * d.g.transpose() + d.g * p.g.transpose() + p.v * d.h) +
                kk * (kk + 1.0) * p.v * inv * inv * d.g * d.g.transpose());
  return f;
}

Jet denominator_jet(const DoubledState& s) {
  const Eigen::Index m = s.w.size();
  Jet d;
  d.v = 1.0 + s.wbar.cwiseProduct(s.w).sum();
  d.g.resize(2 * m);
  d.g << s.wbar, s.w;
  d.h = CMatrix::Zero(2 * m, 2 * m);
  d.h.topRightCorner(m, m).setIdentity();
  d.h.bottomLeftCorner(m, m).setIdentity();
  return d;
}

HamiltonianDerivatives combine(const Jet& a, const Jet& b, const Jet& d,
                               const ModelParams& p, Eigen::Index m) {
  const double n_particles = p.particles;
  Jet hop = over_power(a, d, 1);
  Jet col = over_power(b, d, 2);
  HamiltonianDerivatives out;
  out.value = n_particles * (p.tunneling * hop.v + p.collision * col.v);
  const CVector g = n_particles * (p.tunneling * hop.g + p.collision * col.g);
  const CMatrix h = n_particles * (p.tunneling * hop.h + p.collision * col.h);
  out.grad_w = g.head(m);
  out.grad_wbar = g.tail(m);
  out.hess_ww = h.topLeftCorner(m, m);
  out.hess_wwbar = h.topRightCorner(m, m);
  out.hess_wbarwbar = h.bottomRightCorner(m, m);
  return out;
}

void check_state(const DoubledState& s, int dim) {
  if (s.w.size() != dim || s.wbar.size() != dim)
    throw DomainError("doubled state has wrong dimension");
}

}  // namespace

ClassicalHamiltonianModel::ClassicalHamiltonianModel(const ModelParams& p)
    : params_(p) {
  if (p.particles < 1) throw DomainError("model needs N >= 1");
  if (!std::isfinite(p.tunneling) || !std::isfinite(p.collision))
    throw DomainError("model rates must be finite");
  if (p.collision != 0.0 && p.particles < 2)
    throw DomainError("collision term needs N >= 2");
}

BoseHubbardModel::BoseHubbardModel(const ModelParams& p)
    : ClassicalHamiltonianModel(p) {
  if (p.modes < 2) throw DomainError("Bose-Hubbard symbol needs n >= 2");
}

HamiltonianDerivatives BoseHubbardModel::evaluate(const DoubledState& s) const {
  const int m = dimension();
  check_state(s, m);
  const Jet d = denominator_jet(s);

  // sum_{j!=k} wbar_j w_k = (1 + sum wbar)(1 + sum w) - D
  const Complex sw = 1.0 + s.w.sum();
  const Complex sb = 1.0 + s.wbar.sum();
  Jet a;
  a.v = sb * sw - d.v;
  a.g.resize(2 * m);
  a.g << CVector::Constant(m, sb) - s.wbar, CVector::Constant(m, sw) - s.w;
  a.h = CMatrix::Zero(2 * m, 2 * m);
  a.h.topRightCorner(m, m).setOnes();
  a.h.topRightCorner(m, m).diagonal().setZero();
  a.h.bottomLeftCorner(m, m) = a.h.topRightCorner(m, m);

  Jet b;
  b.v = 1.0;
  b.g.resize(2 * m);
  b.h = CMatrix::Zero(2 * m, 2 * m);
  for (int j = 0; j < m; ++j) {
    const Complex w = s.w(j);
    const Complex wb = s.wbar(j);
    b.v += wb * wb * w * w;
    b.g(j) = 2.0 * wb * wb * w;
    b.g(m + j) = 2.0 * w * w * wb;
    b.h(j, j) = 2.0 * wb * wb;
    b.h(m + j, m + j) = 2.0 * w * w;
    b.h(j, m + j) = 4.0 * w * wb;
    b.h(m + j, j) = 4.0 * w * wb;
  }
  return combine(a, b, d, params(), m);
}

ReducedTripleWellModel::ReducedTripleWellModel(const ModelParams& p)
    : ClassicalHamiltonianModel(p) {
  if (p.modes != 2) throw DomainError("reduced triple well needs n = 2");
}

HamiltonianDerivatives ReducedTripleWellModel::evaluate(
    const DoubledState& s) const {
  check_state(s, 1);
  const Jet d = denominator_jet(s);
  const Complex v = s.w(0);
  const Complex vb = s.wbar(0);
  const double r2 = std::sqrt(2.0);

  Jet a;
  a.v = vb * v + r2 * (v + vb);
  a.g.resize(2);
  a.g << vb + r2, v + r2;
  a.h.resize(2, 2);
  a.h << 0.0, 1.0, 1.0, 0.0;

  Jet b;
  b.v = 1.0 + 0.5 * vb * vb * v * v;
  b.g.resize(2);
  b.g << vb * vb * v, v * v * vb;
  b.h.resize(2, 2);
  b.h << vb * vb, 2.0 * v * vb, 2.0 * v * vb, v * v;
  return combine(a, b, d, params(), 1);
}

std::unique_ptr<ClassicalHamiltonianModel> su3_hamiltonian(const ModelParams& p) {
  if (p.modes != 3) throw DomainError("SU(3) model needs n = 3");
  return std::make_unique<BoseHubbardModel>(p);
}

std::unique_ptr<ClassicalHamiltonianModel> su2_hamiltonian(const ModelParams& p) {
  return std::make_unique<ReducedTripleWellModel>(p);
}

std::unique_ptr<ClassicalHamiltonianModel> make_model(const ModelParams& p) {
  if (p.modes == 3) return su3_hamiltonian(p);
  if (p.modes == 2) return su2_hamiltonian(p);
  throw DomainError("unsupported mode count " + std::to_string(p.modes));
}

FlowEvaluation evaluate_flow(const ClassicalHamiltonianModel& model,
                             const DoubledState& s, double eps_sing) {
  const int m = model.dimension();
  check_state(s, m);
  const Complex d = 1.0 + s.wbar.cwiseProduct(s.w).sum();
  if (!(std::abs(d) >= eps_sing))
    throw SingularityError("|1 + wbar.w| below singularity threshold");

  const HamiltonianDerivatives hd = model.evaluate(s);
  const double inv_n = 1.0 / model.particles();
  const CVector& w = s.w;
  const CVector& wb = s.wbar;
  const CVector& h = hd.grad_w;
  const CVector& hb = hd.grad_wbar;
  const CMatrix hbw = hd.hess_wwbar.transpose();  // d^2 H / dwbar_j dw_k

  const Complex sb = wb.cwiseProduct(hb).sum();
  const Complex sw = w.cwiseProduct(h).sum();
  const CVector f = hb + w * sb;  // [1 + w (x) wbar] dH/dwbar
  const CVector g = h + wb * sw;
  const CMatrix id = CMatrix::Identity(m, m);

  const CMatrix df_dw =
      inv_n * (f * wb.transpose() +
               d * (hbw + sb * id + w * (wb.transpose() * hbw)));
  const CMatrix df_dwb =
      inv_n * (f * w.transpose() +
               d * (hd.hess_wbarwbar + w * (hb.transpose() + wb.transpose() * hd.hess_wbarwbar)));
  const CMatrix dg_dwb =
      inv_n * (g * w.transpose() +
               d * (hd.hess_wwbar + sw * id + wb * (w.transpose() * hd.hess_wwbar)));
  const CMatrix dg_dw =
      inv_n * (g * wb.transpose() +
               d * (hd.hess_ww + wb * (h.transpose() + w.transpose() * hd.hess_ww)));

  FlowEvaluation out;
  out.hamiltonian = hd.value;
  out.denominator = d;
  out.w_dot = -kI * (d * inv_n) * f;
  out.wbar_dot = kI * (d * inv_n) * g;
  out.linearization.resize(2 * m, 2 * m);
  out.linearization << -kI * df_dw, -kI * df_dwb, kI * dg_dw, kI * dg_dwb;
  out.correction = 0.25 * (dg_dwb.trace() + df_dw.trace());
  const double half_n = 0.5 * model.particles();
  out.lagrangian = kI * half_n *
                       (wb.cwiseProduct(out.w_dot).sum() -
                        out.wbar_dot.cwiseProduct(w).sum()) / d -
                   hd.value;
  if (!out.w_dot.allFinite() || !out.wbar_dot.allFinite() ||
      !out.linearization.allFinite())
    throw SingularityError("non-finite flow");
  return out;
}

DoubledState eom_rhs(const ClassicalHamiltonianModel& model,
                     const DoubledState& s, double eps_sing) {
  FlowEvaluation f = evaluate_flow(model, s, eps_sing);
  return {std::move(f.w_dot), std::move(f.wbar_dot)};
}

CMatrix linearization_matrix(const ClassicalHamiltonianModel& model,
                             const DoubledState& s, double eps_sing) {
  return evaluate_flow(model, s, eps_sing).linearization;
}

Complex correction_integrand(const ClassicalHamiltonianModel& model,
                             const DoubledState& s, double eps_sing) {
  return evaluate_flow(model, s, eps_sing).correction;
}

}  // namespace sunivr
