#ifndef SUNIVR_MODEL_HPP
#define SUNIVR_MODEL_HPP

#include <memory>

#include "sunivr/types.hpp"

namespace sunivr {

inline constexpr double kDefaultSingularityEps = 1e-8;

/// Raised when 1 + wbar.w comes too close to zero.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// Point (w, wbar) of the doubled phase space; wbar need not equal w^*.
struct DoubledState {
  CVector w;
  CVector wbar;
};

/// Value and derivatives of H(wbar, w). Hessian blocks are indexed
/// hess_wwbar(j, k) = d^2 H / dw_j dwbar_k.
struct HamiltonianDerivatives {
  Complex value;
  CVector grad_w;
  CVector grad_wbar;
  CMatrix hess_ww;
  CMatrix hess_wwbar;
  CMatrix hess_wbarwbar;
};

class ClassicalHamiltonianModel {
 public:
  virtual ~ClassicalHamiltonianModel() = default;

  const ModelParams& params() const { return params_; }
  int modes() const { return params_.modes; }
  int particles() const { return params_.particles; }
  /// Number of complex coordinates in w, i.e. n - 1.
  int dimension() const { return params_.modes - 1; }

  virtual HamiltonianDerivatives evaluate(const DoubledState& s) const = 0;

 protected:
  explicit ClassicalHamiltonianModel(const ModelParams& p);

 private:
  ModelParams params_;
};

/// Normalized symbol of the n-mode Bose-Hubbard Hamiltonian,
///   H/N = Omega sum_{j!=k} wbar_j w_k / D + chi sum_j wbar_j^2 w_j^2 / D^2
/// with w_n = wbar_n = 1 and D = 1 + wbar.w. For n = 3 this is the
/// triple-well model.
class BoseHubbardModel final : public ClassicalHamiltonianModel {
 public:
  explicit BoseHubbardModel(const ModelParams& p);
  HamiltonianDerivatives evaluate(const DoubledState& s) const override;
};

/// Triple-well symbol restricted to w_1 = w_2 = v/sqrt2:
///   H/N = Omega [vbar v + sqrt2 (v + vbar)] / D + chi (1 + vbar^2 v^2 / 2) / D^2.
class ReducedTripleWellModel final : public ClassicalHamiltonianModel {
 public:
  explicit ReducedTripleWellModel(const ModelParams& p);
  HamiltonianDerivatives evaluate(const DoubledState& s) const override;
};

std::unique_ptr<ClassicalHamiltonianModel> su3_hamiltonian(const ModelParams& p);
std::unique_ptr<ClassicalHamiltonianModel> su2_hamiltonian(const ModelParams& p);

/// n = 3 gives the triple well, n = 2 its reduction.
std::unique_ptr<ClassicalHamiltonianModel> make_model(const ModelParams& p);

/// Everything the augmented trajectory ODE needs at one point.
struct FlowEvaluation {
  Complex hamiltonian;
  Complex denominator;  ///< 1 + wbar.w
  CVector w_dot;
  CVector wbar_dot;
  CMatrix linearization;  ///< R, acting on (dw, dwbar)
  Complex correction;     ///< integrand of the correction term
  Complex lagrangian;
};

FlowEvaluation evaluate_flow(const ClassicalHamiltonianModel& model,
                             const DoubledState& s,
                             double eps_sing = kDefaultSingularityEps);

/// (dw/dt, dwbar/dt) = (-i xi dH/dwbar, i xibar dH/dw).
DoubledState eom_rhs(const ClassicalHamiltonianModel& model,
                     const DoubledState& s,
                     double eps_sing = kDefaultSingularityEps);

CMatrix linearization_matrix(const ClassicalHamiltonianModel& model,
                             const DoubledState& s,
                             double eps_sing = kDefaultSingularityEps);

/// (1/4) Tr[d/dwbar (xibar dH/dw) + d/dw (xi dH/dwbar)].
Complex correction_integrand(const ClassicalHamiltonianModel& model,
                             const DoubledState& s,
                             double eps_sing = kDefaultSingularityEps);

}  // namespace sunivr

#endif  // SUNIVR_MODEL_HPP
