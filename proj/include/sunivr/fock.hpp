#ifndef SUNIVR_FOCK_HPP
#define SUNIVR_FOCK_HPP

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sunivr/types.hpp"

namespace sunivr {

/// Occupation numbers (m_1, ..., m_n) of one number state.
using Occupation = std::vector<int>;

inline constexpr std::size_t kDefaultDimensionCap = 20000;

/// (N+n-1)! / (N! (n-1)!), the number of n-mode states with N bosons.
/// Throws DimensionError when the value exceeds `cap`.
std::size_t basis_dimension(int modes, int particles,
                            std::size_t cap = kDefaultDimensionCap);

/// All occupations summing to N, in lexicographically descending order.
std::vector<Occupation> enumerate_basis(int modes, int particles,
                                        std::size_t cap = kDefaultDimensionCap);

/// Number basis of B^n_N with index lookup and cached multinomials.
class FockBasis {
 public:
  FockBasis(int modes, int particles, std::size_t cap = kDefaultDimensionCap);

  int modes() const { return modes_; }
  int particles() const { return particles_; }
  std::size_t size() const { return states_.size(); }

  const Occupation& operator[](std::size_t i) const { return states_[i]; }
  const std::vector<Occupation>& states() const { return states_; }

  /// Position of `m` in the basis; throws DomainError if absent.
  std::size_t index_of(const Occupation& m) const;

  /// ln[N! / (m_1! ... m_n!)] for basis state i.
  double log_multinomial(std::size_t i) const { return log_multinomial_[i]; }

  /// sqrt(N! / (m_1! ... m_n!)); only meaningful when
  /// has_sqrt_multinomials() (false once any entry nears double overflow).
  double sqrt_multinomial(std::size_t i) const { return sqrt_multinomial_[i]; }
  bool has_sqrt_multinomials() const { return sqrt_multinomials_finite_; }

 private:
  int modes_;
  int particles_;
  std::vector<Occupation> states_;
  std::vector<double> log_multinomial_;
  std::vector<double> sqrt_multinomial_;
  bool sqrt_multinomials_finite_ = true;
  std::map<Occupation, std::size_t> index_;
};

/// Modes the amplitudes refer to: the well modes a_j or the rotated b_j.
enum class ModeBasis { Raw, Rotated };

struct FockVector {
  CVector amplitudes;
  ModeBasis basis = ModeBasis::Raw;

  double norm() const { return amplitudes.norm(); }
};

/// Returns `psi` scaled to unit norm; throws DomainError on a zero vector.
FockVector normalized(const FockVector& psi);

/// |<a|b>|^2 / (|a|^2 |b|^2).
double fidelity(const FockVector& a, const FockVector& b);

struct HamiltonianMatrix {
  CMatrix matrix;
  ModelParams params;
};

/// H = Omega sum_{j!=k} a_j^+ a_k + chi/(N-1) sum_j (a_j^+)^2 a_j^2 on B^n_N.
HamiltonianMatrix build_hamiltonian(const ModelParams& params,
                                    const FockBasis& basis);

/// Triple-well Hamiltonian projected onto the b_3 vacuum, written in the
/// modes (b_1, b_2):
///   Omega [b1^+ b1 + sqrt2 (b1^+ b2 + b2^+ b1)]
///   + chi/(N-1) [ (b1^+)^2 b1^2 / 2 + (b2^+)^2 b2^2 ].
/// Its SU(2) coherent-state symbol is the reduced classical Hamiltonian.
HamiltonianMatrix build_reduced_hamiltonian(const ModelParams& params,
                                            const FockBasis& basis);

/// Spectral propagator exp(-iHt) of a Hermitian matrix.
class ExactPropagator {
 public:
  explicit ExactPropagator(const HamiltonianMatrix& h);

  FockVector evolve(const FockVector& psi0, double t) const;
  const RVector& energies() const { return energies_; }

 private:
  RVector energies_;
  CMatrix vectors_;
};

/// psi(t) = exp(-iHt) psi0 at each requested time.
std::vector<FockVector> evolve_exact(const FockVector& psi0,
                                     const HamiltonianMatrix& h,
                                     std::span<const double> times);

enum class RotationDirection { Forward, Inverse };

/// Re-express a three-mode state in the modes
///   b1^+ = (a1^+ + a2^+)/sqrt2,  b2^+ = a3^+,  b3^+ = (a1^+ - a2^+)/sqrt2
/// (Forward: raw -> rotated; Inverse: rotated -> raw).
FockVector rotate_modes(const FockVector& psi, const FockBasis& basis,
                        RotationDirection direction);

/// Component of a rotated three-mode state with no b_3 quanta, as a
/// two-mode vector over (b_1, b_2). Not renormalized.
FockVector project_invariant_subspace(const FockVector& rotated,
                                      const FockBasis& basis3,
                                      const FockBasis& basis2);

/// Inverse of project_invariant_subspace: embed a (b_1, b_2) state into
/// the three-mode space expressed in the raw modes.
FockVector embed_invariant_subspace(const FockVector& psi2,
                                    const FockBasis& basis2,
                                    const FockBasis& basis3);

enum class Observable {
  Imbalance,        ///< <S_z>/S, S_z = (b1^+ b1 - b2^+ b2)/2, S = N/2
  ThirdModeFraction,///< <b3^+ b3>/N
  Occupation1,      ///< <n_1>/N in the vector's own modes
  Occupation2,
  Occupation3,
};

/// Parses "sz", "nb3", "n1", "n2", "n3".
Observable parse_observable(std::string_view name);
std::string observable_name(Observable obs);

/// Expectation value of `obs`. For three-mode vectors in raw modes the
/// imbalance and third-mode observables are evaluated after rotation.
/// Two-mode vectors are taken to be over (b_1, b_2) already.
double expectation(const FockVector& psi, const FockBasis& basis,
                   Observable obs);

}  // namespace sunivr

#endif  // SUNIVR_FOCK_HPP
