#ifndef SUNIVR_COHERENT_HPP
#define SUNIVR_COHERENT_HPP

#include <cmath>
#include <ostream>
#include <vector>

#include "sunivr/fock.hpp"
#include "sunivr/types.hpp"

namespace sunivr {

/// 1 + a*b  (juxtaposition of two parameter vectors; no conjugation).
template <typename DerivedA, typename DerivedB>
auto one_plus_dot(const Eigen::MatrixBase<DerivedA>& a,
                  const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  return Scalar(1) + a.cwiseProduct(b).sum();
}

/// <wp|w> = (1 + wp^* w)^N / [(1 + |wp|^2)^{N/2} (1 + |w|^2)^{N/2}].
/// Evaluated in log space so large N does not overflow.
template <typename DerivedA, typename DerivedB>
auto overlap(const Eigen::MatrixBase<DerivedA>& wp,
             const Eigen::MatrixBase<DerivedB>& w, int particles) {
  using Scalar = typename DerivedA::Scalar;
  using Real = typename Eigen::NumTraits<Scalar>::Real;
  const Scalar cross = Scalar(1) + wp.dot(w);
  const Real half_n = Real(particles) / Real(2);
  const Real norms = std::log1p(wp.squaredNorm()) + std::log1p(w.squaredNorm());
  if (cross == Scalar(0)) return Scalar(0);
  return std::exp(Real(particles) * std::log(cross) - half_n * norms);
}

/// Amplitudes of the SU(n) coherent state |w> on `basis`:
///   sqrt(N!/prod m_j!) prod_{j<n} w_j^{m_j} / (1 + w^* w)^{N/2}.
FockVector coherent_amplitudes(const CVector& w, const FockBasis& basis);

/// Same as coherent_amplitudes but writes into `out` (resized as needed);
/// used in inner loops to avoid allocation.
void coherent_amplitudes_into(const CVector& w, const FockBasis& basis,
                              CVector& out);

/// sigma(n) = (n-1)! / pi^{n-1}.
double sigma_factor(int modes);

/// Density of the identity-resolving measure,
/// sigma(n) dim(B^n_N) / (1 + w^* w)^n per unit d^2w.
double measure_weight(const CVector& w, int modes, int particles);

/// Uniform midpoint grid over a box in (Re w_j, Im w_j), j < n.
struct BoxGridSpec {
  CVector center;           ///< box center (length n-1)
  double half_width = 2.0;  ///< per real coordinate
  int points_per_axis = 41;
};

/// Uniform midpoint grid in (theta, phi) for the SU(2) sphere, with
/// sqrt2 w_1 = exp(-i phi) tan(theta/2).
struct SphereGridSpec {
  int theta_points = 90;
  int phi_points = 180;
};

enum class QGridKind { Box, Sphere };

struct QGrid {
  QGridKind kind = QGridKind::Box;
  int modes = 2;
  int particles = 1;
  /// One row per sample. Box: Re w_1, Im w_1, ...; Sphere: theta, phi.
  RMatrix coordinates;
  /// Sample labels w (length n-1 each); for the sphere this is the
  /// reduced SU(2) parameter v = exp(-i phi) tan(theta/2).
  std::vector<CVector> labels;
  /// Quadrature weight of each sample, measure density times cell size.
  RVector weights;
  /// Q values after normalization.
  RVector values;
  /// Quadrature of dmu Q before rescaling.
  double raw_integral = 0.0;
  int theta_points = 0;
  int phi_points = 0;
};

/// Q(w^*, w) = |<w|psi>|^2 on a box grid, rescaled so sum weights*Q = 1.
QGrid q_function(const FockVector& psi, const FockBasis& basis,
                 const BoxGridSpec& grid);

/// Q on the SU(2) sphere; `basis` must be two-mode.
QGrid q_function(const FockVector& psi, const FockBasis& basis,
                 const SphereGridSpec& grid);

/// Points x = (Q+1) sin(theta) cos(phi), y = (Q+1) sin(theta) sin(phi),
/// z = -(Q+1) cos(theta), one row per sample.
Eigen::Matrix<double, Eigen::Dynamic, 3> sphere_embedding(const QGrid& q);

/// Indices of sphere samples that are strict local maxima over their
/// eight (phi-periodic) neighbours with value >= min_fraction * max Q.
std::vector<std::size_t> sphere_local_maxima(const QGrid& q,
                                             double min_fraction);

/// Box grids: re_w1, im_w1, ..., q. Sphere grids: theta, phi, q.
void write_qgrid_csv(std::ostream& os, const QGrid& q);

/// Columns x, y, z of sphere_embedding.
void write_sphere_csv(std::ostream& os, const QGrid& q);

/// Great-circle distance between two (theta, phi) points.
double angular_distance(double theta_a, double phi_a, double theta_b,
                        double phi_b);

}  // namespace sunivr

#endif  // SUNIVR_COHERENT_HPP
