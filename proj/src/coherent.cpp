#include "sunivr/coherent.hpp"

#include <algorithm>
#include <limits>

namespace sunivr {

void coherent_amplitudes_into(const CVector& w, const FockBasis& basis,
                              CVector& out) {
  const int n = basis.modes();
  const int n_particles = basis.particles();
  if (w.size() != n - 1)
    throw DomainError("coherent state label must have n - 1 entries");
  const auto dim = static_cast<Eigen::Index>(basis.size());
  out.resize(dim);

  // Components of the unit vector (w_1, ..., w_{n-1}, 1) / sqrt(1 + |w|^2);
  // every power of these stays within [0, 1] in modulus.
  const double scale = 1.0 / std::sqrt(1.0 + w.squaredNorm());
  CVector z(n);
  z.head(n - 1) = w * scale;
  z(n - 1) = scale;

  if (basis.has_sqrt_multinomials()) {
    // powers(k, j) = z_j^k
    CMatrix powers(n_particles + 1, n);
    for (int j = 0; j < n; ++j) {
      powers(0, j) = 1.0;
      for (int k = 1; k <= n_particles; ++k)
        powers(k, j) = powers(k - 1, j) * z(j);
    }
    for (Eigen::Index i = 0; i < dim; ++i) {
      const Occupation& m = basis[i];
      Complex a = basis.sqrt_multinomial(i);
      for (int j = 0; j < n; ++j) a *= powers(m[j], j);
      out(i) = a;
    }
    return;
  }

  CVector log_z(n);
  for (int j = 0; j < n; ++j)
    log_z(j) = z(j) == Complex(0.0) ? Complex(-std::numeric_limits<double>::infinity())
                                    : std::log(z(j));
  for (Eigen::Index i = 0; i < dim; ++i) {
    const Occupation& m = basis[i];
    Complex l = 0.5 * basis.log_multinomial(i);
    bool zero = false;
    for (int j = 0; j < n; ++j) {
      if (m[j] == 0) continue;
      if (z(j) == Complex(0.0)) {
        zero = true;
        break;
      }
      l += static_cast<double>(m[j]) * log_z(j);
    }
    out(i) = zero ? Complex(0.0) : std::exp(l);
  }
}

FockVector coherent_amplitudes(const CVector& w, const FockBasis& basis) {
  FockVector psi;
  coherent_amplitudes_into(w, basis, psi.amplitudes);
  return psi;
}

double sigma_factor(int modes) {
  return std::tgamma(static_cast<double>(modes)) /
         std::pow(kPi, static_cast<double>(modes - 1));
}

double measure_weight(const CVector& w, int modes, int particles) {
  const double dim = static_cast<double>(
      basis_dimension(modes, particles, std::numeric_limits<std::size_t>::max()));
  return sigma_factor(modes) * dim /
         std::pow(1.0 + w.squaredNorm(), static_cast<double>(modes));
}

namespace {

void fill_values(const FockVector& psi, const FockBasis& basis, QGrid& q) {
  if (psi.amplitudes.size() != static_cast<Eigen::Index>(basis.size()))
    throw DomainError("q_function: dimension mismatch");
  if (!psi.amplitudes.allFinite())
    throw DomainError("q_function: non-finite state");
  if (psi.amplitudes.squaredNorm() == 0.0)
    throw DomainError("q_function: zero state");
  const std::size_t count = q.labels.size();
  q.values.resize(static_cast<Eigen::Index>(count));
  CVector amps;
  for (std::size_t k = 0; k < count; ++k) {
    coherent_amplitudes_into(q.labels[k], basis, amps);
    q.values(k) = std::norm(amps.dot(psi.amplitudes));
  }
  q.raw_integral = q.weights.dot(q.values);
  if (!(q.raw_integral > 0.0))
    throw DomainError("q_function: grid misses the state's support");
  q.values /= q.raw_integral;
}

}  // namespace

QGrid q_function(const FockVector& psi, const FockBasis& basis,
                 const BoxGridSpec& grid) {
  const int n = basis.modes();
  const int m = n - 1;
  if (grid.center.size() != m)
    throw DomainError("box grid center must have n - 1 entries");
  if (grid.points_per_axis < 1 || !(grid.half_width > 0.0))
    throw DomainError("box grid needs positive size");

  const int p = grid.points_per_axis;
  const int axes = 2 * m;
  const double cell = 2.0 * grid.half_width / p;
  std::size_t count = 1;
  for (int a = 0; a < axes; ++a) count *= static_cast<std::size_t>(p);

  QGrid q;
  q.kind = QGridKind::Box;
  q.modes = n;
  q.particles = basis.particles();
  q.coordinates.resize(static_cast<Eigen::Index>(count), axes);
  q.weights.resize(static_cast<Eigen::Index>(count));
  q.labels.reserve(count);
  const double cell_volume = std::pow(cell, axes);
  std::vector<int> idx(axes, 0);
  for (std::size_t k = 0; k < count; ++k) {
    std::size_t rest = k;
    for (int a = axes - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(rest % p);
      rest /= p;
    }
    CVector w(m);
    for (int j = 0; j < m; ++j) {
      const double re = -grid.half_width + (idx[2 * j] + 0.5) * cell;
      const double im = -grid.half_width + (idx[2 * j + 1] + 0.5) * cell;
      w(j) = grid.center(j) + Complex(re, im);
      q.coordinates(k, 2 * j) = w(j).real();
      q.coordinates(k, 2 * j + 1) = w(j).imag();
    }
    q.weights(k) = measure_weight(w, n, q.particles) * cell_volume;
    q.labels.push_back(std::move(w));
  }
  fill_values(psi, basis, q);
  return q;
}

QGrid q_function(const FockVector& psi, const FockBasis& basis,
                 const SphereGridSpec& grid) {
  if (basis.modes() != 2)
    throw DomainError("sphere Q representation is defined for SU(2) only");
  if (grid.theta_points < 2 || grid.phi_points < 3)
    throw DomainError("sphere grid too coarse");
  const int nt = grid.theta_points;
  const int np = grid.phi_points;
  const double dtheta = kPi / nt;
  const double dphi = 2.0 * kPi / np;
  const double density = (basis.particles() + 1.0) / (4.0 * kPi);

  QGrid q;
  q.kind = QGridKind::Sphere;
  q.modes = 2;
  q.particles = basis.particles();
  q.theta_points = nt;
  q.phi_points = np;
  const auto count = static_cast<Eigen::Index>(nt) * np;
  q.coordinates.resize(count, 2);
  q.weights.resize(count);
  q.labels.reserve(static_cast<std::size_t>(count));
  for (int it = 0; it < nt; ++it) {
    const double theta = (it + 0.5) * dtheta;
    for (int ip = 0; ip < np; ++ip) {
      const double phi = ip * dphi;
      const Eigen::Index k = static_cast<Eigen::Index>(it) * np + ip;
      q.coordinates(k, 0) = theta;
      q.coordinates(k, 1) = phi;
      q.weights(k) = density * std::sin(theta) * dtheta * dphi;
      CVector v(1);
      v(0) = std::polar(std::tan(0.5 * theta), -phi);
      q.labels.push_back(std::move(v));
    }
  }
  fill_values(psi, basis, q);
  return q;
}

Eigen::Matrix<double, Eigen::Dynamic, 3> sphere_embedding(const QGrid& q) {
  if (q.kind != QGridKind::Sphere || q.modes != 2)
    throw DomainError("sphere embedding needs an SU(2) sphere grid");
  Eigen::Matrix<double, Eigen::Dynamic, 3> pts(q.coordinates.rows(), 3);
  for (Eigen::Index k = 0; k < q.coordinates.rows(); ++k) {
    const double theta = q.coordinates(k, 0);
    const double phi = q.coordinates(k, 1);
    const double r = q.values(k) + 1.0;
    pts(k, 0) = r * std::sin(theta) * std::cos(phi);
    pts(k, 1) = r * std::sin(theta) * std::sin(phi);
    pts(k, 2) = -r * std::cos(theta);
  }
  return pts;
}

std::vector<std::size_t> sphere_local_maxima(const QGrid& q,
                                             double min_fraction) {
  if (q.kind != QGridKind::Sphere)
    throw DomainError("local maxima search needs a sphere grid");
  const int nt = q.theta_points;
  const int np = q.phi_points;
  const double floor = min_fraction * q.values.maxCoeff();
  std::vector<std::size_t> peaks;
  for (int it = 0; it < nt; ++it) {
    for (int ip = 0; ip < np; ++ip) {
      const Eigen::Index k = static_cast<Eigen::Index>(it) * np + ip;
      const double v = q.values(k);
      if (v < floor) continue;
      bool is_max = true;
      for (int dt = -1; dt <= 1 && is_max; ++dt) {
        const int jt = it + dt;
        if (jt < 0 || jt >= nt) continue;
        for (int dp = -1; dp <= 1; ++dp) {
          if (dt == 0 && dp == 0) continue;
          const int jp = (ip + dp + np) % np;
          if (q.values(static_cast<Eigen::Index>(jt) * np + jp) >= v) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) peaks.push_back(static_cast<std::size_t>(k));
    }
  }
  return peaks;
}

void write_qgrid_csv(std::ostream& os, const QGrid& q) {
  if (q.kind == QGridKind::Sphere) {
    os << "theta,phi,q\n";
  } else {
    for (int j = 1; j < q.modes; ++j)
      os << (j > 1 ? "," : "") << "re_w" << j << ",im_w" << j;
    os << ",q\n";
  }
  const auto old = os.precision(17);
  for (Eigen::Index k = 0; k < q.coordinates.rows(); ++k) {
    for (Eigen::Index c = 0; c < q.coordinates.cols(); ++c)
      os << q.coordinates(k, c) << ',';
    os << q.values(k) << '\n';
  }
  os.precision(old);
}

void write_sphere_csv(std::ostream& os, const QGrid& q) {
  const auto pts = sphere_embedding(q);
  os << "x,y,z\n";
  const auto old = os.precision(17);
  for (Eigen::Index k = 0; k < pts.rows(); ++k)
    os << pts(k, 0) << ',' << pts(k, 1) << ',' << pts(k, 2) << '\n';
  os.precision(old);
}

double angular_distance(double theta_a, double phi_a, double theta_b,
                        double phi_b) {
  const Eigen::Vector3d a(std::sin(theta_a) * std::cos(phi_a),
                          std::sin(theta_a) * std::sin(phi_a),
                          -std::cos(theta_a));
  const Eigen::Vector3d b(std::sin(theta_b) * std::cos(phi_b),
                          std::sin(theta_b) * std::sin(phi_b),
                          -std::cos(theta_b));
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

}  // namespace sunivr
