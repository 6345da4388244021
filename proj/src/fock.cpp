#include "sunivr/fock.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace sunivr {

namespace {

void check_space(int modes, int particles) {
  if (modes < 2) throw DomainError("Fock space needs at least two modes");
  if (particles < 1) throw DomainError("Fock space needs at least one particle");
}

void enumerate_into(int mode, int remaining, Occupation& current,
                    std::vector<Occupation>& out) {
  const int last = static_cast<int>(current.size()) - 1;
  if (mode == last) {
    current[mode] = remaining;
    out.push_back(current);
    return;
  }
  for (int m = remaining; m >= 0; --m) {
    current[mode] = m;
    enumerate_into(mode + 1, remaining - m, current, out);
  }
}

void require_modes(const FockBasis& basis, int modes, const char* what) {
  if (basis.modes() != modes)
    throw DomainError(std::string(what) + ": requires a " +
                      std::to_string(modes) + "-mode basis");
}

// Matrix of <q_b1, (K-q)_b3 | p_a1, (K-p)_a2> for fixed K = m1 + m2.
// Built by applying normalized creation operators one at a time so every
// intermediate amplitude stays bounded.
RMatrix beam_splitter_block(int total) {
  const double r = 1.0 / std::sqrt(2.0);
  RMatrix block(total + 1, total + 1);
  for (int p = 0; p <= total; ++p) {
    std::vector<double> amp{1.0};
    int k = 0;
    auto create = [&](double alpha, double beta, int count) {
      std::vector<double> next(k + 2, 0.0);
      for (int q = 0; q <= k; ++q) {
        next[q + 1] += alpha * std::sqrt(static_cast<double>(q + 1)) * amp[q];
        next[q] += beta * std::sqrt(static_cast<double>(k - q + 1)) * amp[q];
      }
      const double scale = 1.0 / std::sqrt(static_cast<double>(count));
      for (double& x : next) x *= scale;
      amp.swap(next);
      ++k;
    };
    for (int j = 1; j <= p; ++j) create(r, r, j);
    for (int j = 1; j <= total - p; ++j) create(r, -r, j);
    for (int q = 0; q <= total; ++q) block(q, p) = amp[q];
  }
  return block;
}

}  // namespace

std::size_t basis_dimension(int modes, int particles, std::size_t cap) {
  check_space(modes, particles);
  // C(N + n - 1, n - 1) computed incrementally; each partial product is an
  // exact binomial coefficient.
  const std::size_t k = static_cast<std::size_t>(modes - 1);
  const std::size_t top = static_cast<std::size_t>(particles) + k;
  long double value = 1.0L;
  for (std::size_t i = 1; i <= k; ++i) {
    value = value * static_cast<long double>(top - k + i) /
            static_cast<long double>(i);
    if (value > static_cast<long double>(cap))
      throw DimensionError("Fock space dimension exceeds cap of " +
                           std::to_string(cap) + "; use smaller N or n");
  }
  return static_cast<std::size_t>(std::llround(value));
}

std::vector<Occupation> enumerate_basis(int modes, int particles,
                                        std::size_t cap) {
  const std::size_t dim = basis_dimension(modes, particles, cap);
  std::vector<Occupation> out;
  out.reserve(dim);
  Occupation current(static_cast<std::size_t>(modes), 0);
  enumerate_into(0, particles, current, out);
  return out;
}

FockBasis::FockBasis(int modes, int particles, std::size_t cap)
    : modes_(modes),
      particles_(particles),
      states_(enumerate_basis(modes, particles, cap)) {
  const double log_n_fact = std::lgamma(particles_ + 1.0);
  log_multinomial_.reserve(states_.size());
  for (std::size_t i = 0; i < states_.size(); ++i) {
    double v = log_n_fact;
    for (int m : states_[i]) v -= std::lgamma(m + 1.0);
    log_multinomial_.push_back(v);
    if (v > 1200.0) sqrt_multinomials_finite_ = false;
    sqrt_multinomial_.push_back(std::exp(0.5 * v));
    index_.emplace(states_[i], i);
  }
}

std::size_t FockBasis::index_of(const Occupation& m) const {
  auto it = index_.find(m);
  if (it == index_.end()) throw DomainError("occupation not in basis");
  return it->second;
}

FockVector normalized(const FockVector& psi) {
  const double n = psi.norm();
  if (!(n > 0.0) || !std::isfinite(n))
    throw DomainError("cannot normalize a zero or non-finite vector");
  return FockVector{psi.amplitudes / n, psi.basis};
}

double fidelity(const FockVector& a, const FockVector& b) {
  if (a.amplitudes.size() != b.amplitudes.size())
    throw DomainError("fidelity: dimension mismatch");
  const double na = a.amplitudes.squaredNorm();
  const double nb = b.amplitudes.squaredNorm();
  return std::norm(a.amplitudes.dot(b.amplitudes)) / (na * nb);
}

HamiltonianMatrix build_hamiltonian(const ModelParams& params,
                                    const FockBasis& basis) {
  require_modes(basis, params.modes, "build_hamiltonian");
  if (basis.particles() != params.particles)
    throw DomainError("build_hamiltonian: particle number mismatch");
  const int n_particles = params.particles;
  if (n_particles == 1 && params.collision != 0.0)
    throw DomainError("collision term needs N >= 2 (divides by N - 1)");
  const double g = n_particles > 1 ? params.collision / (n_particles - 1) : 0.0;

  const auto dim = static_cast<Eigen::Index>(basis.size());
  CMatrix h = CMatrix::Zero(dim, dim);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const Occupation& m = basis[i];
    double diag = 0.0;
    for (int mj : m) diag += static_cast<double>(mj) * (mj - 1);
    h(i, i) += g * diag;
    for (int k = 0; k < params.modes; ++k) {
      if (m[k] == 0) continue;
      for (int j = 0; j < params.modes; ++j) {
        if (j == k) continue;
        Occupation target = m;
        --target[k];
        ++target[j];
        const std::size_t t = basis.index_of(target);
        h(t, i) += params.tunneling *
                   std::sqrt(static_cast<double>(m[k]) * (m[j] + 1));
      }
    }
  }
  return {std::move(h), params};
}

HamiltonianMatrix build_reduced_hamiltonian(const ModelParams& params,
                                            const FockBasis& basis) {
  require_modes(basis, 2, "build_reduced_hamiltonian");
  if (params.modes != 2 || basis.particles() != params.particles)
    throw DomainError("build_reduced_hamiltonian: parameter/basis mismatch");
  const int n_particles = params.particles;
  if (n_particles == 1 && params.collision != 0.0)
    throw DomainError("collision term needs N >= 2 (divides by N - 1)");
  const double g = n_particles > 1 ? params.collision / (n_particles - 1) : 0.0;
  const double hop = std::sqrt(2.0) * params.tunneling;

  const auto dim = static_cast<Eigen::Index>(basis.size());
  CMatrix h = CMatrix::Zero(dim, dim);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const double m1 = basis[i][0];
    const double m2 = basis[i][1];
    h(i, i) = params.tunneling * m1 + g * (0.5 * m1 * (m1 - 1) + m2 * (m2 - 1));
    if (basis[i][1] > 0) {
      const std::size_t t = basis.index_of({basis[i][0] + 1, basis[i][1] - 1});
      const double v = hop * std::sqrt(m2 * (m1 + 1));
      h(t, i) += v;
      h(i, t) += v;
    }
  }
  return {std::move(h), params};
}

ExactPropagator::ExactPropagator(const HamiltonianMatrix& h) {
  const CMatrix& m = h.matrix;
  if (m.rows() != m.cols()) throw DomainError("Hamiltonian must be square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw DomainError("Hamiltonian matrix is not Hermitian");
  if (m.imag().cwiseAbs().maxCoeff() == 0.0) {
    Eigen::SelfAdjointEigenSolver<RMatrix> solver(m.real());
    energies_ = solver.eigenvalues();
    vectors_ = solver.eigenvectors().cast<Complex>();
  } else {
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(m);
    energies_ = solver.eigenvalues();
    vectors_ = solver.eigenvectors();
  }
}

FockVector ExactPropagator::evolve(const FockVector& psi0, double t) const {
  if (psi0.amplitudes.size() != vectors_.rows())
    throw DomainError("evolve: dimension mismatch");
  const CVector coeff = vectors_.adjoint() * psi0.amplitudes;
  const CVector phased =
      coeff.cwiseProduct((energies_.cast<Complex>() * Complex(0.0, -t))
                             .array()
                             .exp()
                             .matrix());
  return FockVector{vectors_ * phased, psi0.basis};
}

std::vector<FockVector> evolve_exact(const FockVector& psi0,
                                     const HamiltonianMatrix& h,
                                     std::span<const double> times) {
  if (std::abs(psi0.norm() - 1.0) > 1e-8)
    throw DomainError("evolve_exact: initial state must be normalized");
  const ExactPropagator propagator(h);
  std::vector<FockVector> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(propagator.evolve(psi0, t));
  return out;
}

FockVector rotate_modes(const FockVector& psi, const FockBasis& basis,
                        RotationDirection direction) {
  require_modes(basis, 3, "rotate_modes");
  const bool forward = direction == RotationDirection::Forward;
  if (forward && psi.basis != ModeBasis::Raw)
    throw DomainError("rotate_modes: forward rotation needs raw-mode input");
  if (!forward && psi.basis != ModeBasis::Rotated)
    throw DomainError("rotate_modes: inverse rotation needs rotated input");
  if (psi.amplitudes.size() != static_cast<Eigen::Index>(basis.size()))
    throw DomainError("rotate_modes: dimension mismatch");

  const int n_particles = basis.particles();
  FockVector out{CVector::Zero(psi.amplitudes.size()),
                 forward ? ModeBasis::Rotated : ModeBasis::Raw};
  for (int total = 0; total <= n_particles; ++total) {
    const RMatrix block = beam_splitter_block(total);
    const int third = n_particles - total;
    // Raw state (p, total - p, third) <-> rotated state (q, third, total - q).
    std::vector<std::size_t> raw_idx(total + 1), rot_idx(total + 1);
    for (int p = 0; p <= total; ++p) {
      raw_idx[p] = basis.index_of({p, total - p, third});
      rot_idx[p] = basis.index_of({p, third, total - p});
    }
    for (int q = 0; q <= total; ++q) {
      Complex acc{0.0, 0.0};
      for (int p = 0; p <= total; ++p) {
        acc += forward ? block(q, p) * psi.amplitudes(raw_idx[p])
                       : block(p, q) * psi.amplitudes(rot_idx[p]);
      }
      out.amplitudes(forward ? rot_idx[q] : raw_idx[q]) = acc;
    }
  }
  return out;
}

FockVector project_invariant_subspace(const FockVector& rotated,
                                      const FockBasis& basis3,
                                      const FockBasis& basis2) {
  require_modes(basis3, 3, "project_invariant_subspace");
  require_modes(basis2, 2, "project_invariant_subspace");
  if (rotated.basis != ModeBasis::Rotated)
    throw DomainError("project_invariant_subspace: needs rotated-mode input");
  const int n_particles = basis3.particles();
  FockVector out{CVector::Zero(static_cast<Eigen::Index>(basis2.size())),
                 ModeBasis::Rotated};
  for (std::size_t i = 0; i < basis2.size(); ++i) {
    const int q = basis2[i][0];
    out.amplitudes(i) =
        rotated.amplitudes(basis3.index_of({q, n_particles - q, 0}));
  }
  return out;
}

FockVector embed_invariant_subspace(const FockVector& psi2,
                                    const FockBasis& basis2,
                                    const FockBasis& basis3) {
  require_modes(basis3, 3, "embed_invariant_subspace");
  require_modes(basis2, 2, "embed_invariant_subspace");
  const int n_particles = basis3.particles();
  FockVector rotated{CVector::Zero(static_cast<Eigen::Index>(basis3.size())),
                     ModeBasis::Rotated};
  for (std::size_t i = 0; i < basis2.size(); ++i) {
    const int q = basis2[i][0];
    rotated.amplitudes(basis3.index_of({q, n_particles - q, 0})) =
        psi2.amplitudes(i);
  }
  return rotate_modes(rotated, basis3, RotationDirection::Inverse);
}

Observable parse_observable(std::string_view name) {
  if (name == "sz") return Observable::Imbalance;
  if (name == "nb3") return Observable::ThirdModeFraction;
  if (name == "n1") return Observable::Occupation1;
  if (name == "n2") return Observable::Occupation2;
  if (name == "n3") return Observable::Occupation3;
  throw DomainError("unknown observable '" + std::string(name) + "'");
}

std::string observable_name(Observable obs) {
  switch (obs) {
    case Observable::Imbalance: return "sz";
    case Observable::ThirdModeFraction: return "nb3";
    case Observable::Occupation1: return "n1";
    case Observable::Occupation2: return "n2";
    case Observable::Occupation3: return "n3";
  }
  return "?";
}

double expectation(const FockVector& psi, const FockBasis& basis,
                   Observable obs) {
  if (psi.amplitudes.size() != static_cast<Eigen::Index>(basis.size()))
    throw DomainError("expectation: dimension mismatch");
  const int n = basis.modes();
  const double n_particles = basis.particles();

  auto diagonal_mean = [&](const FockVector& v, auto&& weight) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < basis.size(); ++i) {
      const double p = std::norm(v.amplitudes(i));
      num += p * weight(basis[i]);
      den += p;
    }
    if (!(den > 0.0)) throw DomainError("expectation of a zero vector");
    return num / den;
  };

  switch (obs) {
    case Observable::Imbalance: {
      const double s = 0.5 * n_particles;
      if (n == 2) {
        return diagonal_mean(psi, [&](const Occupation& m) {
          return 0.5 * (m[0] - m[1]) / s;
        });
      }
      if (n != 3) break;
      const FockVector rot = psi.basis == ModeBasis::Rotated
                                 ? psi
                                 : rotate_modes(psi, basis, RotationDirection::Forward);
      return diagonal_mean(rot, [&](const Occupation& m) {
        return 0.5 * (m[0] - m[1]) / s;
      });
    }
    case Observable::ThirdModeFraction: {
      if (n != 3)
        throw DomainError("the b3 occupation needs a three-mode state");
      const FockVector rot = psi.basis == ModeBasis::Rotated
                                 ? psi
                                 : rotate_modes(psi, basis, RotationDirection::Forward);
      return diagonal_mean(rot, [&](const Occupation& m) {
        return m[2] / n_particles;
      });
    }
    case Observable::Occupation1:
    case Observable::Occupation2:
    case Observable::Occupation3: {
      const int j = obs == Observable::Occupation1   ? 0
                    : obs == Observable::Occupation2 ? 1
                                                     : 2;
      if (j >= n) throw DomainError("mode index exceeds mode count");
      return diagonal_mean(psi, [&](const Occupation& m) {
        return m[j] / n_particles;
      });
    }
  }
  throw DomainError("observable not defined for this mode count");
}

}  // namespace sunivr
