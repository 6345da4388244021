#ifndef SUNIVR_TESTS_SUPPORT_HPP
#define SUNIVR_TESTS_SUPPORT_HPP

#include <cmath>
#include <random>
#include <vector>

#include "sunivr/types.hpp"

namespace sunivr::test {

inline CVector random_vector(std::mt19937_64& rng, Eigen::Index size,
                             double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  CVector v(size);
  for (Eigen::Index i = 0; i < size; ++i) v(i) = Complex(dist(rng), dist(rng));
  return v;
}

inline std::vector<double> uniform_times(double horizon, int outputs) {
  std::vector<double> t(static_cast<std::size_t>(outputs));
  for (int k = 0; k < outputs; ++k)
    t[static_cast<std::size_t>(k)] = horizon * k / (outputs - 1);
  return t;
}

inline double relative_error(const CMatrix& a, const CMatrix& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1e-300, b.cwiseAbs().maxCoeff());
}

inline const double kTanPi8 = std::tan(kPi / 8.0);

}  // namespace sunivr::test

#endif  // SUNIVR_TESTS_SUPPORT_HPP
