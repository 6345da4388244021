#ifndef SUNIVR_TYPES_HPP
#define SUNIVR_TYPES_HPP

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace sunivr {

template <typename Scalar>
using ComplexT = std::complex<Scalar>;

template <typename Scalar>
using ComplexVectorT = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

template <typename Scalar>
using ComplexMatrixT =
    Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

using Complex = ComplexT<double>;
using CVector = ComplexVectorT<double>;
using CMatrix = ComplexMatrixT<double>;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr Complex kI{0.0, 1.0};

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A requested Fock space exceeds the configured dimension cap.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Arguments outside an operation's domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Physical model parameters of the Bose-Hubbard trimer (or its reduction).
struct ModelParams {
  int modes = 3;           ///< n, number of bosonic modes (2 or 3)
  int particles = 30;      ///< N, total boson number
  double tunneling = -1.0; ///< Omega, inverse time
  double collision = -1.0; ///< chi, inverse time
};

}  // namespace sunivr

#endif  // SUNIVR_TYPES_HPP
