#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace birkhoff {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr Complex kI{0.0, 1.0};

/// Failure categories. The CLI maps Spec -> exit 2, Numerical -> exit 3.
enum class ErrorKind { Spec, Numerical, Domain };

/// Library exception. `path` carries a JSON field path for spec errors
/// (e.g. "boundary.a[1][0]") and is empty otherwise.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, std::string path = {})
      : std::runtime_error(path.empty() ? what : path + ": " + what),
        kind_(kind),
        path_(std::move(path)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& path() const noexcept { return path_; }

 private:
  ErrorKind kind_;
  std::string path_;
};

inline Error spec_error(const std::string& what, std::string path = {}) {
  return Error(ErrorKind::Spec, what, std::move(path));
}
inline Error numerical_error(const std::string& what) {
  return Error(ErrorKind::Numerical, what);
}
inline Error domain_error(const std::string& what) {
  return Error(ErrorKind::Domain, what);
}

/// Determinant through partial-pivot LU; the empty determinant is 1.
inline Complex det(const CMatrix& m) {
  if (m.rows() == 0) return Complex{1.0, 0.0};
  return m.partialPivLu().determinant();
}

}  // namespace birkhoff
