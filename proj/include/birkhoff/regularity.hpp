#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "birkhoff/model.hpp"

namespace birkhoff {

/// eps_j = exp(2 pi i j / n), j = 0..n-1.
inline std::vector<Complex> unit_roots(int n) {
  std::vector<Complex> e(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    // Exact values on the axes keep hand-checkable determinants exact.
    const int m = 4 * j;
    if (m % n == 0) {
      static constexpr std::array<Complex, 4> axis{Complex{1, 0}, Complex{0, 1},
                                                   Complex{-1, 0}, Complex{0, -1}};
      e[static_cast<std::size_t>(j)] = axis[static_cast<std::size_t>(m / n)];
    } else {
      e[static_cast<std::size_t>(j)] = std::polar(1.0, 2.0 * kPi * j / n);
    }
  }
  return e;
}

/// Number p of solutions exp(i rho eps_j x) decaying in sector S_nu:
/// n = 2q gives p = q in both sectors; n = 2q+1 gives q+1 in S_0 and q in S_1.
inline int p_value(int n, int nu) {
  if (n < 1 || (nu != 0 && nu != 1)) throw domain_error("p_value: need n >= 1, nu in {0,1}");
  const int q = n / 2;
  if (n % 2 == 0) return q;
  return nu == 0 ? q + 1 : q;
}

/// Sector index together with its split p.
struct SectorIndex {
  int nu = 0;
  int p = 0;

  static SectorIndex of(int n, int nu) { return {nu, p_value(n, nu)}; }
};

/// B_k^i: blocks b_j^i eps_k^j stacked over j (empty block when r_j = 0).
inline CVector build_B(const NormalizedBoundaryConditions& nbc, int k, int i) {
  const int n = nbc.order();
  const auto eps = unit_roots(n);
  CVector out(n);
  Eigen::Index pos = 0;
  for (int j = 0; j < n; ++j) {
    const CVector b = nbc.leading(j, i);
    // Repeated multiplication keeps powers of the exact axis roots exact.
    Complex wk{1.0, 0.0};
    for (int t = 0; t < j; ++t) wk *= eps[static_cast<std::size_t>(k)];
    for (Eigen::Index r = 0; r < b.size(); ++r) out(pos++) = b(r) * wk;
  }
  return out;
}

/// Matrix [B_k^first, k < p | B_k^{1-first}, k >= p]. first = 0 gives
/// Theta_p(b^0, b^1); first = 1 gives Theta_p(b^1, b^0).
inline CMatrix theta_matrix(const NormalizedBoundaryConditions& nbc, int p, int first = 0) {
  const int n = nbc.order();
  CMatrix m(n, n);
  for (int k = 0; k < n; ++k) m.col(k) = build_B(nbc, k, k < p ? first : 1 - first);
  return m;
}

struct ThetaResult {
  Complex value;
  CMatrix matrix;
};

/// Regularity determinant of sector S_nu and its matrix.
inline ThetaResult theta(const NormalizedBoundaryConditions& nbc, int nu) {
  const CMatrix m = theta_matrix(nbc, p_value(nbc.order(), nu));
  return {det(m), m};
}

/// Coefficients (c0, c1, c2) of F(s) = c0 + c1 s + c2 s^2.
using Quadratic = std::array<Complex, 3>;

/// Expands F(s) = det[B_0^0 + s B_0^1, B_k^0 (1<=k<q) | s B_q^0 + B_q^1, B_k^1 (k>q)]
/// exactly: the two inserted columns are affine in s, so
/// F = det[c,..,d'] + s (det[d,..,d'] + det[c,..,c']) + s^2 det[d,..,c'].
inline Quadratic f_polynomial(const NormalizedBoundaryConditions& nbc) {
  const int n = nbc.order();
  if (n % 2 != 0) throw domain_error("F(s) defined only for even order");
  const int q = n / 2;
  CMatrix base(n, n);
  for (int k = 1; k < q; ++k) base.col(k) = build_B(nbc, k, 0);
  for (int k = q + 1; k < n; ++k) base.col(k) = build_B(nbc, k, 1);
  const CVector c0 = build_B(nbc, 0, 0), d0 = build_B(nbc, 0, 1);
  const CVector cq = build_B(nbc, q, 1), dq = build_B(nbc, q, 0);
  auto with = [&](const CVector& first, const CVector& at_q) {
    CMatrix m = base;
    m.col(0) = first;
    m.col(q) = at_q;
    return det(m);
  };
  return {with(c0, cq), with(d0, cq) + with(c0, dq), with(d0, dq)};
}

/// Roots of a quadratic (or lower degree) polynomial. A leading coefficient at
/// or below 1e-9 of the largest one counts as absent.
inline std::vector<Complex> quadratic_roots(const Quadratic& c) {
  const double scale = std::max({std::abs(c[0]), std::abs(c[1]), std::abs(c[2])});
  if (scale == 0.0) return {};
  const double tiny = 1e-9 * scale;
  if (std::abs(c[2]) > tiny) {
    const Complex disc = std::sqrt(c[1] * c[1] - 4.0 * c[2] * c[0]);
    // Cancellation-free form.
    const Complex qq = -0.5 * (c[1] + (std::real(std::conj(c[1]) * disc) >= 0 ? disc : -disc));
    if (qq == Complex{}) return {Complex{}, Complex{}};
    return {qq / c[2], c[0] / qq};
  }
  if (std::abs(c[1]) > tiny) return {-c[0] / c[1]};
  return {};
}

enum class RegularityClass { StronglyRegular, WeaklyRegular, Irregular };

inline std::string short_name(RegularityClass k) {
  switch (k) {
    case RegularityClass::StronglyRegular: return "SR";
    case RegularityClass::WeaklyRegular: return "WR";
    case RegularityClass::Irregular: return "IRR";
  }
  return "?";
}

struct RegularityReport {
  Complex theta0;
  Complex theta1;
  CMatrix theta_matrix0;
  CMatrix theta_matrix1;
  std::optional<Quadratic> f_coeffs;
  std::vector<Complex> f_roots;
  RegularityClass klass = RegularityClass::Irregular;
};

/// Hadamard-relative zero test: |det M| <= tol * prod ||col_k||.
inline bool is_numerically_singular(const CMatrix& m, Complex value, double tol = 1e-9) {
  double hadamard = 1.0;
  for (Eigen::Index k = 0; k < m.cols(); ++k) hadamard *= m.col(k).norm();
  return std::abs(value) <= tol * hadamard;
}

/// Two roots count as simple when |r1 - r2| > tol * max(1, |r1|, |r2|).
inline bool has_two_simple_roots(const std::vector<Complex>& roots, double tol = 1e-9) {
  if (roots.size() != 2) return false;
  const double s = std::max({1.0, std::abs(roots[0]), std::abs(roots[1])});
  return std::abs(roots[0] - roots[1]) > tol * s;
}

inline RegularityReport classify(const NormalizedBoundaryConditions& nbc,
                                 double theta_tol = 1e-9, double root_tol = 1e-9) {
  RegularityReport rep;
  const auto t0 = theta(nbc, 0);
  const auto t1 = theta(nbc, 1);
  rep.theta0 = t0.value;
  rep.theta1 = t1.value;
  rep.theta_matrix0 = t0.matrix;
  rep.theta_matrix1 = t1.matrix;
  const int n = nbc.order();
  if (n % 2 == 0) {
    rep.f_coeffs = f_polynomial(nbc);
    rep.f_roots = quadratic_roots(*rep.f_coeffs);
  }
  if (is_numerically_singular(t0.matrix, t0.value, theta_tol) ||
      is_numerically_singular(t1.matrix, t1.value, theta_tol)) {
    rep.klass = RegularityClass::Irregular;
  } else if (n % 2 == 1 || has_two_simple_roots(rep.f_roots, root_tol)) {
    rep.klass = RegularityClass::StronglyRegular;
  } else {
    rep.klass = RegularityClass::WeaklyRegular;
  }
  return rep;
}

/// The six 2x2 minors p_ij (i<j) of the 2x4 matrix [a|b], columns ordered
/// (y(0), Dy(0), y(1), Dy(1)). Returned as p01, p02, p03, p12, p13, p23.
using PluckerCoordinates = std::array<Complex, 6>;

inline PluckerCoordinates plucker(const RawBoundaryConditions& raw) {
  if (raw.order() != 2 || raw.a.rows() != 2)
    throw domain_error("Plucker coordinates need n = 2");
  const CMatrix m = raw.stacked();
  auto minor = [&](int i, int j) { return m(0, i) * m(1, j) - m(0, j) * m(1, i); };
  return {minor(0, 1), minor(0, 2), minor(0, 3), minor(1, 2), minor(1, 3), minor(2, 3)};
}

/// Grassmann-Plucker relation for the minors above; zero for every 2x4 matrix.
/// Written with p_31 = -p_13 this is p01 p23 + p02 p31 + p03 p12.
inline Complex plucker_relation(const PluckerCoordinates& p) {
  return p[0] * p[5] - p[1] * p[4] + p[2] * p[3];
}

}  // namespace birkhoff
