#pragma once

#include "birkhoff/fss.hpp"

namespace birkhoff {

/// Scaled boundary forms V(f) = (rho^{-order(row)} U_row(f))_row, from the
/// derivative values d0(m) = D^m f(0), d1(m) = D^m f(1).
inline CVector boundary_forms(const NormalizedBoundaryConditions& nbc, Complex rho,
                              const CVector& d0, const CVector& d1) {
  const int n = nbc.order();
  CVector out(n);
  for (int r = 0; r < n; ++r) {
    const auto& row = nbc.rows()[static_cast<std::size_t>(r)];
    out(r) = (row.a.transpose() * d0 + row.b.transpose() * d1)(0) * std::pow(rho, -row.order);
  }
  return out;
}

/// Characteristic matrix Delta (column k = V(z_k)) of a canonical system and
/// the exact bracket vectors [B_t^#]: V_1(z_t) e^{-i mu_t} for t < p and
/// V_0(z_t) e^{i mu_t} for t >= p. As |rho| grows in the sector, Delta tends
/// to the regularity matrix and the brackets to B_t^1, B_t^0.
struct Characteristic {
  CMatrix delta;
  CMatrix bracket;
  Complex det;
};

inline Characteristic characteristic(const CanonicalSystem& cs,
                                     const NormalizedBoundaryConditions& nbc) {
  const int n = cs.order();
  if (nbc.order() != n) throw domain_error("characteristic: order mismatch");
  const CMatrix z0 = cs.z_derivatives(cs.at0());
  const CMatrix z1 = cs.z_derivatives(cs.at1());
  Characteristic out{CMatrix(n, n), CMatrix(n, n), {}};
  const CVector zero = CVector::Zero(n);
  for (int k = 0; k < n; ++k) {
    out.delta.col(k) = boundary_forms(nbc, cs.rho(), z0.row(k).transpose(), z1.row(k).transpose());
    if (k < cs.p())
      out.bracket.col(k) = boundary_forms(nbc, cs.rho(), zero, cs.at1().v.row(k).transpose());
    else
      out.bracket.col(k) = boundary_forms(nbc, cs.rho(), cs.at0().v.row(k).transpose(), zero);
  }
  out.det = det(out.delta);
  return out;
}

/// Delta(rho) for the canonical system of the given sector.
inline Complex characteristic_determinant(const DifferentialExpression& expr,
                                          const NormalizedBoundaryConditions& nbc, Complex rho,
                                          int nu) {
  const int n = expr.order();
  CanonicalSystem cs(make_fss(expr, rho_point(rho, n), SectorIndex::of(n, nu)));
  return characteristic(cs, nbc).det;
}

}  // namespace birkhoff
