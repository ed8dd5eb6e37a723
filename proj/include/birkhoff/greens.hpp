#pragma once

#include <functional>
#include <span>
#include <vector>

#include "birkhoff/characteristic.hpp"
#include "birkhoff/parallel.hpp"
#include "birkhoff/quadrature.hpp"

namespace birkhoff {

/// Coefficient matrix of the finite-rank part of G. `matrix` holds the
/// columns A_t, so matrix(k, t) = a_tk.
struct ModifiedCharacteristicMatrix {
  CMatrix matrix;
  double frobenius = 0.0;
  double residual = 0.0;

  Complex a(int t, int k) const { return matrix(k, t); }
};

/// Limit of the modified characteristic matrix along regular probe sequences.
struct LimitMatrix {
  CMatrix a_inf;
  CMatrix d_matrix;
};

/// D = diag(eps_0..eps_{p-1}, -eps_p..-eps_{n-1}) / (2 pi).
inline CMatrix limit_diagonal(int n, int p) {
  const auto eps = unit_roots(n);
  CMatrix d = CMatrix::Zero(n, n);
  for (int t = 0; t < n; ++t)
    d(t, t) = (t < p ? 1.0 : -1.0) * eps[static_cast<std::size_t>(t)] / (2.0 * kPi);
  return d;
}

inline LimitMatrix a_infinity(const NormalizedBoundaryConditions& nbc, int nu) {
  const int n = nbc.order();
  const int p = p_value(n, nu);
  const CMatrix t01 = theta_matrix(nbc, p, 0);
  if (is_numerically_singular(t01, det(t01)))
    throw numerical_error("irregular: limit undefined by Theorem 2 hypotheses");
  const CMatrix t10 = theta_matrix(nbc, p, 1);
  const CMatrix d = limit_diagonal(n, p);
  return {t01.partialPivLu().solve(t10 * d), d};
}

/// Solves Delta A_t = +-(eps_t / 2 pi) [B_t^#] column by column (+ for t < p).
inline ModifiedCharacteristicMatrix mcm(const CanonicalSystem& cs, const Characteristic& ch) {
  const int n = cs.order();
  if (is_numerically_singular(ch.delta, ch.det, 1e-13))
    throw numerical_error("singular characteristic matrix: rho is a characteristic value");
  const CMatrix rhs = ch.bracket * limit_diagonal(n, cs.p());
  const auto lu = ch.delta.fullPivLu();
  ModifiedCharacteristicMatrix out;
  out.matrix = lu.solve(rhs);
  out.frobenius = out.matrix.norm();
  out.residual = (ch.delta * out.matrix - rhs).norm() / std::max(1.0, rhs.norm());
  return out;
}

/// Green's function of l - lambda with the boundary conditions, at one rho.
///
/// Both representations are available: the bordered determinant
///   G = (-1)^n Delta(x, xi) / (n rho^{n-1} Delta),
///   Delta(x, xi) = i det[[z(x)^T, g(x, xi)], [Delta, H(xi)]],
/// and the expansion G = g_0 - (2 pi i / (n rho^{n-1})) z(x)^T A u(xi).
class GreenFunction {
 public:
  GreenFunction(CanonicalSystem cs, NormalizedBoundaryConditions nbc)
      : cs_(std::move(cs)), nbc_(std::move(nbc)), ch_(characteristic(cs_, nbc_)), a_(mcm(cs_, ch_)) {
    const int n = cs_.order();
    scale_ = static_cast<double>(n) * std::pow(cs_.rho(), n - 1);
  }

  GreenFunction(const DifferentialExpression& expr, const NormalizedBoundaryConditions& nbc,
                Complex rho, int nu)
      : GreenFunction(CanonicalSystem(make_fss(expr, rho_point(rho, expr.order()),
                                               SectorIndex::of(expr.order(), nu))),
                      nbc) {}

  const CanonicalSystem& canonical() const { return cs_; }
  const NormalizedBoundaryConditions& boundary() const { return nbc_; }
  const Characteristic& characteristic_data() const { return ch_; }
  const ModifiedCharacteristicMatrix& modified_matrix() const { return a_; }
  Complex rho() const { return cs_.rho(); }
  Complex lambda() const { return std::pow(cs_.rho(), cs_.order()); }

  /// H(xi) = sum_t (-1)^{1-#} [B_t^#] eps_t u_t(xi).
  CVector h_sum(const PointData& xi) const {
    const CVector u = cs_.u(xi);
    CVector h = CVector::Zero(cs_.order());
    for (int t = 0; t < cs_.order(); ++t)
      h += (t < cs_.p() ? 1.0 : -1.0) * cs_.eps(t) * u(t) * ch_.bracket.col(t);
    return h;
  }

  /// H(xi) as V applied in x to the scaled kernel g(., xi), using the x < xi
  /// branch at 0 and the x > xi branch at 1.
  CVector h_direct(const PointData& xi) const {
    const int n = cs_.order();
    CVector d0 = CVector::Zero(n), d1 = CVector::Zero(n);
    for (int k = 0; k < n; ++k) {
      const Complex w = cs_.eps(k) * xi.c(k);
      for (int m = 0; m < n; ++m) {
        if (k < cs_.p())
          d1(m) += w * cs_.at1().v(k, m) * std::exp(kI * cs_.mu(k) * (1.0 - xi.x));
        else
          d0(m) -= w * cs_.at0().v(k, m) * std::exp(-kI * cs_.mu(k) * xi.x);
      }
    }
    return boundary_forms(nbc_, cs_.rho(), d0, d1);
  }

  Complex determinant_form(const PointData& x, const PointData& xi) const {
    const int n = cs_.order();
    CMatrix m(n + 1, n + 1);
    m.block(0, 0, 1, n) = cs_.z(x).transpose();
    m(0, n) = cs_.g(x, xi);
    m.block(1, 0, n, n) = ch_.delta;
    m.block(1, n, n, 1) = h_sum(xi);
    const Complex bordered = kI * det(m);
    return (n % 2 == 0 ? 1.0 : -1.0) * bordered / (scale_ * ch_.det);
  }

  Complex expansion_form(const PointData& x, const PointData& xi) const {
    return cs_.g0(x, xi) -
           2.0 * kPi * kI / scale_ * (cs_.z(x).transpose() * a_.matrix * cs_.u(xi))(0);
  }

  Complex determinant_form(double x, double xi) const {
    const auto p = cs_.prepare(std::array<double, 2>{x, xi});
    return determinant_form(p[0], p[1]);
  }
  Complex expansion_form(double x, double xi) const {
    const auto p = cs_.prepare(std::array<double, 2>{x, xi});
    return expansion_form(p[0], p[1]);
  }
  Complex operator()(double x, double xi) const { return expansion_form(x, xi); }

  /// Kernel matrix G(x_i, xi_j) in expansion form.
  CMatrix kernel(std::span<const double> xs, std::span<const double> xis) const {
    const auto px = cs_.prepare(xs);
    const auto pxi = cs_.prepare(xis);
    return kernel(px, pxi);
  }

  CMatrix kernel(const std::vector<PointData>& px, const std::vector<PointData>& pxi) const {
    const int n = cs_.order();
    CMatrix z(static_cast<Eigen::Index>(px.size()), n), u(static_cast<Eigen::Index>(pxi.size()), n);
    for (std::size_t i = 0; i < px.size(); ++i) z.row(static_cast<Eigen::Index>(i)) = cs_.z(px[i]).transpose();
    for (std::size_t j = 0; j < pxi.size(); ++j) u.row(static_cast<Eigen::Index>(j)) = cs_.u(pxi[j]).transpose();
    CMatrix k = -2.0 * kPi * kI / scale_ * (z * a_.matrix * u.transpose());
    parallel_for(px.size(), [&](std::size_t i) {
      for (std::size_t j = 0; j < pxi.size(); ++j)
        k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += cs_.g0(px[i], pxi[j]);
    });
    return k;
  }

  /// Finite-rank part sum_{t,k} a_tk z_k(x) u_t(xi), without the
  /// 2 pi i / (n rho^{n-1}) prefactor.
  CMatrix finite_rank_kernel(std::span<const double> xs) const {
    const auto pts = cs_.prepare(xs);
    const int n = cs_.order();
    CMatrix z(static_cast<Eigen::Index>(xs.size()), n), u(static_cast<Eigen::Index>(xs.size()), n);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      z.row(static_cast<Eigen::Index>(i)) = cs_.z(pts[i]).transpose();
      u.row(static_cast<Eigen::Index>(i)) = cs_.u(pts[i]).transpose();
    }
    return z * a_.matrix * u.transpose();
  }

  /// y(x) = int_0^1 G(x, xi) f(xi) dxi, with the integral split at xi = x so
  /// each piece has a smooth integrand.
  std::vector<Complex> apply(const std::function<Complex(double)>& f, std::span<const double> xs,
                             std::size_t m = 48) const {
    std::vector<double> nodes;
    std::vector<double> weights;
    for (double x : xs) {
      for (auto [a, b] : {std::pair{0.0, x}, std::pair{x, 1.0}}) {
        const auto rule = gauss_legendre(m, a, b);
        nodes.insert(nodes.end(), rule.nodes.begin(), rule.nodes.end());
        weights.insert(weights.end(), rule.weights.begin(), rule.weights.end());
      }
    }
    const auto pn = cs_.prepare(nodes);
    const auto px = cs_.prepare(xs);
    std::vector<Complex> out(xs.size());
    parallel_for(xs.size(), [&](std::size_t i) {
      Complex acc{};
      for (std::size_t q = 2 * m * i; q < 2 * m * (i + 1); ++q) {
        if (weights[q] == 0.0) continue;
        // Nodes on [0, x] lie below x, nodes on [x, 1] above, so branch
        // selection inside g_0 follows the split.
        acc += weights[q] * expansion_form(px[i], pn[q]) * f(nodes[q]);
      }
      out[i] = acc;
    });
    return out;
  }

 private:
  CanonicalSystem cs_;
  NormalizedBoundaryConditions nbc_;
  Characteristic ch_;
  ModifiedCharacteristicMatrix a_;
  Complex scale_;
};

/// Norm estimates of an integral operator discretized on a Gauss-Legendre
/// rule through the weighted matrix sqrt(w_i) K(x_i, x_j) sqrt(w_j).
struct OperatorNorm {
  double hilbert_schmidt = 0.0;
  double power = 0.0;
};

inline CMatrix weighted(const CMatrix& kernel, const QuadratureRule& rule) {
  CMatrix k = kernel;
  for (Eigen::Index i = 0; i < k.rows(); ++i)
    for (Eigen::Index j = 0; j < k.cols(); ++j)
      k(i, j) *= std::sqrt(rule.weights[static_cast<std::size_t>(i)] *
                           rule.weights[static_cast<std::size_t>(j)]);
  return k;
}

/// Frobenius norm (Hilbert-Schmidt upper bound) and power iteration on K*K.
inline OperatorNorm operator_norm(const CMatrix& weighted_kernel, int iterations = 30) {
  OperatorNorm out;
  out.hilbert_schmidt = weighted_kernel.norm();
  const Eigen::Index m = weighted_kernel.cols();
  if (m == 0) return out;
  // Deterministic start with no symmetry, so it is not orthogonal to the top
  // singular vector of symmetric or antisymmetric kernels.
  CVector v(m);
  for (Eigen::Index i = 0; i < m; ++i) v(i) = Complex(1.0 + 0.37 * std::sin(3.0 * i + 1.0), 0.1 * std::cos(5.0 * i));
  v.normalize();
  double sigma = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const CVector kv = weighted_kernel * v;
    const CVector w = weighted_kernel.adjoint() * kv;
    sigma = std::sqrt(std::abs(v.dot(w)));
    const double nw = w.norm();
    if (nw == 0.0) break;
    v = w / nw;
  }
  out.power = sigma;
  return out;
}

/// Norms of the resolvent kernel on an m-point rule.
inline OperatorNorm green_operator_norm(const GreenFunction& g, std::size_t m = 256,
                                        int iterations = 30) {
  const auto rule = gauss_legendre(m);
  return operator_norm(weighted(g.kernel(rule.nodes, rule.nodes), rule), iterations);
}

/// Norms of the particular-solution operator with kernel g_0.
inline OperatorNorm g0_operator_norm(const CanonicalSystem& cs, std::size_t m = 256) {
  const auto rule = gauss_legendre(m);
  const auto pts = cs.prepare(rule.nodes);
  CMatrix k(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cs.g0(pts[i], pts[j]);
  return operator_norm(weighted(k, rule));
}

/// Full-range identity: (1/n) Q Psi^* equals [B^0 | B^1] with b_j^i placed in
/// row block j, column j. Returns both sides.
inline std::pair<CMatrix, CMatrix> full_range_sides(const NormalizedBoundaryConditions& nbc) {
  const int n = nbc.order();
  const auto eps = unit_roots(n);
  CMatrix q(n, 2 * n), psi(2 * n, 2 * n);
  psi.setZero();
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < n; ++k) q.col(i * n + k) = build_B(nbc, k, i);
  // Psi = diag(Psi_n, Psi_n) with Psi_n(k, j) = eps_k^j.
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < n; ++k) {
      Complex w{1.0, 0.0};
      for (int j = 0; j < n; ++j) {
        psi(i * n + k, i * n + j) = w;
        w *= eps[static_cast<std::size_t>(k)];
      }
    }
  CMatrix lhs = q * psi.conjugate() / static_cast<double>(n);
  CMatrix rhs = CMatrix::Zero(n, 2 * n);
  Eigen::Index row = 0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < 2; ++i) {
      const CVector b = nbc.leading(j, i);
      rhs.block(row, i * n + j, b.size(), 1) = b;
    }
    row += nbc.rank(j);
  }
  return {lhs, rhs};
}

/// One probe point of a Theorem 2 convergence sweep.
struct ConvergenceSample {
  Complex rho;
  double a_error = 0.0;
  double delta_error = 0.0;
  double min_singular = 0.0;
  double frobenius = 0.0;
};

struct ConvergenceReport {
  std::vector<ConvergenceSample> samples;
  CMatrix a_inf;
  /// Least-squares slope of log ||A - A_inf|| against log |rho|.
  double fitted_exponent = 0.0;
};

inline double loglog_slope(const std::vector<double>& r, const std::vector<double>& e) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double x = std::log(r[i]), y = std::log(e[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

inline ConvergenceReport verify_theorem2(const NormalizedBoundaryConditions& nbc,
                                         const DifferentialExpression& expr, int nu,
                                         const std::vector<Complex>& probes) {
  ConvergenceReport rep;
  rep.a_inf = a_infinity(nbc, nu).a_inf;
  const CMatrix theta_p = theta_matrix(nbc, p_value(nbc.order(), nu));
  rep.samples.resize(probes.size());
  parallel_for(probes.size(), [&](std::size_t i) {
    GreenFunction g(expr, nbc, probes[i], nu);
    auto& s = rep.samples[i];
    s.rho = probes[i];
    s.a_error = (g.modified_matrix().matrix - rep.a_inf).norm();
    s.delta_error = (g.characteristic_data().delta - theta_p).cwiseAbs().maxCoeff();
    s.frobenius = g.modified_matrix().frobenius;
    Eigen::JacobiSVD<CMatrix> svd(g.modified_matrix().matrix);
    s.min_singular = svd.singularValues().minCoeff();
  });
  std::vector<double> r, e;
  for (const auto& s : rep.samples)
    if (s.a_error > 0.0) {
      r.push_back(std::abs(s.rho));
      e.push_back(s.a_error);
    }
  rep.fitted_exponent = r.size() >= 2 ? loglog_slope(r, e) : 0.0;
  return rep;
}

}  // namespace birkhoff
