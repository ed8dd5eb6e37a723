#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "birkhoff/quadrature.hpp"
#include "birkhoff/types.hpp"

namespace birkhoff {

/// One coefficient p_k of the differential expression, either a polynomial
/// sum_i c_i x^i or a table of uniform samples on [0, 1] read through local
/// cubic interpolation.
class Coefficient {
 public:
  enum class Kind { Poly, Samples };

  Coefficient() = default;

  static Coefficient poly(std::vector<Complex> c) {
    return Coefficient(Kind::Poly, std::move(c));
  }
  static Coefficient samples(std::vector<Complex> v) {
    if (v.size() < 2) throw spec_error("sample table needs at least 2 values");
    return Coefficient(Kind::Samples, std::move(v));
  }

  Kind kind() const { return kind_; }
  const std::vector<Complex>& values() const { return values_; }

  bool is_zero() const {
    return std::all_of(values_.begin(), values_.end(),
                       [](Complex v) { return v == Complex{}; });
  }

  Complex operator()(double x) const {
    if (values_.empty()) return {};
    if (kind_ == Kind::Poly) {
      Complex acc{};
      for (auto it = values_.rbegin(); it != values_.rend(); ++it) acc = acc * x + *it;
      return acc;
    }
    return interpolate(x);
  }

  double l1_norm() const {
    if (is_zero()) return 0.0;
    return integrate([this](double x) { return std::abs((*this)(x)); }, 0.0, 1.0, 64);
  }

 private:
  Coefficient(Kind kind, std::vector<Complex> v) : kind_(kind), values_(std::move(v)) {}

  // Four-point Lagrange interpolation; the stencil slides inward at the ends.
  Complex interpolate(double x) const {
    const int n = static_cast<int>(values_.size());
    const double h = 1.0 / (n - 1);
    const double t = std::clamp(x, 0.0, 1.0) / h;
    if (n < 4) {
      const int i = std::min(static_cast<int>(t), n - 2);
      const double s = t - i;
      return values_[i] * (1.0 - s) + values_[i + 1] * s;
    }
    int i0 = static_cast<int>(std::floor(t)) - 1;
    i0 = std::clamp(i0, 0, n - 4);
    Complex acc{};
    for (int a = 0; a < 4; ++a) {
      double w = 1.0;
      for (int b = 0; b < 4; ++b)
        if (b != a) w *= (t - (i0 + b)) / static_cast<double>(a - b);
      acc += w * values_[i0 + a];
    }
    return acc;
  }

  Kind kind_ = Kind::Poly;
  std::vector<Complex> values_;
};

/// l(y) = D^n y + sum_{k<=n-2} p_k D^k y with D = -i d/dx on [0, 1].
class DifferentialExpression {
 public:
  DifferentialExpression() = default;

  explicit DifferentialExpression(int order)
      : order_(order), coeffs_(static_cast<std::size_t>(std::max(order - 1, 0))) {
    if (order < 1) throw spec_error("order must be >= 1", "order");
  }

  /// Sets p_k; k must lie in 0..n-2 (there is no slot for D^{n-1}).
  DifferentialExpression& set(int k, Coefficient c) {
    if (k < 0 || k > order_ - 2)
      throw spec_error("coefficient index " + std::to_string(k) +
                           " outside 0..n-2", "coefficients");
    coeffs_[static_cast<std::size_t>(k)] = std::move(c);
    return *this;
  }

  int order() const { return order_; }
  const std::vector<Coefficient>& coefficients() const { return coeffs_; }

  Complex p(int k, double x) const { return coeffs_[static_cast<std::size_t>(k)](x); }

  bool is_unperturbed() const {
    return std::all_of(coeffs_.begin(), coeffs_.end(),
                       [](const Coefficient& c) { return c.is_zero(); });
  }

  double coefficient_l1_sum() const {
    double s = 0.0;
    for (const auto& c : coeffs_) s += c.l1_norm();
    return s;
  }

  /// Radius beyond which Birkhoff asymptotics are trusted: 5 (1 + sum ||p_k||_1).
  double default_r0() const { return 5.0 * (1.0 + coefficient_l1_sum()); }

 private:
  int order_ = 1;
  std::vector<Coefficient> coeffs_;
};

/// Row j encodes U_j(y) = sum_k a_{jk} D^k y(0) + b_{jk} D^k y(1).
struct RawBoundaryConditions {
  CMatrix a;
  CMatrix b;

  int order() const { return static_cast<int>(a.cols()); }

  CMatrix stacked() const {
    CMatrix m(a.rows(), a.cols() + b.cols());
    m << a, b;
    return m;
  }
};

/// Numerical rank with a relative singular-value threshold.
inline int numerical_rank(const CMatrix& m, double rel_tol = 1e-10) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<CMatrix> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * s(0)) ++r;
  return r;
}

/// One boundary row of the normalized system. Entries above `order` are zero;
/// the D^order entries are the leading pair, lower entries are the tail.
struct NormalizedRow {
  int order = 0;
  CVector a;
  CVector b;
};

/// Boundary conditions in normal form: rows grouped by derivative order
/// (ascending), r_j rows of order j, and for r_j = 2 the leading block is I_2.
class NormalizedBoundaryConditions {
 public:
  NormalizedBoundaryConditions() = default;
  NormalizedBoundaryConditions(int n, std::vector<NormalizedRow> rows)
      : n_(n), rows_(std::move(rows)), ranks_(static_cast<std::size_t>(n), 0) {
    std::stable_sort(rows_.begin(), rows_.end(),
                     [](const NormalizedRow& l, const NormalizedRow& r) {
                       return l.order < r.order;
                     });
    for (const auto& r : rows_) ++ranks_[static_cast<std::size_t>(r.order)];
  }

  int order() const { return n_; }
  const std::vector<NormalizedRow>& rows() const { return rows_; }
  const std::vector<int>& ranks() const { return ranks_; }
  int rank(int j) const { return ranks_[static_cast<std::size_t>(j)]; }

  /// Leading column vector b_j^i (length r_j), i = 0 for x = 0, 1 for x = 1.
  CVector leading(int j, int i) const {
    CVector v(rank(j));
    Eigen::Index idx = 0;
    for (const auto& r : rows_)
      if (r.order == j) v(idx++) = (i == 0 ? r.a(j) : r.b(j));
    return v;
  }

  RawBoundaryConditions render() const {
    RawBoundaryConditions raw{CMatrix::Zero(n_, n_), CMatrix::Zero(n_, n_)};
    for (int r = 0; r < n_; ++r) {
      raw.a.row(r) = rows_[static_cast<std::size_t>(r)].a.transpose();
      raw.b.row(r) = rows_[static_cast<std::size_t>(r)].b.transpose();
    }
    return raw;
  }

 private:
  int n_ = 0;
  std::vector<NormalizedRow> rows_;
  std::vector<int> ranks_;
};

struct BvpSpec {
  DifferentialExpression expression;
  RawBoundaryConditions boundary;
  std::string label;
};

/// Brings boundary conditions to normal form by Gaussian elimination with
/// pivoting, taking derivative orders from n-1 down to 0. Entries at or below
/// rel_tol * max|entry| are treated as zero; a pivot within three decades of
/// that threshold is reported as a rank ambiguity.
inline NormalizedBoundaryConditions normalize(const RawBoundaryConditions& raw,
                                              double rel_tol = 1e-10) {
  const int n = raw.order();
  if (raw.a.rows() != n || raw.b.rows() != n || raw.b.cols() != n)
    throw spec_error("boundary matrices must be n x n", "boundary");
  CMatrix m = raw.stacked();
  const double scale = m.cwiseAbs().maxCoeff();
  if (scale == 0.0) throw spec_error("boundary rank deficient", "boundary");
  const double tol = rel_tol * scale;
  const double ambiguous = 1e3 * tol;

  std::vector<int> remaining(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) remaining[static_cast<std::size_t>(r)] = r;
  std::vector<NormalizedRow> out;

  auto eliminate = [&](int pivot_row, Eigen::Index col, const std::vector<int>& rows) {
    for (int r : rows) {
      if (r == pivot_row) continue;
      const Complex f = m(r, col) / m(pivot_row, col);
      if (f != Complex{}) m.row(r) -= f * m.row(pivot_row);
      m(r, col) = 0.0;
    }
  };
  auto check_pivot = [&](double mag, int j) {
    if (mag > tol && mag < ambiguous)
      throw numerical_error("numerical rank ambiguity at derivative order " +
                            std::to_string(j));
  };
  auto find_max = [&](Eigen::Index col, int skip) {
    int best = -1;
    double mag = 0.0;
    for (int r : remaining) {
      if (r == skip) continue;
      if (std::abs(m(r, col)) > mag) {
        mag = std::abs(m(r, col));
        best = r;
      }
    }
    return std::pair{best, mag};
  };

  for (int j = n - 1; j >= 0; --j) {
    const Eigen::Index c0 = j, c1 = n + j;
    auto [p0, mag0] = find_max(c0, -1);
    auto [p1, mag1] = find_max(c1, -1);
    // First pivot: the larger entry of the 2-column block.
    int first = -1;
    Eigen::Index first_col = c0, other_col = c1;
    double first_mag = mag0;
    if (mag1 > mag0) {
      first = p1;
      first_col = c1;
      other_col = c0;
      first_mag = mag1;
    } else {
      first = p0;
    }
    check_pivot(first_mag, j);
    if (first_mag <= tol) {
      for (int r : remaining) m(r, c0) = m(r, c1) = 0.0;
      continue;
    }
    eliminate(first, first_col, remaining);
    auto [second, second_mag] = find_max(other_col, first);
    check_pivot(second_mag, j);
    std::vector<int> pivots;
    if (second_mag > tol) {
      eliminate(second, other_col, remaining);
      m(first, other_col) = 0.0;
      // The row carrying the x = 0 leading entry comes first, giving I_2.
      const int row0 = first_col == c0 ? first : second;
      const int row1 = first_col == c0 ? second : first;
      m.row(row0) /= m(row0, c0);
      m.row(row1) /= m(row1, c1);
      pivots = {row0, row1};
    } else {
      for (int r : remaining)
        if (r != first) m(r, other_col) = 0.0;
      const Complex s = std::abs(m(first, c0)) > tol ? m(first, c0) : m(first, c1);
      if (std::abs(m(first, c0)) <= tol) m(first, c0) = 0.0;
      m.row(first) /= s;
      pivots = {first};
    }
    for (int r : pivots) {
      NormalizedRow row{j, m.row(r).head(n).transpose(), m.row(r).tail(n).transpose()};
      for (int k = j + 1; k < n; ++k) row.a(k) = row.b(k) = 0.0;
      out.push_back(std::move(row));
      remaining.erase(std::find(remaining.begin(), remaining.end(), r));
    }
  }
  if (!remaining.empty()) throw spec_error("boundary rank deficient", "boundary");
  return NormalizedBoundaryConditions(n, std::move(out));
}

/// Convenience constructor from dense rows [a_{j0}..a_{j,n-1} | b_{j0}..].
inline RawBoundaryConditions boundary_from_rows(
    int n, const std::vector<std::vector<Complex>>& rows) {
  RawBoundaryConditions raw{CMatrix::Zero(static_cast<Eigen::Index>(rows.size()), n),
                            CMatrix::Zero(static_cast<Eigen::Index>(rows.size()), n)};
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != static_cast<std::size_t>(2 * n))
      throw spec_error("row length must be 2n", "boundary");
    for (int k = 0; k < n; ++k) {
      raw.a(static_cast<Eigen::Index>(r), k) = rows[r][static_cast<std::size_t>(k)];
      raw.b(static_cast<Eigen::Index>(r), k) = rows[r][static_cast<std::size_t>(n + k)];
    }
  }
  return raw;
}

/// Checks the shape and independence invariants of a BVP specification.
inline void validate(const BvpSpec& spec) {
  const int n = spec.expression.order();
  const auto& bc = spec.boundary;
  if (bc.a.rows() != n || bc.b.rows() != n)
    throw spec_error("row count != order", "boundary");
  if (bc.a.cols() != n || bc.b.cols() != n)
    throw spec_error("column count != order", "boundary");
  if (numerical_rank(bc.stacked()) < n) throw spec_error("boundary rank deficient", "boundary");
}

}  // namespace birkhoff
