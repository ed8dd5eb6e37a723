#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "birkhoff/model.hpp"
#include "birkhoff/regularity.hpp"

namespace birkhoff {

/// rho = lambda^{1/n} on the branch arg lambda in [0, 2 pi), so that
/// arg rho = arg lambda / n and rho lies in S_0 or S_1.
struct RhoPoint {
  Complex rho;
  Complex lambda;
  int n = 1;
};

inline RhoPoint rho_from_lambda(Complex lambda, int n) {
  if (lambda == Complex{}) throw domain_error("rho_from_lambda: lambda = 0");
  double arg = std::arg(lambda);
  if (arg < 0.0) arg += 2.0 * kPi;
  if (arg >= 2.0 * kPi) arg = 0.0;
  const Complex rho = std::polar(std::pow(std::abs(lambda), 1.0 / n), arg / n);
  return {rho, lambda, n};
}

inline RhoPoint rho_point(Complex rho, int n) { return {rho, std::pow(rho, n), n}; }

/// Sector S_nu containing rho (args slightly outside [0, 2 pi / n) snap to the
/// nearer sector).
inline int sector_of(Complex rho, int n) {
  double arg = std::arg(rho);
  const double width = kPi / n;
  if (arg < -0.5 * width) arg += 2.0 * kPi;
  if (arg > 2.0 * width + 0.5 * (2.0 * kPi - 2.0 * width)) arg -= 2.0 * kPi;
  return arg < width ? 0 : 1;
}

/// Unit vector along the bisector of S_nu.
inline Complex sector_bisector(int n, int nu) { return std::polar(1.0, (nu + 0.5) * kPi / n); }

enum class FssMode { Exact, Integrated };

namespace detail {

// Endpoint at which solution j is normalised and from which it is integrated:
// the direction in which exp(i rho eps_j x) dominates the other modes best
// (minimal relative amplification), evaluated on the sector bisector.
inline std::vector<int> stable_anchors(int n, int nu) {
  const auto eps = unit_roots(n);
  const Complex dir = sector_bisector(n, nu);
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int m = 0; m < n; ++m) g[static_cast<std::size_t>(m)] = -std::imag(dir * eps[static_cast<std::size_t>(m)]);
  std::vector<int> anchors(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    double fwd = 0.0, bwd = 0.0;
    for (int m = 0; m < n; ++m) {
      const double d = g[static_cast<std::size_t>(m)] - g[static_cast<std::size_t>(j)];
      fwd = std::max(fwd, d);
      bwd = std::max(bwd, -d);
    }
    anchors[static_cast<std::size_t>(j)] = fwd <= bwd + 1e-12 ? 0 : 1;
  }
  return anchors;
}

}  // namespace detail

/// Fundamental system y_0..y_{n-1} of l(y) = rho^n y with Birkhoff asymptotics
/// D^k y_j = (rho eps_j)^k exp(i rho eps_j x) [1].
///
/// Values are kept in factored form: D^k y_j(x) = v_{jk}(x) exp(i rho eps_j x),
/// with v_{jk} = (rho eps_j)^k exactly at the anchor endpoint of y_j. In exact
/// mode (all p_k = 0) v is constant. In integrated mode v solves the companion
/// system factored by the mode's own exponential, integrated from the anchor
/// in its dominant direction, so no overflow or loss of the recessive mode
/// occurs for extreme modes.
class FundamentalSystem {
 public:
  static FundamentalSystem exact(int n, RhoPoint rho, SectorIndex sector) {
    FundamentalSystem fs(n, rho, sector, FssMode::Exact);
    return fs;
  }

  static FundamentalSystem integrated(const DifferentialExpression& expr, RhoPoint rho,
                                      SectorIndex sector, double rtol = 1e-10,
                                      std::optional<double> r0 = std::nullopt) {
    FundamentalSystem fs(expr.order(), rho, sector, FssMode::Integrated);
    fs.expr_ = expr;
    fs.rtol_ = rtol;
    fs.below_r0_ = std::abs(rho.rho) < r0.value_or(expr.default_r0());
    return fs;
  }

  int order() const { return n_; }
  const RhoPoint& rho() const { return rho_; }
  const SectorIndex& sector() const { return sector_; }
  FssMode mode() const { return mode_; }
  bool below_r0() const { return below_r0_; }
  const std::vector<Complex>& eps() const { return eps_; }
  const std::vector<int>& anchors() const { return anchors_; }

  /// mu_j = rho eps_j.
  Complex mu(int j) const { return rho_.rho * eps_[static_cast<std::size_t>(j)]; }

  /// Factored values v(j, k) at each x (one n x n matrix per point).
  std::vector<CMatrix> scaled(std::span<const double> xs) const {
    std::vector<CMatrix> out(xs.size(), CMatrix(n_, n_));
    if (mode_ == FssMode::Exact) {
      for (auto& m : out)
        for (int j = 0; j < n_; ++j) {
          Complex pk{1.0, 0.0};
          for (int k = 0; k < n_; ++k) {
            m(j, k) = pk;
            pk *= mu(j);
          }
        }
      return out;
    }
    for (int j = 0; j < n_; ++j) integrate_solution(j, xs, out);
    return out;
  }

  CMatrix scaled(double x) const { return scaled(std::span<const double>(&x, 1)).front(); }

  /// D^k y_j(x) unscaled. Overflows for large |Im rho|; use scaled forms.
  Complex derivative(int j, int k, double x) const {
    return scaled(x)(j, k) * std::exp(kI * mu(j) * x);
  }

  /// Wronskian det[D^k y_j(x)].
  Complex wronskian(double x) const {
    const CMatrix v = scaled(x);
    Complex phase{};
    for (int j = 0; j < n_; ++j) phase += kI * mu(j) * x;
    return det(v) * std::exp(phase);
  }

 private:
  FundamentalSystem(int n, RhoPoint rho, SectorIndex sector, FssMode mode)
      : n_(n),
        rho_(rho),
        sector_(sector),
        mode_(mode),
        eps_(unit_roots(n)),
        anchors_(detail::stable_anchors(n, sector.nu)) {}

  // Integrates w_k = v_{jk} / rho^k from the anchor of solution j and stores
  // v at the requested points.
  void integrate_solution(int j, std::span<const double> xs, std::vector<CMatrix>& out) const {
    using State = std::vector<Complex>;
    namespace ode = boost::numeric::odeint;
    const int n = n_;
    const Complex rho = rho_.rho;
    const Complex muj = mu(j);
    const int anchor = anchors_[static_cast<std::size_t>(j)];
    const double dir = anchor == 0 ? 1.0 : -1.0;
    std::vector<Complex> rho_pow(static_cast<std::size_t>(n + 1));
    rho_pow[0] = 1.0;
    for (int k = 1; k <= n; ++k) rho_pow[static_cast<std::size_t>(k)] = rho_pow[static_cast<std::size_t>(k - 1)] * rho;

    auto rhs = [&](const State& w, State& dw, double t) {
      const double x = anchor == 0 ? t : 1.0 - t;
      for (int k = 0; k + 1 < n; ++k)
        dw[static_cast<std::size_t>(k)] = kI * (rho * w[static_cast<std::size_t>(k + 1)] - muj * w[static_cast<std::size_t>(k)]);
      Complex acc = rho * w[0];
      for (int k = 0; k + 1 < n; ++k) {
        const Complex pk = expr_.p(k, x);
        if (pk != Complex{})
          acc -= pk * w[static_cast<std::size_t>(k)] / rho_pow[static_cast<std::size_t>(n - 1 - k)];
      }
      dw[static_cast<std::size_t>(n - 1)] = kI * (acc - muj * w[static_cast<std::size_t>(n - 1)]);
      for (auto& d : dw) d *= dir;
    };

    State w(static_cast<std::size_t>(n));
    Complex ek{1.0, 0.0};
    for (int k = 0; k < n; ++k) {
      w[static_cast<std::size_t>(k)] = ek;
      ek *= eps_[static_cast<std::size_t>(j)];
    }

    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    auto t_of = [&](double x) { return anchor == 0 ? x : 1.0 - x; };
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return t_of(xs[a]) < t_of(xs[b]); });

    auto stepper = ode::make_controlled(1e-2 * rtol_, rtol_,
                                        ode::runge_kutta_fehlberg78<State>());
    double t = 0.0;
    double dt = 0.25 / (1.0 + std::abs(rho));
    for (std::size_t idx : order) {
      const double target = t_of(xs[idx]);
      if (target > t) {
        ode::integrate_adaptive(stepper, rhs, w, t, target, std::min(dt, target - t));
        t = target;
      }
      for (int k = 0; k < n; ++k)
        out[idx](j, k) = w[static_cast<std::size_t>(k)] * rho_pow[static_cast<std::size_t>(k)];
    }
  }

  int n_;
  RhoPoint rho_;
  SectorIndex sector_;
  FssMode mode_;
  std::vector<Complex> eps_;
  std::vector<int> anchors_;
  DifferentialExpression expr_;
  double rtol_ = 1e-10;
  bool below_r0_ = false;
};

/// Exact system when the expression is unperturbed, integrated otherwise.
inline FundamentalSystem make_fss(const DifferentialExpression& expr, RhoPoint rho,
                                  SectorIndex sector) {
  if (expr.is_unperturbed()) return FundamentalSystem::exact(expr.order(), rho, sector);
  return FundamentalSystem::integrated(expr, rho, sector);
}

/// Values of one fundamental system at a point, prepared for the canonical
/// scalings: v(j,k) and c_j = n (rho eps_j)^{n-1} (V^{-1})_{n-1,j}, where V is
/// the factored Wronskian matrix, so that
///   z_k(x)   = v(k,0) exp(i mu_k (x - s_k)),   s_k = 0 (k<p), 1 (k>=p)
///   u_t(xi)  = c_t exp(i mu_t (s'_t - xi)),   s'_t = 1 (t<p), 0 (t>=p)
///   tilde y_t(xi) = c_t / (n mu_t^{n-1}) exp(-i mu_t xi).
struct PointData {
  double x = 0.0;
  CMatrix v;
  CVector c;
};

/// Canonical system z_k, u_t of a fundamental system (split index p).
class CanonicalSystem {
 public:
  explicit CanonicalSystem(FundamentalSystem fs) : fs_(std::move(fs)) {
    const std::array<double, 2> ends{0.0, 1.0};
    auto pts = prepare(ends);
    at0_ = std::move(pts[0]);
    at1_ = std::move(pts[1]);
  }

  const FundamentalSystem& fss() const { return fs_; }
  int order() const { return fs_.order(); }
  int p() const { return fs_.sector().p; }
  Complex rho() const { return fs_.rho().rho; }
  Complex mu(int j) const { return fs_.mu(j); }
  Complex eps(int j) const { return fs_.eps()[static_cast<std::size_t>(j)]; }
  const PointData& at0() const { return at0_; }
  const PointData& at1() const { return at1_; }

  std::vector<PointData> prepare(std::span<const double> xs) const {
    const int n = order();
    const auto vs = fs_.scaled(xs);
    std::vector<PointData> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      out[i].x = xs[i];
      out[i].v = vs[i];
      const CMatrix inv = vs[i].inverse();
      out[i].c.resize(n);
      for (int j = 0; j < n; ++j) {
        const Complex lead = std::pow(mu(j), n - 1) * static_cast<double>(n);
        out[i].c(j) = lead * inv(n - 1, j);
      }
    }
    return out;
  }

  double s(int k) const { return k < p() ? 0.0 : 1.0; }
  double s_dual(int t) const { return t < p() ? 1.0 : 0.0; }

  /// D^d z_k at a prepared point, as matrix (k, d).
  CMatrix z_derivatives(const PointData& pt) const {
    const int n = order();
    CMatrix m(n, n);
    for (int k = 0; k < n; ++k) {
      const Complex e = std::exp(kI * mu(k) * (pt.x - s(k)));
      for (int d = 0; d < n; ++d) m(k, d) = pt.v(k, d) * e;
    }
    return m;
  }

  CVector z(const PointData& pt) const {
    CVector out(order());
    for (int k = 0; k < order(); ++k) out(k) = pt.v(k, 0) * std::exp(kI * mu(k) * (pt.x - s(k)));
    return out;
  }

  CVector u(const PointData& pt) const {
    CVector out(order());
    for (int t = 0; t < order(); ++t) out(t) = pt.c(t) * std::exp(kI * mu(t) * (s_dual(t) - pt.x));
    return out;
  }

  CVector z(double x) const { return z(prepare(std::span<const double>(&x, 1)).front()); }
  CVector u(double xi) const { return u(prepare(std::span<const double>(&xi, 1)).front()); }

  /// W_j / W at xi; unscaled (grows like exp(|Im rho| xi) for some j).
  Complex tilde_y(int j, double xi) const {
    const PointData pt = prepare(std::span<const double>(&xi, 1)).front();
    return pt.c(j) / (static_cast<double>(order()) * std::pow(mu(j), order() - 1)) *
           std::exp(-kI * mu(j) * xi);
  }

  /// Scaled kernel g = g_0 n rho^{n-1} / i between two prepared points:
  /// +sum_{k<p} eps_k z_k(x) u_k(xi) e^{-i mu_k} for x >= xi,
  /// -sum_{k>=p} eps_k z_k(x) u_k(xi) e^{+i mu_k} for x < xi,
  /// evaluated with the exponentials merged into exp(i mu_k (x - xi)).
  Complex g(const PointData& x, const PointData& xi) const {
    Complex acc{};
    if (x.x >= xi.x) {
      for (int k = 0; k < p(); ++k)
        acc += eps(k) * x.v(k, 0) * xi.c(k) * std::exp(kI * mu(k) * (x.x - xi.x));
    } else {
      for (int k = p(); k < order(); ++k)
        acc -= eps(k) * x.v(k, 0) * xi.c(k) * std::exp(kI * mu(k) * (x.x - xi.x));
    }
    return acc;
  }

  /// Particular-solution kernel g_0(x, xi).
  Complex g0(const PointData& x, const PointData& xi) const {
    return g(x, xi) * kI / (static_cast<double>(order()) * std::pow(rho(), order() - 1));
  }

 private:
  FundamentalSystem fs_;
  PointData at0_;
  PointData at1_;
};

/// omega_{lq}(x, rho) = (1/q!) d^q/drho^q z_l(x, rho), q <= 5.
///
/// Exact mode differentiates analytically; integrated mode uses the Cauchy
/// integral on a circle of radius min(0.5, |rho|/2) with 32 trapezoid nodes,
/// keeping sector and anchors fixed so z_l stays analytic in rho.
inline Complex omega(const CanonicalSystem& cs, const DifferentialExpression& expr, int l,
                     int q, double x) {
  if (q < 0 || q > 5) throw domain_error("omega: q outside 0..5");
  const double sl = cs.s(l);
  if (cs.fss().mode() == FssMode::Exact) {
    Complex f = std::exp(kI * cs.mu(l) * (x - sl));
    Complex factor{1.0, 0.0};
    double fact = 1.0;
    for (int i = 1; i <= q; ++i) {
      factor *= kI * cs.eps(l) * (x - sl);
      fact *= i;
    }
    return factor / fact * f;
  }
  if (q == 0) return cs.z(x)(l);
  const int nodes = 32;
  const double h = std::min(0.5, 0.5 * std::abs(cs.rho()));
  Complex acc{};
  for (int m = 0; m < nodes; ++m) {
    const Complex w = std::polar(1.0, 2.0 * kPi * m / nodes);
    const Complex r = cs.rho() + h * w;
    CanonicalSystem shifted(FundamentalSystem::integrated(expr, rho_point(r, cs.order()),
                                                          cs.fss().sector()));
    acc += shifted.z(x)(l) * std::pow(w, -q);
  }
  return acc / (static_cast<double>(nodes) * std::pow(h, q));
}

}  // namespace birkhoff
