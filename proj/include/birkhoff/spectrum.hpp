#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "birkhoff/greens.hpp"

namespace birkhoff {

// ---------------------------------------------------------------------------
// Characteristic determinant along the sector bisector

struct ThetaLimitRecord {
  std::vector<double> radii;
  std::vector<Complex> values;
  std::vector<Complex> extrapolated;
  Complex estimate;
  bool converged = false;
};

/// Delta on the bisector of S_nu at the given radii, with Richardson
/// extrapolation assuming Delta = Theta + c / rho + ... between neighbours.
inline ThetaLimitRecord theta_limit_numeric(const NormalizedBoundaryConditions& nbc,
                                            const DifferentialExpression& expr, int nu,
                                            const std::vector<double>& radii,
                                            double tol = 1e-6) {
  if (radii.empty()) throw domain_error("theta_limit_numeric: no radii");
  ThetaLimitRecord rec;
  rec.radii = radii;
  const Complex dir = sector_bisector(expr.order(), nu);
  for (double r : radii) rec.values.push_back(characteristic_determinant(expr, nbc, r * dir, nu));
  for (std::size_t i = 1; i < radii.size(); ++i) {
    const double r1 = radii[i - 1], r2 = radii[i];
    rec.extrapolated.push_back((r2 * rec.values[i] - r1 * rec.values[i - 1]) / (r2 - r1));
  }
  if (rec.extrapolated.empty()) {
    rec.estimate = rec.values.back();
    return rec;
  }
  rec.estimate = rec.extrapolated.back();
  const std::size_t m = rec.extrapolated.size();
  rec.converged =
      m < 2 || std::abs(rec.extrapolated[m - 1] - rec.extrapolated[m - 2]) <= tol * (1.0 + std::abs(rec.estimate));
  return rec;
}

// ---------------------------------------------------------------------------
// Argument-principle root search

/// Box r0 <= |rho| <= r1, t0 <= arg rho <= t1 in the rho-plane.
struct PolarBox {
  double r0 = 0.0, r1 = 0.0, t0 = 0.0, t1 = 0.0;

  Complex center() const { return std::polar(0.5 * (r0 + r1), 0.5 * (t0 + t1)); }
  double size() const { return std::max(r1 - r0, r1 * (t1 - t0)); }
  bool contains(Complex z, double pad = 0.0) const {
    const double r = std::abs(z);
    // Angle taken within half a turn of the box's mid-angle.
    const double tc = 0.5 * (t0 + t1);
    double t = std::arg(z);
    while (t <= tc - kPi) t += 2.0 * kPi;
    while (t > tc + kPi) t -= 2.0 * kPi;
    const double tp = pad / std::max(r0, 1e-12);
    return r >= r0 - pad && r <= r1 + pad && t >= t0 - tp && t <= t1 + tp;
  }
  /// Four children split at fractions (fr, ft) of the radial and angular ranges.
  std::array<PolarBox, 4> split(double fr = 0.5, double ft = 0.5) const {
    const double rm = r0 + fr * (r1 - r0), tm = t0 + ft * (t1 - t0);
    return {PolarBox{r0, rm, t0, tm}, PolarBox{rm, r1, t0, tm}, PolarBox{r0, rm, tm, t1},
            PolarBox{rm, r1, tm, t1}};
  }
  /// Two children cut across the longer side (radial width or mid-arc length).
  std::array<PolarBox, 2> bisect(double f = 0.5) const {
    if (r1 - r0 >= 0.5 * (r0 + r1) * (t1 - t0)) {
      const double rm = r0 + f * (r1 - r0);
      return {PolarBox{r0, rm, t0, t1}, PolarBox{rm, r1, t0, t1}};
    }
    const double tm = t0 + f * (t1 - t0);
    return {PolarBox{r0, r1, t0, tm}, PolarBox{r0, r1, tm, t1}};
  }
};

/// Raised when a contour passes through (or numerically onto) a zero.
struct ContourHitsZero : std::runtime_error {
  ContourHitsZero() : std::runtime_error("contour passes through a zero") {}
};

using AnalyticFunction = std::function<Complex(Complex)>;

/// Winding number with the power sums of the enclosed zeros,
/// sum_j z_j and sum_j z_j^2, read off the same tracked contour.
struct ContourData {
  int winding = 0;
  Complex sum1;
  Complex sum2;

  /// Mean of the enclosed zeros and their spread sqrt|mean(z^2) - mean^2|.
  Complex centroid() const { return sum1 / static_cast<double>(winding); }
  double spread() const {
    const Complex c = centroid();
    return std::sqrt(std::abs(sum2 / static_cast<double>(winding) - c * c));
  }
};

namespace detail {

struct Tracked {
  double phase = 0.0;
  // Running oint z^k dlog f for k = 1, 2.
  Complex m1;
  Complex m2;
};

// Accumulated change of arg f along a path, refined until each half step
// turns the phase by less than 0.5 rad and changes |f| by less than a factor
// of 2. The magnitude test catches paths that skim a multiple zero, where
// the phase wraps by a full turn between samples. A midpoint 1e11 below both
// neighbours, or refinement past `depth` halvings, means the path meets a
// zero. The test is local because |f| may range over many decades along one
// edge. Accepted steps also add their share of oint z^k dlog f by the
// trapezoid rule.
inline void phase_change(const AnalyticFunction& f, const std::function<Complex(double)>& path,
                         double s0, Complex f0, double s1, Complex f1, int depth, Tracked& acc) {
  if (f0 == Complex{} || f1 == Complex{}) throw ContourHitsZero();
  const double d = std::arg(f1 / f0);
  const double sm = 0.5 * (s0 + s1);
  const Complex zm = path(sm);
  const Complex fm = f(zm);
  if (std::abs(fm) <= 1e-11 * std::min(std::abs(f0), std::abs(f1))) throw ContourHitsZero();
  const Complex q1 = fm / f0, q2 = f1 / fm;
  const double d1 = std::arg(q1), d2 = std::arg(q2);
  const double l1 = std::log(std::abs(q1)), l2 = std::log(std::abs(q2));
  if (std::abs(d1) < 0.5 && std::abs(d2) < 0.5 && std::abs(d1 + d2 - d) < 1e-9 &&
      std::abs(l1) < 0.7 && std::abs(l2) < 0.7) {
    const Complex z0 = path(s0), z1 = path(s1);
    const Complex g1(l1, d1), g2(l2, d2);
    acc.phase += d;
    acc.m1 += 0.5 * (z0 + zm) * g1 + 0.5 * (zm + z1) * g2;
    acc.m2 += 0.5 * (z0 * z0 + zm * zm) * g1 + 0.5 * (zm * zm + z1 * z1) * g2;
    return;
  }
  if (depth <= 0) throw ContourHitsZero();
  phase_change(f, path, s0, f0, sm, fm, depth - 1, acc);
  phase_change(f, path, sm, fm, s1, f1, depth - 1, acc);
}

}  // namespace detail

/// Winding number of f around the boundary of the box, by adaptive tracking
/// of the continuous argument (equivalent to the contour integral of f'/f),
/// together with the first two power sums of the enclosed zeros.
inline ContourData contour_data(const AnalyticFunction& f, const PolarBox& b) {
  using Path = std::function<Complex(double)>;
  const std::array<Path, 4> edges{
      Path([&](double s) { return std::polar(b.r0 + s * (b.r1 - b.r0), b.t0); }),
      Path([&](double s) { return std::polar(b.r1, b.t0 + s * (b.t1 - b.t0)); }),
      Path([&](double s) { return std::polar(b.r1 - s * (b.r1 - b.r0), b.t1); }),
      Path([&](double s) { return std::polar(b.r0, b.t1 - s * (b.t1 - b.t0)); })};
  std::vector<std::vector<Complex>> samples(4);
  const int coarse = 8;
  for (int e = 0; e < 4; ++e)
    for (int i = 0; i <= coarse; ++i) samples[e].push_back(f(edges[e](static_cast<double>(i) / coarse)));
  detail::Tracked acc;
  for (int e = 0; e < 4; ++e)
    for (int i = 0; i < coarse; ++i)
      detail::phase_change(f, edges[e], static_cast<double>(i) / coarse, samples[e][i],
                           static_cast<double>(i + 1) / coarse, samples[e][i + 1], 40, acc);
  const double w = acc.phase / (2.0 * kPi);
  const long rounded = std::lround(w);
  if (std::abs(w - rounded) > 1e-6) throw ContourHitsZero();
  const Complex two_pi_i{0.0, 2.0 * kPi};
  return {static_cast<int>(rounded), acc.m1 / two_pi_i, acc.m2 / two_pi_i};
}

inline int winding_number(const AnalyticFunction& f, const PolarBox& b) {
  return contour_data(f, b).winding;
}

struct CharacteristicValue {
  Complex rho;
  int multiplicity = 1;
  Complex lambda;
  double residual = 0.0;
  int sector = 0;
};

struct Spectrum {
  std::vector<CharacteristicValue> cvs;
  double r_min = 0.0;
  double r_max = 0.0;
  double max_residual = 0.0;
  std::vector<std::string> flags;
};

struct SearchOptions {
  double r_min = 1.0;
  double r_max = 50.0;
  std::vector<int> sectors{0, 1};
  /// Relative merge tolerance for distinct cvs.
  double merge_tol = 1e-6;
  /// Angular margin added to each sector so cvs on its rays lie inside boxes.
  double margin = 0.02;
  /// Smallest box edge relative to 1 + |rho| before a cluster is reported.
  double min_box = 1e-5;
  double initial_width = 2.0;
};

namespace detail {

inline Complex central_derivative(const AnalyticFunction& f, Complex z) {
  const double h = 1e-5 * (1.0 + std::abs(z));
  return (f(z + h) - f(z - h)) / (2.0 * h);
}

// Modified Newton iteration for a zero of multiplicity w; nullopt when the
// iteration leaves the padded box or fails to settle.
inline std::optional<Complex> newton(const AnalyticFunction& f, Complex z, int w, const PolarBox& box) {
  const double pad = 0.25 * box.size();
  for (int it = 0; it < 80; ++it) {
    const Complex fz = f(z);
    if (fz == Complex{}) return z;
    const Complex d = central_derivative(f, z);
    if (d == Complex{}) return std::nullopt;
    const Complex step = static_cast<double>(w) * fz / d;
    z -= step;
    if (!box.contains(z, pad)) return std::nullopt;
    if (std::abs(step) < 1e-14 * (1.0 + std::abs(z))) return z;
  }
  return std::abs(f(z)) < 1e-8 ? std::optional<Complex>(z) : std::nullopt;
}

struct Found {
  Complex rho;
  int multiplicity;
};

// Recursively isolates the zeros inside a box with known contour data. The
// power sums give a starting point for Newton when one zero is enclosed and
// a smaller verified box around a cluster otherwise; plain bisection is the
// fallback.
inline void isolate(const AnalyticFunction& f, const PolarBox& box, const ContourData& cd,
                    const SearchOptions& opt, std::vector<Found>& out,
                    std::vector<std::string>& flags, int depth = 0) {
  const int winding = cd.winding;
  if (winding <= 0) return;
  const double min_size = opt.min_box * (1.0 + box.r1);
  const Complex guess = box.contains(cd.centroid()) ? cd.centroid() : box.center();
  if (winding == 1 || box.size() <= min_size || depth > 120) {
    // A root accepted here must lie in this box; a neighbour's root is left
    // to the neighbour.
    const bool tiny = box.size() <= min_size || depth > 120;
    const auto z = newton(f, guess, winding, box);
    if (z && box.contains(*z, tiny ? box.size() : 1e-12 * (1.0 + box.r1))) {
      out.push_back({*z, winding});
      return;
    }
    if (tiny) {
      out.push_back({box.center(), winding});
      flags.push_back("newton did not converge near " + std::to_string(std::abs(box.center())));
      return;
    }
  }
  if (winding > 1 && box.contains(cd.centroid())) {
    const Complex c = cd.centroid();
    const double h = std::max(4.0 * cd.spread(), 2.0 * min_size);
    const double rc = std::abs(c), tc = std::arg(c);
    PolarBox zoom{std::max(box.r0, rc - h), std::min(box.r1, rc + h), 0.0, 0.0};
    // Angles relative to the box's own branch of arg.
    double t = tc;
    while (t < box.t0 - kPi) t += 2.0 * kPi;
    while (t > box.t1 + kPi) t -= 2.0 * kPi;
    zoom.t0 = std::max(box.t0, t - h / rc);
    zoom.t1 = std::min(box.t1, t + h / rc);
    if (zoom.size() < 0.5 * box.size()) {
      try {
        const auto zd = contour_data(f, zoom);
        if (zd.winding == winding) {
          isolate(f, zoom, zd, opt, out, flags, depth + 1);
          return;
        }
      } catch (const ContourHitsZero&) {
      }
    }
  }
  static constexpr std::array<double, 6> fractions{0.5, 0.47, 0.53, 0.44, 0.58, 0.41};
  for (double fr : fractions) {
    try {
      const auto kids = box.bisect(fr);
      const auto c0 = contour_data(f, kids[0]), c1 = contour_data(f, kids[1]);
      if (c0.winding + c1.winding != winding) {
        flags.push_back("winding-number inconsistency near |rho| = " + std::to_string(std::abs(box.center())));
        continue;
      }
      isolate(f, kids[0], c0, opt, out, flags, depth + 1);
      isolate(f, kids[1], c1, opt, out, flags, depth + 1);
      return;
    } catch (const ContourHitsZero&) {
    }
  }
  flags.push_back("could not subdivide box near |rho| = " + std::to_string(std::abs(box.center())));
  out.push_back({box.center(), winding});
}

}  // namespace detail

/// Zeros of a function analytic near the sector, searched in the annulus
/// [r_min, r_max] of sector nu (half-open in arg: [nu pi/n, (nu+1) pi/n)).
inline std::vector<detail::Found> sector_zeros(const AnalyticFunction& f, int n, int nu,
                                               const SearchOptions& opt,
                                               std::vector<std::string>& flags) {
  const double lo = nu * kPi / n, hi = (nu + 1) * kPi / n;
  for (int attempt = 0; attempt < 5; ++attempt) {
    // Perturb the whole grid together so neighbouring boxes stay consistent.
    const double jitter = 1.0 + 1e-3 * attempt * 0.61803398875;
    const double r_lo = opt.r_min / jitter, r_hi = opt.r_max * jitter;
    const double margin = opt.margin * jitter;
    const int rings = std::max(1, static_cast<int>(std::ceil((r_hi - r_lo) / opt.initial_width)));
    std::vector<PolarBox> boxes;
    for (int i = 0; i < rings; ++i) {
      const double a = r_lo + (r_hi - r_lo) * i / rings, b = r_lo + (r_hi - r_lo) * (i + 1) / rings;
      // One box per ring: phase tracking is cheap where Delta has no zeros, and
      // subdivision only happens in rings that contain some.
      const int pieces = 1;
      for (int j = 0; j < pieces; ++j) {
        const double t0 = lo - margin + (hi - lo + 2 * margin) * j / pieces;
        const double t1 = lo - margin + (hi - lo + 2 * margin) * (j + 1) / pieces;
        boxes.push_back({a, b, t0, t1});
      }
    }
    std::vector<std::vector<detail::Found>> found(boxes.size());
    std::vector<std::vector<std::string>> box_flags(boxes.size());
    std::vector<char> hit(boxes.size(), 0);
    parallel_for(boxes.size(), [&](std::size_t i) {
      try {
        detail::isolate(f, boxes[i], contour_data(f, boxes[i]), opt, found[i], box_flags[i]);
      } catch (const ContourHitsZero&) {
        hit[i] = 1;
      }
    });
    if (std::any_of(hit.begin(), hit.end(), [](char c) { return c != 0; })) continue;
    std::vector<detail::Found> all;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      all.insert(all.end(), found[i].begin(), found[i].end());
      flags.insert(flags.end(), box_flags[i].begin(), box_flags[i].end());
    }
    // Keep the half-open sector and the requested annulus.
    std::vector<detail::Found> kept;
    const double at = 1e-9;
    for (const auto& z : all) {
      const double r = std::abs(z.rho);
      double t = std::arg(z.rho);
      const double start = lo - 0.5 * (hi - lo);
      while (t < start) t += 2.0 * kPi;
      while (t >= start + 2.0 * kPi) t -= 2.0 * kPi;
      if (r < opt.r_min || r > opt.r_max) continue;
      if (t < lo - at || t >= hi - at) continue;
      kept.push_back(z);
    }
    return kept;
  }
  throw numerical_error("contour passes through a zero after 5 perturbations");
}

/// Delta as an analytic function of rho for sector nu.
inline AnalyticFunction characteristic_function(const DifferentialExpression& expr,
                                                const NormalizedBoundaryConditions& nbc, int nu) {
  return [expr, nbc, nu](Complex rho) { return characteristic_determinant(expr, nbc, rho, nu); };
}

inline Spectrum find_cvs(const NormalizedBoundaryConditions& nbc, const DifferentialExpression& expr,
                         const SearchOptions& opt = {}) {
  const int n = expr.order();
  if (opt.r_min <= 0.0 || opt.r_max <= opt.r_min) throw domain_error("find_cvs: need 0 < r_min < r_max");
  Spectrum spec;
  spec.r_min = opt.r_min;
  spec.r_max = opt.r_max;
  for (int nu : opt.sectors) {
    const auto f = characteristic_function(expr, nbc, nu);
    for (const auto& z : sector_zeros(f, n, nu, opt, spec.flags)) {
      CharacteristicValue cv;
      cv.rho = z.rho;
      cv.multiplicity = z.multiplicity;
      cv.lambda = std::pow(z.rho, n);
      cv.residual = std::abs(f(z.rho));
      cv.sector = nu;
      spec.cvs.push_back(cv);
    }
  }
  std::sort(spec.cvs.begin(), spec.cvs.end(), [](const auto& a, const auto& b) {
    const double ra = std::abs(a.rho), rb = std::abs(b.rho);
    if (ra != rb) return ra < rb;
    return std::arg(a.rho) < std::arg(b.rho);
  });
  std::vector<CharacteristicValue> merged;
  for (const auto& cv : spec.cvs) {
    if (!merged.empty() &&
        std::abs(merged.back().rho - cv.rho) < opt.merge_tol * (1.0 + std::abs(cv.rho))) {
      merged.back().multiplicity = std::max(merged.back().multiplicity, cv.multiplicity);
      continue;
    }
    merged.push_back(cv);
  }
  spec.cvs = std::move(merged);
  for (const auto& cv : spec.cvs) spec.max_residual = std::max(spec.max_residual, cv.residual);
  return spec;
}

// ---------------------------------------------------------------------------
// Hyperbolic geometry of the sectors

/// Normalized Blaschke factor (|l^2+1| / (l^2+1)) (z - l) / (z - conj l); the
/// prefactor is 1 when l^2 + 1 = 0.
inline Complex blaschke(Complex lambda, Complex z) {
  if (z == std::conj(lambda)) throw domain_error("blaschke: z = conj(lambda)");
  const Complex s = lambda * lambda + 1.0;
  const Complex pre = std::abs(s) == 0.0 ? Complex{1.0, 0.0} : std::abs(s) / s;
  return pre * (z - lambda) / (z - std::conj(lambda));
}

/// S_nu(epsilon) together with the hyperbolic radius delta.
struct SectorGeometry {
  int n = 2;
  int nu = 0;
  double epsilon = kPi / 8;
  double delta = 0.05;

  static SectorGeometry make(int n, int nu, std::optional<double> epsilon = std::nullopt,
                             double delta = 0.05) {
    SectorGeometry g{n, nu, epsilon.value_or(kPi / (4.0 * n)), delta};
    g.validate();
    return g;
  }

  void validate() const {
    if (!(epsilon > 0.0 && epsilon < kPi / (2.0 * n)))
      throw domain_error("epsilon must lie in (0, pi / 2n)");
    if (!(delta > 0.0 && delta < 1.0 / 3.0)) throw domain_error("delta must lie in (0, 1/3)");
  }

  double bisector_angle() const { return (nu + 0.5) * kPi / n; }
  double delta1() const { return 2.0 * delta / (1.0 - delta); }
  /// Angle of the strips removed along the rays of S_nu(epsilon).
  double strip_angle() const { return std::asin(delta1() * std::sin(kPi / (2.0 * n) + epsilon)); }

  /// Maps rho into the upper half-plane where the hyperbolic circles live
  /// (only needed for n = 1, whose S_1 is the lower half-plane).
  Complex to_upper(Complex rho) const { return std::imag(rho) < 0.0 ? -rho : rho; }

  bool in_subsector(Complex rho) const {
    double d = std::arg(rho) - bisector_angle();
    while (d > kPi) d -= 2.0 * kPi;
    while (d < -kPi) d += 2.0 * kPi;
    return std::abs(d) <= epsilon;
  }
  /// z in K(rho, delta): |b_rho(z)| <= delta.
  bool in_hyperbolic_circle(Complex rho, Complex z) const {
    const Complex a = to_upper(rho), b = to_upper(z);
    if (b == std::conj(a)) return false;
    return std::abs(blaschke(a, b)) <= delta;
  }
  /// z in D(rho, d): |z - rho| <= d Im rho.
  static bool in_disk(Complex rho, Complex z, double d) { return std::abs(z - rho) <= d * std::imag(rho); }
};

/// Point of the boundary |b_rho(z)| = r, parametrized by angle phi.
inline Complex hyperbolic_boundary_point(Complex rho, double r, double phi) {
  const Complex s = rho * rho + 1.0;
  const Complex pre = std::abs(s) == 0.0 ? Complex{1.0, 0.0} : std::abs(s) / s;
  const Complex w = std::polar(r, phi) / pre;
  return (rho - std::conj(rho) * w) / (1.0 - w);
}

struct InclusionCheck {
  bool inner = true;  // D(rho, delta) inside K(rho, delta)
  bool outer = true;  // K(rho, delta) inside D(rho, delta_1)
  double worst_inner = 0.0;
  double worst_outer = 0.0;
};

/// Samples the boundaries of D(rho, delta) and K(rho, delta) and checks
/// D(rho, delta) in K(rho, delta) in D(rho, delta_1).
inline InclusionCheck check_inclusions(const SectorGeometry& g, Complex rho, int samples = 256) {
  InclusionCheck out;
  const Complex a = g.to_upper(rho);
  for (int i = 0; i < samples; ++i) {
    const double phi = 2.0 * kPi * i / samples;
    const Complex zd = a + g.delta * std::imag(a) * std::polar(1.0, phi);
    const double bd = std::abs(blaschke(a, zd));
    out.worst_inner = std::max(out.worst_inner, bd / g.delta);
    const Complex zk = hyperbolic_boundary_point(a, g.delta, phi);
    const double dk = std::abs(zk - a) / (g.delta1() * std::imag(a));
    out.worst_outer = std::max(out.worst_outer, dk);
  }
  out.inner = out.worst_inner <= 1.0 + 1e-12;
  out.outer = out.worst_outer <= 1.0 + 1e-12;
  return out;
}

struct SparsenessEntry {
  Complex center;
  int count = 0;
};

struct SparsenessReport {
  std::vector<SparsenessEntry> entries;
  int max_count = 0;
  int bound = 0;
  bool violation = false;
};

/// For every distinct cv of Gamma_epsilon (cvs in S_nu(epsilon)), counts the
/// cvs of Gamma_epsilon inside K(rho, delta), the center included.
inline SparsenessReport sparseness_audit(const std::vector<Complex>& cvs, const SectorGeometry& g) {
  std::vector<Complex> gamma;
  for (Complex z : cvs)
    if (g.in_subsector(z)) gamma.push_back(z);
  SparsenessReport rep;
  rep.bound = g.n;
  for (Complex c : gamma) {
    SparsenessEntry e{c, 0};
    for (Complex z : gamma)
      if (g.in_hyperbolic_circle(c, z)) ++e.count;
    rep.max_count = std::max(rep.max_count, e.count);
    rep.entries.push_back(e);
  }
  rep.violation = rep.max_count > rep.bound;
  return rep;
}

inline SparsenessReport sparseness_audit(const Spectrum& s, const SectorGeometry& g) {
  std::vector<Complex> cvs;
  for (const auto& cv : s.cvs) cvs.push_back(cv.rho);
  return sparseness_audit(cvs, g);
}

// ---------------------------------------------------------------------------
// Resolvent growth

struct ResolventEstimate {
  Complex rho;
  double hilbert_schmidt = 0.0;
  double norm = 0.0;
  /// norm * |rho|^n
  double scaled = 0.0;
};

/// Operator norm of R_lambda, lambda = rho^n, from the discretized Green's
/// kernel. Rejects rho within 1e-6 (1 + |rho|) of a zero of Delta (Newton
/// distance |Delta / Delta'|).
inline ResolventEstimate resolvent_probe(const NormalizedBoundaryConditions& nbc,
                                         const DifferentialExpression& expr, Complex rho,
                                         std::size_t m = 256) {
  const int n = expr.order();
  const int nu = sector_of(rho, n);
  const auto f = characteristic_function(expr, nbc, nu);
  const Complex d = f(rho);
  const Complex dd = detail::central_derivative(f, rho);
  if (dd != Complex{} && std::abs(d / dd) < 1e-6 * (1.0 + std::abs(rho)))
    throw numerical_error("resolvent probe: rho is at or near a characteristic value");
  GreenFunction g(expr, nbc, rho, nu);
  const auto norms = green_operator_norm(g, m);
  return {rho, norms.hilbert_schmidt, norms.power, norms.power * std::pow(std::abs(rho), n)};
}

// ---------------------------------------------------------------------------
// Probe sequence

struct ProbePoint {
  int m = 0;
  double r_m = 0.0;
  std::optional<Complex> tau;
  /// Area budget of D_m on a polar sample grid: fractions removed by the
  /// circles around cvs and by the boundary strips.
  double circle_fraction = 0.0;
  double strip_fraction = 0.0;
};

enum class PointStatus { Good, Strip, Circle };

inline PointStatus classify_point(const SectorGeometry& g, const std::vector<Complex>& cvs, Complex z) {
  double d = std::arg(z) - g.bisector_angle();
  while (d > kPi) d -= 2.0 * kPi;
  while (d < -kPi) d += 2.0 * kPi;
  if (std::abs(d) > g.epsilon - g.strip_angle()) return PointStatus::Strip;
  const Complex zu = g.to_upper(z);
  for (Complex c : cvs) {
    const Complex cu = g.to_upper(c);
    if (SectorGeometry::in_disk(cu, zu, g.delta1())) return PointStatus::Circle;
  }
  return PointStatus::Good;
}

/// One point tau_m per D_m = S_nu(eps) ∩ {r_m <= |rho| <= r_m (1 + delta)},
/// r_m = (1 + delta)^m, avoiding D(rho_j, delta_1) and the boundary strips.
inline std::vector<ProbePoint> probe_sequence(const SectorGeometry& g, const std::vector<Complex>& cvs,
                                              int m_max, int grid = 64) {
  std::vector<ProbePoint> out;
  for (int m = 0; m <= m_max; ++m) {
    ProbePoint pt;
    pt.m = m;
    pt.r_m = std::pow(1.0 + g.delta, m);
    const Complex mid = std::polar(pt.r_m * (1.0 + 0.5 * g.delta), g.bisector_angle());
    int circles = 0, strips = 0, total = 0;
    std::optional<Complex> best;
    double best_dist = 0.0;
    for (int i = 0; i < grid; ++i)
      for (int j = 0; j < grid; ++j) {
        const double r = pt.r_m * (1.0 + g.delta * (i + 0.5) / grid);
        const double t = g.bisector_angle() - g.epsilon + 2.0 * g.epsilon * (j + 0.5) / grid;
        const Complex z = std::polar(r, t);
        ++total;
        switch (classify_point(g, cvs, z)) {
          case PointStatus::Strip: ++strips; continue;
          case PointStatus::Circle: ++circles; continue;
          case PointStatus::Good: break;
        }
        const double dist = std::abs(z - mid);
        if (!best || dist < best_dist) {
          best = z;
          best_dist = dist;
        }
      }
    pt.circle_fraction = static_cast<double>(circles) / total;
    pt.strip_fraction = static_cast<double>(strips) / total;
    pt.tau = classify_point(g, cvs, mid) == PointStatus::Good ? std::optional<Complex>(mid) : best;
    out.push_back(pt);
  }
  return out;
}

}  // namespace birkhoff
