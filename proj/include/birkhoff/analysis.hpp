#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "birkhoff/greens.hpp"
#include "birkhoff/spectrum.hpp"

namespace birkhoff {

/// Gauss-Legendre rule fine enough for functions oscillating like exp(i rho x)
/// and their squared moduli.
inline QuadratureRule analysis_rule(double rho_abs) {
  return gauss_legendre(64 + static_cast<std::size_t>(std::ceil(1.25 * rho_abs)));
}

inline double l2_norm(const CVector& values, const QuadratureRule& rule) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i)
    acc += rule.weights[static_cast<std::size_t>(i)] * std::norm(values(i));
  return std::sqrt(acc);
}

/// Columns scaled by sqrt(w_i), so that column inner products become L2 ones.
inline CMatrix weight_rows(const CMatrix& samples, const QuadratureRule& rule) {
  CMatrix out = samples;
  for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) *= std::sqrt(rule.weights[static_cast<std::size_t>(i)]);
  return out;
}

inline double condition_number(const CMatrix& m) {
  if (m.cols() == 0) return 1.0;
  Eigen::JacobiSVD<CMatrix> svd(m);
  const auto& s = svd.singularValues();
  const double lo = s(s.size() - 1);
  return lo > 0.0 ? s(0) / lo : std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// Eigenfunctions

/// Eigenfunctions at one cv as combinations sum_l d_l z_l(x) of the canonical
/// system. `coefficients` holds one column d per independent eigenfunction.
struct EigenRecord {
  Complex rho;
  Complex lambda;
  int multiplicity = 1;
  int geometric = 1;
  bool jordan_chain = false;
  CMatrix coefficients;
  QuadratureRule rule;
  /// Samples at rule.nodes, one L2-normalized column per eigenfunction.
  CMatrix samples;
  /// ||u||^2 |rho| / sum_l |d_l|^2 per column, before normalization.
  std::vector<double> norm_law;
  /// max_j |U_j(u)| |rho|^{-order_j} with ||u|| = 1.
  double boundary_residual = 0.0;
};

/// Null space of Delta(rho) by SVD with relative threshold 1e-6. A null space
/// smaller than the multiplicity means a Jordan chain: only the eigenfunction
/// part is returned and the record is flagged.
inline EigenRecord eigenfunction(const NormalizedBoundaryConditions& nbc,
                                 const DifferentialExpression& expr, Complex rho, int multiplicity,
                                 const QuadratureRule& rule) {
  const int n = expr.order();
  CanonicalSystem cs(make_fss(expr, rho_point(rho, n), SectorIndex::of(n, sector_of(rho, n))));
  const auto ch = characteristic(cs, nbc);
  Eigen::JacobiSVD<CMatrix> svd(ch.delta, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  int null = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) <= 1e-6 * std::max(1.0, s(0))) ++null;
  if (null == 0) throw numerical_error("eigenfunction: Delta is nonsingular, rho is not a characteristic value");
  if (null > multiplicity)
    throw numerical_error("eigenfunction: null space dimension " + std::to_string(null) +
                          " exceeds multiplicity " + std::to_string(multiplicity));

  EigenRecord rec;
  rec.rho = rho;
  rec.lambda = std::pow(rho, n);
  rec.multiplicity = multiplicity;
  rec.geometric = null;
  rec.jordan_chain = null < multiplicity;
  rec.coefficients = svd.matrixV().rightCols(null);
  rec.rule = rule;

  const auto pts = cs.prepare(rule.nodes);
  CMatrix z(static_cast<Eigen::Index>(pts.size()), n);
  for (std::size_t i = 0; i < pts.size(); ++i) z.row(static_cast<Eigen::Index>(i)) = cs.z(pts[i]).transpose();
  rec.samples = z * rec.coefficients;
  for (int c = 0; c < null; ++c) {
    const double norm = l2_norm(rec.samples.col(c), rule);
    rec.norm_law.push_back(norm * norm * std::abs(rho) / rec.coefficients.col(c).squaredNorm());
    rec.samples.col(c) /= norm;
    const CVector bc = ch.delta * rec.coefficients.col(c) / norm;
    rec.boundary_residual = std::max(rec.boundary_residual, bc.cwiseAbs().maxCoeff());
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Spectral projectors

struct ProjectorOptions {
  int contour_nodes = 64;
  /// Gauss-Legendre points for the kernel; 0 picks analysis_rule(|rho|).
  std::size_t grid = 0;
};

struct ProjectorRecord {
  int m = 0;
  Complex lambda;
  Complex rho;
  double radius = 0.0;
  int rank = 0;
  Complex trace;
  double norm = 0.0;
  /// norm (1 + |Im rho|) / exp(|Im rho|).
  double ratio = 0.0;
  double idempotency = 0.0;
  QuadratureRule rule;
  /// K(x_i, xi_j) at the rule nodes.
  CMatrix kernel;

  /// (P f)(x_i) from samples of f at the nodes.
  CVector apply(const CVector& f) const {
    CVector wf = f;
    for (Eigen::Index j = 0; j < wf.size(); ++j) wf(j) *= rule.weights[static_cast<std::size_t>(j)];
    return kernel * wf;
  }
};

/// Half the distance to the nearest other eigenvalue, also kept below |lambda|
/// so the contour stays away from the branch point lambda = 0; floor 1e-3.
inline double projector_radius(Complex lambda, const std::vector<Complex>& others) {
  double d = std::abs(lambda);
  for (Complex o : others)
    if (o != lambda) d = std::min(d, std::abs(o - lambda));
  return std::max(1e-3, 0.5 * d);
}

/// Riesz projector P = -(1/2 pi i) oint G(., ., lambda) dlambda on the circle
/// |lambda - center| = radius, trapezoid rule. The kernel of P is smooth, so
/// the trace and P^2 follow from the same Gauss-Legendre rule.
inline ProjectorRecord projector(const NormalizedBoundaryConditions& nbc,
                                 const DifferentialExpression& expr, Complex center, double radius,
                                 const ProjectorOptions& opt = {},
                                 std::optional<int> expected_rank = std::nullopt) {
  const int n = expr.order();
  if (radius <= 0.0) throw domain_error("projector: radius must be positive");
  if (radius >= std::abs(center)) throw domain_error("projector: contour encloses lambda = 0");
  ProjectorRecord rec;
  rec.lambda = center;
  rec.rho = rho_from_lambda(center, n).rho;
  rec.radius = radius;
  rec.rule = opt.grid ? gauss_legendre(opt.grid) : analysis_rule(std::abs(rec.rho) + 1.0);
  const auto m = static_cast<Eigen::Index>(rec.rule.nodes.size());
  const int q_count = opt.contour_nodes;

  std::vector<CMatrix> parts(static_cast<std::size_t>(q_count));
  parallel_for(parts.size(), [&](std::size_t q) {
    const Complex w = std::polar(1.0, 2.0 * kPi * static_cast<double>(q) / q_count);
    const Complex rho = rho_from_lambda(center + radius * w, n).rho;
    GreenFunction g(expr, nbc, rho, sector_of(rho, n));
    parts[q] = (-radius / q_count) * w * g.kernel(rec.rule.nodes, rec.rule.nodes);
  });
  rec.kernel = CMatrix::Zero(m, m);
  for (const auto& p : parts) rec.kernel += p;

  for (Eigen::Index i = 0; i < m; ++i) rec.trace += rec.rule.weights[static_cast<std::size_t>(i)] * rec.kernel(i, i);
  rec.rank = static_cast<int>(std::lround(rec.trace.real()));
  if (expected_rank && rec.rank > *expected_rank)
    throw numerical_error("projector: rank " + std::to_string(rec.rank) + " exceeds multiplicity " +
                          std::to_string(*expected_rank) + ", contour encloses foreign spectrum");

  const CMatrix w = weighted(rec.kernel, rec.rule);
  rec.norm = operator_norm(w, 60).power;
  const double s = std::abs(rec.rho.imag());
  rec.ratio = rec.norm * (1.0 + s) / std::exp(s);

  std::mt19937_64 rng(0x5EED);
  std::normal_distribution<double> g;
  for (int t = 0; t < 3; ++t) {
    CVector v(m);
    for (Eigen::Index i = 0; i < m; ++i) v(i) = Complex(g(rng), g(rng));
    const CVector pv = w * v;
    const double scale = std::max(pv.norm(), 1e-300);
    rec.idempotency = std::max(rec.idempotency, (w * pv - pv).norm() / scale);
  }
  return rec;
}

struct ScalingReport {
  std::vector<double> ratios;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  double spread = 0.0;
};

/// ratio_m = ||P_m|| (1 + |Im rho_m|) / exp(|Im rho_m|) and its spread.
inline ScalingReport projector_norm_scaling(const std::vector<ProjectorRecord>& records) {
  if (records.empty()) throw domain_error("projector_norm_scaling: no records");
  ScalingReport rep;
  for (const auto& r : records) {
    if (r.rank != 1) throw domain_error("projector_norm_scaling: multiple eigenvalue in input");
    rep.ratios.push_back(r.ratio);
  }
  const auto [lo, hi] = std::minmax_element(rep.ratios.begin(), rep.ratios.end());
  rep.min_ratio = *lo;
  rep.max_ratio = *hi;
  rep.spread = *hi / *lo;
  return rep;
}

// ---------------------------------------------------------------------------
// Almost orthogonality

struct OrthogonalityRange {
  double c_min = 0.0;
  double c_max = 0.0;
  double spread() const { return c_max / c_min; }
};

/// Range of ||sum c_k y_k||^2 / sum |c_k|^2 ||y_k||^2 over random coefficient
/// vectors drawn uniformly from the complex unit sphere. `samples` holds one
/// function per column at the rule nodes.
inline OrthogonalityRange almost_orthogonality_ratio(const CMatrix& samples, const QuadratureRule& rule,
                                                     int trials, std::uint64_t seed = 0x5EED) {
  const CMatrix y = weight_rows(samples, rule);
  const CMatrix gram = y.adjoint() * y;
  const Eigen::Index k = gram.rows();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  OrthogonalityRange out{std::numeric_limits<double>::infinity(), 0.0};
  for (int t = 0; t < trials; ++t) {
    CVector c(k);
    for (Eigen::Index i = 0; i < k; ++i) c(i) = Complex(g(rng), g(rng));
    c.normalize();
    double den = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) den += std::norm(c(i)) * gram(i, i).real();
    const double r = (c.adjoint() * gram * c)(0).real() / den;
    out.c_min = std::min(out.c_min, r);
    out.c_max = std::max(out.c_max, r);
  }
  return out;
}

/// The same for the canonical system z_0..z_{n-1} of a fundamental system.
inline OrthogonalityRange almost_orthogonality_ratio(const FundamentalSystem& fs, int trials,
                                                     std::uint64_t seed = 0x5EED,
                                                     std::size_t grid = 256) {
  const auto rule = gauss_legendre(grid);
  CanonicalSystem cs(fs);
  const auto pts = cs.prepare(rule.nodes);
  CMatrix z(static_cast<Eigen::Index>(grid), fs.order());
  for (std::size_t i = 0; i < grid; ++i) z.row(static_cast<Eigen::Index>(i)) = cs.z(pts[i]).transpose();
  return almost_orthogonality_ratio(z, rule, trials, seed);
}

// ---------------------------------------------------------------------------
// Expansion experiments

/// Clusters of consecutive cvs (sorted by modulus) closer than `fraction`
/// times the mean spacing of the list. Returns index groups.
inline std::vector<std::vector<int>> group_close_values(const std::vector<CharacteristicValue>& cvs,
                                                        double fraction = 0.25) {
  std::vector<std::vector<int>> groups;
  if (cvs.empty()) return groups;
  double mean = 0.0;
  for (std::size_t i = 1; i < cvs.size(); ++i) mean += std::abs(cvs[i].rho - cvs[i - 1].rho);
  if (cvs.size() > 1) mean /= static_cast<double>(cvs.size() - 1);
  groups.push_back({0});
  for (std::size_t i = 1; i < cvs.size(); ++i) {
    if (std::abs(cvs[i].rho - cvs[i - 1].rho) < fraction * mean)
      groups.back().push_back(static_cast<int>(i));
    else
      groups.push_back({static_cast<int>(i)});
  }
  return groups;
}

/// Searches successive annuli until more than `count` eigenvalues (with
/// multiplicity) are known. Each new outer radius extrapolates the count
/// linearly in |rho|, since cvs are asymptotically equally spaced.
inline Spectrum spectrum_with_at_least(const NormalizedBoundaryConditions& nbc,
                                       const DifferentialExpression& expr, int count,
                                       SearchOptions opt) {
  Spectrum out;
  out.r_min = opt.r_min;
  int total = 0;
  for (int round = 0; round < 16; ++round) {
    auto part = find_cvs(nbc, expr, opt);
    for (auto& cv : part.cvs) {
      if (!out.cvs.empty() &&
          std::abs(out.cvs.back().rho - cv.rho) <= opt.merge_tol * (1.0 + std::abs(cv.rho)))
        continue;
      out.cvs.push_back(cv);
      total += cv.multiplicity;
    }
    out.flags.insert(out.flags.end(), part.flags.begin(), part.flags.end());
    out.r_max = opt.r_max;
    if (total > count) break;
    const double grow = total > 0 ? 1.1 * (count + 2) / total : 2.0;
    opt.r_min = opt.r_max;
    opt.r_max *= std::clamp(grow, 1.25, 4.0);
  }
  for (const auto& cv : out.cvs) out.max_residual = std::max(out.max_residual, cv.residual);
  return out;
}

struct ExpansionOptions {
  int k = 30;
  bool paired = false;
  SearchOptions search{};
  ProjectorOptions projector{};
  double pair_fraction = 0.25;
  std::size_t grid = 0;
  /// Reuse a spectrum already computed for these conditions; it must cover
  /// more than K eigenvalues.
  std::optional<Spectrum> spectrum;
};

struct ExpansionReport {
  bool paired = false;
  std::vector<CharacteristicValue> cvs;
  std::vector<std::vector<int>> groups;
  /// Eigenfunctions entering the Gram matrix.
  int functions = 0;
  /// ||f - S f|| after each projector (per cv, or per group when paired).
  std::vector<double> partial_sum_errors;
  /// Number of eigenfunctions covered by each partial sum.
  std::vector<int> partial_sum_functions;
  /// Condition number of the Gram matrix of the first k functions, k = 1..functions.
  std::vector<double> gram_condition;
  std::vector<double> projector_norms;
  std::vector<std::string> flags;
};

/// Partial sums sum_{m <= K} P_m f and the Gram matrix of normalized
/// eigenfunctions (unpaired) or of orthonormal bases of each group (paired).
/// Paired runs extend K to finish the last group.
inline ExpansionReport expansion_experiment(const NormalizedBoundaryConditions& nbc,
                                            const DifferentialExpression& expr,
                                            const std::function<Complex(double)>& f,
                                            const ExpansionOptions& opt = {}) {
  if (opt.k < 1) throw domain_error("expansion_experiment: K must be positive");
  ExpansionReport rep;
  rep.paired = opt.paired;
  SearchOptions search = opt.search;
  if (search.r_max <= search.r_min) search.r_max = search.r_min + 10.0;
  const auto spectrum = opt.spectrum ? *opt.spectrum : spectrum_with_at_least(nbc, expr, opt.k, search);
  rep.flags = spectrum.flags;
  const auto all_groups = group_close_values(spectrum.cvs, opt.pair_fraction);

  // Take cvs until K eigenvalues are covered; paired runs keep whole groups.
  std::vector<int> use;
  int total = 0;
  for (const auto& grp : all_groups) {
    std::vector<int> kept;
    for (int i : grp) {
      if (total >= opt.k && !opt.paired) break;
      kept.push_back(i);
      total += spectrum.cvs[static_cast<std::size_t>(i)].multiplicity;
    }
    if (kept.empty()) break;
    rep.groups.push_back({});
    for (int i : kept) {
      rep.groups.back().push_back(static_cast<int>(rep.cvs.size()));
      rep.cvs.push_back(spectrum.cvs[static_cast<std::size_t>(i)]);
    }
    use.insert(use.end(), kept.begin(), kept.end());
    if (total >= opt.k) break;
  }
  if (total < opt.k) rep.flags.push_back("fewer than K eigenvalues found");

  double rho_max = 0.0;
  for (const auto& cv : rep.cvs) rho_max = std::max(rho_max, std::abs(cv.rho));
  const QuadratureRule rule = opt.grid ? gauss_legendre(opt.grid) : analysis_rule(rho_max);
  const auto m = static_cast<Eigen::Index>(rule.nodes.size());

  std::vector<EigenRecord> eig(rep.cvs.size());
  parallel_for(eig.size(), [&](std::size_t i) {
    eig[i] = eigenfunction(nbc, expr, rep.cvs[i].rho, rep.cvs[i].multiplicity, rule);
  });
  for (const auto& e : eig)
    if (e.jordan_chain) rep.flags.push_back("Jordan chain at rho = " + std::to_string(e.rho.real()) + "+" + std::to_string(e.rho.imag()) + "i");

  // Gram prefixes.
  std::vector<CMatrix> blocks;  // weighted columns, one block per group
  for (const auto& grp : rep.groups) {
    CMatrix cols(m, 0);
    for (int i : grp) {
      const auto& s = eig[static_cast<std::size_t>(i)].samples;
      cols.conservativeResize(m, cols.cols() + s.cols());
      cols.rightCols(s.cols()) = s;
    }
    blocks.push_back(weight_rows(cols, rule));
  }
  CMatrix basis(m, 0);
  for (const auto& block : blocks) {
    for (Eigen::Index c = 0; c < block.cols(); ++c) {
      CMatrix prefix(m, basis.cols() + c + 1);
      prefix.leftCols(basis.cols()) = basis;
      CMatrix group_part = block.leftCols(c + 1);
      if (opt.paired) {
        Eigen::HouseholderQR<CMatrix> qr(group_part);
        group_part = qr.householderQ() * CMatrix::Identity(m, c + 1);
      }
      prefix.rightCols(c + 1) = group_part;
      rep.gram_condition.push_back(std::pow(condition_number(prefix), 2));
    }
    CMatrix grown(m, basis.cols() + block.cols());
    grown.leftCols(basis.cols()) = basis;
    CMatrix part = block;
    if (opt.paired) {
      Eigen::HouseholderQR<CMatrix> qr(block);
      part = qr.householderQ() * CMatrix::Identity(m, block.cols());
    }
    grown.rightCols(block.cols()) = part;
    basis = std::move(grown);
  }
  rep.functions = static_cast<int>(basis.cols());

  // Projectors: one per cv, or one per group when paired.
  std::vector<Complex> lambdas;
  for (const auto& cv : spectrum.cvs) lambdas.push_back(cv.lambda);
  struct Contour {
    Complex center;
    double radius;
    int rank;
  };
  std::vector<Contour> contours;
  int covered = 0;
  auto foreign_distance = [&](Complex c, const std::vector<Complex>& members) {
    double d = std::abs(c);
    for (Complex l : lambdas)
      if (std::find(members.begin(), members.end(), l) == members.end()) d = std::min(d, std::abs(l - c));
    return d;
  };
  for (const auto& grp : rep.groups) {
    if (opt.paired) {
      std::vector<Complex> members;
      Complex c{};
      int rank = 0;
      for (int i : grp) {
        members.push_back(rep.cvs[static_cast<std::size_t>(i)].lambda);
        c += members.back();
        rank += rep.cvs[static_cast<std::size_t>(i)].multiplicity;
      }
      c /= static_cast<double>(members.size());
      double spread = 0.0;
      for (Complex l : members) spread = std::max(spread, std::abs(l - c));
      const double far = foreign_distance(c, members);
      contours.push_back({c, spread + 0.5 * (far - spread), rank});
      for (int i : grp) covered += static_cast<int>(eig[static_cast<std::size_t>(i)].samples.cols());
      rep.partial_sum_functions.push_back(covered);
    } else {
      for (int i : grp) {
        const auto& cv = rep.cvs[static_cast<std::size_t>(i)];
        contours.push_back({cv.lambda, projector_radius(cv.lambda, lambdas), cv.multiplicity});
        covered += static_cast<int>(eig[static_cast<std::size_t>(i)].samples.cols());
        rep.partial_sum_functions.push_back(covered);
      }
    }
  }
  ProjectorOptions popt = opt.projector;
  popt.grid = rule.nodes.size();
  std::vector<CVector> pieces(contours.size());
  rep.projector_norms.resize(contours.size());
  CVector fv(m);
  for (Eigen::Index i = 0; i < m; ++i) fv(i) = f(rule.nodes[static_cast<std::size_t>(i)]);
  parallel_for(contours.size(), [&](std::size_t i) {
    const auto p = projector(nbc, expr, contours[i].center, contours[i].radius, popt, contours[i].rank);
    pieces[i] = p.apply(fv);
    rep.projector_norms[i] = p.norm;
  });
  CVector sum = CVector::Zero(m);
  for (const auto& piece : pieces) {
    sum += piece;
    rep.partial_sum_errors.push_back(l2_norm(fv - sum, rule));
  }
  return rep;
}

}  // namespace birkhoff
