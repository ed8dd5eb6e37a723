#include <gtest/gtest.h>

#include "birkhoff/analysis.hpp"
#include "birkhoff/presets.hpp"
#include "oracle.hpp"

using namespace birkhoff;

namespace {

NormalizedBoundaryConditions bc(const BvpSpec& s) { return normalize(s.boundary); }

// Closed-form Gram matrix of exp(i mu_k x) on [0, 1].
CMatrix exponential_gram(const std::vector<Complex>& mu) {
  const auto k = static_cast<Eigen::Index>(mu.size());
  CMatrix g(k, k);
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < k; ++b) {
      const Complex s = kI * (mu[static_cast<std::size_t>(a)] - std::conj(mu[static_cast<std::size_t>(b)]));
      g(b, a) = std::abs(s) < 1e-14 ? Complex(1.0) : (std::exp(s) - 1.0) / s;
    }
  return g;
}

}  // namespace

TEST(Eigenfunction, DirichletSines) {
  const auto rule = gauss_legendre(96);
  for (int k : {1, 4, 9}) {
    const auto e = eigenfunction(bc(presets::dirichlet()), DifferentialExpression(2), kPi * k, 1, rule);
    EXPECT_EQ(e.geometric, 1);
    EXPECT_FALSE(e.jordan_chain);
    EXPECT_LT(e.boundary_residual, 1e-7);
    // Fix the phase at the first node, then compare with sqrt 2 sin(pi k x).
    const Complex phase = e.samples(0, 0) / std::abs(e.samples(0, 0));
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double want = std::sqrt(2.0) * std::sin(kPi * k * rule.nodes[i]);
      const Complex got = e.samples(static_cast<Eigen::Index>(i), 0) / phase;
      EXPECT_LT(std::abs(got - want * (std::sin(kPi * k * rule.nodes[0]) > 0 ? 1.0 : -1.0)), 1e-8);
    }
  }
}

TEST(Eigenfunction, PeriodicTwoDimensional) {
  const auto rule = gauss_legendre(96);
  const auto e = eigenfunction(bc(presets::periodic()), DifferentialExpression(2), 4.0 * kPi, 2, rule);
  EXPECT_EQ(e.geometric, 2);
  EXPECT_FALSE(e.jordan_chain);
  // Both columns lie in span{cos 4 pi x, sin 4 pi x}.
  CMatrix basis(static_cast<Eigen::Index>(rule.nodes.size()), 2);
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    basis(static_cast<Eigen::Index>(i), 0) = std::cos(4.0 * kPi * rule.nodes[i]);
    basis(static_cast<Eigen::Index>(i), 1) = std::sin(4.0 * kPi * rule.nodes[i]);
  }
  const CMatrix wb = weight_rows(basis, rule), ws = weight_rows(e.samples, rule);
  const CMatrix coeff = wb.colPivHouseholderQr().solve(ws);
  EXPECT_LT((wb * coeff - ws).norm(), 1e-8);
}

TEST(Eigenfunction, RejectsNonCharacteristicValue) {
  EXPECT_THROW(eigenfunction(bc(presets::dirichlet()), DifferentialExpression(2), 4.0, 1, gauss_legendre(32)),
               Error);
  // Dirichlet zeros are simple: a double multiplicity claim is a Jordan flag,
  // a smaller one an error for periodic.
  EXPECT_TRUE(eigenfunction(bc(presets::dirichlet()), DifferentialExpression(2), kPi, 2, gauss_legendre(32))
                  .jordan_chain);
  EXPECT_THROW(eigenfunction(bc(presets::periodic()), DifferentialExpression(2), 2.0 * kPi, 1, gauss_legendre(32)),
               Error);
}

// ||u||^2 |rho| / sum |d|^2 stays within fixed bounds along the spectrum.
TEST(Eigenfunction, NormLawAcrossSpectrum) {
  const auto nbc = bc(presets::weakly_regular_pairs(Complex(0.0, 1.0)));
  SearchOptions opt;
  opt.r_max = 60.0;
  const auto s = find_cvs(nbc, DifferentialExpression(2), opt);
  double lo = 1e300, hi = 0.0;
  for (const auto& cv : s.cvs) {
    if (std::abs(cv.rho) < 5.0) continue;
    const auto e = eigenfunction(nbc, DifferentialExpression(2), cv.rho, cv.multiplicity, analysis_rule(60.0));
    lo = std::min(lo, e.norm_law[0]);
    hi = std::max(hi, e.norm_law[0]);
  }
  EXPECT_GT(lo, 0.0);
  EXPECT_LT(hi / lo, 10.0);
}

TEST(Projector, DirichletFirstIsOrthogonal) {
  const auto p = projector(bc(presets::dirichlet()), DifferentialExpression(2), kPi * kPi,
                           projector_radius(kPi * kPi, {4.0 * kPi * kPi}));
  EXPECT_EQ(p.rank, 1);
  EXPECT_NEAR(p.trace.real(), 1.0, 1e-6);
  EXPECT_NEAR(p.norm, 1.0, 1e-6);
  EXPECT_NEAR(p.ratio, 1.0, 1e-6);
  EXPECT_LT(p.idempotency, 1e-6);
  // Kernel 2 sin(pi x) sin(pi xi).
  double err = 0.0;
  for (std::size_t i = 0; i < p.rule.nodes.size(); i += 7)
    for (std::size_t j = 0; j < p.rule.nodes.size(); j += 5)
      err = std::max(err, std::abs(p.kernel(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) -
                                   2.0 * std::sin(kPi * p.rule.nodes[i]) * std::sin(kPi * p.rule.nodes[j])));
  EXPECT_LT(err, 1e-7);
}

TEST(Projector, PeriodicDoubleHasRankTwo) {
  const double lam = 4.0 * kPi * kPi;
  const auto p = projector(bc(presets::periodic()), DifferentialExpression(2), lam, 0.5 * lam * 0.5, {}, 2);
  EXPECT_EQ(p.rank, 2);
  EXPECT_NEAR(p.norm, 1.0, 1e-6);
  EXPECT_LT(p.idempotency, 1e-6);
}

TEST(Projector, ForeignSpectrumDetected) {
  // Radius reaching both pi^2 and 4 pi^2.
  EXPECT_THROW(projector(bc(presets::dirichlet()), DifferentialExpression(2), 2.5 * kPi * kPi,
                         2.0 * kPi * kPi, {}, 1),
               Error);
}

TEST(Projector, OrthogonalGroupsAnnihilate) {
  const auto nbc = bc(presets::weakly_regular_pairs(0.5));
  SearchOptions opt;
  opt.r_max = 14.0;
  const auto s = find_cvs(nbc, DifferentialExpression(2), opt);
  ASSERT_GE(s.cvs.size(), 3u);
  std::vector<Complex> lambdas;
  for (const auto& cv : s.cvs) lambdas.push_back(cv.lambda);
  ProjectorOptions popt;
  popt.grid = 96;
  const auto a = projector(nbc, DifferentialExpression(2), lambdas[1], projector_radius(lambdas[1], lambdas), popt, 1);
  const auto b = projector(nbc, DifferentialExpression(2), lambdas[2], projector_radius(lambdas[2], lambdas), popt, 1);
  const CMatrix wa = weighted(a.kernel, a.rule), wb = weighted(b.kernel, b.rule);
  EXPECT_LT((wa * wb).norm(), 1e-6 * wa.norm() * wb.norm());
  EXPECT_LT((wa * wa - wa).norm(), 1e-6 * wa.norm());
  EXPECT_NEAR(a.trace.real(), 1.0, 1e-6);
  EXPECT_NEAR(a.trace.imag(), 0.0, 1e-6);
}

// Partial sums of Dirichlet projectors applied to x(1 - x) against the sine
// series with coefficients 8 / (pi k)^3 for odd k.
TEST(Projector, DirichletPartialSumsMatchSineSeries) {
  const auto nbc = bc(presets::dirichlet());
  const int kmax = 5;
  std::vector<Complex> lambdas;
  for (int k = 1; k <= kmax + 1; ++k) lambdas.push_back(kPi * kPi * k * k);
  ProjectorOptions popt;
  popt.grid = 80;
  const auto rule = gauss_legendre(80);
  CVector f(80), sum = CVector::Zero(80);
  for (int i = 0; i < 80; ++i) f(i) = rule.nodes[static_cast<std::size_t>(i)] * (1.0 - rule.nodes[static_cast<std::size_t>(i)]);
  for (int k = 1; k <= kmax; ++k) {
    const auto p = projector(nbc, DifferentialExpression(2), lambdas[static_cast<std::size_t>(k - 1)],
                             projector_radius(lambdas[static_cast<std::size_t>(k - 1)], lambdas), popt, 1);
    sum += p.apply(f);
  }
  for (int i = 0; i < 80; ++i) {
    double want = 0.0;
    for (int k = 1; k <= kmax; k += 2) want += 8.0 / std::pow(kPi * k, 3) * std::sin(kPi * k * rule.nodes[static_cast<std::size_t>(i)]);
    EXPECT_LT(std::abs(sum(i) - want), 1e-8);
  }
}

// n = 1, y(0) + c y(1) = 0: P = u (x) v with u = e^{i rho x}, v = e^{i conj(rho) x},
// (u, v) = 1, so ||P|| = ||u|| ||v|| = sinh|s| / |s| with s = Im rho = ln|c|.
TEST(ProjectorScaling, FirstOrderFamily) {
  std::vector<ProjectorRecord> recs;
  for (double s : {-2.0, 0.0, 2.0}) {
    const Complex c = std::exp(s);
    const auto nbc = bc(presets::first_order(c));
    const Complex lam{kPi + 2.0 * kPi * 3.0, s};
    const auto p = projector(nbc, DifferentialExpression(1), lam, kPi, {}, 1);
    const double want = s == 0.0 ? 1.0 : std::sinh(std::abs(s)) / std::abs(s);
    EXPECT_NEAR(p.norm / want, 1.0, 1e-6) << s;
    EXPECT_GT(p.ratio, 0.0);
    recs.push_back(p);
  }
  const auto rep = projector_norm_scaling(recs);
  EXPECT_LE(rep.spread, 10.0);
  EXPECT_NEAR(rep.ratios[1], 1.0, 1e-6);
}

TEST(ProjectorScaling, RejectsMultipleEigenvalue) {
  ProjectorRecord r;
  r.rank = 2;
  r.ratio = 1.0;
  EXPECT_THROW(projector_norm_scaling({r}), Error);
}

TEST(AlmostOrthogonality, HarmonicsAndSingletons) {
  const auto rule = gauss_legendre(64);
  CMatrix h(64, 5);
  for (int i = 0; i < 64; ++i)
    for (int k = 0; k < 5; ++k) h(i, k) = std::exp(2.0 * kPi * kI * static_cast<double>(k - 2) * rule.nodes[static_cast<std::size_t>(i)]);
  const auto r = almost_orthogonality_ratio(h, rule, 200);
  EXPECT_NEAR(r.c_min, 1.0, 1e-12);
  EXPECT_NEAR(r.c_max, 1.0, 1e-12);
  const auto one = almost_orthogonality_ratio(CMatrix(h.col(3)), rule, 50);
  EXPECT_NEAR(one.c_min, 1.0, 1e-12);
  EXPECT_NEAR(one.c_max, 1.0, 1e-12);
}

// Sampled ratios lie inside the spectrum of the closed-form normalized Gram
// matrix, and the draw is reproducible.
TEST(AlmostOrthogonality, BoundedByClosedFormGram) {
  for (int n : {2, 3, 4}) {
    const Complex rho = std::polar(30.0, kPi / (2.0 * n));
    const auto fs = FundamentalSystem::exact(n, rho_point(rho, n), SectorIndex::of(n, 0));
    const auto r = almost_orthogonality_ratio(fs, 200);
    const auto again = almost_orthogonality_ratio(fs, 200);
    EXPECT_EQ(r.c_min, again.c_min);
    EXPECT_EQ(r.c_max, again.c_max);
    std::vector<Complex> mu;
    for (int j = 0; j < n; ++j) mu.push_back(rho * oracle::root(n, j));
    // z_k = e^{i mu_k (x - s_k)} differ from e^{i mu_k x} by constants, which
    // the normalization removes.
    CMatrix g = exponential_gram(mu);
    const CVector d = g.diagonal().cwiseSqrt().cwiseInverse();
    g = d.asDiagonal() * g * d.asDiagonal();
    Eigen::SelfAdjointEigenSolver<CMatrix> es(g);
    EXPECT_GE(r.c_min, es.eigenvalues()(0) - 1e-9);
    EXPECT_LE(r.c_max, es.eigenvalues()(n - 1) + 1e-9);
    EXPECT_LT(r.spread(), 50.0);
  }
}

TEST(Grouping, ClosePairsJoin) {
  std::vector<CharacteristicValue> cvs;
  for (double r : {1.3, 6.28, 6.58, 12.57, 12.72, 18.85}) cvs.push_back({Complex(r, 0.0)});
  const auto g = group_close_values(cvs);
  ASSERT_EQ(g.size(), 4u);
  EXPECT_EQ(g[1], (std::vector<int>{1, 2}));
  EXPECT_EQ(g[2], (std::vector<int>{3, 4}));
}

TEST(Expansion, DirichletGramStaysOrthonormal) {
  ExpansionOptions opt;
  opt.k = 30;
  opt.projector.contour_nodes = 32;
  const auto rep = expansion_experiment(bc(presets::dirichlet()), DifferentialExpression(2),
                                        [](double x) { return Complex(x * (1.0 - x)); }, opt);
  ASSERT_EQ(rep.functions, 30);
  for (double c : rep.gram_condition) EXPECT_LT(c, 2.0);
  // Sine-series error with 30 terms is about 1e-5.
  EXPECT_LT(rep.partial_sum_errors.back(), 1e-4);
  EXPECT_TRUE(rep.flags.empty());
}

TEST(Expansion, EigenfunctionReproduced) {
  ExpansionOptions opt;
  opt.k = 4;
  const auto rep = expansion_experiment(bc(presets::dirichlet()), DifferentialExpression(2),
                                        [](double x) { return Complex(std::sin(3.0 * kPi * x)); }, opt);
  EXPECT_GT(rep.partial_sum_errors[1], 0.5);
  EXPECT_LT(rep.partial_sum_errors[2], 1e-7);
  EXPECT_LT(rep.partial_sum_errors[3], 1e-7);
}

TEST(Expansion, WeaklyRegularPairsNeedParentheses) {
  const auto nbc = bc(presets::weakly_regular_pairs(Complex(0.0, 1.0)));
  ExpansionOptions opt;
  opt.k = 12;
  opt.projector.contour_nodes = 32;
  opt.search.r_min = 0.05;
  opt.spectrum = spectrum_with_at_least(nbc, DifferentialExpression(2), opt.k, opt.search);
  auto f = [](double x) { return Complex(x * (1.0 - x)); };
  const auto plain = expansion_experiment(nbc, DifferentialExpression(2), f, opt);
  opt.paired = true;
  const auto paired = expansion_experiment(nbc, DifferentialExpression(2), f, opt);
  EXPECT_GT(plain.gram_condition[11] / plain.gram_condition[4], 5.0);
  EXPECT_LT(paired.gram_condition[11] / paired.gram_condition[4], 2.0);
  // Both orderings converge to the same function.
  EXPECT_LT(paired.partial_sum_errors.back(), 0.01);
}

// z_l at a nearby cv from the Taylor coefficients omega_lq at its partner.
TEST(Omega, TaylorRecombinationAcrossCluster) {
  const Complex r1{31.4159265, 0.0}, r2{31.4794, 0.0};
  for (const auto& expr : {DifferentialExpression(2), [] {
                             DifferentialExpression e(2);
                             e.set(0, Coefficient::poly({0.3, 0.1}));
                             return e;
                           }()}) {
    CanonicalSystem a(make_fss(expr, rho_point(r1, 2), SectorIndex::of(2, 0)));
    CanonicalSystem b(make_fss(expr, rho_point(r2, 2), SectorIndex::of(2, 0)));
    for (double x : {0.1, 0.5, 0.9})
      for (int l = 0; l < 2; ++l) {
        Complex sum{};
        for (int q = 0; q <= 5; ++q) sum += omega(a, expr, l, q, x) * std::pow(r2 - r1, q);
        EXPECT_LT(std::abs(sum - b.z(x)(l)), 1e-6);
      }
  }
}
