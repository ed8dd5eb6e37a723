#include <random>

#include <gtest/gtest.h>

#include "birkhoff/model.hpp"
#include "birkhoff/presets.hpp"

using namespace birkhoff;

namespace {

CMatrix random_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> g;
  CMatrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = {g(rng), g(rng)};
  return m;
}

// Row spaces agree iff stacking them does not raise the rank.
bool same_row_space(const CMatrix& x, const CMatrix& y) {
  CMatrix both(x.rows() + y.rows(), x.cols());
  both << x, y;
  return numerical_rank(both, 1e-8) == numerical_rank(x, 1e-8) &&
         numerical_rank(x, 1e-8) == numerical_rank(y, 1e-8);
}

}  // namespace

TEST(Coefficient, PolynomialHorner) {
  const auto c = Coefficient::poly({1.0, Complex{0, 2}, 3.0});
  EXPECT_NEAR(std::abs(c(0.5) - Complex(1.75, 1.0)), 0.0, 1e-15);
}

TEST(Coefficient, SamplesReproduceCubics) {
  std::vector<Complex> v;
  for (int i = 0; i <= 10; ++i) {
    const double x = i / 10.0;
    v.push_back(x * x * x - 2.0 * x);
  }
  const auto c = Coefficient::samples(v);
  for (double x : {0.03, 0.37, 0.5, 0.91, 1.0})
    EXPECT_NEAR(std::abs(c(x) - (x * x * x - 2.0 * x)), 0.0, 1e-12);
}

TEST(Coefficient, L1Norm) {
  EXPECT_NEAR(Coefficient::poly({1.0, 1.0}).l1_norm(), 1.5, 1e-13);
  EXPECT_DOUBLE_EQ(Coefficient().l1_norm(), 0.0);
}

TEST(DifferentialExpression, RejectsHighIndexCoefficient) {
  DifferentialExpression e(2);
  EXPECT_THROW(e.set(1, Coefficient::poly({1.0})), Error);
  EXPECT_NO_THROW(e.set(0, Coefficient::poly({1.0})));
  EXPECT_FALSE(e.is_unperturbed());
  EXPECT_NEAR(e.default_r0(), 10.0, 1e-12);
}

TEST(Normalize, DirichletRanks) {
  const auto nbc = normalize(presets::dirichlet().boundary);
  EXPECT_EQ(nbc.ranks(), (std::vector<int>{2, 0}));
  EXPECT_EQ(nbc.leading(0, 0), (CVector(2) << 1.0, 0.0).finished());
  EXPECT_EQ(nbc.leading(0, 1), (CVector(2) << 0.0, 1.0).finished());
}

TEST(Normalize, PeriodicRanks) {
  const auto nbc = normalize(presets::periodic().boundary);
  EXPECT_EQ(nbc.ranks(), (std::vector<int>{1, 1}));
  EXPECT_NEAR(std::abs(nbc.leading(1, 0)(0) - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(nbc.leading(1, 1)(0) + 1.0), 0.0, 1e-15);
}

TEST(Normalize, ThirdOrderRanks) {
  const auto nbc = normalize(presets::third_order().boundary);
  EXPECT_EQ(nbc.ranks(), (std::vector<int>{2, 1, 0}));
}

TEST(Normalize, RankDeficientRejected) {
  const auto raw = boundary_from_rows(2, {{1, 0, 0, 0}, {2, 0, 0, 0}});
  try {
    normalize(raw);
    FAIL() << "expected a spec error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Spec);
    EXPECT_EQ(e.path(), "boundary");
  }
}

TEST(Normalize, AmbiguousPivotIsNumericalError) {
  const auto raw = boundary_from_rows(2, {{1, 0, 0, 0}, {0, 1e-8, 1, 0}});
  try {
    normalize(raw);
    FAIL() << "expected a numerical error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Numerical);
  }
}

TEST(Validate, ShapeErrors) {
  BvpSpec s = presets::dirichlet();
  s.boundary.a = CMatrix::Zero(3, 2);
  s.boundary.b = CMatrix::Zero(3, 2);
  EXPECT_THROW(validate(s), Error);
  s = presets::dirichlet();
  s.boundary.b = CMatrix::Zero(2, 3);
  EXPECT_THROW(validate(s), Error);
  EXPECT_NO_THROW(validate(presets::dirichlet()));
}

// Normal form is a change of basis of the boundary forms: the row space is
// unchanged, rows are ordered, and each row vanishes above its order.
TEST(NormalizeProperty, RowSpacePreservedOnRandomInputs) {
  std::mt19937_64 rng(0x5EED);
  std::uniform_int_distribution<int> order(1, 4);
  std::bernoulli_distribution sparse(0.3);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = order(rng);
    RawBoundaryConditions raw{random_matrix(rng, n, n), random_matrix(rng, n, n)};
    // Zero some entries so that low ranks r_j and one-sided rows occur.
    for (int r = 0; r < n; ++r)
      for (int k = 0; k < n; ++k) {
        if (sparse(rng)) raw.a(r, k) = 0.0;
        if (sparse(rng)) raw.b(r, k) = 0.0;
      }
    if (numerical_rank(raw.stacked(), 1e-6) < n) continue;
    NormalizedBoundaryConditions nbc;
    try {
      nbc = normalize(raw);
    } catch (const Error& e) {
      ASSERT_EQ(e.kind(), ErrorKind::Numerical);
      continue;
    }
    const auto out = nbc.render();
    EXPECT_TRUE(same_row_space(raw.stacked(), out.stacked())) << "trial " << trial;
    int total = 0;
    for (int j = 0; j < n; ++j) {
      EXPECT_LE(nbc.rank(j), 2);
      total += nbc.rank(j);
    }
    EXPECT_EQ(total, n);
    for (const auto& row : nbc.rows()) {
      for (int k = row.order + 1; k < n; ++k) {
        EXPECT_EQ(row.a(k), Complex{});
        EXPECT_EQ(row.b(k), Complex{});
      }
      if (nbc.rank(row.order) == 1)
        EXPECT_TRUE(std::abs(row.a(row.order) - 1.0) < 1e-14 ||
                    (row.a(row.order) == 0.0 && std::abs(row.b(row.order) - 1.0) < 1e-14));
    }
    for (int j = 0; j < n; ++j)
      if (nbc.rank(j) == 2) {
        EXPECT_NEAR(std::abs(nbc.leading(j, 0)(0) - 1.0), 0.0, 1e-12);
        EXPECT_NEAR(std::abs(nbc.leading(j, 0)(1)), 0.0, 1e-12);
        EXPECT_NEAR(std::abs(nbc.leading(j, 1)(0)), 0.0, 1e-12);
        EXPECT_NEAR(std::abs(nbc.leading(j, 1)(1) - 1.0), 0.0, 1e-12);
      }
  }
}

TEST(NormalizeProperty, Idempotent) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 4;
    RawBoundaryConditions raw{random_matrix(rng, n, n), random_matrix(rng, n, n)};
    const auto once = normalize(raw);
    const auto twice = normalize(once.render());
    EXPECT_EQ(once.ranks(), twice.ranks());
    EXPECT_LT((once.render().stacked() - twice.render().stacked()).norm(), 1e-10);
  }
}
