#pragma once

// Reference computations kept independent of the library's algorithms.

#include <algorithm>
#include <complex>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using C = std::complex<double>;
using Mat = std::vector<std::vector<C>>;

/// Determinant by the Leibniz permutation sum (n <= 6 in practice).
inline C leibniz_det(const Mat& m) {
  const std::size_t n = m.size();
  if (n == 0) return 1.0;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  C total = 0.0;
  do {
    int inversions = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (perm[i] > perm[j]) ++inversions;
    C prod = inversions % 2 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) prod *= m[i][perm[i]];
    total += prod;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total;
}

/// exp(2 pi i j / n) from the polar form.
inline C root(int n, int j) { return std::polar(1.0, 2.0 * 3.14159265358979323846 * j / n); }

/// Uniform sample on the unit sphere of C^n.
inline std::vector<C> unit_sphere(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  std::vector<C> v(static_cast<std::size_t>(n));
  double s = 0.0;
  for (auto& x : v) {
    x = {g(rng), g(rng)};
    s += std::norm(x);
  }
  for (auto& x : v) x /= std::sqrt(s);
  return v;
}

/// Classical RK4 for y' = f(x, y) with a fixed step count.
template <class F>
std::vector<C> rk4(F f, std::vector<C> y, double x0, double x1, int steps) {
  const double h = (x1 - x0) / steps;
  auto axpy = [](const std::vector<C>& a, C s, const std::vector<C>& b) {
    std::vector<C> r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + s * b[i];
    return r;
  };
  double x = x0;
  for (int s = 0; s < steps; ++s) {
    const auto k1 = f(x, y);
    const auto k2 = f(x + h / 2, axpy(y, h / 2, k1));
    const auto k3 = f(x + h / 2, axpy(y, h / 2, k2));
    const auto k4 = f(x + h, axpy(y, h, k3));
    for (std::size_t i = 0; i < y.size(); ++i)
      y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    x += h;
  }
  return y;
}

}  // namespace oracle
