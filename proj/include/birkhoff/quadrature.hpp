#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <vector>

#include "birkhoff/types.hpp"

namespace birkhoff {

/// Gauss-Legendre rule mapped to an interval [a, b].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

namespace detail {

// Nodes and weights on [-1, 1] by Newton iteration on P_m from the usual
// cosine initial guess. Accurate to machine precision for m up to a few
// thousand.
inline QuadratureRule legendre_reference(std::size_t m) {
  QuadratureRule rule;
  rule.nodes.resize(m);
  rule.weights.resize(m);
  if (m == 1) {
    rule.nodes[0] = 0.0;
    rule.weights[0] = 2.0;
    return rule;
  }
  const std::size_t half = (m + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    double x = std::cos(kPi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(m) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= m; ++k) {
        const double pk =
            ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = pk;
      }
      dp = static_cast<double>(m) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0, p1 = x;
    for (std::size_t k = 2; k <= m; ++k) {
      const double pk =
          ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
      p0 = p1;
      p1 = pk;
    }
    dp = static_cast<double>(m) * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[m - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[m - 1 - i] = w;
  }
  if (m % 2 == 1) rule.nodes[m / 2] = 0.0;
  return rule;
}

}  // namespace detail

/// m-point Gauss-Legendre rule on [a, b]. Reference rules are cached.
inline QuadratureRule gauss_legendre(std::size_t m, double a = 0.0, double b = 1.0) {
  static std::mutex mutex;
  static std::map<std::size_t, QuadratureRule> cache;
  QuadratureRule ref;
  {
    std::lock_guard lock(mutex);
    auto it = cache.find(m);
    if (it == cache.end()) it = cache.emplace(m, detail::legendre_reference(m)).first;
    ref = it->second;
  }
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  for (std::size_t i = 0; i < m; ++i) {
    ref.nodes[i] = mid + half * ref.nodes[i];
    ref.weights[i] *= half;
  }
  return ref;
}

/// Integrates f over [a, b] with an m-point rule.
template <class F>
auto integrate(F&& f, double a, double b, std::size_t m = 64) {
  const QuadratureRule rule = gauss_legendre(m, a, b);
  decltype(f(a)) sum{};
  for (std::size_t i = 0; i < rule.size(); ++i) sum += rule.weights[i] * f(rule.nodes[i]);
  return sum;
}

}  // namespace birkhoff
