#pragma once

// Sector determinants and F(s) evaluated straight from their definitions on
// the normalized boundary rows, through the Leibniz oracle.

#include "birkhoff/model.hpp"
#include "oracle.hpp"

namespace oracle {

using birkhoff::NormalizedBoundaryConditions;

// Builds the sector matrix straight from the definition: column k holds
// b_j^i eps_k^j for every boundary row of order j, with i = 0 for k < p.
inline Mat theta_oracle(const NormalizedBoundaryConditions& nbc, int p, double s = 0.0,
                        bool f_form = false) {
  const int n = nbc.order();
  Mat m(static_cast<std::size_t>(n), std::vector<C>(static_cast<std::size_t>(n)));
  const int q = n / 2;
  for (int k = 0; k < n; ++k) {
    std::size_t r = 0;
    for (const auto& row : nbc.rows()) {
      const C w = std::pow(root(n, k), row.order);
      const C b0 = row.a(row.order) * w, b1 = row.b(row.order) * w;
      C entry;
      if (f_form && k == 0) entry = b0 + s * b1;
      else if (f_form && k == q) entry = s * b0 + b1;
      else entry = k < p ? b0 : b1;
      m[r++][static_cast<std::size_t>(k)] = entry;
    }
  }
  return m;
}

inline C f_oracle(const NormalizedBoundaryConditions& nbc, double s) {
  return leibniz_det(theta_oracle(nbc, nbc.order() / 2, s, true));
}

}  // namespace oracle
