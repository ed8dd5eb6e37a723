#pragma once

#include <string>
#include <vector>

#include "birkhoff/model.hpp"

namespace birkhoff::presets {

// Rows are written against D = -i d/dx, so y'(x) = i Dy(x).

inline BvpSpec make(std::string label, int n, const std::vector<std::vector<Complex>>& rows) {
  return {DifferentialExpression(n), boundary_from_rows(n, rows), std::move(label)};
}

inline BvpSpec dirichlet() { return make("dirichlet", 2, {{1, 0, 0, 0}, {0, 0, 1, 0}}); }
inline BvpSpec neumann() { return make("neumann", 2, {{0, 1, 0, 0}, {0, 0, 0, 1}}); }
inline BvpSpec periodic() { return make("periodic", 2, {{1, 0, -1, 0}, {0, 1, 0, -1}}); }
inline BvpSpec antiperiodic() { return make("antiperiodic", 2, {{1, 0, 1, 0}, {0, 1, 0, 1}}); }
inline BvpSpec cauchy() { return make("cauchy", 2, {{1, 0, 0, 0}, {0, 1, 0, 0}}); }

/// y(0) = y(1) = Dy(0) = 0.
inline BvpSpec third_order() {
  return make("third-order", 3, {{1, 0, 0, 0, 0, 0}, {0, 0, 0, 1, 0, 0}, {0, 1, 0, 0, 0, 0}});
}

/// y(0) = y(1) = Dy(0) = Dy(1) = 0.
inline BvpSpec fourth_order_clamped() {
  return make("fourth-order-clamped", 4,
              {{1, 0, 0, 0, 0, 0, 0, 0},
               {0, 0, 0, 0, 1, 0, 0, 0},
               {0, 1, 0, 0, 0, 0, 0, 0},
               {0, 0, 0, 0, 0, 1, 0, 0}});
}

/// y(0) = 0, Dy(0) - Dy(1) + alpha y(1) = 0: regular, not strongly regular,
/// with characteristic values in close pairs and nearly parallel
/// eigenfunctions.
inline BvpSpec weakly_regular_pairs(Complex alpha) {
  return make("weakly-regular-pairs", 2, {{1, 0, 0, 0}, {0, 1, alpha, -1}});
}

/// n = 1, y(0) + c y(1) = 0; eigenvalues 2 pi k + i ln c (principal log shifted).
inline BvpSpec first_order(Complex c) { return make("first-order", 1, {{1, c}}); }

/// The preset with this label, or throws a spec error.
inline BvpSpec by_name(const std::string& name) {
  if (name == "dirichlet") return dirichlet();
  if (name == "neumann") return neumann();
  if (name == "periodic") return periodic();
  if (name == "antiperiodic") return antiperiodic();
  if (name == "cauchy") return cauchy();
  if (name == "third-order") return third_order();
  if (name == "fourth-order-clamped") return fourth_order_clamped();
  throw spec_error("unknown preset '" + name + "'", "preset");
}

}  // namespace birkhoff::presets
