#pragma once

#include <cmath>
#include <functional>

namespace voter {

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  bool converged = true;
};

// Adaptive Simpson rule with Richardson correction. `abs_tol` is the global
// absolute tolerance; `converged` is false if any panel hit `max_depth`.
QuadratureResult adaptive_simpson(const std::function<double(double)>& f, double lo, double hi,
                                  double abs_tol = 1e-10, int max_depth = 48);

}  // namespace voter

#include <vector>

namespace voter {

// Nodes and weights of the m-point Gauss-Hermite rule for the weight
// exp(-x^2), by Newton iteration on the orthonormal recurrence.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussRule gauss_hermite(int m);

}  // namespace voter
