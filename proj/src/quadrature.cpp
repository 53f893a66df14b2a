#include "voter/quadrature.hpp"

namespace voter {
namespace {

struct Panel {
  double lo, mid, hi;
  double f_lo, f_mid, f_hi;
  double whole;
};

double simpson(double lo, double hi, double f_lo, double f_mid, double f_hi) {
  return (hi - lo) / 6.0 * (f_lo + 4.0 * f_mid + f_hi);
}

void refine(const std::function<double(double)>& f, const Panel& p, double tol, int depth,
            QuadratureResult& acc) {
  const double left_mid = 0.5 * (p.lo + p.mid);
  const double right_mid = 0.5 * (p.mid + p.hi);
  const double f_lm = f(left_mid);
  const double f_rm = f(right_mid);
  const double left = simpson(p.lo, p.mid, p.f_lo, f_lm, p.f_mid);
  const double right = simpson(p.mid, p.hi, p.f_mid, f_rm, p.f_hi);
  const double delta = left + right - p.whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    if (depth <= 0 && std::abs(delta) > 15.0 * tol) acc.converged = false;
    acc.value += left + right + delta / 15.0;
    acc.error_estimate += std::abs(delta) / 15.0;
    return;
  }
  refine(f, {p.lo, left_mid, p.mid, p.f_lo, f_lm, p.f_mid, left}, 0.5 * tol, depth - 1, acc);
  refine(f, {p.mid, right_mid, p.hi, p.f_mid, f_rm, p.f_hi, right}, 0.5 * tol, depth - 1, acc);
}

}  // namespace

QuadratureResult adaptive_simpson(const std::function<double(double)>& f, double lo, double hi,
                                  double abs_tol, int max_depth) {
  QuadratureResult acc;
  if (hi == lo) return acc;
  double sign = 1.0;
  if (hi < lo) {
    std::swap(lo, hi);
    sign = -1.0;
  }
  // Start from a few panels so that narrow features near the midpoint are not
  // missed by the first Simpson estimate.
  constexpr int kInitialPanels = 8;
  const double width = (hi - lo) / kInitialPanels;
  for (int i = 0; i < kInitialPanels; ++i) {
    const double a = lo + i * width;
    const double b = (i + 1 == kInitialPanels) ? hi : a + width;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    refine(f, {a, m, b, fa, fm, fb, simpson(a, b, fa, fm, fb)}, abs_tol / kInitialPanels, max_depth, acc);
  }
  acc.value *= sign;
  return acc;
}

}  // namespace voter

#include <numbers>

#include "voter/errors.hpp"

namespace voter {

GaussRule gauss_hermite(int m) {
  if (m < 1 || m > 200) throw DomainError("gauss_hermite: order must lie in [1, 200]");
  GaussRule rule;
  rule.nodes.assign(static_cast<std::size_t>(m), 0.0);
  rule.weights.assign(static_cast<std::size_t>(m), 0.0);
  const double pim4 = 1.0 / std::pow(std::numbers::pi, 0.25);
  const int half = (m + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < half; ++i) {
    // Asymptotic starting guesses for the largest roots, then the previous
    // roots shifted.
    if (i == 0) z = std::sqrt(2.0 * m + 1.0) - 1.85575 * std::pow(2.0 * m + 1.0, -1.0 / 6.0);
    else if (i == 1) z -= 1.14 * std::pow(static_cast<double>(m), 0.426) / z;
    else if (i == 2) z = 1.86 * z - 0.86 * rule.nodes[0];
    else if (i == 3) z = 1.91 * z - 0.91 * rule.nodes[1];
    else z = 2.0 * z - rule.nodes[static_cast<std::size_t>(i - 2)];
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < m; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * m) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(m - 1 - i);
    rule.nodes[lo] = z;
    rule.nodes[hi] = -z;
    rule.weights[lo] = rule.weights[hi] = 2.0 / (pp * pp);
  }
  return rule;
}

}  // namespace voter
