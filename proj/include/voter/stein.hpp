#pragma once

// Gaussian Stein equation nu^2 f'(x) - x f(x) = h(x) - E h(W), W ~ N(0, nu^2),
// and the exclusion dynamics acting on the centred block count
// Z = (Y - ell^2/n)/sqrt(n) under the uniform start.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "voter/pmf.hpp"

namespace voter::stein {

struct SteinProblem {
  std::function<double(double)> h;
  std::function<double(double)> dh;  // h'
  double nu = 1.0;

  void validate() const;
};

// E h(W) for W ~ N(0, nu^2).
double gaussian_expectation(const std::function<double(double)>& h, double nu);

struct SteinSolution {
  std::vector<double> grid;
  std::vector<double> f;
  std::vector<double> df;   // from the equation: (h - Eh + x f)/nu^2
  std::vector<double> d2f;  // from its derivative: (f + x f' + h')/nu^2
  double mean_h = 0.0;
};

// Values of the bounded solution on `grid` (sorted, covering [-8nu, 8nu]). The
// left-tail integral is used for x <= 0 and the right-tail one for x > 0.
// Throws NumericError if a quadrature misses 1e-10.
SteinSolution stein_solve(const SteinProblem& prob, const std::vector<double>& grid);

// 4001 equispaced points on [-8nu, 8nu].
std::vector<double> default_stein_grid(double nu);

struct SteinBounds {
  double dh_norm = 0.0;
  double sup_f = 0.0, sup_df = 0.0, sup_d2f = 0.0;
  double bound_f = 0.0, bound_df = 0.0, bound_d2f = 0.0;
  bool holds() const { return sup_f <= bound_f && sup_df <= bound_df && sup_d2f <= bound_d2f; }
};

// Sup norms of f, f', f'' on the solution grid against 2||h'||,
// sqrt(2/(pi nu^2))||h'|| and 2||h'||/nu^2. ||h'|| is taken on the same grid.
SteinBounds stein_bounds(const SteinProblem& prob, const SteinSolution& sol);

struct NamedTestFunction {
  std::string name;
  std::function<double(double)> h;
  std::function<double(double)> dh;
};

// Twenty Lipschitz test functions: steep and shallow ramps, smoothed
// indicators, soft-clipped polynomials, smoothed |x| and oscillating terms.
std::vector<NamedTestFunction> stein_test_family();

// Stein operator nu^2 g'(x) - x g(x).
inline double stein_operator(double nu, double x, double g, double dg) { return nu * nu * dg - x * g; }

// Particle count ell over n sites, reduced to ell <= n/2 by the reflection
// ell -> n - ell (which leaves Z and the exclusion rates unchanged).
struct ExclusionSpace {
  std::int64_t n = 2;
  std::int64_t ell = 1;
  bool reflected = false;

  std::int64_t y_min() const { return std::max<std::int64_t>(0, 2 * ell - n); }
  std::int64_t y_max() const { return ell; }
  double m0() const { return static_cast<double>(ell) / static_cast<double>(n); }
  double z(std::int64_t y) const;
  double step() const;  // 1/sqrt(n)
  // nu^2 = gamma(m0^2)/2 = m0^2 (1-m0)^2 with
  // gamma(m) = m0^2 + m(1 - 4 m0) + 2 m^2.
  double nu() const;
};

// Throws DomainError unless 1 <= ell <= n-1.
ExclusionSpace make_exclusion_space(std::int64_t n, std::int64_t ell);

double gamma_fn(double m0, double m);

struct ExclusionPoint {
  std::int64_t y = 0;
  double z = 0.0;
  double value = 0.0;
};

// L f(Z) = A (f(Z - h) - f(Z)) + B (f(Z + h) - f(Z)) with
// A = Y(n - 2 ell + Y)/n, B = (ell - Y)^2/n, h = 1/sqrt(n), for every Y.
std::vector<ExclusionPoint> exclusion_apply(const ExclusionSpace& space, const std::function<double(double)>& f);

struct ExclusionResidualPoint {
  std::int64_t y = 0;
  double z = 0.0;
  double residual = 0.0;  // |L f(Z) - S_nu f'(Z)|
  double bound = 0.0;     // |Z| ||f''||/(2 sqrt n) + m0 ||f'''||/(3 sqrt n)
};

struct ExclusionResidualReport {
  std::vector<ExclusionResidualPoint> points;
  double max_residual = 0.0;
  // max over Y of residual / bound (bound > 0), and whether residual <= bound
  // holds at every Y up to rounding.
  double max_ratio = 0.0;
  bool holds = true;
};

struct ThriceDifferentiable {
  std::function<double(double)> f, d1, d2, d3;
};

ExclusionResidualReport exclusion_residual(const ExclusionSpace& space, const ThriceDifferentiable& fn);

// Exact law of Z under the uniform start: Y is hypergeometric (ell draws, ell
// marked, n total).
Pmf hypergeom_zeta_pmf(std::int64_t n, std::int64_t ell);

struct QcltPoint {
  std::int64_t n = 0;
  std::int64_t ell = 0;
  double m0 = 0.0;
  double nu = 0.0;
  double distance = 0.0;    // W1(Z, N(0, nu^2))
  double normalized = 0.0;  // distance * m0(1-m0) * sqrt(n)
};

QcltPoint qclt_uniform_start(std::int64_t n, std::int64_t ell);

}  // namespace voter::stein
