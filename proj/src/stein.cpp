#include "voter/stein.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "voter/errors.hpp"
#include "voter/model.hpp"
#include "voter/quadrature.hpp"
#include "voter/transport.hpp"

namespace voter::stein {
namespace {

// exp(-u^2/2) < 1e-34 beyond this many standard deviations.
constexpr double kTailCut = 12.65;
constexpr double kInnerTol = 1e-12;

double integrate(const std::function<double(double)>& g, double lo, double hi, double tol) {
  const auto r = adaptive_simpson(g, lo, hi, tol);
  if (!r.converged) throw NumericError("Stein quadrature did not reach tolerance");
  return r.value;
}

}  // namespace

void SteinProblem::validate() const {
  if (!h) throw DomainError("Stein problem needs h");
  if (!(nu > 0.0) || !std::isfinite(nu)) throw DomainError("Stein problem needs nu > 0");
}

double gaussian_expectation(const std::function<double(double)>& h, double nu) {
  if (!(nu > 0.0)) throw DomainError("nu must be positive");
  const double c = 1.0 / (nu * std::sqrt(2.0 * std::numbers::pi));
  const double cut = kTailCut * nu;
  // Split at 0 so symmetric integrands are resolved on each half.
  auto g = [&](double x) { return c * std::exp(-0.5 * x * x / (nu * nu)) * h(x); };
  return integrate(g, -cut, 0.0, 0.5 * kInnerTol) + integrate(g, 0.0, cut, 0.5 * kInnerTol);
}

std::vector<double> default_stein_grid(double nu) {
  constexpr int kPoints = 4001;
  std::vector<double> grid(kPoints);
  for (int j = 0; j < kPoints; ++j) grid[j] = -8.0 * nu + 16.0 * nu * j / (kPoints - 1);
  return grid;
}

SteinSolution stein_solve(const SteinProblem& prob, const std::vector<double>& grid) {
  prob.validate();
  if (grid.empty() || !std::is_sorted(grid.begin(), grid.end())) throw DomainError("grid must be sorted");
  const double nu = prob.nu;
  const double nu2 = nu * nu;
  if (grid.front() > -8.0 * nu * (1.0 - 1e-12) || grid.back() < 8.0 * nu * (1.0 - 1e-12)) {
    throw DomainError("grid must cover [-8 nu, 8 nu]");
  }
  SteinSolution sol;
  sol.grid = grid;
  sol.mean_h = gaussian_expectation(prob.h, nu);
  const double eh = sol.mean_h;
  const double cut = kTailCut * nu;
  // The integral is scaled by 1/nu^2 and Simpson's error estimate is only
  // heuristic, so ask for 1e-12 after scaling.
  const double tol = std::min(kInnerTol, 1e-12 * nu2);
  sol.f.resize(grid.size());
  sol.df.resize(grid.size());
  sol.d2f.resize(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double x = grid[k];
    double f;
    if (x <= 0.0) {
      f = integrate([&](double u) { return std::exp((2.0 * x * u - u * u) / (2.0 * nu2)) * (prob.h(x - u) - eh); }, 0.0,
                    cut, tol) /
          nu2;
    } else {
      f = -integrate([&](double u) { return std::exp((-2.0 * x * u - u * u) / (2.0 * nu2)) * (prob.h(x + u) - eh); },
                     0.0, cut, tol) /
          nu2;
    }
    sol.f[k] = f;
    sol.df[k] = (prob.h(x) - eh + x * f) / nu2;
    const double dh = prob.dh ? prob.dh(x) : 0.0;
    sol.d2f[k] = (f + x * sol.df[k] + dh) / nu2;
  }
  return sol;
}

SteinBounds stein_bounds(const SteinProblem& prob, const SteinSolution& sol) {
  if (!prob.dh) throw DomainError("Stein bounds need h'");
  SteinBounds b;
  for (std::size_t k = 0; k < sol.grid.size(); ++k) {
    b.dh_norm = std::max(b.dh_norm, std::abs(prob.dh(sol.grid[k])));
    b.sup_f = std::max(b.sup_f, std::abs(sol.f[k]));
    b.sup_df = std::max(b.sup_df, std::abs(sol.df[k]));
    b.sup_d2f = std::max(b.sup_d2f, std::abs(sol.d2f[k]));
  }
  const double nu2 = prob.nu * prob.nu;
  b.bound_f = 2.0 * b.dh_norm;
  b.bound_df = std::sqrt(2.0 / (std::numbers::pi * nu2)) * b.dh_norm;
  b.bound_d2f = 2.0 * b.dh_norm / nu2;
  return b;
}

std::vector<NamedTestFunction> stein_test_family() {
  std::vector<NamedTestFunction> fam;
  for (double s : {0.05, 0.2, 0.5, 2.0}) {
    fam.push_back({"tanh(x/" + std::to_string(s) + ")", [s](double x) { return std::tanh(x / s); },
                   [s](double x) {
                     const double c = std::cosh(x / s);
                     return 1.0 / (s * c * c);
                   }});
  }
  for (auto [c, s] : std::vector<std::pair<double, double>>{{0.0, 0.05}, {0.1, 0.1}, {-0.2, 0.3}, {0.5, 1.0}}) {
    fam.push_back({"logistic(" + std::to_string(c) + "," + std::to_string(s) + ")",
                   [c, s](double x) { return 1.0 / (1.0 + std::exp(-(x - c) / s)); },
                   [c, s](double x) {
                     const double e = std::exp(-std::abs(x - c) / s);
                     return e / (s * (1.0 + e) * (1.0 + e));
                   }});
  }
  using Poly = std::pair<std::function<double(double)>, std::function<double(double)>>;
  const std::vector<std::pair<std::string, Poly>> polys{
      {"x", {[](double x) { return x; }, [](double) { return 1.0; }}},
      {"x^2", {[](double x) { return x * x; }, [](double x) { return 2.0 * x; }}},
      {"x^3-x", {[](double x) { return x * x * x - x; }, [](double x) { return 3.0 * x * x - 1.0; }}},
      {"2x^2-1", {[](double x) { return 2.0 * x * x - 1.0; }, [](double x) { return 4.0 * x; }}},
  };
  for (const auto& [name, pq] : polys) {
    const auto& [p, dp] = pq;
    fam.push_back({"softclip(" + name + ")",
                   [p](double x) {
                     const double v = p(x);
                     return v / std::sqrt(1.0 + v * v);
                   },
                   [p, dp](double x) {
                     const double v = p(x);
                     return dp(x) / std::pow(1.0 + v * v, 1.5);
                   }});
  }
  for (double e : {0.01, 0.1}) {
    fam.push_back({"sqrt(x^2+" + std::to_string(e * e) + ")", [e](double x) { return std::sqrt(x * x + e * e); },
                   [e](double x) { return x / std::sqrt(x * x + e * e); }});
  }
  for (double k : {1.0, 5.0}) {
    fam.push_back({"sin(" + std::to_string(k) + "x)/" + std::to_string(k), [k](double x) { return std::sin(k * x) / k; },
                   [k](double x) { return std::cos(k * x); }});
  }
  fam.push_back({"x", [](double x) { return x; }, [](double) { return 1.0; }});
  fam.push_back({"exp(-x^2)", [](double x) { return std::exp(-x * x); },
                 [](double x) { return -2.0 * x * std::exp(-x * x); }});
  fam.push_back({"x exp(-x^2/2)", [](double x) { return x * std::exp(-0.5 * x * x); },
                 [](double x) { return (1.0 - x * x) * std::exp(-0.5 * x * x); }});
  fam.push_back({"atan(3x)", [](double x) { return std::atan(3.0 * x); },
                 [](double x) { return 3.0 / (1.0 + 9.0 * x * x); }});
  return fam;
}

double ExclusionSpace::z(std::int64_t y) const {
  const double nn = static_cast<double>(n);
  const double l = static_cast<double>(ell);
  return (static_cast<double>(y) - l * l / nn) / std::sqrt(nn);
}

double ExclusionSpace::step() const { return 1.0 / std::sqrt(static_cast<double>(n)); }

double gamma_fn(double m0, double m) { return m0 * m0 + m * (1.0 - 4.0 * m0) + 2.0 * m * m; }

double ExclusionSpace::nu() const {
  const double m = m0();
  return std::sqrt(0.5 * gamma_fn(m, m * m));
}

ExclusionSpace make_exclusion_space(std::int64_t n, std::int64_t ell) {
  if (n < 2 || ell < 1 || ell > n - 1) {
    throw DomainError("need 1 <= ell <= n-1 (n = " + std::to_string(n) + ", ell = " + std::to_string(ell) + ")");
  }
  ExclusionSpace s;
  s.n = n;
  s.ell = ell;
  if (2 * ell > n) {
    s.ell = n - ell;
    s.reflected = true;
  }
  return s;
}

std::vector<ExclusionPoint> exclusion_apply(const ExclusionSpace& space, const std::function<double(double)>& f) {
  const double nn = static_cast<double>(space.n);
  const double l = static_cast<double>(space.ell);
  const double h = space.step();
  std::vector<ExclusionPoint> out;
  for (std::int64_t y = space.y_min(); y <= space.y_max(); ++y) {
    const double yy = static_cast<double>(y);
    const double a = yy * (nn - 2.0 * l + yy) / nn;
    const double b = (l - yy) * (l - yy) / nn;
    const double z = space.z(y);
    const double f0 = f(z);
    double v = 0.0;
    if (a > 0.0) v += a * (f(z - h) - f0);
    if (b > 0.0) v += b * (f(z + h) - f0);
    out.push_back({y, z, v});
  }
  return out;
}

ExclusionResidualReport exclusion_residual(const ExclusionSpace& space, const ThriceDifferentiable& fn) {
  if (!fn.f || !fn.d1 || !fn.d2 || !fn.d3) throw DomainError("exclusion residual needs f, f', f'', f'''");
  const double nu = space.nu();
  const double h = space.step();
  const double sqrt_n = std::sqrt(static_cast<double>(space.n));
  const double zlo = space.z(space.y_min()) - h;
  const double zhi = space.z(space.y_max()) + h;
  const double n2 = model::sup_norm(fn.d2, zlo, zhi);
  const double n3 = model::sup_norm(fn.d3, zlo, zhi);
  const double nn = static_cast<double>(space.n);
  const double l = static_cast<double>(space.ell);
  const double eps = std::numeric_limits<double>::epsilon();

  const auto lf = exclusion_apply(space, fn.f);
  ExclusionResidualReport rep;
  for (const auto& p : lf) {
    const double s = stein_operator(nu, p.z, fn.d1(p.z), fn.d2(p.z));
    ExclusionResidualPoint g;
    g.y = p.y;
    g.z = p.z;
    g.residual = std::abs(p.value - s);
    g.bound = std::abs(p.z) * n2 / (2.0 * sqrt_n) + space.m0() * n3 / (3.0 * sqrt_n);
    // Cancellation in the differences of f, scaled by the jump rates.
    const double yy = static_cast<double>(p.y);
    const double rates = yy * (nn - 2.0 * l + yy) / nn + (l - yy) * (l - yy) / nn;
    const double slack = 8.0 * eps * (rates * std::max(1.0, std::abs(fn.f(p.z))) + std::abs(s) + 1.0);
    if (g.residual > g.bound + slack) rep.holds = false;
    if (g.bound > 0.0) rep.max_ratio = std::max(rep.max_ratio, g.residual / g.bound);
    rep.max_residual = std::max(rep.max_residual, g.residual);
    rep.points.push_back(g);
  }
  return rep;
}

Pmf hypergeom_zeta_pmf(std::int64_t n, std::int64_t ell) {
  const auto space = make_exclusion_space(n, ell);
  const std::int64_t lo = space.y_min();
  const std::int64_t hi = space.y_max();
  const double l = static_cast<double>(space.ell);
  const double nn = static_cast<double>(n);
  // Ratio P(y+1)/P(y) = (l-y)^2 / ((y+1)(n-2l+y+1)), anchored at the mode.
  auto ratio = [&](std::int64_t y) {
    const double yy = static_cast<double>(y);
    return (l - yy) * (l - yy) / ((yy + 1.0) * (nn - 2.0 * l + yy + 1.0));
  };
  const auto count = static_cast<std::size_t>(hi - lo + 1);
  std::vector<double> logp(count, 0.0);
  for (std::int64_t y = lo; y < hi; ++y) {
    logp[static_cast<std::size_t>(y - lo + 1)] = logp[static_cast<std::size_t>(y - lo)] + std::log(ratio(y));
  }
  const double top = *std::max_element(logp.begin(), logp.end());
  std::vector<double> p(count), z(count);
  double total = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    p[k] = std::exp(logp[k] - top);
    total += p[k];
  }
  for (std::size_t k = 0; k < count; ++k) {
    p[k] /= total;
    z[k] = space.z(lo + static_cast<std::int64_t>(k));
  }
  return Pmf(std::move(z), std::move(p));
}

QcltPoint qclt_uniform_start(std::int64_t n, std::int64_t ell) {
  const auto space = make_exclusion_space(n, ell);
  QcltPoint q;
  q.n = n;
  q.ell = ell;
  q.m0 = static_cast<double>(ell) / static_cast<double>(n);
  q.nu = space.nu();
  const auto pmf = hypergeom_zeta_pmf(n, ell);
  q.distance = transport::w1_discrete_vs_gaussian(pmf, 0.0, q.nu);
  q.normalized = q.distance * q.m0 * (1.0 - q.m0) * std::sqrt(static_cast<double>(n));
  return q;
}

}  // namespace voter::stein
