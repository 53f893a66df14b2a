#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <map>
#include <random>

#include "oracles.hpp"
#include "voter/errors.hpp"
#include "voter/quadrature.hpp"
#include "voter/rng.hpp"
#include "voter/stein.hpp"
#include "voter/transport.hpp"

using namespace voter;
using namespace voter::stein;

TEST_CASE("Gauss-Hermite rule") {
  const auto r = gauss_hermite(40);
  double m0 = 0, m2 = 0, m4 = 0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    m0 += r.weights[i];
    m2 += r.weights[i] * r.nodes[i] * r.nodes[i];
    m4 += r.weights[i] * std::pow(r.nodes[i], 4);
  }
  CHECK(m0 == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-13));
  CHECK(m2 == doctest::Approx(std::sqrt(M_PI) / 2).epsilon(1e-13));
  CHECK(m4 == doctest::Approx(3 * std::sqrt(M_PI) / 4).epsilon(1e-13));
}

TEST_CASE("Stein solution for simple test functions") {
  const SteinProblem cst{[](double) { return 2.0; }, [](double) { return 0.0; }, 0.5};
  const auto s0 = stein_solve(cst, default_stein_grid(0.5));
  for (double f : s0.f) CHECK(std::abs(f) <= 1e-12);

  const SteinProblem lin{[](double x) { return x; }, [](double) { return 1.0; }, 1.0};
  const auto s1 = stein_solve(lin, default_stein_grid(1.0));
  for (std::size_t k = 0; k < s1.grid.size(); ++k) {
    CHECK(s1.f[k] == doctest::Approx(-1.0).epsilon(1e-10));
    CHECK(std::abs(s1.df[k]) <= 1e-8);
  }
  const auto b = stein_bounds(lin, s1);
  CHECK(b.sup_f == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(b.bound_f == 2.0);
  CHECK(b.holds());

  CHECK_THROWS_AS(stein_solve(lin, {-1.0, 0.0, 1.0}), DomainError);
  CHECK_THROWS_AS(stein_solve(SteinProblem{lin.h, lin.dh, 0.0}, default_stein_grid(1.0)), DomainError);
}

TEST_CASE("Stein solution satisfies the equation and the bounds") {
  const auto family = stein_test_family();
  REQUIRE(family.size() == 20);
  int gh_checked = 0;
  for (double nu : {0.1, 0.25, 1.0}) {
    const auto grid = default_stein_grid(nu);
    for (const auto& fn : family) {
      CAPTURE(fn.name);
      CAPTURE(nu);
      const SteinProblem prob{fn.h, fn.dh, nu};
      const auto sol = stein_solve(prob, grid);
      const auto b = stein_bounds(prob, sol);
      CHECK(b.sup_f <= b.bound_f);
      CHECK(b.sup_df <= b.bound_df);
      CHECK(b.sup_d2f <= b.bound_d2f);

      // f' from a central difference of the solution agrees with the equation
      // away from the grid ends.
      const double h = grid[1] - grid[0];
      for (std::size_t k = 100; k + 100 < grid.size(); k += 97) {
        const double fd = (sol.f[k + 1] - sol.f[k - 1]) / (2 * h);
        CHECK(fd == doctest::Approx(sol.df[k]).epsilon(1e-3).scale(b.sup_df + 1));
      }

      // E[S f(W)] = E h(W) - E h(W) = 0 with f' from the equation, i.e. the
      // adaptive E h must agree with independent rules. Gauss-Hermite is used
      // where it has converged (members analytic in a wide enough strip);
      // Gauss-Kronrod on the real line covers every member.
      auto gh_mean = [&](int order) {
        const auto gh = gauss_hermite(order);
        double e = 0;
        for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
          e += gh.weights[i] * (fn.h(std::sqrt(2.0) * nu * gh.nodes[i]) - sol.mean_h);
        }
        return e / std::sqrt(M_PI);
      };
      const double g120 = gh_mean(120), g160 = gh_mean(160);
      if (std::abs(g120 - g160) <= 1e-12) {
        ++gh_checked;
        CHECK(std::abs(g160) <= 1e-8);
      }
      const double gk = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
          [&](double x) { return std::exp(-0.5 * x * x / (nu * nu)) * fn.h(x); }, -40 * nu, 40 * nu, 25, 1e-14);
      CHECK(std::abs(gk / (nu * std::sqrt(2 * M_PI)) - sol.mean_h) <= 1e-8);
    }
  }
  MESSAGE("Gauss-Hermite identity checked on " << gh_checked << " of 60 (function, nu) pairs");
  CHECK(gh_checked >= 45);
}

TEST_CASE("exclusion generator") {
  const auto sp = make_exclusion_space(30, 11);
  for (const auto& p : exclusion_apply(sp, [](double x) { return x; })) CHECK(p.value == doctest::Approx(-p.z).epsilon(1e-12).scale(1e-12));
  for (const auto& p : exclusion_apply(sp, [](double) { return 4.0; })) CHECK(p.value == 0.0);

  const auto pmf = hypergeom_zeta_pmf(30, 11);
  auto expectation = [&](const std::function<double(double)>& f) {
    const auto v = exclusion_apply(sp, f);
    REQUIRE(v.size() == pmf.size());
    double s = 0;
    for (std::size_t k = 0; k < v.size(); ++k) {
      CHECK(v[k].z == doctest::Approx(pmf.point(k)));
      s += pmf.prob(k) * v[k].value;
    }
    return s;
  };
  CHECK(std::abs(expectation([](double x) { return x * x * x; })) <= 1e-10);
  for (const auto& fn : stein_test_family()) {
    CAPTURE(fn.name);
    CHECK(std::abs(expectation(fn.h)) <= 1e-10);
  }

  const auto refl = make_exclusion_space(30, 19);
  CHECK(refl.reflected);
  CHECK(refl.ell == 11);
  CHECK_FALSE(sp.reflected);
  CHECK_THROWS_AS(make_exclusion_space(30, 0), DomainError);
  CHECK_THROWS_AS(make_exclusion_space(30, 30), DomainError);
}

TEST_CASE("nu^2 is half of gamma at m0^2") {
  for (std::int64_t ell : {1, 5, 16, 31}) {
    const auto sp = make_exclusion_space(64, ell);
    const double m = sp.m0();
    CHECK(sp.nu() * sp.nu() == doctest::Approx(m * m * (1 - m) * (1 - m)).epsilon(1e-14));
  }
}

TEST_CASE("exclusion residual bound") {
  const ThriceDifferentiable lin{[](double x) { return x; }, [](double) { return 1.0; }, [](double) { return 0.0; },
                                 [](double) { return 0.0; }};
  const ThriceDifferentiable sq{[](double x) { return x * x; }, [](double x) { return 2 * x; },
                                [](double) { return 2.0; }, [](double) { return 0.0; }};
  const ThriceDifferentiable cube{[](double x) { return x * x * x; }, [](double x) { return 3 * x * x; },
                                  [](double x) { return 6 * x; }, [](double) { return 6.0; }};
  const ThriceDifferentiable th{[](double x) { return std::tanh(x); },
                                [](double x) { return 1 / std::pow(std::cosh(x), 2); },
                                [](double x) { return -2 * std::tanh(x) / std::pow(std::cosh(x), 2); },
                                [](double x) {
                                  const double c2 = std::pow(std::cosh(x), 2);
                                  const double t = std::tanh(x);
                                  return (4 * t * t - 2 / c2) / c2;
                                }};
  const auto r0 = exclusion_residual(make_exclusion_space(64, 32), lin);
  CHECK(r0.max_residual <= 1e-12);
  const auto sp = make_exclusion_space(64, 20);
  const auto r2 = exclusion_residual(sp, sq);
  CHECK(r2.holds);
  for (const auto& p : r2.points) CHECK(p.residual <= std::abs(p.z) / std::sqrt(64.0) + 1e-12);

  for (auto [n, ell] : std::vector<std::pair<int, int>>{{64, 32}, {256, 64}, {1024, 512}, {1024, 700}}) {
    for (const auto* f : {&sq, &cube, &th}) {
      const auto r = exclusion_residual(make_exclusion_space(n, ell), *f);
      CHECK(r.holds);
    }
  }
}

TEST_CASE("hypergeometric law of Z") {
  const auto p = hypergeom_zeta_pmf(4, 2);
  CHECK(p.variance() == doctest::Approx(1.0 / 12).epsilon(1e-14));
  CHECK(std::abs(p.mean()) <= 1e-15);
  for (std::int64_t n = 2; n <= 12; ++n) {
    for (std::int64_t ell = 1; ell < n; ++ell) {
      // Enumerate every configuration with ell particles; A^1 = first ell sites.
      std::map<std::int64_t, double> counts;
      double total = 0;
      for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (__builtin_popcount(mask) != ell) continue;
        ++counts[__builtin_popcount(mask & ((1u << ell) - 1))];
        ++total;
      }
      const auto pmf = hypergeom_zeta_pmf(n, ell);
      REQUIRE(pmf.size() == counts.size());
      std::size_t k = 0;
      for (auto [y, c] : counts) {
        CHECK(pmf.point(k) == doctest::Approx((y - double(ell * ell) / n) / std::sqrt(double(n))).epsilon(1e-14));
        CHECK(std::abs(pmf.prob(k) - c / total) <= 1e-14);
        ++k;
      }
    }
  }
  for (std::int64_t n : {100, 1000, 4096}) {
    for (std::int64_t ell : {std::int64_t{1}, n / 7, n / 2, n - 3}) {
      const auto pmf = hypergeom_zeta_pmf(n, ell);
      const double m = double(ell) / n;
      CHECK(std::abs(pmf.mean()) <= 1e-12);
      CHECK(std::abs(pmf.variance() - n / (n - 1.0) * m * m * (1 - m) * (1 - m)) <= 1e-12);
    }
  }
  CHECK_THROWS_AS(hypergeom_zeta_pmf(10, 10), DomainError);
}

TEST_CASE("quantitative CLT for the uniform start") {
  std::vector<double> norm, dist;
  for (std::int64_t n = 256; n <= 4096; n *= 2) {
    const auto q = qclt_uniform_start(n, n / 2);
    norm.push_back(q.normalized);
    dist.push_back(q.distance);
    CHECK(q.nu == doctest::Approx(0.25));
  }
  const auto [lo, hi] = std::minmax_element(norm.begin(), norm.end());
  CHECK((*hi - *lo) / *lo < 0.25);
  for (std::size_t k = 1; k < dist.size(); ++k) CHECK(dist[k] < dist[k - 1]);

  // (n, ell) = (4, 2) by Monte Carlo.
  const auto q = qclt_uniform_start(4, 2);
  Rng rng{12};
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u;
  const auto pmf = hypergeom_zeta_pmf(4, 2);
  std::vector<double> est;
  for (int b = 0; b < 20; ++b) {
    std::vector<double> xs(500000), ys(500000);
    for (auto& x : xs) {
      const double r = u(rng);
      x = r < pmf.prob(0) ? pmf.point(0) : r < pmf.prob(0) + pmf.prob(1) ? pmf.point(1) : pmf.point(2);
    }
    for (auto& y : ys) y = q.nu * z(rng);
    est.push_back(transport::w1_sorted(transport::SampleSet1D(xs), transport::SampleSet1D(ys)));
  }
  double m = 0, s2 = 0;
  for (double e : est) m += e / est.size();
  for (double e : est) s2 += (e - m) * (e - m) / (est.size() - 1);
  CHECK(std::abs(m - q.distance) <= 3 * std::sqrt(s2 / est.size()) + 2e-4);
}
