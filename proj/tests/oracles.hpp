#pragma once

// Independent reference computations used only by the tests.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

namespace oracle {

inline double log_choose(double n, double k) { return std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1); }

inline double log_beta(double x, double y) { return std::lgamma(x) + std::lgamma(y) - std::lgamma(x + y); }

// C(n,k) B(a+k, b+n-k) / B(a,b), straight from the definition.
inline double beta_binomial(std::int64_t n, double a, double b, std::int64_t k) {
  return std::exp(log_choose(n, k) + log_beta(a + k, b + n - k) - log_beta(a, b));
}

// P(Y = y) for y marked items among `draws` taken from `total` with `marked` marked.
inline double hypergeometric(std::int64_t total, std::int64_t marked, std::int64_t draws, std::int64_t y) {
  if (y < 0 || y > marked || draws - y > total - marked || draws - y < 0) return 0.0;
  return std::exp(log_choose(marked, y) + log_choose(total - marked, draws - y) - log_choose(total, draws));
}

// Classical fourth-order Runge-Kutta for y' = f(t, y).
template <std::size_t D>
std::array<double, D> rk4(const std::function<std::array<double, D>(double, const std::array<double, D>&)>& f,
                          std::array<double, D> y, double t_end, int steps) {
  const double h = t_end / steps;
  auto axpy = [](const std::array<double, D>& a, double s, const std::array<double, D>& b) {
    std::array<double, D> r;
    for (std::size_t i = 0; i < D; ++i) r[i] = a[i] + s * b[i];
    return r;
  };
  double t = 0.0;
  for (int k = 0; k < steps; ++k) {
    const auto k1 = f(t, y);
    const auto k2 = f(t + h / 2, axpy(y, h / 2, k1));
    const auto k3 = f(t + h / 2, axpy(y, h / 2, k2));
    const auto k4 = f(t + h, axpy(y, h, k3));
    for (std::size_t i = 0; i < D; ++i) y[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    t += h;
  }
  return y;
}

// Kolmogorov forward equation of a birth-death chain, integrated by RK4.
inline std::vector<double> birth_death_forward(const std::vector<double>& up, const std::vector<double>& down,
                                               std::vector<double> p, double t, int steps) {
  const std::size_t m = p.size();
  auto deriv = [&](const std::vector<double>& q) {
    std::vector<double> d(m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      d[k] -= (up[k] + down[k]) * q[k];
      if (k > 0) d[k] += up[k - 1] * q[k - 1];
      if (k + 1 < m) d[k] += down[k + 1] * q[k + 1];
    }
    return d;
  };
  const double h = t / steps;
  for (int s = 0; s < steps; ++s) {
    auto k1 = deriv(p);
    std::vector<double> tmp(m);
    for (std::size_t k = 0; k < m; ++k) tmp[k] = p[k] + h / 2 * k1[k];
    auto k2 = deriv(tmp);
    for (std::size_t k = 0; k < m; ++k) tmp[k] = p[k] + h / 2 * k2[k];
    auto k3 = deriv(tmp);
    for (std::size_t k = 0; k < m; ++k) tmp[k] = p[k] + h * k3[k];
    auto k4 = deriv(tmp);
    for (std::size_t k = 0; k < m; ++k) p[k] += h / 6 * (k1[k] + 2 * k2[k] + 2 * k3[k] + k4[k]);
  }
  return p;
}

// Minimum over all permutations of the summed cost, divided by n.
inline double brute_force_matching(std::size_t n, const std::function<double(std::size_t, std::size_t)>& cost) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += cost(i, perm[i]);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(n);
}

// Integral of |F - G| for two CDFs tabulated on a common integer grid.
inline double w1_on_integers(const std::vector<double>& p, const std::vector<double>& q) {
  double fp = 0.0, fq = 0.0, s = 0.0;
  for (std::size_t k = 0; k + 1 < std::max(p.size(), q.size()); ++k) {
    fp += k < p.size() ? p[k] : 0.0;
    fq += k < q.size() ? q[k] : 0.0;
    s += std::abs(fp - fq);
  }
  return s;
}

// Typical W1 between an N-sample empirical law and its source law p (on
// integers): sum_k sqrt(F_k(1-F_k)/N). Used as the Monte Carlo standard error
// scale of one-dimensional W1 estimates.
inline double w1_noise_scale(const std::vector<double>& p, std::size_t samples) {
  double f = 0.0, s = 0.0;
  for (std::size_t k = 0; k + 1 < p.size(); ++k) {
    f += p[k];
    s += std::sqrt(std::max(0.0, f * (1.0 - f)) / static_cast<double>(samples));
  }
  return s;
}

}  // namespace oracle
