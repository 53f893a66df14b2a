#include "voter/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "voter/errors.hpp"

namespace voter::model {
namespace {

void check_count(const ModelParams& params, CountState k) {
  if (k < 0 || k > params.n) {
    throw DomainError("count " + std::to_string(k) + " outside [0, " + std::to_string(params.n) + "]");
  }
}

void check_blocks(const ModelParams& params, const BlockPartition& part, const BlockCounts& x) {
  if (part.n() != params.n) throw DomainError("partition size does not match n");
  if (x.x0 < 0 || x.x0 > part.n0 || x.x1 < 0 || x.x1 > part.n1) {
    throw DomainError("block counts outside the partition");
  }
}

void check_horizon(double horizon) {
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw DomainError("horizon must be finite and >= 0");
}

double exp_draw(double rate, Rng& rng) {
  return std::exponential_distribution<double>(rate)(rng);
}

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

// One jump of the count chain.
CountState count_step(const ModelParams& params, CountState k, Rng& rng) {
  const auto r = count_rates(params, k);
  return uniform01(rng) * r.total() < r.up ? k + 1 : k - 1;
}

BlockCounts block_step(const BlockRates& r, BlockCounts x, Rng& rng) {
  double u = uniform01(rng) * r.total();
  if ((u -= r.up[0]) < 0.0) return {x.x0 + 1, x.x1};
  if ((u -= r.up[1]) < 0.0) return {x.x0, x.x1 + 1};
  if ((u -= r.down[0]) < 0.0) return {x.x0 - 1, x.x1};
  // Guard against the last bucket being empty through rounding.
  if (x.x1 > 0) return {x.x0, x.x1 - 1};
  return {x.x0 - 1, x.x1};
}

// Poisson(lambda) weights on a window [lo, lo + w.size()) whose missing mass is
// below tol.
struct PoissonWindow {
  std::int64_t lo = 0;
  std::vector<double> w;
  double mass = 0.0;
};

PoissonWindow poisson_window(double lambda, double tol) {
  PoissonWindow out;
  if (lambda <= 0.0) {
    out.w = {1.0};
    out.mass = 1.0;
    return out;
  }
  const auto mode = static_cast<std::int64_t>(std::floor(lambda));
  const double log_mode = -lambda + static_cast<double>(mode) * std::log(lambda) - std::lgamma(mode + 1.0);
  std::vector<double> right{std::exp(log_mode)};
  std::vector<double> left;
  double mass = right.front();
  std::int64_t hi = mode;
  std::int64_t lo = mode;
  // Grow both sides geometrically; each step the term ratio is < 1 away from
  // the mode, so the remaining mass on a side is bounded by term/(1 - ratio).
  while (true) {
    const double next_right = right.back() * lambda / static_cast<double>(hi + 1);
    const double ratio_r = lambda / static_cast<double>(hi + 2);
    const double tail_r = ratio_r < 1.0 ? next_right / (1.0 - ratio_r) : std::numeric_limits<double>::infinity();
    double tail_l = 0.0;
    double next_left = 0.0;
    if (lo > 0) {
      const double cur = left.empty() ? right.front() : left.back();
      next_left = cur * static_cast<double>(lo) / lambda;
      const double ratio_l = static_cast<double>(lo - 1) / lambda;
      tail_l = next_left / (1.0 - ratio_l);
    }
    if (tail_r + tail_l <= 0.5 * tol) break;
    if (tail_r >= tail_l || lo == 0) {
      right.push_back(next_right);
      mass += next_right;
      ++hi;
    } else {
      left.push_back(next_left);
      mass += next_left;
      --lo;
    }
  }
  out.lo = lo;
  out.w.assign(left.rbegin(), left.rend());
  out.w.insert(out.w.end(), right.begin(), right.end());
  out.mass = mass;
  return out;
}

double max_total_rate(const ModelParams& params) {
  double m = 0.0;
  for (CountState k = 0; k <= params.n; ++k) m = std::max(m, count_rates(params, k).total());
  return m;
}

}  // namespace

ModelParams::ModelParams(std::int64_t n_, double a_, double b_) : n(n_), a(a_), b(b_) { validate(); }

void ModelParams::validate() const {
  if (n < 1) throw DomainError("n must be >= 1");
  if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("a must be finite and > 0");
  if (!(b > 0.0) || !std::isfinite(b)) throw DomainError("b must be finite and > 0");
}

CountState count(const Config& eta) {
  return std::accumulate(eta.begin(), eta.end(), CountState{0},
                         [](CountState s, std::uint8_t v) { return s + (v != 0); });
}

BlockPartition::BlockPartition(std::int64_t n0_, std::int64_t n1_) : n0(n0_), n1(n1_) {
  if (n0 < 1 || n1 < 1) throw DomainError("both blocks of the partition must be nonempty");
}

CountRates count_rates(const ModelParams& params, CountState k) {
  check_count(params, k);
  const double n = static_cast<double>(params.n);
  const double kk = static_cast<double>(k);
  return {(n - kk) * (params.a + kk) / n, kk * (params.b + n - kk) / n};
}

BlockRates block_rates(const ModelParams& params, const BlockPartition& part, const BlockCounts& x) {
  check_blocks(params, part, x);
  const double n = static_cast<double>(params.n);
  const double X = static_cast<double>(x.total());
  BlockRates r;
  for (int i = 0; i < 2; ++i) {
    const double ni = static_cast<double>(part.size(i));
    const double xi = static_cast<double>(x[i]);
    r.up[i] = (ni - xi) * (params.a + X) / n;
    r.down[i] = xi * (params.b + n - X) / n;
  }
  return r;
}

CountState simulate_count(const ModelParams& params, CountState k0, double horizon, Rng& rng) {
  const double h[1] = {horizon};
  return simulate_count_path(params, k0, h, rng).front();
}

std::vector<CountState> simulate_count_path(const ModelParams& params, CountState k0,
                                            std::span<const double> horizons, Rng& rng) {
  check_count(params, k0);
  std::vector<CountState> out;
  out.reserve(horizons.size());
  CountState k = k0;
  double t = 0.0;
  double prev = 0.0;
  // Time of the next event; drawn lazily so that observing at a horizon does
  // not perturb the path.
  double next = t + exp_draw(count_rates(params, k).total(), rng);
  for (double h : horizons) {
    check_horizon(h);
    if (h < prev) throw DomainError("horizons must be nondecreasing");
    prev = h;
    while (next <= h) {
      k = count_step(params, k, rng);
      t = next;
      next = t + exp_draw(count_rates(params, k).total(), rng);
    }
    out.push_back(k);
  }
  return out;
}

BlockCounts simulate_blocks(const ModelParams& params, const BlockPartition& part, const BlockCounts& x0,
                            double horizon, Rng& rng) {
  const double h[1] = {horizon};
  return simulate_blocks_path(params, part, x0, h, rng).front();
}

std::vector<BlockCounts> simulate_blocks_path(const ModelParams& params, const BlockPartition& part,
                                              const BlockCounts& x0, std::span<const double> horizons,
                                              Rng& rng) {
  check_blocks(params, part, x0);
  std::vector<BlockCounts> out;
  out.reserve(horizons.size());
  BlockCounts x = x0;
  BlockRates r = block_rates(params, part, x);
  double next = exp_draw(r.total(), rng);
  double prev = 0.0;
  for (double h : horizons) {
    check_horizon(h);
    if (h < prev) throw DomainError("horizons must be nondecreasing");
    prev = h;
    while (next <= h) {
      x = block_step(r, x, rng);
      r = block_rates(params, part, x);
      next += exp_draw(r.total(), rng);
    }
    out.push_back(x);
  }
  return out;
}

std::vector<double> evolve_law(const ModelParams& params, std::span<const double> law, double dt, double tol,
                               std::int64_t cap) {
  params.validate();
  if (params.n > cap) {
    throw CapacityError("n = " + std::to_string(params.n) + " exceeds the dense cap " + std::to_string(cap));
  }
  if (static_cast<std::int64_t>(law.size()) != params.n + 1) throw DomainError("law must have n+1 entries");
  if (!(tol > 0.0 && tol <= 1e-6)) throw DomainError("tol must lie in (0, 1e-6]");
  check_horizon(dt);
  std::vector<double> cur(law.begin(), law.end());
  if (dt == 0.0) return cur;

  const std::size_t size = cur.size();
  std::vector<double> up(size), down(size), stay(size);
  const double lambda_rate = 1.05 * max_total_rate(params);
  for (std::size_t k = 0; k < size; ++k) {
    const auto r = count_rates(params, static_cast<CountState>(k));
    up[k] = r.up / lambda_rate;
    down[k] = r.down / lambda_rate;
    stay[k] = 1.0 - up[k] - down[k];
  }
  const auto window = poisson_window(lambda_rate * dt, tol);
  const std::int64_t last = window.lo + static_cast<std::int64_t>(window.w.size()) - 1;

  std::vector<double> acc(size, 0.0);
  std::vector<double> nxt(size);
  for (std::int64_t step = 0;; ++step) {
    if (step >= window.lo) {
      const double w = window.w[static_cast<std::size_t>(step - window.lo)];
      for (std::size_t k = 0; k < size; ++k) acc[k] += w * cur[k];
    }
    if (step == last) break;
    // Row-vector times the uniformized jump matrix.
    for (std::size_t k = 0; k < size; ++k) {
      double v = stay[k] * cur[k];
      if (k > 0) v += up[k - 1] * cur[k - 1];
      if (k + 1 < size) v += down[k + 1] * cur[k + 1];
      nxt[k] = v;
    }
    cur.swap(nxt);
  }
  const double total = std::accumulate(acc.begin(), acc.end(), 0.0);
  for (auto& v : acc) v = std::max(0.0, v / total);
  return acc;
}

Pmf transient_law(const ModelParams& params, CountState k0, double t, double tol, std::int64_t cap) {
  params.validate();
  check_count(params, k0);
  if (params.n > cap) {
    throw CapacityError("n = " + std::to_string(params.n) + " exceeds the dense cap " + std::to_string(cap));
  }
  std::vector<double> law(static_cast<std::size_t>(params.n + 1), 0.0);
  law[static_cast<std::size_t>(k0)] = 1.0;
  return Pmf::on_integers(evolve_law(params, law, t, tol, cap), 1e-9);
}

Pmf stationary_pmf(const ModelParams& params) {
  params.validate();
  const std::int64_t n = params.n;
  const double a = params.a;
  const double b = params.b;
  // Start at the mode of the log pmf and apply the exact one-step ratio
  // P(k+1)/P(k) = (n-k)(a+k) / ((k+1)(b+n-k-1)) outward; this keeps detailed
  // balance at rounding level for every k.
  auto log_p = [&](double k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + std::lgamma(a + k) +
           std::lgamma(b + n - k) - std::lgamma(a + b + n);
  };
  std::int64_t anchor = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::int64_t k = 0; k <= n; ++k) {
    const double v = log_p(static_cast<double>(k));
    if (v > best) {
      best = v;
      anchor = k;
    }
  }
  std::vector<double> p(static_cast<std::size_t>(n + 1), 0.0);
  p[static_cast<std::size_t>(anchor)] = 1.0;
  for (std::int64_t k = anchor; k < n; ++k) {
    const double kk = static_cast<double>(k);
    p[k + 1] = p[k] * ((n - kk) * (a + kk)) / ((kk + 1.0) * (b + n - kk - 1.0));
  }
  for (std::int64_t k = anchor; k > 0; --k) {
    const double km = static_cast<double>(k - 1);
    p[k - 1] = p[k] * ((km + 1.0) * (b + n - km - 1.0)) / ((n - km) * (a + km));
  }
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& v : p) v /= total;
  return Pmf::on_integers(std::move(p));
}

CountState sample_stationary(const ModelParams& params, Rng& rng) {
  params.validate();
  const double g1 = std::gamma_distribution<double>(params.a, 1.0)(rng);
  const double g2 = std::gamma_distribution<double>(params.b, 1.0)(rng);
  const double p = g1 / (g1 + g2);
  return std::binomial_distribution<std::int64_t>(params.n, p)(rng);
}

BlockCounts sample_uniform_given_count(const ModelParams& params, const BlockPartition& part, CountState k,
                                       Rng& rng) {
  check_count(params, k);
  if (part.n() != params.n) throw DomainError("partition size does not match n");
  const std::int64_t n = params.n;
  const std::int64_t marked = part.n1;
  const std::int64_t lo = std::max<std::int64_t>(0, k - part.n0);
  const std::int64_t hi = std::min(k, marked);
  // Inversion over the support ordered mode, mode+1, mode-1, mode+2, ...; the
  // walk is O(sd) on average and never touches underflowing tail terms first.
  auto log_p = [&](std::int64_t y) {
    auto lchoose = [](double m, double r) { return std::lgamma(m + 1) - std::lgamma(r + 1) - std::lgamma(m - r + 1); };
    return lchoose(marked, y) + lchoose(n - marked, k - y) - lchoose(n, k);
  };
  auto ratio_up = [&](std::int64_t y) {  // P(y+1)/P(y)
    return static_cast<double>(marked - y) * static_cast<double>(k - y) /
           (static_cast<double>(y + 1) * static_cast<double>(n - marked - k + y + 1));
  };
  std::int64_t mode = static_cast<std::int64_t>(
      std::floor((static_cast<double>(k) + 1.0) * (static_cast<double>(marked) + 1.0) / (static_cast<double>(n) + 2.0)));
  mode = std::clamp(mode, lo, hi);
  const double p_mode = std::exp(log_p(mode));
  double u = uniform01(rng) - p_mode;
  if (u < 0.0) return {k - mode, mode};
  std::int64_t up = mode, down = mode;
  double p_up = p_mode, p_down = p_mode;
  while (up < hi || down > lo) {
    if (up < hi) {
      p_up *= ratio_up(up);
      ++up;
      if ((u -= p_up) < 0.0) return {k - up, up};
    }
    if (down > lo) {
      p_down /= ratio_up(down - 1);
      --down;
      if ((u -= p_down) < 0.0) return {k - down, down};
    }
  }
  // Rounding left a sliver of mass unassigned; return the mode.
  return {k - mode, mode};
}

std::pair<Config, Config> subset_coupling(const BlockPartition& part, const BlockCounts& x, const BlockCounts& y,
                                         Rng& rng) {
  for (const auto* c : {&x, &y}) {
    if (c->x0 < 0 || c->x0 > part.n0 || c->x1 < 0 || c->x1 > part.n1) {
      throw DomainError("block counts do not fit the partition");
    }
  }
  const auto n = static_cast<std::size_t>(part.n());
  Config eta(n, 0), xi(n, 0);
  std::size_t offset = 0;
  for (int i = 0; i < 2; ++i) {
    const auto size = static_cast<std::size_t>(part.size(i));
    std::vector<std::size_t> order(size);
    std::iota(order.begin(), order.end(), offset);
    const auto big = static_cast<std::size_t>(std::max(x[i], y[i]));
    // Partial Fisher-Yates: the first `big` entries form a uniform subset in
    // uniform order, so any prefix of it is a uniform subset of the subset.
    for (std::size_t j = 0; j < big; ++j) {
      std::uniform_int_distribution<std::size_t> pick(j, size - 1);
      std::swap(order[j], order[pick(rng)]);
    }
    for (std::size_t j = 0; j < static_cast<std::size_t>(x[i]); ++j) eta[order[j]] = 1;
    for (std::size_t j = 0; j < static_cast<std::size_t>(y[i]); ++j) xi[order[j]] = 1;
    offset += size;
  }
  return {std::move(eta), std::move(xi)};
}

BlockCounts block_counts(const BlockPartition& part, const Config& eta) {
  if (static_cast<std::int64_t>(eta.size()) != part.n()) throw DomainError("configuration size does not match partition");
  BlockCounts c;
  for (std::size_t j = 0; j < eta.size(); ++j) {
    if (eta[j] == 0) continue;
    if (static_cast<std::int64_t>(j) < part.n0) ++c.x0;
    else ++c.x1;
  }
  return c;
}

std::int64_t hamming(const Config& lhs, const Config& rhs) {
  if (lhs.size() != rhs.size()) throw DomainError("configurations differ in size");
  std::int64_t d = 0;
  for (std::size_t j = 0; j < lhs.size(); ++j) d += (lhs[j] != 0) != (rhs[j] != 0);
  return d;
}

double sup_norm(const std::function<double(double)>& g, double lo, double hi, int points) {
  if (points < 2 || !(hi >= lo)) throw DomainError("sup_norm: need points >= 2 and lo <= hi");
  double s = 0.0;
  for (int j = 0; j < points; ++j) {
    const double x = lo + (hi - lo) * j / (points - 1);
    s = std::max(s, std::abs(g(x)));
  }
  return s;
}

double drift_F(const ModelParams& params, double m) { return params.a - (params.a + params.b) * m; }

double variance_G(const ModelParams& params, double m) {
  return 2.0 * m * (1.0 - m) + (params.a * (1.0 - m) + params.b * m) / static_cast<double>(params.n);
}

GeneratorResidual generator_residual_1d(const ModelParams& params, const SmoothFn& fn, CountState k) {
  const auto r = count_rates(params, k);
  const double n = static_cast<double>(params.n);
  const double m = static_cast<double>(k) / n;
  const double h = 1.0 / n;
  const double f0 = fn.f(m);
  double nl = 0.0;
  if (r.up > 0.0) nl += n * r.up * (fn.f(m + h) - f0);
  if (r.down > 0.0) nl += n * r.down * (fn.f(m - h) - f0);
  const double limit = (params.a * (1.0 - m) - params.b * m) * fn.d1(m) + m * (1.0 - m) * fn.d2(m);

  GeneratorResidual out;
  out.residual = nl - limit;

  // Taylor expansion of n L_n f to fourth order with n*up + n*down = n^2 G(m)
  // and n*up - n*down = n F(m):
  //   n L_n f - Lambda f = (a(1-m)+bm)/(2n) f'' + F f'''/(6n^2) + R,
  //   |R| <= G(m) sup|f''''| / (24 n^2).
  // Global constants |F| <= max(a,b) and G <= 1/2 + max(a,b)/n; sup norms are
  // taken over [-1/n, 1 + 1/n].
  const double c = std::max(params.a, params.b);
  const double lo = -h;
  const double hi = 1.0 + h;
  auto norm = [&](const std::function<double(double)>& g) { return g ? sup_norm(g, lo, hi) : 0.0; };
  const double n2 = norm(fn.d2);
  const double n3 = norm(fn.d3);
  const double n4 = norm(fn.d4);
  out.bound = c / (2.0 * n) * n2 + c * n3 / (6.0 * n * n) + (0.5 + c / n) * n4 / (24.0 * n * n);
  // Cancellation in the finite differences.
  const double eps = std::numeric_limits<double>::epsilon();
  out.bound += 8.0 * eps * n * n * variance_G(params, m) * std::max({std::abs(f0), 1.0});
  return out;
}

}  // namespace voter::model
