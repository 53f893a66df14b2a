#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "voter/diffusion.hpp"
#include "voter/errors.hpp"
#include "voter/experiments.hpp"
#include "voter/model.hpp"
#include "voter/transport.hpp"

namespace voter::experiments {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
// Seed for the sample clouds of exact checks; independent of cfg.seed.
constexpr std::uint64_t kExactSeed = 0x5eed'0f'e8ac7ULL;

InvariantResult upper(std::string name, double measured, double threshold, std::string detail) {
  return {std::move(name), measured <= threshold, measured, threshold, std::move(detail)};
}

InvariantResult detailed_balance(const ExperimentConfig& cfg) {
  double worst = 0.0;
  for (std::int64_t n : {std::int64_t{10}, std::int64_t{100}, std::int64_t{1000}, cfg.n}) {
    const model::ModelParams params(n, cfg.a, cfg.b);
    const auto pmf = model::stationary_pmf(params);
    worst = std::max(worst, detailed_balance_error(
                                n,
                                [&](std::int64_t k) {
                                  const auto r = model::count_rates(params, k);
                                  return std::make_pair(r.up, r.down);
                                },
                                pmf.probs()));
  }
  return upper("detailed_balance", worst, 1e-12, "max relative violation, n in {10,100,1000,n}");
}

InvariantResult variance_identity() {
  double worst = 0.0;
  for (std::int64_t n = 4; n <= 4096; n *= 2) {
    for (std::int64_t ell : {std::int64_t{1}, n / 4, n / 2, 3 * n / 4, n - 1}) {
      const auto pmf = stein::hypergeom_zeta_pmf(n, ell);
      const double m = static_cast<double>(ell) / static_cast<double>(n);
      const double target = static_cast<double>(n) / static_cast<double>(n - 1) * m * m * (1 - m) * (1 - m);
      worst = std::max(worst, std::abs(pmf.variance() - target));
    }
  }
  return upper("variance_identity", worst, 1e-12, "|Var Z - n/(n-1) m0^2 (1-m0)^2|, n = 4..4096");
}

std::vector<transport::Point2> cloud(std::size_t size, std::uint64_t tag) {
  auto rng = make_stream(kExactSeed, {tag});
  std::normal_distribution<double> normal;
  std::vector<transport::Point2> pts(size);
  for (auto& p : pts) p = {normal(rng), 2.0 * normal(rng)};
  return pts;
}

InvariantResult translation_1d() {
  auto rng = make_stream(kExactSeed, {1});
  std::normal_distribution<double> normal;
  std::vector<double> xs(1000);
  for (auto& x : xs) x = normal(rng);
  double worst = 0.0;
  double scale = 0.0;
  for (double x : xs) scale = std::max(scale, std::abs(x));
  for (double c : {-2.5, -0.37, 1e-3, 0.37, 4.0}) {
    std::vector<double> ys;
    for (double x : xs) ys.push_back(x + c);
    const double w = transport::w1_sorted(transport::SampleSet1D(xs), transport::SampleSet1D(ys));
    worst = std::max(worst, std::abs(w - std::abs(c)));
  }
  return upper("translation_1d", worst, 8 * kEps * (scale + 4.0), "|W1(X, X + c) - |c||");
}

InvariantResult translation_2d() {
  transport::SampleSet2D xs{cloud(200, 2)};
  double worst = 0.0;
  for (transport::Point2 v : {transport::Point2{0.3, -0.4}, transport::Point2{-1.0, 2.0}}) {
    transport::SampleSet2D ys = xs;
    for (auto& p : ys.points) p = {p[0] + v[0], p[1] + v[1]};
    const double w = transport::w1_matching(xs, ys);
    worst = std::max(worst, std::abs(w - std::hypot(v[0], v[1])));
  }
  return upper("translation_2d", worst, 1e-12, "|W1(X, X + v) - |v|| by matching");
}

InvariantResult pushforward() {
  const transport::SampleSet2D xs{cloud(150, 3)};
  transport::SampleSet2D ys{cloud(150, 4)};
  for (auto& p : ys.points) p[0] += 0.5;
  double worst = -std::numeric_limits<double>::infinity();
  for (auto map : std::vector<std::function<double(const transport::Point2&)>>{
           [](const transport::Point2& p) { return p[0]; },
           [](const transport::Point2& p) { return 0.6 * p[0] + 0.8 * p[1]; },
           [](const transport::Point2& p) { return std::sin(p[1]); }}) {
    const auto r = transport::pushforward_check(xs, ys, map);
    worst = std::max(worst, r.d1 - r.d2);
  }
  return upper("pushforward", worst, 1e-12, "max of W1(f X, f Y) - W1(X, Y) over 1-Lipschitz maps");
}

InvariantResult stein_bounds_check() {
  double worst = 0.0;
  for (double nu : {0.1, 0.25, 1.0}) {
    const auto grid = stein::default_stein_grid(nu);
    for (const auto& fn : stein::stein_test_family()) {
      const stein::SteinProblem prob{fn.h, fn.dh, nu};
      const auto b = stein::stein_bounds(prob, stein::stein_solve(prob, grid));
      worst = std::max({worst, b.sup_f / b.bound_f, b.sup_df / b.bound_df, b.sup_d2f / b.bound_d2f});
    }
  }
  return upper("stein_bounds", worst, 1.0, "max sup/bound over 20 functions and nu in {0.1,0.25,1}");
}

InvariantResult stein_linear() {
  double worst = 0.0;
  for (double nu : {0.1, 0.25, 1.0}) {
    const stein::SteinProblem prob{[](double x) { return x; }, [](double) { return 1.0; }, nu};
    const auto sol = stein::stein_solve(prob, stein::default_stein_grid(nu));
    for (double f : sol.f) worst = std::max(worst, std::abs(f + 1.0));
  }
  return upper("stein_linear", worst, 1e-10, "max |f_h + 1| for h(x) = x");
}

InvariantResult gaussian_coupling_check() {
  double worst = -std::numeric_limits<double>::infinity();
  struct Case {
    double vx, vy, cov, vz;
  };
  for (const Case& c : {Case{1.0, 1.0, 0.0, 1.0}, Case{2.0, 1.0, 0.0, 1.0}, Case{1.0, 1.2, 0.3, 0.5},
                        Case{0.0625, 0.066, 0.01, 0.03}, Case{3.0, 2.5, -0.8, 2.0}}) {
    const auto k = diffusion::gaussian_coupling(c.vx, c.vy, c.cov, c.vz);
    worst = std::max(worst, k.mse - k.bound);
  }
  return upper("gaussian_coupling", worst, 1e-14, "max mse - bound");
}

InvariantResult exclusion_residual_check() {
  const stein::ThriceDifferentiable square{[](double x) { return x * x; }, [](double x) { return 2 * x; },
                                           [](double) { return 2.0; }, [](double) { return 0.0; }};
  const stein::ThriceDifferentiable cube{[](double x) { return x * x * x; }, [](double x) { return 3 * x * x; },
                                         [](double x) { return 6 * x; }, [](double) { return 6.0; }};
  const stein::ThriceDifferentiable th{
      [](double x) { return std::tanh(x); }, [](double x) { return 1.0 / std::pow(std::cosh(x), 2); },
      [](double x) { return -2.0 * std::tanh(x) / std::pow(std::cosh(x), 2); },
      [](double x) {
        const double c2 = std::pow(std::cosh(x), 2);
        const double t = std::tanh(x);
        return (4 * t * t - 2 / c2) / c2;
      }};
  double worst = 0.0;
  bool holds = true;
  for (auto [n, ell] : {std::pair<std::int64_t, std::int64_t>{64, 32}, {256, 64}, {1024, 512}}) {
    for (const auto* f : {&square, &cube, &th}) {
      const auto r = stein::exclusion_residual(stein::make_exclusion_space(n, ell), *f);
      holds = holds && r.holds;
      worst = std::max(worst, r.max_ratio);
    }
  }
  InvariantResult res{"exclusion_residual", holds, worst, 1.0, "pointwise residual <= bound; measured is max ratio"};
  return res;
}

InvariantResult exclusion_stationarity(const ExperimentConfig& cfg) {
  const std::int64_t n = std::max<std::int64_t>(cfg.n, 2);
  const std::int64_t ell = std::clamp<std::int64_t>(std::llround(cfg.m0 * static_cast<double>(n)), 1, n - 1);
  const auto space = stein::make_exclusion_space(n, ell);
  const auto pmf = stein::hypergeom_zeta_pmf(n, ell);
  double worst = 0.0;
  for (auto f : std::vector<std::function<double(double)>>{
           [](double x) { return x * x; }, [](double x) { return x * x * x; },
           [](double x) { return std::tanh(3 * x); }, [](double x) { return std::exp(x); }}) {
    const auto pts = stein::exclusion_apply(space, f);
    if (pts.size() != pmf.size()) return {"exclusion_stationarity", false, 1.0, 0.0, "support mismatch"};
    double acc = 0.0;
    double scale = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (std::abs(pts[k].z - pmf.point(k)) > 1e-12) {
        return {"exclusion_stationarity", false, 1.0, 0.0, "support mismatch"};
      }
      acc += pmf.prob(k) * pts[k].value;
      scale += pmf.prob(k) * std::abs(pts[k].value);
    }
    worst = std::max(worst, std::abs(acc) / std::max(scale, 1e-300));
  }
  return upper("exclusion_stationarity", worst, 1e-12, "relative |E L f(Z)| under the hypergeometric law");
}

InvariantResult coupling_l1(const ExperimentConfig& cfg) {
  const std::int64_t n = std::max<std::int64_t>(cfg.n, 2);
  const auto part = model::BlockPartition::from_count(n, std::clamp<std::int64_t>(n / 3, 1, n - 1));
  auto rng = make_stream(kExactSeed, {5});
  std::int64_t worst = 0;
  for (int rep = 0; rep < 200; ++rep) {
    std::uniform_int_distribution<std::int64_t> k0(0, part.n0), k1(0, part.n1);
    const model::BlockCounts x{k0(rng), k1(rng)};
    const model::BlockCounts y{k0(rng), k1(rng)};
    const auto [eta, xi] = model::subset_coupling(part, x, y, rng);
    const std::int64_t l1 = std::abs(x.x0 - y.x0) + std::abs(x.x1 - y.x1);
    std::int64_t err = std::abs(model::hamming(eta, xi) - l1);
    if (!(model::block_counts(part, eta) == x) || !(model::block_counts(part, xi) == y)) err = n;
    worst = std::max(worst, err);
  }
  return upper("coupling_l1", static_cast<double>(worst), 0.0, "|hamming - l1 block distance| over 200 pairs");
}

InvariantResult generator_residual(const ExperimentConfig& cfg) {
  const model::ModelParams params(std::max<std::int64_t>(cfg.n, 1), cfg.a, cfg.b);
  const model::SmoothFn cube{[](double x) { return x * x * x; }, [](double x) { return 3 * x * x; },
                             [](double x) { return 6 * x; }, [](double) { return 6.0; }, [](double) { return 0.0; }};
  const model::SmoothFn sine{[](double x) { return std::sin(3 * x); }, [](double x) { return 3 * std::cos(3 * x); },
                             [](double x) { return -9 * std::sin(3 * x); },
                             [](double x) { return -27 * std::cos(3 * x); },
                             [](double x) { return 81 * std::sin(3 * x); }};
  double worst = 0.0;
  for (const auto* f : {&cube, &sine}) {
    for (std::int64_t k = 0; k <= params.n; ++k) {
      const auto r = model::generator_residual_1d(params, *f, k);
      if (r.bound > 0.0) worst = std::max(worst, std::abs(r.residual) / r.bound);
    }
  }
  return upper("generator_residual", worst, 1.0, "max |n L_n f - diffusion generator| / bound");
}

std::vector<InvariantResult> probe(const ExperimentConfig& cfg) {
  const diffusion::WFParams wf(cfg.a, cfg.b);
  diffusion::ProbeOptions opts;
  opts.paths = cfg.diagnostic_paths;
  opts.seed = cfg.seed;
  constexpr double s = 0.0;
  constexpr double t = 0.2;
  const auto lin = diffusion::fp_derivative_probe(wf, [](double x) { return x; }, 1.0, 1, s, t, opts);
  double worst = 0.0;
  for (const auto& p : lin.points) worst = std::max(worst, std::abs(p.estimate / lin.bound - 1.0));
  const auto sq = diffusion::fp_derivative_probe(wf, [](double x) { return x * x; }, 2.0, 2, s, t, opts);
  std::ostringstream detail;
  detail << "ratio " << sq.ratio << " vs bound " << sq.bound;
  return {upper("probe_linear", worst, 0.05, "max relative deviation of dg/dm from exp(-(a+b)(t-s))"),
          upper("probe_square", sq.ratio / sq.bound, 1.10, detail.str())};
}

}  // namespace

ScenarioOutput run_validate(const ExperimentConfig& cfg) {
  ScenarioOutput out;
  using Check = std::function<std::vector<InvariantResult>()>;
  auto one = [](auto fn) -> Check { return [fn] { return std::vector<InvariantResult>{fn()}; }; };
  const std::vector<std::pair<std::string, Check>> checks{
      {"detailed_balance", one([&] { return detailed_balance(cfg); })},
      {"variance_identity", one(variance_identity)},
      {"translation_1d", one(translation_1d)},
      {"translation_2d", one(translation_2d)},
      {"pushforward", one(pushforward)},
      {"stein_bounds", one(stein_bounds_check)},
      {"stein_linear", one(stein_linear)},
      {"gaussian_coupling", one(gaussian_coupling_check)},
      {"exclusion_residual", one(exclusion_residual_check)},
      {"exclusion_stationarity", one([&] { return exclusion_stationarity(cfg); })},
      {"coupling_l1", one([&] { return coupling_l1(cfg); })},
      {"generator_residual", one([&] { return generator_residual(cfg); })},
      {"probe", [&] { return probe(cfg); }},
  };
  std::vector<std::vector<InvariantResult>> results(checks.size());
  std::vector<double> runtimes(checks.size());
  parallel_for(checks.size(), cfg.workers, [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    try {
      results[i] = checks[i].second();
    } catch (const std::exception& e) {
      results[i] = {{checks[i].first, false, std::numeric_limits<double>::quiet_NaN(), 0.0,
                     std::string("error: ") + e.what()}};
    }
    runtimes[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });
  bool all = true;
  for (std::size_t i = 0; i < results.size(); ++i) {
    for (auto& r : results[i]) {
      ResultRecord rec;
      rec.scenario = "validate." + r.name;
      rec.n = cfg.n;
      rec.a = cfg.a;
      rec.b = cfg.b;
      rec.m0 = cfg.m0;
      rec.estimate = r.measured;
      rec.runtime_s = runtimes[i] / static_cast<double>(results[i].size());
      rec.seed = cfg.seed;
      out.records.push_back(rec);
      all = all && r.pass;
      out.invariants.push_back(std::move(r));
    }
  }
  out.summary["all_pass"] = all;
  return out;
}

}  // namespace voter::experiments
