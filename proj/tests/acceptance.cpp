// Acceptance criteria, one PASS/FAIL line each. `--only <id>` runs a single
// criterion (ids: 1 2 3 4a 4b 5 6 7 8). Exit status is nonzero if any
// selected criterion fails.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "voter/diffusion.hpp"
#include "voter/experiments.hpp"
#include "voter/model.hpp"
#include "voter/stein.hpp"
#include "voter/transport.hpp"

using namespace voter;
namespace ex = voter::experiments;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  std::string failures;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      failures += " [fail: " + what + "]";
    }
  }
};

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

const stein::ThriceDifferentiable kSquare{[](double x) { return x * x; }, [](double x) { return 2 * x; },
                                          [](double) { return 2.0; }, [](double) { return 0.0; }};
const stein::ThriceDifferentiable kCube{[](double x) { return x * x * x; }, [](double x) { return 3 * x * x; },
                                        [](double x) { return 6 * x; }, [](double) { return 6.0; }};
const stein::ThriceDifferentiable kTanh{[](double x) { return std::tanh(x); },
                                        [](double x) { return 1.0 / std::pow(std::cosh(x), 2); },
                                        [](double x) { return -2.0 * std::tanh(x) / std::pow(std::cosh(x), 2); },
                                        [](double x) {
                                          const double c2 = std::pow(std::cosh(x), 2);
                                          const double t = std::tanh(x);
                                          return (4 * t * t - 2 / c2) / c2;
                                        }};

void c1(Outcome& o) {
  const auto t0 = Clock::now();
  double db = 0.0;
  for (std::int64_t n : {10, 100, 1000}) {
    const model::ModelParams p(n, 1.0, 1.0);
    const auto pmf = model::stationary_pmf(p).probs();
    db = std::max(db, ex::detailed_balance_error(
                          n,
                          [&](std::int64_t k) {
                            const auto r = model::count_rates(p, k);
                            return std::make_pair(r.up, r.down);
                          },
                          pmf));
  }
  o.require(db <= 1e-12, "detailed balance");

  double var = 0.0;
  for (std::int64_t n = 2; n <= 4096; n *= 2) {
    for (std::int64_t ell : {std::int64_t{1}, n / 4, n / 2, n - 1}) {
      if (ell < 1) continue;
      const double m = static_cast<double>(ell) / static_cast<double>(n);
      const double target = static_cast<double>(n) / static_cast<double>(n - 1) * m * m * (1 - m) * (1 - m);
      var = std::max(var, std::abs(stein::hypergeom_zeta_pmf(n, ell).variance() - target));
    }
  }
  o.require(var <= 1e-12, "variance identity");

  auto rng = make_stream(11, {});
  std::normal_distribution<double> nd;
  std::vector<double> xs(2000);
  for (auto& x : xs) x = 3 * nd(rng);
  double scale = 0.0;
  for (double x : xs) scale = std::max(scale, std::abs(x));
  // Error in units of eps (|c| + max|x|); recursive summation of N terms is
  // bounded by N such units.
  double tr = 0.0;
  for (double c : {-1.5, 0.01, 0.7, 9.0}) {
    std::vector<double> ys;
    for (double x : xs) ys.push_back(x + c);
    const double w = transport::w1_sorted(transport::SampleSet1D(xs), transport::SampleSet1D(ys));
    tr = std::max(tr, std::abs(w - std::abs(c)) / (std::numeric_limits<double>::epsilon() * (std::abs(c) + scale)));
  }
  o.require(tr <= static_cast<double>(xs.size()), "translation");

  double lin = 0.0;
  for (double nu : {0.1, 0.25, 1.0}) {
    const stein::SteinProblem prob{[](double x) { return x; }, [](double) { return 1.0; }, nu};
    for (double f : stein::stein_solve(prob, stein::default_stein_grid(nu)).f) lin = std::max(lin, std::abs(f + 1.0));
  }
  o.require(lin <= 1e-10, "f_h = -1 for h(x) = x");
  const double rt = since(t0);
  o.require(rt < 10.0, "runtime");
  o.detail << "db=" << db << " var=" << var << " translation=" << tr << "eps" << " |f+1|=" << lin << " runtime=" << rt << "s";
}

void c2(Outcome& o) {
  const auto t0 = Clock::now();
  auto rng = make_stream(12, {});
  std::normal_distribution<double> nd;
  double match = 0.0;
  for (std::size_t n = 1; n <= 8; ++n) {
    for (int rep = 0; rep < 5; ++rep) {
      transport::SampleSet2D xs, ys;
      for (std::size_t k = 0; k < n; ++k) {
        xs.points.push_back({nd(rng), nd(rng)});
        ys.points.push_back({nd(rng), nd(rng)});
      }
      for (auto metric : {transport::GroundMetric::euclidean, transport::GroundMetric::l1}) {
        const double brute = oracle::brute_force_matching(n, [&](std::size_t i, std::size_t j) {
                               return transport::distance(xs.points[i], ys.points[j], metric);
                             });
        match = std::max(match, std::abs(transport::w1_matching(xs, ys, metric) - brute));
      }
    }
  }
  o.require(match <= 1e-12, "matching vs brute force");

  double enumeration = 0.0;
  for (std::int64_t n = 2; n <= 12; ++n) {
    for (std::int64_t ell = 1; ell < n; ++ell) {
      std::map<std::int64_t, double> counts;
      double total = 0;
      for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (__builtin_popcount(mask) != ell) continue;
        ++counts[__builtin_popcount(mask & ((1u << ell) - 1))];
        ++total;
      }
      const auto pmf = stein::hypergeom_zeta_pmf(n, ell);
      if (pmf.size() != counts.size()) {
        enumeration = 1.0;
        continue;
      }
      std::size_t k = 0;
      for (auto [y, c] : counts) {
        const double z = (static_cast<double>(y) - static_cast<double>(ell * ell) / static_cast<double>(n)) /
                         std::sqrt(static_cast<double>(n));
        enumeration = std::max({enumeration, std::abs(pmf.prob(k) - c / total), std::abs(pmf.point(k) - z)});
        ++k;
      }
    }
  }
  o.require(enumeration <= 1e-13, "hypergeometric enumeration");

  double ode = 0.0;
  for (auto [n, a, b] : std::vector<std::tuple<std::int64_t, double, double>>{{30, 1.2, 0.5}, {200, 1, 1}, {50, 3, 0.2}}) {
    const model::ModelParams p(n, a, b);
    for (double t : {0.3, 2.0, 25.0}) {
      for (double m0 : {0.0, 0.3, 1.0}) {
        const auto ref = oracle::rk4<1>(
            [&](double, const std::array<double, 1>& m) {
              return std::array<double, 1>{(p.a - (p.a + p.b) * m[0]) / static_cast<double>(p.n)};
            },
            {m0}, t, 2000);
        ode = std::max(ode, std::abs(diffusion::mean_ode(p, m0, t) - ref[0]));
      }
      const model::BlockPartition part(n - n / 3, n / 3);
      const auto m = diffusion::block_mean_ode(p, part, t);
      const auto ref = oracle::rk4<2>(
          [&](double, const std::array<double, 2>& y) {
            const double avg = part.weight(0) * y[0] + part.weight(1) * y[1];
            std::array<double, 2> d;
            for (int i = 0; i < 2; ++i) d[i] = avg - y[i] + (p.a * (1 - y[i]) - p.b * y[i]) / static_cast<double>(p.n);
            return d;
          },
          {0.0, 1.0}, t, 8000);
      ode = std::max({ode, std::abs(m[0] - ref[0]), std::abs(m[1] - ref[1])});
    }
  }
  o.require(ode <= 1e-10, "ODE oracles");
  const double rt = since(t0);
  o.require(rt < 60.0, "runtime");
  o.detail << "matching=" << match << " enumeration=" << enumeration << " ode=" << ode << " runtime=" << rt << "s";
}

void c3(Outcome& o) {
  const auto t0 = Clock::now();
  double worst = 0.0;
  int count = 0;
  for (double nu : {0.1, 0.25, 1.0}) {
    const auto grid = stein::default_stein_grid(nu);
    for (const auto& fn : stein::stein_test_family()) {
      const stein::SteinProblem prob{fn.h, fn.dh, nu};
      const auto b = stein::stein_bounds(prob, stein::stein_solve(prob, grid));
      worst = std::max({worst, b.sup_f / b.bound_f, b.sup_df / b.bound_df, b.sup_d2f / b.bound_d2f});
      o.require(b.holds(), fn.name + " at nu=" + std::to_string(nu));
      ++count;
    }
  }
  o.require(count == 60, "family size");
  double gr = 0.0;
  for (auto [n, ell] : std::vector<std::pair<std::int64_t, std::int64_t>>{{64, 32}, {256, 64}, {1024, 512}}) {
    for (const auto* f : {&kSquare, &kCube, &kTanh}) {
      const auto r = stein::exclusion_residual(stein::make_exclusion_space(n, ell), *f);
      o.require(r.holds, "exclusion residual at n=" + std::to_string(n));
      gr = std::max(gr, r.max_ratio);
    }
  }
  const double rt = since(t0);
  o.require(rt < 60.0, "runtime");
  o.detail << "max sup/bound=" << worst << " max residual/bound=" << gr << " runtime=" << rt << "s";
}

void c4a(Outcome& o) {
  const auto t0 = Clock::now();
  double lo = 1e300, hi = 0.0;
  for (std::int64_t n = 256; n <= 4096; n *= 2) {
    const auto q = stein::qclt_uniform_start(n, n / 2);
    lo = std::min(lo, q.normalized);
    hi = std::max(hi, q.normalized);
  }
  const double variation = (hi - lo) / lo;
  const double rt = since(t0);
  o.require(variation < 0.25, "normalized distance variation");
  o.require(rt < 120.0, "runtime");
  o.detail << "normalized in [" << lo << ", " << hi << "] variation=" << variation << " runtime=" << rt << "s";
}

ex::ExperimentConfig scenario(const std::string& name) {
  ex::ExperimentConfig c;
  c.scenario = name;
  return c;
}

void c4b(Outcome& o) {
  const auto t0 = Clock::now();
  auto cfg = scenario("qclt-rate");
  cfg.resolve();
  const auto out = ex::run_qclt_rate(cfg);
  const auto& fit = out.summary["fits"].at(0);
  const double slope = fit["slope"].get<double>();
  const double rt = since(t0);
  o.require(slope >= -0.65 && slope <= -0.35, "slope outside [-0.65, -0.35]");
  o.require(rt < 600.0, "runtime");
  o.detail << "slope=" << slope << " ci95=[" << fit["ci95"][0].get<double>() << ", " << fit["ci95"][1].get<double>()
           << "] distances=";
  for (const auto& r : out.records) {
    if (r.scenario == "qclt-rate.distance") o.detail << r.estimate << "@" << r.n << " ";
  }
  o.detail << "runtime=" << rt << "s";
}

void c5(Outcome& o) {
  const auto t0 = Clock::now();
  auto cfg = scenario("thermalize");
  cfg.resolve();
  const auto out = ex::run_thermalize(cfg);
  const double rt = since(t0);
  for (const auto& e : out.summary["per_tau"]) {
    const double tau = e["tau"].get<double>();
    const double est = e["estimate"].get<double>();
    const double se = e["stderr"].get<double>();
    const double theory = e["theory"].get<double>();
    const double sur = e["surrogate"].get<double>();
    o.detail << "tau=" << tau << ": est=" << est << "+-" << se << " theory=" << theory << " surrogate=" << sur
             << "; ";
    o.require(std::abs(est - theory) <= 0.15 * theory, "15% band at tau=" + std::to_string(tau));
    o.require(std::abs(sur - est) <= 2.0 * se, "surrogate outside 2 SE at tau=" + std::to_string(tau));
  }
  o.require(rt < 300.0, "runtime");
  o.detail << "runtime=" << rt << "s";
}

void c6(Outcome& o) {
  const auto t0 = Clock::now();
  auto cfg = scenario("mixing-curve");
  cfg.resolve();
  const auto out = ex::run_mixing_curve(cfg);
  const auto& s = out.summary;
  const double rt = since(t0);
  o.require(s["eps_ordered"].get<bool>(), "eps ordering");
  o.require(s["max_relative_drift"].get<double>() < 0.1, "drift");
  o.require(s["spread"].get<double>() > 5.0 * s["max_absolute_drift"].get<double>(), "spread");
  o.require(rt < 300.0, "runtime");
  o.detail << "max relative drift=" << s["max_relative_drift"].get<double>()
           << " spread=" << s["spread"].get<double>() << " max abs drift=" << s["max_absolute_drift"].get<double>()
           << " runtime=" << rt << "s";
}

void c7(Outcome& o) {
  const auto t0 = Clock::now();
  const diffusion::WFParams wf(1.0, 1.0);
  diffusion::ProbeOptions opts;
  opts.paths = 100000;
  const auto lin = diffusion::fp_derivative_probe(wf, [](double x) { return x; }, 1.0, 1, 0.0, 0.2, opts);
  const double target = std::exp(-2.0 * 0.2);
  double dev = 0.0;
  for (const auto& p : lin.points) dev = std::max(dev, std::abs(p.estimate / target - 1.0));
  const auto sq = diffusion::fp_derivative_probe(wf, [](double x) { return x * x; }, 2.0, 2, 0.0, 0.2, opts);
  const double rt = since(t0);
  o.require(dev <= 0.05, "linear derivative");
  o.require(sq.ratio <= 1.10 * sq.bound, "second-order decay bound");
  o.require(rt < 120.0, "runtime");
  o.detail << "linear max deviation=" << dev << " square ratio=" << sq.ratio << " bound=" << sq.bound
           << " runtime=" << rt << "s";
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void c8(Outcome& o) {
  const auto root = std::filesystem::temp_directory_path() / "voter_acceptance_c8";
  std::vector<ex::ExperimentConfig> configs;
  {
    auto c = scenario("profile");
    c.n_sweep = {64, 128};
    c.samples = 500;
    c.repetitions = 4;
    configs.push_back(c);
  }
  {
    auto c = scenario("thermalize");
    c.n = 900;
    c.samples = 300;
    c.repetitions = 3;
    configs.push_back(c);
  }
  {
    auto c = scenario("qclt-rate");
    c.n_sweep = {32, 64, 128};
    c.reference_paths = 50000;
    c.diagnostic_paths = 5000;
    c.t_grid = {0.5};
    configs.push_back(c);
  }
  configs.push_back(scenario("stein-rate"));
  configs.push_back(scenario("mixing-curve"));
  {
    auto c = scenario("validate");
    c.diagnostic_paths = 20000;
    configs.push_back(c);
  }
  for (auto cfg : configs) {
    cfg.seed = 2024;
    cfg.workers = 2;
    cfg.resolve();
    std::vector<std::string> files;
    for (int run = 0; run < 2; ++run) {
      auto c = cfg;
      c.out = (root / (cfg.scenario + std::to_string(run))).string();
      std::filesystem::remove_all(c.out);
      try {
        ex::write_outputs(c, ex::run_scenario(c), 0.0);
      } catch (const std::exception& e) {
        o.require(false, cfg.scenario + " raised " + e.what());
      }
      std::string all;
      for (const char* f : {"results.csv", "validate.csv", "stein_sweep.csv"}) {
        const auto p = std::filesystem::path(c.out) / f;
        if (std::filesystem::exists(p)) all += slurp(p);
      }
      files.push_back(all);
    }
    o.require(!files[0].empty() && files[0] == files[1], cfg.scenario + " not byte-identical");
    o.detail << cfg.scenario << "(" << files[0].size() << " bytes) ";
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::string only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      only = argv[++i];
    } else {
      std::cerr << "usage: acceptance [--only <1|2|3|4a|4b|5|6|7|8>]\n";
      return 2;
    }
  }
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"1", c1}, {"2", c2}, {"3", c3}, {"4a", c4a}, {"4b", c4b}, {"5", c5}, {"6", c6}, {"7", c7}, {"8", c8}};
  bool all = true;
  bool ran = false;
  std::cout << std::setprecision(6);
  for (const auto& [id, fn] : criteria) {
    if (!only.empty() && only != id) continue;
    ran = true;
    Outcome o;
    try {
      fn(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.failures += std::string(" [error: ") + e.what() + "]";
    }
    std::cout << "C" << id << (o.pass ? " PASS " : " FAIL ") << o.detail.str() << o.failures << std::endl;
    all = all && o.pass;
  }
  if (!ran) {
    std::cerr << "unknown criterion " << only << '\n';
    return 2;
  }
  return all ? 0 : 1;
}
