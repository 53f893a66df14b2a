#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "voter/errors.hpp"
#include "voter/experiments.hpp"

namespace voter::experiments {
namespace {

using nlohmann::json;

const std::vector<std::string> kScenarios{"profile", "thermalize", "qclt-rate", "stein-rate", "validate",
                                          "mixing-curve"};

void reject_unknown(const json& j, const std::vector<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

template <class T>
void read(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

bool sorted_strict(const std::vector<double>& v) {
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (!(v[k] > v[k - 1])) return false;
  }
  return true;
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

void ExperimentConfig::resolve() {
  if (std::find(kScenarios.begin(), kScenarios.end(), scenario) == kScenarios.end()) {
    throw ConfigError("unknown scenario '" + scenario + "'");
  }
  if (n == 0) {
    if (scenario == "thermalize") n = 10000;
    else if (scenario == "validate") n = 64;
    else n = 256;
  }
  if (n_sweep.empty()) {
    if (scenario == "qclt-rate" || scenario == "mixing-curve") n_sweep = {128, 256, 512};
    else if (scenario == "stein-rate") n_sweep = {256, 512, 1024, 2048, 4096};
    else n_sweep = {n};
  }
  if (t_grid.empty()) {
    if (scenario == "profile") {
      t_grid = {0.0};
      for (int k = 0; k <= 8; ++k) t_grid.push_back(0.01 * std::pow(2.0, k));
    } else {
      t_grid = {1.0};
    }
  }
  if (tau_grid.empty()) tau_grid = {-1.0, 0.0, 1.0};
  if (eps_grid.empty()) eps_grid = {0.01, 0.05, 0.1};

  if (n < 1) throw ConfigError("n must be >= 1");
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) throw ConfigError("a and b must be > 0");
  if (!(m0 >= 0.0 && m0 <= 1.0)) throw ConfigError("m0 must lie in [0,1]");
  if (ell && (*ell < 0 || *ell > n)) throw ConfigError("ell must lie in [0, n]");
  for (auto v : n_sweep) {
    if (v < 2) throw ConfigError("sweep values must be >= 2");
  }
  if (!std::is_sorted(n_sweep.begin(), n_sweep.end())) throw ConfigError("n sweep must be sorted");
  if (!sorted_strict(t_grid) || t_grid.front() < 0.0) throw ConfigError("t grid must be strictly increasing and >= 0");
  if (!sorted_strict(tau_grid)) throw ConfigError("tau grid must be strictly increasing");
  if (!sorted_strict(eps_grid) || eps_grid.front() <= 0.0) throw ConfigError("eps grid must be increasing and > 0");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (!(tolerance > 0.0)) throw ConfigError("tolerance must be positive");
  if (dt < 0.0) throw ConfigError("dt must be >= 0");
  if (out.empty()) throw ConfigError("out must be a directory path");

  const bool distance = scenario == "profile" || scenario == "thermalize" || scenario == "qclt-rate";
  if (distance && samples < 100) throw ConfigError("distance estimation needs samples >= 100");
  if (scenario == "qclt-rate") {
    if (n_sweep.size() < 3) throw ConfigError("rate fit needs at least 3 sweep points");
    for (std::size_t k = 1; k < n_sweep.size(); ++k) {
      if (n_sweep[k] != 2 * n_sweep[k - 1]) throw ConfigError("rate sweep must be dyadic");
    }
    if (reference_paths < 100 || diagnostic_paths < 100) throw ConfigError("reference paths must be >= 100");
  }
  if (scenario == "mixing-curve" && n_sweep.size() < 2) throw ConfigError("mixing curve needs at least 2 sweep points");
  if (scenario == "thermalize" || scenario == "stein-rate") {
    if (!(m0 > 0.0 && m0 < 1.0) && !ell) throw ConfigError("m0 must lie in (0,1)");
  }
  if (scenario == "thermalize") {
    const double l = ell ? static_cast<double>(*ell) : std::round(m0 * static_cast<double>(n));
    const double m = l / static_cast<double>(n);
    // Initial densities must stay away from {0,1}: m(1-m) >= n^(-1/3).
    if (!(m * (1.0 - m) >= std::pow(static_cast<double>(n), -1.0 / 3.0))) {
      throw ConfigError("thermalization needs m0(1-m0) >= n^(-1/3)");
    }
  }
}

ExperimentConfig config_from_json(const json& j) {
  reject_unknown(j, {"scenario", "params", "sweep", "grid", "samples", "repetitions", "seed", "out", "workers",
                     "timing", "tolerance", "options"},
                 "config");
  ExperimentConfig c;
  read(j, "scenario", c.scenario);
  if (j.contains("params")) {
    const auto& p = j.at("params");
    reject_unknown(p, {"n", "a", "b", "m0", "ell"}, "params");
    read(p, "n", c.n);
    read(p, "a", c.a);
    read(p, "b", c.b);
    read(p, "m0", c.m0);
    if (p.contains("ell")) {
      std::int64_t l = 0;
      read(p, "ell", l);
      c.ell = l;
    }
  }
  if (j.contains("sweep")) {
    reject_unknown(j.at("sweep"), {"n"}, "sweep");
    read(j.at("sweep"), "n", c.n_sweep);
  }
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    reject_unknown(g, {"t", "tau", "eps"}, "grid");
    read(g, "t", c.t_grid);
    read(g, "tau", c.tau_grid);
    read(g, "eps", c.eps_grid);
  }
  read(j, "samples", c.samples);
  read(j, "repetitions", c.repetitions);
  read(j, "seed", c.seed);
  read(j, "out", c.out);
  read(j, "workers", c.workers);
  read(j, "timing", c.timing);
  read(j, "tolerance", c.tolerance);
  if (j.contains("options")) {
    const auto& o = j.at("options");
    reject_unknown(o, {"dt", "reference_paths", "diagnostic_paths", "control"}, "options");
    read(o, "dt", c.dt);
    read(o, "reference_paths", c.reference_paths);
    read(o, "diagnostic_paths", c.diagnostic_paths);
    read(o, "control", c.control);
  }
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json params = {{"n", c.n}, {"a", c.a}, {"b", c.b}, {"m0", c.m0}};
  if (c.ell) params["ell"] = *c.ell;
  return {
      {"scenario", c.scenario},
      {"params", params},
      {"sweep", {{"n", c.n_sweep}}},
      {"grid", {{"t", c.t_grid}, {"tau", c.tau_grid}, {"eps", c.eps_grid}}},
      {"samples", c.samples},
      {"repetitions", c.repetitions},
      {"seed", c.seed},
      {"out", c.out},
      {"workers", c.workers},
      {"timing", c.timing},
      {"tolerance", c.tolerance},
      {"options",
       {{"dt", c.dt},
        {"reference_paths", c.reference_paths},
        {"diagnostic_paths", c.diagnostic_paths},
        {"control", c.control}}},
  };
}

std::optional<double> ResultRecord::rel_error() const {
  if (!theory || *theory == 0.0) return std::nullopt;
  return std::abs(estimate - *theory) / std::abs(*theory);
}

bool ResultRecord::flagged() const {
  const auto r = rel_error();
  return r && tolerance && *r > *tolerance;
}

void write_results_csv(std::ostream& os, const std::vector<ResultRecord>& records, bool timing) {
  os << "scenario,n,a,b,m0,t_or_tau,estimate,stderr,theory,runtime_s,seed,rel_error,flagged\n";
  for (const auto& r : records) {
    os << r.scenario << ',' << r.n << ',' << format_double(r.a) << ',' << format_double(r.b) << ','
       << format_double(r.m0) << ',' << format_double(r.t_or_tau) << ',' << format_double(r.estimate) << ','
       << format_double(r.stderr_) << ',';
    if (r.theory) os << format_double(*r.theory);
    os << ',';
    if (timing) os << format_double(r.runtime_s);
    os << ',' << r.seed << ',';
    if (const auto e = r.rel_error()) os << format_double(*e);
    os << ',' << (r.theory ? (r.flagged() ? "1" : "0") : "") << '\n';
  }
}

void write_outputs(const ExperimentConfig& cfg, const ScenarioOutput& out, double total_runtime_s) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(cfg.out, ec);
  if (ec) throw ConfigError("cannot create output directory " + cfg.out + ": " + ec.message());
  const fs::path dir(cfg.out);
  {
    std::ofstream os(dir / "results.csv");
    if (!os) throw ConfigError("cannot write results.csv in " + cfg.out);
    write_results_csv(os, out.records, cfg.timing);
  }
  if (!out.invariants.empty()) {
    std::ofstream os(dir / "validate.csv");
    os << "invariant,pass,measured,threshold,detail\n";
    for (const auto& inv : out.invariants) {
      os << inv.name << ',' << (inv.pass ? 1 : 0) << ',' << format_double(inv.measured) << ','
         << format_double(inv.threshold) << ',' << '"' << inv.detail << '"' << '\n';
    }
  }
  if (!out.stein_sweep.empty()) {
    std::ofstream os(dir / "stein_sweep.csv");
    os << "n,ell,m0,nu,distance,normalized\n";
    for (const auto& q : out.stein_sweep) {
      os << q.n << ',' << q.ell << ',' << format_double(q.m0) << ',' << format_double(q.nu) << ','
         << format_double(q.distance) << ',' << format_double(q.normalized) << '\n';
    }
  }
  json manifest;
  manifest["config"] = config_to_json(cfg);
  manifest["artifact_version"] = kArtifactVersion;
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::ostringstream ts;
  ts << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ");
  manifest["timestamp"] = ts.str();
  manifest["runtime_s"] = total_runtime_s;
  std::vector<double> runtimes;
  for (const auto& r : out.records) runtimes.push_back(r.runtime_s);
  manifest["record_runtimes_s"] = runtimes;
  manifest["summary"] = out.summary;
  std::ofstream os(dir / "manifest.json");
  os << manifest.dump(2) << '\n';
}

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& body) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_at = count;
  std::exception_ptr failure;
  auto run = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t n = std::min(workers, count);
  for (std::size_t w = 0; w < n; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("fit needs at least two points");
  const double m = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k] / m;
    my += y[k] / m;
  }
  double sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  if (sxx == 0.0) throw DomainError("fit needs distinct abscissae");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double r = y[k] - f.intercept - f.slope * x[k];
    rss += r * r;
  }
  const std::size_t dof = x.size() - 2;
  f.slope_stderr = dof > 0 ? std::sqrt(rss / static_cast<double>(dof) / sxx) : 0.0;
  // Two-sided 97.5% Student t quantiles for small dof, normal beyond.
  static const double tq[] = {0.0, 12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228};
  const double q = dof == 0 ? 0.0 : dof <= 10 ? tq[dof] : 1.96;
  f.ci_low = f.slope - q * f.slope_stderr;
  f.ci_high = f.slope + q * f.slope_stderr;
  return f;
}

double invert_decreasing(const std::vector<double>& t, const std::vector<double>& curve, double eps, double slack) {
  if (t.size() != curve.size() || t.empty()) throw DomainError("curve and grid differ in size");
  for (std::size_t k = 1; k < curve.size(); ++k) {
    if (curve[k] > curve[k - 1] + slack) {
      throw DiagnosticError("distance curve increases at t = " + format_double(t[k]));
    }
  }
  if (curve.front() <= eps) return t.front();
  for (std::size_t k = 1; k < curve.size(); ++k) {
    if (curve[k] <= eps) {
      const double w = (curve[k - 1] - eps) / (curve[k - 1] - curve[k]);
      return t[k - 1] + w * (t[k] - t[k - 1]);
    }
  }
  throw DomainError("curve never reaches eps = " + format_double(eps));
}

double detailed_balance_error(std::int64_t n, const std::function<std::pair<double, double>(std::int64_t)>& rates,
                              const std::vector<double>& pmf) {
  if (static_cast<std::int64_t>(pmf.size()) != n + 1) throw DomainError("pmf size does not match n");
  double worst = 0.0;
  for (std::int64_t k = 0; k < n; ++k) {
    const double lhs = rates(k).first * pmf[static_cast<std::size_t>(k)];
    const double rhs = rates(k + 1).second * pmf[static_cast<std::size_t>(k + 1)];
    const double scale = std::max(std::abs(lhs), std::abs(rhs));
    if (scale > 0.0) worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  return worst;
}

}  // namespace voter::experiments
