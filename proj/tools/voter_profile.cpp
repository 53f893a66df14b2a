#include <chrono>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "voter/errors.hpp"
#include "voter/experiments.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kCapacityError = 3;
constexpr int kInvariantFailure = 4;

}  // namespace

int main(int argc, char** argv) {
  using namespace voter;
  CLI::App app{"Noisy voter model experiments"};
  std::string scenario;
  std::string config_path;
  std::optional<std::int64_t> n, ell;
  std::optional<double> a, b, m0, dt;
  std::vector<double> tau, t, eps;
  std::vector<std::int64_t> sweep;
  std::optional<std::size_t> samples, repetitions, workers;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool timing = false;
  bool control = false;

  app.add_option("scenario", scenario, "profile | thermalize | qclt-rate | stein-rate | validate | mixing-curve")
      ->required();
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--n", n, "number of sites");
  app.add_option("--ell", ell, "initial particle count (overrides m0)");
  app.add_option("--a", a, "spontaneous 0->1 rate");
  app.add_option("--b", b, "spontaneous 1->0 rate");
  app.add_option("--m0", m0, "initial density");
  app.add_option("--tau", tau, "thermalization offsets");
  app.add_option("--t", t, "macroscopic times");
  app.add_option("--eps", eps, "mixing thresholds");
  app.add_option("--sweep", sweep, "population sweep");
  app.add_option("--samples", samples, "replicas per estimate");
  app.add_option("--repetitions", repetitions, "independent repetitions");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--out", out, "output directory");
  app.add_option("--workers", workers, "worker threads");
  app.add_option("--dt", dt, "Euler step for Wright-Fisher paths");
  app.add_flag("--timing", timing, "write per-record runtimes to results.csv");
  app.add_flag("--control", control, "thermalize: add the uniform-vs-uniform control");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    nlohmann::json j = nlohmann::json::object();
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      if (!is) throw ConfigError("cannot open config " + config_path);
      try {
        j = nlohmann::json::parse(is);
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
      }
    }
    auto cfg = experiments::config_from_json(j);
    if (j.contains("scenario") && cfg.scenario != scenario) {
      throw ConfigError("config scenario '" + cfg.scenario + "' differs from command line '" + scenario + "'");
    }
    cfg.scenario = scenario;
    if (n) cfg.n = *n;
    if (ell) cfg.ell = *ell;
    if (a) cfg.a = *a;
    if (b) cfg.b = *b;
    if (m0) cfg.m0 = *m0;
    if (dt) cfg.dt = *dt;
    if (!tau.empty()) cfg.tau_grid = tau;
    if (!t.empty()) cfg.t_grid = t;
    if (!eps.empty()) cfg.eps_grid = eps;
    if (!sweep.empty()) cfg.n_sweep = sweep;
    if (samples) cfg.samples = *samples;
    if (repetitions) cfg.repetitions = *repetitions;
    if (seed) cfg.seed = *seed;
    if (out) cfg.out = *out;
    if (workers) cfg.workers = *workers;
    if (timing) cfg.timing = true;
    if (control) cfg.control = true;
    cfg.resolve();

    const auto start = std::chrono::steady_clock::now();
    const auto result = experiments::run_scenario(cfg);
    const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    experiments::write_outputs(cfg, result, runtime);

    experiments::write_results_csv(std::cout, result.records, cfg.timing);
    bool failed = false;
    for (const auto& inv : result.invariants) {
      std::cerr << (inv.pass ? "PASS " : "FAIL ") << inv.name << " measured=" << inv.measured
                << " threshold=" << inv.threshold << '\n';
      failed = failed || !inv.pass;
    }
    return failed ? kInvariantFailure : kOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << '\n';
    return kCapacityError;
  } catch (const DiagnosticError& e) {
    std::cerr << "diagnostic failure: " << e.what() << '\n';
    return kInvariantFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvariantFailure;
  }
}
