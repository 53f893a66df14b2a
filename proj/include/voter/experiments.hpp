#pragma once

// Declarative experiment runner. A scenario reads an ExperimentConfig, runs
// replicas on a fixed-size worker pool with per-replica random streams, and
// returns ResultRecords in a deterministic order.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "voter/stein.hpp"

namespace voter::experiments {

struct ExperimentConfig {
  std::string scenario = "validate";
  // Model parameters. `ell` (when set) overrides m0 * n for the initial count.
  // 0 selects the scenario default (thermalize 10000, profile 256, validate 64).
  std::int64_t n = 0;
  double a = 1.0;
  double b = 1.0;
  double m0 = 0.5;
  std::optional<std::int64_t> ell;
  // Population sweep for scenarios that compare several n.
  std::vector<std::int64_t> n_sweep;
  // Grids: macroscopic times t, thermalization offsets tau, and mixing
  // thresholds eps.
  std::vector<double> t_grid;
  std::vector<double> tau_grid;
  std::vector<double> eps_grid;
  std::size_t samples = 2000;
  std::size_t repetitions = 10;
  std::uint64_t seed = 1;
  std::string out = "out";
  std::size_t workers = 1;
  bool timing = false;
  // Relative tolerance used to flag records against their theory value.
  double tolerance = 0.15;
  // Euler step for Wright-Fisher paths; 0 selects min(1e-3, t/100).
  double dt = 0.0;
  // Wright-Fisher reference paths for the rate experiment, and the number of
  // common-random-number paths used by its step-halving diagnostic.
  std::size_t reference_paths = 1000000;
  std::size_t diagnostic_paths = 100000;
  // Thermalization: also report the distance between two independent
  // uniform-start ensembles (matching noise floor).
  bool control = false;

  // Fills scenario defaults for empty grids and sweeps, then checks
  // invariants. Throws ConfigError.
  void resolve();
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

struct ResultRecord {
  std::string scenario;  // "<scenario>.<quantity>"
  std::int64_t n = 0;
  double a = 0.0;
  double b = 0.0;
  double m0 = 0.0;
  double t_or_tau = 0.0;
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::optional<double> theory;
  double runtime_s = 0.0;
  std::uint64_t seed = 0;
  // Set together with `theory`.
  std::optional<double> tolerance;

  std::optional<double> rel_error() const;
  bool flagged() const;
};

struct InvariantResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct ScenarioOutput {
  std::vector<ResultRecord> records;
  // Only populated by `validate`.
  std::vector<InvariantResult> invariants;
  // Only populated by `stein-rate`; written to stein_sweep.csv.
  std::vector<stein::QcltPoint> stein_sweep;
  // Extra summary values written to the manifest (fits, pass flags).
  nlohmann::json summary = nlohmann::json::object();
};

ScenarioOutput run_profile(const ExperimentConfig& cfg);
ScenarioOutput run_qclt_rate(const ExperimentConfig& cfg);
ScenarioOutput run_thermalize(const ExperimentConfig& cfg);
ScenarioOutput run_mixing_curve(const ExperimentConfig& cfg);
ScenarioOutput run_stein_rate(const ExperimentConfig& cfg);
ScenarioOutput run_validate(const ExperimentConfig& cfg);

// Dispatches on cfg.scenario.
ScenarioOutput run_scenario(const ExperimentConfig& cfg);

// Writes results.csv (and validate.csv / stein_sweep.csv when relevant) and
// manifest.json into cfg.out. With cfg.timing false the runtime column is left
// empty so that reruns are byte-identical; runtimes then go to the manifest.
void write_outputs(const ExperimentConfig& cfg, const ScenarioOutput& out, double total_runtime_s);

void write_results_csv(std::ostream& os, const std::vector<ResultRecord>& records, bool timing);

// Runs body(i) for i in [0, count) on `workers` threads. Results must be
// written by index; the first exception (lowest index) is rethrown.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& body);

// Least-squares fit of y = c + slope x.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double ci_low = 0.0;   // 95% confidence interval for the slope
  double ci_high = 0.0;
};
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Smallest t with curve(t) <= eps, by linear interpolation on a nonincreasing
// tabulated curve. Throws DiagnosticError if the curve increases by more than
// `slack` anywhere, DomainError if eps is never reached.
double invert_decreasing(const std::vector<double>& t, const std::vector<double>& curve, double eps,
                         double slack = 1e-9);

// Maximum relative violation of detailed balance for a given rate function
// against a pmf; exposed so that harness mutations can be exercised.
double detailed_balance_error(std::int64_t n, const std::function<std::pair<double, double>(std::int64_t)>& rates,
                              const std::vector<double>& pmf);

inline constexpr const char* kArtifactVersion = "1.0.0";

}  // namespace voter::experiments
