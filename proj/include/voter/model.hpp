#pragma once

// Noisy voter model on the complete graph with n sites.
//
// Every site x flips at rate c_x(eta)/n where
//   c_x(eta) = (1 - eta_x)(a + X) + eta_x (b + n - X),   X = sum_x eta_x.
// By exchangeability the particle count X is itself a birth-death chain, and for
// a fixed two-block partition of the sites the block counts (X^0, X^1) form a
// two-dimensional Markov chain. Both lumped chains are simulated here with one
// exponential clock on the aggregate rate.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "voter/pmf.hpp"
#include "voter/rng.hpp"

namespace voter::model {

struct ModelParams {
  std::int64_t n = 1;
  double a = 1.0;  // rate of spontaneous 0 -> 1 flips
  double b = 1.0;  // rate of spontaneous 1 -> 0 flips

  ModelParams() = default;
  ModelParams(std::int64_t n, double a, double b);  // validates
  void validate() const;
};

// Count of occupied sites.
using CountState = std::int64_t;

// A configuration eta in {0,1}^n.
using Config = std::vector<std::uint8_t>;

CountState count(const Config& eta);

// Sizes (n^0, n^1) of the partition A^i = {x : sigma_x = i}. Sites are laid out
// block by block: A^0 = [0, n^0), A^1 = [n^0, n).
struct BlockPartition {
  std::int64_t n0 = 1;
  std::int64_t n1 = 1;

  BlockPartition() = default;
  BlockPartition(std::int64_t n0, std::int64_t n1);  // rejects empty blocks
  std::int64_t n() const { return n0 + n1; }
  std::int64_t size(int i) const { return i == 0 ? n0 : n1; }
  double weight(int i) const { return static_cast<double>(size(i)) / static_cast<double>(n()); }
  // Partition generated by a configuration with `ell` particles among n sites.
  static BlockPartition from_count(std::int64_t n, std::int64_t ell) { return {n - ell, ell}; }
};

struct BlockCounts {
  std::int64_t x0 = 0;
  std::int64_t x1 = 0;
  std::int64_t total() const { return x0 + x1; }
  std::int64_t operator[](int i) const { return i == 0 ? x0 : x1; }
  friend bool operator==(const BlockCounts&, const BlockCounts&) = default;
};

struct CountRates {
  double up = 0.0;
  double down = 0.0;
  double total() const { return up + down; }
};

struct BlockRates {
  std::array<double, 2> up{};
  std::array<double, 2> down{};
  double total() const { return up[0] + up[1] + down[0] + down[1]; }
};

CountRates count_rates(const ModelParams& params, CountState k);
BlockRates block_rates(const ModelParams& params, const BlockPartition& part, const BlockCounts& x);

CountState simulate_count(const ModelParams& params, CountState k0, double horizon, Rng& rng);
// Single path observed at each of the nondecreasing `horizons`.
std::vector<CountState> simulate_count_path(const ModelParams& params, CountState k0,
                                            std::span<const double> horizons, Rng& rng);

BlockCounts simulate_blocks(const ModelParams& params, const BlockPartition& part, const BlockCounts& x0,
                            double horizon, Rng& rng);
std::vector<BlockCounts> simulate_blocks_path(const ModelParams& params, const BlockPartition& part,
                                              const BlockCounts& x0, std::span<const double> horizons,
                                              Rng& rng);

// Default dense-size cap for the uniformization solver.
inline constexpr std::int64_t kDefaultTransientCap = 4096;

// Law of X(t) given X(0) = k0, by uniformization at rate 1.05 * max total rate.
// Accurate in total variation to `tol`.
Pmf transient_law(const ModelParams& params, CountState k0, double t, double tol = 1e-10,
                  std::int64_t cap = kDefaultTransientCap);

// Advances a law on {0..n} by time `dt` (same method as transient_law).
std::vector<double> evolve_law(const ModelParams& params, std::span<const double> law, double dt,
                               double tol = 1e-10, std::int64_t cap = kDefaultTransientCap);

// Beta-Binomial(n, a, b) law of the particle count under the invariant measure.
Pmf stationary_pmf(const ModelParams& params);
CountState sample_stationary(const ModelParams& params, Rng& rng);

// Block counts of a uniformly chosen configuration with k particles.
BlockCounts sample_uniform_given_count(const ModelParams& params, const BlockPartition& part,
                                       CountState k, Rng& rng);

// Coupling of the uniform laws on the block-count fibres of x and y; within each
// block the smaller particle set is a uniform subset of the larger one.
std::pair<Config, Config> subset_coupling(const BlockPartition& part, const BlockCounts& x,
                                         const BlockCounts& y, Rng& rng);
BlockCounts block_counts(const BlockPartition& part, const Config& eta);
std::int64_t hamming(const Config& lhs, const Config& rhs);

// A scalar test function with the derivatives needed by the residual bounds.
// Unused derivatives may be left empty.
struct SmoothFn {
  std::function<double(double)> f;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
  std::function<double(double)> d3;
  std::function<double(double)> d4;
};

// Supremum of |g| on [lo, hi] by dense sampling (`points` >= 2).
double sup_norm(const std::function<double(double)>& g, double lo, double hi, int points = 4001);

struct GeneratorResidual {
  double residual = 0.0;  // n L_n f(M) - Lambda_{a,b} f(M)
  double bound = 0.0;     // explicit bound from the Taylor expansion of n L_n f
};

// Drift and variance functions of the density M = X/n.
double drift_F(const ModelParams& params, double m);
double variance_G(const ModelParams& params, double m);

GeneratorResidual generator_residual_1d(const ModelParams& params, const SmoothFn& fn, CountState k);

}  // namespace voter::model
