#pragma once

// Limit objects of the density process: the Wright-Fisher diffusion, the mean
// ODEs for total and per-block densities, the linear Gaussian fluctuation SDEs
// around them, and a few closed-form Gaussian constructions used in the
// thermalization analysis.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "voter/model.hpp"
#include "voter/rng.hpp"

namespace voter::diffusion {

// dx = (a(1-x) - b x) dt + sqrt(2 x (1-x)) dB on [0,1].
struct WFParams {
  double a = 1.0;
  double b = 1.0;

  WFParams() = default;
  WFParams(double a, double b);  // validates
  void validate() const;
};

// min(1e-3, t/100), the default Euler step for a horizon t.
double default_dt(double t);

// Euler-Maruyama endpoint, clamped to [0,1] after every step. The horizon is
// split into ceil(t/dt) equal steps (one step if dt >= t).
double simulate_wf(const WFParams& params, double m0, double t, double dt, Rng& rng);

// Endpoints of one path driven by the same Brownian motion at step dt
// (coarse, first) and dt/2 (fine, second); used for step-halving checks.
std::array<double, 2> simulate_wf_halving(const WFParams& params, double m0, double t, double dt, Rng& rng);

// `count` independent endpoints. Path j uses stream (seed, {stream_tag, j}), so
// the result does not depend on how the work is split.
std::vector<double> simulate_wf_batch(const WFParams& params, double m0, double t, double dt, std::size_t count,
                                      std::uint64_t seed, std::uint64_t stream_tag = 0);

// m_t solving d/dt m = F(m)/n with m_0 = m0.
double mean_ode(const model::ModelParams& params, double m0, double t);

// Per-block means (m_t^0, m_t^1) from the initial condition (0, 1).
std::array<double, 2> block_mean_ode(const model::ModelParams& params, const model::BlockPartition& part, double t);

// G^i(m; a) for the block-density fluctuations; weights a^i from `part`.
double block_G(const model::ModelParams& params, const model::BlockPartition& part, const std::array<double, 2>& m,
               int i);

enum class FluctuationStart { sigma, uniform };

// Euler-Maruyama solution of the two-dimensional linear SDE for the rescaled
// block fluctuations y^i:
//   dy^i = (a^i (y^0 + y^1) - (1 + (a+b)/n) y^i) dt + sqrt(a^i G^i) dB^i.
// sigma: y_0 = 0 and G^i evaluated along block_mean_ode.
// uniform: y_0 = (Z, -Z) with Z ~ N(0, nu^2), nu = m0(1-m0), and G^i evaluated
// at (m_t, m_t).
std::array<double, 2> simulate_fluctuation(const model::ModelParams& params, const model::BlockPartition& part,
                                           FluctuationStart mode, double t, double dt, Rng& rng);

// Var(y^0_t + y^1_t) = int_0^t exp(-2(a+b)(t-s)/n) G(m_s) ds, m_0 = a^1.
double var_y_quadrature(const model::ModelParams& params, const model::BlockPartition& part, double t);

// Covariance of the total fluctuation with the asymptotic block-contrast term:
//   int_0^t exp(-(1+(a+b)/n)(t-s)) m0(1-m0) sqrt(G(m0)) (sqrt(G^1(m_s)) - sqrt(G^0(m_s))) ds.
double cov_y_omega(const model::ModelParams& params, const model::BlockPartition& part, double t);

struct GaussianSpec {
  std::vector<double> mean;
  std::vector<std::vector<double>> cov;

  // Throws DomainError unless cov is symmetric within 1e-12 and its
  // eigenvalues are >= -1e-10 (dimension 1 or 2).
  void validate() const;
};

// Law of zbar_t^i = (2i-1) sqrt(m0(1-m0)G0/2) W + a^i sqrt(G0 t) W', a^1 = m0.
GaussianSpec bar_z_spec(double m0, double G0, double t);
std::array<double, 2> bar_z_sample(double m0, double G0, double t, Rng& rng);

struct CouplingCoefficients {
  double alpha = 0.0;
  double beta = 0.0;
  double mse = 0.0;    // E(alpha X + beta Z - X)^2
  double bound = 0.0;  // 2(varX - varY)^2/varX + 3 cov^2/varZ
};

// Coefficients of Y~ = alpha X + beta Z (X, Z independent centred Gaussians)
// with Var Y~ = varY and Cov(Y~, Z) = covYZ.
CouplingCoefficients gaussian_coupling(double varX, double varY, double covYZ, double varZ);

struct ProbePoint {
  double m = 0.0;
  double estimate = 0.0;  // finite-difference estimate of the derivative of g
  double stderr_ = 0.0;
};

struct ProbeResult {
  std::vector<ProbePoint> points;
  double ratio = 0.0;       // max_m |estimate| / ||f^(order)||
  double max_stderr = 0.0;  // of the ratio
  double bound = 0.0;       // exp(-order (a+b+order-1)(t-s))
};

struct ProbeOptions {
  std::vector<double> grid{0.3, 0.4, 0.5, 0.6, 0.7};
  double h = 0.05;           // finite-difference step in m
  std::size_t paths = 100000;
  double dt = 1e-3;
  std::uint64_t seed = 1;
};

// Estimates the order-th derivative of g_{s,t}(m) = E f(x_{t-s}(m)) by central
// differences of Monte Carlo means with common random numbers. `dnorm` is
// ||f^(order)||_inf on [0,1]. Throws DiagnosticError if some point has a
// relative standard error above 10%.
ProbeResult fp_derivative_probe(const WFParams& params, const std::function<double(double)>& f, double dnorm,
                                int order, double s, double t, const ProbeOptions& opts);

}  // namespace voter::diffusion
