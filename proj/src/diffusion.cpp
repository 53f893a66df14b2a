#include "voter/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "voter/errors.hpp"
#include "voter/quadrature.hpp"

namespace voter::diffusion {
namespace {

constexpr double kQuadTol = 1e-10;

void check_unit(double m, const char* what) {
  if (!(m >= 0.0 && m <= 1.0)) throw DomainError(std::string(what) + " must lie in [0,1]");
}

void check_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("time must be finite and >= 0");
}

std::size_t step_count(double t, double dt) {
  if (!(dt > 0.0)) throw DomainError("dt must be positive");
  if (dt >= t) return 1;
  return static_cast<std::size_t>(std::ceil(t / dt - 1e-9));
}

double quad(const std::function<double(double)>& f, double t) {
  const auto r = adaptive_simpson(f, 0.0, t, kQuadTol);
  if (!r.converged) throw NumericError("quadrature did not reach the requested tolerance");
  return r.value;
}

double wf_step(const WFParams& p, double x, double h, double sqrt_h, double z) {
  x += (p.a * (1.0 - x) - p.b * x) * h + std::sqrt(2.0 * x * (1.0 - x)) * sqrt_h * z;
  return std::clamp(x, 0.0, 1.0);
}

}  // namespace

WFParams::WFParams(double a_, double b_) : a(a_), b(b_) { validate(); }

void WFParams::validate() const {
  if (!(a > 0.0) || !std::isfinite(a) || !(b > 0.0) || !std::isfinite(b)) {
    throw DomainError("Wright-Fisher rates must be finite and positive");
  }
}

double default_dt(double t) { return std::min(1e-3, t / 100.0); }

double simulate_wf(const WFParams& params, double m0, double t, double dt, Rng& rng) {
  params.validate();
  check_unit(m0, "m0");
  check_time(t);
  const std::size_t steps = step_count(t, dt);
  if (t == 0.0) return m0;
  const double h = t / static_cast<double>(steps);
  const double sqrt_h = std::sqrt(h);
  std::normal_distribution<double> normal;
  double x = m0;
  for (std::size_t j = 0; j < steps; ++j) x = wf_step(params, x, h, sqrt_h, normal(rng));
  return x;
}

std::array<double, 2> simulate_wf_halving(const WFParams& params, double m0, double t, double dt, Rng& rng) {
  params.validate();
  check_unit(m0, "m0");
  check_time(t);
  const std::size_t steps = step_count(t, dt);
  if (t == 0.0) return {m0, m0};
  const double h = t / static_cast<double>(steps);
  const double half = 0.5 * h;
  const double sqrt_half = std::sqrt(half);
  std::normal_distribution<double> normal;
  double coarse = m0;
  double fine = m0;
  for (std::size_t j = 0; j < steps; ++j) {
    const double z1 = normal(rng);
    const double z2 = normal(rng);
    fine = wf_step(params, fine, half, sqrt_half, z1);
    fine = wf_step(params, fine, half, sqrt_half, z2);
    coarse = wf_step(params, coarse, h, std::sqrt(h), (z1 + z2) / std::sqrt(2.0));
  }
  return {coarse, fine};
}

std::vector<double> simulate_wf_batch(const WFParams& params, double m0, double t, double dt, std::size_t count,
                                      std::uint64_t seed, std::uint64_t stream_tag) {
  std::vector<double> out(count);
  for (std::size_t j = 0; j < count; ++j) {
    auto rng = make_stream(seed, {stream_tag, j});
    out[j] = simulate_wf(params, m0, t, dt, rng);
  }
  return out;
}

double mean_ode(const model::ModelParams& params, double m0, double t) {
  params.validate();
  check_unit(m0, "m0");
  check_time(t);
  const double rate = (params.a + params.b) / static_cast<double>(params.n);
  const double e = std::exp(-rate * t);
  return m0 * e + params.a / (params.a + params.b) * (1.0 - e);
}

std::array<double, 2> block_mean_ode(const model::ModelParams& params, const model::BlockPartition& part, double t) {
  if (part.n() != params.n) throw DomainError("partition size does not match n");
  const double m0 = part.weight(1);
  const double mt = mean_ode(params, m0, t);
  const double e = std::exp(-(1.0 + (params.a + params.b) / static_cast<double>(params.n)) * t);
  return {mt - m0 * e, mt + (1.0 - m0) * e};
}

double block_G(const model::ModelParams& params, const model::BlockPartition& part, const std::array<double, 2>& m,
               int i) {
  const double am = part.weight(0) * m[0] + part.weight(1) * m[1];
  const double mi = m[static_cast<std::size_t>(i)];
  return am + mi - 2.0 * am * mi + (params.a * (1.0 - mi) + params.b * mi) / static_cast<double>(params.n);
}

std::array<double, 2> simulate_fluctuation(const model::ModelParams& params, const model::BlockPartition& part,
                                           FluctuationStart mode, double t, double dt, Rng& rng) {
  if (part.n() != params.n) throw DomainError("partition size does not match n");
  check_time(t);
  const std::size_t steps = step_count(t, dt);
  const double m0 = part.weight(1);
  std::normal_distribution<double> normal;
  std::array<double, 2> y{0.0, 0.0};
  if (mode == FluctuationStart::uniform) {
    const double z = m0 * (1.0 - m0) * normal(rng);
    y = {z, -z};
  }
  if (t == 0.0) return y;
  const double h = t / static_cast<double>(steps);
  const double sqrt_h = std::sqrt(h);
  const double kappa = 1.0 + (params.a + params.b) / static_cast<double>(params.n);
  const std::array<double, 2> w{part.weight(0), part.weight(1)};
  for (std::size_t j = 0; j < steps; ++j) {
    const double s = h * static_cast<double>(j);
    std::array<double, 2> m;
    if (mode == FluctuationStart::sigma) {
      m = block_mean_ode(params, part, s);
    } else {
      const double ms = mean_ode(params, m0, s);
      m = {ms, ms};
    }
    const double sum = y[0] + y[1];
    std::array<double, 2> next;
    for (int i = 0; i < 2; ++i) {
      const double g = std::max(0.0, w[i] * block_G(params, part, m, i));
      next[i] = y[i] + (w[i] * sum - kappa * y[i]) * h + std::sqrt(g) * sqrt_h * normal(rng);
    }
    y = next;
  }
  return y;
}

double var_y_quadrature(const model::ModelParams& params, const model::BlockPartition& part, double t) {
  if (part.n() != params.n) throw DomainError("partition size does not match n");
  check_time(t);
  if (t == 0.0) return 0.0;
  const double m0 = part.weight(1);
  const double rate = 2.0 * (params.a + params.b) / static_cast<double>(params.n);
  return quad([&](double s) { return std::exp(-rate * (t - s)) * model::variance_G(params, mean_ode(params, m0, s)); },
              t);
}

double cov_y_omega(const model::ModelParams& params, const model::BlockPartition& part, double t) {
  if (part.n() != params.n) throw DomainError("partition size does not match n");
  check_time(t);
  if (t == 0.0) return 0.0;
  const double m0 = part.weight(1);
  const double kappa = 1.0 + (params.a + params.b) / static_cast<double>(params.n);
  const double pre = m0 * (1.0 - m0) * std::sqrt(model::variance_G(params, m0));
  return quad(
      [&](double s) {
        const auto m = block_mean_ode(params, part, s);
        const double diff = std::sqrt(std::max(0.0, block_G(params, part, m, 1))) -
                            std::sqrt(std::max(0.0, block_G(params, part, m, 0)));
        return std::exp(-kappa * (t - s)) * pre * diff;
      },
      t);
}

void GaussianSpec::validate() const {
  const std::size_t d = mean.size();
  if (d < 1 || d > 2 || cov.size() != d) throw DomainError("GaussianSpec: dimension must be 1 or 2");
  for (const auto& row : cov) {
    if (row.size() != d) throw DomainError("GaussianSpec: covariance must be square");
  }
  if (d == 1) {
    if (cov[0][0] < -1e-10) throw DomainError("GaussianSpec: negative variance");
    return;
  }
  if (std::abs(cov[0][1] - cov[1][0]) > 1e-12) throw DomainError("GaussianSpec: covariance not symmetric");
  const double tr = cov[0][0] + cov[1][1];
  const double det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
  const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
  if (0.5 * tr - disc < -1e-10) throw DomainError("GaussianSpec: covariance not positive semidefinite");
}

GaussianSpec bar_z_spec(double m0, double G0, double t) {
  if (!(m0 > 0.0 && m0 < 1.0)) throw DomainError("bar_z: m0 must lie in (0,1)");
  if (!(G0 > 0.0)) throw DomainError("bar_z: G0 must be positive");
  check_time(t);
  const double c = 0.5 * m0 * (1.0 - m0) * G0;
  const std::array<double, 2> w{1.0 - m0, m0};
  GaussianSpec spec;
  spec.mean = {0.0, 0.0};
  spec.cov.assign(2, std::vector<double>(2));
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      spec.cov[i][j] = (2 * i - 1) * (2 * j - 1) * c + w[i] * w[j] * G0 * t;
    }
  }
  return spec;
}

std::array<double, 2> bar_z_sample(double m0, double G0, double t, Rng& rng) {
  if (!(m0 > 0.0 && m0 < 1.0)) throw DomainError("bar_z: m0 must lie in (0,1)");
  if (!(G0 > 0.0)) throw DomainError("bar_z: G0 must be positive");
  check_time(t);
  std::normal_distribution<double> normal;
  const double w = normal(rng);
  const double wp = normal(rng);
  const double contrast = std::sqrt(0.5 * m0 * (1.0 - m0) * G0) * w;
  const double common = std::sqrt(G0 * t) * wp;
  return {-contrast + (1.0 - m0) * common, contrast + m0 * common};
}

CouplingCoefficients gaussian_coupling(double varX, double varY, double covYZ, double varZ) {
  if (!(varX > 0.0) || !(varZ > 0.0) || !(varY >= 0.0)) {
    throw DomainError("gaussian_coupling: need varX > 0, varZ > 0, varY >= 0");
  }
  if (covYZ * covYZ > varY * varZ) throw DomainError("gaussian_coupling: Cauchy-Schwarz violated");
  CouplingCoefficients c;
  c.beta = covYZ / varZ;
  c.alpha = std::sqrt(std::max(0.0, varY / varX - covYZ * covYZ / (varX * varZ)));
  c.mse = (c.alpha - 1.0) * (c.alpha - 1.0) * varX + c.beta * c.beta * varZ;
  c.bound = 2.0 * (varX - varY) * (varX - varY) / varX + 3.0 * covYZ * covYZ / varZ;
  return c;
}

ProbeResult fp_derivative_probe(const WFParams& params, const std::function<double(double)>& f, double dnorm,
                                int order, double s, double t, const ProbeOptions& opts) {
  params.validate();
  if (order != 1 && order != 2) throw DomainError("probe order must be 1 or 2");
  if (!(t >= s) || !(s >= 0.0)) throw DomainError("probe needs t >= s >= 0");
  if (!(dnorm > 0.0)) throw DomainError("probe needs a positive derivative norm");
  if (opts.grid.empty() || opts.paths < 2 || !(opts.h > 0.0)) throw DomainError("probe options incomplete");
  const double tau = t - s;
  ProbeResult result;
  result.bound = std::exp(-order * (params.a + params.b + order - 1) * tau);

  const std::size_t steps = tau > 0.0 ? step_count(tau, opts.dt) : 0;
  const double step = steps ? tau / static_cast<double>(steps) : 0.0;
  const double sqrt_step = std::sqrt(step);
  const double h = opts.h;

  for (std::size_t p = 0; p < opts.grid.size(); ++p) {
    const double m = opts.grid[p];
    check_unit(m - h, "probe point - h");
    check_unit(m + h, "probe point + h");
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t j = 0; j < opts.paths; ++j) {
      // Same stream for every probe point, so neighbouring points share noise.
      auto rng = make_stream(opts.seed, {j});
      std::normal_distribution<double> normal;
      double lo = m - h, mid = m, hi = m + h;
      for (std::size_t k = 0; k < steps; ++k) {
        const double z = normal(rng);
        lo = wf_step(params, lo, step, sqrt_step, z);
        mid = wf_step(params, mid, step, sqrt_step, z);
        hi = wf_step(params, hi, step, sqrt_step, z);
      }
      const double d = order == 1 ? (f(hi) - f(lo)) / (2.0 * h) : (f(hi) - 2.0 * f(mid) + f(lo)) / (h * h);
      // Welford update.
      const double delta = d - mean;
      mean += delta / static_cast<double>(j + 1);
      m2 += delta * (d - mean);
    }
    ProbePoint pt;
    pt.m = m;
    pt.estimate = mean;
    pt.stderr_ = std::sqrt(m2 / static_cast<double>(opts.paths - 1) / static_cast<double>(opts.paths));
    if (pt.stderr_ > 0.1 * std::abs(pt.estimate)) {
      throw DiagnosticError("probe at m = " + std::to_string(m) + ": relative standard error above 10%");
    }
    result.points.push_back(pt);
    const double r = std::abs(pt.estimate) / dnorm;
    if (r > result.ratio) {
      result.ratio = r;
      result.max_stderr = pt.stderr_ / dnorm;
    }
  }
  return result;
}

}  // namespace voter::diffusion
