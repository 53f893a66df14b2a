#include "voter/transport.hpp"

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <istream>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "voter/assignment.hpp"
#include "voter/errors.hpp"

namespace voter::transport {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// Integral of |F - G| for two step CDFs given by weighted atoms.
double cdf_gap(std::vector<std::pair<double, double>> a, std::vector<std::pair<double, double>> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double fa = 0.0, fb = 0.0, total = 0.0;
  double x = std::min(a.front().first, b.front().first);
  while (i < a.size() || j < b.size()) {
    const double next = std::min(i < a.size() ? a[i].first : INFINITY, j < b.size() ? b[j].first : INFINITY);
    total += std::abs(fa - fb) * (next - x);
    x = next;
    while (i < a.size() && a[i].first == next) fa += a[i++].second;
    while (j < b.size() && b[j].first == next) fb += b[j++].second;
  }
  return total;
}

std::vector<std::pair<double, double>> atoms(const SampleSet1D& s) {
  std::vector<std::pair<double, double>> out(s.size());
  const double w = 1.0 / static_cast<double>(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) out[k] = {s.values[k], s.uniform() ? w : s.weights[k]};
  return out;
}

std::vector<std::pair<double, double>> atoms(const Pmf& p) {
  std::vector<std::pair<double, double>> out(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) out[k] = {p.point(k), p.prob(k)};
  return out;
}

void check_normalized(const Pmf& p) {
  const double s = std::accumulate(p.probs().begin(), p.probs().end(), 0.0);
  if (p.size() == 0 || std::abs(s - 1.0) > 1e-9) throw DomainError("pmf is not normalized");
}

// Integral over [l, r] (in z units) of |c - Phi(z)|, with Phi crossing c at
// most once.
double step_vs_normal(double c, double zl, double zr) {
  auto signed_integral = [c](double lo, double hi) {
    // Integral of Phi(z) - c on [lo, hi], in the complementary form on the
    // right half-line to avoid cancellation.
    if (lo + hi > 0.0) {
      return (1.0 - c) * (hi - lo) - (normal_cdf_antiderivative(-lo) - normal_cdf_antiderivative(-hi));
    }
    return normal_cdf_antiderivative(hi) - normal_cdf_antiderivative(lo) - c * (hi - lo);
  };
  if (c <= 0.0 || c >= 1.0) return std::abs(signed_integral(zl, zr));
  const double zc = -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * c);
  if (zc <= zl || zc >= zr) return std::abs(signed_integral(zl, zr));
  return std::abs(signed_integral(zl, zc)) + std::abs(signed_integral(zc, zr));
}

}  // namespace

SampleSet1D::SampleSet1D(std::vector<double> v, std::vector<double> w) : values(std::move(v)), weights(std::move(w)) {
  validate();
}

void SampleSet1D::validate() const {
  if (values.empty()) throw DomainError("sample set is empty");
  for (double x : values) {
    if (!std::isfinite(x)) throw DomainError("sample set has a non-finite value");
  }
  if (weights.empty()) return;
  if (weights.size() != values.size()) throw DomainError("weights and values differ in length");
  double s = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("weights must be finite and nonnegative");
    s += w;
  }
  if (std::abs(s - 1.0) > 1e-9) throw DomainError("weights must sum to 1");
}

void SampleSet1D::write_csv(std::ostream& os) const {
  os << std::setprecision(17) << (uniform() ? "x\n" : "x,w\n");
  for (std::size_t k = 0; k < size(); ++k) {
    os << values[k];
    if (!uniform()) os << ',' << weights[k];
    os << '\n';
  }
}

SampleSet1D SampleSet1D::read_csv(std::istream& is) {
  std::string line;
  std::getline(is, line);
  const bool weighted = line == "x,w";
  if (!weighted && line != "x") throw DomainError("expected header x or x,w");
  SampleSet1D s;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    s.values.push_back(std::stod(cell));
    if (weighted) {
      std::getline(row, cell, ',');
      s.weights.push_back(std::stod(cell));
    }
  }
  s.validate();
  return s;
}

void SampleSet2D::validate() const {
  if (points.empty()) throw DomainError("sample set is empty");
  for (const auto& p : points) {
    if (!std::isfinite(p[0]) || !std::isfinite(p[1])) throw DomainError("sample set has a non-finite value");
  }
}

void SampleSet2D::write_csv(std::ostream& os) const {
  os << std::setprecision(17) << "x,y\n";
  for (const auto& p : points) os << p[0] << ',' << p[1] << '\n';
}

SampleSet2D SampleSet2D::read_csv(std::istream& is) {
  std::string line;
  std::getline(is, line);
  if (line != "x,y") throw DomainError("expected header x,y");
  SampleSet2D s;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw DomainError("malformed row '" + line + "'");
    s.points.push_back({std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
  }
  s.validate();
  return s;
}

double distance(const Point2& p, const Point2& q, GroundMetric metric) {
  const double dx = p[0] - q[0];
  const double dy = p[1] - q[1];
  if (metric == GroundMetric::l1) return std::abs(dx) + std::abs(dy);
  return std::sqrt(dx * dx + dy * dy);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

double normal_cdf_antiderivative(double z) {
  return z * normal_cdf(z) + kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

double w1_sorted(const SampleSet1D& xs, const SampleSet1D& ys) {
  xs.validate();
  ys.validate();
  if (xs.uniform() && ys.uniform() && xs.size() == ys.size()) {
    std::vector<double> a = xs.values, b = ys.values;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
    return s / static_cast<double>(a.size());
  }
  return cdf_gap(atoms(xs), atoms(ys));
}

double w1_discrete(const Pmf& p, const Pmf& q) {
  check_normalized(p);
  check_normalized(q);
  return cdf_gap(atoms(p), atoms(q));
}

double w1_discrete_vs_gaussian(const Pmf& p, double mean, double sd, double tail_tol) {
  check_normalized(p);
  if (!(sd > 0.0) || !std::isfinite(sd) || !std::isfinite(mean)) throw DomainError("need finite mean and sd > 0");
  if (!(tail_tol > 0.0)) throw DomainError("tail tolerance must be positive");
  auto z = [&](double x) { return (x - mean) / sd; };
  double total = normal_cdf_antiderivative(z(p.point(0)));  // left tail, F_p = 0
  double c = 0.0;
  for (std::size_t k = 0; k + 1 < p.size(); ++k) {
    c += p.prob(k);
    total += step_vs_normal(std::min(c, 1.0), z(p.point(k)), z(p.point(k + 1)));
  }
  total += normal_cdf_antiderivative(-z(p.point(p.size() - 1)));  // right tail, F_p = 1
  return sd * total;
}

double w1_matching(const SampleSet2D& xs, const SampleSet2D& ys, GroundMetric metric, std::size_t cap) {
  xs.validate();
  ys.validate();
  if (xs.size() != ys.size()) throw DomainError("matching needs equal sample sizes");
  if (xs.size() > cap) {
    throw CapacityError("matching size " + std::to_string(xs.size()) + " exceeds cap " + std::to_string(cap) +
                        "; reduce the sample count");
  }
  const auto& a = xs.points;
  const auto& b = ys.points;
  Assignment sol;
  if (metric == GroundMetric::l1) {
    sol = solve_assignment(a.size(), [&](std::size_t i, std::size_t j) {
      return std::abs(a[i][0] - b[j][0]) + std::abs(a[i][1] - b[j][1]);
    });
  } else {
    sol = solve_assignment(a.size(), [&](std::size_t i, std::size_t j) {
      const double dx = a[i][0] - b[j][0];
      const double dy = a[i][1] - b[j][1];
      return std::sqrt(dx * dx + dy * dy);
    });
  }
  return sol.total_cost / static_cast<double>(a.size());
}

double w1_matching(const MatchingProblem& prob) { return w1_matching(prob.xs, prob.ys, prob.metric, prob.cap); }

PushforwardResult pushforward_check(const SampleSet2D& xs, const SampleSet2D& ys,
                                    const std::function<double(const Point2&)>& map) {
  std::vector<Point2> pooled = xs.points;
  pooled.insert(pooled.end(), ys.points.begin(), ys.points.end());
  std::vector<double> img(pooled.size());
  for (std::size_t k = 0; k < pooled.size(); ++k) img[k] = map(pooled[k]);
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    for (std::size_t j = i + 1; j < pooled.size(); ++j) {
      const double d = distance(pooled[i], pooled[j], GroundMetric::euclidean);
      if (std::abs(img[i] - img[j]) > d * (1.0 + 1e-12) + 1e-12) {
        throw DomainError("map is not 1-Lipschitz on the inputs");
      }
    }
  }
  PushforwardResult r;
  r.d2 = w1_matching(xs, ys);
  r.d1 = w1_sorted(SampleSet1D(std::vector<double>(img.begin(), img.begin() + static_cast<long>(xs.size()))),
                   SampleSet1D(std::vector<double>(img.begin() + static_cast<long>(xs.size()), img.end())));
  return r;
}

}  // namespace voter::transport
