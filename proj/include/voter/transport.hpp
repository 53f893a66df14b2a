#pragma once

// Wasserstein-1 (Kantorovich) distances between empirical and discrete laws.

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "voter/pmf.hpp"

namespace voter::transport {

// Real-valued sample with optional weights (empty means uniform).
struct SampleSet1D {
  std::vector<double> values;
  std::vector<double> weights;

  SampleSet1D() = default;
  SampleSet1D(std::vector<double> v, std::vector<double> w = {});
  // Nonempty, finite, and weights (if any) nonnegative and summing to 1.
  void validate() const;
  bool uniform() const { return weights.empty(); }
  std::size_t size() const { return values.size(); }

  void write_csv(std::ostream& os) const;  // column `x` (plus `w` if weighted)
  static SampleSet1D read_csv(std::istream& is);
};

using Point2 = std::array<double, 2>;

// Uniformly weighted sample in the plane.
struct SampleSet2D {
  std::vector<Point2> points;

  void validate() const;
  std::size_t size() const { return points.size(); }

  void write_csv(std::ostream& os) const;  // columns `x,y`
  static SampleSet2D read_csv(std::istream& is);
};

enum class GroundMetric { euclidean, l1 };

double distance(const Point2& p, const Point2& q, GroundMetric metric);

inline constexpr std::size_t kDefaultMatchingCap = 5000;

struct MatchingProblem {
  SampleSet2D xs;
  SampleSet2D ys;
  GroundMetric metric = GroundMetric::euclidean;
  std::size_t cap = kDefaultMatchingCap;
};

// W1 between two empirical laws on the line. Equal-size uniform samples use
// the monotone rearrangement; anything else integrates |F_x - F_y|.
double w1_sorted(const SampleSet1D& xs, const SampleSet1D& ys);

// Integral of |F_p - F_q| over the merged grid.
double w1_discrete(const Pmf& p, const Pmf& q);

// Integral of |F_p - Phi((x - mean)/sd)|, exact between support points and in
// both tails via the antiderivative z Phi(z) + phi(z). `tail_tol` bounds the
// admissible absolute error; the closed form meets it at rounding level.
double w1_discrete_vs_gaussian(const Pmf& p, double mean, double sd, double tail_tol = 1e-10);

// (1/N) times the minimum-cost perfect matching between the two clouds.
// Throws DomainError on size mismatch and CapacityError above `cap`.
double w1_matching(const MatchingProblem& prob);
double w1_matching(const SampleSet2D& xs, const SampleSet2D& ys, GroundMetric metric = GroundMetric::euclidean,
                   std::size_t cap = kDefaultMatchingCap);

struct PushforwardResult {
  double d2 = 0.0;  // planar W1 (Euclidean matching)
  double d1 = 0.0;  // W1 of the images under the map
};

// Computes both distances after checking that `map` is 1-Lipschitz on the
// pooled points; throws DomainError otherwise.
PushforwardResult pushforward_check(const SampleSet2D& xs, const SampleSet2D& ys,
                                    const std::function<double(const Point2&)>& map);

// Standard normal CDF and its antiderivative.
double normal_cdf(double z);
double normal_cdf_antiderivative(double z);

}  // namespace voter::transport
