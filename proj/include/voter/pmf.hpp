#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace voter {

// Finite probability mass function on a strictly increasing grid.
class Pmf {
 public:
  Pmf() = default;
  // Throws DomainError unless support is strictly increasing, probabilities are
  // nonnegative and sum to one within `tolerance`.
  Pmf(std::vector<double> support, std::vector<double> probs, double tolerance = 1e-12);

  // Point mass at `x`.
  static Pmf delta(double x);
  // Pmf on {0, 1, ..., probs.size()-1}.
  static Pmf on_integers(std::vector<double> probs, double tolerance = 1e-12);
  // Empirical law of a sample (duplicates merged, uniform weights).
  static Pmf empirical(std::span<const double> samples);

  std::size_t size() const { return support_.size(); }
  const std::vector<double>& support() const { return support_; }
  const std::vector<double>& probs() const { return probs_; }
  double point(std::size_t i) const { return support_[i]; }
  double prob(std::size_t i) const { return probs_[i]; }

  double mean() const;
  double variance() const;
  // Support multiplied by `factor` > 0 (e.g. counts -> densities with 1/n).
  Pmf scaled(double factor) const;

  void write_csv(std::ostream& os) const;
  void write_csv(const std::string& path) const;
  static Pmf read_csv(std::istream& is);

 private:
  std::vector<double> support_;
  std::vector<double> probs_;
};

}  // namespace voter
