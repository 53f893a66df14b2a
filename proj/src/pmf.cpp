#include "voter/pmf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "voter/errors.hpp"

namespace voter {

Pmf::Pmf(std::vector<double> support, std::vector<double> probs, double tolerance)
    : support_(std::move(support)), probs_(std::move(probs)) {
  if (support_.empty() || support_.size() != probs_.size()) {
    throw DomainError("Pmf: support and probabilities must be nonempty and of equal length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < support_.size(); ++i) {
    if (!std::isfinite(support_[i]) || !std::isfinite(probs_[i]) || probs_[i] < 0.0) {
      throw DomainError("Pmf: non-finite point or negative probability");
    }
    if (i > 0 && !(support_[i] > support_[i - 1])) {
      throw DomainError("Pmf: support must be strictly increasing");
    }
    total += probs_[i];
  }
  if (std::abs(total - 1.0) > tolerance) {
    std::ostringstream msg;
    msg << "Pmf: probabilities sum to " << std::setprecision(17) << total;
    throw DomainError(msg.str());
  }
}

Pmf Pmf::delta(double x) { return Pmf({x}, {1.0}); }

Pmf Pmf::on_integers(std::vector<double> probs, double tolerance) {
  std::vector<double> support(probs.size());
  std::iota(support.begin(), support.end(), 0.0);
  return Pmf(std::move(support), std::move(probs), tolerance);
}

Pmf Pmf::empirical(std::span<const double> samples) {
  if (samples.empty()) throw DomainError("Pmf::empirical: empty sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> support;
  std::vector<double> probs;
  const double w = 1.0 / static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    support.push_back(sorted[i]);
    probs.push_back(static_cast<double>(j - i) * w);
    i = j;
  }
  return Pmf(std::move(support), std::move(probs), 1e-9);
}

double Pmf::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < size(); ++i) m += support_[i] * probs_[i];
  return m;
}

double Pmf::variance() const {
  const double m = mean();
  double v = 0.0;
  for (std::size_t i = 0; i < size(); ++i) v += (support_[i] - m) * (support_[i] - m) * probs_[i];
  return v;
}

Pmf Pmf::scaled(double factor) const {
  if (!(factor > 0.0)) throw DomainError("Pmf::scaled: factor must be positive");
  Pmf out = *this;
  for (auto& x : out.support_) x *= factor;
  return out;
}

void Pmf::write_csv(std::ostream& os) const {
  os << "k,prob\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < size(); ++i) os << support_[i] << ',' << probs_[i] << '\n';
}

void Pmf::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw DomainError("Pmf::write_csv: cannot open " + path);
  write_csv(os);
}

Pmf Pmf::read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "k,prob") throw DomainError("Pmf::read_csv: expected header k,prob");
  std::vector<double> support;
  std::vector<double> probs;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw DomainError("Pmf::read_csv: malformed row '" + line + "'");
    support.push_back(std::stod(line.substr(0, comma)));
    probs.push_back(std::stod(line.substr(comma + 1)));
  }
  return Pmf(std::move(support), std::move(probs), 1e-9);
}

}  // namespace voter
