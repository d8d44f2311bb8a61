#include "otl/ot1d.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace otl {

MonotoneMap1D::MonotoneMap1D(std::vector<double> knots_x, std::vector<double> knots_y)
    : knots_x_(std::move(knots_x)), knots_y_(std::move(knots_y)) {
  if (knots_x_.empty() || knots_x_.size() != knots_y_.size()) {
    throw std::invalid_argument("MonotoneMap1D: knot lists must be nonempty and of equal length");
  }
  for (std::size_t i = 0; i < knots_x_.size(); ++i) {
    if (!std::isfinite(knots_x_[i]) || !std::isfinite(knots_y_[i])) {
      throw std::invalid_argument("MonotoneMap1D: non-finite knot");
    }
    if (i > 0 && !(knots_x_[i] > knots_x_[i - 1])) {
      throw std::invalid_argument("MonotoneMap1D: knots_x must be strictly increasing");
    }
    if (i > 0 && knots_y_[i] < knots_y_[i - 1]) {
      throw std::invalid_argument("MonotoneMap1D: knots_y must be nondecreasing");
    }
  }
}

double MonotoneMap1D::lower_slope() const {
  if (size() < 2) return 0.0;
  return std::max(0.0, (knots_y_[1] - knots_y_[0]) / (knots_x_[1] - knots_x_[0]));
}

double MonotoneMap1D::upper_slope() const {
  const std::size_t k = size();
  if (k < 2) return 0.0;
  return std::max(0.0, (knots_y_[k - 1] - knots_y_[k - 2]) / (knots_x_[k - 1] - knots_x_[k - 2]));
}

double MonotoneMap1D::lipschitz() const {
  double best = 0.0;
  for (std::size_t i = 1; i < size(); ++i) {
    best = std::max(best, (knots_y_[i] - knots_y_[i - 1]) / (knots_x_[i] - knots_x_[i - 1]));
  }
  return best;
}

double MonotoneMap1D::operator()(double x) const {
  const std::size_t k = size();
  if (k == 1) return knots_y_[0];
  if (x <= knots_x_.front()) return knots_y_.front() + lower_slope() * (x - knots_x_.front());
  if (x >= knots_x_.back()) return knots_y_.back() + upper_slope() * (x - knots_x_.back());
  const auto hi = static_cast<std::size_t>(std::upper_bound(knots_x_.begin(), knots_x_.end(), x) - knots_x_.begin());
  const std::size_t lo = hi - 1;
  const double t = (x - knots_x_[lo]) / (knots_x_[hi] - knots_x_[lo]);
  // Clamp guards against rounding pushing the value past a neighbouring knot.
  const double y = knots_y_[lo] + t * (knots_y_[hi] - knots_y_[lo]);
  return std::clamp(y, knots_y_[lo], knots_y_[hi]);
}

EvaluableMap MonotoneMap1D::as_map() const {
  return EvaluableMap(1, 1, [self = *this](const Vector& x) {
    Vector out(1);
    out(0) = self(x(0));
    return out;
  });
}

void MonotoneMap1D::write_csv(std::ostream& out) const {
  const auto old_precision = out.precision(17);
  out << "knot_x,knot_y\n";
  for (std::size_t i = 0; i < size(); ++i) out << knots_x_[i] << ',' << knots_y_[i] << '\n';
  out.precision(old_precision);
}

MonotoneMap1D MonotoneMap1D::read_csv(std::istream& in) {
  std::string line;
  bool ok = static_cast<bool>(std::getline(in, line));
  while (ok && !line.empty() && line[0] == '#') ok = static_cast<bool>(std::getline(in, line));
  if (!ok || line != "knot_x,knot_y") {
    throw std::invalid_argument("MonotoneMap1D CSV: expected header 'knot_x,knot_y'");
  }
  std::vector<double> xs;
  std::vector<double> ys;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::invalid_argument("MonotoneMap1D CSV: malformed row");
    xs.push_back(std::stod(line.substr(0, comma)));
    ys.push_back(std::stod(line.substr(comma + 1)));
  }
  return MonotoneMap1D(std::move(xs), std::move(ys));
}

double sorted_quantile(std::span<const double> sorted, double q) {
  const std::size_t n = sorted.size();
  if (n == 0) throw std::invalid_argument("sorted_quantile: empty sample");
  const double pos = std::clamp(q * static_cast<double>(n) - 0.5, 0.0, static_cast<double>(n - 1));
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double t = pos - static_cast<double>(lo);
  if (t == 0.0) return sorted[lo];
  return sorted[lo] + t * (sorted[hi] - sorted[lo]);
}

MonotoneMap1D fit_quantile_map(std::span<const double> src, std::span<const double> tgt) {
  if (src.empty() || tgt.empty()) throw std::invalid_argument("fit_quantile_map: empty sample");
  std::vector<double> xs(src.begin(), src.end());
  std::vector<double> ts(tgt.begin(), tgt.end());
  std::sort(xs.begin(), xs.end());
  std::sort(ts.begin(), ts.end());

  const double n = static_cast<double>(xs.size());
  std::vector<double> knots_x;
  std::vector<double> knots_y;
  std::size_t i = 0;
  while (i < xs.size()) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < xs.size() && xs[j] == xs[i]) {
      sum += sorted_quantile(ts, (static_cast<double>(j) + 0.5) / n);
      ++j;
    }
    knots_x.push_back(xs[i]);
    knots_y.push_back(sum / static_cast<double>(j - i));
    i = j;
  }
  // Group averages of a nondecreasing sequence are nondecreasing up to
  // rounding; enforce it exactly.
  for (std::size_t k = 1; k < knots_y.size(); ++k) knots_y[k] = std::max(knots_y[k], knots_y[k - 1]);
  return MonotoneMap1D(std::move(knots_x), std::move(knots_y));
}

MonotoneMap1D fit_quantile_map(const SampleSet& src, const SampleSet& tgt) {
  if (src.dim() != 1 || tgt.dim() != 1) {
    throw std::invalid_argument("fit_quantile_map: samples must be one-dimensional");
  }
  const auto& a = src.points();
  const auto& b = tgt.points();
  return fit_quantile_map(std::span<const double>(a.data(), static_cast<std::size_t>(a.size())),
                          std::span<const double>(b.data(), static_cast<std::size_t>(b.size())));
}

}  // namespace otl
