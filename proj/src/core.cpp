#include "otl/core.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace otl {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void require_finite(const PointMatrix& points) {
  if (!points.allFinite()) {
    throw std::invalid_argument("SampleSet: non-finite coordinate");
  }
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

}  // namespace

Seed child_seed(Seed parent, std::initializer_list<std::uint64_t> labels) {
  std::uint64_t state = splitmix64(parent.value);
  for (std::uint64_t label : labels) {
    state = splitmix64(state ^ splitmix64(label + 0x632be59bd9b4e019ULL));
  }
  return Seed{state};
}

SampleSet::SampleSet(PointMatrix points) : points_(std::move(points)) {
  if (points_.rows() < 1 || points_.cols() < 1) {
    throw std::invalid_argument("SampleSet: need n >= 1 and d >= 1");
  }
  require_finite(points_);
}

SampleSet::SampleSet(PointMatrix points, Vector responses) : SampleSet(std::move(points)) {
  if (responses.size() != points_.rows()) {
    throw std::invalid_argument("SampleSet: response count does not match point count");
  }
  if (!responses.allFinite()) {
    throw std::invalid_argument("SampleSet: non-finite response");
  }
  responses_ = std::move(responses);
}

const Vector& SampleSet::responses() const {
  if (!responses_) throw std::logic_error("SampleSet has no responses");
  return *responses_;
}

SampleSet SampleSet::subset(const std::vector<Index>& rows) const {
  PointMatrix pts(static_cast<Index>(rows.size()), dim());
  for (std::size_t k = 0; k < rows.size(); ++k) pts.row(static_cast<Index>(k)) = points_.row(rows[k]);
  if (!responses_) return SampleSet(std::move(pts));
  Vector y(static_cast<Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) y(static_cast<Index>(k)) = (*responses_)(rows[k]);
  return SampleSet(std::move(pts), std::move(y));
}

void SampleSet::write_csv(std::ostream& out) const {
  const auto old_precision = out.precision(17);
  for (Index k = 0; k < dim(); ++k) out << (k ? "," : "") << 'x' << (k + 1);
  if (responses_) out << ",y";
  out << '\n';
  for (Index i = 0; i < size(); ++i) {
    for (Index k = 0; k < dim(); ++k) out << (k ? "," : "") << points_(i, k);
    if (responses_) out << ',' << (*responses_)(i);
    out << '\n';
  }
  out.precision(old_precision);
}

SampleSet SampleSet::read_csv(std::istream& in) {
  std::string line;
  bool ok = static_cast<bool>(std::getline(in, line));
  while (ok && !line.empty() && line[0] == '#') ok = static_cast<bool>(std::getline(in, line));
  if (!ok) throw std::invalid_argument("SampleSet CSV: missing header");
  const auto header = split_fields(line);
  Index d = 0;
  bool with_y = false;
  for (const auto& name : header) {
    if (name == "y") {
      with_y = true;
    } else if (name == "x" + std::to_string(d + 1)) {
      if (with_y) throw std::invalid_argument("SampleSet CSV: y must be the last column");
      ++d;
    } else {
      throw std::invalid_argument("SampleSet CSV: unexpected column '" + name + "'");
    }
  }
  const std::size_t width = static_cast<std::size_t>(d) + (with_y ? 1 : 0);

  std::vector<double> values;
  Index n = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != width) throw std::invalid_argument("SampleSet CSV: ragged row");
    for (const auto& f : fields) values.push_back(std::stod(f));
    ++n;
  }
  PointMatrix pts(n, d);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < d; ++k) pts(i, k) = values[static_cast<std::size_t>(i) * width + static_cast<std::size_t>(k)];
    if (with_y) y(i) = values[static_cast<std::size_t>(i) * width + static_cast<std::size_t>(d)];
  }
  if (with_y) return SampleSet(std::move(pts), std::move(y));
  return SampleSet(std::move(pts));
}

Index dimension(const SampleSet& data) { return data.dim(); }

std::pair<SampleSet, SampleSet> split(const SampleSet& data, double fraction, Seed seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("split: fraction must lie in (0, 1)");
  }
  const Index n = data.size();
  const auto first = static_cast<Index>(std::floor(fraction * static_cast<double>(n)));
  if (n < 2 || first < 1 || n - first < 1) {
    throw std::invalid_argument("split: degenerate partition");
  }
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng = make_rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Index> head(order.begin(), order.begin() + first);
  std::vector<Index> tail(order.begin() + first, order.end());
  return {data.subset(head), data.subset(tail)};
}

EvaluableMap::EvaluableMap(Index in_dim, Index out_dim, Fn fn)
    : in_dim_(in_dim), out_dim_(out_dim), fn_(std::move(fn)) {
  if (in_dim_ < 1 || out_dim_ < 1) throw std::invalid_argument("EvaluableMap: dimensions must be positive");
  if (!fn_) throw std::invalid_argument("EvaluableMap: empty function");
}

Vector EvaluableMap::operator()(const Vector& x) const {
  if (x.size() != in_dim_) throw std::invalid_argument("EvaluableMap: input dimension mismatch");
  return fn_(x);
}

double EvaluableMap::scalar(const Vector& x) const {
  if (out_dim_ != 1) throw std::logic_error("EvaluableMap: scalar() on a vector-valued map");
  return (*this)(x)(0);
}

EvaluableMap AffineMap::as_map() const {
  return EvaluableMap(linear.cols(), linear.rows(), [self = *this](const Vector& x) { return self(x); });
}

EvaluableMap AffineFunctional::as_map() const {
  return EvaluableMap(weights.size(), 1, [self = *this](const Vector& x) {
    Vector out(1);
    out(0) = self(x);
    return out;
  });
}

Vector column_means(const PointMatrix& points) { return points.colwise().mean().transpose(); }

Vector column_stddevs(const PointMatrix& points) {
  const Index n = points.rows();
  if (n < 2) return Vector::Zero(points.cols());
  const Vector mean = column_means(points);
  Vector sd(points.cols());
  for (Index k = 0; k < points.cols(); ++k) {
    sd(k) = std::sqrt((points.col(k).array() - mean(k)).square().sum() / static_cast<double>(n - 1));
  }
  return sd;
}

PointMatrix standard_normal(Index n, Index d, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  PointMatrix z(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < d; ++k) z(i, k) = normal(rng);
  }
  return z;
}

}  // namespace otl
