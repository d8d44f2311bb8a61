#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <iosfwd>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

namespace otl {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// One sample per row.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Point = Eigen::VectorXd;

/// Raised when an iterative solver leaves its numerically safe range.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an iterative fit exhausts its iteration budget.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Seed {
  std::uint64_t value = 0;

  friend bool operator==(const Seed&, const Seed&) = default;
};

/// Derive a child seed from a parent and a fixed label path. The result
/// depends only on the inputs, so serial and parallel schedules agree.
Seed child_seed(Seed parent, std::initializer_list<std::uint64_t> labels);

using Rng = std::mt19937_64;

inline Rng make_rng(Seed seed) { return Rng(seed.value); }

/// n x d table of finite inputs with an optional response per row.
class SampleSet {
 public:
  explicit SampleSet(PointMatrix points);
  SampleSet(PointMatrix points, Vector responses);

  Index size() const { return points_.rows(); }
  Index dim() const { return points_.cols(); }

  const PointMatrix& points() const { return points_; }
  Point point(Index i) const { return points_.row(i).transpose(); }

  bool has_responses() const { return responses_.has_value(); }
  /// Throws std::logic_error when the set carries no responses.
  const Vector& responses() const;

  /// Rows selected by index, in the given order.
  SampleSet subset(const std::vector<Index>& rows) const;

  /// Header `x1,...,xd[,y]`, 17 significant digits.
  void write_csv(std::ostream& out) const;
  /// Leading `#` comment lines are skipped.
  static SampleSet read_csv(std::istream& in);

 private:
  PointMatrix points_;
  std::optional<Vector> responses_;
};

Index dimension(const SampleSet& data);

/// Seeded partition into parts of size floor(fraction * n) and the remainder.
std::pair<SampleSet, SampleSet> split(const SampleSet& data, double fraction, Seed seed);

/// Deterministic function R^in_dim -> R^out_dim.
class EvaluableMap {
 public:
  using Fn = std::function<Vector(const Vector&)>;

  EvaluableMap(Index in_dim, Index out_dim, Fn fn);

  Index in_dim() const { return in_dim_; }
  Index out_dim() const { return out_dim_; }

  Vector operator()(const Vector& x) const;
  /// Evaluation of a map with out_dim == 1.
  double scalar(const Vector& x) const;

 private:
  Index in_dim_;
  Index out_dim_;
  Fn fn_;
};

/// x -> linear * x + offset.
struct AffineMap {
  Matrix linear;
  Vector offset;

  Vector operator()(const Vector& x) const { return linear * x + offset; }
  EvaluableMap as_map() const;
};

/// x -> weights . x + bias, the scalar affine model.
struct AffineFunctional {
  Vector weights;
  double bias = 0.0;

  double operator()(const Vector& x) const { return weights.dot(x) + bias; }
  EvaluableMap as_map() const;
};

/// Row-wise mean and per-coordinate unbiased standard deviation.
Vector column_means(const PointMatrix& points);
Vector column_stddevs(const PointMatrix& points);

/// Draw n standard normal rows of width d.
PointMatrix standard_normal(Index n, Index d, Rng& rng);

}  // namespace otl
