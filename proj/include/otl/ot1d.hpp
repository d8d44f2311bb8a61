#pragma once

#include "otl/core.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace otl {

/// Piecewise-linear nondecreasing map on the real line.
///
/// Between knots the map interpolates linearly. Outside the knot range it
/// continues with the slope of the nearest boundary segment, clamped below
/// at zero, so the map stays nondecreasing and Lipschitz everywhere. A map
/// with a single knot is constant.
class MonotoneMap1D {
 public:
  /// Throws std::invalid_argument unless knots_x is strictly increasing,
  /// knots_y is nondecreasing, both are finite and of equal nonzero length.
  MonotoneMap1D(std::vector<double> knots_x, std::vector<double> knots_y);

  double operator()(double x) const;

  const std::vector<double>& knots_x() const { return knots_x_; }
  const std::vector<double>& knots_y() const { return knots_y_; }
  std::size_t size() const { return knots_x_.size(); }

  double lower_slope() const;
  double upper_slope() const;
  /// Largest segment slope, which is also the global Lipschitz constant.
  double lipschitz() const;

  EvaluableMap as_map() const;

  /// Rows of `knot_x,knot_y`.
  void write_csv(std::ostream& out) const;
  /// Leading `#` comment lines are skipped.
  static MonotoneMap1D read_csv(std::istream& in);

 private:
  std::vector<double> knots_x_;
  std::vector<double> knots_y_;
};

/// Empirical quadratic-cost Monge map between two samples on the line.
///
/// Source rank i of n is sent to the target quantile at level (i + 0.5) / n,
/// read off the target's quantile function interpolated at levels
/// (j + 0.5) / n'. Duplicate source values share one knot carrying the
/// average of their matched quantiles.
MonotoneMap1D fit_quantile_map(std::span<const double> src, std::span<const double> tgt);
MonotoneMap1D fit_quantile_map(const SampleSet& src, const SampleSet& tgt);

inline double eval1d(const MonotoneMap1D& map, double x) { return map(x); }

/// Interpolated empirical quantile of an ascending sample at level q in
/// [0, 1], with plotting positions (j + 0.5) / n.
double sorted_quantile(std::span<const double> sorted, double q);

}  // namespace otl
