#pragma once

#include "otl/core.hpp"

#include <vector>

namespace otl {

enum class DirectKind { NadarayaWatson, LocalPolynomial };

/// Kernel regression baseline trained directly on target data.
///
/// Per-coordinate kernel widths are `bandwidth() * scales()(k)`, where the
/// scales are the training sample standard deviations.
class DirectEstimator {
 public:
  DirectEstimator(SampleSet train, int degree, double bandwidth);

  DirectKind kind() const { return degree_ == 0 ? DirectKind::NadarayaWatson : DirectKind::LocalPolynomial; }
  int degree() const { return degree_; }
  double bandwidth() const { return bandwidth_; }
  const Vector& scales() const { return scales_; }
  const SampleSet& train() const { return train_; }
  Index dim() const { return train_.dim(); }

  double operator()(const Point& x) const;
  Vector predict_batch(const PointMatrix& x) const;

  EvaluableMap as_map() const;

 private:
  double nadaraya_watson(const Vector& weights) const;
  double local_polynomial(const Point& x, const Vector& weights) const;
  Vector kernel_weights(const Point& x) const;

  SampleSet train_;
  int degree_;
  double bandwidth_;
  Vector scales_;
  std::vector<std::vector<int>> exponents_;
};

/// Fit with polynomial degree ceil(p) - 1 and bandwidth c_bw * n^(-1/(2p+d)).
/// Requires n >= 5 and p in [1, 4].
DirectEstimator fit_direct(const SampleSet& train, double p, double c_bw = 1.0);

inline double predict_direct(const DirectEstimator& est, const Point& x) { return est(x); }

/// Number of monomials of total degree <= degree in d variables.
Index monomial_count(Index d, int degree);

}  // namespace otl
