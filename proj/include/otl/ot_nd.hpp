#pragma once

#include "otl/core.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace otl {

/// Squared Euclidean distances between two point sets.
class CostMatrix {
 public:
  /// Throws std::invalid_argument on negative, non-finite or empty input.
  explicit CostMatrix(Matrix entries);

  const Matrix& entries() const { return entries_; }
  Index rows() const { return entries_.rows(); }
  Index cols() const { return entries_.cols(); }
  double operator()(Index i, Index j) const { return entries_(i, j); }
  double mean() const { return entries_.mean(); }

 private:
  Matrix entries_;
};

CostMatrix squared_cost(const SampleSet& a, const SampleSet& b);

struct Coupling {
  Matrix weights;
  Vector row_marginal;
  Vector col_marginal;

  double transport_cost(const CostMatrix& cost) const { return weights.cwiseProduct(cost.entries()).sum(); }
};

enum class SinkhornDomain {
  /// Log-domain below epsilon / mean cost = 0.01, scaling otherwise.
  Automatic,
  Scaling,
  Log,
};

/// Entropic regularization below this fraction of the mean cost always
/// runs in the log domain.
inline constexpr double kLogDomainThreshold = 0.01;

struct SinkhornOptions {
  double epsilon = 1.0;
  /// L1 bound on both marginal violations.
  double tol = 1e-9;
  int max_iter = 10000;
  SinkhornDomain domain = SinkhornDomain::Automatic;
  /// Problems with rows + cols up to this size that miss `tol` after
  /// `max_iter` sweeps get damped Newton steps on the dual. 0 disables.
  Index newton_max_size = 400;
};

struct SinkhornResult {
  Coupling plan;
  int iterations = 0;
  int newton_steps = 0;
  /// Sum of the L1 row and column marginal violations of `plan`.
  double violation = 0.0;
  bool converged = false;
  bool log_domain = false;
};

/// Entropic optimal transport by alternating row/column scaling.
///
/// Returns the last iterate with `converged == false` when neither the
/// sweeps nor the Newton stage bring the violation below `tol`. Throws NumericalError when the
/// scaling iteration underflows; rerun with SinkhornDomain::Log in that case.
SinkhornResult sinkhorn(const CostMatrix& cost, const Vector& row_marginal, const Vector& col_marginal,
                        const SinkhornOptions& options);

/// Image i is the conditional mean of the targets coupled to row i.
PointMatrix barycentric_projection(const Coupling& plan, const SampleSet& tgt_points);

/// Barycentric images of a point set, extended off-support by a Gaussian
/// kernel of length-scale `bandwidth`.
class EntropicMap {
 public:
  EntropicMap(PointMatrix support_in, PointMatrix support_out, double bandwidth, double epsilon);

  const PointMatrix& support_in() const { return support_in_; }
  const PointMatrix& support_out() const { return support_out_; }
  double bandwidth() const { return bandwidth_; }
  double epsilon() const { return epsilon_; }
  Index in_dim() const { return support_in_.cols(); }
  Index out_dim() const { return support_out_.cols(); }
  Index size() const { return support_in_.rows(); }

  Point operator()(const Point& x) const;
  /// Row-wise evaluation; equal to calling operator() on each row.
  PointMatrix eval_batch(const PointMatrix& x) const;

  EvaluableMap as_map() const;

  /// `# bandwidth=<h>,epsilon=<eps>` line, then `x1..xd,t1..td'` rows.
  void write_csv(std::ostream& out) const;
  /// Other `#` lines before the parameter line are skipped.
  static EntropicMap read_csv(std::istream& in);

 private:
  PointMatrix support_in_;
  PointMatrix support_out_;
  double bandwidth_;
  double epsilon_;
};

struct EntropicOptions {
  /// Absolute regularization; defaults to epsilon_scale * mean cost.
  std::optional<double> epsilon;
  double epsilon_scale = 0.05;
  /// Absolute kernel length-scale; defaults to
  /// bandwidth_scale * sd(src) * n^(-bandwidth_exponent).
  std::optional<double> bandwidth;
  double bandwidth_scale = 1.06;
  /// Defaults to 1/(4+d).
  std::optional<double> bandwidth_exponent;
  double tol = 1e-9;
  int max_iter = 10000;
  SinkhornDomain domain = SinkhornDomain::Automatic;
};

/// Mean of ||a_i - b_j||^2 over all pairs, in O(n + n').
double mean_squared_distance(const PointMatrix& a, const PointMatrix& b);

double default_bandwidth(const PointMatrix& src, double scale = 1.06,
                         std::optional<double> exponent = std::nullopt);

/// Throws ConvergenceError when Sinkhorn does not converge and
/// NumericalError when it underflows.
EntropicMap fit_entropic_map(const SampleSet& src, const SampleSet& tgt, const EntropicOptions& options = {});

inline Point eval_entropic(const EntropicMap& map, const Point& x) { return map(x); }

struct Assignment {
  std::vector<Index> permutation;
  double total_cost = 0.0;
};

/// Optimal assignment by exhaustive enumeration, first lexicographic
/// permutation among ties. Refuses n > 10.
Assignment exact_assignment_oracle(const CostMatrix& cost);

}  // namespace otl
