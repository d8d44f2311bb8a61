#pragma once

#include "otl/core.hpp"
#include "otl/ot_nd.hpp"
#include "otl/synthetic.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace otl {

/// Polynomial error rate m^-exponent, optionally with a sqrt(log m) factor.
struct RateDescriptor {
  double exponent = 0.0;
  bool log_corrected = false;
};

/// Rate of the transfer estimator: 1/2 for d = 1, log-corrected 1/2 for
/// d = 2, (alpha + 1) / (2 alpha + d) for d >= 3 (1/2 when alpha is infinite).
RateDescriptor theoretical_transfer_exponent(Index d, double alpha);

/// p / (2p + d).
double theoretical_direct_exponent(Index d, double p);

/// alpha + 1 > p.
bool advantage_condition(double alpha, double p);

struct SlopeFit {
  double slope = 0.0;
  /// Zero when the fit has no residual degrees of freedom.
  double std_error = 0.0;
  double r_squared = 0.0;
  /// Set by the harness when errors sit at the numerical floor and no
  /// meaningful slope exists; the other fields are then zero.
  bool degenerate = false;
};

/// Least squares of log(error) on log(m). Needs >= 2 points with distinct m
/// and positive errors, else std::invalid_argument.
SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points);

/// Errors below this are treated as exact and make a slope degenerate.
inline constexpr double kErrorFloor = 1e-12;

struct RateConfig {
  GaussianTaskSpec task;
  std::vector<Index> m_grid{100, 400, 1600, 6400};
  int trials = 20;
  Index m_source = 20000;
  Index n_eval = 20000;
  /// Smoothness assumed by the direct baseline.
  double p = 1.0;
  double direct_bandwidth_scale = 1.0;
  EntropicOptions entropic;
  /// Use the closed-form input and output maps instead of fitted ones.
  bool oracle_maps = false;
  Seed seed{0};
  /// Worker threads for the trial loop; results do not depend on it.
  int threads = 1;

  /// Throws std::invalid_argument when an invariant fails.
  void validate() const;
};

struct RateRow {
  Index m = 0;
  double mean_error_transfer = 0.0;
  double sd_transfer = 0.0;
  double mean_error_direct = 0.0;
  double sd_direct = 0.0;
  int failed_trials = 0;
};

struct TrialFailure {
  Index m = 0;
  int trial = 0;
  std::string message;
};

struct RateResult {
  std::vector<RateRow> rows;
  SlopeFit slope_transfer;
  SlopeFit slope_direct;
  RateDescriptor theory_transfer;
  double theory_direct = 0.0;
  std::vector<TrialFailure> failures;
  /// False when some row lost more than half of its trials.
  bool valid = true;
};

/// Seed of trial `trial` at sample size `m`.
Seed trial_seed(Seed root, Index m, int trial);

/// Sweeps the m grid. Each trial samples a task, fits both estimators on the
/// same target data and measures their L2 error on a fresh sample of
/// n_eval target inputs. A failing fit aborts only its trial.
RateResult run_rate_experiment(const RateConfig& config);

/// Header `m,mean_err_transfer,sd_transfer,mean_err_direct,sd_direct`.
void write_rates_csv(std::ostream& out, const RateResult& result);
nlohmann::ordered_json to_json(const RateResult& result);

/// Trial averages; empty where no trial defined the metric.
struct MetricSet {
  std::optional<double> auroc;
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> sensitivity;
};

struct ClassificationRow {
  Index m = 0;
  MetricSet direct;
  MetricSet transfer;
  /// Relative improvement of transfer over direct, in percent.
  MetricSet improvement;
  /// Trials where some metric was undefined (one-class labels or no
  /// positive predictions).
  int degenerate_trials = 0;
  int failed_trials = 0;
};

struct ClassificationResult {
  std::vector<ClassificationRow> rows;
  /// Number of undefined per-trial metric values.
  int warnings = 0;
  std::vector<TrialFailure> failures;
  bool valid = true;
};

/// Label of a point is [f*(x) + noise > threshold]. Both regressors are fit on
/// the continuous responses and used as scores. Hard predictions use the
/// score cut that reproduces the training prevalence on training inputs.
ClassificationResult run_classification_experiment(const RateConfig& config, double threshold);

/// Score cut such that the top round(prevalence * n) scores are positive.
/// +inf when none should be, -inf when all should be.
double prevalence_cut(std::vector<double> scores, double prevalence);

/// Header `m,auroc_direct,auroc_transfer,accuracy_direct,accuracy_transfer,
/// precision_direct,precision_transfer,sensitivity_direct,sensitivity_transfer`;
/// undefined values are written as `null`.
void write_metrics_csv(std::ostream& out, const ClassificationResult& result);
/// Header `m,delta_auroc,delta_accuracy,delta_precision,delta_sensitivity`.
void write_improvement_csv(std::ostream& out, const ClassificationResult& result);
nlohmann::ordered_json to_json(const ClassificationResult& result);

}  // namespace otl
