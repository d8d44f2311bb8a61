#include "otl/rates.hpp"

#include "otl/metrics.hpp"
#include "otl/pipeline.hpp"
#include "otl/regression.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <memory>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <thread>

namespace otl {

RateDescriptor theoretical_transfer_exponent(Index d, double alpha) {
  if (d < 1) throw std::invalid_argument("theoretical_transfer_exponent: d must be >= 1");
  if (!(alpha > 0.0)) throw std::invalid_argument("theoretical_transfer_exponent: alpha must be positive");
  if (d == 1) return {0.5, false};
  if (d == 2) return {0.5, true};
  if (std::isinf(alpha)) return {0.5, false};
  return {(alpha + 1.0) / (2.0 * alpha + static_cast<double>(d)), false};
}

double theoretical_direct_exponent(Index d, double p) {
  if (d < 1) throw std::invalid_argument("theoretical_direct_exponent: d must be >= 1");
  if (!(p > 0.0)) throw std::invalid_argument("theoretical_direct_exponent: p must be positive");
  if (std::isinf(p)) return 0.5;
  return p / (2.0 * p + static_cast<double>(d));
}

bool advantage_condition(double alpha, double p) { return alpha + 1.0 > p; }

SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
  const std::size_t n = points.size();
  if (n < 2) throw std::invalid_argument("fit_loglog_slope: slope needs >= 2 points");
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [m, err] = points[i];
    if (!(m > 0.0) || !std::isfinite(m)) throw std::invalid_argument("fit_loglog_slope: m must be positive");
    if (!(err > 0.0) || !std::isfinite(err)) throw std::invalid_argument("fit_loglog_slope: error must be positive");
    lx[i] = std::log(m);
    ly[i] = std::log(err);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_loglog_slope: m values must be distinct");

  SlopeFit fit;
  fit.slope = sxy / sxx;
  double sse = 0.0;
  const double intercept = my - fit.slope * mx;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ly[i] - intercept - fit.slope * lx[i];
    sse += r * r;
  }
  fit.r_squared = syy > 0.0 ? std::max(0.0, 1.0 - sse / syy) : 1.0;
  if (n > 2) fit.std_error = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
  return fit;
}

void RateConfig::validate() const {
  task.validate();
  if (m_grid.size() < 2) throw std::invalid_argument("m_grid: slope needs >= 2 points");
  for (std::size_t i = 0; i < m_grid.size(); ++i) {
    if (m_grid[i] < 1) throw std::invalid_argument("m_grid: sample sizes must be >= 1");
    if (i > 0 && m_grid[i] <= m_grid[i - 1]) throw std::invalid_argument("m_grid: must be strictly increasing");
  }
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (m_source < 1) throw std::invalid_argument("m_source must be >= 1");
  if (n_eval < 1) throw std::invalid_argument("n_eval must be >= 1");
  if (!(p >= 1.0 && p <= 4.0)) throw std::invalid_argument("p must lie in [1, 4]");
  if (!(direct_bandwidth_scale > 0.0)) throw std::invalid_argument("direct_bandwidth_scale must be positive");
  if (entropic.epsilon && !(*entropic.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (!(entropic.epsilon_scale > 0.0)) throw std::invalid_argument("epsilon_scale must be positive");
  if (entropic.bandwidth && !(*entropic.bandwidth > 0.0)) throw std::invalid_argument("bandwidth must be positive");
  if (!(entropic.bandwidth_scale > 0.0)) throw std::invalid_argument("bandwidth_scale must be positive");
  if (entropic.bandwidth_exponent && !(*entropic.bandwidth_exponent >= 0.0)) {
    throw std::invalid_argument("bandwidth_exponent must be nonnegative");
  }
  if (!(entropic.tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (entropic.max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
}

Seed trial_seed(Seed root, Index m, int trial) {
  return child_seed(root, {static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(trial)});
}

namespace {

template <typename T>
struct Outcome {
  std::optional<T> value;
  std::string error;
};

// Runs job(i) for i in [0, count) on `threads` workers. Each outcome lands in
// its own slot, so the result does not depend on scheduling.
template <typename T, typename Job>
std::vector<Outcome<T>> run_jobs(std::size_t count, int threads, const Job& job) {
  std::vector<Outcome<T>> out(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        out[i].value = job(i);
      } catch (const std::exception& e) {
        out[i].error = e.what();
      }
    }
  };
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || count <= 1) {
    worker();
    return out;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, count); ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return out;
}

Vector transfer_predictions(const RateConfig& config, const GroundTruth& truth, const TaskSample& sample,
                            const PointMatrix& x) {
  if (config.oracle_maps) {
    const EvaluableMap composed =
        compose_transfer(truth.input_map.as_map(), truth.source_model.as_map(), truth.output_map);
    Vector out(x.rows());
    for (Index i = 0; i < x.rows(); ++i) out(i) = composed.scalar(x.row(i).transpose());
    return out;
  }
  const TransferEstimator est =
      fit_transfer(config.task.source_model.as_map(), SampleSet(sample.source.points()), sample.target,
                   config.entropic);
  return est.predict_batch(x);
}

struct ErrorPair {
  double transfer = 0.0;
  double direct = 0.0;
};

struct Stats {
  double mean = 0.0;
  double sd = 0.0;
};

Stats mean_sd(const std::vector<double>& v) {
  Stats s;
  if (v.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double acc = 0.0;
    for (double x : v) acc += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(acc / static_cast<double>(v.size() - 1));
  }
  return s;
}

SlopeFit slope_or_degenerate(const std::vector<RateRow>& rows, bool transfer) {
  std::vector<std::pair<double, double>> points;
  for (const auto& r : rows) {
    const double err = transfer ? r.mean_error_transfer : r.mean_error_direct;
    if (!(err >= kErrorFloor)) {
      SlopeFit fit;
      fit.degenerate = true;
      return fit;
    }
    points.emplace_back(static_cast<double>(r.m), err);
  }
  return fit_loglog_slope(points);
}

std::vector<TrialFailure> collect_failures(const std::vector<Index>& grid, int trials, const auto& outcomes) {
  std::vector<TrialFailure> failures;
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    if (outcomes[k].value) continue;
    failures.push_back({grid[k / static_cast<std::size_t>(trials)], static_cast<int>(k % static_cast<std::size_t>(trials)),
                        outcomes[k].error});
  }
  return failures;
}

}  // namespace

RateResult run_rate_experiment(const RateConfig& config) {
  config.validate();
  const GroundTruth truth = build_ground_truth(config.task);
  const auto trials = static_cast<std::size_t>(config.trials);
  const std::size_t jobs = config.m_grid.size() * trials;

  const auto outcomes = run_jobs<ErrorPair>(jobs, config.threads, [&](std::size_t k) {
    const Index m = config.m_grid[k / trials];
    const Seed seed = trial_seed(config.seed, m, static_cast<int>(k % trials));
    const TaskSample sample = sample_task(config.task, m, config.m_source, seed);
    Rng eval_rng = make_rng(child_seed(seed, {4}));
    const PointMatrix x_eval = sample_gaussian(config.task.target_mean, config.task.target_cov, config.n_eval, eval_rng);
    const Vector truth_eval = truth.target_regressor_batch(x_eval);

    ErrorPair e;
    e.transfer = l2_error(transfer_predictions(config, truth, sample, x_eval), truth_eval);
    e.direct = l2_error(fit_direct(sample.target, config.p, config.direct_bandwidth_scale).predict_batch(x_eval),
                        truth_eval);
    return e;
  });

  RateResult result;
  result.theory_transfer = theoretical_transfer_exponent(config.task.dim(), config.task.alpha);
  result.theory_direct = theoretical_direct_exponent(config.task.dim(), config.p);
  result.failures = collect_failures(config.m_grid, config.trials, outcomes);
  for (std::size_t i = 0; i < config.m_grid.size(); ++i) {
    std::vector<double> tl, direct;
    for (std::size_t t = 0; t < trials; ++t) {
      const auto& o = outcomes[i * trials + t];
      if (!o.value) continue;
      tl.push_back(o.value->transfer);
      direct.push_back(o.value->direct);
    }
    RateRow row;
    row.m = config.m_grid[i];
    row.failed_trials = static_cast<int>(trials - tl.size());
    const Stats st = mean_sd(tl);
    const Stats sd = mean_sd(direct);
    row.mean_error_transfer = st.mean;
    row.sd_transfer = st.sd;
    row.mean_error_direct = sd.mean;
    row.sd_direct = sd.sd;
    if (2 * static_cast<std::size_t>(row.failed_trials) > trials) result.valid = false;
    result.rows.push_back(row);
  }
  if (result.valid) {
    result.slope_transfer = slope_or_degenerate(result.rows, true);
    result.slope_direct = slope_or_degenerate(result.rows, false);
  }
  return result;
}

namespace {

nlohmann::ordered_json slope_json(const SlopeFit& s) {
  nlohmann::ordered_json j;
  j["slope"] = s.slope;
  j["std_error"] = s.std_error;
  j["r_squared"] = s.r_squared;
  j["degenerate"] = s.degenerate;
  return j;
}

nlohmann::ordered_json failures_json(const std::vector<TrialFailure>& failures) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& f : failures) arr.push_back({{"m", f.m}, {"trial", f.trial}, {"message", f.message}});
  return arr;
}

void write_optional(std::ostream& out, const std::optional<double>& v) {
  if (v) {
    out << *v;
  } else {
    out << "null";
  }
}

nlohmann::ordered_json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

nlohmann::ordered_json metric_set_json(const MetricSet& s) {
  return {{"auroc", optional_json(s.auroc)},
          {"accuracy", optional_json(s.accuracy)},
          {"precision", optional_json(s.precision)},
          {"sensitivity", optional_json(s.sensitivity)}};
}

}  // namespace

void write_rates_csv(std::ostream& out, const RateResult& result) {
  out << "m,mean_err_transfer,sd_transfer,mean_err_direct,sd_direct\n";
  out << std::setprecision(17);
  for (const auto& r : result.rows) {
    out << r.m << ',' << r.mean_error_transfer << ',' << r.sd_transfer << ',' << r.mean_error_direct << ','
        << r.sd_direct << '\n';
  }
}

nlohmann::ordered_json to_json(const RateResult& result) {
  nlohmann::ordered_json j;
  j["valid"] = result.valid;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : result.rows) {
    rows.push_back({{"m", r.m},
                    {"mean_err_transfer", r.mean_error_transfer},
                    {"sd_transfer", r.sd_transfer},
                    {"mean_err_direct", r.mean_error_direct},
                    {"sd_direct", r.sd_direct},
                    {"failed_trials", r.failed_trials}});
  }
  j["rows"] = rows;
  j["slope_transfer"] = slope_json(result.slope_transfer);
  j["slope_direct"] = slope_json(result.slope_direct);
  j["theory_transfer"] = {{"exponent", result.theory_transfer.exponent},
                          {"log_corrected", result.theory_transfer.log_corrected}};
  j["theory_direct"] = {{"exponent", result.theory_direct}};
  j["failures"] = failures_json(result.failures);
  return j;
}

double prevalence_cut(std::vector<double> scores, double prevalence) {
  if (scores.empty()) throw std::invalid_argument("prevalence_cut: no scores");
  if (!(prevalence >= 0.0 && prevalence <= 1.0)) throw std::invalid_argument("prevalence_cut: prevalence outside [0, 1]");
  const std::size_t n = scores.size();
  const auto k = static_cast<std::size_t>(std::llround(prevalence * static_cast<double>(n)));
  if (k == 0) return std::numeric_limits<double>::infinity();
  if (k >= n) return -std::numeric_limits<double>::infinity();
  std::sort(scores.begin(), scores.end());
  return scores[n - k];
}

namespace {

struct TrialMetrics {
  MetricSet direct;
  MetricSet transfer;
};

MetricSet score_metrics(const Vector& scores, const std::vector<bool>& labels_vec, double cut) {
  // std::vector<bool> has no contiguous storage.
  const auto labels = std::make_unique<bool[]>(labels_vec.size());
  bool any_pos = false, any_neg = false;
  for (std::size_t i = 0; i < labels_vec.size(); ++i) {
    labels[i] = labels_vec[i];
    (labels[i] ? any_pos : any_neg) = true;
  }
  const std::span<const double> s(scores.data(), static_cast<std::size_t>(scores.size()));
  const std::span<const bool> l(labels.get(), labels_vec.size());
  const ConfusionCounts c = confusion(s, l, cut);
  MetricSet out;
  if (any_pos && any_neg) out.auroc = auroc(s, l);
  out.accuracy = accuracy(c);
  out.precision = precision(c);
  out.sensitivity = sensitivity(c);
  return out;
}

int undefined_count(const MetricSet& s) {
  return static_cast<int>(!s.auroc) + static_cast<int>(!s.accuracy) + static_cast<int>(!s.precision) +
         static_cast<int>(!s.sensitivity);
}

std::optional<double> mean_defined(const std::vector<std::optional<double>>& values) {
  double sum = 0.0;
  int count = 0;
  for (const auto& v : values) {
    if (!v) continue;
    sum += *v;
    ++count;
  }
  if (count == 0) return std::nullopt;
  return sum / count;
}

MetricSet average(const std::vector<MetricSet>& sets) {
  std::vector<std::optional<double>> a, b, c, d;
  for (const auto& s : sets) {
    a.push_back(s.auroc);
    b.push_back(s.accuracy);
    c.push_back(s.precision);
    d.push_back(s.sensitivity);
  }
  return {mean_defined(a), mean_defined(b), mean_defined(c), mean_defined(d)};
}

std::optional<double> improvement(const std::optional<double>& tl, const std::optional<double>& direct) {
  if (!tl || !direct) return std::nullopt;
  return relative_improvement(*tl, *direct);
}

}  // namespace

ClassificationResult run_classification_experiment(const RateConfig& config, double threshold) {
  config.validate();
  if (!std::isfinite(threshold)) throw std::invalid_argument("threshold must be finite");
  const GroundTruth truth = build_ground_truth(config.task);
  const auto trials = static_cast<std::size_t>(config.trials);
  const std::size_t jobs = config.m_grid.size() * trials;

  const auto outcomes = run_jobs<TrialMetrics>(jobs, config.threads, [&](std::size_t k) {
    const Index m = config.m_grid[k / trials];
    const Seed seed = trial_seed(config.seed, m, static_cast<int>(k % trials));
    const TaskSample sample = sample_task(config.task, m, config.m_source, seed);
    const Vector& y_train = sample.target.responses();
    Index train_positives = 0;
    for (Index i = 0; i < y_train.size(); ++i) train_positives += y_train(i) > threshold ? 1 : 0;
    const double prevalence = static_cast<double>(train_positives) / static_cast<double>(m);

    Rng eval_rng = make_rng(child_seed(seed, {4}));
    const PointMatrix x_eval = sample_gaussian(config.task.target_mean, config.task.target_cov, config.n_eval, eval_rng);
    const Vector truth_eval = truth.target_regressor_batch(x_eval);
    Rng noise_rng = make_rng(child_seed(seed, {5}));
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<bool> labels(static_cast<std::size_t>(config.n_eval));
    for (Index i = 0; i < config.n_eval; ++i) {
      const double eps = config.task.noise_sd > 0.0 ? config.task.noise_sd * noise(noise_rng) : 0.0;
      labels[static_cast<std::size_t>(i)] = truth_eval(i) + eps > threshold;
    }

    // Both score functions are evaluated on training and evaluation inputs in one batch.
    PointMatrix x_all(m + config.n_eval, config.task.dim());
    x_all.topRows(m) = sample.target.points();
    x_all.bottomRows(config.n_eval) = x_eval;
    const Vector tl_all = transfer_predictions(config, truth, sample, x_all);
    const Vector direct_all = fit_direct(sample.target, config.p, config.direct_bandwidth_scale).predict_batch(x_all);

    auto evaluate = [&](const Vector& all) {
      const Vector train = all.head(m);
      const double cut = prevalence_cut(std::vector<double>(train.data(), train.data() + m), prevalence);
      return score_metrics(all.tail(config.n_eval), labels, cut);
    };
    return TrialMetrics{evaluate(direct_all), evaluate(tl_all)};
  });

  ClassificationResult result;
  result.failures = collect_failures(config.m_grid, config.trials, outcomes);
  for (std::size_t i = 0; i < config.m_grid.size(); ++i) {
    ClassificationRow row;
    row.m = config.m_grid[i];
    std::vector<MetricSet> direct, tl;
    for (std::size_t t = 0; t < trials; ++t) {
      const auto& o = outcomes[i * trials + t];
      if (!o.value) {
        ++row.failed_trials;
        continue;
      }
      const int undefined = undefined_count(o.value->direct) + undefined_count(o.value->transfer);
      if (undefined > 0) ++row.degenerate_trials;
      result.warnings += undefined;
      direct.push_back(o.value->direct);
      tl.push_back(o.value->transfer);
    }
    row.direct = average(direct);
    row.transfer = average(tl);
    row.improvement = {improvement(row.transfer.auroc, row.direct.auroc),
                       improvement(row.transfer.accuracy, row.direct.accuracy),
                       improvement(row.transfer.precision, row.direct.precision),
                       improvement(row.transfer.sensitivity, row.direct.sensitivity)};
    if (2 * static_cast<std::size_t>(row.failed_trials) > trials) result.valid = false;
    result.rows.push_back(row);
  }
  return result;
}

void write_metrics_csv(std::ostream& out, const ClassificationResult& result) {
  out << "m,auroc_direct,auroc_transfer,accuracy_direct,accuracy_transfer,precision_direct,precision_transfer,"
         "sensitivity_direct,sensitivity_transfer\n";
  out << std::setprecision(17);
  for (const auto& r : result.rows) {
    out << r.m;
    const std::pair<const std::optional<double>&, const std::optional<double>&> cols[] = {
        {r.direct.auroc, r.transfer.auroc},
        {r.direct.accuracy, r.transfer.accuracy},
        {r.direct.precision, r.transfer.precision},
        {r.direct.sensitivity, r.transfer.sensitivity}};
    for (const auto& [d, t] : cols) {
      out << ',';
      write_optional(out, d);
      out << ',';
      write_optional(out, t);
    }
    out << '\n';
  }
}

void write_improvement_csv(std::ostream& out, const ClassificationResult& result) {
  out << "m,delta_auroc,delta_accuracy,delta_precision,delta_sensitivity\n";
  out << std::setprecision(17);
  for (const auto& r : result.rows) {
    out << r.m;
    for (const auto* v : {&r.improvement.auroc, &r.improvement.accuracy, &r.improvement.precision,
                          &r.improvement.sensitivity}) {
      out << ',';
      write_optional(out, *v);
    }
    out << '\n';
  }
}

nlohmann::ordered_json to_json(const ClassificationResult& result) {
  nlohmann::ordered_json j;
  j["valid"] = result.valid;
  j["warnings"] = result.warnings;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : result.rows) {
    rows.push_back({{"m", r.m},
                    {"direct", metric_set_json(r.direct)},
                    {"transfer", metric_set_json(r.transfer)},
                    {"improvement_percent", metric_set_json(r.improvement)},
                    {"degenerate_trials", r.degenerate_trials},
                    {"failed_trials", r.failed_trials}});
  }
  j["rows"] = rows;
  j["failures"] = failures_json(result.failures);
  return j;
}

}  // namespace otl
