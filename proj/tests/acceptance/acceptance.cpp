// Acceptance harness: one PASS/FAIL line per criterion.
// Usage: otl_acceptance [criterion numbers...]   (default: all)

#include "otl/cli.hpp"
#include "otl/config.hpp"
#include "otl/metrics.hpp"
#include "otl/ot1d.hpp"
#include "otl/ot_nd.hpp"
#include "otl/pipeline.hpp"
#include "otl/rates.hpp"
#include "otl/synthetic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace otl;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

int worker_threads() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

// ---------------------------------------------------------------- 1

Outcome exponent_table() {
  struct Row {
    Index d;
    double alpha;
    double p;
    double transfer;
    bool log_corrected;
    double direct;
  };
  const std::vector<Row> rows{
      {1, 1.0, 1.0, 0.5, false, 1.0 / 3.0},       {1, kInf, 2.0, 0.5, false, 2.0 / 5.0},
      {1, 0.5, 4.0, 0.5, false, 4.0 / 9.0},       {2, 1.0, 1.0, 0.5, true, 1.0 / 4.0},
      {2, 3.0, 2.0, 0.5, true, 2.0 / 6.0},        {2, kInf, 3.0, 0.5, true, 3.0 / 8.0},
      {3, 1.0, 1.0, 2.0 / 5.0, false, 1.0 / 5.0}, {3, 2.0, 2.0, 3.0 / 7.0, false, 2.0 / 7.0},
      {3, kInf, 1.5, 0.5, false, 1.5 / 6.0},      {4, 1.0, 1.0, 1.0 / 3.0, false, 1.0 / 6.0},
      {4, 2.0, 2.0, 3.0 / 8.0, false, 2.0 / 8.0}, {4, kInf, 1.0, 0.5, false, 1.0 / 6.0},
      {4, 0.5, 3.0, 1.5 / 5.0, false, 3.0 / 10.0}, {5, 1.0, 2.0, 2.0 / 7.0, false, 2.0 / 9.0},
      {5, 4.0, 4.0, 5.0 / 13.0, false, 4.0 / 13.0}, {8, 1.0, 1.0, 2.0 / 10.0, false, 1.0 / 10.0},
      {8, 3.0, 2.5, 4.0 / 14.0, false, 2.5 / 13.0}, {10, 2.0, 4.0, 3.0 / 14.0, false, 4.0 / 18.0},
      {16, 1.0, 1.0, 2.0 / 18.0, false, 1.0 / 18.0}, {20, kInf, 2.0, 0.5, false, 2.0 / 24.0},
  };
  double worst = 0.0;
  bool flags_ok = true;
  for (const Row& r : rows) {
    const RateDescriptor t = theoretical_transfer_exponent(r.d, r.alpha);
    worst = std::max(worst, std::abs(t.exponent - r.transfer));
    worst = std::max(worst, std::abs(theoretical_direct_exponent(r.d, r.p) - r.direct));
    flags_ok = flags_ok && t.log_corrected == r.log_corrected;
  }
  return {worst <= 1e-15 && flags_ok && rows.size() == 20,
          std::to_string(rows.size()) + " rows, max |err| " + fmt("%.1e", worst) +
              (flags_ok ? "" : ", log-correction flag mismatch")};
}

// ---------------------------------------------------------------- 2

// Deviation is measured in L2 over the source sample, where the quantile
// coupling defines the map. The same fits are also scored under the full
// N(0,1) law, which mostly measures the linear tail extrapolation; that slope
// is reported but not judged.
Outcome monge_consistency_1d() {
  Rng eval_rng = make_rng(Seed{20250});
  std::normal_distribution<double> z;
  std::vector<double> eval(20000);
  for (double& v : eval) v = z(eval_rng);

  std::vector<std::pair<double, double>> in_sample, full_law;
  for (Index m = 50; m <= 6400; m *= 2) {
    double sum_in = 0.0, sum_full = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      Rng rng = make_rng(child_seed(Seed{2}, {static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(trial)}));
      std::vector<double> src(static_cast<std::size_t>(m)), tgt(static_cast<std::size_t>(m));
      for (double& v : src) v = z(rng);
      for (double& v : tgt) v = 1.0 + 2.0 * z(rng);
      const MonotoneMap1D f = fit_quantile_map(src, tgt);
      auto rms = [&f](const std::vector<double>& xs) {
        double sq = 0.0;
        for (double x : xs) {
          const double dev = f(x) - (1.0 + 2.0 * x);
          sq += dev * dev;
        }
        return std::sqrt(sq / static_cast<double>(xs.size()));
      };
      sum_in += rms(src);
      sum_full += rms(eval);
    }
    in_sample.emplace_back(static_cast<double>(m), sum_in / 20.0);
    full_law.emplace_back(static_cast<double>(m), sum_full / 20.0);
  }
  const SlopeFit fit = fit_loglog_slope(in_sample);
  const SlopeFit full = fit_loglog_slope(full_law);
  return {fit.slope >= -0.65 && fit.slope <= -0.35 && fit.r_squared >= 0.9,
          "slope " + fmt("%.3f", fit.slope) + ", R^2 " + fmt("%.3f", fit.r_squared) +
              " (under the full N(0,1) law with tail extrapolation: slope " + fmt("%.3f", full.slope) + ", R^2 " +
              fmt("%.3f", full.r_squared) + ")"};
}

// ---------------------------------------------------------------- 3

Outcome entropic_vs_exact() {
  Rng rng = make_rng(Seed{3});
  std::uniform_int_distribution<int> size(2, 8);
  std::uniform_int_distribution<int> dim(1, 5);
  double worst_rel = 0.0;
  double worst_violation = 0.0;
  int failures = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const Index n = size(rng);
    const Index d = dim(rng);
    const PointMatrix a = standard_normal(n, d, rng);
    const PointMatrix b = standard_normal(n, d, rng);
    const CostMatrix c = squared_cost(SampleSet(a), SampleSet(b));
    const Vector u = Vector::Constant(n, 1.0 / static_cast<double>(n));
    SinkhornOptions opts;
    opts.epsilon = 0.01 * c.mean();
    opts.tol = 1e-10;
    const SinkhornResult r = sinkhorn(c, u, u, opts);
    const double exact = exact_assignment_oracle(c).total_cost / static_cast<double>(n);
    const double rel = std::abs(r.plan.transport_cost(c) - exact) / exact;
    worst_rel = std::max(worst_rel, rel);
    worst_violation = std::max(worst_violation, r.violation);
    if (rel > 0.05 || r.violation > 1e-8) ++failures;
  }
  return {failures == 0, "max relative cost gap " + fmt("%.4f", worst_rel) + ", max violation " +
                             fmt("%.1e", worst_violation) + ", failing instances " + std::to_string(failures)};
}

// ---------------------------------------------------------------- 4

Outcome composition_exactness() {
  GaussianTaskSpec spec = kinked_task(3, 0.3, 0.5, 2.0, 0.0);
  spec.source_mean << 1.0, -0.5, 2.0;
  spec.source_cov << 2.0, 0.3, 0.0, 0.3, 1.0, 0.2, 0.0, 0.2, 0.5;
  spec.target_cov << 1.0, -0.2, 0.1, -0.2, 1.5, 0.0, 0.1, 0.0, 0.8;
  const GroundTruth truth = build_ground_truth(spec);
  const EvaluableMap composed =
      compose_transfer(truth.input_map.as_map(), truth.source_model.as_map(), truth.output_map);
  const TaskSample s = sample_task(spec, 10000, 10, Seed{4});
  const double loss = empirical_loss(composed, s.target);
  const double l2 = l2_error(composed, truth.target_map(), SampleSet(s.target.points()));
  return {loss <= 1e-20 && l2 == 0.0, "empirical loss " + fmt("%.1e", loss) + ", l2 error " + fmt("%.1e", l2)};
}

// ---------------------------------------------------------------- 5

RateConfig advantage_config() {
  RateConfig c;
  c.task = kinked_task(4, 0.0, 1.0, 3.0, 0.8);
  c.m_grid = {100, 400, 1600, 6400};
  c.trials = 20;
  c.m_source = 20000;
  c.n_eval = 20000;
  c.p = 1.0;
  c.entropic.epsilon_scale = 0.02;
  c.entropic.bandwidth_scale = 1.0;
  c.entropic.bandwidth_exponent = 3.0 / 16.0;
  c.entropic.tol = 1e-5;
  c.seed = Seed{5};
  c.threads = worker_threads();
  return c;
}

Outcome transfer_advantage() {
  const RateResult r = run_rate_experiment(advantage_config());
  if (!r.valid) return {false, "sweep invalidated by failed trials"};
  bool below = true;
  std::ostringstream detail;
  for (const RateRow& row : r.rows) {
    detail << "m=" << row.m << ": " << fmt("%.4f", row.mean_error_transfer) << " vs "
           << fmt("%.4f", row.mean_error_direct) << "; ";
    if (row.m <= 1600 && !(row.mean_error_transfer < row.mean_error_direct)) below = false;
  }
  const bool steeper = r.slope_transfer.slope < r.slope_direct.slope;
  detail << "slopes " << fmt("%.3f", r.slope_transfer.slope) << " vs " << fmt("%.3f", r.slope_direct.slope);
  return {below && steeper, detail.str()};
}

// ---------------------------------------------------------------- 6

RateConfig scarcity_config() {
  RateConfig c;
  c.task = kinked_task(4, 0.0, 1.0, 3.0, 0.8);
  c.m_grid = {100, 400, 1600};
  c.trials = 20;
  c.m_source = 5000;
  c.n_eval = 5000;
  c.entropic.epsilon_scale = 0.02;
  c.entropic.bandwidth_scale = 1.0;
  c.entropic.bandwidth_exponent = 3.0 / 16.0;
  c.entropic.tol = 1e-5;
  c.seed = Seed{11};
  c.threads = worker_threads();
  return c;
}

Outcome scarcity_trend() {
  const ClassificationResult r = run_classification_experiment(scarcity_config(), 1.0);
  if (!r.valid) return {false, "sweep invalidated by failed trials"};
  const auto& first = r.rows.front().improvement.accuracy;
  const auto& last = r.rows.back().improvement.accuracy;
  if (!first || !last) return {false, "accuracy improvement undefined"};
  std::ostringstream detail;
  detail << "delta accuracy";
  for (const auto& row : r.rows) {
    detail << " m=" << row.m << ": " << (row.improvement.accuracy ? fmt("%.2f%%", *row.improvement.accuracy) : "null");
  }
  return {*first > *last, detail.str()};
}

// ---------------------------------------------------------------- 7

Outcome improvement_table() {
  // Rows: 100%, 50%, 20%, 10% of the data. Columns: AUROC, accuracy,
  // precision, sensitivity; direct then transfer.
  const double direct[4][4] = {{1.00, 0.97, 0.98, 0.97}, {1.00, 0.90, 0.91, 0.90},
                               {0.95, 0.57, 0.56, 0.56}, {0.87, 0.35, 0.30, 0.34}};
  const double transfer[4][4] = {{1.00, 1.00, 1.00, 1.00}, {1.00, 1.00, 1.00, 1.00},
                                 {0.99, 0.85, 0.88, 0.86}, {0.96, 0.72, 0.72, 0.73}};
  const double expected[4][4] = {{0.02, 3.25, 2.07, 2.82}, {0.26, 11.40, 9.99, 10.98},
                                  {4.56, 47.95, 55.62, 54.99}, {10.18, 109.09, 142.69, 111.77}};
  double worst = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const auto delta = relative_improvement(transfer[i][j], direct[i][j]);
      worst = std::max(worst, delta ? std::abs(*delta - expected[i][j]) : kInf);
    }
  }
  return {worst <= 6.0, "16 entries, max |delta - expected| " + fmt("%.2f", worst) + " points"};
}

// ---------------------------------------------------------------- 8

double pairwise_auroc(const std::vector<double>& s, const std::vector<char>& l) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!l[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (l[j]) continue;
      pairs += 1.0;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

std::string harness_fingerprint() {
  RateConfig c;
  c.task = kinked_task(3, 0.0, 1.0, 3.0, 0.5);
  c.m_grid = {30, 60, 120};
  c.trials = 3;
  c.m_source = 300;
  c.n_eval = 500;
  c.seed = Seed{8};
  c.threads = worker_threads();
  std::ostringstream out;
  write_rates_csv(out, run_rate_experiment(c));
  const ClassificationResult cls = run_classification_experiment(c, 0.5);
  write_metrics_csv(out, cls);
  write_improvement_csv(out, cls);
  const ExperimentConfig demo = parse_config(
      nlohmann::json::parse(R"({"seed": 8, "demo": {"m": 300, "m_source": 300, "grid_per_axis": 7}})"), "ot-demo",
      std::nullopt, std::filesystem::temp_directory_path());
  out << ot_demo_report(demo).dump();
  return out.str();
}

Outcome property_suites() {
  std::ostringstream detail;
  bool pass = true;

  // Monotonicity of fitted 1-D maps on dense grids.
  {
    Rng rng = make_rng(Seed{81});
    std::uniform_int_distribution<int> size(1, 60);
    std::uniform_real_distribution<double> scale(0.05, 5.0), shift(-3.0, 3.0);
    std::normal_distribution<double> z;
    std::bernoulli_distribution coarse(0.3);
    long violations = 0;
    for (int fit = 0; fit < 10000; ++fit) {
      std::vector<double> src(static_cast<std::size_t>(size(rng))), tgt(static_cast<std::size_t>(size(rng)));
      const double s1 = scale(rng), s2 = scale(rng), m2 = shift(rng);
      const bool round_src = coarse(rng), round_tgt = coarse(rng);
      for (double& v : src) v = round_src ? std::round(s1 * z(rng)) : s1 * z(rng);
      for (double& v : tgt) v = round_tgt ? std::round(m2 + s2 * z(rng)) : m2 + s2 * z(rng);
      const MonotoneMap1D f = fit_quantile_map(src, tgt);
      const double lo = -4.0 * s1 - 1.0, hi = 4.0 * s1 + 1.0;
      double prev = f(lo);
      for (int k = 1; k <= 1000; ++k) {
        const double y = f(lo + (hi - lo) * k / 1000.0);
        if (y < prev) ++violations;
        prev = y;
      }
    }
    pass = pass && violations == 0;
    detail << "monotonicity violations " << violations << "; ";
  }

  // AUROC against the pairwise oracle.
  {
    Rng rng = make_rng(Seed{82});
    std::uniform_int_distribution<int> size(2, 200), level(0, 20);
    std::bernoulli_distribution coin(0.5);
    double worst = 0.0;
    int done = 0;
    while (done < 100) {
      const auto n = static_cast<std::size_t>(size(rng));
      std::vector<double> s(n);
      std::vector<char> l(n);
      auto b = std::make_unique<bool[]>(n);
      for (std::size_t i = 0; i < n; ++i) {
        s[i] = level(rng) / 20.0;
        l[i] = coin(rng);
        b[i] = l[i] != 0;
      }
      if (std::count(l.begin(), l.end(), 1) == 0 || std::count(l.begin(), l.end(), 0) == 0) continue;
      worst = std::max(worst, std::abs(auroc(s, std::span<const bool>(b.get(), n)) - pairwise_auroc(s, l)));
      ++done;
    }
    pass = pass && worst <= 1e-12;
    detail << "AUROC max |err| " << fmt("%.1e", worst) << "; ";
  }

  // Gaussian Monge maps push S1 onto S2.
  {
    Rng rng = make_rng(Seed{83});
    double worst = 0.0;
    for (int k = 0; k < 80; ++k) {
      const Index d = 1 + k % 8;
      const PointMatrix g1 = standard_normal(d, d, rng), g2 = standard_normal(d, d, rng);
      const Matrix s1 = g1 * g1.transpose() + 0.1 * Matrix::Identity(d, d);
      const Matrix s2 = g2 * g2.transpose() + 0.1 * Matrix::Identity(d, d);
      const AffineMap t = gaussian_monge_map(Vector::Zero(d), s1, Vector::Zero(d), s2);
      worst = std::max(worst, (t.linear * s1 * t.linear.transpose() - s2).norm());
    }
    pass = pass && worst <= 1e-10;
    detail << "Monge max Frobenius " << fmt("%.1e", worst) << "; ";
  }

  // Bit reproducibility of the harness.
  {
    const bool same = harness_fingerprint() == harness_fingerprint();
    pass = pass && same;
    detail << (same ? "harness reruns identical" : "harness reruns differ");
  }
  return {pass, detail.str()};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "exponent formulas", 1.0, exponent_table},
      {2, "1-D Monge consistency", 60.0, monge_consistency_1d},
      {3, "entropic vs exact oracle", 30.0, entropic_vs_exact},
      {4, "composition exactness", 5.0, composition_exactness},
      {5, "transfer advantage (rough regressor)", 900.0, transfer_advantage},
      {6, "scarcity trend (classification)", 900.0, scarcity_trend},
      {7, "relative improvement table", 1.0, improvement_table},
      {8, "property suites", 120.0, property_suites},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const Criterion& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << o.detail << " ["
              << fmt("%.2f", secs) << " s of " << fmt("%.0f", c.budget_s) << " s" << (in_time ? "" : ", over budget")
              << "]" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
