#include "otl/cli.hpp"

#include "otl/ot1d.hpp"
#include "otl/ot_nd.hpp"
#include "otl/synthetic.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

namespace otl {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::ordered_json;

std::string provenance_line(const ExperimentConfig& cfg) {
  return "# seed=" + std::to_string(cfg.rates.seed.value) + ",config_hash=" + config_hash(cfg.document) + "\n";
}

// Writes through a temporary file so a crash never leaves a half-written artifact.
void write_file(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << content;
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string summary(const ExperimentConfig& cfg, Clock::time_point start, ordered_json results) {
  ordered_json j;
  j["command"] = cfg.command;
  j["seed"] = cfg.rates.seed.value;
  j["config_hash"] = config_hash(cfg.document);
  j["wall_time_s"] = std::chrono::duration<double>(Clock::now() - start).count();
  j["results"] = std::move(results);
  j["config"] = cfg.document;
  return j.dump(2) + "\n";
}

struct DemoOutcome {
  MonotoneMap1D map_1d;
  EntropicMap map_nd;
  ordered_json report;
};

double diameter(const PointMatrix& a, const PointMatrix& b) {
  PointMatrix pooled(a.rows() + b.rows(), a.cols());
  pooled << a, b;
  double best = 0.0;
  for (Index i = 0; i < pooled.rows(); ++i) {
    for (Index j = i + 1; j < pooled.rows(); ++j) best = std::max(best, (pooled.row(i) - pooled.row(j)).squaredNorm());
  }
  return std::sqrt(best);
}

// Tensor grid with `per_axis` points per coordinate over mean +- radius * sd.
PointMatrix tensor_grid(const Vector& mean, const Matrix& cov, Index per_axis, double radius) {
  const Index d = mean.size();
  Index total = 1;
  for (Index k = 0; k < d; ++k) total *= per_axis;
  PointMatrix grid(total, d);
  for (Index i = 0; i < total; ++i) {
    Index rest = i;
    for (Index k = 0; k < d; ++k) {
      const Index digit = rest % per_axis;
      rest /= per_axis;
      const double t = -1.0 + 2.0 * static_cast<double>(digit) / static_cast<double>(per_axis - 1);
      grid(i, k) = mean(k) + radius * std::sqrt(cov(k, k)) * t;
    }
  }
  return grid;
}

ordered_json deviation_json(const Vector& sq_dev, double diam) {
  const double sup = std::sqrt(sq_dev.maxCoeff());
  const double l2 = std::sqrt(sq_dev.mean());
  ordered_json j;
  j["sup_deviation"] = sup;
  j["l2_deviation"] = l2;
  j["data_diameter"] = diam;
  j["relative_sup"] = diam > 0.0 ? sup / diam : 0.0;
  j["relative_l2"] = diam > 0.0 ? l2 / diam : 0.0;
  j["grid_points"] = sq_dev.size();
  return j;
}

constexpr Index kGrid1D = 1001;

DemoOutcome run_demo(const ExperimentConfig& cfg) {
  const GaussianTaskSpec& task = cfg.rates.task;
  const DemoConfig& demo = cfg.demo;
  Rng target_rng = make_rng(child_seed(cfg.rates.seed, {1}));
  Rng source_rng = make_rng(child_seed(cfg.rates.seed, {2}));
  const PointMatrix xt = sample_gaussian(task.target_mean, task.target_cov, demo.m, target_rng);
  const PointMatrix xs = sample_gaussian(task.source_mean, task.source_cov, demo.m_source, source_rng);

  // First coordinate: quantile map against the 1-D Gaussian Monge map.
  const Vector t0 = xt.col(0);
  const Vector s0 = xs.col(0);
  MonotoneMap1D map_1d = fit_quantile_map(std::span<const double>(t0.data(), static_cast<std::size_t>(t0.size())),
                                          std::span<const double>(s0.data(), static_cast<std::size_t>(s0.size())));
  const double sd_t = std::sqrt(task.target_cov(0, 0));
  const double ratio = std::sqrt(task.source_cov(0, 0)) / sd_t;
  Vector dev_1d(kGrid1D);
  for (Index i = 0; i < kGrid1D; ++i) {
    const double x = task.target_mean(0) + demo.grid_radius * sd_t * (-1.0 + 2.0 * static_cast<double>(i) / (kGrid1D - 1));
    const double exact = task.source_mean(0) + ratio * (x - task.target_mean(0));
    dev_1d(i) = (map_1d(x) - exact) * (map_1d(x) - exact);
  }
  const double diam_1d = std::max(t0.maxCoeff(), s0.maxCoeff()) - std::min(t0.minCoeff(), s0.minCoeff());

  // Full dimension: entropic map against the affine Monge map.
  EntropicMap map_nd = fit_entropic_map(SampleSet(xt), SampleSet(xs), cfg.rates.entropic);
  const AffineMap exact = gaussian_monge_map(task.target_mean, task.target_cov, task.source_mean, task.source_cov);
  const PointMatrix grid = tensor_grid(task.target_mean, task.target_cov, demo.grid_per_axis, demo.grid_radius);
  const PointMatrix fitted = map_nd.eval_batch(grid);
  Vector dev_nd(grid.rows());
  for (Index i = 0; i < grid.rows(); ++i) {
    dev_nd(i) = (fitted.row(i).transpose() - exact(grid.row(i).transpose())).squaredNorm();
  }

  ordered_json report;
  report["dim"] = task.dim();
  report["m"] = demo.m;
  report["m_source"] = demo.m_source;
  report["map_1d"] = deviation_json(dev_1d, diam_1d);
  report["map_nd"] = deviation_json(dev_nd, diameter(xt, xs));
  report["map_nd"]["epsilon"] = map_nd.epsilon();
  report["map_nd"]["bandwidth"] = map_nd.bandwidth();
  return DemoOutcome{std::move(map_1d), std::move(map_nd), std::move(report)};
}

}  // namespace

int cmd_rates(const ExperimentConfig& cfg) {
  const auto start = Clock::now();
  const RateResult result = run_rate_experiment(cfg.rates);

  std::ostringstream csv;
  csv << provenance_line(cfg);
  write_rates_csv(csv, result);
  ordered_json results = to_json(result);
  results["advantage_condition"] = advantage_condition(cfg.rates.task.alpha, cfg.rates.p);
  write_file(cfg.output_dir / "rates.csv", csv.str());
  write_file(cfg.output_dir / "summary.json", summary(cfg, start, std::move(results)));

  if (!result.valid) {
    std::cerr << "otl rates: more than half of the trials failed at some m; result invalidated\n";
    for (const auto& f : result.failures) std::cerr << "  m=" << f.m << " trial=" << f.trial << ": " << f.message << '\n';
    return kExitInvalidated;
  }
  return kExitOk;
}

int cmd_classify(const ExperimentConfig& cfg) {
  const auto start = Clock::now();
  const ClassificationResult result = run_classification_experiment(cfg.rates, cfg.threshold);

  std::ostringstream metrics, improvement;
  metrics << provenance_line(cfg);
  write_metrics_csv(metrics, result);
  improvement << provenance_line(cfg);
  write_improvement_csv(improvement, result);
  ordered_json results = to_json(result);
  results["threshold"] = cfg.threshold;
  write_file(cfg.output_dir / "metrics.csv", metrics.str());
  write_file(cfg.output_dir / "improvement.csv", improvement.str());
  write_file(cfg.output_dir / "summary.json", summary(cfg, start, std::move(results)));

  if (result.warnings > 0) std::cerr << "otl classify: " << result.warnings << " undefined metric values\n";
  if (!result.valid) {
    std::cerr << "otl classify: more than half of the trials failed at some m; result invalidated\n";
    return kExitInvalidated;
  }
  return kExitOk;
}

nlohmann::ordered_json ot_demo_report(const ExperimentConfig& cfg) { return run_demo(cfg).report; }

int cmd_ot_demo(const ExperimentConfig& cfg) {
  const auto start = Clock::now();
  const DemoOutcome outcome = run_demo(cfg);

  std::ostringstream map_1d, map_nd;
  map_1d << provenance_line(cfg);
  outcome.map_1d.write_csv(map_1d);
  map_nd << provenance_line(cfg);
  outcome.map_nd.write_csv(map_nd);
  ordered_json report = outcome.report;
  report["seed"] = cfg.rates.seed.value;
  report["config_hash"] = config_hash(cfg.document);
  write_file(cfg.output_dir / "map_1d.csv", map_1d.str());
  write_file(cfg.output_dir / "map_nd.csv", map_nd.str());
  write_file(cfg.output_dir / "report.json", report.dump(2) + "\n");
  write_file(cfg.output_dir / "summary.json", summary(cfg, start, outcome.report));
  return kExitOk;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Transfer learning through optimal transport maps"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::vector<CLI::App*> commands;
  for (const char* name : {"rates", "classify", "ot-demo"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON experiment config")->required();
    sub->add_option("--out", out_dir, "Output directory (overrides output_dir)");
    sub->add_option("--seed", seed, "Root seed (overrides the config)");
    commands.push_back(sub);
  }
  commands[0]->description("Error-rate sweep of the transfer and direct estimators");
  commands[1]->description("Synthetic classification sweep");
  commands[2]->description("Fit 1-D and d-D maps on a Gaussian pair and compare with the exact maps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string command = chosen->get_name();
  std::optional<std::uint64_t> seed_override;
  if (chosen->count("--seed") > 0) seed_override = seed;
  std::optional<std::filesystem::path> out_override;
  if (chosen->count("--out") > 0) out_override = out_dir;

  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path, command, seed_override, out_override);
  } catch (const ConfigError& e) {
    std::cerr << "otl " << command << ": " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (command == "rates") return cmd_rates(cfg);
    if (command == "classify") return cmd_classify(cfg);
    return cmd_ot_demo(cfg);
  } catch (const NumericalError& e) {
    std::cerr << "otl " << command << ": numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ConvergenceError& e) {
    std::cerr << "otl " << command << ": solver did not converge: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "otl " << command << ": " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace otl
