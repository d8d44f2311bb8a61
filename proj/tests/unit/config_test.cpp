#include "otl/cli.hpp"
#include "otl/config.hpp"

#include <doctest.h>

#include <filesystem>

using namespace otl;
using nlohmann::json;

namespace {

std::filesystem::path scratch_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "otl_config_test";
  std::filesystem::create_directories(dir);
  return dir;
}

ExperimentConfig parse(const json& doc, const char* command, std::optional<std::uint64_t> seed = std::nullopt) {
  return parse_config(doc, command, seed, scratch_dir());
}

json rates_doc() {
  return json::parse(R"({
    "seed": 5,
    "m_grid": [50, 100],
    "trials": 2,
    "m_source": 200,
    "n_eval": 300,
    "task": {"kind": "kinked", "dim": 3, "noise_sd": 0.2},
    "solver": {"epsilon_scale": 0.05, "tol": 1e-6}
  })");
}

}  // namespace

TEST_CASE("a complete rates config parses") {
  const ExperimentConfig cfg = parse(rates_doc(), "rates");
  CHECK(cfg.rates.seed.value == 5);
  CHECK(cfg.rates.m_grid == std::vector<Index>{50, 100});
  CHECK(cfg.rates.trials == 2);
  CHECK(cfg.rates.task.dim() == 3);
  CHECK(cfg.rates.task.noise_sd == 0.2);
  CHECK(cfg.rates.entropic.epsilon_scale == 0.05);
  CHECK(cfg.rates.entropic.tol == 1e-6);
  CHECK_FALSE(cfg.document.contains("output_dir"));
}

TEST_CASE("defaults per command") {
  const ExperimentConfig r = parse(json::object(), "rates");
  CHECK(r.rates.task.dim() == 4);
  CHECK(r.rates.m_grid.size() == 4);
  const ExperimentConfig d = parse(json::object(), "ot-demo");
  CHECK(d.rates.task.dim() == 2);
  CHECK(d.demo.m == 2000);
}

TEST_CASE("invalid configs are rejected") {
  json doc = rates_doc();
  doc["m_grid"] = {100};
  CHECK_THROWS_AS(parse(doc, "rates"), ConfigError);

  doc = rates_doc();
  doc["unknown_key"] = 1;
  CHECK_THROWS_AS(parse(doc, "rates"), ConfigError);

  doc = rates_doc();
  doc["solver"]["epsilon"] = 0.0;
  CHECK_THROWS_AS(parse(doc, "rates"), ConfigError);

  doc = rates_doc();
  doc["solver"]["domain"] = "fast";
  CHECK_THROWS_AS(parse(doc, "rates"), ConfigError);

  doc = rates_doc();
  doc["trials"] = "many";
  CHECK_THROWS_AS(parse(doc, "rates"), ConfigError);

  doc = rates_doc();
  doc["task"]["dim"] = 0;
  CHECK_THROWS_AS(parse(doc, "rates"), ConfigError);

  doc = rates_doc();
  doc["p"] = 5.0;
  CHECK_THROWS_AS(parse(doc, "rates"), ConfigError);

  // classify needs a threshold; rates does not accept one
  CHECK_THROWS_AS(parse(rates_doc(), "classify"), ConfigError);
  doc = rates_doc();
  doc["threshold"] = 0.5;
  CHECK_NOTHROW(parse(doc, "classify"));
  CHECK_THROWS_AS(parse(doc, "rates"), ConfigError);

  CHECK_THROWS_AS(parse(json::array(), "rates"), ConfigError);
  CHECK_THROWS_AS(parse(rates_doc(), "ot-demo"), ConfigError);
}

TEST_CASE("seed override and config hash") {
  const ExperimentConfig a = parse(rates_doc(), "rates");
  const ExperimentConfig b = parse(rates_doc(), "rates");
  const ExperimentConfig c = parse(rates_doc(), "rates", 6);
  CHECK(c.rates.seed.value == 6);
  CHECK(config_hash(a.document) == config_hash(b.document));
  CHECK(config_hash(a.document) != config_hash(c.document));
  CHECK(config_hash(a.document).size() == 16);

  // the output directory does not enter the hash
  json with_out = rates_doc();
  with_out["output_dir"] = scratch_dir().string();
  CHECK(config_hash(parse_config(with_out, "rates").document) == config_hash(a.document));

  // key order does not matter
  const json reordered = json::parse(R"({
    "solver": {"tol": 1e-6, "epsilon_scale": 0.05},
    "task": {"noise_sd": 0.2, "dim": 3, "kind": "kinked"},
    "n_eval": 300, "m_source": 200, "trials": 2, "m_grid": [50, 100], "seed": 5
  })");
  CHECK(config_hash(parse(reordered, "rates").document) == config_hash(a.document));
}

TEST_CASE("load_config reports unreadable files") {
  CHECK_THROWS_AS(load_config(scratch_dir() / "missing.json", "rates"), ConfigError);
}

TEST_CASE("ot-demo report on the identity task") {
  json doc = json::parse(R"({"seed": 3, "task": {"kind": "identity", "dim": 2},
                             "demo": {"m": 400, "m_source": 400, "grid_per_axis": 5}})");
  const ExperimentConfig cfg = parse(doc, "ot-demo");
  const auto report = ot_demo_report(cfg);
  CHECK(report["map_nd"]["grid_points"] == 25);
  CHECK(report["map_1d"]["grid_points"] == 1001);
  CHECK(report["map_nd"]["relative_sup"].get<double>() < 0.2);
  CHECK(report["map_1d"]["relative_sup"].get<double>() < 0.2);
}
