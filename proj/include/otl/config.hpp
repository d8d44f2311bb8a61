#pragma once

#include "otl/rates.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace otl {

/// Malformed or inconsistent experiment configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Settings of the map-estimation demo.
struct DemoConfig {
  /// Target and source sample sizes.
  Index m = 2000;
  Index m_source = 2000;
  /// Evaluation grid: grid_per_axis points per coordinate spanning
  /// mean +- grid_radius * sd of the target law.
  Index grid_per_axis = 21;
  double grid_radius = 1.5;
};

struct ExperimentConfig {
  std::string command;
  RateConfig rates;
  /// Classification only.
  double threshold = 0.0;
  DemoConfig demo;
  std::filesystem::path output_dir = ".";
  /// The parsed document with the effective seed and output directory, used
  /// for echo and hashing.
  nlohmann::json document;
};

/// Parses a config for `command` ("rates", "classify" or "ot-demo").
/// Unknown keys, wrong types and violated invariants raise ConfigError.
///
/// Recognised top-level keys: seed, output_dir, task, solver, and per command
///   rates/classify: m_grid, trials, m_source, n_eval, p,
///     direct_bandwidth_scale, oracle_maps, threads (+ threshold for classify)
///   ot-demo: demo {m, m_source, grid_per_axis, grid_radius}
/// task: {kind: "kinked" | "identity" | "gaussian", dim, noise_sd, ...}
/// solver: {epsilon, epsilon_scale, bandwidth, bandwidth_scale,
///   bandwidth_exponent, tol, max_iter, domain: "auto" | "scaling" | "log"}
ExperimentConfig parse_config(const nlohmann::json& doc, std::string_view command,
                              std::optional<std::uint64_t> seed_override = std::nullopt,
                              std::optional<std::filesystem::path> out_override = std::nullopt);

/// Reads and parses a JSON file; unreadable or invalid JSON is a ConfigError.
ExperimentConfig load_config(const std::filesystem::path& path, std::string_view command,
                             std::optional<std::uint64_t> seed_override = std::nullopt,
                             std::optional<std::filesystem::path> out_override = std::nullopt);

/// 64-bit FNV-1a of the sorted-key dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& doc);

}  // namespace otl
