#pragma once

#include "otl/config.hpp"

#include <json.hpp>

namespace otl {

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitInvalidated = 3,
  kExitNumerical = 4,
};

/// Each command writes its artifacts into cfg.output_dir and returns an exit
/// code. Solver failures propagate as NumericalError / ConvergenceError.
int cmd_rates(const ExperimentConfig& cfg);
int cmd_classify(const ExperimentConfig& cfg);
int cmd_ot_demo(const ExperimentConfig& cfg);

/// Runs the map-estimation demo without touching the file system and
/// returns the report document (also written by cmd_ot_demo).
nlohmann::ordered_json ot_demo_report(const ExperimentConfig& cfg);

/// `otl <rates|classify|ot-demo> --config <path> [--out <dir>] [--seed <u64>]`.
int run_cli(int argc, char** argv);

}  // namespace otl
