#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rqf/config.hpp"

namespace rqf {

// Exit codes shared by all commands: 0 success, 1 invalid configuration or
// input contents (the message names the first offending key, path, or
// mismatch), 2 I/O failure while producing artifacts.
inline constexpr int kExitOk = 0;
inline constexpr int kExitBadConfig = 1;
inline constexpr int kExitIoError = 2;

// Runs a full training job and writes out_dir/manifest.json, config.json
// (byte-identical snapshot), curve.csv, eval_traces.csv,
// checkpoint_initial.bin, checkpoint_final.bin (when episodes > 0), and
// eval_report.json (when an evaluation ran).
int cmd_train(const std::string& config_path, const CliOverrides& overrides,
              const std::string& out_dir);

// Greedy evaluation of a checkpoint under a config's env and action
// settings; writes eval_report.json and eval_traces.csv under out_dir. A
// malfunction block in the effective config freezes that agent for the
// whole evaluation.
int cmd_eval(const std::string& checkpoint_path, const std::string& config_path,
             int episodes, const std::string& out_dir, const CliOverrides& overrides);

// Aggregates completed run directories (each holding manifest.json and
// curve.csv) into report.json plus one mean/CI curve CSV per mode under
// out_dir. All runs must have equal curve lengths and, within a mode,
// matching malfunction episodes.
int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_dir);

}  // namespace rqf
