#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "rqf/trainer.hpp"

namespace rqf {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Command-line overrides, applied after the file parses and before
// validation. Graph paths given here resolve against the working directory
// (paths inside the file resolve against the file's own directory).
struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;  // "rqf" | "iqf"
  std::optional<long> episodes;
  std::optional<long> malfunction_episode;
  std::optional<int> malfunction_agent;
  std::optional<std::string> graph_pre;
  std::optional<std::string> graph_post;
  std::optional<long> eval_every;
};

struct LoadedConfig {
  TrainConfig train;
  std::string raw;             // exact bytes of the config file
  std::string config_hash;     // "fnv1a64:" + 16 hex digits over raw
  std::string graph_pre_path;  // resolved; empty when not configured
  std::string graph_post_path;
  bool graphs_configured = false;  // a graph key or override was present
};

Mode parse_mode(const std::string& name);  // ConfigError on anything else

// Parses and validates a run config. Unknown keys and type mismatches raise
// ConfigError naming the first offending key (alphabetically within each
// object). Graph files load here, so the trainer never touches the
// filesystem; in independent mode graph settings are recorded but not
// loaded. When the file does not set exploration.epsilon_decay_steps the
// schedule defaults to 20% of episodes*max_steps.
LoadedConfig load_train_config(const std::string& path,
                               const CliOverrides& overrides = {});

}  // namespace rqf
