#include "rqf/config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rqf/rng.hpp"

namespace rqf {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("config: cannot open " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Object keys iterate alphabetically, so "first unknown key" is stable.
void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& prefix) {
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      throw ConfigError("config: unknown key \"" + prefix + item.key() + "\"");
    }
  }
}

double get_number(const json& obj, const char* key, double fallback,
                  const std::string& prefix) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) {
    throw ConfigError("config: key \"" + prefix + key + "\" must be a number");
  }
  return v.get<double>();
}

long get_integer(const json& obj, const char* key, long fallback,
                 const std::string& prefix) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer() && !v.is_number_unsigned()) {
    throw ConfigError("config: key \"" + prefix + key + "\" must be an integer");
  }
  return v.get<long>();
}

bool get_boolean(const json& obj, const char* key, bool fallback,
                 const std::string& prefix) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) {
    throw ConfigError("config: key \"" + prefix + key + "\" must be a boolean");
  }
  return v.get<bool>();
}

std::string get_string(const json& obj, const char* key, const std::string& fallback,
                       const std::string& prefix) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) {
    throw ConfigError("config: key \"" + prefix + key + "\" must be a string");
  }
  return v.get<std::string>();
}

std::string resolve_against(const std::string& base_dir, const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_absolute()) return p.string();
  return (std::filesystem::path(base_dir) / p).string();
}

std::string hash_hex(const std::string& raw) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(raw)));
  return buf;
}

}  // namespace

Mode parse_mode(const std::string& name) {
  if (name == "rqf") return Mode::kRqf;
  if (name == "iqf") return Mode::kIqf;
  throw ConfigError("config: mode must be \"rqf\" or \"iqf\", got \"" + name + "\"");
}

LoadedConfig load_train_config(const std::string& path, const CliOverrides& overrides) {
  LoadedConfig out;
  out.raw = read_file(path);
  out.config_hash = hash_hex(out.raw);
  const std::string config_dir = std::filesystem::path(path).parent_path().string();

  json root;
  try {
    root = json::parse(out.raw);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  if (!root.is_object()) {
    throw ConfigError("config: " + path + ": top level must be a JSON object");
  }

  static const std::set<std::string> kTopKeys = {
      "mode",        "seed",          "episodes",     "max_steps",
      "gamma",       "lr",            "batch_b",      "update_every",
      "tau",         "replay_capacity", "basis_order", "candidates_m",
      "hidden",      "exploration",   "eval_every",   "eval_episodes",
      "soft_update_every_step",       "env",          "graph_pre",
      "graph_post",  "malfunction"};
  check_keys(root, kTopKeys, "");

  TrainConfig& cfg = out.train;
  cfg.mode = parse_mode(get_string(root, "mode", "rqf", ""));
  const long seed = get_integer(root, "seed", 1, "");
  if (seed < 0) throw ConfigError("config: key \"seed\" must be non-negative");
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.episodes = get_integer(root, "episodes", 2000, "");
  cfg.env.max_steps = static_cast<int>(get_integer(root, "max_steps", 100, ""));
  cfg.gamma = get_number(root, "gamma", 0.99, "");
  cfg.lr = get_number(root, "lr", 1e-4, "");
  cfg.batch_b = static_cast<int>(get_integer(root, "batch_b", 512, ""));
  cfg.update_every = static_cast<int>(get_integer(root, "update_every", 10, ""));
  cfg.tau = get_number(root, "tau", 0.01, "");
  cfg.replay_capacity = get_integer(root, "replay_capacity", 500000, "");
  cfg.basis_order = static_cast<int>(get_integer(root, "basis_order", 2, ""));
  cfg.candidates_m = static_cast<int>(get_integer(root, "candidates_m", 128, ""));
  cfg.eval_every = get_integer(root, "eval_every", 100, "");
  cfg.eval_episodes = static_cast<int>(get_integer(root, "eval_episodes", 100, ""));
  cfg.soft_update_every_step =
      get_boolean(root, "soft_update_every_step", false, "");

  if (root.contains("hidden")) {
    const json& h = root.at("hidden");
    if (!h.is_array() || h.empty()) {
      throw ConfigError("config: key \"hidden\" must be a non-empty array of integers");
    }
    cfg.hidden.clear();
    for (const auto& v : h) {
      if (!v.is_number_integer() && !v.is_number_unsigned()) {
        throw ConfigError("config: key \"hidden\" must be a non-empty array of integers");
      }
      cfg.hidden.push_back(v.get<int>());
    }
  }

  bool decay_given = false;
  if (root.contains("exploration")) {
    const json& ex = root.at("exploration");
    if (!ex.is_object()) {
      throw ConfigError("config: key \"exploration\" must be an object");
    }
    static const std::set<std::string> kExplKeys = {
        "epsilon_start", "epsilon_end", "epsilon_decay_steps",
        "gaussian_std",  "action_low",  "action_high"};
    check_keys(ex, kExplKeys, "exploration.");
    cfg.exploration.epsilon_start =
        get_number(ex, "epsilon_start", cfg.exploration.epsilon_start, "exploration.");
    cfg.exploration.epsilon_end =
        get_number(ex, "epsilon_end", cfg.exploration.epsilon_end, "exploration.");
    if (ex.contains("epsilon_decay_steps")) {
      decay_given = true;
      cfg.exploration.epsilon_decay_steps =
          get_integer(ex, "epsilon_decay_steps", 0, "exploration.");
    }
    cfg.exploration.gaussian_std =
        get_number(ex, "gaussian_std", cfg.exploration.gaussian_std, "exploration.");
    cfg.exploration.action_low =
        get_number(ex, "action_low", cfg.exploration.action_low, "exploration.");
    cfg.exploration.action_high =
        get_number(ex, "action_high", cfg.exploration.action_high, "exploration.");
  }

  if (root.contains("env")) {
    const json& env = root.at("env");
    if (!env.is_object()) {
      throw ConfigError("config: key \"env\" must be an object");
    }
    static const std::set<std::string> kEnvKeys = {
        "drive_gain",    "dt",           "ctrl_cost_weight", "support_threshold",
        "imbalance_limit", "stable_bonus", "flip_penalty",   "reset_noise"};
    check_keys(env, kEnvKeys, "env.");
    cfg.env.drive_gain = get_number(env, "drive_gain", cfg.env.drive_gain, "env.");
    cfg.env.dt = get_number(env, "dt", cfg.env.dt, "env.");
    cfg.env.ctrl_cost_weight =
        get_number(env, "ctrl_cost_weight", cfg.env.ctrl_cost_weight, "env.");
    cfg.env.support_threshold =
        get_number(env, "support_threshold", cfg.env.support_threshold, "env.");
    cfg.env.imbalance_limit =
        get_number(env, "imbalance_limit", cfg.env.imbalance_limit, "env.");
    cfg.env.stable_bonus = get_number(env, "stable_bonus", cfg.env.stable_bonus, "env.");
    cfg.env.flip_penalty = get_number(env, "flip_penalty", cfg.env.flip_penalty, "env.");
    cfg.env.reset_noise = get_number(env, "reset_noise", cfg.env.reset_noise, "env.");
  }

  std::string graph_pre_path = get_string(root, "graph_pre", "", "");
  std::string graph_post_path = get_string(root, "graph_post", "", "");
  if (!graph_pre_path.empty()) graph_pre_path = resolve_against(config_dir, graph_pre_path);
  if (!graph_post_path.empty()) graph_post_path = resolve_against(config_dir, graph_post_path);
  out.graphs_configured = root.contains("graph_pre") || root.contains("graph_post");

  if (root.contains("malfunction")) {
    const json& mal = root.at("malfunction");
    if (!mal.is_object()) {
      throw ConfigError("config: key \"malfunction\" must be an object");
    }
    static const std::set<std::string> kMalKeys = {"episode", "agent"};
    check_keys(mal, kMalKeys, "malfunction.");
    MalfunctionSpec spec;
    spec.episode = get_integer(mal, "episode", 0, "malfunction.");
    spec.agent = static_cast<int>(get_integer(mal, "agent", 0, "malfunction."));
    cfg.malfunction = spec;
  }

  // Command-line overrides beat the file.
  if (overrides.mode) cfg.mode = parse_mode(*overrides.mode);
  if (overrides.seed) cfg.seed = *overrides.seed;
  if (overrides.episodes) cfg.episodes = *overrides.episodes;
  if (overrides.eval_every) cfg.eval_every = *overrides.eval_every;
  if (overrides.malfunction_episode || overrides.malfunction_agent) {
    MalfunctionSpec spec = cfg.malfunction.value_or(MalfunctionSpec{});
    if (overrides.malfunction_episode) spec.episode = *overrides.malfunction_episode;
    if (overrides.malfunction_agent) spec.agent = *overrides.malfunction_agent;
    cfg.malfunction = spec;
  }
  if (overrides.graph_pre) {
    graph_pre_path = *overrides.graph_pre;
    out.graphs_configured = true;
  }
  if (overrides.graph_post) {
    graph_post_path = *overrides.graph_post;
    out.graphs_configured = true;
  }
  out.graph_pre_path = graph_pre_path;
  out.graph_post_path = graph_post_path;

  if (!decay_given) {
    // Default schedule: decay over the first 20% of the run's env steps.
    cfg.exploration.epsilon_decay_steps =
        cfg.episodes * static_cast<long>(cfg.env.max_steps) / 5;
  }

  if (cfg.mode == Mode::kRqf) {
    try {
      if (!graph_pre_path.empty()) cfg.graph_pre = load_graph_json(graph_pre_path);
      if (!graph_post_path.empty()) cfg.graph_post = load_graph_json(graph_post_path);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }

  cfg.validate();
  return out;
}

}  // namespace rqf
