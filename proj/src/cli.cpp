#include "rqf/cli.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "rqf/metrics.hpp"

namespace rqf {

namespace {

using nlohmann::json;

std::string iso8601_utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cli: cannot open " + path + " for writing");
  out << content;
  if (!out) throw std::runtime_error("cli: write failed for " + path);
}

json overrides_json(const CliOverrides& ov) {
  json j = json::object();
  if (ov.seed) j["seed"] = *ov.seed;
  if (ov.mode) j["mode"] = *ov.mode;
  if (ov.episodes) j["episodes"] = *ov.episodes;
  if (ov.malfunction_episode) j["malfunction_episode"] = *ov.malfunction_episode;
  if (ov.malfunction_agent) j["malfunction_agent"] = *ov.malfunction_agent;
  if (ov.graph_pre) j["graph_pre"] = *ov.graph_pre;
  if (ov.graph_post) j["graph_post"] = *ov.graph_post;
  if (ov.eval_every) j["eval_every"] = *ov.eval_every;
  return j;
}

void write_manifest(const std::string& out_dir, const LoadedConfig& loaded,
                    const CliOverrides& overrides, const std::string& status,
                    const std::string& started_at, const std::string& finished_at,
                    const json& artifacts) {
  const TrainConfig& cfg = loaded.train;
  json j;
  j["status"] = status;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at.empty() ? json(nullptr) : json(finished_at);
  j["seed"] = cfg.seed;
  j["mode"] = mode_name(cfg.mode);
  j["episodes"] = cfg.episodes;
  j["eval_every"] = cfg.eval_every;
  if (cfg.malfunction) {
    j["malfunction"] = {{"episode", cfg.malfunction->episode},
                        {"agent", cfg.malfunction->agent}};
  } else {
    j["malfunction"] = nullptr;
  }
  j["config_hash"] = loaded.config_hash;
  j["config_snapshot"] = "config.json";
  j["overrides"] = overrides_json(overrides);
  j["artifacts"] = artifacts;
  write_text_file(out_dir + "/manifest.json", j.dump(2) + "\n");
}

// NaN and infinities have no JSON literal; they become null.
json number_or_null(double v) {
  return std::isfinite(v) ? json(v) : json(nullptr);
}

struct RunData {
  std::string dir;
  std::string mode;
  std::optional<long> malfunction_episode;
  std::vector<CurvePoint> curve;
};

RunData read_run_dir(const std::string& dir) {
  RunData run;
  run.dir = dir;
  const std::string manifest_path = dir + "/manifest.json";
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw std::runtime_error("report: cannot open " + manifest_path);
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("report: " + manifest_path + ": " + e.what());
  }
  if (!manifest.contains("mode") || !manifest.at("mode").is_string()) {
    throw std::runtime_error("report: " + manifest_path + " lacks a mode field");
  }
  run.mode = manifest.at("mode").get<std::string>();
  if (manifest.contains("malfunction") && manifest.at("malfunction").is_object()) {
    run.malfunction_episode =
        manifest.at("malfunction").at("episode").get<long>();
  }
  run.curve = read_curve_csv(dir + "/curve.csv");
  return run;
}

MeanCi column_mean_ci(const std::vector<const RunData*>& runs, std::size_t row,
                      double CurvePoint::* column) {
  std::vector<double> values;
  values.reserve(runs.size());
  for (const RunData* r : runs) values.push_back(r->curve[row].*column);
  return mean_ci(values);
}

json phase_row(const char* phase, long episode,
               const std::vector<const RunData*>& runs, std::size_t row) {
  const MeanCi reward = column_mean_ci(runs, row, &CurvePoint::eval_mean_reward);
  const MeanCi stable = column_mean_ci(runs, row, &CurvePoint::eval_stable_frac);
  const MeanCi train = column_mean_ci(runs, row, &CurvePoint::train_reward_ma);
  return json{{"phase", phase},
              {"episode", episode},
              {"eval_mean_reward",
               {{"mean", number_or_null(reward.mean)},
                {"ci", number_or_null(reward.ci_half_width)}}},
              {"eval_stable_frac",
               {{"mean", number_or_null(stable.mean)},
                {"ci", number_or_null(stable.ci_half_width)}}},
              {"train_reward_ma",
               {{"mean", number_or_null(train.mean)},
                {"ci", number_or_null(train.ci_half_width)}}}};
}

void write_group_curve_csv(const std::string& path,
                           const std::vector<const RunData*>& runs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("report: cannot open " + path + " for writing");
  out << "episode,train_reward_ma_mean,train_reward_ma_ci,eval_mean_reward_mean,"
         "eval_mean_reward_ci,eval_stable_frac_mean,eval_stable_frac_ci,"
         "loss_mean,loss_ci\n";
  const std::size_t len = runs.front()->curve.size();
  for (std::size_t row = 0; row < len; ++row) {
    const MeanCi train = column_mean_ci(runs, row, &CurvePoint::train_reward_ma);
    const MeanCi reward = column_mean_ci(runs, row, &CurvePoint::eval_mean_reward);
    const MeanCi stable = column_mean_ci(runs, row, &CurvePoint::eval_stable_frac);
    const MeanCi loss = column_mean_ci(runs, row, &CurvePoint::loss);
    out << runs.front()->curve[row].episode << ',' << format_g17(train.mean) << ','
        << format_g17(train.ci_half_width) << ',' << format_g17(reward.mean) << ','
        << format_g17(reward.ci_half_width) << ',' << format_g17(stable.mean) << ','
        << format_g17(stable.ci_half_width) << ',' << format_g17(loss.mean) << ','
        << format_g17(loss.ci_half_width) << '\n';
  }
  if (!out) throw std::runtime_error("report: write failed for " + path);
}

}  // namespace

int cmd_train(const std::string& config_path, const CliOverrides& overrides,
              const std::string& out_dir) {
  LoadedConfig loaded;
  try {
    loaded = load_train_config(config_path, overrides);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitBadConfig;
  }
  if (loaded.train.mode == Mode::kIqf && loaded.graphs_configured) {
    std::fprintf(stderr, "warning: mode iqf ignores relational graph settings\n");
  }

  const std::string started_at = iso8601_utc_now();
  json artifacts = json::object();
  artifacts["config_snapshot"] = "config.json";
  artifacts["curve"] = "curve.csv";
  artifacts["eval_traces"] = "eval_traces.csv";
  artifacts["checkpoint_initial"] = "checkpoint_initial.bin";
  if (loaded.train.episodes > 0) artifacts["checkpoint_final"] = "checkpoint_final.bin";

  try {
    std::filesystem::create_directories(out_dir);
    write_text_file(out_dir + "/config.json", loaded.raw);
    write_manifest(out_dir, loaded, overrides, "running", started_at, "", artifacts);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitIoError;
  }

  RunArtifacts run;
  try {
    run = train(loaded.train);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "train failed: %s\n", e.what());
    return kExitIoError;
  }

  try {
    write_curve_csv(run.curve, out_dir + "/curve.csv");
    export_traces_csv(run.final_eval_traces, out_dir + "/eval_traces.csv");
    save_networks(out_dir + "/checkpoint_initial.bin", run.initial_nets);
    if (loaded.train.episodes > 0) {
      save_networks(out_dir + "/checkpoint_final.bin", run.prediction_nets);
    }
    if (std::isfinite(run.final_eval_mean_reward)) {
      json report;
      report["episodes"] = loaded.train.eval_episodes;
      report["mean_reward"] = number_or_null(run.final_eval_mean_reward);
      report["stable_fraction"] = number_or_null(run.final_eval_stable_fraction);
      report["seed"] = loaded.train.seed;
      write_text_file(out_dir + "/eval_report.json", report.dump(2) + "\n");
      artifacts["eval_report"] = "eval_report.json";
    }
    write_manifest(out_dir, loaded, overrides, "complete", started_at,
                   iso8601_utc_now(), artifacts);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitIoError;
  }
  return kExitOk;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& config_path,
             int episodes, const std::string& out_dir, const CliOverrides& overrides) {
  LoadedConfig loaded;
  try {
    loaded = load_train_config(config_path, overrides);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitBadConfig;
  }
  if (episodes < 1) {
    std::fprintf(stderr, "eval: episodes must be >= 1\n");
    return kExitBadConfig;
  }
  const TrainConfig& cfg = loaded.train;

  std::vector<NetworkParams> nets;
  try {
    nets = load_networks(checkpoint_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitBadConfig;
  }
  const BasisSpec basis(cfg.basis_order, PlanarAntEnv::kActionDim);
  if (static_cast<int>(nets.size()) != PlanarAntEnv::kNumAgents) {
    std::fprintf(stderr,
                 "eval: checkpoint/config mismatch: expected %d networks, found %zu\n",
                 PlanarAntEnv::kNumAgents, nets.size());
    return kExitBadConfig;
  }
  for (std::size_t j = 0; j < nets.size(); ++j) {
    if (nets[j].input_dim() != PlanarAntEnv::kObsDim ||
        nets[j].output_dim() != basis.num_terms()) {
      std::fprintf(stderr,
                   "eval: checkpoint/config mismatch: network %zu maps %d -> %d, "
                   "config expects %d -> %d\n",
                   j, nets[j].input_dim(), nets[j].output_dim(),
                   PlanarAntEnv::kObsDim, basis.num_terms());
      return kExitBadConfig;
    }
  }

  const std::optional<int> frozen =
      cfg.malfunction ? std::optional<int>(cfg.malfunction->agent) : std::nullopt;
  const EvalResult ev = evaluate_greedy(
      nets, basis, cfg.env, frozen, episodes, cfg.candidates_m,
      cfg.exploration.action_low, cfg.exploration.action_high, cfg.seed, 0);

  try {
    std::filesystem::create_directories(out_dir);
    json report;
    report["checkpoint"] = checkpoint_path;
    report["episodes"] = episodes;
    report["mean_reward"] = number_or_null(ev.mean_reward);
    report["stable_fraction"] = number_or_null(ev.stable_fraction);
    report["seed"] = cfg.seed;
    report["frozen_agent"] = frozen ? json(*frozen) : json(nullptr);
    write_text_file(out_dir + "/eval_report.json", report.dump(2) + "\n");
    export_traces_csv(ev.traces, out_dir + "/eval_traces.csv");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitIoError;
  }
  return kExitOk;
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
  if (run_dirs.empty()) {
    std::fprintf(stderr, "report: no run directories given\n");
    return kExitBadConfig;
  }
  std::vector<RunData> runs;
  runs.reserve(run_dirs.size());
  try {
    for (const auto& dir : run_dirs) runs.push_back(read_run_dir(dir));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitBadConfig;
  }

  const std::size_t len = runs.front().curve.size();
  for (const auto& run : runs) {
    if (run.curve.size() != len) {
      std::fprintf(stderr,
                   "report: curve length mismatch: %s has %zu points, %s has %zu\n",
                   runs.front().dir.c_str(), len, run.dir.c_str(), run.curve.size());
      return kExitBadConfig;
    }
  }

  std::map<std::string, std::vector<const RunData*>> groups;
  for (const auto& run : runs) groups[run.mode].push_back(&run);

  json report;
  report["runs"] = static_cast<long>(runs.size());
  report["groups"] = json::array();
  try {
    std::filesystem::create_directories(out_dir);
    for (const auto& [mode, group] : groups) {
      const std::optional<long> malfunction = group.front()->malfunction_episode;
      for (const RunData* r : group) {
        if (r->malfunction_episode != malfunction) {
          std::fprintf(stderr,
                       "report: %s runs disagree on the malfunction episode\n",
                       mode.c_str());
          return kExitBadConfig;
        }
      }

      json g;
      g["mode"] = mode;
      g["runs"] = static_cast<long>(group.size());
      g["rows"] = json::array();
      if (len > 0) {
        const std::size_t last = len - 1;
        // The carried evaluation columns at a row are the latest evaluation
        // at or before it, so row M-1 is the last pre-malfunction state.
        if (malfunction && *malfunction >= 1 &&
            static_cast<std::size_t>(*malfunction) <= last) {
          const std::size_t before = static_cast<std::size_t>(*malfunction) - 1;
          g["rows"].push_back(phase_row("before_malfunction",
                                        group.front()->curve[before].episode,
                                        group, before));
          g["rows"].push_back(phase_row("after_malfunction",
                                        group.front()->curve[last].episode,
                                        group, last));
        } else {
          g["rows"].push_back(
              phase_row("overall", group.front()->curve[last].episode, group, last));
        }
      }
      report["groups"].push_back(g);
      write_group_curve_csv(out_dir + "/report_curve_" + mode + ".csv", group);
    }
    write_text_file(out_dir + "/report.json", report.dump(2) + "\n");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitIoError;
  }
  return kExitOk;
}

}  // namespace rqf
