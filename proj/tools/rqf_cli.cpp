#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rqf/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Relational Q-functionals laboratory for the planar ant surrogate"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  rqf::CliOverrides overrides;

  auto add_override_flags = [&](CLI::App* cmd) {
    cmd->add_option("--seed", overrides.seed, "Override the run seed");
    cmd->add_option("--mode", overrides.mode, "rqf or iqf")
        ->check(CLI::IsMember({"rqf", "iqf"}));
    cmd->add_option("--episodes", overrides.episodes, "Override the episode count");
    cmd->add_option("--malfunction-episode", overrides.malfunction_episode,
                    "Episode at which the leg freeze starts");
    cmd->add_option("--malfunction-agent", overrides.malfunction_agent,
                    "Leg index to freeze (0..3)");
    cmd->add_option("--graph-pre", overrides.graph_pre,
                    "Relational graph JSON used before the malfunction");
    cmd->add_option("--graph-post", overrides.graph_post,
                    "Relational graph JSON used from the malfunction onwards");
    cmd->add_option("--eval-every", overrides.eval_every,
                    "Episodes between greedy evaluations");
  };

  CLI::App* train_cmd = app.add_subcommand("train", "Train RQF or IQF agents");
  train_cmd->add_option("--config", config_path, "Run config JSON")->required();
  train_cmd->add_option("--out", out_dir, "Output directory")->required();
  add_override_flags(train_cmd);

  std::string checkpoint_path;
  int eval_episodes = 10;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Greedy evaluation of a checkpoint");
  eval_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  eval_cmd->add_option("--config", config_path, "Run config JSON")->required();
  eval_cmd->add_option("--episodes", eval_episodes, "Evaluation episodes");
  eval_cmd->add_option("--out", out_dir, "Output directory")->required();
  eval_cmd->add_option("--seed", overrides.seed, "Override the run seed");
  eval_cmd->add_option("--malfunction-agent", overrides.malfunction_agent,
                       "Freeze this leg for the whole evaluation");

  std::vector<std::string> run_dirs;
  CLI::App* report_cmd =
      app.add_subcommand("report", "Aggregate run directories into mean/CI tables");
  report_cmd->add_option("dirs", run_dirs, "Run directories")->required();
  report_cmd->add_option("--out", out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return rqf::kExitBadConfig;
  }

  if (train_cmd->parsed()) return rqf::cmd_train(config_path, overrides, out_dir);
  if (eval_cmd->parsed()) {
    return rqf::cmd_eval(checkpoint_path, config_path, eval_episodes, out_dir, overrides);
  }
  return rqf::cmd_report(run_dirs, out_dir);
}
