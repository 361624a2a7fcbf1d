#include <iostream>

#include "CLI11.hpp"
#include "coordq/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonFlags {
  std::string config_path;
  std::string out;
  std::string criterion;
  double lambda = -1.0;
  std::int64_t seed = -1;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "experiment config (JSON)")->required();
  cmd->add_option("--out", flags.out, "override output directory");
  cmd->add_option("--criterion", flags.criterion,
                  "override topology criterion {qvar,delta_max,delta_var,random,full,none}");
  cmd->add_option("--lambda", flags.lambda, "override sparseness budget in [0,1]");
  cmd->add_option("--seed", flags.seed, "override base seed");
}

coordq::ExperimentConfig load_with_overrides(const CommonFlags& flags) {
  coordq::ExperimentConfig cfg = coordq::load_experiment_config(flags.config_path);
  if (!flags.out.empty()) cfg.output_dir = flags.out;
  if (!flags.criterion.empty())
    cfg.train.criterion.kind = coordq::criterion_from_string(flags.criterion);
  if (flags.lambda >= 0.0) cfg.train.criterion.lambda = flags.lambda;
  if (flags.seed >= 0) cfg.train.seed = static_cast<std::uint64_t>(flags.seed);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse coordination graphs for cooperative multi-agent Q-learning"};
  app.require_subcommand(1);

  CommonFlags run_flags, sweep_flags, eval_flags;

  CLI::App* run = app.add_subcommand("run", "train n_seeds runs and write curves/records");
  add_common(run, run_flags);

  CLI::App* sweep = app.add_subcommand(
      "sweep-sparsity", "evaluate trained tables across edge budgets (descending scores)");
  add_common(sweep, sweep_flags);
  std::vector<double> lambdas;
  bool ascending = false;
  bool no_train = false;
  int sweep_episodes = 32;
  sweep->add_option("--lambdas", lambdas, "edge budgets to evaluate")->required();
  sweep->add_flag("--ascending", ascending, "also evaluate ascending-score edge order");
  sweep->add_flag("--no-train", no_train, "fail instead of training when checkpoints are missing");
  sweep->add_option("--episodes", sweep_episodes, "evaluation episodes per point");

  CLI::App* prop1 = app.add_subcommand(
      "prop1", "Monte-Carlo study of action stability under single-edge removal");
  std::string prop1_out = "out";
  coordq::EdgeRemovalConfig prop1_cfg;
  prop1->add_option("--out", prop1_out, "output directory");
  prop1->add_option("--instances", prop1_cfg.n_instances, "random instances");
  prop1->add_option("--agents", prop1_cfg.n_agents, "agents per instance");
  prop1->add_option("--actions", prop1_cfg.n_actions, "actions per agent");
  prop1->add_option("--iterations", prop1_cfg.iterations, "max-sum iterations");
  prop1->add_option("--range", prop1_cfg.value_range, "table entries uniform in [-range, range]");
  prop1->add_option("--seed", prop1_cfg.seed, "experiment seed");
  prop1->add_option("--bins", prop1_cfg.bins, "score-quantile bins");
  prop1->add_option("--bootstrap", prop1_cfg.bootstrap, "bootstrap resamples");

  CLI::App* eval = app.add_subcommand("eval", "greedy evaluation of a table checkpoint");
  add_common(eval, eval_flags);
  std::string checkpoint;
  int eval_episodes = 32;
  eval->add_option("--checkpoint", checkpoint, "table checkpoint path")->required();
  eval->add_option("--episodes", eval_episodes, "evaluation episodes");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      coordq::ExperimentConfig cfg;
      try {
        cfg = load_with_overrides(run_flags);
      } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
      }
      return coordq::run_experiment(cfg, std::cout) == 0 ? kExitOk : kExitRuntime;
    }
    if (sweep->parsed()) {
      coordq::ExperimentConfig cfg;
      try {
        cfg = load_with_overrides(sweep_flags);
      } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
      }
      coordq::SweepOptions opts;
      opts.lambdas = lambdas;
      opts.include_ascending = ascending;
      opts.train_if_missing = !no_train;
      opts.episodes = sweep_episodes;
      if (cfg.train.criterion.kind == coordq::CriterionKind::qvar ||
          cfg.train.criterion.kind == coordq::CriterionKind::delta_max ||
          cfg.train.criterion.kind == coordq::CriterionKind::delta_var)
        opts.score_kind = cfg.train.criterion.kind;
      return coordq::sweep_sparsity(cfg, opts, std::cout) == 0 ? kExitOk : kExitRuntime;
    }
    if (prop1->parsed()) {
      return coordq::run_prop1(prop1_cfg, prop1_out, std::cout) == 0 ? kExitOk : kExitRuntime;
    }
    if (eval->parsed()) {
      coordq::ExperimentConfig cfg;
      try {
        cfg = load_with_overrides(eval_flags);
      } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
      }
      return coordq::eval_checkpoint(cfg, checkpoint, eval_episodes, std::cout) == 0
                 ? kExitOk
                 : kExitRuntime;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
