#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "coordq/learner.hpp"
#include "coordq/metrics.hpp"

namespace coordq {

struct ExperimentConfig {
  EnvConfig env;
  TrainConfig train;
  int n_seeds = 8;
  std::string output_dir = "out";
};

// Strict parsing: unknown keys are errors. Throws std::invalid_argument with
// a diagnostic.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

// Canonical form (all fields, alphabetical keys); parse(serialize(x)) == x.
std::string serialize_experiment_config(const ExperimentConfig& cfg);

// FNV-1a over the canonical serialization; stable across machines.
std::string config_hash(const ExperimentConfig& cfg);

// Shortest round-trip decimal representation; the CSV number format.
std::string format_double(double v);

// Per-seed training runs (seeds train.seed .. train.seed + n_seeds - 1)
// dispatched to a worker pool (COORDQ_WORKERS, default hardware concurrency).
// Writes, under output_dir:
//   curve_seed<k>.csv    per-seed learning curves
//   tables_seed<k>.txt   final table checkpoints
//   records.csv          one row per seed (final/temporal performance,
//                        stability distances, communication aggregates)
//   aggregate.csv        across-seed median and 25/75 percentiles
//   config.json          the canonical config that produced the outputs
// Returns the number of seeds that failed (partial results are kept).
int run_experiment(const ExperimentConfig& cfg, std::ostream& log);

struct SweepOptions {
  std::vector<double> lambdas;
  bool include_ascending = false;  // also evaluate lowest-score-first topologies
  bool train_if_missing = true;    // otherwise a missing checkpoint is an error
  int episodes = 32;
  CriterionKind score_kind = CriterionKind::qvar;
};

// Greedy evaluation of trained tables across edge budgets, edges joining in
// descending (and optionally ascending) score order. Writes sweep.csv and
// sweep_aggregate.csv under output_dir.
int sweep_sparsity(const ExperimentConfig& cfg, const SweepOptions& opts, std::ostream& log);

// Edge-removal Monte-Carlo study; writes prop1_edges.csv and prop1_bins.csv.
int run_prop1(const EdgeRemovalConfig& cfg, const std::string& output_dir, std::ostream& log);

// Greedy evaluation of a checkpoint; writes eval.csv.
int eval_checkpoint(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                    int episodes, std::ostream& log);

}  // namespace coordq
