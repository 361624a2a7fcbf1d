#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include "coordq/env.hpp"
#include "coordq/maxsum.hpp"
#include "coordq/rng.hpp"
#include "coordq/sparsify.hpp"
#include "coordq/values.hpp"

namespace coordq {

struct Transition {
  std::vector<ObsKey> keys;
  JointAction action;
  double reward = 0.0;
  std::vector<ObsKey> next_keys;
  bool terminal = false;
};

enum class SparseLossChoice { auto_match, qvar, abs_delta, delta_var, none };

struct TrainConfig {
  double lr = 5e-4;
  double gamma = 0.99;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  long long epsilon_anneal_steps = 50'000;
  int batch_episodes = 32;
  int replay_capacity = 5'000;  // episodes
  long long target_sync_interval = 2'000;  // environment steps
  double lambda_sparse = 1e-4;
  SparseLossChoice sparse_loss = SparseLossChoice::auto_match;
  int maxsum_iterations = 5;
  TopologyCriterion criterion;
  long long total_steps = 0;
  long long eval_interval = 10'000;
  int eval_episodes = 32;
  int history_len = 1;
  // Drop agent identity from table keys so identical observations share
  // entries across agents (needs a uniform per-agent observation space).
  bool anonymous_keys = false;
  std::size_t table_entry_cap = 5'000'000;
  bool qtot_all_pairs = false;
  std::uint64_t seed = 0;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Concrete loss variant for a config (auto_match pairs the loss with the
// topology criterion; unscored criteria train without a sparseness loss).
// Returns false when no sparse loss applies.
bool resolve_sparse_loss(const TrainConfig& cfg, SparseLossVariant& out);

struct LossReport {
  double td_loss = 0.0;
  double sparse_loss = 0.0;

  friend bool operator==(const LossReport&, const LossReport&) = default;
};

struct CurvePoint {
  long long env_steps = 0;
  double eval_return_median = 0.0;
  double eval_return_p25 = 0.0;
  double eval_return_p75 = 0.0;
  double edges_used_mean = 0.0;
  double messages_per_selection = 0.0;
  std::map<std::string, double> aux;  // per-env info aggregates
};

struct LearningCurve {
  std::vector<CurvePoint> points;  // env_steps strictly increasing
};

// Uniform sample of k distinct indices from [0, n), in partial Fisher-Yates
// order; the replay batch order.
std::vector<std::size_t> sample_indices(Rng& rng, std::size_t n, int k);

namespace detail {
// Joint-observation memo key; full equality, no hash truncation.
struct JointCodes {
  std::vector<ObsCode> codes;

  friend bool operator==(const JointCodes&, const JointCodes&) = default;
};
struct JointCodesHash {
  std::size_t operator()(const JointCodes& j) const {
    std::uint64_t h = 0x243f6a8885a308d3ULL;
    for (ObsCode c : j.codes) h = hash_code(h, c);
    return h;
  }
};
}  // namespace detail

// Topology for one action selection, built from the target snapshot.
// lowest_first joins edges in ascending score order (sweep studies).
CoordinationGraph policy_topology(const ValueTables& target, const std::vector<ObsKey>& keys,
                                  const TopologyCriterion& crit, bool lowest_first = false);

// Greedy joint action: anytime Max-Sum over the online tables on `g`.
JointAction greedy_on_topology(const ValueTables& online, const std::vector<ObsKey>& keys,
                               const CoordinationGraph& g, int maxsum_iterations);

// Greedy joint action with the payoff weight pinned to 1/max_edges instead
// of 1/|edges|: edge-addition/removal study semantics, where edges join or
// leave the graph without re-weighting the remaining terms.
JointAction greedy_fixed_weight(const ValueTables& online, const std::vector<ObsKey>& keys,
                                const CoordinationGraph& g, int maxsum_iterations);

class Learner {
 public:
  Learner(int n_agents, int n_actions, TrainConfig cfg);

  // Epsilon-greedy action selection; each agent independently replaces its
  // greedy action with a uniform random one with probability epsilon. rng is
  // only consumed when epsilon > 0.
  JointAction act(const std::vector<ObsKey>& keys, double epsilon, Rng* rng,
                  int* edges_used = nullptr) const;

  // One batch of sequential semi-gradient TD steps followed by one
  // sparseness-loss gradient step over the batch's keys.
  LossReport td_update(const std::vector<Transition>& batch);

  void sync_target() {
    target_ = tables_;
    target_memo_.clear();
  }

  // train() resolves a derived seed for the random criterion.
  void set_criterion(const TopologyCriterion& crit) {
    cfg_.criterion = crit;
    target_memo_.clear();
  }

  const ValueTables& tables() const { return tables_; }
  ValueTables& tables() { return tables_; }
  const ValueTables& target() const { return target_; }
  const TrainConfig& config() const { return cfg_; }

 private:
  struct TargetEval {
    CoordinationGraph graph;      // topology from the target snapshot
    double greedy_value = 0.0;    // target q_tot of the target-greedy action
  };
  const TargetEval& target_eval(const std::vector<ObsKey>& keys) const;

  TrainConfig cfg_;
  ValueTables tables_;
  ValueTables target_;
  // Topologies and greedy target values depend only on the target snapshot,
  // so they stay valid between syncs. Single-writer like the tables.
  mutable std::unordered_map<detail::JointCodes, TargetEval, detail::JointCodesHash> target_memo_;
};

struct EvalStats {
  double return_median = 0.0;
  double return_p25 = 0.0;
  double return_p75 = 0.0;
  double edges_used_mean = 0.0;
  double messages_per_selection = 0.0;
  std::map<std::string, double> aux;  // "<info>_median" and "<info>_mean" of per-episode sums
  int episodes = 0;
};

// Greedy (epsilon = 0) evaluation episodes with seeds derived from
// (seed, 2, salt, episode). fixed_weighting switches the joint action to
// greedy_fixed_weight (sparsity sweeps).
EvalStats evaluate_policy(Env& env, const ValueTables& online, const ValueTables& target,
                          const TrainConfig& cfg, const TopologyCriterion& crit,
                          bool lowest_first, int episodes, std::uint64_t seed, long long salt,
                          bool fixed_weighting = false);

struct TrainResult {
  LearningCurve curve;
  std::vector<double> episode_returns;
  std::vector<LossReport> update_losses;
  long long env_steps = 0;
};

// Outer loop: episode collection, FIFO episode replay, an update after every
// episode once the buffer can fill a batch, periodic target sync and greedy
// evaluation. Fully deterministic given (env, cfg).
TrainResult train(Env& env, const TrainConfig& cfg, Learner& learner);

}  // namespace coordq
