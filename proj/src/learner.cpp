#include "coordq/learner.hpp"

#include <algorithm>

#include "coordq/metrics.hpp"

namespace coordq {

bool resolve_sparse_loss(const TrainConfig& cfg, SparseLossVariant& out) {
  switch (cfg.sparse_loss) {
    case SparseLossChoice::qvar: out = SparseLossVariant::qvar; return true;
    case SparseLossChoice::abs_delta: out = SparseLossVariant::abs_delta; return true;
    case SparseLossChoice::delta_var: out = SparseLossVariant::delta_var; return true;
    case SparseLossChoice::none: return false;
    case SparseLossChoice::auto_match:
      switch (cfg.criterion.kind) {
        case CriterionKind::qvar: out = SparseLossVariant::qvar; return true;
        case CriterionKind::delta_max: out = SparseLossVariant::abs_delta; return true;
        case CriterionKind::delta_var: out = SparseLossVariant::delta_var; return true;
        default: return false;
      }
  }
  return false;
}

namespace {

struct Instance {
  std::vector<Vec> utilities;
  std::vector<Mat> payoffs;
};

Instance build_instance(const ValueTables& t, const std::vector<ObsKey>& keys,
                        const CoordinationGraph& g) {
  Instance inst;
  inst.utilities.reserve(keys.size());
  for (const ObsKey& k : keys) inst.utilities.push_back(t.utility_slice(k));
  inst.payoffs.reserve(static_cast<std::size_t>(g.n_edges()));
  for (const Edge& e : g.edges())
    inst.payoffs.push_back(
        t.payoff_slice(keys[static_cast<std::size_t>(e.a)], keys[static_cast<std::size_t>(e.b)]));
  return inst;
}

detail::JointCodes codes_of(const std::vector<ObsKey>& keys) {
  detail::JointCodes j;
  j.codes.reserve(keys.size());
  for (const ObsKey& k : keys) j.codes.push_back(k.code);
  return j;
}

}  // namespace

std::vector<std::size_t> sample_indices(Rng& rng, std::size_t n, int k) {
  if (static_cast<std::size_t>(k) > n) throw std::invalid_argument("sample larger than population");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (int i = 0; i < k; ++i) {
    const int pick = rng.uniform_int(i, static_cast<int>(n) - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick)]);
  }
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

CoordinationGraph policy_topology(const ValueTables& target, const std::vector<ObsKey>& keys,
                                  const TopologyCriterion& crit, bool lowest_first) {
  if (!lowest_first) return select_topology(target, keys, crit);
  switch (crit.kind) {
    case CriterionKind::qvar:
    case CriterionKind::delta_max:
    case CriterionKind::delta_var: {
      const auto ranked = rank_edges(target, keys, crit.kind);
      return topology_from_ranked(target.n_agents(), ranked,
                                  edge_budget(target.n_agents(), crit.lambda), true);
    }
    default:
      return select_topology(target, keys, crit);
  }
}

JointAction greedy_on_topology(const ValueTables& online, const std::vector<ObsKey>& keys,
                               const CoordinationGraph& g, int maxsum_iterations) {
  const Instance inst = build_instance(online, keys, g);
  MaxSumOptions opt;
  opt.iterations = maxsum_iterations;
  return run_max_sum(to_factor_graph(g), inst.utilities, inst.payoffs, opt).action;
}

JointAction greedy_fixed_weight(const ValueTables& online, const std::vector<ObsKey>& keys,
                                const CoordinationGraph& g, int maxsum_iterations) {
  Instance inst = build_instance(online, keys, g);
  const double uw = 1.0 / g.n_agents();
  const double pw = g.max_edges() > 0 ? 1.0 / g.max_edges() : 1.0;
  for (Vec& u : inst.utilities) u *= uw;
  for (Mat& p : inst.payoffs) p *= pw;
  MaxSumOptions opt;
  opt.iterations = maxsum_iterations;
  opt.scale_by_counts = false;  // weights already pinned above
  return run_max_sum(to_factor_graph(g), inst.utilities, inst.payoffs, opt).action;
}

Learner::Learner(int n_agents, int n_actions, TrainConfig cfg)
    : cfg_(std::move(cfg)),
      tables_(n_agents, n_actions, cfg_.table_entry_cap),
      target_(tables_) {}

const Learner::TargetEval& Learner::target_eval(const std::vector<ObsKey>& keys) const {
  const detail::JointCodes jc = codes_of(keys);
  const auto it = target_memo_.find(jc);
  if (it != target_memo_.end()) return it->second;
  TargetEval eval;
  eval.graph = policy_topology(target_, keys, cfg_.criterion);
  const JointAction greedy = greedy_on_topology(target_, keys, eval.graph, cfg_.maxsum_iterations);
  eval.greedy_value = q_tot(target_, eval.graph, keys, greedy, cfg_.qtot_all_pairs);
  return target_memo_.emplace(jc, std::move(eval)).first->second;
}

JointAction Learner::act(const std::vector<ObsKey>& keys, double epsilon, Rng* rng,
                         int* edges_used) const {
  const CoordinationGraph& g = target_eval(keys).graph;
  if (edges_used) *edges_used = g.n_edges();
  JointAction a = greedy_on_topology(tables_, keys, g, cfg_.maxsum_iterations);
  if (epsilon > 0.0) {
    if (!rng) throw std::invalid_argument("exploration requires an rng");
    for (int i = 0; i < tables_.n_agents(); ++i)
      if (rng->uniform01() < epsilon) a[i] = rng->uniform_int(0, tables_.n_actions() - 1);
  }
  return a;
}

LossReport Learner::td_update(const std::vector<Transition>& batch) {
  if (batch.empty()) throw std::invalid_argument("td_update needs a non-empty batch");
  const int n = tables_.n_agents();

  double td_sum = 0.0;
  for (const Transition& tr : batch) {
    const CoordinationGraph& g = target_eval(tr.keys).graph;
    const double q = q_tot(tables_, g, tr.keys, tr.action, cfg_.qtot_all_pairs);
    const double y = tr.terminal
                         ? tr.reward
                         : tr.reward + cfg_.gamma * target_eval(tr.next_keys).greedy_value;
    const double err = y - q;
    td_sum += err * err;

    const double ustep = cfg_.lr * err / n;
    for (int i = 0; i < n; ++i)
      tables_.add_utility(tr.keys[static_cast<std::size_t>(i)], tr.action[i], ustep);
    if (cfg_.qtot_all_pairs) {
      if (n > 1) {
        const double pstep = cfg_.lr * err * 2.0 / (static_cast<double>(n) * (n - 1));
        for (int i = 0; i < n; ++i)
          for (int j = i + 1; j < n; ++j)
            tables_.add_payoff(tr.keys[static_cast<std::size_t>(i)],
                               tr.keys[static_cast<std::size_t>(j)], tr.action[i], tr.action[j],
                               pstep);
      }
    } else if (g.n_edges() > 0) {
      const double pstep = cfg_.lr * err / g.n_edges();
      for (const Edge& e : g.edges())
        tables_.add_payoff(tr.keys[static_cast<std::size_t>(e.a)],
                           tr.keys[static_cast<std::size_t>(e.b)], tr.action[e.a], tr.action[e.b],
                           pstep);
    }
  }

  LossReport report;
  report.td_loss = td_sum / static_cast<double>(batch.size());

  SparseLossVariant variant;
  if (cfg_.lambda_sparse > 0.0 && resolve_sparse_loss(cfg_, variant)) {
    std::vector<std::vector<ObsKey>> key_batch;
    key_batch.reserve(batch.size());
    for (const Transition& tr : batch) key_batch.push_back(tr.keys);
    const SparseLossResult res = sparse_loss_with_grad(tables_, variant, key_batch);
    apply_gradient(tables_, res.grad, -cfg_.lr * cfg_.lambda_sparse);
    report.sparse_loss = res.loss;
  }
  return report;
}

EvalStats evaluate_policy(Env& env, const ValueTables& online, const ValueTables& target,
                          const TrainConfig& cfg, const TopologyCriterion& crit,
                          bool lowest_first, int episodes, std::uint64_t seed, long long salt,
                          bool fixed_weighting) {
  EvalStats stats;
  stats.episodes = episodes;
  std::vector<double> returns;
  returns.reserve(static_cast<std::size_t>(episodes));
  std::map<std::string, std::vector<double>> info_sums;
  double edge_sum = 0.0;
  double msg_sum = 0.0;
  long long selections = 0;

  KeyEncoder enc(env, cfg.history_len, cfg.anonymous_keys);
  for (int e = 0; e < episodes; ++e) {
    enc.reset(env.reset(Rng::derive(seed, 2, static_cast<std::uint64_t>(salt),
                                    static_cast<std::uint64_t>(e))));
    double ep_return = 0.0;
    std::map<std::string, double> ep_info;
    while (true) {
      const CoordinationGraph g = policy_topology(target, enc.keys(), crit, lowest_first);
      const JointAction a = fixed_weighting
                                ? greedy_fixed_weight(online, enc.keys(), g, cfg.maxsum_iterations)
                                : greedy_on_topology(online, enc.keys(), g, cfg.maxsum_iterations);
      edge_sum += g.n_edges();
      msg_sum += static_cast<double>(comm_cost(g, cfg.maxsum_iterations).messages_per_selection);
      ++selections;
      const StepResult sr = env.step(a);
      ep_return += sr.reward;
      for (const auto& [k, v] : sr.info) ep_info[k] += v;
      enc.push(sr.observations);
      if (sr.terminal) break;
    }
    returns.push_back(ep_return);
    for (const auto& [k, v] : ep_info) info_sums[k].push_back(v);
  }

  stats.return_median = percentile(returns, 50.0);
  stats.return_p25 = percentile(returns, 25.0);
  stats.return_p75 = percentile(returns, 75.0);
  stats.edges_used_mean = selections > 0 ? edge_sum / static_cast<double>(selections) : 0.0;
  stats.messages_per_selection = selections > 0 ? msg_sum / static_cast<double>(selections) : 0.0;
  for (auto& [k, vals] : info_sums) {
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    stats.aux[k + "_median"] = percentile(vals, 50.0);
    stats.aux[k + "_mean"] = mean;
  }
  return stats;
}

TrainResult train(Env& env, const TrainConfig& cfg, Learner& learner) {
  TrainResult result;
  if (cfg.total_steps <= 0) return result;

  TopologyCriterion crit = cfg.criterion;
  if (crit.kind == CriterionKind::random && crit.rng_seed == 0)
    crit.rng_seed = Rng::derive(cfg.seed, 7);
  TrainConfig run_cfg = cfg;
  run_cfg.criterion = crit;
  learner.set_criterion(crit);

  Rng explore_rng(Rng::derive(cfg.seed, 10));
  Rng replay_rng(Rng::derive(cfg.seed, 11));
  std::deque<std::vector<Transition>> replay;
  KeyEncoder enc(env, cfg.history_len, cfg.anonymous_keys);

  long long env_steps = 0;
  long long last_sync = 0;
  long long next_eval = cfg.eval_interval;
  long long episode_idx = 0;
  long long eval_idx = 0;

  const auto epsilon_at = [&](long long t) {
    if (cfg.epsilon_anneal_steps <= 0) return cfg.epsilon_end;
    const double frac = std::min(1.0, static_cast<double>(t) /
                                          static_cast<double>(cfg.epsilon_anneal_steps));
    return cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * frac;
  };

  while (env_steps < cfg.total_steps) {
    enc.reset(env.reset(Rng::derive(cfg.seed, 1, static_cast<std::uint64_t>(episode_idx))));
    ++episode_idx;
    std::vector<Transition> episode;
    double ep_return = 0.0;
    while (true) {
      Transition tr;
      tr.keys = enc.keys();
      const JointAction a = learner.act(tr.keys, epsilon_at(env_steps), &explore_rng);
      const StepResult sr = env.step(a);
      ++env_steps;
      enc.push(sr.observations);
      tr.action = a;
      tr.reward = sr.reward;
      tr.next_keys = enc.keys();
      tr.terminal = sr.terminal;
      ep_return += sr.reward;
      episode.push_back(std::move(tr));
      if (sr.terminal) break;
    }
    result.episode_returns.push_back(ep_return);

    replay.push_back(std::move(episode));
    if (static_cast<int>(replay.size()) > cfg.replay_capacity) replay.pop_front();

    if (static_cast<int>(replay.size()) >= cfg.batch_episodes) {
      std::vector<Transition> batch;
      for (std::size_t ep_index : sample_indices(replay_rng, replay.size(), cfg.batch_episodes)) {
        const auto& ep = replay[ep_index];
        batch.insert(batch.end(), ep.begin(), ep.end());
      }
      result.update_losses.push_back(learner.td_update(batch));
    }

    if (env_steps - last_sync >= cfg.target_sync_interval) {
      learner.sync_target();
      last_sync = env_steps;
    }

    // Evaluation points sit on the scheduled grid (multiples of
    // eval_interval up to total_steps) so curves align across seeds.
    while (cfg.eval_interval > 0 && next_eval <= cfg.total_steps && env_steps >= next_eval) {
      const EvalStats st = evaluate_policy(env, learner.tables(), learner.target(), run_cfg, crit,
                                           false, cfg.eval_episodes, cfg.seed, eval_idx);
      CurvePoint pt;
      pt.env_steps = next_eval;
      pt.eval_return_median = st.return_median;
      pt.eval_return_p25 = st.return_p25;
      pt.eval_return_p75 = st.return_p75;
      pt.edges_used_mean = st.edges_used_mean;
      pt.messages_per_selection = st.messages_per_selection;
      pt.aux = st.aux;
      result.curve.points.push_back(std::move(pt));
      next_eval += cfg.eval_interval;
      ++eval_idx;
    }
  }

  result.env_steps = env_steps;
  return result;
}

}  // namespace coordq
