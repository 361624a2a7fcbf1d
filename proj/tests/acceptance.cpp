// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. The heavy behavioral checks (5-7) run multi-seed trainings on
// desk-scale environments.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <thread>
#include <vector>

#include "coordq/experiment.hpp"

using namespace coordq;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point start = clock::now();
  return std::chrono::duration<double>(clock::now() - start).count();
}

void parallel_for(int jobs, int workers, const std::function<void(int)>& fn) {
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < std::max(1, workers); ++w)
    pool.emplace_back([&]() {
      while (true) {
        const int k = next.fetch_add(1);
        if (k >= jobs) return;
        fn(k);
      }
    });
  for (auto& t : pool) t.join();
}

int hw_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 2;
}

double median_of(std::vector<double> v) { return percentile(std::move(v), 50.0); }

// ---------------------------------------------------------------------------
// Random joint-value instances shared by criteria 1 and 2.

struct Instance {
  CoordinationGraph graph;
  std::vector<Vec> utilities;
  std::vector<Mat> payoffs;
};

Instance random_instance(Rng& rng, int n, const std::vector<int>& n_actions,
                         const std::vector<Edge>& edges) {
  Instance inst{CoordinationGraph(n, edges), {}, {}};
  inst.utilities.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Vec u(n_actions[static_cast<std::size_t>(i)]);
    for (int a = 0; a < u.size(); ++a) u[a] = rng.uniform_real(-1.0, 1.0);
    inst.utilities[static_cast<std::size_t>(i)] = std::move(u);
  }
  for (const Edge& e : inst.graph.edges()) {
    Mat m(n_actions[static_cast<std::size_t>(e.a)], n_actions[static_cast<std::size_t>(e.b)]);
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform_real(-1.0, 1.0);
    inst.payoffs.push_back(std::move(m));
  }
  return inst;
}

Instance random_forest_instance(Rng& rng, int max_agents, int max_actions) {
  const int n = rng.uniform_int(1, max_agents);
  std::vector<int> acts(static_cast<std::size_t>(n));
  for (auto& a : acts) a = rng.uniform_int(1, max_actions);
  std::vector<Edge> edges;
  for (int v = 1; v < n; ++v)
    if (rng.uniform01() < 0.8) edges.push_back(make_edge(rng.uniform_int(0, v - 1), v));
  return random_instance(rng, n, acts, edges);
}

Instance random_complete_instance(Rng& rng, int min_agents, int max_agents, int max_actions) {
  const int n = rng.uniform_int(min_agents, max_agents);
  std::vector<int> acts(static_cast<std::size_t>(n));
  for (auto& a : acts) a = rng.uniform_int(2, max_actions);
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.push_back(Edge{i, j});
  return random_instance(rng, n, acts, edges);
}

// ---------------------------------------------------------------------------
// 1. Max-Sum tree exactness.

Outcome criterion_tree_exactness() {
  Rng rng(2024001);
  int failures = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const Instance inst = random_forest_instance(rng, 6, 4);
    MaxSumOptions opt;
    opt.iterations = std::max(2, 2 * inst.graph.n_agents());
    const auto res = run_max_sum(to_factor_graph(inst.graph), inst.utilities, inst.payoffs, opt);
    const double got = evaluate_q_tot(inst.graph, inst.utilities, inst.payoffs, res.action);
    const auto [oracle_action, oracle_value] =
        exact_joint_argmax(inst.graph, inst.utilities, inst.payoffs);
    if (std::abs(got - oracle_value) > 1e-9) ++failures;
  }
  Outcome out;
  out.pass = failures == 0;
  out.detail = "500 acyclic instances, " + std::to_string(failures) + " mismatches";
  return out;
}

// ---------------------------------------------------------------------------
// 2. Anytime dominance and near-optimality on cyclic graphs.

Outcome criterion_anytime() {
  Rng rng(2024002);
  int dominance_failures = 0;
  int near_optimal = 0;
  const int trials = 500;
  for (int trial = 0; trial < trials; ++trial) {
    const Instance inst = random_complete_instance(rng, 2, 5, 4);
    const auto res = run_max_sum(to_factor_graph(inst.graph), inst.utilities, inst.payoffs);
    const double anytime = evaluate_q_tot(inst.graph, inst.utilities, inst.payoffs, res.action);

    JointAction util_only;
    for (const Vec& u : inst.utilities) util_only.actions.push_back(argmax_lowest(u));
    const double baseline = evaluate_q_tot(inst.graph, inst.utilities, inst.payoffs, util_only);
    if (anytime < baseline - 1e-12) ++dominance_failures;

    const auto [oracle_action, oracle_value] =
        exact_joint_argmax(inst.graph, inst.utilities, inst.payoffs);
    if (oracle_value - anytime <= 0.05 * std::max(std::abs(oracle_value), 1e-9)) ++near_optimal;
  }
  const double fraction = static_cast<double>(near_optimal) / trials;
  Outcome out;
  out.pass = dominance_failures == 0 && fraction >= 0.95;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "%d/%d dominated, %.1f%% within 5%% of the oracle (floor 95%%)",
                trials - dominance_failures, trials, 100.0 * fraction);
  out.detail = buf;
  return out;
}

// ---------------------------------------------------------------------------
// 3. Sparse-loss gradient correctness against central finite differences.

Outcome criterion_gradients() {
  Rng rng(2024003);
  const double h = 1e-5;
  double worst = 0.0;
  for (const auto variant :
       {SparseLossVariant::qvar, SparseLossVariant::abs_delta, SparseLossVariant::delta_var}) {
    for (int trial = 0; trial < 100; ++trial) {
      const int n = rng.uniform_int(2, 4);
      const int actions = rng.uniform_int(2, 4);
      ValueTables t(n, actions);
      std::vector<ObsKey> keys;
      for (int i = 0; i < n; ++i)
        keys.push_back(ObsKey{i, static_cast<ObsCode>(rng.uniform_int(0, 3))});
      for (int i = 0; i < n; ++i)
        for (int a = 0; a < actions; ++a)
          t.set_utility(keys[static_cast<std::size_t>(i)], a, rng.uniform_real(-1.0, 1.0));
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          for (int ai = 0; ai < actions; ++ai)
            for (int aj = 0; aj < actions; ++aj)
              t.set_payoff(keys[static_cast<std::size_t>(i)], keys[static_cast<std::size_t>(j)],
                           ai, aj, rng.uniform_real(-1.0, 1.0));

      const std::vector<std::vector<ObsKey>> batch = {keys};
      const TableGradient g = sparse_loss_grad(t, variant, batch);

      const auto loss_of = [&]() { return sparse_loss(t, variant, batch); };
      const auto fd_err = [&](double analytic, const std::function<void(double)>& set_to,
                              double orig) {
        set_to(orig + h);
        const double up = loss_of();
        set_to(orig - h);
        const double dn = loss_of();
        set_to(orig);
        const double fd = (up - dn) / (2.0 * h);
        return std::abs(analytic - fd) / std::max(1.0, std::abs(fd));
      };

      // Every cell of every gradient slice, zero cells included (those must
      // be flat directions of the loss).
      for (const auto& [pair, gm] : g.payoff) {
        for (int ai = 0; ai < actions; ++ai)
          for (int aj = 0; aj < actions; ++aj) {
            const double orig = t.payoff(pair.ki, pair.kj, ai, aj);
            worst = std::max(
                worst,
                fd_err(gm(ai, aj),
                       [&](double v) { t.set_payoff(pair.ki, pair.kj, ai, aj, v); }, orig));
          }
      }
      for (const auto& [k, gv] : g.utility) {
        for (int a = 0; a < actions; ++a) {
          const double orig = t.utility(k, a);
          worst = std::max(worst,
                           fd_err(gv[a], [&](double v) { t.set_utility(k, a, v); }, orig));
        }
      }
    }
  }
  Outcome out;
  out.pass = worst <= 1e-6;
  char buf[96];
  std::snprintf(buf, sizeof(buf), "max relative error %.3g (tolerance 1e-6)", worst);
  out.detail = buf;
  return out;
}

// ---------------------------------------------------------------------------
// 4. Edge-removal Monte-Carlo vs the analytic bound.

Outcome criterion_prop1() {
  EdgeRemovalConfig cfg;
  cfg.n_instances = 1000;
  cfg.n_agents = 4;
  cfg.n_actions = 3;
  cfg.seed = 2024004;
  cfg.bins = 10;
  cfg.bootstrap = 1000;
  const EdgeRemovalReport report = edge_removal_experiment(cfg);

  const EdgeRemovalBin& low = report.bins.front();
  const EdgeRemovalBin& high = report.bins.back();
  const bool ordered = low.unchanged_freq > high.unchanged_freq;
  const bool separated = low.ci_lo > high.ci_hi;

  // Wherever the bound is positive, the empirical frequency of that edge's
  // decile must reach bound - CI half-width.
  int positive = 0, violations = 0;
  std::vector<double> sorted_scores;
  for (const auto& r : report.rows) sorted_scores.push_back(r.score);
  std::sort(sorted_scores.begin(), sorted_scores.end());
  for (const auto& r : report.rows) {
    if (r.bound <= 0.0) continue;
    ++positive;
    const auto it = std::upper_bound(sorted_scores.begin(), sorted_scores.end(), r.score);
    const double quantile = static_cast<double>(it - sorted_scores.begin() - 1) /
                            static_cast<double>(sorted_scores.size());
    const int b = std::clamp(static_cast<int>(quantile * cfg.bins), 0, cfg.bins - 1);
    const EdgeRemovalBin& bin = report.bins[static_cast<std::size_t>(b)];
    const double half_width = 0.5 * (bin.ci_hi - bin.ci_lo);
    if (bin.unchanged_freq < r.bound - half_width) ++violations;
  }
  bool bounds_ok = violations == 0;
  for (const auto& r : report.rows)
    if (r.bound > 1.0) bounds_ok = false;

  Outcome out;
  out.pass = ordered && separated && bounds_ok;
  char buf[220];
  std::snprintf(buf, sizeof(buf),
                "low-score decile %.3f [%.3f,%.3f] vs high %.3f [%.3f,%.3f]; %d positive bounds, "
                "%d violations",
                low.unchanged_freq, low.ci_lo, low.ci_hi, high.unchanged_freq, high.ci_lo,
                high.ci_hi, positive, violations);
  out.detail = buf;
  return out;
}

// ---------------------------------------------------------------------------
// 5. Edgeless stack == independently coded shared-table Q-learner.

struct PlainQLearner {
  // Deliberately bare-bones: a map-backed shared utility table, per-agent
  // greedy argmax, and the mean-utility TD rule. No coordination-graph
  // machinery anywhere.
  std::map<std::tuple<int, std::uint64_t, std::uint64_t, int>, double> q, target;
  int n_agents = 0;
  int n_actions = 0;
  TrainConfig cfg;

  static std::tuple<int, std::uint64_t, std::uint64_t, int> key_of(const ObsKey& k, int a) {
    return {k.agent, obscode_hi(k.code), obscode_lo(k.code), a};
  }
  double value(const std::map<std::tuple<int, std::uint64_t, std::uint64_t, int>, double>& table,
               const ObsKey& k, int a) const {
    const auto it = table.find(key_of(k, a));
    return it == table.end() ? 0.0 : it->second;
  }
  int greedy(const ObsKey& k) const {
    int best = 0;
    double best_v = value(q, k, 0);
    for (int a = 1; a < n_actions; ++a) {
      const double v = value(q, k, a);
      if (v > best_v) {
        best_v = v;
        best = a;
      }
    }
    return best;
  }
  double target_max_mean(const std::vector<ObsKey>& keys) const {
    double sum = 0.0;
    for (int i = 0; i < n_agents; ++i) {
      const ObsKey& k = keys[static_cast<std::size_t>(i)];
      double best = value(target, k, 0);
      for (int a = 1; a < n_actions; ++a) best = std::max(best, value(target, k, a));
      sum += best;
    }
    return sum / n_agents;
  }
  double update(const std::vector<Transition>& batch) {
    double td_sum = 0.0;
    for (const Transition& tr : batch) {
      double q_sum = 0.0;
      for (int i = 0; i < n_agents; ++i)
        q_sum += value(q, tr.keys[static_cast<std::size_t>(i)], tr.action[i]);
      const double q_tot_v = q_sum / n_agents;
      const double y =
          tr.terminal ? tr.reward : tr.reward + cfg.gamma * target_max_mean(tr.next_keys);
      const double err = y - q_tot_v;
      td_sum += err * err;
      for (int i = 0; i < n_agents; ++i)
        q[key_of(tr.keys[static_cast<std::size_t>(i)], tr.action[i])] += cfg.lr * err / n_agents;
    }
    return td_sum / static_cast<double>(batch.size());
  }
};

Outcome criterion_edgeless_oracle() {
  EnvConfig env_cfg;
  env_cfg.name = "disperse";
  env_cfg.disperse.n_agents = 4;
  env_cfg.disperse.n_hospitals = 2;
  env_cfg.disperse.horizon = 10;

  TrainConfig cfg;
  cfg.criterion.kind = CriterionKind::none;
  cfg.lr = 0.3;
  cfg.gamma = 0.98;
  cfg.epsilon_anneal_steps = 25'000;
  cfg.total_steps = 50'000;
  cfg.eval_interval = 25'000;
  cfg.eval_episodes = 8;
  cfg.seed = 91;

  auto env = make_env(env_cfg);
  Learner learner(env->n_agents(), env->n_actions(), cfg);
  const TrainResult result = train(*env, cfg, learner);

  // The plain learner replays the exact same episode/seed schedule.
  PlainQLearner plain;
  plain.n_agents = env->n_agents();
  plain.n_actions = env->n_actions();
  plain.cfg = cfg;

  auto env2 = make_env(env_cfg);
  Rng explore(Rng::derive(cfg.seed, 10));
  Rng replay_rng(Rng::derive(cfg.seed, 11));
  std::deque<std::vector<Transition>> replay;
  KeyEncoder enc(*env2, cfg.history_len);
  std::vector<double> episode_returns;
  std::vector<double> update_losses;

  long long env_steps = 0;
  long long last_sync = 0;
  long long episode_idx = 0;
  while (env_steps < cfg.total_steps) {
    enc.reset(env2->reset(Rng::derive(cfg.seed, 1, static_cast<std::uint64_t>(episode_idx))));
    ++episode_idx;
    std::vector<Transition> episode;
    double ep_return = 0.0;
    while (true) {
      Transition tr;
      tr.keys = enc.keys();
      const double frac = std::min(
          1.0, static_cast<double>(env_steps) / static_cast<double>(cfg.epsilon_anneal_steps));
      const double eps = cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * frac;
      JointAction a;
      for (int i = 0; i < plain.n_agents; ++i)
        a.actions.push_back(plain.greedy(tr.keys[static_cast<std::size_t>(i)]));
      for (int i = 0; i < plain.n_agents; ++i)
        if (explore.uniform01() < eps) a[i] = explore.uniform_int(0, plain.n_actions - 1);
      const StepResult sr = env2->step(a);
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
    episode_returns.push_back(ep_return);
    replay.push_back(std::move(episode));
    if (static_cast<int>(replay.size()) > cfg.replay_capacity) replay.pop_front();
    if (static_cast<int>(replay.size()) >= cfg.batch_episodes) {
      std::vector<Transition> batch;
      for (std::size_t ep : sample_indices(replay_rng, replay.size(), cfg.batch_episodes))
        batch.insert(batch.end(), replay[ep].begin(), replay[ep].end());
      update_losses.push_back(plain.update(batch));
    }
    if (env_steps - last_sync >= cfg.target_sync_interval) {
      plain.target = plain.q;
      last_sync = env_steps;
    }
  }

  // Step-for-step comparison: every episode return, every update loss, every
  // learned table entry, all exactly equal.
  std::string why;
  bool pass = true;
  if (result.episode_returns.size() != episode_returns.size()) {
    pass = false;
    why = "episode count mismatch";
  }
  for (std::size_t i = 0; pass && i < episode_returns.size(); ++i)
    if (result.episode_returns[i] != episode_returns[i]) {
      pass = false;
      why = "episode return diverged at " + std::to_string(i);
    }
  if (pass && result.update_losses.size() != update_losses.size()) {
    pass = false;
    why = "update count mismatch";
  }
  for (std::size_t i = 0; pass && i < update_losses.size(); ++i)
    if (result.update_losses[i].td_loss != update_losses[i]) {
      pass = false;
      why = "td loss diverged at update " + std::to_string(i);
    }
  if (pass && !learner.tables().payoff_slices().empty()) {
    pass = false;
    why = "edgeless run touched payoff entries";
  }
  if (pass) {
    // Two-way cell comparison (missing entries read as zero on both sides).
    for (const auto& [k, slice] : learner.tables().utility_slices()) {
      for (int a = 0; pass && a < plain.n_actions; ++a)
        if (slice[a] != plain.value(plain.q, k, a)) {
          pass = false;
          why = "table entry mismatch";
        }
      if (!pass) break;
    }
    for (const auto& [k, v] : plain.q) {
      if (!pass) break;
      const ObsKey key{std::get<0>(k),
                       (static_cast<ObsCode>(std::get<1>(k)) << 64) |
                           static_cast<ObsCode>(std::get<2>(k))};
      if (learner.tables().utility(key, std::get<3>(k)) != v) {
        pass = false;
        why = "plain entry missing from tables";
      }
    }
  }

  Outcome out;
  out.pass = pass;
  out.detail = pass ? std::to_string(episode_returns.size()) + " episodes and " +
                          std::to_string(update_losses.size()) + " updates identical"
                    : why;
  return out;
}

// ---------------------------------------------------------------------------
// 6. Relative overgeneralization on desk-scale Pursuit.

TrainConfig pursuit_train_config(CriterionKind kind, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.criterion.kind = kind;
  cfg.criterion.lambda = 0.5;
  cfg.lr = 0.1;
  cfg.gamma = 0.85;
  cfg.epsilon_anneal_steps = 50'000;
  cfg.epsilon_end = 0.15;
  cfg.target_sync_interval = 500;
  cfg.lambda_sparse = 1e-4;
  cfg.total_steps = 200'000;
  cfg.eval_interval = 200'000;  // one final evaluation
  cfg.eval_episodes = 32;
  cfg.anonymous_keys = true;  // prey-relative views pool across predators
  cfg.table_entry_cap = 100'000'000;
  cfg.seed = seed;
  return cfg;
}

Outcome criterion_pursuit() {
  EnvConfig env_cfg;
  env_cfg.name = "pursuit";
  env_cfg.pursuit.width = 6;
  env_cfg.pursuit.height = 6;
  env_cfg.pursuit.n_predators = 4;
  env_cfg.pursuit.n_prey = 2;
  env_cfg.pursuit.capture_reward = 1.0;
  env_cfg.pursuit.lone_penalty = 1.0;  // punishment equal to the reward
  env_cfg.pursuit.observe_position = false;
  env_cfg.pursuit.observe_others = false;
  env_cfg.pursuit.horizon = 60;

  const int seeds = 8;
  std::vector<double> sparse_cg(seeds, 0.0), indep(seeds, 0.0);
  parallel_for(2 * seeds, hw_workers(), [&](int job) {
    const bool coordinated = job < seeds;
    const int seed = job % seeds;
    const TrainConfig cfg = pursuit_train_config(
        coordinated ? CriterionKind::qvar : CriterionKind::none,
        static_cast<std::uint64_t>(seed));
    auto env = make_env(env_cfg);
    Learner learner(env->n_agents(), env->n_actions(), cfg);
    const TrainResult result = train(*env, cfg, learner);
    double captures = 0.0;
    if (!result.curve.points.empty()) {
      const auto& aux = result.curve.points.back().aux;
      const auto it = aux.find("prey_captured_median");
      if (it != aux.end()) captures = it->second;
    }
    (coordinated ? sparse_cg : indep)[static_cast<std::size_t>(seed)] = captures;
  });

  const double sparse_median = median_of(sparse_cg);
  const double indep_median = median_of(indep);
  Outcome out;
  out.pass = sparse_median >= 1.0 && indep_median <= 0.5;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "median captures/episode: qvar %.2f (needs >= 1.0), none %.2f (needs <= 0.5)",
                sparse_median, indep_median);
  out.detail = buf;
  return out;
}

// ---------------------------------------------------------------------------
// 7. Sparsity-sweep order monotonicity on desk-scale Sensor.

Outcome criterion_sweep_order() {
  EnvConfig env_cfg;
  env_cfg.name = "sensor";
  env_cfg.sensor.rows = 2;
  env_cfg.sensor.cols = 3;
  env_cfg.sensor.n_targets = 2;
  env_cfg.sensor.horizon = 20;

  const int seeds = 8;
  std::vector<double> desc(seeds, 0.0), asc(seeds, 0.0);
  parallel_for(seeds, hw_workers(), [&](int seed) {
    TrainConfig cfg;
    cfg.criterion.kind = CriterionKind::qvar;
    cfg.criterion.lambda = 0.5;
    cfg.lr = 0.02;
    cfg.gamma = 0.98;
    cfg.epsilon_anneal_steps = 30'000;
    cfg.lambda_sparse = 1e-4;
    cfg.total_steps = 60'000;
    cfg.eval_interval = 0;  // no mid-train evaluation needed
    cfg.table_entry_cap = 100'000'000;
    cfg.seed = static_cast<std::uint64_t>(seed);

    auto env = make_env(env_cfg);
    Learner learner(env->n_agents(), env->n_actions(), cfg);
    train(*env, cfg, learner);

    TopologyCriterion crit;
    crit.kind = CriterionKind::qvar;
    crit.lambda = 0.3;
    const EvalStats d = evaluate_policy(*env, learner.tables(), learner.target(), cfg, crit,
                                        false, 32, cfg.seed, 700, true);
    const EvalStats a = evaluate_policy(*env, learner.tables(), learner.target(), cfg, crit,
                                        true, 32, cfg.seed, 700, true);
    desc[static_cast<std::size_t>(seed)] = d.return_median;
    asc[static_cast<std::size_t>(seed)] = a.return_median;
  });

  const double desc_median = median_of(desc);
  const double asc_median = median_of(asc);
  Outcome out;
  out.pass = desc_median >= asc_median;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "lambda 0.3 greedy return: descending %.3f vs ascending %.3f (medians, 8 seeds)",
                desc_median, asc_median);
  out.detail = buf;
  return out;
}

// ---------------------------------------------------------------------------
// 8. Communication accounting.

Outcome criterion_comm() {
  Rng rng(2024008);
  int checked = 0;
  std::string why;
  for (const auto kind : {CriterionKind::qvar, CriterionKind::delta_max, CriterionKind::delta_var,
                          CriterionKind::random}) {
    for (int n = 2; n <= 10 && why.empty(); ++n) {
      std::vector<ObsKey> keys;
      ValueTables t(n, 3);
      for (int i = 0; i < n; ++i) keys.push_back(ObsKey{i, 0});
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          for (int ai = 0; ai < 3; ++ai)
            for (int aj = 0; aj < 3; ++aj)
              t.set_payoff(keys[static_cast<std::size_t>(i)], keys[static_cast<std::size_t>(j)],
                           ai, aj, rng.uniform_real(-1.0, 1.0));
      for (int lam = 0; lam <= 10; ++lam) {
        const double lambda = lam / 10.0;
        TopologyCriterion crit{kind, lambda, 77};
        const CoordinationGraph g = select_topology(t, keys, crit);
        const CommReport wire = comm_cost(g, 5);
        const CommReport literal = comm_cost(g, 5, false);
        const int complete = n * (n - 1) / 2;
        if (std::abs(wire.saved_fraction - (1.0 - lambda)) >
            1.0 / static_cast<double>(complete) + 1e-12)
          why = "saved fraction off for n=" + std::to_string(n);
        if (wire.messages_per_selection != 5LL * 2 * (2LL * g.n_edges()))
          why = "wire message count mismatch";
        if (literal.messages_per_selection != 5LL * 2 * (n + 2LL * g.n_edges()))
          why = "literal message count mismatch";
        ++checked;
      }
    }
  }
  Outcome out;
  out.pass = why.empty();
  out.detail = why.empty() ? std::to_string(checked) + " (criterion, n, lambda) cases exact" : why;
  return out;
}

// ---------------------------------------------------------------------------
// 9. Byte-identical reruns.

Outcome criterion_determinism() {
  const fs::path base = fs::temp_directory_path() / "coordq_acceptance_det";
  fs::remove_all(base);
  ExperimentConfig cfg;
  cfg.env.name = "disperse";
  cfg.env.disperse.n_agents = 4;
  cfg.env.disperse.n_hospitals = 2;
  cfg.env.disperse.horizon = 10;
  cfg.train.criterion.kind = CriterionKind::qvar;
  cfg.train.criterion.lambda = 0.5;
  cfg.train.lr = 0.3;
  cfg.train.total_steps = 4000;
  cfg.train.eval_interval = 2000;
  cfg.train.eval_episodes = 8;
  cfg.train.epsilon_anneal_steps = 2000;
  cfg.n_seeds = 3;

  auto read = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };

  std::ostringstream log;
  cfg.output_dir = (base / "a").string();
  const int fa = run_experiment(cfg, log);
  cfg.output_dir = (base / "b").string();
  const int fb = run_experiment(cfg, log);

  std::string why;
  if (fa != 0 || fb != 0) why = "run failed";
  const char* files[] = {"curve_seed0.csv",  "curve_seed1.csv",  "curve_seed2.csv",
                         "records.csv",      "aggregate.csv",    "tables_seed0.txt",
                         "tables_seed1.txt", "tables_seed2.txt"};
  for (const char* f : files) {
    if (!why.empty()) break;
    if (read(base / "a" / f) != read(base / "b" / f)) why = std::string(f) + " differs";
  }
  fs::remove_all(base);
  Outcome out;
  out.pass = why.empty();
  out.detail = why.empty() ? "8 output files byte-identical across reruns" : why;
  return out;
}

// ---------------------------------------------------------------------------
// 10. Stability metric sanity.

Outcome criterion_stability() {
  std::string why;

  const std::vector<double> flat(40, -2.5);
  for (const auto m :
       {SmoothMethod::kalman, SmoothMethod::ema, SmoothMethod::dema, SmoothMethod::midpoint})
    if (stability_distance(flat, m).distance != 0.0) why = "constant curve distance nonzero";

  Rng rng(2024010);
  for (int trial = 0; trial < 50 && why.empty(); ++trial) {
    std::vector<double> curve;
    const int len = rng.uniform_int(2, 80);
    for (int t = 0; t < len; ++t) curve.push_back(rng.uniform_real(-3.0, 3.0));
    std::vector<double> shifted = curve;
    const double c = rng.uniform_real(-50.0, 50.0);
    for (double& x : shifted) x += c;
    for (const auto m :
         {SmoothMethod::kalman, SmoothMethod::ema, SmoothMethod::dema, SmoothMethod::midpoint}) {
      const double d0 = stability_distance(curve, m).distance;
      const double d1 = stability_distance(shifted, m).distance;
      if (std::abs(d0 - d1) > 1e-9) why = "shift changed " + to_string(m) + " distance";
    }
  }

  Outcome out;
  out.pass = why.empty();
  out.detail = why.empty() ? "4 smoothers exact on constants, shift-invariant within 1e-9" : why;
  return out;
}

}  // namespace

int main() {
  struct Entry {
    const char* name;
    Outcome (*run)();
  };
  const Entry entries[] = {
      {"Max-Sum tree exactness", criterion_tree_exactness},
      {"Anytime dominance on cyclic graphs", criterion_anytime},
      {"Sparse-loss gradient correctness", criterion_gradients},
      {"Edge-removal bound Monte-Carlo", criterion_prop1},
      {"Edgeless oracle equivalence", criterion_edgeless_oracle},
      {"Relative overgeneralization (Pursuit)", criterion_pursuit},
      {"Sparsity-sweep order monotonicity (Sensor)", criterion_sweep_order},
      {"Communication accounting", criterion_comm},
      {"Determinism (byte-identical reruns)", criterion_determinism},
      {"Stability metric sanity", criterion_stability},
  };

  int failures = 0;
  int id = 0;
  for (const Entry& e : entries) {
    ++id;
    const double t0 = now_seconds();
    Outcome out;
    try {
      out = e.run();
    } catch (const std::exception& ex) {
      out.pass = false;
      out.detail = std::string("exception: ") + ex.what();
    }
    const double dt = now_seconds() - t0;
    std::printf("[%s] %2d. %s (%.1fs) - %s\n", out.pass ? "PASS" : "FAIL", id, e.name, dt,
                out.detail.c_str());
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  std::printf("%d/10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
