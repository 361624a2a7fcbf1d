#include "coordq/experiment.hpp"

#include <atomic>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace coordq {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Strict object reader: every key must be consumed.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw std::invalid_argument(path_ + " must be a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    if (auto it = j_.find(key); it != j_.end()) {
      seen_.insert(key);
      try {
        out = it->get<T>();
      } catch (const json::exception&) {
        throw std::invalid_argument(path_ + "." + key + " has the wrong type");
      }
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  json sub(const char* key) {
    seen_.insert(key);
    return j_.value(key, json::object());
  }

  void done() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.contains(key))
        throw std::invalid_argument("unknown key '" + path_ + "." + key + "'");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string sparse_loss_to_string(SparseLossChoice c) {
  switch (c) {
    case SparseLossChoice::auto_match: return "auto";
    case SparseLossChoice::qvar: return "qvar";
    case SparseLossChoice::abs_delta: return "abs_delta";
    case SparseLossChoice::delta_var: return "delta_var";
    case SparseLossChoice::none: return "none";
  }
  throw std::invalid_argument("unknown sparse loss choice");
}

SparseLossChoice sparse_loss_from_string(const std::string& s) {
  if (s == "auto") return SparseLossChoice::auto_match;
  if (s == "qvar") return SparseLossChoice::qvar;
  if (s == "abs_delta") return SparseLossChoice::abs_delta;
  if (s == "delta_var") return SparseLossChoice::delta_var;
  if (s == "none") return SparseLossChoice::none;
  throw std::invalid_argument("unknown sparse loss '" + s + "'");
}

EnvConfig parse_env(const json& j) {
  EnvConfig cfg;
  Fields f(j, "env");
  f.get("name", cfg.name);
  if (cfg.name == "aloha") {
    Fields e(j, "env");
    e.get("name", cfg.name);
    auto& a = cfg.aloha;
    e.get("rows", a.rows);
    e.get("cols", a.cols);
    e.get("start_backlog", a.start_backlog);
    e.get("max_backlog", a.max_backlog);
    e.get("arrival_prob", a.arrival_prob);
    e.get("success_reward", a.success_reward);
    e.get("collision_penalty", a.collision_penalty);
    e.get("horizon", a.horizon);
    e.done();
  } else if (cfg.name == "pursuit") {
    Fields e(j, "env");
    e.get("name", cfg.name);
    auto& p = cfg.pursuit;
    e.get("width", p.width);
    e.get("height", p.height);
    e.get("n_predators", p.n_predators);
    e.get("n_prey", p.n_prey);
    e.get("sight", p.sight);
    e.get("observe_position", p.observe_position);
    e.get("observe_others", p.observe_others);
    e.get("capture_reward", p.capture_reward);
    e.get("lone_penalty", p.lone_penalty);
    e.get("horizon", p.horizon);
    e.done();
  } else if (cfg.name == "hallway") {
    Fields e(j, "env");
    e.get("name", cfg.name);
    auto& h = cfg.hallway;
    e.get("group_sizes", h.group_sizes);
    e.get("chain_lengths", h.chain_lengths);
    e.get("min_length", h.min_length);
    e.get("max_length", h.max_length);
    e.get("layout_seed", h.layout_seed);
    e.get("horizon", h.horizon);
    e.done();
  } else if (cfg.name == "sensor") {
    Fields e(j, "env");
    e.get("name", cfg.name);
    auto& s = cfg.sensor;
    e.get("rows", s.rows);
    e.get("cols", s.cols);
    e.get("n_targets", s.n_targets);
    e.get("scan_cost", s.scan_cost);
    e.get("reward_per_scanner", s.reward_per_scanner);
    e.get("horizon", s.horizon);
    e.done();
  } else if (cfg.name == "gather") {
    Fields e(j, "env");
    e.get("name", cfg.name);
    auto& g = cfg.gather;
    e.get("width", g.width);
    e.get("height", g.height);
    e.get("n_agents", g.n_agents);
    e.get("knowledge_radius", g.knowledge_radius);
    e.get("optimal_reward", g.optimal_reward);
    e.get("suboptimal_reward", g.suboptimal_reward);
    e.get("partial_penalty", g.partial_penalty);
    e.get("horizon", g.horizon);
    e.done();
  } else if (cfg.name == "disperse") {
    Fields e(j, "env");
    e.get("name", cfg.name);
    auto& d = cfg.disperse;
    e.get("n_agents", d.n_agents);
    e.get("n_hospitals", d.n_hospitals);
    e.get("horizon", d.horizon);
    e.done();
  } else {
    throw std::invalid_argument("unknown environment '" + cfg.name + "'");
  }
  return cfg;
}

json env_to_json(const EnvConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  if (cfg.name == "aloha") {
    const auto& a = cfg.aloha;
    j["rows"] = a.rows;
    j["cols"] = a.cols;
    j["start_backlog"] = a.start_backlog;
    j["max_backlog"] = a.max_backlog;
    j["arrival_prob"] = a.arrival_prob;
    j["success_reward"] = a.success_reward;
    j["collision_penalty"] = a.collision_penalty;
    j["horizon"] = a.horizon;
  } else if (cfg.name == "pursuit") {
    const auto& p = cfg.pursuit;
    j["width"] = p.width;
    j["height"] = p.height;
    j["n_predators"] = p.n_predators;
    j["n_prey"] = p.n_prey;
    j["sight"] = p.sight;
    j["observe_position"] = p.observe_position;
    j["observe_others"] = p.observe_others;
    j["capture_reward"] = p.capture_reward;
    j["lone_penalty"] = p.lone_penalty;
    j["horizon"] = p.horizon;
  } else if (cfg.name == "hallway") {
    const auto& h = cfg.hallway;
    j["group_sizes"] = h.group_sizes;
    j["chain_lengths"] = h.chain_lengths;
    j["min_length"] = h.min_length;
    j["max_length"] = h.max_length;
    j["layout_seed"] = h.layout_seed;
    j["horizon"] = h.horizon;
  } else if (cfg.name == "sensor") {
    const auto& s = cfg.sensor;
    j["rows"] = s.rows;
    j["cols"] = s.cols;
    j["n_targets"] = s.n_targets;
    j["scan_cost"] = s.scan_cost;
    j["reward_per_scanner"] = s.reward_per_scanner;
    j["horizon"] = s.horizon;
  } else if (cfg.name == "gather") {
    const auto& g = cfg.gather;
    j["width"] = g.width;
    j["height"] = g.height;
    j["n_agents"] = g.n_agents;
    j["knowledge_radius"] = g.knowledge_radius;
    j["optimal_reward"] = g.optimal_reward;
    j["suboptimal_reward"] = g.suboptimal_reward;
    j["partial_penalty"] = g.partial_penalty;
    j["horizon"] = g.horizon;
  } else if (cfg.name == "disperse") {
    const auto& d = cfg.disperse;
    j["n_agents"] = d.n_agents;
    j["n_hospitals"] = d.n_hospitals;
    j["horizon"] = d.horizon;
  }
  return j;
}

TopologyCriterion parse_criterion(const json& j) {
  TopologyCriterion crit;
  Fields f(j, "criterion");
  std::string kind = to_string(crit.kind);
  f.get("kind", kind);
  crit.kind = criterion_from_string(kind);
  f.get("lambda", crit.lambda);
  f.get("rng_seed", crit.rng_seed);
  f.done();
  if (crit.lambda < 0.0 || crit.lambda > 1.0)
    throw std::invalid_argument("criterion.lambda must be in [0,1]");
  return crit;
}

TrainConfig parse_train(const json& j) {
  TrainConfig cfg;
  Fields f(j, "train");
  f.get("lr", cfg.lr);
  f.get("gamma", cfg.gamma);
  f.get("epsilon_start", cfg.epsilon_start);
  f.get("epsilon_end", cfg.epsilon_end);
  f.get("epsilon_anneal_steps", cfg.epsilon_anneal_steps);
  f.get("batch_episodes", cfg.batch_episodes);
  f.get("replay_capacity", cfg.replay_capacity);
  f.get("target_sync_interval", cfg.target_sync_interval);
  f.get("lambda_sparse", cfg.lambda_sparse);
  if (f.has("sparse_loss")) {
    std::string s;
    f.get("sparse_loss", s);
    cfg.sparse_loss = sparse_loss_from_string(s);
  }
  f.get("maxsum_iterations", cfg.maxsum_iterations);
  f.get("total_steps", cfg.total_steps);
  f.get("eval_interval", cfg.eval_interval);
  f.get("eval_episodes", cfg.eval_episodes);
  f.get("history_len", cfg.history_len);
  f.get("anonymous_keys", cfg.anonymous_keys);
  f.get("table_entry_cap", cfg.table_entry_cap);
  f.get("qtot_all_pairs", cfg.qtot_all_pairs);
  f.get("seed", cfg.seed);
  f.done();
  if (cfg.lr <= 0.0) throw std::invalid_argument("train.lr must be positive");
  if (cfg.gamma < 0.0 || cfg.gamma >= 1.0)
    throw std::invalid_argument("train.gamma must be in [0,1)");
  if (cfg.batch_episodes < 1) throw std::invalid_argument("train.batch_episodes must be >= 1");
  if (cfg.replay_capacity < cfg.batch_episodes)
    throw std::invalid_argument("train.replay_capacity must hold at least one batch");
  if (cfg.maxsum_iterations < 1)
    throw std::invalid_argument("train.maxsum_iterations must be >= 1");
  if (cfg.total_steps < 0) throw std::invalid_argument("train.total_steps must be >= 0");
  if (cfg.history_len < 1) throw std::invalid_argument("train.history_len must be >= 1");
  return cfg;
}

json train_to_json(const TrainConfig& cfg) {
  json j;
  j["lr"] = cfg.lr;
  j["gamma"] = cfg.gamma;
  j["epsilon_start"] = cfg.epsilon_start;
  j["epsilon_end"] = cfg.epsilon_end;
  j["epsilon_anneal_steps"] = cfg.epsilon_anneal_steps;
  j["batch_episodes"] = cfg.batch_episodes;
  j["replay_capacity"] = cfg.replay_capacity;
  j["target_sync_interval"] = cfg.target_sync_interval;
  j["lambda_sparse"] = cfg.lambda_sparse;
  j["sparse_loss"] = sparse_loss_to_string(cfg.sparse_loss);
  j["maxsum_iterations"] = cfg.maxsum_iterations;
  j["total_steps"] = cfg.total_steps;
  j["eval_interval"] = cfg.eval_interval;
  j["eval_episodes"] = cfg.eval_episodes;
  j["history_len"] = cfg.history_len;
  j["anonymous_keys"] = cfg.anonymous_keys;
  j["table_entry_cap"] = cfg.table_entry_cap;
  j["qtot_all_pairs"] = cfg.qtot_all_pairs;
  j["seed"] = cfg.seed;
  return j;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  Fields f(j, "config");
  cfg.env = parse_env(f.sub("env"));
  if (f.has("train")) cfg.train = parse_train(f.sub("train"));
  if (f.has("criterion")) cfg.train.criterion = parse_criterion(f.sub("criterion"));
  f.get("n_seeds", cfg.n_seeds);
  f.get("output_dir", cfg.output_dir);
  f.done();
  if (cfg.n_seeds < 1) throw std::invalid_argument("n_seeds must be >= 1");
  if (cfg.output_dir.empty()) throw std::invalid_argument("output_dir must not be empty");
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str());
}

std::string serialize_experiment_config(const ExperimentConfig& cfg) {
  json j;
  j["env"] = env_to_json(cfg.env);
  j["train"] = train_to_json(cfg.train);
  json crit;
  crit["kind"] = to_string(cfg.train.criterion.kind);
  crit["lambda"] = cfg.train.criterion.lambda;
  crit["rng_seed"] = cfg.train.criterion.rng_seed;
  j["criterion"] = crit;
  j["n_seeds"] = cfg.n_seeds;
  j["output_dir"] = cfg.output_dir;
  return j.dump(2) + "\n";
}

std::string config_hash(const ExperimentConfig& cfg) {
  // output_dir is a local path, not part of the experiment's identity.
  ExperimentConfig keyed = cfg;
  keyed.output_dir = "";
  const std::string text = serialize_experiment_config(keyed);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

struct SeedOutputs {
  bool ok = false;
  std::string error;
  LearningCurve curve;
  std::string curve_csv;
  std::string tables_txt;
  std::string record_row;
};

std::vector<std::string> aux_columns(const LearningCurve& curve) {
  std::set<std::string> keys;
  for (const CurvePoint& pt : curve.points)
    for (const auto& [k, v] : pt.aux) keys.insert(k);
  return {keys.begin(), keys.end()};
}

std::string curve_to_csv(const LearningCurve& curve) {
  const std::vector<std::string> aux = aux_columns(curve);
  std::ostringstream out;
  out << "env_steps,eval_return_median,eval_return_p25,eval_return_p75,edges_used_mean,"
         "messages_per_selection";
  for (const auto& k : aux) out << ",aux_" << k;
  out << "\n";
  for (const CurvePoint& pt : curve.points) {
    out << pt.env_steps << "," << format_double(pt.eval_return_median) << ","
        << format_double(pt.eval_return_p25) << "," << format_double(pt.eval_return_p75) << ","
        << format_double(pt.edges_used_mean) << "," << format_double(pt.messages_per_selection);
    for (const auto& k : aux) {
      const auto it = pt.aux.find(k);
      out << "," << format_double(it == pt.aux.end() ? 0.0 : it->second);
    }
    out << "\n";
  }
  return out.str();
}

std::vector<double> median_series(const LearningCurve& curve) {
  std::vector<double> xs;
  xs.reserve(curve.points.size());
  for (const CurvePoint& pt : curve.points) xs.push_back(pt.eval_return_median);
  return xs;
}

double final_performance(const LearningCurve& curve) {
  if (curve.points.empty()) return 0.0;
  const std::size_t n = curve.points.size();
  const std::size_t tail = std::max<std::size_t>(1, (n + 9) / 10);  // last 10%
  double sum = 0.0;
  for (std::size_t i = n - tail; i < n; ++i) sum += curve.points[i].eval_return_median;
  return sum / static_cast<double>(tail);
}

double temporal_average(const LearningCurve& curve) {
  if (curve.points.empty()) return 0.0;
  if (curve.points.size() == 1) return curve.points.front().eval_return_median;
  double area = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    area += 0.5 * (a.eval_return_median + b.eval_return_median) *
            static_cast<double>(b.env_steps - a.env_steps);
  }
  const double span =
      static_cast<double>(curve.points.back().env_steps - curve.points.front().env_steps);
  return span > 0.0 ? area / span : curve.points.front().eval_return_median;
}

int worker_count(int jobs) {
  if (const char* env = std::getenv("COORDQ_WORKERS")) {
    const int w = std::atoi(env);
    if (w >= 1) return std::min(jobs, w);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return std::min(jobs, hw > 0 ? static_cast<int>(hw) : 1);
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
}

SeedOutputs run_one_seed(const ExperimentConfig& cfg, int seed_index, const std::string& hash) {
  SeedOutputs out;
  try {
    TrainConfig tc = cfg.train;
    tc.seed = cfg.train.seed + static_cast<std::uint64_t>(seed_index);
    auto env = make_env(cfg.env);
    Learner learner(env->n_agents(), env->n_actions(), tc);
    const TrainResult result = train(*env, tc, learner);

    out.curve = result.curve;
    out.curve_csv = curve_to_csv(result.curve);
    std::ostringstream tables;
    learner.tables().save(tables);
    out.tables_txt = tables.str();

    const std::vector<double> med = median_series(result.curve);
    double stab[4] = {0.0, 0.0, 0.0, 0.0};
    if (med.size() >= 2) {
      stab[0] = stability_distance(med, SmoothMethod::kalman).distance;
      stab[1] = stability_distance(med, SmoothMethod::ema).distance;
      stab[2] = stability_distance(med, SmoothMethod::dema).distance;
      stab[3] = stability_distance(med, SmoothMethod::midpoint).distance;
    }
    double edges_mean = 0.0, msgs_mean = 0.0;
    for (const CurvePoint& pt : result.curve.points) {
      edges_mean += pt.edges_used_mean;
      msgs_mean += pt.messages_per_selection;
    }
    if (!result.curve.points.empty()) {
      edges_mean /= static_cast<double>(result.curve.points.size());
      msgs_mean /= static_cast<double>(result.curve.points.size());
    }
    auto probe = make_env(cfg.env);
    const int complete = probe->n_agents() * (probe->n_agents() - 1) / 2;
    const double saved = complete > 0 ? 1.0 - edges_mean / complete : 0.0;

    std::ostringstream row;
    row << seed_index << "," << hash << "," << format_double(final_performance(result.curve))
        << "," << format_double(temporal_average(result.curve)) << "," << format_double(stab[0])
        << "," << format_double(stab[1]) << "," << format_double(stab[2]) << ","
        << format_double(stab[3]) << "," << format_double(edges_mean) << ","
        << format_double(msgs_mean) << "," << format_double(saved) << "\n";
    out.record_row = row.str();
    out.ok = true;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

void run_pool(int jobs, int workers, const std::function<void(int)>& fn) {
  std::atomic<int> next{0};
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w)
    threads.emplace_back([&]() {
      while (true) {
        const int k = next.fetch_add(1);
        if (k >= jobs) return;
        fn(k);
      }
    });
  for (auto& t : threads) t.join();
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
  const std::string hash = config_hash(cfg);
  fs::create_directories(cfg.output_dir);
  write_file(fs::path(cfg.output_dir) / "config.json", serialize_experiment_config(cfg));

  std::vector<SeedOutputs> results(static_cast<std::size_t>(cfg.n_seeds));
  run_pool(cfg.n_seeds, worker_count(cfg.n_seeds),
           [&](int k) { results[static_cast<std::size_t>(k)] = run_one_seed(cfg, k, hash); });

  int failures = 0;
  std::ostringstream records;
  records << "seed,config_hash,final_performance,temporal_average,stability_kalman,stability_ema,"
             "stability_dema,stability_midpoint,edges_used_mean,messages_per_selection,"
             "saved_fraction_mean\n";
  for (int k = 0; k < cfg.n_seeds; ++k) {
    const SeedOutputs& r = results[static_cast<std::size_t>(k)];
    if (!r.ok) {
      ++failures;
      log << "seed " << k << " failed: " << r.error << "\n";
      continue;
    }
    write_file(fs::path(cfg.output_dir) / ("curve_seed" + std::to_string(k) + ".csv"),
               r.curve_csv);
    write_file(fs::path(cfg.output_dir) / ("tables_seed" + std::to_string(k) + ".txt"),
               r.tables_txt);
    records << r.record_row;
  }
  write_file(fs::path(cfg.output_dir) / "records.csv", records.str());

  // Across-seed aggregate on the shared evaluation grid.
  std::ostringstream agg;
  agg << "env_steps,eval_return_median,eval_return_p25,eval_return_p75\n";
  std::size_t n_points = 0;
  for (const SeedOutputs& r : results)
    if (r.ok) n_points = std::max(n_points, r.curve.points.size());
  for (std::size_t p = 0; p < n_points; ++p) {
    std::vector<double> med;
    long long steps = 0;
    for (const SeedOutputs& r : results) {
      if (!r.ok || p >= r.curve.points.size()) continue;
      med.push_back(r.curve.points[p].eval_return_median);
      steps = r.curve.points[p].env_steps;
    }
    if (med.empty()) continue;
    agg << steps << "," << format_double(percentile(med, 50.0)) << ","
        << format_double(percentile(med, 25.0)) << "," << format_double(percentile(med, 75.0))
        << "\n";
  }
  write_file(fs::path(cfg.output_dir) / "aggregate.csv", agg.str());

  log << "wrote " << (cfg.n_seeds - failures) << "/" << cfg.n_seeds << " seeds to "
      << cfg.output_dir << "\n";
  return failures;
}

namespace {

struct SweepRow {
  int seed = 0;
  double lambda = 0.0;
  std::string order;
  EvalStats stats;
  int edges = 0;
  long long messages = 0;
};

}  // namespace

int sweep_sparsity(const ExperimentConfig& cfg, const SweepOptions& opts, std::ostream& log) {
  if (opts.lambdas.empty()) throw std::invalid_argument("sweep needs at least one lambda");
  std::vector<double> lambdas = opts.lambdas;
  std::sort(lambdas.begin(), lambdas.end());
  for (double l : lambdas)
    if (l < 0.0 || l > 1.0) throw std::invalid_argument("lambda must be in [0,1]");

  fs::create_directories(cfg.output_dir);
  std::vector<std::vector<SweepRow>> per_seed(static_cast<std::size_t>(cfg.n_seeds));
  std::vector<std::string> errors(static_cast<std::size_t>(cfg.n_seeds));

  run_pool(cfg.n_seeds, worker_count(cfg.n_seeds), [&](int k) {
    try {
      TrainConfig tc = cfg.train;
      tc.seed = cfg.train.seed + static_cast<std::uint64_t>(k);
      auto env = make_env(cfg.env);
      Learner learner(env->n_agents(), env->n_actions(), tc);

      const fs::path ckpt = fs::path(cfg.output_dir) / ("tables_seed" + std::to_string(k) + ".txt");
      if (fs::exists(ckpt)) {
        std::ifstream in(ckpt);
        learner.tables() = ValueTables::load(in);
        learner.sync_target();
      } else if (opts.train_if_missing) {
        train(*env, tc, learner);
        learner.sync_target();
      } else {
        throw std::runtime_error("missing checkpoint " + ckpt.string() +
                                 " (training disabled)");
      }

      for (double lambda : lambdas) {
        TopologyCriterion crit;
        crit.kind = opts.score_kind;
        crit.lambda = lambda;
        const int n_orders = opts.include_ascending ? 2 : 1;
        for (int o = 0; o < n_orders; ++o) {
          SweepRow row;
          row.seed = k;
          row.lambda = lambda;
          row.order = o == 0 ? "desc" : "asc";
          // Same eval seeds for both orders: paired comparison on identical
          // episodes. Fixed payoff weighting so lambda only adds or removes
          // terms instead of re-weighting the survivors.
          row.stats = evaluate_policy(*env, learner.tables(), learner.target(), tc, crit, o == 1,
                                      opts.episodes, tc.seed, 9000, true);
          row.edges = edge_budget(env->n_agents(), lambda);
          row.messages = static_cast<long long>(tc.maxsum_iterations) * 2 * (2LL * row.edges);
          per_seed[static_cast<std::size_t>(k)].push_back(std::move(row));
        }
      }
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(k)] = e.what();
    }
  });

  int failures = 0;
  for (int k = 0; k < cfg.n_seeds; ++k)
    if (!errors[static_cast<std::size_t>(k)].empty()) {
      ++failures;
      log << "sweep seed " << k << " failed: " << errors[static_cast<std::size_t>(k)] << "\n";
    }

  std::ostringstream out;
  out << "seed,lambda,order,eval_return_median,eval_return_p25,eval_return_p75,edges,"
         "messages_per_selection,edges_used_mean\n";
  for (const auto& rows : per_seed)
    for (const SweepRow& r : rows)
      out << r.seed << "," << format_double(r.lambda) << "," << r.order << ","
          << format_double(r.stats.return_median) << "," << format_double(r.stats.return_p25)
          << "," << format_double(r.stats.return_p75) << "," << r.edges << "," << r.messages
          << "," << format_double(r.stats.edges_used_mean) << "\n";
  write_file(fs::path(cfg.output_dir) / "sweep.csv", out.str());

  std::ostringstream agg;
  agg << "lambda,order,eval_return_median,eval_return_p25,eval_return_p75\n";
  for (double lambda : lambdas) {
    for (const char* order_cstr : {"desc", "asc"}) {
      const std::string order = order_cstr;
      if (order == "asc" && !opts.include_ascending) continue;
      std::vector<double> med;
      for (const auto& rows : per_seed)
        for (const SweepRow& r : rows)
          if (r.lambda == lambda && r.order == order) med.push_back(r.stats.return_median);
      if (med.empty()) continue;
      agg << format_double(lambda) << "," << order << "," << format_double(percentile(med, 50.0))
          << "," << format_double(percentile(med, 25.0)) << ","
          << format_double(percentile(med, 75.0)) << "\n";
    }
  }
  write_file(fs::path(cfg.output_dir) / "sweep_aggregate.csv", agg.str());
  return failures;
}

int run_prop1(const EdgeRemovalConfig& cfg, const std::string& output_dir, std::ostream& log) {
  const EdgeRemovalReport report = edge_removal_experiment(cfg);
  fs::create_directories(output_dir);

  std::ostringstream rows;
  rows << "instance,edge_a,edge_b,score,changed_i,changed_j,unchanged,bound\n";
  for (const EdgeRemovalRow& r : report.rows)
    rows << r.instance << "," << r.edge.a << "," << r.edge.b << "," << format_double(r.score)
         << "," << (r.changed_i ? 1 : 0) << "," << (r.changed_j ? 1 : 0) << ","
         << ((!r.changed_i && !r.changed_j) ? 1 : 0) << "," << format_double(r.bound) << "\n";
  write_file(fs::path(output_dir) / "prop1_edges.csv", rows.str());

  std::ostringstream bins;
  bins << "bin,score_lo,score_hi,count,unchanged_freq,ci_lo,ci_hi,max_bound,positive_bounds\n";
  for (std::size_t b = 0; b < report.bins.size(); ++b) {
    const EdgeRemovalBin& bin = report.bins[b];
    bins << b << "," << format_double(bin.score_lo) << "," << format_double(bin.score_hi) << ","
         << bin.count << "," << format_double(bin.unchanged_freq) << ","
         << format_double(bin.ci_lo) << "," << format_double(bin.ci_hi) << ","
         << format_double(bin.max_bound) << "," << bin.positive_bounds << "\n";
  }
  write_file(fs::path(output_dir) / "prop1_bins.csv", bins.str());

  log << "prop1: " << report.rows.size() << " edge removals, " << report.bins.size()
      << " bins -> " << output_dir << "\n";
  return 0;
}

int eval_checkpoint(const ExperimentConfig& cfg, const std::string& checkpoint_path, int episodes,
                    std::ostream& log) {
  std::ifstream in(checkpoint_path);
  if (!in) throw std::runtime_error("cannot open checkpoint '" + checkpoint_path + "'");
  const ValueTables tables = ValueTables::load(in);
  auto env = make_env(cfg.env);
  if (tables.n_agents() != env->n_agents() || tables.n_actions() != env->n_actions())
    throw std::invalid_argument("checkpoint does not match the configured environment");

  const EvalStats stats = evaluate_policy(*env, tables, tables, cfg.train, cfg.train.criterion,
                                          false, episodes, cfg.train.seed, 777);
  fs::create_directories(cfg.output_dir);

  // Topology dump for the first evaluation state, for eyeballing graphs.
  {
    KeyEncoder enc(*env, cfg.train.history_len, cfg.train.anonymous_keys);
    enc.reset(env->reset(Rng::derive(cfg.train.seed, 2, 777, 0)));
    const CoordinationGraph g = policy_topology(tables, enc.keys(), cfg.train.criterion);
    write_file(fs::path(cfg.output_dir) / "topology_sample.txt", to_edge_list(g));
  }
  std::ostringstream out;
  out << "episodes,eval_return_median,eval_return_p25,eval_return_p75,edges_used_mean,"
         "messages_per_selection";
  std::vector<std::string> aux_keys;
  for (const auto& [k, v] : stats.aux) aux_keys.push_back(k);
  for (const auto& k : aux_keys) out << ",aux_" << k;
  out << "\n";
  out << episodes << "," << format_double(stats.return_median) << ","
      << format_double(stats.return_p25) << "," << format_double(stats.return_p75) << ","
      << format_double(stats.edges_used_mean) << ","
      << format_double(stats.messages_per_selection);
  for (const auto& k : aux_keys) out << "," << format_double(stats.aux.at(k));
  out << "\n";
  write_file(fs::path(cfg.output_dir) / "eval.csv", out.str());
  log << "eval: median return " << stats.return_median << " over " << episodes << " episodes\n";
  return 0;
}

}  // namespace coordq
