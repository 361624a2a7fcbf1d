#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "coordq/types.hpp"
#include "coordq/values.hpp"

namespace coordq {

// Discrete per-agent observation: a fixed-length feature vector whose i-th
// entry lies in [0, obs_radices(agent)[i]). That range declaration is what
// makes exact (injective) table keying possible.
using Obs = std::vector<int>;

struct StepResult {
  std::vector<Obs> observations;
  double reward = 0.0;
  bool terminal = false;
  std::map<std::string, double> info;
};

// Seeded, deterministic-given-seed simulator. One instance is single-threaded;
// reset() reinitializes everything, so an instance can be reused across
// episodes and evaluation runs.
class Env {
 public:
  virtual ~Env() = default;

  virtual const std::string& name() const = 0;
  virtual int n_agents() const = 0;
  virtual int n_actions() const = 0;
  virtual int horizon() const = 0;
  virtual const std::vector<int>& obs_radices(int agent) const = 0;

  virtual std::vector<Obs> reset(std::uint64_t seed) = 0;
  virtual StepResult step(const JointAction& actions) = 0;
};

struct AlohaConfig {
  int rows = 2;
  int cols = 5;
  int start_backlog = 1;
  int max_backlog = 5;
  double arrival_prob = 0.6;
  double success_reward = 0.1;
  double collision_penalty = 10.0;  // charged per colliding sender
  int horizon = 20;
};

struct PursuitConfig {
  int width = 10;
  int height = 10;
  int n_predators = 10;
  int n_prey = 5;
  int sight = 2;                // Chebyshev observation radius
  bool observe_position = true;  // own absolute position in the observation
  bool observe_others = true;
  double capture_reward = 1.0;
  double lone_penalty = 1.0;
  int horizon = 50;
};

struct HallwayConfig {
  std::vector<int> group_sizes = {3, 3, 3, 3};
  // One chain per agent. Empty => lengths drawn uniformly from
  // [min_length, max_length] using layout_seed (fixed per experiment).
  std::vector<int> chain_lengths = {};
  int min_length = 4;
  int max_length = 8;
  std::uint64_t layout_seed = 0;
  int horizon = 0;  // 0 => max chain length + 10
};

struct SensorConfig {
  int rows = 3;
  int cols = 5;
  int n_targets = 3;
  double scan_cost = 1.0;
  double reward_per_scanner = 1.5;  // k scanners on one target pay 1.5*k when k >= 2
  int horizon = 20;
};

struct GatherConfig {
  int width = 8;
  int height = 8;
  int n_agents = 5;
  int knowledge_radius = 2;
  double optimal_reward = 10.0;
  double suboptimal_reward = 5.0;
  double partial_penalty = 5.0;
  int horizon = 20;
};

struct DisperseConfig {
  int n_agents = 12;
  int n_hospitals = 4;
  int horizon = 20;
};

struct EnvConfig {
  std::string name = "disperse";
  AlohaConfig aloha;
  PursuitConfig pursuit;
  HallwayConfig hallway;
  SensorConfig sensor;
  GatherConfig gather;
  DisperseConfig disperse;
};

// Registry over names {aloha, pursuit, hallway, sensor, gather, disperse}.
std::unique_ptr<Env> make_env(const EnvConfig& cfg);

// Mixed-radix code of one observation; throws if a feature is out of range
// or the radix product overflows 128 bits.
ObsCode encode_obs(const Obs& obs, const std::vector<int>& radices);

// Rolling per-agent observation-history keys (last `history_len`
// observations, exact mixed-radix stacking with an empty-slot symbol).
// With anonymous = true the keys drop agent identity, so a shared table
// pools identical observations across agents; this requires every agent to
// declare the same observation space.
class KeyEncoder {
 public:
  KeyEncoder(const Env& env, int history_len, bool anonymous = false);

  void reset(const std::vector<Obs>& first);
  void push(const std::vector<Obs>& next);
  const std::vector<ObsKey>& keys() const { return keys_; }

 private:
  void rebuild(int agent);

  int history_len_ = 1;
  bool anonymous_ = false;
  std::vector<ObsCode> space_;                  // per-agent single-observation space size
  std::vector<std::vector<ObsCode>> history_;   // per agent, most recent last
  std::vector<ObsKey> keys_;
  const Env* env_;
};

}  // namespace coordq
