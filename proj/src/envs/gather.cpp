#include "env_internal.hpp"

namespace coordq::envs {

namespace {

// Temporally extended climb game: agents navigate to one of three goal
// cells; one goal is secretly optimal per episode and only agents spawning
// near it know which. The episode scores once, when every agent stands on a
// goal cell or the horizon runs out.
class GatherEnv final : public EnvBase {
 public:
  explicit GatherEnv(const GatherConfig& cfg) : cfg_(cfg) {
    if (cfg.width < 3 || cfg.height < 3) throw std::invalid_argument("bad gather grid");
    if (cfg.n_agents < 1) throw std::invalid_argument("gather needs agents");
    if (cfg.width * cfg.height < cfg.n_agents + 3)
      throw std::invalid_argument("gather grid too small");
    name_ = "gather";
    n_agents_ = cfg.n_agents;
    n_actions_ = 5;
    horizon_ = cfg.horizon;
    gx_ = {0, cfg.width - 1, 0};
    gy_ = {0, 0, cfg.height - 1};
    radices_.assign(static_cast<std::size_t>(n_agents_), {cfg.width, cfg.height, 4});
  }

  std::vector<Obs> reset(std::uint64_t seed) override {
    rng_ = Rng(seed);
    t_ = 0;
    done_ = false;
    optimal_ = rng_.uniform_int(0, 2);
    x_.assign(static_cast<std::size_t>(n_agents_), 0);
    y_.assign(static_cast<std::size_t>(n_agents_), 0);
    knows_.assign(static_cast<std::size_t>(n_agents_), false);
    for (int i = 0; i < n_agents_; ++i) {
      while (true) {
        const int x = rng_.uniform_int(0, cfg_.width - 1);
        const int y = rng_.uniform_int(0, cfg_.height - 1);
        if (goal_at(x, y) >= 0) continue;  // keep spawns off the goals
        x_[static_cast<std::size_t>(i)] = x;
        y_[static_cast<std::size_t>(i)] = y;
        break;
      }
      const int dx = std::abs(x_[static_cast<std::size_t>(i)] - gx_[static_cast<std::size_t>(optimal_)]);
      const int dy = std::abs(y_[static_cast<std::size_t>(i)] - gy_[static_cast<std::size_t>(optimal_)]);
      knows_[static_cast<std::size_t>(i)] = std::max(dx, dy) <= cfg_.knowledge_radius;
    }
    return observe();
  }

  StepResult step(const JointAction& a) override {
    check_actions(a);
    if (done_) throw std::invalid_argument("episode already terminal");
    StepResult res;

    for (int i = 0; i < n_agents_; ++i) {
      int x = x_[static_cast<std::size_t>(i)];
      int y = y_[static_cast<std::size_t>(i)];
      switch (a[i]) {
        case 0: y -= 1; break;
        case 1: y += 1; break;
        case 2: x -= 1; break;
        case 3: x += 1; break;
        default: break;
      }
      if (x >= 0 && x < cfg_.width && y >= 0 && y < cfg_.height) {
        x_[static_cast<std::size_t>(i)] = x;
        y_[static_cast<std::size_t>(i)] = y;
      }
    }

    ++t_;
    int on_optimal = 0;
    bool all_on_goals = true;
    std::vector<int> per_goal(3, 0);
    for (int i = 0; i < n_agents_; ++i) {
      const int g = goal_at(x_[static_cast<std::size_t>(i)], y_[static_cast<std::size_t>(i)]);
      if (g < 0) all_on_goals = false;
      else {
        ++per_goal[static_cast<std::size_t>(g)];
        if (g == optimal_) ++on_optimal;
      }
    }

    bool evaluated = false;
    if (all_on_goals || t_ >= horizon_) {
      evaluated = true;
      if (on_optimal == n_agents_) res.reward = cfg_.optimal_reward;
      else if (same_suboptimal_goal(per_goal)) res.reward = cfg_.suboptimal_reward;
      else if (on_optimal > 0) res.reward = -cfg_.partial_penalty;
      else res.reward = 0.0;
    }

    done_ = evaluated;
    res.terminal = done_;
    res.observations = observe();
    res.info["agents_on_optimal"] = on_optimal;
    res.info["evaluated"] = evaluated ? 1 : 0;
    return res;
  }

 private:
  int goal_at(int x, int y) const {
    for (int g = 0; g < 3; ++g)
      if (gx_[static_cast<std::size_t>(g)] == x && gy_[static_cast<std::size_t>(g)] == y) return g;
    return -1;
  }

  bool same_suboptimal_goal(const std::vector<int>& per_goal) const {
    for (int g = 0; g < 3; ++g)
      if (g != optimal_ && per_goal[static_cast<std::size_t>(g)] == n_agents_) return true;
    return false;
  }

  std::vector<Obs> observe() const {
    std::vector<Obs> obs(static_cast<std::size_t>(n_agents_));
    for (int i = 0; i < n_agents_; ++i)
      obs[static_cast<std::size_t>(i)] = {x_[static_cast<std::size_t>(i)],
                                          y_[static_cast<std::size_t>(i)],
                                          knows_[static_cast<std::size_t>(i)] ? optimal_ + 1 : 0};
    return obs;
  }

  GatherConfig cfg_;
  std::vector<int> gx_, gy_;
  int optimal_ = 0;
  bool done_ = false;
  std::vector<int> x_, y_;
  std::vector<bool> knows_;
};

}  // namespace

std::unique_ptr<Env> make_gather(const GatherConfig& cfg) {
  return std::make_unique<GatherEnv>(cfg);
}

}  // namespace coordq::envs
