#include "env_internal.hpp"

namespace coordq::envs {

namespace {

// Islands on a rows x cols grid, each with a message backlog. Actions:
// 0 = idle, 1 = send. A send collides iff any 4-neighbor sends in the same
// step; collisions leave the backlog untouched and are charged per sender.
class AlohaEnv final : public EnvBase {
 public:
  explicit AlohaEnv(const AlohaConfig& cfg) : cfg_(cfg) {
    if (cfg.rows < 1 || cfg.cols < 1) throw std::invalid_argument("bad aloha grid");
    if (cfg.max_backlog < cfg.start_backlog || cfg.start_backlog < 0)
      throw std::invalid_argument("bad aloha backlog settings");
    name_ = "aloha";
    n_agents_ = cfg.rows * cfg.cols;
    n_actions_ = 2;
    horizon_ = cfg.horizon;
    radices_.assign(static_cast<std::size_t>(n_agents_), {n_agents_, cfg.max_backlog + 1});
    backlog_.assign(static_cast<std::size_t>(n_agents_), 0);
  }

  std::vector<Obs> reset(std::uint64_t seed) override {
    rng_ = Rng(seed);
    t_ = 0;
    backlog_.assign(static_cast<std::size_t>(n_agents_), cfg_.start_backlog);
    return observe();
  }

  StepResult step(const JointAction& a) override {
    check_actions(a);
    StepResult res;

    std::vector<bool> sends(static_cast<std::size_t>(n_agents_));
    for (int i = 0; i < n_agents_; ++i)
      sends[static_cast<std::size_t>(i)] = a[i] == 1 && backlog_[static_cast<std::size_t>(i)] > 0;

    int successes = 0;
    int collisions = 0;
    for (int i = 0; i < n_agents_; ++i) {
      if (!sends[static_cast<std::size_t>(i)]) continue;
      if (neighbor_sends(sends, i)) {
        ++collisions;  // message stays in the backlog
      } else {
        ++successes;
        --backlog_[static_cast<std::size_t>(i)];
      }
    }
    res.reward = cfg_.success_reward * successes - cfg_.collision_penalty * collisions;

    for (int i = 0; i < n_agents_; ++i) {
      const double u = rng_.uniform01();
      if (backlog_[static_cast<std::size_t>(i)] < cfg_.max_backlog && u < cfg_.arrival_prob)
        ++backlog_[static_cast<std::size_t>(i)];
    }

    ++t_;
    res.terminal = t_ >= horizon_;
    res.observations = observe();
    res.info["successes"] = successes;
    res.info["collisions"] = collisions;
    return res;
  }

 private:
  bool neighbor_sends(const std::vector<bool>& sends, int i) const {
    const int r = i / cfg_.cols;
    const int c = i % cfg_.cols;
    constexpr int dr[4] = {-1, 1, 0, 0};
    constexpr int dc[4] = {0, 0, -1, 1};
    for (int d = 0; d < 4; ++d) {
      const int nr = r + dr[d];
      const int nc = c + dc[d];
      if (nr < 0 || nr >= cfg_.rows || nc < 0 || nc >= cfg_.cols) continue;
      if (sends[static_cast<std::size_t>(nr * cfg_.cols + nc)]) return true;
    }
    return false;
  }

  std::vector<Obs> observe() const {
    std::vector<Obs> obs(static_cast<std::size_t>(n_agents_));
    for (int i = 0; i < n_agents_; ++i)
      obs[static_cast<std::size_t>(i)] = {i, backlog_[static_cast<std::size_t>(i)]};
    return obs;
  }

  AlohaConfig cfg_;
  std::vector<int> backlog_;
};

}  // namespace

std::unique_ptr<Env> make_aloha(const AlohaConfig& cfg) {
  return std::make_unique<AlohaEnv>(cfg);
}

}  // namespace coordq::envs
