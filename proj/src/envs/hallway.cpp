#include <algorithm>
#include <numeric>

#include "env_internal.hpp"

namespace coordq::envs {

namespace {

// One chain per agent, goal g at position 0. Actions: 0 = toward the goal,
// 1 = away, 2 = stay. A group scores +1 only when all of its members stand
// on g in the same step; if several groups would fully arrive together they
// are all held in place and the team pays -0.5 per clashing group; an agent
// reaching g ahead of its groupmates forfeits the whole group.
class HallwayEnv final : public EnvBase {
 public:
  explicit HallwayEnv(const HallwayConfig& cfg) : cfg_(cfg) {
    if (cfg.group_sizes.empty()) throw std::invalid_argument("hallway needs groups");
    for (int s : cfg.group_sizes)
      if (s < 1) throw std::invalid_argument("hallway group sizes must be positive");
    n_agents_ = std::accumulate(cfg.group_sizes.begin(), cfg.group_sizes.end(), 0);
    name_ = "hallway";
    n_actions_ = 3;

    lengths_ = cfg.chain_lengths;
    if (lengths_.empty()) {
      Rng layout(Rng::derive(cfg.layout_seed, 0x68616c6cULL));
      lengths_.resize(static_cast<std::size_t>(n_agents_));
      for (int i = 0; i < n_agents_; ++i)
        lengths_[static_cast<std::size_t>(i)] = layout.uniform_int(cfg.min_length, cfg.max_length);
    }
    if (static_cast<int>(lengths_.size()) != n_agents_)
      throw std::invalid_argument("hallway needs one chain per agent");
    for (int l : lengths_)
      if (l < 1) throw std::invalid_argument("hallway chain lengths must be positive");

    const int max_len = *std::max_element(lengths_.begin(), lengths_.end());
    horizon_ = cfg.horizon > 0 ? cfg.horizon : max_len + 10;

    group_of_.resize(static_cast<std::size_t>(n_agents_));
    int agent = 0;
    for (std::size_t g = 0; g < cfg.group_sizes.size(); ++g)
      for (int k = 0; k < cfg.group_sizes[g]; ++k) group_of_[static_cast<std::size_t>(agent++)] = static_cast<int>(g);

    radices_.resize(static_cast<std::size_t>(n_agents_));
    for (int i = 0; i < n_agents_; ++i)
      radices_[static_cast<std::size_t>(i)] = {2, lengths_[static_cast<std::size_t>(i)] + 1};
  }

  std::vector<Obs> reset(std::uint64_t seed) override {
    rng_ = Rng(seed);
    t_ = 0;
    pos_.resize(static_cast<std::size_t>(n_agents_));
    alive_.assign(static_cast<std::size_t>(n_agents_), true);
    for (int i = 0; i < n_agents_; ++i)
      pos_[static_cast<std::size_t>(i)] = rng_.uniform_int(1, lengths_[static_cast<std::size_t>(i)]);
    return observe();
  }

  StepResult step(const JointAction& a) override {
    check_actions(a);
    StepResult res;
    const int n_groups = static_cast<int>(cfg_.group_sizes.size());

    std::vector<int> next(pos_);
    for (int i = 0; i < n_agents_; ++i) {
      if (!alive_[static_cast<std::size_t>(i)]) continue;
      if (a[i] == 0) next[static_cast<std::size_t>(i)] = std::max(0, pos_[static_cast<std::size_t>(i)] - 1);
      else if (a[i] == 1)
        next[static_cast<std::size_t>(i)] =
            std::min(lengths_[static_cast<std::size_t>(i)], pos_[static_cast<std::size_t>(i)] + 1);
    }

    // Groups whose members would all stand on the goal after this move.
    std::vector<bool> full(static_cast<std::size_t>(n_groups), false);
    int n_full = 0;
    for (int g = 0; g < n_groups; ++g) {
      if (!group_alive(g)) continue;
      bool all_there = true;
      for (int i = 0; i < n_agents_; ++i)
        if (group_of_[static_cast<std::size_t>(i)] == g && next[static_cast<std::size_t>(i)] != 0)
          all_there = false;
      if (all_there) {
        full[static_cast<std::size_t>(g)] = true;
        ++n_full;
      }
    }

    int groups_won = 0;
    if (n_full > 1) {
      // Clash: arriving groups are held in place, everyone else moves.
      for (int i = 0; i < n_agents_; ++i)
        if (!full[static_cast<std::size_t>(group_of_[static_cast<std::size_t>(i)])])
          pos_[static_cast<std::size_t>(i)] = next[static_cast<std::size_t>(i)];
      res.reward -= 0.5 * n_full;
    } else {
      pos_ = next;
      if (n_full == 1) {
        res.reward += 1.0;
        groups_won = 1;
        for (int i = 0; i < n_agents_; ++i)
          if (full[static_cast<std::size_t>(group_of_[static_cast<std::size_t>(i)])])
            alive_[static_cast<std::size_t>(i)] = false;
      }
    }

    // Early arrivals forfeit their group with no reward.
    for (int g = 0; g < n_groups; ++g) {
      if (!group_alive(g)) continue;
      bool any_at_goal = false;
      for (int i = 0; i < n_agents_; ++i)
        if (group_of_[static_cast<std::size_t>(i)] == g && alive_[static_cast<std::size_t>(i)] &&
            pos_[static_cast<std::size_t>(i)] == 0)
          any_at_goal = true;
      if (any_at_goal)
        for (int i = 0; i < n_agents_; ++i)
          if (group_of_[static_cast<std::size_t>(i)] == g) alive_[static_cast<std::size_t>(i)] = false;
    }

    ++t_;
    const bool anyone = std::any_of(alive_.begin(), alive_.end(), [](bool b) { return b; });
    res.terminal = t_ >= horizon_ || !anyone;
    res.observations = observe();
    res.info["groups_won"] = groups_won;
    res.info["clashes"] = n_full > 1 ? n_full : 0;
    return res;
  }

 private:
  bool group_alive(int g) const {
    for (int i = 0; i < n_agents_; ++i)
      if (group_of_[static_cast<std::size_t>(i)] == g && alive_[static_cast<std::size_t>(i)])
        return true;
    return false;
  }

  std::vector<Obs> observe() const {
    std::vector<Obs> obs(static_cast<std::size_t>(n_agents_));
    for (int i = 0; i < n_agents_; ++i)
      obs[static_cast<std::size_t>(i)] = {alive_[static_cast<std::size_t>(i)] ? 1 : 0,
                                          pos_[static_cast<std::size_t>(i)]};
    return obs;
  }

  HallwayConfig cfg_;
  std::vector<int> lengths_;
  std::vector<int> group_of_;
  std::vector<int> pos_;
  std::vector<bool> alive_;
};

}  // namespace

std::unique_ptr<Env> make_hallway(const HallwayConfig& cfg) {
  return std::make_unique<HallwayEnv>(cfg);
}

}  // namespace coordq::envs
