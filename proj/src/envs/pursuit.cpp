#include <algorithm>

#include "env_internal.hpp"

namespace coordq::envs {

namespace {

struct Cell {
  int x = 0;
  int y = 0;
};

int cheb(const Cell& a, const Cell& b) {
  return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y));
}

// Predators hunt random-walking prey. Actions 0..4 move
// {up, down, left, right, stay}; action 5+p is catch(prey p). A prey with at
// least two catchers in its Moore-1 neighborhood is captured: the prey and
// the two lowest-id catchers leave the map (exactly two, keeping removed
// agents = 2 x captures). A prey with exactly one catcher punishes the team.
class PursuitEnv final : public EnvBase {
 public:
  explicit PursuitEnv(const PursuitConfig& cfg) : cfg_(cfg) {
    if (cfg.width < 2 || cfg.height < 2) throw std::invalid_argument("bad pursuit grid");
    if (cfg.n_predators < 1 || cfg.n_prey < 1) throw std::invalid_argument("bad pursuit counts");
    if (cfg.n_predators + cfg.n_prey > cfg.width * cfg.height)
      throw std::invalid_argument("pursuit grid too small for entities");
    name_ = "pursuit";
    n_agents_ = cfg.n_predators;
    n_actions_ = 5 + cfg.n_prey;
    horizon_ = cfg.horizon;

    std::vector<int> radices = {2};
    if (cfg.observe_position) {
      radices.push_back(cfg.width);
      radices.push_back(cfg.height);
    }
    const int rel = 2 * cfg.sight + 1;
    for (int p = 0; p < cfg.n_prey; ++p) {
      radices.push_back(2);
      radices.push_back(rel);
      radices.push_back(rel);
    }
    if (cfg.observe_others) {
      for (int o = 0; o < cfg.n_predators - 1; ++o) {
        radices.push_back(2);
        radices.push_back(rel);
        radices.push_back(rel);
      }
    }
    radices_.assign(static_cast<std::size_t>(n_agents_), radices);
  }

  std::vector<Obs> reset(std::uint64_t seed) override {
    rng_ = Rng(seed);
    t_ = 0;
    pred_.assign(static_cast<std::size_t>(cfg_.n_predators), Cell{});
    pred_alive_.assign(static_cast<std::size_t>(cfg_.n_predators), true);
    prey_.assign(static_cast<std::size_t>(cfg_.n_prey), Cell{});
    prey_alive_.assign(static_cast<std::size_t>(cfg_.n_prey), true);

    std::vector<bool> used(static_cast<std::size_t>(cfg_.width * cfg_.height), false);
    auto place = [&]() {
      while (true) {
        const int x = rng_.uniform_int(0, cfg_.width - 1);
        const int y = rng_.uniform_int(0, cfg_.height - 1);
        if (!used[static_cast<std::size_t>(y * cfg_.width + x)]) {
          used[static_cast<std::size_t>(y * cfg_.width + x)] = true;
          return Cell{x, y};
        }
      }
    };
    for (auto& c : pred_) c = place();
    for (auto& c : prey_) c = place();
    return observe();
  }

  StepResult step(const JointAction& a) override {
    check_actions(a);
    StepResult res;
    int captures = 0, lone = 0, invalid = 0;

    // Resolve catches on pre-move positions.
    std::vector<std::vector<int>> catchers(static_cast<std::size_t>(cfg_.n_prey));
    std::vector<bool> tried_catch(static_cast<std::size_t>(cfg_.n_predators), false);
    for (int i = 0; i < cfg_.n_predators; ++i) {
      if (!pred_alive_[static_cast<std::size_t>(i)] || a[i] < 5) continue;
      tried_catch[static_cast<std::size_t>(i)] = true;
      const int p = a[i] - 5;
      if (!prey_alive_[static_cast<std::size_t>(p)] || !sees(i, prey_[static_cast<std::size_t>(p)])) {
        ++invalid;  // catch on a non-observable prey acts as stay
        continue;
      }
      if (cheb(pred_[static_cast<std::size_t>(i)], prey_[static_cast<std::size_t>(p)]) <= 1)
        catchers[static_cast<std::size_t>(p)].push_back(i);
    }
    for (int p = 0; p < cfg_.n_prey; ++p) {
      if (!prey_alive_[static_cast<std::size_t>(p)]) continue;
      const auto& who = catchers[static_cast<std::size_t>(p)];
      if (who.size() >= 2) {
        ++captures;
        res.reward += cfg_.capture_reward;
        prey_alive_[static_cast<std::size_t>(p)] = false;
        pred_alive_[static_cast<std::size_t>(who[0])] = false;
        pred_alive_[static_cast<std::size_t>(who[1])] = false;
      } else if (who.size() == 1) {
        ++lone;
        res.reward -= cfg_.lone_penalty;
      }
    }

    // Movement for surviving predators that did not attempt a catch.
    for (int i = 0; i < cfg_.n_predators; ++i) {
      if (!pred_alive_[static_cast<std::size_t>(i)] || tried_catch[static_cast<std::size_t>(i)])
        continue;
      pred_[static_cast<std::size_t>(i)] = moved(pred_[static_cast<std::size_t>(i)], a[i]);
    }

    // Prey random walk, uniform over stay + 4 moves, blocked at walls.
    for (int p = 0; p < cfg_.n_prey; ++p) {
      if (!prey_alive_[static_cast<std::size_t>(p)]) continue;
      const int d = rng_.uniform_int(0, 4);
      prey_[static_cast<std::size_t>(p)] = moved(prey_[static_cast<std::size_t>(p)], d);
    }

    ++t_;
    const bool any_prey =
        std::any_of(prey_alive_.begin(), prey_alive_.end(), [](bool b) { return b; });
    res.terminal = t_ >= horizon_ || !any_prey;
    res.observations = observe();
    res.info["prey_captured"] = captures;
    res.info["lone_catches"] = lone;
    res.info["invalid_catches"] = invalid;
    return res;
  }

 private:
  Cell moved(const Cell& c, int action) const {
    // 0 up, 1 down, 2 left, 3 right, 4 stay; blocked moves keep the cell
    Cell next = c;
    switch (action) {
      case 0: next.y -= 1; break;
      case 1: next.y += 1; break;
      case 2: next.x -= 1; break;
      case 3: next.x += 1; break;
      default: break;
    }
    if (next.x < 0 || next.x >= cfg_.width || next.y < 0 || next.y >= cfg_.height) return c;
    return next;
  }

  bool sees(int pred, const Cell& target) const {
    return cheb(pred_[static_cast<std::size_t>(pred)], target) <= cfg_.sight;
  }

  std::vector<Obs> observe() const {
    std::vector<Obs> obs(static_cast<std::size_t>(n_agents_));
    for (int i = 0; i < n_agents_; ++i) {
      Obs& o = obs[static_cast<std::size_t>(i)];
      const bool alive = pred_alive_[static_cast<std::size_t>(i)];
      const Cell& me = pred_[static_cast<std::size_t>(i)];
      o.push_back(alive ? 1 : 0);
      if (cfg_.observe_position) {
        o.push_back(alive ? me.x : 0);
        o.push_back(alive ? me.y : 0);
      }
      auto push_rel = [&](const Cell& c, bool visible) {
        if (alive && visible && cheb(me, c) <= cfg_.sight) {
          o.push_back(1);
          o.push_back(c.x - me.x + cfg_.sight);
          o.push_back(c.y - me.y + cfg_.sight);
        } else {
          o.push_back(0);
          o.push_back(0);
          o.push_back(0);
        }
      };
      for (int p = 0; p < cfg_.n_prey; ++p)
        push_rel(prey_[static_cast<std::size_t>(p)], prey_alive_[static_cast<std::size_t>(p)]);
      if (cfg_.observe_others) {
        for (int j = 0; j < cfg_.n_predators; ++j) {
          if (j == i) continue;
          push_rel(pred_[static_cast<std::size_t>(j)], pred_alive_[static_cast<std::size_t>(j)]);
        }
      }
    }
    return obs;
  }

  PursuitConfig cfg_;
  std::vector<Cell> pred_, prey_;
  std::vector<bool> pred_alive_, prey_alive_;
};

}  // namespace

std::unique_ptr<Env> make_pursuit(const PursuitConfig& cfg) {
  return std::make_unique<PursuitEnv>(cfg);
}

}  // namespace coordq::envs
