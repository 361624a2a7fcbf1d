#include "env_internal.hpp"

namespace coordq::envs {

namespace {

// Neighborhood directions in lexicographic (dr, dc) order; action d scans
// cell sensor + kDirs[d-1], action 0 is noop.
constexpr int kDirs[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1},
                             {0, 1},   {1, -1}, {1, 0},  {1, 1}};

// A fixed grid of sensors watching random-walking targets. Every scan costs
// scan_cost; a target scanned by k >= 2 distinct sensors in one step pays
// reward_per_scanner * k.
class SensorEnv final : public EnvBase {
 public:
  explicit SensorEnv(const SensorConfig& cfg) : cfg_(cfg) {
    if (cfg.rows < 1 || cfg.cols < 1) throw std::invalid_argument("bad sensor grid");
    if (cfg.n_targets < 1) throw std::invalid_argument("sensor needs targets");
    name_ = "sensor";
    n_agents_ = cfg.rows * cfg.cols;
    n_actions_ = 9;
    horizon_ = cfg.horizon;
    std::vector<int> radices;
    for (int p = 0; p < cfg.n_targets; ++p) {
      radices.push_back(2);
      radices.push_back(8);
    }
    radices_.assign(static_cast<std::size_t>(n_agents_), radices);
  }

  std::vector<Obs> reset(std::uint64_t seed) override {
    rng_ = Rng(seed);
    t_ = 0;
    tr_.assign(static_cast<std::size_t>(cfg_.n_targets), 0);
    tc_.assign(static_cast<std::size_t>(cfg_.n_targets), 0);
    for (int p = 0; p < cfg_.n_targets; ++p) {
      tr_[static_cast<std::size_t>(p)] = rng_.uniform_int(0, cfg_.rows - 1);
      tc_[static_cast<std::size_t>(p)] = rng_.uniform_int(0, cfg_.cols - 1);
    }
    return observe();
  }

  StepResult step(const JointAction& a) override {
    check_actions(a);
    StepResult res;

    std::vector<int> scan_count(static_cast<std::size_t>(cfg_.rows * cfg_.cols), 0);
    int scans = 0;
    for (int i = 0; i < n_agents_; ++i) {
      if (a[i] == 0) continue;
      ++scans;  // off-grid scans still cost
      const int r = i / cfg_.cols + kDirs[a[i] - 1][0];
      const int c = i % cfg_.cols + kDirs[a[i] - 1][1];
      if (r >= 0 && r < cfg_.rows && c >= 0 && c < cfg_.cols)
        ++scan_count[static_cast<std::size_t>(r * cfg_.cols + c)];
    }
    res.reward = -cfg_.scan_cost * scans;

    int hit = 0;
    for (int p = 0; p < cfg_.n_targets; ++p) {
      const int k = scan_count[static_cast<std::size_t>(
          tr_[static_cast<std::size_t>(p)] * cfg_.cols + tc_[static_cast<std::size_t>(p)])];
      if (k >= 2) {
        ++hit;
        res.reward += cfg_.reward_per_scanner * k;
      }
    }

    for (int p = 0; p < cfg_.n_targets; ++p) {
      const int d = rng_.uniform_int(0, 4);  // stay, up, down, left, right
      int r = tr_[static_cast<std::size_t>(p)];
      int c = tc_[static_cast<std::size_t>(p)];
      if (d == 1) --r;
      else if (d == 2) ++r;
      else if (d == 3) --c;
      else if (d == 4) ++c;
      if (r >= 0 && r < cfg_.rows && c >= 0 && c < cfg_.cols) {
        tr_[static_cast<std::size_t>(p)] = r;
        tc_[static_cast<std::size_t>(p)] = c;
      }
    }

    ++t_;
    res.terminal = t_ >= horizon_;
    res.observations = observe();
    res.info["targets_scanned"] = hit;
    res.info["scans"] = scans;
    return res;
  }

 private:
  std::vector<Obs> observe() const {
    std::vector<Obs> obs(static_cast<std::size_t>(n_agents_));
    for (int i = 0; i < n_agents_; ++i) {
      Obs& o = obs[static_cast<std::size_t>(i)];
      const int r = i / cfg_.cols;
      const int c = i % cfg_.cols;
      for (int p = 0; p < cfg_.n_targets; ++p) {
        int dir = -1;
        for (int d = 0; d < 8; ++d)
          if (r + kDirs[d][0] == tr_[static_cast<std::size_t>(p)] &&
              c + kDirs[d][1] == tc_[static_cast<std::size_t>(p)])
            dir = d;
        if (dir >= 0) {
          o.push_back(1);
          o.push_back(dir);
        } else {
          o.push_back(0);
          o.push_back(0);
        }
      }
    }
    return obs;
  }

  SensorConfig cfg_;
  std::vector<int> tr_, tc_;
};

}  // namespace

std::unique_ptr<Env> make_sensor(const SensorConfig& cfg) {
  return std::make_unique<SensorEnv>(cfg);
}

}  // namespace coordq::envs
