#include "env_internal.hpp"

namespace coordq::envs {

namespace {

// Each step one hospital announces a need for the next step; agents pick a
// hospital to work at. Short-staffing the selected hospital costs the team
// the shortfall. Agents see their current hospital and its announced need.
class DisperseEnv final : public EnvBase {
 public:
  explicit DisperseEnv(const DisperseConfig& cfg) : cfg_(cfg) {
    if (cfg.n_agents < 1 || cfg.n_hospitals < 1)
      throw std::invalid_argument("bad disperse settings");
    name_ = "disperse";
    n_agents_ = cfg.n_agents;
    n_actions_ = cfg.n_hospitals;
    horizon_ = cfg.horizon;
    radices_.assign(static_cast<std::size_t>(n_agents_), {cfg.n_hospitals, cfg.n_agents + 1});
  }

  std::vector<Obs> reset(std::uint64_t seed) override {
    rng_ = Rng(seed);
    t_ = 0;
    loc_.resize(static_cast<std::size_t>(n_agents_));
    for (int i = 0; i < n_agents_; ++i) loc_[static_cast<std::size_t>(i)] = rng_.uniform_int(0, cfg_.n_hospitals - 1);
    sample_need();
    return observe();
  }

  StepResult step(const JointAction& a) override {
    check_actions(a);
    StepResult res;
    for (int i = 0; i < n_agents_; ++i) loc_[static_cast<std::size_t>(i)] = a[i];

    int present = 0;
    for (int l : loc_)
      if (l == need_hospital_) ++present;
    const double shortfall = present < need_ ? static_cast<double>(present - need_) : 0.0;
    res.reward = shortfall;
    res.info["shortfall"] = shortfall;
    res.info["satisfied"] = present >= need_ ? 1 : 0;

    sample_need();
    ++t_;
    res.terminal = t_ >= horizon_;
    res.observations = observe();
    return res;
  }

 private:
  void sample_need() {
    need_hospital_ = rng_.uniform_int(0, cfg_.n_hospitals - 1);
    need_ = rng_.uniform_int(1, n_agents_);
  }

  std::vector<Obs> observe() const {
    std::vector<Obs> obs(static_cast<std::size_t>(n_agents_));
    for (int i = 0; i < n_agents_; ++i) {
      const int at = loc_[static_cast<std::size_t>(i)];
      obs[static_cast<std::size_t>(i)] = {at, at == need_hospital_ ? need_ : 0};
    }
    return obs;
  }

  DisperseConfig cfg_;
  std::vector<int> loc_;
  int need_hospital_ = 0;
  int need_ = 0;
};

}  // namespace

std::unique_ptr<Env> make_disperse(const DisperseConfig& cfg) {
  return std::make_unique<DisperseEnv>(cfg);
}

}  // namespace coordq::envs

namespace coordq {

std::unique_ptr<Env> make_env(const EnvConfig& cfg) {
  if (cfg.name == "aloha") return envs::make_aloha(cfg.aloha);
  if (cfg.name == "pursuit") return envs::make_pursuit(cfg.pursuit);
  if (cfg.name == "hallway") return envs::make_hallway(cfg.hallway);
  if (cfg.name == "sensor") return envs::make_sensor(cfg.sensor);
  if (cfg.name == "gather") return envs::make_gather(cfg.gather);
  if (cfg.name == "disperse") return envs::make_disperse(cfg.disperse);
  throw std::invalid_argument("unknown environment '" + cfg.name + "'");
}

}  // namespace coordq
