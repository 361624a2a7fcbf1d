#pragma once

#include "coordq/env.hpp"
#include "coordq/rng.hpp"

namespace coordq::envs {

class EnvBase : public Env {
 public:
  const std::string& name() const override { return name_; }
  int n_agents() const override { return n_agents_; }
  int n_actions() const override { return n_actions_; }
  int horizon() const override { return horizon_; }
  const std::vector<int>& obs_radices(int agent) const override {
    return radices_[static_cast<std::size_t>(agent)];
  }

 protected:
  void check_actions(const JointAction& a) const {
    if (a.size() != n_agents_) throw std::invalid_argument("joint action size mismatch");
    for (int i = 0; i < n_agents_; ++i)
      if (a[i] < 0 || a[i] >= n_actions_) throw std::invalid_argument("action index out of range");
  }

  std::string name_;
  int n_agents_ = 0;
  int n_actions_ = 0;
  int horizon_ = 0;
  std::vector<std::vector<int>> radices_;
  Rng rng_{0};
  int t_ = 0;
};

std::unique_ptr<Env> make_aloha(const AlohaConfig& cfg);
std::unique_ptr<Env> make_pursuit(const PursuitConfig& cfg);
std::unique_ptr<Env> make_hallway(const HallwayConfig& cfg);
std::unique_ptr<Env> make_sensor(const SensorConfig& cfg);
std::unique_ptr<Env> make_gather(const GatherConfig& cfg);
std::unique_ptr<Env> make_disperse(const DisperseConfig& cfg);

}  // namespace coordq::envs
