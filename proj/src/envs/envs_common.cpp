#include "coordq/env.hpp"

#include <limits>

namespace coordq {

ObsCode encode_obs(const Obs& obs, const std::vector<int>& radices) {
  if (obs.size() != radices.size())
    throw std::invalid_argument("observation length does not match declared radices");
  constexpr ObsCode kMax = ~static_cast<ObsCode>(0);
  ObsCode code = 0;
  for (std::size_t f = 0; f < obs.size(); ++f) {
    const int radix = radices[f];
    const int value = obs[f];
    if (radix < 1) throw std::invalid_argument("feature radix must be positive");
    if (value < 0 || value >= radix)
      throw std::invalid_argument("observation feature out of declared range");
    const ObsCode r = static_cast<ObsCode>(radix);
    if (code > (kMax - static_cast<ObsCode>(value)) / r)
      throw CapacityError("observation space exceeds 128-bit code");
    code = code * r + static_cast<ObsCode>(value);
  }
  return code;
}

namespace {

ObsCode space_size(const std::vector<int>& radices) {
  constexpr ObsCode kMax = ~static_cast<ObsCode>(0);
  ObsCode s = 1;
  for (int r : radices) {
    if (r < 1) throw std::invalid_argument("feature radix must be positive");
    if (s > kMax / static_cast<ObsCode>(r))
      throw CapacityError("observation space exceeds 128-bit code");
    s *= static_cast<ObsCode>(r);
  }
  return s;
}

}  // namespace

KeyEncoder::KeyEncoder(const Env& env, int history_len, bool anonymous)
    : history_len_(history_len), anonymous_(anonymous), env_(&env) {
  if (history_len < 1) throw std::invalid_argument("history length must be >= 1");
  const int n = env.n_agents();
  if (anonymous_)
    for (int i = 1; i < n; ++i)
      if (env.obs_radices(i) != env.obs_radices(0))
        throw std::invalid_argument(
            "anonymous keys need identical observation spaces across agents");
  space_.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const ObsCode s = space_size(env.obs_radices(i));
    space_[static_cast<std::size_t>(i)] = s;
    if (history_len > 1) {
      // Stacking uses base s+1 (value s marks an empty slot); verify the
      // full history code stays exactly representable.
      constexpr ObsCode kMax = ~static_cast<ObsCode>(0);
      ObsCode total = 1;
      for (int h = 0; h < history_len; ++h) {
        if (total > kMax / (s + 1))
          throw CapacityError("observation history exceeds 128-bit code");
        total *= s + 1;
      }
    }
  }
  history_.assign(static_cast<std::size_t>(n), {});
  keys_.resize(static_cast<std::size_t>(n));
}

void KeyEncoder::rebuild(int agent) {
  const std::size_t ia = static_cast<std::size_t>(agent);
  const int key_agent = anonymous_ ? 0 : agent;
  if (history_len_ == 1) {
    keys_[ia] = ObsKey{key_agent, history_[ia].back()};
    return;
  }
  const ObsCode base = space_[ia] + 1;
  ObsCode code = 0;
  const std::size_t have = history_[ia].size();
  for (int h = 0; h < history_len_; ++h) {
    const std::size_t idx = static_cast<std::size_t>(h);
    // Oldest first; missing leading slots use the empty symbol.
    if (static_cast<std::size_t>(history_len_) - idx > have)
      code = code * base + space_[ia];
    else
      code = code * base + history_[ia][have - (static_cast<std::size_t>(history_len_) - idx)];
  }
  keys_[ia] = ObsKey{key_agent, code};
}

void KeyEncoder::reset(const std::vector<Obs>& first) {
  for (int i = 0; i < env_->n_agents(); ++i) {
    const std::size_t ia = static_cast<std::size_t>(i);
    history_[ia].clear();
    history_[ia].push_back(encode_obs(first[ia], env_->obs_radices(i)));
    rebuild(i);
  }
}

void KeyEncoder::push(const std::vector<Obs>& next) {
  for (int i = 0; i < env_->n_agents(); ++i) {
    const std::size_t ia = static_cast<std::size_t>(i);
    history_[ia].push_back(encode_obs(next[ia], env_->obs_radices(i)));
    if (history_[ia].size() > static_cast<std::size_t>(history_len_))
      history_[ia].erase(history_[ia].begin());
    rebuild(i);
  }
}

}  // namespace coordq
