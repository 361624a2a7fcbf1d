#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace coordq {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Mixed-radix observation code. 128 bits so the full Pursuit observation
// space still encodes injectively (a 64-bit code would wrap).
using ObsCode = unsigned __int128;

struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One action index per agent.
struct JointAction {
  std::vector<int> actions;

  JointAction() = default;
  explicit JointAction(std::vector<int> a) : actions(std::move(a)) {}

  int size() const { return static_cast<int>(actions.size()); }
  int operator[](int i) const { return actions[static_cast<std::size_t>(i)]; }
  int& operator[](int i) { return actions[static_cast<std::size_t>(i)]; }

  friend bool operator==(const JointAction&, const JointAction&) = default;
};

inline std::uint64_t obscode_lo(ObsCode c) {
  return static_cast<std::uint64_t>(c);
}
inline std::uint64_t obscode_hi(ObsCode c) {
  return static_cast<std::uint64_t>(c >> 64);
}

}  // namespace coordq
