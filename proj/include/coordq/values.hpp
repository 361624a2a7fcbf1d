#pragma once

#include <cstdint>
#include <iosfwd>
#include <unordered_map>
#include <vector>

#include "coordq/graph.hpp"
#include "coordq/types.hpp"

namespace coordq {

// Identifies one agent's (truncated) observation history. The agent id is
// part of the key, so the shared table never aliases two agents that happen
// to see the same thing.
struct ObsKey {
  int agent = 0;
  ObsCode code = 0;

  friend bool operator==(const ObsKey&, const ObsKey&) = default;
};

namespace detail {
inline std::uint64_t mix64(std::uint64_t h, std::uint64_t v) {
  v *= 0x9e3779b97f4a7c15ULL;
  v ^= v >> 29;
  h ^= v;
  h *= 0xbf58476d1ce4e5b9ULL;
  return h ^ (h >> 32);
}
inline std::uint64_t hash_code(std::uint64_t h, ObsCode c) {
  h = mix64(h, obscode_lo(c));
  return mix64(h, obscode_hi(c));
}
}  // namespace detail

struct ObsKeyHash {
  std::size_t operator()(const ObsKey& k) const {
    return detail::hash_code(detail::mix64(0x6a09e667f3bcc908ULL,
                                           static_cast<std::uint64_t>(k.agent)),
                             k.code);
  }
};

// Unordered key pair in canonical (agent, code) lexicographic order.
struct PairRef {
  ObsKey ki;
  ObsKey kj;

  friend bool operator==(const PairRef&, const PairRef&) = default;
};

// Canonicalizes; sets flipped when the arguments arrived in reverse order.
PairRef make_pair_ref(const ObsKey& ki, const ObsKey& kj, bool& flipped);

struct PairRefHash {
  std::size_t operator()(const PairRef& p) const {
    std::uint64_t h = detail::mix64(0xbb67ae8584caa73bULL, static_cast<std::uint64_t>(p.ki.agent));
    h = detail::hash_code(h, p.ki.code);
    h = detail::mix64(h, static_cast<std::uint64_t>(p.kj.agent));
    return detail::hash_code(h, p.kj.code);
  }
};

// Storage is slice-granular (one |A| vector per observation key, one |A|x|A|
// matrix per key pair): every consumer reads whole slices, so this keeps the
// hot paths at one hash probe per slice.
using UtilityMap = std::unordered_map<ObsKey, Vec, ObsKeyHash>;
using PayoffMap = std::unordered_map<PairRef, Mat, PairRefHash>;

// Lazily allocated shared utility/payoff tables. Unseen entries read as 0;
// writes allocate their slice, and allocated cells count against entry_cap.
// Payoff slices are stored only for agent_i < agent_j; reversed queries
// transpose transparently.
class ValueTables {
 public:
  ValueTables() = default;
  ValueTables(int n_agents, int n_actions, std::size_t entry_cap = 5'000'000);

  int n_agents() const { return n_agents_; }
  int n_actions() const { return n_actions_; }
  std::size_t entry_cap() const { return entry_cap_; }
  std::size_t size() const { return cells_; }  // allocated table cells

  double utility(const ObsKey& k, int action) const;
  double payoff(const ObsKey& ki, const ObsKey& kj, int ai, int aj) const;

  void add_utility(const ObsKey& k, int action, double delta);
  void set_utility(const ObsKey& k, int action, double value);
  void add_payoff(const ObsKey& ki, const ObsKey& kj, int ai, int aj, double delta);
  void set_payoff(const ObsKey& ki, const ObsKey& kj, int ai, int aj, double value);

  // Slice-wise accumulation (allocates on demand).
  void add_utility_slice(const ObsKey& k, const Vec& delta);
  void add_payoff_slice(const ObsKey& ki, const ObsKey& kj, const Mat& delta);

  // Dense views with zero defaults. payoff_slice rows are ki's actions.
  Vec utility_slice(const ObsKey& k) const;
  Mat payoff_slice(const ObsKey& ki, const ObsKey& kj) const;

  const UtilityMap& utility_slices() const { return utility_; }
  const PayoffMap& payoff_slices() const { return payoff_; }

  // Line-oriented text checkpoint; round-trips bit-exactly (hexfloat values,
  // cells sorted canonically).
  void save(std::ostream& out) const;
  static ValueTables load(std::istream& in);

  friend bool operator==(const ValueTables& a, const ValueTables& b);

 private:
  static PairRef canonical(const ObsKey& ki, const ObsKey& kj, bool& flipped);
  Vec& utility_ref(const ObsKey& k);
  Mat& payoff_ref(const PairRef& ref);

  int n_agents_ = 0;
  int n_actions_ = 0;
  std::size_t entry_cap_ = 5'000'000;
  std::size_t cells_ = 0;
  UtilityMap utility_;
  PayoffMap payoff_;
};

// Max over rows of the population variance across columns; 0 iff every row
// is constant.
double max_row_variance(const Eigen::Ref<const Mat>& m);

// delta(ai, aj) = q_ij(ai, aj) - q_i(ai) - q_j(aj), rows = ki's actions.
Mat utility_difference(const ValueTables& t, const ObsKey& ki, const ObsKey& kj);

// Edge scores for the ordered pair (ki, kj).
double score_payoff_variance(const ValueTables& t, const ObsKey& ki, const ObsKey& kj);
double score_delta_max(const ValueTables& t, const ObsKey& ki, const ObsKey& kj);
double score_delta_variance(const ValueTables& t, const ObsKey& ki, const ObsKey& kj);

enum class SparseLossVariant { qvar, abs_delta, delta_var };

// Slice-shaped gradients, aligned with the tables' storage.
struct TableGradient {
  UtilityMap utility;
  PayoffMap payoff;
};

struct SparseLossResult {
  double loss = 0.0;
  TableGradient grad;
};

// Sparseness regularizers, averaged over ordered pairs i != j, actions, and
// batch entries (normalizers 1/(n(n-1)|A|) or 1/(n(n-1)|A|^2) per variant).
double sparse_loss(const ValueTables& t, SparseLossVariant variant,
                   const std::vector<std::vector<ObsKey>>& key_batch);

SparseLossResult sparse_loss_with_grad(const ValueTables& t, SparseLossVariant variant,
                                       const std::vector<std::vector<ObsKey>>& key_batch);

// Exact partials of sparse_loss w.r.t. the allocated slices the loss reads.
// Unallocated (zero-default) slices still shape the statistics but are not
// materialized in the gradient; all-zero gradient slices are omitted.
TableGradient sparse_loss_grad(const ValueTables& t, SparseLossVariant variant,
                               const std::vector<std::vector<ObsKey>>& key_batch);

// tables += scale * grad.
void apply_gradient(ValueTables& t, const TableGradient& g, double scale);

// Mean utility plus mean payoff over the graph's edges (0 pairwise term when
// edgeless). all_pairs = true instead averages payoffs over every ordered
// pair with weight 1/(n(n-1)), the ablation form.
double q_tot(const ValueTables& t, const CoordinationGraph& g, const std::vector<ObsKey>& keys,
             const JointAction& a, bool all_pairs = false);

// Inputs for the action-stability lower bound of a single edge removal:
// the factor-to-agent message across the edge, the payoff-variance score of
// the edge, and a bound on the payoff-plus-message gap.
struct StabilityBoundInputs {
  Vec message;
  double score = 0.0;
  double gap_bound = 0.0;
  int n_actions = 1;
};

// (2/n) * [ (mbar-min m)(max m-mbar) / (score + 2A^2 + 2*sqrt(A^2(A^2+score)))^2 - 1 ].
// May be negative (vacuous but well-defined). Throws NumericFailure when the
// denominator is zero.
double edge_removal_stability_bound(const StabilityBoundInputs& in);

}  // namespace coordq
