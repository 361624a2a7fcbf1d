#include "coordq/values.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace coordq {

namespace {

std::string code_to_hex(ObsCode c) {
  char buf[33];
  std::snprintf(buf, sizeof(buf), "%016llx%016llx",
                static_cast<unsigned long long>(obscode_hi(c)),
                static_cast<unsigned long long>(obscode_lo(c)));
  return buf;
}

ObsCode code_from_hex(const std::string& s) {
  if (s.size() != 32) throw std::invalid_argument("bad observation code");
  const std::uint64_t hi = std::stoull(s.substr(0, 16), nullptr, 16);
  const std::uint64_t lo = std::stoull(s.substr(16, 16), nullptr, 16);
  return (static_cast<ObsCode>(hi) << 64) | static_cast<ObsCode>(lo);
}

std::string double_to_hex(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

bool obskey_less(const ObsKey& a, const ObsKey& b) {
  if (a.agent != b.agent) return a.agent < b.agent;
  return a.code < b.code;
}

}  // namespace

ValueTables::ValueTables(int n_agents, int n_actions, std::size_t entry_cap)
    : n_agents_(n_agents), n_actions_(n_actions), entry_cap_(entry_cap) {
  if (n_agents < 1 || n_actions < 1)
    throw std::invalid_argument("tables need at least one agent and one action");
}

bool operator==(const ValueTables& a, const ValueTables& b) {
  if (a.n_agents_ != b.n_agents_ || a.n_actions_ != b.n_actions_ ||
      a.entry_cap_ != b.entry_cap_ || a.cells_ != b.cells_)
    return false;
  if (a.utility_.size() != b.utility_.size() || a.payoff_.size() != b.payoff_.size())
    return false;
  for (const auto& [k, v] : a.utility_) {
    const auto it = b.utility_.find(k);
    if (it == b.utility_.end() || !(v.array() == it->second.array()).all()) return false;
  }
  for (const auto& [k, m] : a.payoff_) {
    const auto it = b.payoff_.find(k);
    if (it == b.payoff_.end() || !(m.array() == it->second.array()).all()) return false;
  }
  return true;
}

PairRef make_pair_ref(const ObsKey& ki, const ObsKey& kj, bool& flipped) {
  // Canonical order is (agent, code) lexicographic. Anonymous keys share one
  // agent id, so code breaks the tie; fully identical keys keep the caller's
  // orientation.
  if (ki.agent != kj.agent) {
    flipped = ki.agent > kj.agent;
  } else if (ki.code != kj.code) {
    flipped = ki.code > kj.code;
  } else {
    flipped = false;
  }
  return flipped ? PairRef{kj, ki} : PairRef{ki, kj};
}

PairRef ValueTables::canonical(const ObsKey& ki, const ObsKey& kj, bool& flipped) {
  return make_pair_ref(ki, kj, flipped);
}

Vec& ValueTables::utility_ref(const ObsKey& k) {
  const auto it = utility_.find(k);
  if (it != utility_.end()) return it->second;
  if (cells_ + static_cast<std::size_t>(n_actions_) > entry_cap_)
    throw CapacityError("value table entry cap exceeded");
  cells_ += static_cast<std::size_t>(n_actions_);
  return utility_.emplace(k, Vec::Zero(n_actions_)).first->second;
}

Mat& ValueTables::payoff_ref(const PairRef& ref) {
  const auto it = payoff_.find(ref);
  if (it != payoff_.end()) return it->second;
  const std::size_t cells = static_cast<std::size_t>(n_actions_) * static_cast<std::size_t>(n_actions_);
  if (cells_ + cells > entry_cap_) throw CapacityError("value table entry cap exceeded");
  cells_ += cells;
  return payoff_.emplace(ref, Mat::Zero(n_actions_, n_actions_)).first->second;
}

double ValueTables::utility(const ObsKey& k, int action) const {
  const auto it = utility_.find(k);
  return it == utility_.end() ? 0.0 : it->second[action];
}

double ValueTables::payoff(const ObsKey& ki, const ObsKey& kj, int ai, int aj) const {
  bool flipped = false;
  const PairRef ref = canonical(ki, kj, flipped);
  const auto it = payoff_.find(ref);
  if (it == payoff_.end()) return 0.0;
  return flipped ? it->second(aj, ai) : it->second(ai, aj);
}

void ValueTables::add_utility(const ObsKey& k, int action, double delta) {
  utility_ref(k)[action] += delta;
}

void ValueTables::set_utility(const ObsKey& k, int action, double value) {
  utility_ref(k)[action] = value;
}

void ValueTables::add_payoff(const ObsKey& ki, const ObsKey& kj, int ai, int aj, double delta) {
  bool flipped = false;
  Mat& m = payoff_ref(canonical(ki, kj, flipped));
  if (flipped)
    m(aj, ai) += delta;
  else
    m(ai, aj) += delta;
}

void ValueTables::set_payoff(const ObsKey& ki, const ObsKey& kj, int ai, int aj, double value) {
  bool flipped = false;
  Mat& m = payoff_ref(canonical(ki, kj, flipped));
  if (flipped)
    m(aj, ai) = value;
  else
    m(ai, aj) = value;
}

void ValueTables::add_utility_slice(const ObsKey& k, const Vec& delta) {
  utility_ref(k) += delta;
}

void ValueTables::add_payoff_slice(const ObsKey& ki, const ObsKey& kj, const Mat& delta) {
  bool flipped = false;
  Mat& m = payoff_ref(canonical(ki, kj, flipped));
  if (flipped)
    m += delta.transpose();
  else
    m += delta;
}

Vec ValueTables::utility_slice(const ObsKey& k) const {
  const auto it = utility_.find(k);
  return it == utility_.end() ? Vec::Zero(n_actions_) : it->second;
}

Mat ValueTables::payoff_slice(const ObsKey& ki, const ObsKey& kj) const {
  bool flipped = false;
  const PairRef ref = canonical(ki, kj, flipped);
  const auto it = payoff_.find(ref);
  if (it == payoff_.end()) return Mat::Zero(n_actions_, n_actions_);
  return flipped ? Mat(it->second.transpose()) : it->second;
}

void ValueTables::save(std::ostream& out) const {
  out << "coordq-tables v1\n";
  out << n_agents_ << " " << n_actions_ << " " << entry_cap_ << "\n";

  std::vector<ObsKey> ukeys;
  ukeys.reserve(utility_.size());
  for (const auto& [k, v] : utility_) ukeys.push_back(k);
  std::sort(ukeys.begin(), ukeys.end(), obskey_less);
  for (const ObsKey& k : ukeys) {
    const Vec& v = utility_.at(k);
    for (int a = 0; a < n_actions_; ++a)
      out << "u " << k.agent << " " << code_to_hex(k.code) << " " << a << " "
          << double_to_hex(v[a]) << "\n";
  }

  std::vector<PairRef> pkeys;
  pkeys.reserve(payoff_.size());
  for (const auto& [k, m] : payoff_) pkeys.push_back(k);
  std::sort(pkeys.begin(), pkeys.end(), [](const PairRef& a, const PairRef& b) {
    if (!(a.ki == b.ki)) return obskey_less(a.ki, b.ki);
    return obskey_less(a.kj, b.kj);
  });
  for (const PairRef& k : pkeys) {
    const Mat& m = payoff_.at(k);
    for (int ai = 0; ai < n_actions_; ++ai)
      for (int aj = 0; aj < n_actions_; ++aj)
        out << "p " << k.ki.agent << " " << code_to_hex(k.ki.code) << " " << k.kj.agent << " "
            << code_to_hex(k.kj.code) << " " << ai << " " << aj << " "
            << double_to_hex(m(ai, aj)) << "\n";
  }
}

ValueTables ValueTables::load(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header != "coordq-tables v1")
    throw std::invalid_argument("unrecognized table checkpoint header");
  int n_agents = 0, n_actions = 0;
  std::size_t cap = 0;
  in >> n_agents >> n_actions >> cap;
  ValueTables t(n_agents, n_actions, cap);
  std::string tag;
  while (in >> tag) {
    if (tag == "u") {
      int agent = 0, action = 0;
      std::string code, value;
      in >> agent >> code >> action >> value;
      t.set_utility(ObsKey{agent, code_from_hex(code)}, action,
                    std::strtod(value.c_str(), nullptr));
    } else if (tag == "p") {
      int ai = 0, aj = 0, act_i = 0, act_j = 0;
      std::string ci, cj, value;
      in >> ai >> ci >> aj >> cj >> act_i >> act_j >> value;
      t.set_payoff(ObsKey{ai, code_from_hex(ci)}, ObsKey{aj, code_from_hex(cj)}, act_i, act_j,
                   std::strtod(value.c_str(), nullptr));
    } else {
      throw std::invalid_argument("unrecognized checkpoint record '" + tag + "'");
    }
  }
  return t;
}

double max_row_variance(const Eigen::Ref<const Mat>& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  double best = 0.0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double mean = m.row(r).mean();
    const double var = (m.row(r).array() - mean).square().sum() / static_cast<double>(m.cols());
    if (var > best) best = var;
  }
  return best;
}

Mat utility_difference(const ValueTables& t, const ObsKey& ki, const ObsKey& kj) {
  Mat d = t.payoff_slice(ki, kj);
  const Vec ui = t.utility_slice(ki);
  const Vec uj = t.utility_slice(kj);
  d.colwise() -= ui;
  d.rowwise() -= uj.transpose();
  return d;
}

double score_payoff_variance(const ValueTables& t, const ObsKey& ki, const ObsKey& kj) {
  return max_row_variance(t.payoff_slice(ki, kj));
}

double score_delta_max(const ValueTables& t, const ObsKey& ki, const ObsKey& kj) {
  return utility_difference(t, ki, kj).array().abs().maxCoeff();
}

double score_delta_variance(const ValueTables& t, const ObsKey& ki, const ObsKey& kj) {
  return max_row_variance(utility_difference(t, ki, kj));
}

namespace {

struct PairTerms {
  // Loss contributions of the two ordered orientations of one unordered pair
  // (already divided by the per-pair action normalizer).
  double loss = 0.0;
  Mat payoff_grad;  // d loss_pair / d payoff entry, same orientation as the slice
  Vec util_i_grad;
  Vec util_j_grad;
};

// payoff may be null (unallocated slice reads as zero); ui/uj likewise.
PairTerms pair_terms(SparseLossVariant variant, const Mat* payoff, const Vec* ui, const Vec* uj,
                     int A) {
  const double a = static_cast<double>(A);
  PairTerms out;
  out.util_i_grad = Vec::Zero(A);
  out.util_j_grad = Vec::Zero(A);
  const Mat m = payoff ? *payoff : Mat::Zero(A, A);

  if (variant == SparseLossVariant::qvar) {
    const Vec row_mean = m.rowwise().mean();
    const Vec col_mean = m.colwise().mean().transpose();
    const Mat row_dev = m.colwise() - row_mean;
    const Mat col_dev = m.rowwise() - col_mean.transpose();
    out.loss = (row_dev.array().square().sum() + col_dev.array().square().sum()) / (a * a);
    out.payoff_grad = (2.0 / (a * a)) * (row_dev + col_dev);
    return out;
  }

  Mat d = m;
  if (ui) d.colwise() -= *ui;
  if (uj) d.rowwise() -= uj->transpose();
  if (variant == SparseLossVariant::abs_delta) {
    const Mat s = d.array().sign().matrix();
    out.loss = 2.0 * d.array().abs().sum() / (a * a);
    out.payoff_grad = (2.0 / (a * a)) * s;
    out.util_i_grad = -(2.0 / (a * a)) * s.rowwise().sum();
    out.util_j_grad = -(2.0 / (a * a)) * s.colwise().sum().transpose();
    return out;
  }

  // delta_var
  const Vec row_mean = d.rowwise().mean();
  const Vec col_mean = d.colwise().mean().transpose();
  const Mat row_dev = d.colwise() - row_mean;
  const Mat col_dev = d.rowwise() - col_mean.transpose();
  out.loss = (row_dev.array().square().sum() + col_dev.array().square().sum()) / (a * a);
  const Mat g = (2.0 / (a * a)) * (row_dev + col_dev);
  out.payoff_grad = g;
  out.util_i_grad = -g.rowwise().sum();
  out.util_j_grad = -g.colwise().sum().transpose();
  return out;
}

double pair_normalizer(int n_agents, std::size_t batch) {
  return 1.0 / (static_cast<double>(n_agents) * (n_agents - 1) * static_cast<double>(batch));
}

// Shared engine: batches repeat key pairs heavily, so per-pair statistics are
// computed once per distinct pair and weighted by multiplicity.
SparseLossResult sparse_engine(const ValueTables& t, SparseLossVariant variant,
                               const std::vector<std::vector<ObsKey>>& key_batch, bool want_grad) {
  if (key_batch.empty()) throw std::invalid_argument("sparse loss needs a non-empty batch");
  const int n = t.n_agents();
  SparseLossResult out;
  if (n < 2) return out;

  const bool need_utils = variant != SparseLossVariant::qvar;
  std::unordered_map<PairRef, long long, PairRefHash> counts;
  std::unordered_map<ObsKey, const Vec*, ObsKeyHash> util_cache;  // null = unallocated
  for (const auto& keys : key_batch) {
    if (static_cast<int>(keys.size()) != n)
      throw std::invalid_argument("key set must cover all agents");
    for (int i = 0; i < n; ++i) {
      const ObsKey& ki = keys[static_cast<std::size_t>(i)];
      if (need_utils && !util_cache.contains(ki)) {
        const auto uit = t.utility_slices().find(ki);
        util_cache.emplace(ki, uit == t.utility_slices().end() ? nullptr : &uit->second);
      }
      for (int j = i + 1; j < n; ++j) {
        bool flipped = false;
        ++counts[make_pair_ref(ki, keys[static_cast<std::size_t>(j)], flipped)];
      }
    }
  }

  const double norm = pair_normalizer(n, key_batch.size());
  for (const auto& [pair, count] : counts) {
    const auto pit = t.payoff_slices().find(pair);
    const Mat* slice = pit == t.payoff_slices().end() ? nullptr : &pit->second;
    const Vec* ui = need_utils ? util_cache.at(pair.ki) : nullptr;
    const Vec* uj = need_utils ? util_cache.at(pair.kj) : nullptr;
    const PairTerms terms = pair_terms(variant, slice, ui, uj, t.n_actions());
    out.loss += static_cast<double>(count) * terms.loss;
    if (!want_grad) continue;
    const double w = norm * static_cast<double>(count);
    // Only allocated slices materialize gradient; all-zero grads are dropped.
    if (slice && !terms.payoff_grad.isZero(0.0)) {
      auto [it, fresh] = out.grad.payoff.try_emplace(pair, Mat::Zero(t.n_actions(), t.n_actions()));
      it->second += w * terms.payoff_grad;
    }
    if (ui && !terms.util_i_grad.isZero(0.0)) {
      auto [it, fresh] = out.grad.utility.try_emplace(pair.ki, Vec::Zero(t.n_actions()));
      it->second += w * terms.util_i_grad;
    }
    if (uj && !terms.util_j_grad.isZero(0.0)) {
      auto [it, fresh] = out.grad.utility.try_emplace(pair.kj, Vec::Zero(t.n_actions()));
      it->second += w * terms.util_j_grad;
    }
  }
  out.loss *= norm;
  return out;
}

}  // namespace

SparseLossResult sparse_loss_with_grad(const ValueTables& t, SparseLossVariant variant,
                                       const std::vector<std::vector<ObsKey>>& key_batch) {
  return sparse_engine(t, variant, key_batch, true);
}

double sparse_loss(const ValueTables& t, SparseLossVariant variant,
                   const std::vector<std::vector<ObsKey>>& key_batch) {
  return sparse_engine(t, variant, key_batch, false).loss;
}

TableGradient sparse_loss_grad(const ValueTables& t, SparseLossVariant variant,
                               const std::vector<std::vector<ObsKey>>& key_batch) {
  return sparse_engine(t, variant, key_batch, true).grad;
}

void apply_gradient(ValueTables& t, const TableGradient& g, double scale) {
  for (const auto& [k, v] : g.utility) t.add_utility_slice(k, scale * v);
  for (const auto& [k, m] : g.payoff) t.add_payoff_slice(k.ki, k.kj, scale * m);
}

double q_tot(const ValueTables& t, const CoordinationGraph& g, const std::vector<ObsKey>& keys,
             const JointAction& a, bool all_pairs) {
  const int n = g.n_agents();
  if (static_cast<int>(keys.size()) != n || a.size() != n)
    throw std::invalid_argument("keys and action must cover all agents");
  double util = 0.0;
  for (int i = 0; i < n; ++i) util += t.utility(keys[static_cast<std::size_t>(i)], a[i]);
  double total = util / n;

  if (all_pairs) {
    if (n > 1) {
      double pay = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          pay += t.payoff(keys[static_cast<std::size_t>(i)], keys[static_cast<std::size_t>(j)],
                          a[i], a[j]);
      total += 2.0 * pay / (static_cast<double>(n) * (n - 1));
    }
    return total;
  }

  if (g.n_edges() > 0) {
    double pay = 0.0;
    for (const Edge& e : g.edges())
      pay += t.payoff(keys[static_cast<std::size_t>(e.a)], keys[static_cast<std::size_t>(e.b)],
                      a[e.a], a[e.b]);
    total += pay / g.n_edges();
  }
  return total;
}

double edge_removal_stability_bound(const StabilityBoundInputs& in) {
  if (in.n_actions < 1) throw std::invalid_argument("n_actions must be positive");
  if (in.message.size() < 1) throw std::invalid_argument("empty message vector");
  if (!in.message.allFinite() || !std::isfinite(in.score) || !std::isfinite(in.gap_bound))
    throw std::invalid_argument("bound inputs must be finite");
  if (in.score < 0.0 || in.gap_bound < 0.0)
    throw std::invalid_argument("score and gap bound must be non-negative");

  const double mbar = in.message.mean();
  const double lo = in.message.minCoeff();
  const double hi = in.message.maxCoeff();
  const double a2 = in.gap_bound * in.gap_bound;
  const double root = in.score + 2.0 * a2 + 2.0 * std::sqrt(a2 * (a2 + in.score));
  const double denom = root * root;
  if (denom == 0.0) throw NumericFailure("zero denominator in stability bound");
  return (2.0 / in.n_actions) * ((mbar - lo) * (hi - mbar) / denom - 1.0);
}

}  // namespace coordq
