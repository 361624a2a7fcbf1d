#include "coordq/maxsum.hpp"

#include <cmath>

namespace coordq {

int argmax_lowest(const Vec& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

namespace {

void check_instance(const FactorGraph& fg, const std::vector<Vec>& utilities,
                    const std::vector<Mat>& payoffs) {
  if (static_cast<int>(utilities.size()) != fg.n_agents)
    throw std::invalid_argument("one utility vector per agent required");
  for (const Vec& u : utilities)
    if (u.size() < 1) throw std::invalid_argument("empty action set");
  for (const FactorGraph::Factor& f : fg.factors) {
    if (f.arity != 2) continue;
    if (f.edge_index < 0 || f.edge_index >= static_cast<int>(payoffs.size()))
      throw std::invalid_argument("missing payoff for an edge");
    const Mat& p = payoffs[static_cast<std::size_t>(f.edge_index)];
    if (p.rows() != utilities[static_cast<std::size_t>(f.agents[0])].size() ||
        p.cols() != utilities[static_cast<std::size_t>(f.agents[1])].size())
      throw std::invalid_argument("payoff matrix shape mismatch");
  }
}

// Joint value under the (possibly scaled) factor tables the solver works on.
double factor_value(const FactorGraph& fg, const std::vector<Vec>& unary,
                    const std::vector<Mat>& pairwise, const JointAction& a) {
  double v = 0.0;
  for (int i = 0; i < fg.n_agents; ++i) v += unary[static_cast<std::size_t>(i)][a[i]];
  for (const FactorGraph::Factor& f : fg.factors)
    if (f.arity == 2)
      v += pairwise[static_cast<std::size_t>(f.edge_index)](a[f.agents[0]], a[f.agents[1]]);
  return v;
}

JointAction extract(const FactorGraph& fg, const std::vector<Vec>& unary,
                    const MessageState& st) {
  JointAction a;
  a.actions.resize(static_cast<std::size_t>(fg.n_agents));
  for (int i = 0; i < fg.n_agents; ++i) {
    Vec belief = Vec::Zero(unary[static_cast<std::size_t>(i)].size());
    const auto& adj = fg.agent_factors[static_cast<std::size_t>(i)];
    for (std::size_t s = 0; s < adj.size(); ++s) {
      const int f = adj[s];
      belief += st.factor_to_agent[static_cast<std::size_t>(f)]
                                  [static_cast<std::size_t>(fg.agent_slot(f, i))];
    }
    a[i] = argmax_lowest(belief);
  }
  return a;
}

}  // namespace

MaxSumResult run_max_sum(const FactorGraph& fg, const std::vector<Vec>& utilities,
                         const std::vector<Mat>& payoffs, const MaxSumOptions& opt) {
  if (opt.iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  check_instance(fg, utilities, payoffs);

  int n_edges = 0;
  for (const FactorGraph::Factor& f : fg.factors)
    if (f.arity == 2) ++n_edges;

  // Scaled working tables; with scale_by_counts the flooding objective is
  // exactly evaluate_q_tot on the caller's tables.
  const double uw = opt.scale_by_counts ? 1.0 / fg.n_agents : 1.0;
  const double pw = opt.scale_by_counts && n_edges > 0 ? 1.0 / n_edges : 1.0;
  std::vector<Vec> unary(utilities.size());
  for (std::size_t i = 0; i < utilities.size(); ++i) unary[i] = uw * utilities[i];
  std::vector<Mat> pairwise(payoffs.size());
  for (std::size_t e = 0; e < payoffs.size(); ++e) pairwise[e] = pw * payoffs[e];

  MessageState cur;
  cur.agent_to_factor.resize(static_cast<std::size_t>(fg.n_agents));
  for (int i = 0; i < fg.n_agents; ++i) {
    const auto n_adj = fg.agent_factors[static_cast<std::size_t>(i)].size();
    cur.agent_to_factor[static_cast<std::size_t>(i)].assign(
        n_adj, Vec::Zero(unary[static_cast<std::size_t>(i)].size()));
  }
  cur.factor_to_agent.resize(static_cast<std::size_t>(fg.n_factors()));
  for (int f = 0; f < fg.n_factors(); ++f) {
    const FactorGraph::Factor& fac = fg.factors[static_cast<std::size_t>(f)];
    auto& out = cur.factor_to_agent[static_cast<std::size_t>(f)];
    if (fac.arity == 1) {
      // Unary messages never depend on incoming messages; seed them with the
      // utilities so the iteration-0 extraction is the utility-only argmax.
      out.assign(1, unary[static_cast<std::size_t>(fac.agents[0])]);
    } else {
      out.resize(2);
      out[0] = Vec::Zero(unary[static_cast<std::size_t>(fac.agents[0])].size());
      out[1] = Vec::Zero(unary[static_cast<std::size_t>(fac.agents[1])].size());
    }
  }

  JointAction best_action = extract(fg, unary, cur);
  double best_value = factor_value(fg, unary, pairwise, best_action);

  MessageState next = cur;
  for (int it = 1; it <= opt.iterations; ++it) {
    // Agent -> factor, all from the previous round's snapshot.
    for (int i = 0; i < fg.n_agents; ++i) {
      const auto& adj = fg.agent_factors[static_cast<std::size_t>(i)];
      Vec total = Vec::Zero(unary[static_cast<std::size_t>(i)].size());
      for (std::size_t s = 0; s < adj.size(); ++s) {
        const int f = adj[s];
        total += cur.factor_to_agent[static_cast<std::size_t>(f)]
                                    [static_cast<std::size_t>(fg.agent_slot(f, i))];
      }
      for (std::size_t s = 0; s < adj.size(); ++s) {
        const int f = adj[s];
        Vec m = total - cur.factor_to_agent[static_cast<std::size_t>(f)]
                                           [static_cast<std::size_t>(fg.agent_slot(f, i))];
        if (opt.normalize) m.array() -= m.mean();
        next.agent_to_factor[static_cast<std::size_t>(i)][s] = std::move(m);
      }
    }
    // Factor -> agent.
    for (int f = 0; f < fg.n_factors(); ++f) {
      const FactorGraph::Factor& fac = fg.factors[static_cast<std::size_t>(f)];
      if (fac.arity == 1) continue;  // constant, already seeded
      const Mat& p = pairwise[static_cast<std::size_t>(fac.edge_index)];
      const Vec& from_a = cur.to_factor(fg, fac.agents[0], f);
      const Vec& from_b = cur.to_factor(fg, fac.agents[1], f);
      auto& out = next.factor_to_agent[static_cast<std::size_t>(f)];
      out[0] = (p.rowwise() + from_b.transpose()).rowwise().maxCoeff();
      out[1] = (p.colwise() + from_a).colwise().maxCoeff().transpose();
    }
    next.iteration = it;
    std::swap(cur, next);

    for (const auto& per_agent : cur.agent_to_factor)
      for (const Vec& m : per_agent)
        if (!m.allFinite()) throw NumericFailure("non-finite max-sum message");
    for (const auto& per_factor : cur.factor_to_agent)
      for (const Vec& m : per_factor)
        if (!m.allFinite()) throw NumericFailure("non-finite max-sum message");

    if (opt.anytime) {
      JointAction a = extract(fg, unary, cur);
      const double v = factor_value(fg, unary, pairwise, a);
      if (v > best_value) {
        best_value = v;
        best_action = std::move(a);
      }
    }
  }

  MaxSumResult res;
  if (opt.anytime) {
    res.action = std::move(best_action);
    res.value = best_value;
  } else {
    res.action = extract(fg, unary, cur);
    res.value = factor_value(fg, unary, pairwise, res.action);
  }
  res.messages = std::move(cur);
  return res;
}

double evaluate_q_tot(const CoordinationGraph& g, const std::vector<Vec>& utilities,
                      const std::vector<Mat>& payoffs, const JointAction& a) {
  double util = 0.0;
  for (int i = 0; i < g.n_agents(); ++i) util += utilities[static_cast<std::size_t>(i)][a[i]];
  double total = util / g.n_agents();
  if (g.n_edges() > 0) {
    double pay = 0.0;
    for (int e = 0; e < g.n_edges(); ++e) {
      const Edge& edge = g.edges()[static_cast<std::size_t>(e)];
      pay += payoffs[static_cast<std::size_t>(e)](a[edge.a], a[edge.b]);
    }
    total += pay / g.n_edges();
  }
  return total;
}

std::pair<JointAction, double> exact_joint_argmax(const CoordinationGraph& g,
                                                  const std::vector<Vec>& utilities,
                                                  const std::vector<Mat>& payoffs,
                                                  std::int64_t enumeration_cap) {
  unsigned __int128 space = 1;
  for (const Vec& u : utilities) {
    space *= static_cast<unsigned __int128>(u.size());
    if (space > static_cast<unsigned __int128>(enumeration_cap))
      throw CapacityError("joint action space exceeds enumeration cap");
  }

  JointAction a;
  a.actions.assign(static_cast<std::size_t>(g.n_agents()), 0);
  JointAction best = a;
  double best_value = evaluate_q_tot(g, utilities, payoffs, a);
  // Odometer in lexicographic order; strict improvement keeps the earliest
  // maximizer, i.e. lexicographic tie-breaking.
  while (true) {
    int pos = g.n_agents() - 1;
    while (pos >= 0) {
      if (++a[pos] < utilities[static_cast<std::size_t>(pos)].size()) break;
      a[pos] = 0;
      --pos;
    }
    if (pos < 0) break;
    const double v = evaluate_q_tot(g, utilities, payoffs, a);
    if (v > best_value) {
      best_value = v;
      best = a;
    }
  }
  return {best, best_value};
}

}  // namespace coordq
