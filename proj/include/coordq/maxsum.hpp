#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "coordq/graph.hpp"
#include "coordq/types.hpp"

namespace coordq {

// Per-link message vectors. Slots are aligned with FactorGraph adjacency:
// agent_to_factor[i][s] is the message from agent i to agent_factors[i][s],
// factor_to_agent[f][s] the message from factor f to factors[f].agents[s].
struct MessageState {
  std::vector<std::vector<Vec>> agent_to_factor;
  std::vector<std::vector<Vec>> factor_to_agent;
  int iteration = 0;

  const Vec& to_factor(const FactorGraph& fg, int agent, int factor) const {
    return agent_to_factor[static_cast<std::size_t>(agent)]
                          [static_cast<std::size_t>(fg.factor_slot(agent, factor))];
  }
  const Vec& to_agent(const FactorGraph& fg, int factor, int agent) const {
    return factor_to_agent[static_cast<std::size_t>(factor)]
                          [static_cast<std::size_t>(fg.agent_slot(factor, agent))];
  }
};

struct MaxSumOptions {
  int iterations = 5;
  bool normalize = true;  // mean-subtract agent-to-factor messages
  bool anytime = true;    // return the best-scored extraction across rounds
  // Weight unary tables by 1/|V| and pairwise tables by 1/|E| so message
  // passing optimizes the same objective evaluate_q_tot scores.
  bool scale_by_counts = true;
};

struct MaxSumResult {
  JointAction action;
  MessageState messages;  // final iteration
  double value = 0.0;     // score of `action` under the solver's objective
};

// Synchronous (flooding) Max-Sum. utilities[i] has one entry per action of
// agent i; payoffs is aligned with the graph's edge order and payoffs[e] is
// |A_a| x |A_b| for edge (a, b). Argmax ties break toward the lowest index.
MaxSumResult run_max_sum(const FactorGraph& fg, const std::vector<Vec>& utilities,
                         const std::vector<Mat>& payoffs, const MaxSumOptions& opt = {});

// Mean of utilities plus mean of active-edge payoffs; the pairwise term is 0
// for an edgeless graph.
double evaluate_q_tot(const CoordinationGraph& g, const std::vector<Vec>& utilities,
                      const std::vector<Mat>& payoffs, const JointAction& a);

// Brute-force maximizer of evaluate_q_tot. Ties break lexicographically.
// Throws CapacityError when the joint space exceeds enumeration_cap.
std::pair<JointAction, double> exact_joint_argmax(const CoordinationGraph& g,
                                                  const std::vector<Vec>& utilities,
                                                  const std::vector<Mat>& payoffs,
                                                  std::int64_t enumeration_cap = 10'000'000);

// Lowest-index argmax, the tie-break used everywhere (solver, oracle, greedy).
int argmax_lowest(const Vec& v);

}  // namespace coordq
