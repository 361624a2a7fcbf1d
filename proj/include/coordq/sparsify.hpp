#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coordq/graph.hpp"
#include "coordq/values.hpp"

namespace coordq {

enum class CriterionKind { qvar, delta_max, delta_var, random, full, none };

std::string to_string(CriterionKind kind);
CriterionKind criterion_from_string(const std::string& s);

struct TopologyCriterion {
  CriterionKind kind = CriterionKind::qvar;
  double lambda = 0.5;        // fraction of the complete graph's edges
  std::uint64_t rng_seed = 0;  // random kind only

  friend bool operator==(const TopologyCriterion&, const TopologyCriterion&) = default;
};

// round(lambda * n(n-1)/2) with ties to even, clamped to [0, n(n-1)/2].
int edge_budget(int n, double lambda);

struct ScoredEdge {
  Edge edge;
  double score = 0.0;
};

// Every unordered pair with its symmetrized score max(score_ij, score_ji),
// sorted descending, ties in lexicographic edge order. Valid for the scored
// kinds (qvar, delta_max, delta_var).
std::vector<ScoredEdge> rank_edges(const ValueTables& tables, const std::vector<ObsKey>& keys,
                                   CriterionKind kind);

// Context-aware topology for one joint observation. Callers pass the target
// table snapshot; the budget is edge_budget(n, lambda) for the scored and
// random kinds.
CoordinationGraph select_topology(const ValueTables& tables, const std::vector<ObsKey>& keys,
                                  const TopologyCriterion& crit);

// Topology from a prefix of `ranked` (lowest_first takes the suffix instead,
// i.e. edges join in ascending score order). Used by sparsity sweeps.
CoordinationGraph topology_from_ranked(int n_agents, const std::vector<ScoredEdge>& ranked,
                                       int budget, bool lowest_first = false);

}  // namespace coordq
