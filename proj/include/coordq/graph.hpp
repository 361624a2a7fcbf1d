#pragma once

#include <compare>
#include <string>
#include <vector>

#include "coordq/types.hpp"

namespace coordq {

// Undirected agent pair, canonical order a < b.
struct Edge {
  int a = 0;
  int b = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Canonicalizes the pair; throws on self-loops.
Edge make_edge(int i, int j);

// Agent vertices plus a set of undirected coordination edges. Immutable
// after construction; edges are kept sorted lexicographically so iteration
// order (and every schedule built from it) is reproducible.
class CoordinationGraph {
 public:
  CoordinationGraph() = default;
  explicit CoordinationGraph(int n_agents) : CoordinationGraph(n_agents, {}) {}
  CoordinationGraph(int n_agents, std::vector<Edge> edges);

  int n_agents() const { return n_agents_; }
  const std::vector<Edge>& edges() const { return edges_; }
  int n_edges() const { return static_cast<int>(edges_.size()); }
  int max_edges() const { return n_agents_ * (n_agents_ - 1) / 2; }
  bool has_edge(int i, int j) const;

  friend bool operator==(const CoordinationGraph&, const CoordinationGraph&) = default;

 private:
  int n_agents_ = 0;
  std::vector<Edge> edges_;  // sorted, unique, canonical
};

CoordinationGraph build_complete_graph(int n_agents);

// True iff the undirected edge set contains no cycle.
bool is_acyclic(const CoordinationGraph& g);

// Bipartite agent/factor structure Max-Sum iterates over. Node ordering is
// deterministic: agents ascending; unary factors first (agent order), then
// one pairwise factor per edge in lexicographic edge order.
struct FactorGraph {
  struct Factor {
    int agents[2] = {0, 0};  // adjacent agent ids; arity 1 uses agents[0]
    int arity = 1;
    int edge_index = -1;  // index into the source graph's edge list, -1 for unary
  };

  int n_agents = 0;
  std::vector<Factor> factors;
  std::vector<std::vector<int>> agent_factors;  // factor ids adjacent to each agent, ascending

  int n_factors() const { return static_cast<int>(factors.size()); }
  // Slot of `agent` within factor f's agent list (0 or 1).
  int agent_slot(int factor, int agent) const;
  // Slot of `factor` within agent_factors[agent].
  int factor_slot(int agent, int factor) const;
};

FactorGraph to_factor_graph(const CoordinationGraph& g);

// Plain text edge list: header "n=<n_agents>", then one "i j" line per edge.
std::string to_edge_list(const CoordinationGraph& g);
CoordinationGraph parse_edge_list(const std::string& text);

}  // namespace coordq
