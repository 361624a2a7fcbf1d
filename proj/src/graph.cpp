#include "coordq/graph.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace coordq {

Edge make_edge(int i, int j) {
  if (i == j) throw std::invalid_argument("edge endpoints must differ");
  if (i < 0 || j < 0) throw std::invalid_argument("edge endpoints must be non-negative");
  return i < j ? Edge{i, j} : Edge{j, i};
}

CoordinationGraph::CoordinationGraph(int n_agents, std::vector<Edge> edges)
    : n_agents_(n_agents) {
  if (n_agents < 1) throw std::invalid_argument("graph needs at least one agent");
  edges_.reserve(edges.size());
  for (const Edge& e : edges) {
    Edge c = make_edge(e.a, e.b);
    if (c.b >= n_agents) throw std::invalid_argument("edge endpoint out of range");
    edges_.push_back(c);
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
}

bool CoordinationGraph::has_edge(int i, int j) const {
  if (i == j) return false;
  const Edge e = make_edge(i, j);
  return std::binary_search(edges_.begin(), edges_.end(), e);
}

CoordinationGraph build_complete_graph(int n_agents) {
  if (n_agents < 1) throw std::invalid_argument("n_agents must be positive");
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(n_agents) * (n_agents - 1) / 2);
  for (int i = 0; i < n_agents; ++i)
    for (int j = i + 1; j < n_agents; ++j) edges.push_back(Edge{i, j});
  return CoordinationGraph(n_agents, std::move(edges));
}

namespace {

int uf_find(std::vector<int>& parent, int x) {
  while (parent[static_cast<std::size_t>(x)] != x) {
    parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
    x = parent[static_cast<std::size_t>(x)];
  }
  return x;
}

}  // namespace

bool is_acyclic(const CoordinationGraph& g) {
  std::vector<int> parent(static_cast<std::size_t>(g.n_agents()));
  std::iota(parent.begin(), parent.end(), 0);
  for (const Edge& e : g.edges()) {
    const int ra = uf_find(parent, e.a);
    const int rb = uf_find(parent, e.b);
    if (ra == rb) return false;
    parent[static_cast<std::size_t>(ra)] = rb;
  }
  return true;
}

int FactorGraph::agent_slot(int factor, int agent) const {
  const Factor& f = factors[static_cast<std::size_t>(factor)];
  for (int s = 0; s < f.arity; ++s)
    if (f.agents[s] == agent) return s;
  throw std::invalid_argument("agent not adjacent to factor");
}

int FactorGraph::factor_slot(int agent, int factor) const {
  const auto& adj = agent_factors[static_cast<std::size_t>(agent)];
  for (std::size_t s = 0; s < adj.size(); ++s)
    if (adj[s] == factor) return static_cast<int>(s);
  throw std::invalid_argument("factor not adjacent to agent");
}

FactorGraph to_factor_graph(const CoordinationGraph& g) {
  FactorGraph fg;
  fg.n_agents = g.n_agents();
  fg.factors.reserve(static_cast<std::size_t>(g.n_agents() + g.n_edges()));
  fg.agent_factors.assign(static_cast<std::size_t>(g.n_agents()), {});
  for (int i = 0; i < g.n_agents(); ++i) {
    FactorGraph::Factor f;
    f.agents[0] = i;
    f.arity = 1;
    fg.agent_factors[static_cast<std::size_t>(i)].push_back(fg.n_factors());
    fg.factors.push_back(f);
  }
  for (int ei = 0; ei < g.n_edges(); ++ei) {
    const Edge& e = g.edges()[static_cast<std::size_t>(ei)];
    FactorGraph::Factor f;
    f.agents[0] = e.a;
    f.agents[1] = e.b;
    f.arity = 2;
    f.edge_index = ei;
    fg.agent_factors[static_cast<std::size_t>(e.a)].push_back(fg.n_factors());
    fg.agent_factors[static_cast<std::size_t>(e.b)].push_back(fg.n_factors());
    fg.factors.push_back(f);
  }
  return fg;
}

std::string to_edge_list(const CoordinationGraph& g) {
  std::ostringstream out;
  out << "n=" << g.n_agents() << "\n";
  for (const Edge& e : g.edges()) out << e.a << " " << e.b << "\n";
  return out.str();
}

CoordinationGraph parse_edge_list(const std::string& text) {
  std::istringstream in(text);
  std::string header;
  if (!std::getline(in, header) || header.rfind("n=", 0) != 0)
    throw std::invalid_argument("edge list must start with 'n=<n_agents>'");
  const int n = std::stoi(header.substr(2));
  std::vector<Edge> edges;
  int a = 0, b = 0;
  while (in >> a >> b) edges.push_back(Edge{a, b});
  return CoordinationGraph(n, std::move(edges));
}

}  // namespace coordq
