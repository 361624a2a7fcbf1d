#include "coordq/sparsify.hpp"

#include <algorithm>
#include <cmath>

#include "coordq/rng.hpp"

namespace coordq {

std::string to_string(CriterionKind kind) {
  switch (kind) {
    case CriterionKind::qvar: return "qvar";
    case CriterionKind::delta_max: return "delta_max";
    case CriterionKind::delta_var: return "delta_var";
    case CriterionKind::random: return "random";
    case CriterionKind::full: return "full";
    case CriterionKind::none: return "none";
  }
  throw std::invalid_argument("unknown criterion kind");
}

CriterionKind criterion_from_string(const std::string& s) {
  if (s == "qvar") return CriterionKind::qvar;
  if (s == "delta_max") return CriterionKind::delta_max;
  if (s == "delta_var") return CriterionKind::delta_var;
  if (s == "random") return CriterionKind::random;
  if (s == "full") return CriterionKind::full;
  if (s == "none") return CriterionKind::none;
  throw std::invalid_argument("unknown criterion '" + s + "'");
}

int edge_budget(int n, double lambda) {
  if (n < 1) throw std::invalid_argument("n must be positive");
  if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("lambda must be in [0,1]");
  const int max_e = n * (n - 1) / 2;
  const double x = lambda * max_e;
  const double floor_x = std::floor(x);
  const double frac = x - floor_x;
  long long k = 0;
  // Snap near-half fractions to an exact tie so 0.1*105 rounds half-even to
  // 10 despite binary representation drift.
  if (std::abs(frac - 0.5) < 1e-9) {
    const long long lo = static_cast<long long>(floor_x);
    k = (lo % 2 == 0) ? lo : lo + 1;
  } else {
    k = static_cast<long long>(std::llround(x));
  }
  return static_cast<int>(std::clamp(k, 0LL, static_cast<long long>(max_e)));
}

std::vector<ScoredEdge> rank_edges(const ValueTables& tables, const std::vector<ObsKey>& keys,
                                   CriterionKind kind) {
  const int n = tables.n_agents();
  if (static_cast<int>(keys.size()) != n)
    throw std::invalid_argument("key set must cover all agents");
  std::vector<ScoredEdge> scored;
  scored.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const ObsKey& ki = keys[static_cast<std::size_t>(i)];
      const ObsKey& kj = keys[static_cast<std::size_t>(j)];
      double s = 0.0;
      switch (kind) {
        case CriterionKind::qvar: {
          // Both orientations from one slice: row variances for (i,j), column
          // variances (transpose rows) for (j,i); symmetrize by max.
          const Mat m = tables.payoff_slice(ki, kj);
          s = std::max(max_row_variance(m), max_row_variance(m.transpose()));
          break;
        }
        case CriterionKind::delta_max:
          s = score_delta_max(tables, ki, kj);  // |delta| is orientation-symmetric
          break;
        case CriterionKind::delta_var: {
          const Mat d = utility_difference(tables, ki, kj);
          s = std::max(max_row_variance(d), max_row_variance(d.transpose()));
          break;
        }
        default:
          throw std::invalid_argument("rank_edges requires a scored criterion");
      }
      scored.push_back(ScoredEdge{Edge{i, j}, s});
    }
  }
  std::stable_sort(scored.begin(), scored.end(), [](const ScoredEdge& a, const ScoredEdge& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.edge < b.edge;
  });
  return scored;
}

CoordinationGraph topology_from_ranked(int n_agents, const std::vector<ScoredEdge>& ranked,
                                       int budget, bool lowest_first) {
  budget = std::clamp(budget, 0, static_cast<int>(ranked.size()));
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(budget));
  if (lowest_first) {
    for (int k = 0; k < budget; ++k)
      edges.push_back(ranked[ranked.size() - 1 - static_cast<std::size_t>(k)].edge);
  } else {
    for (int k = 0; k < budget; ++k) edges.push_back(ranked[static_cast<std::size_t>(k)].edge);
  }
  return CoordinationGraph(n_agents, std::move(edges));
}

CoordinationGraph select_topology(const ValueTables& tables, const std::vector<ObsKey>& keys,
                                  const TopologyCriterion& crit) {
  const int n = tables.n_agents();
  switch (crit.kind) {
    case CriterionKind::none:
      return CoordinationGraph(n);
    case CriterionKind::full:
      return build_complete_graph(n);
    case CriterionKind::random: {
      const int budget = edge_budget(n, crit.lambda);
      std::vector<Edge> all;
      all.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) all.push_back(Edge{i, j});
      Rng rng(crit.rng_seed);
      // Partial Fisher-Yates; the first `budget` slots are the sample.
      for (int k = 0; k < budget; ++k) {
        const int pick = rng.uniform_int(k, static_cast<int>(all.size()) - 1);
        std::swap(all[static_cast<std::size_t>(k)], all[static_cast<std::size_t>(pick)]);
      }
      all.resize(static_cast<std::size_t>(budget));
      return CoordinationGraph(n, std::move(all));
    }
    default: {
      const std::vector<ScoredEdge> ranked = rank_edges(tables, keys, crit.kind);
      return topology_from_ranked(n, ranked, edge_budget(n, crit.lambda));
    }
  }
}

}  // namespace coordq
