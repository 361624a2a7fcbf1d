#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coordq/graph.hpp"
#include "coordq/types.hpp"

namespace coordq {

struct CommReport {
  int edges_used = 0;
  long long messages_per_selection = 0;
  double saved_fraction = 0.0;  // 1 - edges_used / complete_edge_count
};

// Wire messages for one Max-Sum action selection: per iteration, one message
// per direction per factor-graph link. Agent<->own-unary-factor traffic is
// co-located and excluded unless local_unary is cleared, which restores the
// literal 2(n + 2|E|) per-iteration count.
CommReport comm_cost(const CoordinationGraph& g, int iterations, bool local_unary = true);

enum class SmoothMethod { kalman, ema, dema, midpoint };

std::string to_string(SmoothMethod m);
SmoothMethod smooth_method_from_string(const std::string& s);

struct StabilityOptions {
  double kalman_process_var = 1e-4;
  double kalman_measurement_var = 1e-1;
  int ema_span = 10;
  int midpoint_window = 5;  // centered, radius window/2
};

struct StabilityReport {
  SmoothMethod method = SmoothMethod::kalman;
  double distance = 0.0;  // sqrt(sum (x_t - smoothed_t)^2)
};

std::vector<double> smooth_curve(const std::vector<double>& curve, SmoothMethod method,
                                 const StabilityOptions& opt = {});
StabilityReport stability_distance(const std::vector<double>& curve, SmoothMethod method,
                                   const StabilityOptions& opt = {});

// Linear-interpolation percentile (p in [0,100]) of an unsorted sample.
double percentile(std::vector<double> values, double p);

// Monte-Carlo study of greedy-action stability under single-edge removal on
// random complete-graph instances, with the per-edge analytic lower bound.
struct EdgeRemovalConfig {
  int n_instances = 1000;
  int n_agents = 4;
  int n_actions = 3;
  int iterations = 5;
  double value_range = 1.0;  // table entries uniform in [-range, range]
  std::uint64_t seed = 0;
  int bins = 10;        // score-quantile bins
  int bootstrap = 1000;  // resamples for the 95% CI
};

struct EdgeRemovalRow {
  int instance = 0;
  Edge edge;
  double score = 0.0;  // payoff-variance score of the removed edge
  bool changed_i = false;
  bool changed_j = false;
  double bound = 0.0;  // max of the two per-direction lower bounds
};

struct EdgeRemovalBin {
  double score_lo = 0.0;
  double score_hi = 0.0;
  int count = 0;
  double unchanged_freq = 0.0;
  double ci_lo = 0.0;  // 95% bootstrap CI of unchanged_freq
  double ci_hi = 0.0;
  double max_bound = 0.0;
  int positive_bounds = 0;
};

struct EdgeRemovalReport {
  std::vector<EdgeRemovalRow> rows;
  std::vector<EdgeRemovalBin> bins;
};

EdgeRemovalReport edge_removal_experiment(const EdgeRemovalConfig& cfg);

}  // namespace coordq
