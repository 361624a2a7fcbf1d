#include "coordq/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "coordq/maxsum.hpp"
#include "coordq/rng.hpp"
#include "coordq/values.hpp"

namespace coordq {

CommReport comm_cost(const CoordinationGraph& g, int iterations, bool local_unary) {
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  CommReport r;
  r.edges_used = g.n_edges();
  const long long unary = local_unary ? 0 : g.n_agents();
  r.messages_per_selection =
      static_cast<long long>(iterations) * 2 * (unary + 2LL * g.n_edges());
  r.saved_fraction =
      g.max_edges() > 0 ? 1.0 - static_cast<double>(g.n_edges()) / g.max_edges() : 0.0;
  return r;
}

std::string to_string(SmoothMethod m) {
  switch (m) {
    case SmoothMethod::kalman: return "kalman";
    case SmoothMethod::ema: return "ema";
    case SmoothMethod::dema: return "dema";
    case SmoothMethod::midpoint: return "midpoint";
  }
  throw std::invalid_argument("unknown smoothing method");
}

SmoothMethod smooth_method_from_string(const std::string& s) {
  if (s == "kalman") return SmoothMethod::kalman;
  if (s == "ema") return SmoothMethod::ema;
  if (s == "dema") return SmoothMethod::dema;
  if (s == "midpoint") return SmoothMethod::midpoint;
  throw std::invalid_argument("unknown smoothing method '" + s + "'");
}

namespace {

std::vector<double> ema_curve(const std::vector<double>& x, int span) {
  const double alpha = 2.0 / (span + 1.0);
  std::vector<double> out(x.size());
  double e = x.front();
  for (std::size_t t = 0; t < x.size(); ++t) {
    e = t == 0 ? x[t] : alpha * x[t] + (1.0 - alpha) * e;
    out[t] = e;
  }
  return out;
}

}  // namespace

std::vector<double> smooth_curve(const std::vector<double>& curve, SmoothMethod method,
                                 const StabilityOptions& opt) {
  if (curve.size() < 2) throw std::invalid_argument("curve needs at least two points");
  const std::size_t n = curve.size();
  switch (method) {
    case SmoothMethod::kalman: {
      // Scalar local-level filter.
      std::vector<double> out(n);
      double s = curve.front();
      double p = opt.kalman_measurement_var;
      out[0] = s;
      for (std::size_t t = 1; t < n; ++t) {
        p += opt.kalman_process_var;
        const double k = p / (p + opt.kalman_measurement_var);
        s += k * (curve[t] - s);
        p *= 1.0 - k;
        out[t] = s;
      }
      return out;
    }
    case SmoothMethod::ema:
      if (opt.ema_span < 1) throw std::invalid_argument("ema span must be >= 1");
      return ema_curve(curve, opt.ema_span);
    case SmoothMethod::dema: {
      if (opt.ema_span < 1) throw std::invalid_argument("ema span must be >= 1");
      const std::vector<double> e1 = ema_curve(curve, opt.ema_span);
      const std::vector<double> e2 = ema_curve(e1, opt.ema_span);
      std::vector<double> out(n);
      for (std::size_t t = 0; t < n; ++t) out[t] = 2.0 * e1[t] - e2[t];
      return out;
    }
    case SmoothMethod::midpoint: {
      if (opt.midpoint_window < 2) throw std::invalid_argument("midpoint window must be >= 2");
      const std::size_t radius = static_cast<std::size_t>(opt.midpoint_window) / 2;
      std::vector<double> out(n);
      for (std::size_t t = 0; t < n; ++t) {
        const std::size_t lo = t > radius ? t - radius : 0;
        const std::size_t hi = std::min(n - 1, t + radius);
        double mn = curve[lo], mx = curve[lo];
        for (std::size_t k = lo + 1; k <= hi; ++k) {
          mn = std::min(mn, curve[k]);
          mx = std::max(mx, curve[k]);
        }
        out[t] = 0.5 * (mn + mx);
      }
      return out;
    }
  }
  throw std::invalid_argument("unknown smoothing method");
}

StabilityReport stability_distance(const std::vector<double>& curve, SmoothMethod method,
                                   const StabilityOptions& opt) {
  const std::vector<double> smooth = smooth_curve(curve, method, opt);
  double sum = 0.0;
  for (std::size_t t = 0; t < curve.size(); ++t) {
    const double d = curve[t] - smooth[t];
    sum += d * d;
  }
  return StabilityReport{method, std::sqrt(sum)};
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile of empty sample");
  if (p < 0.0 || p > 100.0) throw std::invalid_argument("percentile must be in [0,100]");
  std::sort(values.begin(), values.end());
  const double rank = p / 100.0 * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(values.size() - 1, lo + 1);
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

EdgeRemovalReport edge_removal_experiment(const EdgeRemovalConfig& cfg) {
  if (cfg.n_instances < 1 || cfg.n_agents < 2 || cfg.n_actions < 1)
    throw std::invalid_argument("bad edge-removal experiment parameters");
  EdgeRemovalReport report;
  const CoordinationGraph full = build_complete_graph(cfg.n_agents);
  const FactorGraph full_fg = to_factor_graph(full);
  MaxSumOptions opt;
  opt.iterations = cfg.iterations;
  opt.anytime = false;        // the study compares final-iteration extractions
  opt.scale_by_counts = false;  // raw tables; removal must not rescale the rest

  Rng rng(Rng::derive(cfg.seed, 0x1e57));
  for (int inst = 0; inst < cfg.n_instances; ++inst) {
    std::vector<Vec> utilities(static_cast<std::size_t>(cfg.n_agents));
    for (auto& u : utilities) {
      u = Vec(cfg.n_actions);
      for (int a = 0; a < cfg.n_actions; ++a)
        u[a] = rng.uniform_real(-cfg.value_range, cfg.value_range);
    }
    std::vector<Mat> payoffs(static_cast<std::size_t>(full.n_edges()));
    for (auto& m : payoffs) {
      m = Mat(cfg.n_actions, cfg.n_actions);
      for (int r = 0; r < cfg.n_actions; ++r)
        for (int c = 0; c < cfg.n_actions; ++c)
          m(r, c) = rng.uniform_real(-cfg.value_range, cfg.value_range);
    }

    const MaxSumResult base = run_max_sum(full_fg, utilities, payoffs, opt);

    for (int ei = 0; ei < full.n_edges(); ++ei) {
      const Edge e = full.edges()[static_cast<std::size_t>(ei)];

      std::vector<Edge> kept;
      std::vector<Mat> kept_payoffs;
      for (int k = 0; k < full.n_edges(); ++k) {
        if (k == ei) continue;
        kept.push_back(full.edges()[static_cast<std::size_t>(k)]);
        kept_payoffs.push_back(payoffs[static_cast<std::size_t>(k)]);
      }
      const CoordinationGraph reduced(cfg.n_agents, kept);
      const MaxSumResult red = run_max_sum(to_factor_graph(reduced), utilities, kept_payoffs, opt);

      EdgeRemovalRow row;
      row.instance = inst;
      row.edge = e;
      const Mat& pm = payoffs[static_cast<std::size_t>(ei)];
      row.score = std::max(max_row_variance(pm), max_row_variance(pm.transpose()));
      row.changed_i = base.action[e.a] != red.action[e.a];
      row.changed_j = base.action[e.b] != red.action[e.b];

      // Bound per direction from the final messages of the full-graph run.
      const int factor = cfg.n_agents + ei;  // pairwise factors follow the unary block
      const auto bound_toward = [&](int to_agent, int from_agent, const Mat& oriented) {
        // oriented rows are from_agent's actions, columns to_agent's.
        const Vec& incoming = base.messages.to_factor(full_fg, from_agent, factor);
        const Mat r_mat = oriented.colwise() + incoming;
        double gap = 0.0;
        for (int c = 0; c < r_mat.cols(); ++c) {
          const double col_gap = r_mat.col(c).maxCoeff() - r_mat.col(c).minCoeff();
          gap = std::max(gap, col_gap);
        }
        StabilityBoundInputs in;
        in.message = base.messages.to_agent(full_fg, factor, to_agent);
        in.score = max_row_variance(oriented);
        in.gap_bound = gap;
        in.n_actions = cfg.n_actions;
        return edge_removal_stability_bound(in);
      };
      const double bound_j = bound_toward(e.b, e.a, pm);
      const double bound_i = bound_toward(e.a, e.b, Mat(pm.transpose()));
      row.bound = std::max(bound_i, bound_j);
      report.rows.push_back(row);
    }
  }

  // Score-quantile bins with bootstrap CIs on the unchanged frequency.
  std::vector<double> scores;
  scores.reserve(report.rows.size());
  for (const auto& r : report.rows) scores.push_back(r.score);
  std::vector<double> sorted_scores = scores;
  std::sort(sorted_scores.begin(), sorted_scores.end());

  const int bins = std::max(1, cfg.bins);
  std::vector<std::vector<int>> members(static_cast<std::size_t>(bins));
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto it =
        std::upper_bound(sorted_scores.begin(), sorted_scores.end(), report.rows[i].score);
    const double quantile = static_cast<double>(it - sorted_scores.begin() - 1) /
                            static_cast<double>(sorted_scores.size());
    int b = static_cast<int>(quantile * bins);
    b = std::clamp(b, 0, bins - 1);
    members[static_cast<std::size_t>(b)].push_back(static_cast<int>(i));
  }

  Rng boot_rng(Rng::derive(cfg.seed, 0xb007));
  for (int b = 0; b < bins; ++b) {
    const auto& idx = members[static_cast<std::size_t>(b)];
    EdgeRemovalBin bin;
    bin.count = static_cast<int>(idx.size());
    if (idx.empty()) {
      report.bins.push_back(bin);
      continue;
    }
    bin.score_lo = report.rows[static_cast<std::size_t>(idx.front())].score;
    bin.score_hi = bin.score_lo;
    bin.max_bound = report.rows[static_cast<std::size_t>(idx.front())].bound;
    int unchanged = 0;
    for (int i : idx) {
      const auto& row = report.rows[static_cast<std::size_t>(i)];
      bin.score_lo = std::min(bin.score_lo, row.score);
      bin.score_hi = std::max(bin.score_hi, row.score);
      bin.max_bound = std::max(bin.max_bound, row.bound);
      if (row.bound > 0.0) ++bin.positive_bounds;
      if (!row.changed_i && !row.changed_j) ++unchanged;
    }
    bin.unchanged_freq = static_cast<double>(unchanged) / static_cast<double>(idx.size());

    std::vector<double> boot(static_cast<std::size_t>(std::max(1, cfg.bootstrap)));
    for (auto& est : boot) {
      int hits = 0;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const int pick = idx[static_cast<std::size_t>(
            boot_rng.uniform_int(0, static_cast<int>(idx.size()) - 1))];
        const auto& row = report.rows[static_cast<std::size_t>(pick)];
        if (!row.changed_i && !row.changed_j) ++hits;
      }
      est = static_cast<double>(hits) / static_cast<double>(idx.size());
    }
    bin.ci_lo = percentile(boot, 2.5);
    bin.ci_hi = percentile(boot, 97.5);
    report.bins.push_back(bin);
  }

  return report;
}

}  // namespace coordq
