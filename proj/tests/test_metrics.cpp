#include <cmath>

#include "coordq/maxsum.hpp"
#include "coordq/metrics.hpp"
#include "coordq/rng.hpp"
#include "doctest.h"

using namespace coordq;

TEST_CASE("comm cost worked examples") {
  CHECK(comm_cost(CoordinationGraph(4), 5).messages_per_selection == 0);

  const auto two = comm_cost(CoordinationGraph(2, {Edge{0, 1}}), 5);
  CHECK(two.messages_per_selection == 20);
  CHECK(two.edges_used == 1);
  CHECK(two.saved_fraction == doctest::Approx(0.0));

  // Literal count includes the unary links.
  const auto literal = comm_cost(CoordinationGraph(2, {Edge{0, 1}}), 5, false);
  CHECK(literal.messages_per_selection == 5 * 2 * (2 + 2));

  // Sensor-scale sparsity: 15 agents, lambda 0.1 -> 10 of 105 edges.
  std::vector<Edge> ten;
  for (int j = 1; j <= 10; ++j) ten.push_back(Edge{0, j});
  const auto sparse = comm_cost(CoordinationGraph(15, ten), 5);
  CHECK(std::abs(sparse.saved_fraction - 0.9) <= 1.0 / 105.0 + 1e-12);
}

TEST_CASE("smoothers are exact on constant curves") {
  const std::vector<double> flat(20, 3.25);
  for (const auto m :
       {SmoothMethod::kalman, SmoothMethod::ema, SmoothMethod::dema, SmoothMethod::midpoint})
    CHECK(stability_distance(flat, m).distance == doctest::Approx(0.0));
}

TEST_CASE("midpoint closed form on the alternating curve") {
  std::vector<double> alt;
  for (int t = 0; t < 64; ++t) alt.push_back(t % 2 == 0 ? 1.0 : -1.0);
  StabilityOptions opt;
  for (int window = 2; window <= 6; ++window) {
    opt.midpoint_window = window;
    CHECK(stability_distance(alt, SmoothMethod::midpoint, opt).distance ==
          doctest::Approx(std::sqrt(64.0)));
  }
}

TEST_CASE("ema with span one is the identity smoother") {
  std::vector<double> line;
  for (int t = 0; t < 30; ++t) line.push_back(0.5 * t);
  StabilityOptions opt;
  opt.ema_span = 1;
  CHECK(stability_distance(line, SmoothMethod::ema, opt).distance == doctest::Approx(0.0));
}

TEST_CASE("stability distances are shift invariant") {
  Rng rng(55);
  std::vector<double> curve;
  for (int t = 0; t < 50; ++t) curve.push_back(rng.uniform_real(-2.0, 2.0));
  std::vector<double> shifted = curve;
  for (double& x : shifted) x += 17.5;
  for (const auto m :
       {SmoothMethod::kalman, SmoothMethod::ema, SmoothMethod::dema, SmoothMethod::midpoint})
    CHECK(std::abs(stability_distance(curve, m).distance -
                   stability_distance(shifted, m).distance) < 1e-9);
}

TEST_CASE("smoothing rejects bad inputs") {
  CHECK_THROWS_AS(stability_distance({1.0}, SmoothMethod::ema), std::invalid_argument);
  CHECK_THROWS_AS(smooth_method_from_string("nope"), std::invalid_argument);
  CHECK(smooth_method_from_string("dema") == SmoothMethod::dema);
}

TEST_CASE("percentile interpolation") {
  const std::vector<double> v = {4.0, 1.0, 3.0, 2.0};
  CHECK(percentile(v, 0.0) == doctest::Approx(1.0));
  CHECK(percentile(v, 100.0) == doctest::Approx(4.0));
  CHECK(percentile(v, 50.0) == doctest::Approx(2.5));
  CHECK(percentile(v, 25.0) == doctest::Approx(1.75));
  CHECK_THROWS_AS(percentile({}, 50.0), std::invalid_argument);
}

TEST_CASE("removing a zero-payoff edge never changes actions") {
  // A zero pairwise table only relays constants, and constants cannot move
  // any argmax.
  Rng rng(2718);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 4;
    const int actions = 3;
    const CoordinationGraph full = build_complete_graph(n);
    std::vector<Vec> utilities(static_cast<std::size_t>(n));
    for (auto& u : utilities) {
      u = Vec(actions);
      for (int a = 0; a < actions; ++a) u[a] = rng.uniform_real(-1.0, 1.0);
    }
    std::vector<Mat> payoffs;
    for (int e = 0; e < full.n_edges(); ++e) {
      Mat m(actions, actions);
      for (int r = 0; r < actions; ++r)
        for (int c = 0; c < actions; ++c) m(r, c) = rng.uniform_real(-1.0, 1.0);
      payoffs.push_back(std::move(m));
    }
    const int dead = rng.uniform_int(0, full.n_edges() - 1);
    payoffs[static_cast<std::size_t>(dead)].setZero();

    MaxSumOptions opt;
    opt.anytime = false;
    opt.scale_by_counts = false;
    const auto base = run_max_sum(to_factor_graph(full), utilities, payoffs, opt);

    std::vector<Edge> kept;
    std::vector<Mat> kept_payoffs;
    for (int e = 0; e < full.n_edges(); ++e) {
      if (e == dead) continue;
      kept.push_back(full.edges()[static_cast<std::size_t>(e)]);
      kept_payoffs.push_back(payoffs[static_cast<std::size_t>(e)]);
    }
    const CoordinationGraph reduced(n, kept);
    const auto red = run_max_sum(to_factor_graph(reduced), utilities, kept_payoffs, opt);
    CHECK(base.action == red.action);
  }
}

TEST_CASE("edge removal study is reproducible and sane on a small run") {
  EdgeRemovalConfig cfg;
  cfg.n_instances = 40;
  cfg.n_agents = 3;
  cfg.n_actions = 2;
  cfg.seed = 9;
  cfg.bins = 4;
  cfg.bootstrap = 200;
  const auto a = edge_removal_experiment(cfg);
  const auto b = edge_removal_experiment(cfg);
  REQUIRE(a.rows.size() == b.rows.size());
  CHECK(a.rows.size() == 40u * 3u);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].score == b.rows[i].score);
    CHECK(a.rows[i].changed_i == b.rows[i].changed_i);
    CHECK(a.rows[i].bound == b.rows[i].bound);
    CHECK(a.rows[i].score >= 0.0);
    CHECK(a.rows[i].bound <= 1.0);
  }
  int total = 0;
  for (const auto& bin : a.bins) {
    total += bin.count;
    CHECK(bin.ci_lo <= bin.unchanged_freq + 1e-12);
    CHECK(bin.ci_hi >= bin.unchanged_freq - 1e-12);
  }
  CHECK(total == static_cast<int>(a.rows.size()));
}
