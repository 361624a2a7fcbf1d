#include <cmath>

#include "coordq/maxsum.hpp"
#include "coordq/rng.hpp"
#include "doctest.h"

using namespace coordq;

namespace {

struct RandomInstance {
  CoordinationGraph graph;
  std::vector<Vec> utilities;
  std::vector<Mat> payoffs;
};

RandomInstance random_instance(Rng& rng, int max_agents, int max_actions, bool acyclic,
                               bool complete) {
  const int n = rng.uniform_int(complete ? 2 : 1, max_agents);
  std::vector<int> n_act(static_cast<std::size_t>(n));
  for (auto& a : n_act) a = rng.uniform_int(1, max_actions);

  std::vector<Edge> edges;
  if (complete) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) edges.push_back(Edge{i, j});
  } else if (acyclic && n > 1) {
    // Random forest: attach each node to an earlier one with probability 0.8.
    for (int v = 1; v < n; ++v)
      if (rng.uniform01() < 0.8) edges.push_back(make_edge(rng.uniform_int(0, v - 1), v));
  }
  RandomInstance inst{CoordinationGraph(n, edges), {}, {}};

  inst.utilities.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    inst.utilities[static_cast<std::size_t>(i)] = Vec(n_act[static_cast<std::size_t>(i)]);
    for (int a = 0; a < n_act[static_cast<std::size_t>(i)]; ++a)
      inst.utilities[static_cast<std::size_t>(i)][a] = rng.uniform_real(-1.0, 1.0);
  }
  for (const Edge& e : inst.graph.edges()) {
    Mat m(n_act[static_cast<std::size_t>(e.a)], n_act[static_cast<std::size_t>(e.b)]);
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform_real(-1.0, 1.0);
    inst.payoffs.push_back(std::move(m));
  }
  return inst;
}

}  // namespace

TEST_CASE("two-agent coordination picks the high payoff") {
  const CoordinationGraph g(2, {Edge{0, 1}});
  const std::vector<Vec> utilities = {Vec::Zero(2), Vec::Zero(2)};
  Mat p(2, 2);
  p << 5, 0, 0, 3;
  const std::vector<Mat> payoffs = {p};

  const auto res = run_max_sum(to_factor_graph(g), utilities, payoffs);
  CHECK(res.action == JointAction({0, 0}));
  CHECK(res.value == doctest::Approx(5.0));

  const auto [oracle_action, oracle_value] = exact_joint_argmax(g, utilities, payoffs);
  CHECK(oracle_action == JointAction({0, 0}));
  CHECK(oracle_value == doctest::Approx(5.0));
}

TEST_CASE("edgeless solve is independent argmax") {
  const CoordinationGraph g(3);
  std::vector<Vec> utilities(3, Vec(2));
  for (auto& u : utilities) u << 0, 1;
  const auto res = run_max_sum(to_factor_graph(g), utilities, {});
  CHECK(res.action == JointAction({1, 1, 1}));
}

TEST_CASE("total symmetry breaks ties toward action 0") {
  const CoordinationGraph g(2, {Edge{0, 1}});
  const std::vector<Vec> utilities = {Vec::Zero(2), Vec::Zero(2)};
  const std::vector<Mat> payoffs = {Mat::Constant(2, 2, 7.0)};
  const auto res = run_max_sum(to_factor_graph(g), utilities, payoffs);
  CHECK(res.action == JointAction({0, 0}));
}

TEST_CASE("evaluate_q_tot matches hand arithmetic") {
  const CoordinationGraph g(2, {Edge{0, 1}});
  std::vector<Vec> utilities = {Vec::Constant(2, 1.0), Vec::Constant(2, 1.0)};
  std::vector<Mat> payoffs = {Mat::Constant(2, 2, 4.0)};
  CHECK(evaluate_q_tot(g, utilities, payoffs, JointAction({0, 1})) == doctest::Approx(5.0));

  for (auto& u : utilities) u.setZero();
  payoffs[0].setZero();
  CHECK(evaluate_q_tot(g, utilities, payoffs, JointAction({1, 0})) == doctest::Approx(0.0));

  const CoordinationGraph g3(3);
  const std::vector<Vec> u3(3, Vec::Constant(2, 2.0));
  CHECK(evaluate_q_tot(g3, u3, {}, JointAction({0, 0, 0})) == doctest::Approx(2.0));
}

TEST_CASE("exact argmax on a path graph") {
  const CoordinationGraph g(3, {Edge{0, 1}, Edge{1, 2}});
  const std::vector<Vec> utilities(3, Vec::Zero(2));
  Mat p01 = Mat::Zero(2, 2), p12 = Mat::Zero(2, 2);
  p01(1, 0) = 10.0;
  p12(0, 1) = 10.0;
  const auto [action, value] = exact_joint_argmax(g, utilities, {p01, p12});
  CHECK(action == JointAction({1, 0, 1}));
  CHECK(value == doctest::Approx(10.0));

  const auto [zero_action, zero_value] =
      exact_joint_argmax(CoordinationGraph(3), std::vector<Vec>(3, Vec::Zero(3)), {});
  CHECK(zero_action == JointAction({0, 0, 0}));
  CHECK(zero_value == doctest::Approx(0.0));
}

TEST_CASE("enumeration cap") {
  const CoordinationGraph g(8);
  const std::vector<Vec> utilities(8, Vec::Zero(10));
  CHECK_THROWS_AS(exact_joint_argmax(g, utilities, {}, 1000), CapacityError);
}

TEST_CASE("missing payoff is rejected") {
  const CoordinationGraph g(2, {Edge{0, 1}});
  const std::vector<Vec> utilities(2, Vec::Zero(2));
  CHECK_THROWS_AS(run_max_sum(to_factor_graph(g), utilities, {}), std::invalid_argument);
}

TEST_CASE("tree instances solve exactly") {
  Rng rng(7);
  for (int trial = 0; trial < 150; ++trial) {
    const auto inst = random_instance(rng, 6, 4, true, false);
    MaxSumOptions opt;
    opt.iterations = 2 * inst.graph.n_agents();
    const auto res = run_max_sum(to_factor_graph(inst.graph), inst.utilities, inst.payoffs, opt);
    const auto [_, best] = exact_joint_argmax(inst.graph, inst.utilities, inst.payoffs);
    const double got = evaluate_q_tot(inst.graph, inst.utilities, inst.payoffs, res.action);
    CHECK(std::abs(got - best) < 1e-9);
  }
}

TEST_CASE("anytime result dominates the utility-only extraction") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = random_instance(rng, 5, 4, false, true);
    const auto res = run_max_sum(to_factor_graph(inst.graph), inst.utilities, inst.payoffs);
    JointAction util_only;
    for (const Vec& u : inst.utilities) util_only.actions.push_back(argmax_lowest(u));
    const double anytime = evaluate_q_tot(inst.graph, inst.utilities, inst.payoffs, res.action);
    const double baseline = evaluate_q_tot(inst.graph, inst.utilities, inst.payoffs, util_only);
    CHECK(anytime >= baseline - 1e-12);
  }
}

TEST_CASE("solver output is reproducible bit for bit") {
  Rng rng(13);
  const auto inst = random_instance(rng, 5, 4, false, true);
  const auto a = run_max_sum(to_factor_graph(inst.graph), inst.utilities, inst.payoffs);
  const auto b = run_max_sum(to_factor_graph(inst.graph), inst.utilities, inst.payoffs);
  CHECK(a.action == b.action);
  CHECK(a.value == b.value);
  for (std::size_t i = 0; i < a.messages.agent_to_factor.size(); ++i)
    for (std::size_t s = 0; s < a.messages.agent_to_factor[i].size(); ++s)
      CHECK(a.messages.agent_to_factor[i][s] == b.messages.agent_to_factor[i][s]);
}

TEST_CASE("normalization does not change tree argmax") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = random_instance(rng, 6, 4, true, false);
    MaxSumOptions with, without;
    with.iterations = without.iterations = 2 * inst.graph.n_agents();
    with.normalize = true;
    without.normalize = false;
    with.anytime = without.anytime = false;
    const auto fg = to_factor_graph(inst.graph);
    const auto a = run_max_sum(fg, inst.utilities, inst.payoffs, with);
    const auto b = run_max_sum(fg, inst.utilities, inst.payoffs, without);
    CHECK(a.action == b.action);
  }
}

TEST_CASE("normalized agent-to-factor messages are zero mean") {
  Rng rng(19);
  const auto inst = random_instance(rng, 5, 4, false, true);
  const auto res = run_max_sum(to_factor_graph(inst.graph), inst.utilities, inst.payoffs);
  for (const auto& per_agent : res.messages.agent_to_factor)
    for (const Vec& m : per_agent) CHECK(std::abs(m.sum()) < 1e-9);
}
