#include <catch2/catch_amalgamated.hpp>

#include "cogsec/defender.hpp"

using namespace cogsec;

namespace {

NetworkSpec two_node_chain(double delta = 0.01) {
  NetworkData d;
  d.n_nodes = 2;
  d.interconnection = Eigen::MatrixXd::Zero(2, 2);
  d.interconnection(0, 1) = 1.0;
  d.interconnection(1, 0) = 1.0;
  d.control_gains = Eigen::VectorXd::Ones(2);
  d.perf_weight = Eigen::MatrixXd::Identity(2, 2);
  d.alarm_thresholds = Eigen::VectorXd::Constant(2, delta);
  d.sensor_costs = Eigen::VectorXd::Ones(2);
  return build_network(d);
}

}  // namespace

TEST_CASE("sensor cost sums the monitored nodes") {
  const NetworkSpec spec = two_node_chain();
  CHECK(sensor_cost(spec, MonitorSet{}) == 0.0);
  CHECK(sensor_cost(spec, MonitorSet{{0, 1}}) == 2.0);

  NetworkData d;
  d.n_nodes = 2;
  d.interconnection = Eigen::MatrixXd::Zero(2, 2);
  d.interconnection(0, 1) = 0.5;
  d.interconnection(1, 0) = 0.5;
  d.control_gains = Eigen::VectorXd::Ones(2);
  d.perf_weight = Eigen::MatrixXd::Identity(2, 2);
  d.alarm_thresholds = Eigen::VectorXd::Ones(2);
  d.sensor_costs.resize(2);
  d.sensor_costs << 2.0, 5.0;
  CHECK(sensor_cost(build_network(d), MonitorSet{{1}}) == 5.0);
}

TEST_CASE("zero sensor budget leaves only the empty set") {
  const NetworkSpec spec = two_node_chain();
  const GameBudgets budgets{1, 0, 1.0, 0.0};
  const auto sol =
      defender_enumerate(spec, {AttackSet{{1}}}, budgets);
  CHECK(sol.monitor_set.nodes.empty());
  CHECK(sol.objective == Catch::Approx(sol.inner_value));
}

TEST_CASE("defender weighs monitoring benefit against sensor cost") {
  // Cheap effective sensors get used; overpriced ones do not.
  const NetworkSpec spec = two_node_chain(0.01);
  const GameBudgets budgets{1, 1, 5.0, 0.0};
  const std::vector<AttackSet> policies{AttackSet{{1}}};

  DisruptionEvaluator evaluator(spec, budgets.energy);
  const double unmonitored =
      evaluator.value(MonitorSet{}, policies[0]).value;
  const auto sol = defender_enumerate(evaluator, policies, budgets);
  // with delta = 0.01 and E = 5, monitoring removes nearly the whole
  // disruption at cost 1, so some monitor must win
  REQUIRE_FALSE(sol.monitor_set.nodes.empty());
  CHECK(sol.objective < unmonitored);
  CHECK(sol.objective ==
        Catch::Approx(sensor_cost(spec, sol.monitor_set) + sol.inner_value));

  // per-adversary certificates satisfy the big-M linkage and the shared
  // top-value bound
  const double big_m = effective_big_m(spec, budgets);
  const Eigen::VectorXd z = sol.monitor_set.indicator(spec.n_nodes);
  for (const auto& [attack, cert] : sol.per_adversary) {
    for (int j = 0; j < spec.n_nodes; ++j)
      CHECK(cert.omega(j) <= big_m * z(j) + 1e-9);
    CHECK(spec.alarm_thresholds.dot(cert.omega) +
              budgets.energy * cert.psi.sum() <=
          sol.inner_value + 1e-6);
  }
}

TEST_CASE("monitor monotonicity of the inner maximum") {
  const NetworkSpec spec = two_node_chain(0.05);
  DisruptionEvaluator evaluator(spec, 1.0);
  const AttackSet attack{{1}};
  const double q_empty = evaluator.value(MonitorSet{}, attack).value;
  const double q_one = evaluator.value(MonitorSet{{0}}, attack).value;
  const double q_both = evaluator.value(MonitorSet{{0, 1}}, attack).value;
  CHECK(q_one <= q_empty + 1e-6);
  CHECK(q_both <= q_one + 1e-6);
}

TEST_CASE("branch and bound matches enumeration on two nodes") {
  const NetworkSpec spec = two_node_chain(0.02);
  const GameBudgets budgets{1, 1, 2.0, 0.0};
  const std::vector<AttackSet> policies{AttackSet{{0}}, AttackSet{{1}}};
  const auto exact = defender_enumerate(spec, policies, budgets);
  const auto bnb = defender_branch_and_bound(spec, policies, budgets);
  CHECK(bnb.method == DefenderMethod::BranchAndBound);
  CHECK(rel_close(bnb.objective, exact.objective, 1e-5));
  CHECK(bnb.monitor_set == exact.monitor_set);
}

TEST_CASE("branch and bound matches enumeration on random instances") {
  for (std::uint64_t seed : {31u, 32u, 33u}) {
    const int n = 4 + static_cast<int>(seed % 3);
    const NetworkSpec spec = random_network(seed, n, {.edge_density = 0.5});
    const GameBudgets budgets{1, 2, 2.0, 0.0};
    std::vector<AttackSet> policies;
    for (int a = 0; a < std::min(3, n); ++a) policies.push_back(AttackSet{{a}});
    DisruptionEvaluator evaluator(spec, budgets.energy);
    const auto exact = defender_enumerate(evaluator, policies, budgets);
    const auto bnb = defender_branch_and_bound(evaluator, policies, budgets);
    INFO("seed=" << seed << " n=" << n << " exact="
                 << format_node_set(exact.monitor_set.nodes) << " bnb="
                 << format_node_set(bnb.monitor_set.nodes));
    CHECK(rel_close(bnb.objective, exact.objective, 1e-5));
  }
}

TEST_CASE("full budget is feasible for branch and bound") {
  const NetworkSpec spec = two_node_chain(0.05);
  const GameBudgets budgets{1, 2, 1.0, 0.0};
  const auto sol =
      defender_branch_and_bound(spec, {AttackSet{{0}}}, budgets);
  CHECK(sol.objective <=
        sensor_cost(spec, MonitorSet{{0, 1}}) + sol.inner_value + 2.0 + 1e-6);
}

TEST_CASE("full coverage baseline dominates partial histories") {
  const NetworkSpec spec = random_network(41, 4, {.edge_density = 0.6});
  const GameBudgets budgets{1, 1, 1.0, 0.0};
  DisruptionEvaluator evaluator(spec, budgets.energy);
  const auto baseline = full_coverage_policy(evaluator, budgets);
  const auto partial =
      defender_enumerate(evaluator, {AttackSet{{0}}}, budgets);
  CHECK(baseline.objective >= partial.objective - 1e-6);
  CHECK_THROWS_AS(full_coverage_policy(evaluator, budgets, /*cap=*/2), Error);
}

TEST_CASE("empty policy list is rejected") {
  const NetworkSpec spec = two_node_chain();
  const GameBudgets budgets{1, 1, 1.0, 0.0};
  CHECK_THROWS_AS(defender_enumerate(spec, {}, budgets), Error);
}
