#include <catch2/catch_amalgamated.hpp>

#include "cogsec/adversary.hpp"

using namespace cogsec;

namespace {

NetworkSpec two_node_chain() {
  NetworkData d;
  d.n_nodes = 2;
  d.interconnection = Eigen::MatrixXd::Zero(2, 2);
  d.interconnection(0, 1) = 1.0;
  d.interconnection(1, 0) = 1.0;
  d.control_gains = Eigen::VectorXd::Ones(2);
  d.perf_weight = Eigen::MatrixXd::Identity(2, 2);
  d.alarm_thresholds = Eigen::VectorXd::Constant(2, 0.1);
  d.sensor_costs = Eigen::VectorXd::Ones(2);
  return build_network(d);
}

NetworkSpec three_node_path() {
  NetworkData d;
  d.n_nodes = 3;
  d.interconnection = Eigen::MatrixXd::Zero(3, 3);
  d.interconnection(0, 1) = 1.0;
  d.interconnection(1, 0) = 1.0;
  d.interconnection(1, 2) = 1.0;
  d.interconnection(2, 1) = 1.0;
  d.control_gains = Eigen::VectorXd::Ones(3);
  d.perf_weight = Eigen::MatrixXd::Identity(3, 3);
  d.alarm_thresholds = Eigen::VectorXd::Constant(3, 0.1);
  d.sensor_costs = Eigen::VectorXd::Ones(3);
  return build_network(d);
}

}  // namespace

TEST_CASE("symmetric tie breaks to the lexicographically smallest set") {
  const NetworkSpec spec = two_node_chain();
  const GameBudgets budgets{1, 1, 1.0, 0.0};
  const auto response = best_response_enumerate(spec, MonitorSet{}, budgets);
  CHECK(response.best_set.nodes == std::vector<int>{0});
  CHECK(response.best_value == Catch::Approx(5.0 / 9.0).epsilon(1e-4));
  CHECK(response.gaps.at(response.best_set) <= 1e-6);
  CHECK(response.gaps.at(AttackSet{{1}}) <= 1e-6);  // symmetric twin
}

TEST_CASE("middle node of a path is the best single attack") {
  const NetworkSpec spec = three_node_path();
  const GameBudgets budgets{1, 1, 1.0, 0.0};
  const auto response = best_response_enumerate(spec, MonitorSet{}, budgets);
  CHECK(response.best_set.nodes == std::vector<int>{1});
  CHECK(response.gaps.at(response.best_set) == 0.0);
  for (const auto& [set, gap] : response.gaps) CHECK(gap >= -1e-6);
}

TEST_CASE("joint program agrees with enumeration") {
  const NetworkSpec spec = three_node_path();
  const GameBudgets budgets{1, 1, 1.0, 0.0};
  const auto enumerated = best_response_enumerate(spec, MonitorSet{}, budgets);
  const auto joint = best_response_joint(spec, MonitorSet{}, budgets);
  CHECK(joint.method == AdversaryMethod::JointSdp);
  CHECK(joint.best_set == enumerated.best_set);
  CHECK(rel_close(joint.best_value, enumerated.best_value, 1e-5));
  for (const auto& [set, gap] : enumerated.gaps)
    CHECK(std::abs(joint.gaps.at(set) - gap) <=
          1e-4 * std::max(1.0, enumerated.best_value));
}

TEST_CASE("joint program under a monitor set") {
  const NetworkSpec spec = three_node_path();
  const GameBudgets budgets{1, 1, 1.0, 0.0};
  const MonitorSet monitors{{1}};
  const auto enumerated = best_response_enumerate(spec, monitors, budgets);
  const auto joint = best_response_joint(spec, monitors, budgets);
  CHECK(joint.best_set == enumerated.best_set);
  CHECK(rel_close(joint.best_value, enumerated.best_value, 1e-5));
}

TEST_CASE("under-weighted joint coupling is rejected") {
  const NetworkSpec spec = three_node_path();
  const GameBudgets budgets{1, 1, 1.0, 0.0};
  CHECK_THROWS_WITH(best_response_joint(spec, MonitorSet{}, budgets, 1.0),
                    Catch::Matchers::ContainsSubstring("under-weighted"));
}

TEST_CASE("epsilon cap filters near-best sets") {
  const NetworkSpec spec = two_node_chain();
  const GameBudgets budgets{1, 1, 1.0, 0.0};
  const auto response = best_response_enumerate(spec, MonitorSet{}, budgets);

  const auto near = epsilon_cap(response, 1e-3);
  REQUIRE(near.size() == 2);  // both singletons tie by symmetry

  const auto all = epsilon_cap(response, std::numeric_limits<double>::infinity());
  CHECK(all.size() == response.gaps.size());

  const auto exact = epsilon_cap(response, 0.0);
  CHECK(exact.size() == 2);  // tolerance floor keeps the numeric twin
}

TEST_CASE("adversary determinism") {
  const NetworkSpec spec = random_network(5, 4, {.edge_density = 0.6});
  const GameBudgets budgets{2, 2, 1.5, 0.0};
  const auto a = best_response_enumerate(spec, MonitorSet{{0}}, budgets);
  const auto b = best_response_enumerate(spec, MonitorSet{{0}}, budgets);
  CHECK(a.best_set == b.best_set);
  CHECK(a.best_value == b.best_value);
}

TEST_CASE("method agreement on random instances") {
  for (std::uint64_t seed : {21u, 22u, 23u}) {
    const int n = 3 + static_cast<int>(seed % 3);
    const NetworkSpec spec = random_network(seed, n, {.edge_density = 0.6});
    const GameBudgets budgets{2, 1, 1.0, 0.0};
    const MonitorSet monitors{{static_cast<int>(seed) % n}};
    const auto enumerated = best_response_enumerate(spec, monitors, budgets);
    const auto joint = best_response_joint(spec, monitors, budgets);
    INFO("seed=" << seed << " n=" << n);
    CHECK(joint.best_set == enumerated.best_set);
    CHECK(rel_close(joint.best_value, enumerated.best_value, 1e-5));
  }
}
