#include <catch2/catch_amalgamated.hpp>

#include "cogsec/game.hpp"

using namespace cogsec;

namespace {

NetworkSpec small_net(std::uint64_t seed, int n) {
  return random_network(seed, n,
                        {.edge_density = 0.6, .delta_lo = 0.02, .delta_hi = 0.1});
}

}  // namespace

TEST_CASE("level zero trace") {
  const NetworkSpec spec = small_net(3, 4);
  const GameBudgets budgets{1, 2, 2.0, 0.0};
  const PolicyTrace trace = run_ch_iteration(spec, budgets, 0, /*seed=*/9);
  REQUIRE(trace.rows.size() == 1);
  const auto& row = trace.rows[0];
  CHECK(row.level == 0);
  CHECK(static_cast<int>(row.monitors.nodes.size()) == budgets.beta);
  CHECK(row.monitors == draw_level0_monitors(9, spec.n_nodes, budgets.beta));
  CHECK(row.defender_objective ==
        Catch::Approx(sensor_cost(spec, row.monitors) + row.disruption));
  CHECK_FALSE(trace.converged_at.has_value());
}

TEST_CASE("traces are deterministic in the seed") {
  const NetworkSpec spec = small_net(4, 4);
  const GameBudgets budgets{1, 1, 1.5, 0.0};
  const PolicyTrace a = run_ch_iteration(spec, budgets, 5, 17);
  const PolicyTrace b = run_ch_iteration(spec, budgets, 5, 17);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].monitors == b.rows[i].monitors);
    CHECK(a.rows[i].attack == b.rows[i].attack);
    CHECK(a.rows[i].disruption == b.rows[i].disruption);
    CHECK(a.rows[i].defender_objective == b.rows[i].defender_objective);
  }
  const PolicyTrace c = run_ch_iteration(spec, budgets, 5, 18);
  CHECK_FALSE(c.rows[0].monitors == a.rows[0].monitors);  // seed drives M_0
}

TEST_CASE("frozen tail after convergence") {
  const NetworkSpec spec = small_net(5, 4);
  const GameBudgets budgets{1, 1, 2.0, 0.0};
  const PolicyTrace trace = run_ch_iteration(spec, budgets, 10, 2);
  REQUIRE(trace.rows.size() == 11);
  REQUIRE(trace.converged_at.has_value());
  const int l = *trace.converged_at;
  CHECK(trace.rows[l + 1].attack == trace.rows[l].attack);
  for (std::size_t k = l + 1; k < trace.rows.size(); ++k) {
    CHECK(trace.rows[k].monitors == trace.rows[l + 1].monitors);
    CHECK(trace.rows[k].attack == trace.rows[l + 1].attack);
    CHECK(trace.rows[k].disruption == trace.rows[l + 1].disruption);
    CHECK(trace.rows[k].repeated);
  }
  // convergence must occur within the number of admissible attack sets
  CHECK(l <= static_cast<int>(binomial(spec.n_nodes, budgets.alpha)));

  // distinct adversary policies never exceed C(N, alpha)
  std::vector<AttackSet> distinct;
  for (const auto& row : trace.rows)
    if (std::find(distinct.begin(), distinct.end(), row.attack) == distinct.end())
      distinct.push_back(row.attack);
  CHECK(distinct.size() <= binomial(spec.n_nodes, budgets.alpha));
}

TEST_CASE("early stop and full iteration agree") {
  const NetworkSpec spec = small_net(6, 4);
  const GameBudgets budgets{1, 1, 2.0, 0.0};
  const PolicyTrace stopped =
      run_ch_iteration(spec, budgets, 8, 3, {.early_stop = true});
  const PolicyTrace full =
      run_ch_iteration(spec, budgets, 8, 3, {.early_stop = false});
  REQUIRE(stopped.rows.size() == full.rows.size());
  CHECK(stopped.converged_at == full.converged_at);
  for (std::size_t i = 0; i < full.rows.size(); ++i) {
    CHECK(stopped.rows[i].monitors == full.rows[i].monitors);
    CHECK(stopped.rows[i].attack == full.rows[i].attack);
    CHECK(stopped.rows[i].disruption ==
          Catch::Approx(full.rows[i].disruption).margin(1e-9));
  }
}

TEST_CASE("detect_convergence scans stored rows") {
  PolicyTrace trace;
  auto row = [](int level, std::vector<int> attack) {
    PolicyTraceRow r;
    r.level = level;
    r.attack = AttackSet{std::move(attack)};
    return r;
  };
  trace.rows = {row(0, {1}), row(1, {2}), row(2, {2}), row(3, {2})};
  CHECK(detect_convergence(trace) == 1);

  trace.rows = {row(0, {1}), row(1, {2}), row(2, {0})};
  CHECK_FALSE(detect_convergence(trace).has_value());

  trace.rows = {row(0, {1})};
  CHECK_FALSE(detect_convergence(trace).has_value());
}

TEST_CASE("outcome grid diagonal matches the trace") {
  const NetworkSpec spec = small_net(7, 4);
  const GameBudgets budgets{1, 1, 1.5, 0.0};
  DisruptionEvaluator evaluator(spec, budgets.energy);
  const PolicyTrace trace = run_ch_iteration(evaluator, budgets, 3, 11);
  const Eigen::MatrixXd grid = outcome_grid(evaluator, trace);
  REQUIRE(grid.rows() == 4);
  for (int k = 0; k < 4; ++k)
    CHECK(grid(k, k) == Catch::Approx(trace.rows[k].disruption).margin(1e-6));

  // adversary resonance: each row max on the diagonal
  const MismatchReport report = mismatch_report(grid);
  for (int k = 0; k < 4; ++k) {
    INFO("row " << k);
    CHECK(report.row_max_on_diagonal[k]);
  }
}

TEST_CASE("mismatch report flags a planted violation") {
  Eigen::MatrixXd grid(2, 2);
  grid << 1.0, 2.0,  // off-diagonal row max: adversary would gain by mismatch
      0.5, 0.6;
  const MismatchReport report = mismatch_report(grid);
  CHECK_FALSE(report.row_max_on_diagonal[0]);
  REQUIRE(report.adversary_violations.size() == 1);
  CHECK(report.adversary_violations[0].defender_level == 0);
  CHECK(report.adversary_violations[0].adversary_level == 1);
  CHECK(report.adversary_violations[0].magnitude == Catch::Approx(1.0));
  CHECK(report.one_step_defense_benefit[0]);  // 0.5 <= 1.0

  const MismatchReport clean = mismatch_report(Eigen::MatrixXd::Constant(1, 1, 2.0));
  CHECK(clean.clean());
}

TEST_CASE("trace recheck accepts its own output and flags tampering") {
  const NetworkSpec spec = small_net(8, 4);
  const GameBudgets budgets{1, 1, 1.5, 0.0};
  DisruptionEvaluator evaluator(spec, budgets.energy);
  PolicyTrace trace = run_ch_iteration(evaluator, budgets, 3, 5);
  CHECK(recheck_trace(evaluator, budgets, trace).empty());

  trace.rows[1].attack = trace.rows[1].attack.nodes[0] == 0
                             ? AttackSet{{1}}
                             : AttackSet{{0}};
  CHECK_FALSE(recheck_trace(evaluator, budgets, trace).empty());
}
