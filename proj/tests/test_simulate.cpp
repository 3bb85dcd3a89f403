#include <catch2/catch_amalgamated.hpp>

#include "cogsec/disruption.hpp"
#include "cogsec/simulate.hpp"

using namespace cogsec;

namespace {

NetworkSpec two_node_chain(double delta = 0.1) {
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

AttackSignal constant_signal(double level, double horizon) {
  AttackSignal sig;
  sig.horizon = horizon;
  sig.channels.push_back(
      ChannelSignal{{SignalComponent{level, 0.0, std::numbers::pi / 2.0}}, 0.0});
  return sig;
}

}  // namespace

TEST_CASE("zero signal stays at equilibrium") {
  const NetworkSpec spec = two_node_chain();
  AttackSignal sig;
  sig.horizon = 5.0;
  sig.channels.resize(1);
  const Trajectory traj = simulate(spec, AttackSet{{1}}, sig, 0.01);
  CHECK(traj.perf_energy == 0.0);
  CHECK(traj.output_energy.maxCoeff() == 0.0);
  CHECK(traj.states.cwiseAbs().maxCoeff() == 0.0);

  const auto report = is_stealthy(traj, MonitorSet{{0, 1}}, spec);
  CHECK(report.stealthy);
  CHECK(report.margins[0].second == Catch::Approx(0.1));
}

TEST_CASE("scalar closed form: xdot = -x + e^{-t}") {
  // x(t) = t e^{-t}; with unit weight the infinite-horizon energy is 1/4.
  AttackSignal sig;
  sig.horizon = 20.0;
  sig.channels.push_back(ChannelSignal{
      {SignalComponent{1.0, 0.0, std::numbers::pi / 2.0}}, /*decay=*/1.0});
  const Eigen::MatrixXd a = -Eigen::MatrixXd::Identity(1, 1);
  const Eigen::MatrixXd b = Eigen::MatrixXd::Identity(1, 1);
  const Trajectory traj = simulate_linear(a, b, b, sig, 1e-3);
  CHECK(traj.perf_energy == Catch::Approx(0.25).epsilon(1e-3));
  // spot check the state peak x(1) = 1/e
  const auto idx = static_cast<Eigen::Index>(1.0 / 1e-3);
  CHECK(traj.states(idx, 0) == Catch::Approx(std::exp(-1.0)).epsilon(1e-6));
}

TEST_CASE("quadratic scaling in the signal amplitude") {
  const NetworkSpec spec = two_node_chain();
  const AttackSet attack{{1}};
  const Trajectory base = simulate(spec, attack, constant_signal(0.5, 10.0), 0.01);
  const Trajectory twice = simulate(spec, attack, constant_signal(1.0, 10.0), 0.01);
  CHECK(rel_close(twice.perf_energy, 4.0 * base.perf_energy, 1e-6));
  for (int m = 0; m < 2; ++m)
    CHECK(rel_close(twice.output_energy(m), 4.0 * base.output_energy(m), 1e-6));
}

TEST_CASE("dt beyond the stability bound is rejected") {
  const NetworkSpec spec = two_node_chain();  // max |eig| = 3
  CHECK_THROWS_WITH(
      simulate(spec, AttackSet{{1}}, constant_signal(1.0, 1.0), 0.05),
      Catch::Matchers::ContainsSubstring("stability bound"));
}

TEST_CASE("sinusoid energy closed form and admissibility") {
  // unit sinusoid of duration T carries energy about T/2
  AttackSignal sig;
  sig.horizon = 30.0;
  const double omega = 2.0;
  sig.channels.push_back(
      ChannelSignal{{SignalComponent{1.0, omega, 0.0}}, 0.0});
  const double dt = 1e-3 * (2.0 * std::numbers::pi / omega);
  const Eigen::VectorXd energies = signal_energies(sig, dt);
  const double closed_form =
      sig.horizon / 2.0 - std::sin(2.0 * omega * sig.horizon) / (4.0 * omega);
  CHECK(energies(0) == Catch::Approx(closed_form).epsilon(1e-4));

  CHECK(is_admissible(sig, closed_form * 1.01, dt));
  CHECK_FALSE(is_admissible(sig, closed_form * 0.9, dt));

  // rescaling to the budget restores admissibility with equality margin
  const double scale = std::sqrt(closed_form * 0.9 / energies(0));
  sig.channels[0].components[0].amplitude *= scale;
  CHECK(is_admissible(sig, closed_form * 0.9, dt));
}

TEST_CASE("fourth-order convergence of the integrator") {
  const NetworkSpec spec = two_node_chain();
  const AttackSet attack{{0}};
  AttackSignal sig;
  sig.horizon = 10.0;
  sig.channels.push_back(ChannelSignal{
      {SignalComponent{1.0, 1.3, 0.4}, SignalComponent{0.5, 4.0, 1.1}}, 0.2});
  const double j1 = simulate(spec, attack, sig, 0.02).perf_energy;
  const double j2 = simulate(spec, attack, sig, 0.01).perf_energy;
  CHECK(rel_close(j1, j2, 1e-5));
}

TEST_CASE("simulated energy never exceeds the certified disruption") {
  const NetworkSpec spec = two_node_chain(0.05);
  const AttackSet attack{{1}};
  const MonitorSet monitors{{0}};
  const GameBudgets budgets{1, 1, 1.0, 0.0};
  const double q = worst_case_disruption(spec, monitors, attack, budgets.energy).value;

  const auto result =
      randomized_lower_bound(spec, monitors, attack, budgets, 60, /*seed=*/4);
  CHECK(result.best_performance <= q * (1.0 + 1e-3) + 1e-6);
  CHECK(result.feasible_trials >= 1);
  CHECK(result.trials == 60);
}

TEST_CASE("lower bound approaches the unmonitored gain") {
  const NetworkSpec spec = two_node_chain();
  const AttackSet attack{{1}};
  const GameBudgets budgets{1, 1, 1.0, 0.0};
  const double q = worst_case_disruption(spec, MonitorSet{}, attack, 1.0).value;
  const auto result =
      randomized_lower_bound(spec, MonitorSet{}, attack, budgets, 80, 7);
  INFO("q=" << q << " best=" << result.best_performance);
  CHECK(result.best_performance >= 0.8 * q);
  CHECK(result.best_performance <= q * (1.0 + 1e-3) + 1e-6);
  CHECK(is_admissible(result.best_signal, budgets.energy * (1 + 1e-9), 0.005));
}

TEST_CASE("tight thresholds force the search to near zero") {
  NetworkData d;
  d.n_nodes = 2;
  d.interconnection = Eigen::MatrixXd::Zero(2, 2);
  d.interconnection(0, 1) = 1.0;
  d.interconnection(1, 0) = 1.0;
  d.control_gains = Eigen::VectorXd::Ones(2);
  d.perf_weight = Eigen::MatrixXd::Identity(2, 2);
  d.alarm_thresholds = Eigen::VectorXd::Constant(2, 1e-6);
  d.sensor_costs = Eigen::VectorXd::Ones(2);
  const NetworkSpec spec = build_network(d);
  const GameBudgets budgets{1, 2, 1.0, 0.0};
  const auto result = randomized_lower_bound(spec, MonitorSet{{0, 1}},
                                             AttackSet{{1}}, budgets, 30, 12);
  // full monitoring with near-zero thresholds rejects every energetic trial
  CHECK(result.best_performance <= 1e-4);
}
