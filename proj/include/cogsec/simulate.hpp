#pragma once

#include <Eigen/Dense>
#include <numbers>

#include "cogsec/network.hpp"
#include "cogsec/parallel.hpp"

namespace cogsec {

// Time-domain validation of the attacked closed loop
//   xdot = A_c x + B_A zeta(t),  x(0) = 0,
// with classical fixed-step fourth-order integration and trapezoidal signal
// energies. Attack signals are sums of sinusoids with an optional decaying
// envelope, which is rich enough to approach the worst-case gain of a linear
// loop while keeping the search space small.

struct SignalComponent {
  double amplitude = 0.0;
  double omega = 0.0;  // rad/s
  double phase = 0.0;
};

struct ChannelSignal {
  std::vector<SignalComponent> components;
  double decay_rate = 0.0;  // envelope exp(-decay_rate * t), >= 0

  double value(double t) const {
    double v = 0.0;
    for (const auto& c : components)
      v += c.amplitude * std::sin(c.omega * t + c.phase);
    return decay_rate > 0.0 ? v * std::exp(-decay_rate * t) : v;
  }
};

struct AttackSignal {
  std::vector<ChannelSignal> channels;
  double horizon = 0.0;

  void validate(int n_channels) const {
    if (!(horizon > 0)) fail("attack signal: horizon must be positive");
    if (static_cast<int>(channels.size()) != n_channels)
      fail("attack signal: ", channels.size(), " channels for ", n_channels,
           " attack nodes");
    for (const auto& ch : channels) {
      if (ch.decay_rate < 0) fail("attack signal: negative decay rate");
      if (ch.components.size() > 5)
        fail("attack signal: at most 5 sinusoid components per channel, got ",
             ch.components.size());
      for (const auto& c : ch.components)
        if (!std::isfinite(c.amplitude) || !std::isfinite(c.omega) ||
            !std::isfinite(c.phase))
          fail("attack signal: non-finite component parameters");
    }
  }
};

struct Trajectory {
  double dt = 0.0;
  Eigen::MatrixXd states;          // (steps+1) x N, row per sample, x(0) = 0
  Eigen::VectorXd output_energy;   // per node, ||x_m||^2 over [0,H]
  Eigen::VectorXd channel_energy;  // per attack channel, ||zeta_j||^2
  double perf_energy = 0.0;        // J = ||W x||^2 over [0,H]

  double time_at(Eigen::Index step) const { return dt * static_cast<double>(step); }
};

/// Core fixed-step integrator over explicit matrices; the plant-level
/// simulate() wraps it. Step bound: dt <= 0.1 / max|eig(A)|.
inline Trajectory simulate_linear(const Eigen::MatrixXd& a_matrix,
                                  const Eigen::MatrixXd& b_matrix,
                                  const Eigen::MatrixXd& w_matrix,
                                  const AttackSignal& signal, double dt) {
  const auto n = a_matrix.rows();
  const auto n_ch = b_matrix.cols();
  signal.validate(static_cast<int>(n_ch));
  if (!(dt > 0)) fail("simulate: dt must be positive");
  const double radius = spectrum_extent(a_matrix).second;
  if (radius > 0 && dt > 0.1 / radius)
    fail("simulate: dt=", dt, " exceeds the stability bound 0.1/max|eig| = ",
         0.1 / radius);

  const auto steps = static_cast<Eigen::Index>(std::ceil(signal.horizon / dt));
  const Eigen::MatrixXd wq = w_matrix.transpose() * w_matrix;

  Trajectory traj;
  traj.dt = dt;
  traj.states.setZero(steps + 1, n);
  traj.output_energy.setZero(n);
  traj.channel_energy.setZero(n_ch);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd zeta(n_ch), zeta_mid(n_ch), zeta_end(n_ch);
  Eigen::VectorXd k1(n), k2(n), k3(n), k4(n);

  auto eval_signal = [&](double t, Eigen::VectorXd& out) {
    for (Eigen::Index j = 0; j < n_ch; ++j) {
      const double v = signal.channels[j].value(t);
      if (!std::isfinite(v)) fail("simulate: non-finite signal value at t=", t);
      out(j) = v;
    }
  };

  // trapezoid accumulators; the t=0 sample has x=0 so only zeta contributes
  eval_signal(0.0, zeta);
  Eigen::VectorXd out_acc = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd ch_acc = 0.5 * zeta.cwiseProduct(zeta);
  double perf_acc = 0.0;

  for (Eigen::Index step = 0; step < steps; ++step) {
    const double t = dt * static_cast<double>(step);
    eval_signal(t, zeta);
    eval_signal(t + 0.5 * dt, zeta_mid);
    eval_signal(t + dt, zeta_end);

    k1 = a_matrix * x + b_matrix * zeta;
    k2 = a_matrix * (x + 0.5 * dt * k1) + b_matrix * zeta_mid;
    k3 = a_matrix * (x + 0.5 * dt * k2) + b_matrix * zeta_mid;
    k4 = a_matrix * (x + dt * k3) + b_matrix * zeta_end;
    x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    traj.states.row(step + 1) = x.transpose();
    const double weight = step + 1 == steps ? 0.5 : 1.0;
    out_acc += weight * x.cwiseProduct(x);
    ch_acc += weight * zeta_end.cwiseProduct(zeta_end);
    perf_acc += weight * x.dot(wq * x);
  }
  // the final zeta sample was added with weight 1 above; rebalance to 0.5
  ch_acc -= 0.5 * zeta_end.cwiseProduct(zeta_end);

  traj.output_energy = dt * out_acc;
  traj.channel_energy = dt * ch_acc;
  traj.perf_energy = dt * perf_acc;
  return traj;
}

inline Trajectory simulate(const NetworkSpec& spec, const AttackSet& attack,
                           const AttackSignal& signal, double dt) {
  return simulate_linear(spec.a_closed, attack_input_matrix(spec, attack),
                         spec.perf_weight, signal, dt);
}

struct StealthReport {
  bool stealthy = true;
  std::vector<std::pair<int, double>> margins;  // node, delta_m - ||y_m||^2
  int first_violator = -1;
};

inline StealthReport is_stealthy(const Trajectory& traj, const MonitorSet& monitors,
                                 const NetworkSpec& spec) {
  validate_node_list(monitors.nodes, spec.n_nodes, "monitor set");
  if (traj.output_energy.size() != spec.n_nodes)
    fail("is_stealthy: trajectory covers ", traj.output_energy.size(),
         " nodes, spec has ", spec.n_nodes);
  StealthReport report;
  for (int m : monitors.nodes) {
    const double margin = spec.alarm_thresholds(m) - traj.output_energy(m);
    report.margins.emplace_back(m, margin);
    if (margin < 0 && report.stealthy) {
      report.stealthy = false;
      report.first_violator = m;
    }
  }
  return report;
}

/// Per-channel signal energy over [0,H] by trapezoidal quadrature at dt.
inline Eigen::VectorXd signal_energies(const AttackSignal& signal, double dt) {
  signal.validate(static_cast<int>(signal.channels.size()));
  const auto steps = static_cast<Eigen::Index>(std::ceil(signal.horizon / dt));
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(signal.channels.size());
  for (Eigen::Index step = 0; step <= steps; ++step) {
    const double t = dt * static_cast<double>(step);
    const double weight = (step == 0 || step == steps) ? 0.5 : 1.0;
    for (std::size_t j = 0; j < signal.channels.size(); ++j) {
      const double v = signal.channels[j].value(t);
      acc(static_cast<Eigen::Index>(j)) += weight * v * v;
    }
  }
  return dt * acc;
}

inline bool is_admissible(const AttackSignal& signal, double energy, double dt) {
  const Eigen::VectorXd energies = signal_energies(signal, dt);
  return (energies.array() <= energy * (1.0 + 1e-6) + 1e-12).all();
}

struct LowerBoundResult {
  double best_performance = 0.0;  // largest stealthy admissible J found
  AttackSignal best_signal;
  int feasible_trials = 0;
  int trials = 0;
};

struct LowerBoundOptions {
  double horizon = 0.0;  // 0: 50 / |Re lambda_max|
  double dt = 0.0;       // 0: 0.02 / max|eig|
  int workers = 1;
};

/// Seeded random search over admissible stealthy signals; every draw is
/// rescaled to spend the full per-channel energy budget, then rejected if it
/// trips a monitor. Returns the best performance energy found, which lower
/// bounds the disruption value up to discretization error.
inline LowerBoundResult randomized_lower_bound(
    const NetworkSpec& spec, const MonitorSet& monitors, const AttackSet& attack,
    const GameBudgets& budgets, int trials, std::uint64_t seed,
    const LowerBoundOptions& options = {}) {
  if (trials < 1) fail("randomized_lower_bound: trials must be >= 1");
  budgets.validate(spec.n_nodes);
  const double horizon = options.horizon > 0
                             ? options.horizon
                             : 50.0 / std::abs(spec.spectral_abscissa);
  const double dt =
      options.dt > 0 ? options.dt : 0.02 / std::max(1e-6, spec.spectral_radius);
  const int n_ch = static_cast<int>(attack.nodes.size());
  const double omega_lo = 0.01 * std::abs(spec.spectral_abscissa);
  const double omega_hi = 3.0 * spec.spectral_radius;

  // Draw all signals up front from one seeded stream, then evaluate trials
  // in parallel with per-slot results.
  std::mt19937_64 rng(seed);
  std::vector<AttackSignal> drawn(trials);
  for (int t = 0; t < trials; ++t) {
    AttackSignal sig;
    sig.horizon = horizon;
    sig.channels.resize(n_ch);
    for (auto& ch : sig.channels) {
      const int n_comp = 1 + static_cast<int>(uniform_index(rng, 3));
      ch.decay_rate = uniform01(rng) < 0.5
                          ? 0.0
                          : uniform_real(rng, 0.0,
                                         0.5 * std::abs(spec.spectral_abscissa));
      for (int c = 0; c < n_comp; ++c) {
        SignalComponent comp;
        comp.amplitude = uniform_real(rng, 0.2, 1.0);
        if (uniform01(rng) < 0.35) {
          comp.omega = 0.0;
          comp.phase = std::numbers::pi / 2.0;  // constant component
        } else {
          comp.omega = omega_lo * std::exp(uniform_real(rng, 0.0, 1.0) *
                                           std::log(omega_hi / omega_lo));
          comp.phase = uniform_real(rng, 0.0, 2.0 * std::numbers::pi);
        }
        ch.components.push_back(comp);
      }
    }
    // exact rescale: every admissible trial spends the full energy budget
    const Eigen::VectorXd energies = signal_energies(sig, dt);
    for (int j = 0; j < n_ch; ++j) {
      const double e = energies(j);
      const double scale = e > 1e-14 ? std::sqrt(budgets.energy / e) : 0.0;
      for (auto& comp : sig.channels[j].components) comp.amplitude *= scale;
    }
    drawn[t] = std::move(sig);
  }

  std::vector<double> performance(trials, -1.0);  // -1: rejected
  parallel_for(trials, options.workers, [&](int t) {
    const Trajectory traj = simulate(spec, attack, drawn[t], dt);
    if (is_stealthy(traj, monitors, spec).stealthy)
      performance[t] = traj.perf_energy;
  });

  LowerBoundResult result;
  result.trials = trials;
  result.best_signal.horizon = horizon;
  result.best_signal.channels.resize(n_ch);  // zero signal fallback
  for (int t = 0; t < trials; ++t) {
    if (performance[t] < 0) continue;
    ++result.feasible_trials;
    if (performance[t] > result.best_performance) {
      result.best_performance = performance[t];
      result.best_signal = drawn[t];
    }
  }
  return result;
}

}  // namespace cogsec
