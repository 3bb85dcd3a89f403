#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <optional>

#include "cogsec/common.hpp"

namespace cogsec {

// Closed loop of the networked plant: each node i runs
//   xdot_i = -theta_i x_i + sum_j A_ij (x_j - x_i)
// after the local term A_ii is cancelled by the control law, so
//   A_c[i][i] = -theta_i - sum_j A_ij,   A_c[i][j] = A_ij  (i != j).

constexpr double kHurwitzTol = 1e-9;

/// Raw plant description as parsed from a scenario file.
struct NetworkData {
  int n_nodes = 0;
  Eigen::MatrixXd interconnection;   // A, nonnegative, zero diagonal
  Eigen::VectorXd control_gains;     // theta > 0
  Eigen::MatrixXd perf_weight;       // W, performance output p = W x
  Eigen::VectorXd alarm_thresholds;  // delta > 0
  Eigen::VectorXd sensor_costs;      // kappa > 0
  Eigen::VectorXd local_dynamics;    // A_ii, informational only
};

struct NetworkSpec {
  int n_nodes = 0;
  Eigen::MatrixXd interconnection;
  Eigen::VectorXd control_gains;
  Eigen::MatrixXd perf_weight;
  Eigen::VectorXd alarm_thresholds;
  Eigen::VectorXd sensor_costs;
  Eigen::VectorXd local_dynamics;

  Eigen::MatrixXd a_closed;        // cached closed-loop matrix
  double spectral_abscissa = 0.0;  // max Re(eig(A_c))
  double spectral_radius = 0.0;    // max |eig(A_c)|
};

struct GameBudgets {
  int alpha = 1;       // number of attack nodes, exact
  int beta = 1;        // max number of monitor nodes
  double energy = 1.0; // per-channel attack energy bound E
  double big_m = 0.0;  // big-M for the defender reformulation; 0 = derive default

  void validate(int n_nodes) const {
    if (alpha < 1 || alpha > n_nodes)
      fail("budgets: alpha=", alpha, " must be in [1,", n_nodes, "]");
    if (beta < 0 || beta > n_nodes)
      fail("budgets: beta=", beta, " must be in [0,", n_nodes, "]");
    if (!(energy > 0)) fail("budgets: energy must be positive, got ", energy);
    if (big_m < 0) fail("budgets: big_m must be positive, got ", big_m);
  }
};

/// Exactly alpha attack nodes, sorted ascending, 0-based.
struct AttackSet {
  std::vector<int> nodes;

  bool operator==(const AttackSet& o) const { return nodes == o.nodes; }
  bool operator<(const AttackSet& o) const { return nodes < o.nodes; }
};

/// Up to beta monitor nodes, sorted ascending, 0-based.
struct MonitorSet {
  std::vector<int> nodes;

  bool operator==(const MonitorSet& o) const { return nodes == o.nodes; }
  bool operator<(const MonitorSet& o) const { return nodes < o.nodes; }

  /// Binary indicator z with z_m = 1 iff m is monitored.
  Eigen::VectorXd indicator(int n_nodes) const {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n_nodes);
    for (int m : nodes) z(m) = 1.0;
    return z;
  }
};

inline void validate_node_list(const std::vector<int>& nodes, int n_nodes,
                               const char* what) {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] < 0 || nodes[i] >= n_nodes)
      fail(what, ": node index ", nodes[i] + 1, " outside [1,", n_nodes, "]");
    if (i > 0 && nodes[i] <= nodes[i - 1])
      fail(what, ": node list must be strictly ascending at position ", i + 1);
  }
}

inline AttackSet make_attack_set(std::vector<int> nodes, int n_nodes, int alpha) {
  std::sort(nodes.begin(), nodes.end());
  validate_node_list(nodes, n_nodes, "attack set");
  if (static_cast<int>(nodes.size()) != alpha)
    fail("attack set ", format_node_set(nodes), " must have exactly ", alpha,
         " nodes");
  return AttackSet{std::move(nodes)};
}

inline MonitorSet make_monitor_set(std::vector<int> nodes, int n_nodes, int beta) {
  std::sort(nodes.begin(), nodes.end());
  validate_node_list(nodes, n_nodes, "monitor set");
  if (static_cast<int>(nodes.size()) > beta)
    fail("monitor set ", format_node_set(nodes), " exceeds sensor budget ", beta);
  return MonitorSet{std::move(nodes)};
}

inline Eigen::MatrixXd closed_loop_matrix(const Eigen::MatrixXd& interconnection,
                                          const Eigen::VectorXd& control_gains) {
  const auto n = interconnection.rows();
  Eigen::MatrixXd ac = interconnection;
  for (Eigen::Index i = 0; i < n; ++i)
    ac(i, i) = -control_gains(i) - interconnection.row(i).sum();
  return ac;
}

inline Eigen::MatrixXd closed_loop_matrix(const NetworkSpec& spec) {
  return closed_loop_matrix(spec.interconnection, spec.control_gains);
}

inline std::pair<double, double> spectrum_extent(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> eig(m, /*computeEigenvectors=*/false);
  double abscissa = -std::numeric_limits<double>::infinity();
  double radius = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    abscissa = std::max(abscissa, eig.eigenvalues()(i).real());
    radius = std::max(radius, std::abs(eig.eigenvalues()(i)));
  }
  return {abscissa, radius};
}

/// Validate a raw plant description and cache the closed loop.
/// Rejects dimension mismatches, nonpositive theta/delta/kappa, negative or
/// diagonal interconnection gains, and a non-Hurwitz closed loop.
inline NetworkSpec build_network(const NetworkData& raw) {
  const int n = raw.n_nodes;
  if (n < 1) fail("network: n_nodes must be >= 1, got ", n);
  if (raw.interconnection.rows() != n || raw.interconnection.cols() != n)
    fail("network: interconnection must be ", n, "x", n, ", got ",
         raw.interconnection.rows(), "x", raw.interconnection.cols());
  auto check_len = [&](const Eigen::VectorXd& v, const char* name) {
    if (v.size() != n)
      fail("network: ", name, " must have length ", n, ", got ", v.size());
  };
  check_len(raw.control_gains, "control_gains");
  check_len(raw.alarm_thresholds, "alarm_thresholds");
  check_len(raw.sensor_costs, "sensor_costs");
  if (raw.perf_weight.rows() != n || raw.perf_weight.cols() != n)
    fail("network: perf_weight must be ", n, "x", n, ", got ",
         raw.perf_weight.rows(), "x", raw.perf_weight.cols());

  for (int i = 0; i < n; ++i) {
    if (!(raw.control_gains(i) > 0))
      fail("network: control gain theta_", i + 1, " must be positive, got ",
           raw.control_gains(i));
    if (!(raw.alarm_thresholds(i) > 0))
      fail("network: alarm threshold delta_", i + 1, " must be positive, got ",
           raw.alarm_thresholds(i));
    if (!(raw.sensor_costs(i) > 0))
      fail("network: sensor cost kappa_", i + 1, " must be positive, got ",
           raw.sensor_costs(i));
    if (raw.interconnection(i, i) != 0.0)
      fail("network: interconnection diagonal entry at node ", i + 1,
           " must be zero");
    for (int j = 0; j < n; ++j)
      if (raw.interconnection(i, j) < 0)
        fail("network: interconnection gain A_", i + 1, ",", j + 1,
             " must be nonnegative, got ", raw.interconnection(i, j));
  }

  NetworkSpec spec;
  spec.n_nodes = n;
  spec.interconnection = raw.interconnection;
  spec.control_gains = raw.control_gains;
  spec.perf_weight = raw.perf_weight;
  spec.alarm_thresholds = raw.alarm_thresholds;
  spec.sensor_costs = raw.sensor_costs;
  spec.local_dynamics =
      raw.local_dynamics.size() == n ? raw.local_dynamics : Eigen::VectorXd::Zero(n);
  spec.a_closed = closed_loop_matrix(raw.interconnection, raw.control_gains);
  std::tie(spec.spectral_abscissa, spec.spectral_radius) =
      spectrum_extent(spec.a_closed);
  if (!(spec.spectral_abscissa < -kHurwitzTol))
    fail("network: closed loop is not Hurwitz, max Re(eig) = ",
         spec.spectral_abscissa);
  return spec;
}

/// Performance quadratic form W'W (W itself may be non-symmetric).
inline Eigen::MatrixXd perf_quadratic(const NetworkSpec& spec) {
  return spec.perf_weight.transpose() * spec.perf_weight;
}

/// Attack input matrix B_A = [A e_a1, ..., A e_aK]: the attack on node a
/// enters its neighbors' dynamics and never node a itself.
inline Eigen::MatrixXd attack_input_matrix(const NetworkSpec& spec,
                                           const AttackSet& attack,
                                           std::vector<std::string>* warnings = nullptr) {
  validate_node_list(attack.nodes, spec.n_nodes, "attack set");
  Eigen::MatrixXd b(spec.n_nodes, static_cast<Eigen::Index>(attack.nodes.size()));
  for (std::size_t j = 0; j < attack.nodes.size(); ++j) {
    b.col(static_cast<Eigen::Index>(j)) = spec.interconnection.col(attack.nodes[j]);
    if (warnings && b.col(static_cast<Eigen::Index>(j)).isZero())
      warnings->push_back(str("attack node ", attack.nodes[j] + 1,
                              " has no neighbors; its channel injects nothing"));
  }
  return b;
}

/// All C(N,alpha) attack sets in lexicographic order.
inline std::vector<AttackSet> enumerate_attack_sets(int n_nodes, int alpha) {
  if (alpha > n_nodes)
    fail("enumerate_attack_sets: alpha=", alpha, " exceeds N=", n_nodes);
  std::vector<AttackSet> out;
  if (alpha < 0) return out;
  std::vector<int> comb(alpha);
  for (int i = 0; i < alpha; ++i) comb[i] = i;
  while (true) {
    out.push_back(AttackSet{comb});
    int i = alpha - 1;
    while (i >= 0 && comb[i] == n_nodes - alpha + i) --i;
    if (i < 0) break;
    ++comb[i];
    for (int j = i + 1; j < alpha; ++j) comb[j] = comb[j - 1] + 1;
  }
  return out;
}

/// All monitor sets of size 0..beta, ordered by (size, lexicographic).
inline std::vector<MonitorSet> enumerate_monitor_sets(int n_nodes, int beta) {
  std::vector<MonitorSet> out;
  for (int size = 0; size <= std::min(beta, n_nodes); ++size)
    for (const auto& s : enumerate_attack_sets(n_nodes, size))
      out.push_back(MonitorSet{s.nodes});
  return out;
}

struct RandomNetworkOptions {
  double edge_density = 0.3;            // probability of an undirected edge
  double gain_lo = 0.2, gain_hi = 1.0;  // interconnection gains A_ij
  double theta_lo = 0.5, theta_hi = 2.0;
  double weight_lo = 0.5, weight_hi = 3.0;  // diagonal performance weights
  double delta_lo = 0.05, delta_hi = 0.5;   // alarm thresholds
  double kappa_lo = 1.0, kappa_hi = 1.0;    // sensor costs
  int max_retries = 20;
};

/// Seeded random plant generator; deterministic for a fixed seed.
/// Resamples theta upward until the closed loop is Hurwitz (bounded retries).
inline NetworkSpec random_network(std::uint64_t seed, int n_nodes,
                                  const RandomNetworkOptions& opt = {}) {
  if (n_nodes < 1) fail("random_network: n_nodes must be >= 1");
  if (!(opt.edge_density > 0.0) || opt.edge_density > 1.0)
    fail("random_network: edge_density must be in (0,1], got ", opt.edge_density);
  if (opt.gain_lo <= 0 || opt.gain_hi < opt.gain_lo)
    fail("random_network: invalid gain range");
  std::mt19937_64 rng(seed);

  NetworkData data;
  data.n_nodes = n_nodes;
  data.interconnection = Eigen::MatrixXd::Zero(n_nodes, n_nodes);
  for (int i = 0; i < n_nodes; ++i)
    for (int j = i + 1; j < n_nodes; ++j)
      if (uniform01(rng) < opt.edge_density) {
        data.interconnection(i, j) = uniform_real(rng, opt.gain_lo, opt.gain_hi);
        data.interconnection(j, i) = uniform_real(rng, opt.gain_lo, opt.gain_hi);
      }
  data.perf_weight = Eigen::MatrixXd::Zero(n_nodes, n_nodes);
  data.alarm_thresholds.resize(n_nodes);
  data.sensor_costs.resize(n_nodes);
  data.local_dynamics.resize(n_nodes);
  for (int i = 0; i < n_nodes; ++i) {
    data.perf_weight(i, i) = uniform_real(rng, opt.weight_lo, opt.weight_hi);
    data.alarm_thresholds(i) = uniform_real(rng, opt.delta_lo, opt.delta_hi);
    data.sensor_costs(i) = uniform_real(rng, opt.kappa_lo, opt.kappa_hi);
    data.local_dynamics(i) = uniform_real(rng, -1.0, 1.0);
  }

  double scale = 1.0;
  for (int attempt = 0; attempt < opt.max_retries; ++attempt) {
    data.control_gains.resize(n_nodes);
    for (int i = 0; i < n_nodes; ++i)
      data.control_gains(i) = scale * uniform_real(rng, opt.theta_lo, opt.theta_hi);
    try {
      return build_network(data);
    } catch (const Error&) {
      scale *= 2.0;  // push the closed loop further left and retry
    }
  }
  fail("random_network: retries exhausted without a Hurwitz closed loop");
}

}  // namespace cogsec
