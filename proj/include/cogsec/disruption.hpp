#pragma once

#include <complex>
#include <map>
#include <mutex>

#include "cogsec/conic.hpp"
#include "cogsec/ipm.hpp"
#include "cogsec/network.hpp"
#include "cogsec/parallel.hpp"

namespace cogsec {

// Worst-case disruption Q(M,A): the largest performance-output energy an
// energy-bounded attack through the channels of A can cause while every
// monitored output energy stays below its alarm threshold. Computed from the
// dual / dissipation form: minimize delta'gamma + E 1'psi over (gamma, psi, P)
// subject to
//   [ Ac'P + P Ac + W'W - diag(gamma o z)    P B_A        ]
//   [ B_A' P                                 -diag(psi)   ]  <= 0
// with gamma supported on the monitor set, psi > 0, P symmetric free.

/// Relative tolerance below which competing policy values count as tied and
/// the deterministic lexicographic tie-break applies.
constexpr double kNearTieRel = 1e-6;

/// Solver profile for disruption certificates. The stationarity residual of
/// these low-rank-endgame programs plateaus near 1e-7 in double precision, so
/// feasibility is accepted at 1e-6 while the duality gap stays tight; the
/// returned interior points are verified exactly feasible by verify_solution.
inline SolverSettings disruption_solver_settings() {
  return SolverSettings{1e-6, 1e-8, 200};
}

struct DisruptionCertificate {
  double value = 0.0;            // Q(M,A)
  Eigen::VectorXd gamma;         // length N, zero off-monitor
  Eigen::VectorXd psi;           // length alpha
  Eigen::MatrixXd storage;       // symmetric P
  SolveStatus solver_status = SolveStatus::NumericFailure;
  double max_lmi_residual = 0.0;
  int iterations = 0;
};

namespace detail {

/// Index bookkeeping for the assembled program.
struct DisruptionLayout {
  std::vector<int> gamma_vars;              // one per monitor node, in order
  std::vector<int> psi_vars;                // one per attack channel
  std::vector<std::vector<int>> p_vars;     // upper-triangular P indices
};

inline DisruptionLayout assemble_disruption_lmi_impl(
    const NetworkSpec& spec, const MonitorSet& monitors, const AttackSet& attack,
    double energy, ConicProgram& program, bool with_objective = true) {
  const int n = spec.n_nodes;
  const int alpha = static_cast<int>(attack.nodes.size());
  validate_node_list(monitors.nodes, n, "monitor set");
  const Eigen::MatrixXd b_attack = attack_input_matrix(spec, attack);
  const Eigen::MatrixXd wq = perf_quadratic(spec);
  const Eigen::MatrixXd& ac = spec.a_closed;
  const int dim = n + alpha;

  DisruptionLayout layout;
  layout.p_vars.assign(n, std::vector<int>(n, -1));

  std::vector<std::pair<int, Eigen::MatrixXd>> terms;
  for (int m : monitors.nodes) {
    const int var = program.add_variable(str("gamma_", m + 1), VarSign::Positive);
    if (with_objective) program.set_objective(var, spec.alarm_thresholds(m));
    layout.gamma_vars.push_back(var);
    Eigen::MatrixXd coeff = Eigen::MatrixXd::Zero(dim, dim);
    coeff(m, m) = -1.0;
    terms.emplace_back(var, std::move(coeff));
  }
  for (int j = 0; j < alpha; ++j) {
    const int var =
        program.add_variable(str("psi_", attack.nodes[j] + 1), VarSign::Positive);
    if (with_objective) program.set_objective(var, energy);
    layout.psi_vars.push_back(var);
    Eigen::MatrixXd coeff = Eigen::MatrixXd::Zero(dim, dim);
    coeff(n + j, n + j) = -1.0;
    terms.emplace_back(var, std::move(coeff));
  }
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) {
      const int var =
          program.add_variable(str("p_", a + 1, "_", b + 1), VarSign::Free);
      layout.p_vars[a][b] = layout.p_vars[b][a] = var;
      Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(n, n);
      basis(a, b) = 1.0;
      basis(b, a) = 1.0;
      Eigen::MatrixXd coeff = Eigen::MatrixXd::Zero(dim, dim);
      coeff.topLeftCorner(n, n) = ac.transpose() * basis + basis * ac;
      coeff.topRightCorner(n, alpha) = basis * b_attack;
      coeff.bottomLeftCorner(alpha, n) = b_attack.transpose() * basis;
      terms.emplace_back(var, std::move(coeff));
    }

  Eigen::MatrixXd constant = Eigen::MatrixXd::Zero(dim, dim);
  constant.topLeftCorner(n, n) = wq;
  program.add_lmi_block(constant, terms);
  return layout;
}

}  // namespace detail

/// Assemble the dual disruption program for external inspection or solving.
inline ConicProgram assemble_disruption_lmi(const NetworkSpec& spec,
                                            const MonitorSet& monitors,
                                            const AttackSet& attack,
                                            double energy) {
  ConicProgram program;
  detail::assemble_disruption_lmi_impl(spec, monitors, attack, energy, program);
  return program;
}

inline DisruptionCertificate worst_case_disruption(
    const NetworkSpec& spec, const MonitorSet& monitors, const AttackSet& attack,
    double energy, const SolverSettings& settings = disruption_solver_settings()) {
  if (!(energy > 0)) fail("worst_case_disruption: energy must be positive");
  ConicProgram program;
  const auto layout =
      detail::assemble_disruption_lmi_impl(spec, monitors, attack, energy, program);
  const ConicSolution sol = solve(program, settings);
  if (sol.status != SolveStatus::Optimal)
    throw SolveError(str("disruption solve for monitors ",
                         format_node_set(monitors.nodes), ", attack ",
                         format_node_set(attack.nodes), " ended with status ",
                         to_string(sol.status), "\n", program.dump()));

  DisruptionCertificate cert;
  cert.value = sol.objective_value;
  cert.solver_status = sol.status;
  cert.max_lmi_residual = sol.max_lmi_residual;
  cert.iterations = sol.iterations;
  cert.gamma = Eigen::VectorXd::Zero(spec.n_nodes);
  for (std::size_t i = 0; i < monitors.nodes.size(); ++i)
    cert.gamma(monitors.nodes[i]) = sol.values(layout.gamma_vars[i]);
  cert.psi.resize(static_cast<Eigen::Index>(attack.nodes.size()));
  for (std::size_t j = 0; j < attack.nodes.size(); ++j)
    cert.psi(static_cast<Eigen::Index>(j)) = sol.values(layout.psi_vars[j]);
  cert.storage.resize(spec.n_nodes, spec.n_nodes);
  for (int a = 0; a < spec.n_nodes; ++a)
    for (int b = 0; b < spec.n_nodes; ++b)
      cert.storage(a, b) = sol.values(layout.p_vars[a][b]);
  return cert;
}

/// Memoizing batch evaluator of Q(M,A) over one plant. Pairs are solved at
/// most once; batch evaluation fans out over a worker pool with per-slot
/// results, so values are schedule-independent.
class DisruptionEvaluator {
public:
  DisruptionEvaluator(const NetworkSpec& spec, double energy, int workers = 1,
                      SolverSettings settings = disruption_solver_settings())
      : spec_(spec), energy_(energy), workers_(std::max(1, workers)),
        settings_(settings) {}

  const NetworkSpec& spec() const { return spec_; }
  double energy() const { return energy_; }
  int workers() const { return workers_; }

  DisruptionCertificate value(const MonitorSet& monitors, const AttackSet& attack) {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      if (const auto it = cache_.find(Key{monitors.nodes, attack.nodes});
          it != cache_.end())
        return it->second;
    }
    DisruptionCertificate cert =
        worst_case_disruption(spec_, monitors, attack, energy_, settings_);
    std::lock_guard<std::mutex> lock(mutex_);
    return cache_.emplace(Key{monitors.nodes, attack.nodes}, std::move(cert))
        .first->second;
  }

  std::vector<DisruptionCertificate> values(
      const std::vector<std::pair<MonitorSet, AttackSet>>& pairs) {
    std::vector<DisruptionCertificate> out(pairs.size());
    std::vector<int> missing;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto it =
            cache_.find(Key{pairs[i].first.nodes, pairs[i].second.nodes});
        if (it != cache_.end())
          out[i] = it->second;
        else
          missing.push_back(static_cast<int>(i));
      }
    }
    parallel_for(static_cast<int>(missing.size()), workers_, [&](int k) {
      const auto& [monitors, attack] = pairs[missing[k]];
      out[missing[k]] =
          worst_case_disruption(spec_, monitors, attack, energy_, settings_);
    });
    std::lock_guard<std::mutex> lock(mutex_);
    for (int i : missing)
      cache_.emplace(Key{pairs[i].first.nodes, pairs[i].second.nodes}, out[i]);
    return out;
  }

  std::size_t cache_size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return cache_.size();
  }

private:
  using Key = std::pair<std::vector<int>, std::vector<int>>;
  NetworkSpec spec_;
  double energy_;
  int workers_;
  SolverSettings settings_;
  mutable std::mutex mutex_;
  std::map<Key, DisruptionCertificate> cache_;
};

/// Independent frequency-domain oracle for the unmonitored single-channel
/// case: E * sup_w ||W (jwI - Ac)^-1 B||^2 over a log grid plus w = 0, with a
/// parabolic refinement around the best grid point. The refined point is
/// evaluated exactly, so the result stays a lower bound on the true gain.
inline double unmonitored_gain_oracle(const NetworkSpec& spec,
                                      const AttackSet& attack, double energy,
                                      int grid_points = 400) {
  if (attack.nodes.size() != 1)
    fail("unmonitored_gain_oracle: requires a single attack channel, got ",
         attack.nodes.size());
  if (!(spec.spectral_abscissa < 0))
    fail("unmonitored_gain_oracle: closed loop is not Hurwitz");
  const Eigen::VectorXd b = attack_input_matrix(spec, attack).col(0);
  if (b.isZero()) return 0.0;

  using Cplx = std::complex<double>;
  const Eigen::MatrixXcd ac = spec.a_closed.cast<Cplx>();
  const Eigen::MatrixXcd w = spec.perf_weight.cast<Cplx>();
  const Eigen::VectorXcd bc = b.cast<Cplx>();
  const auto n = spec.a_closed.rows();
  auto gain_sq = [&](double omega) {
    Eigen::MatrixXcd shifted = Cplx(0.0, omega) * Eigen::MatrixXcd::Identity(n, n) - ac;
    Eigen::VectorXcd h = w * shifted.partialPivLu().solve(bc);
    return h.squaredNorm();
  };

  const double w_lo = std::max(1e-4, 1e-3 * spec.spectral_radius);
  const double w_hi = 1e3 * spec.spectral_radius;
  std::vector<double> grid;
  grid.reserve(grid_points + 1);
  grid.push_back(0.0);
  const double ratio = std::log(w_hi / w_lo) / std::max(1, grid_points - 1);
  for (int i = 0; i < grid_points; ++i) grid.push_back(w_lo * std::exp(ratio * i));

  double best = 0.0;
  std::size_t best_idx = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double g = gain_sq(grid[i]);
    if (g > best) {
      best = g;
      best_idx = i;
    }
  }
  // One parabolic refinement in log-frequency around an interior peak.
  if (best_idx > 1 && best_idx + 1 < grid.size()) {
    const double x0 = std::log(grid[best_idx - 1]), x1 = std::log(grid[best_idx]),
                 x2 = std::log(grid[best_idx + 1]);
    const double f0 = gain_sq(grid[best_idx - 1]), f1 = best,
                 f2 = gain_sq(grid[best_idx + 1]);
    const double denom = (f0 - 2 * f1 + f2);
    if (denom < 0) {
      const double xv = x1 - 0.5 * (x2 - x1) * (f2 - f0) / denom;
      if (std::isfinite(xv) && xv > x0 && xv < x2)
        best = std::max(best, gain_sq(std::exp(xv)));
    }
  }
  return energy * best;
}

}  // namespace cogsec
