#pragma once

#include <optional>

#include "cogsec/adversary.hpp"
#include "cogsec/defender.hpp"

namespace cogsec {

// Finite-depth policy iteration between the defender and the adversary.
// Level 0: the defender draws a monitor set of size beta uniformly at random
// (mt19937_64 keyed by the trace seed, partial Fisher-Yates draw); the
// adversary best-responds. Level k >= 1: the defender optimizes against all
// lower-level adversary policies, then the adversary best-responds again.
// Once the adversary repeats its previous policy the game is frozen: the
// defender's history stops changing as a set, so neither side moves at any
// higher level and the remaining rows are filled by repetition.

struct PolicyTraceRow {
  int level = 0;
  MonitorSet monitors;
  AttackSet attack;
  double disruption = 0.0;          // Q(M_k, A_k)
  double defender_objective = 0.0;  // R_k; level 0 reports kappa'z0 + Q(M_0, A_0)
  bool repeated = false;            // frozen tail after convergence
};

struct PolicyTrace {
  std::vector<PolicyTraceRow> rows;
  std::uint64_t seed = 0;
  std::optional<int> converged_at;  // first level l with A_{l+1} == A_l
};

struct GameOptions {
  bool early_stop = true;  // fill the frozen tail instead of re-solving it
  int workers = 1;
};

inline MonitorSet draw_level0_monitors(std::uint64_t seed, int n_nodes, int beta) {
  std::mt19937_64 rng(seed);
  return MonitorSet{sample_subset(rng, n_nodes, beta)};
}

inline PolicyTrace run_ch_iteration(DisruptionEvaluator& evaluator,
                                    const GameBudgets& budgets, int max_level,
                                    std::uint64_t seed,
                                    const GameOptions& options = {}) {
  const NetworkSpec& spec = evaluator.spec();
  budgets.validate(spec.n_nodes);
  if (max_level < 0) fail("run_ch_iteration: max_level must be >= 0, got ", max_level);

  PolicyTrace trace;
  trace.seed = seed;

  PolicyTraceRow row0;
  row0.level = 0;
  row0.monitors = draw_level0_monitors(seed, spec.n_nodes, budgets.beta);
  AdversaryResponse response;
  try {
    response = best_response_enumerate(evaluator, row0.monitors, budgets);
  } catch (const SolveError& e) {
    throw SolveError(str("level 0: ", e.what()));
  }
  row0.attack = response.best_set;
  row0.disruption = response.best_value;
  row0.defender_objective =
      sensor_cost(spec, row0.monitors) + row0.disruption;  // non-optimized
  trace.rows.push_back(row0);

  std::vector<AttackSet> history{row0.attack};
  for (int k = 1; k <= max_level; ++k) {
    PolicyTraceRow row;
    row.level = k;
    try {
      const DefenderSolution defense = defender_solve(evaluator, history, budgets);
      row.monitors = defense.monitor_set;
      row.defender_objective = defense.objective;
      response = best_response_enumerate(evaluator, row.monitors, budgets);
    } catch (const SolveError& e) {
      throw SolveError(str("level ", k, ": ", e.what()));
    }
    row.attack = response.best_set;
    row.disruption = response.best_value;
    if (!trace.converged_at && row.attack == trace.rows.back().attack) {
      trace.converged_at = k - 1;
      row.repeated = true;
    }
    trace.rows.push_back(row);
    history.push_back(row.attack);

    if (trace.converged_at && options.early_stop) {
      PolicyTraceRow frozen = row;
      frozen.repeated = true;
      for (int rest = k + 1; rest <= max_level; ++rest) {
        frozen.level = rest;
        trace.rows.push_back(frozen);
      }
      break;
    }
    if (trace.converged_at && trace.rows.back().level > *trace.converged_at)
      trace.rows.back().repeated = true;
  }
  return trace;
}

inline PolicyTrace run_ch_iteration(const NetworkSpec& spec,
                                    const GameBudgets& budgets, int max_level,
                                    std::uint64_t seed,
                                    const GameOptions& options = {}) {
  DisruptionEvaluator evaluator(spec, budgets.energy, options.workers);
  return run_ch_iteration(evaluator, budgets, max_level, seed, options);
}

/// First level l whose successor kept the same attack set, if any.
inline std::optional<int> detect_convergence(const PolicyTrace& trace) {
  for (std::size_t i = 0; i + 1 < trace.rows.size(); ++i)
    if (trace.rows[i + 1].attack == trace.rows[i].attack)
      return trace.rows[i].level;
  return std::nullopt;
}

/// Grid of Q(M_k, A_l) for every pair of defender level k and adversary
/// level l present in the trace.
inline Eigen::MatrixXd outcome_grid(DisruptionEvaluator& evaluator,
                                    const PolicyTrace& trace) {
  const int levels = static_cast<int>(trace.rows.size());
  std::vector<std::pair<MonitorSet, AttackSet>> pairs;
  pairs.reserve(static_cast<std::size_t>(levels) * levels);
  for (int k = 0; k < levels; ++k)
    for (int l = 0; l < levels; ++l)
      pairs.emplace_back(trace.rows[k].monitors, trace.rows[l].attack);
  const auto certs = evaluator.values(pairs);
  Eigen::MatrixXd grid(levels, levels);
  for (int k = 0; k < levels; ++k)
    for (int l = 0; l < levels; ++l)
      grid(k, l) = certs[static_cast<std::size_t>(k) * levels + l].value;
  return grid;
}

inline Eigen::MatrixXd outcome_grid(const NetworkSpec& spec,
                                    const GameBudgets& budgets,
                                    const PolicyTrace& trace, int workers = 1) {
  DisruptionEvaluator evaluator(spec, budgets.energy, workers);
  return outcome_grid(evaluator, trace);
}

struct GridViolation {
  int defender_level = 0;
  int adversary_level = 0;
  double magnitude = 0.0;
};

/// Diagnostics over a reasoning-outcome grid: per defender level, whether the
/// row maximum sits on the diagonal (the adversary gains nothing by
/// mismatching); per adversary level, whether a one-step-ahead defender
/// lowers the disruption. Violations beyond tolerance are reported with
/// magnitudes, not asserted away.
struct MismatchReport {
  std::vector<bool> row_max_on_diagonal;
  std::vector<bool> one_step_defense_benefit;
  std::vector<GridViolation> adversary_violations;  // off-diagonal row max
  std::vector<GridViolation> defender_violations;   // Q increased one row down
  static constexpr double tolerance = 1e-6;

  bool clean() const {
    return adversary_violations.empty() && defender_violations.empty();
  }
};

inline MismatchReport mismatch_report(const Eigen::MatrixXd& grid) {
  if (grid.rows() != grid.cols())
    fail("mismatch_report: grid must be square, got ", grid.rows(), "x",
         grid.cols());
  const int levels = static_cast<int>(grid.rows());
  MismatchReport report;
  for (int k = 0; k < levels; ++k) {
    bool on_diagonal = true;
    for (int l = 0; l < levels; ++l)
      if (grid(k, l) > grid(k, k) + MismatchReport::tolerance) {
        on_diagonal = false;
        report.adversary_violations.push_back(
            GridViolation{k, l, grid(k, l) - grid(k, k)});
      }
    report.row_max_on_diagonal.push_back(on_diagonal);
  }
  for (int l = 0; l + 1 < levels; ++l) {
    const bool benefit =
        grid(l + 1, l) <= grid(l, l) + MismatchReport::tolerance;
    report.one_step_defense_benefit.push_back(benefit);
    if (!benefit)
      report.defender_violations.push_back(
          GridViolation{l + 1, l, grid(l + 1, l) - grid(l, l)});
  }
  return report;
}

/// Re-derive every trace row from its stored predecessors and compare.
/// Returns human-readable discrepancies; empty means the trace is consistent.
inline std::vector<std::string> recheck_trace(DisruptionEvaluator& evaluator,
                                              const GameBudgets& budgets,
                                              const PolicyTrace& trace) {
  std::vector<std::string> issues;
  if (trace.rows.empty()) return issues;
  const NetworkSpec& spec = evaluator.spec();

  const MonitorSet m0 =
      draw_level0_monitors(trace.seed, spec.n_nodes, budgets.beta);
  if (!(m0 == trace.rows[0].monitors))
    issues.push_back(str("level 0 monitors ",
                         format_node_set(trace.rows[0].monitors.nodes),
                         " do not match the seeded draw ",
                         format_node_set(m0.nodes)));

  std::vector<AttackSet> history;
  for (std::size_t k = 0; k < trace.rows.size(); ++k) {
    const auto& row = trace.rows[k];
    if (k > 0) {
      const DefenderSolution defense = defender_solve(evaluator, history, budgets);
      if (!(defense.monitor_set == row.monitors))
        issues.push_back(str("level ", row.level, ": stored monitors ",
                             format_node_set(row.monitors.nodes),
                             " but defender recomputes ",
                             format_node_set(defense.monitor_set.nodes)));
      if (!rel_close(defense.objective, row.defender_objective, 1e-6))
        issues.push_back(str("level ", row.level, ": stored objective ",
                             row.defender_objective, " but defender recomputes ",
                             defense.objective));
    }
    const AdversaryResponse response =
        best_response_enumerate(evaluator, row.monitors, budgets);
    if (!(response.best_set == row.attack))
      issues.push_back(str("level ", row.level, ": stored attack ",
                           format_node_set(row.attack.nodes),
                           " but adversary recomputes ",
                           format_node_set(response.best_set.nodes)));
    if (!rel_close(response.best_value, row.disruption, 1e-6))
      issues.push_back(str("level ", row.level, ": stored disruption ",
                           row.disruption, " but adversary recomputes ",
                           response.best_value));
    history.push_back(row.attack);
  }
  return issues;
}

}  // namespace cogsec
