#pragma once

#include <map>

#include "cogsec/disruption.hpp"

namespace cogsec {

// CH-k adversary best response: the attack set of size alpha maximizing
// Q(M_k, A) for the fixed monitor set M_k. The primary path enumerates all
// C(N,alpha) candidates; the joint path solves one coupled program with a
// shared top value Q_k and per-set slack eps_A >= 0 so that the best set is
// the one whose slack vanishes. Both paths use the same deterministic
// tie-break: lexicographically smallest set among near-best values.

enum class AdversaryMethod { Enumeration, JointSdp };

struct AdversaryResponse {
  AttackSet best_set;
  double best_value = 0.0;                 // Q_k = Q(M_k, A_k)
  std::map<AttackSet, double> gaps;        // eps_A = Q_k - Q(M_k, A)
  AdversaryMethod method = AdversaryMethod::Enumeration;
};

/// Default coupling weight: strictly dominates the sum of slacks.
inline double default_joint_weight(int n_nodes, int alpha) {
  return 10.0 * static_cast<double>(binomial(n_nodes, alpha));
}

inline AdversaryResponse best_response_enumerate(DisruptionEvaluator& evaluator,
                                                 const MonitorSet& monitors,
                                                 const GameBudgets& budgets) {
  const NetworkSpec& spec = evaluator.spec();
  budgets.validate(spec.n_nodes);
  const auto candidates = enumerate_attack_sets(spec.n_nodes, budgets.alpha);

  std::vector<std::pair<MonitorSet, AttackSet>> pairs;
  pairs.reserve(candidates.size());
  for (const auto& a : candidates) pairs.emplace_back(monitors, a);
  std::vector<DisruptionCertificate> certs;
  try {
    certs = evaluator.values(pairs);
  } catch (const SolveError& e) {
    throw SolveError(str("adversary best response against monitors ",
                         format_node_set(monitors.nodes), " failed: ", e.what()));
  }

  double best = -std::numeric_limits<double>::infinity();
  for (const auto& c : certs) best = std::max(best, c.value);

  AdversaryResponse response;
  response.method = AdversaryMethod::Enumeration;
  response.best_value = best;
  const double tie = kNearTieRel * std::max(1.0, std::abs(best));
  int chosen = -1;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (certs[i].value >= best - tie) {
      chosen = static_cast<int>(i);  // first hit is lexicographically smallest
      break;
    }
  response.best_set = candidates[chosen];
  for (std::size_t i = 0; i < candidates.size(); ++i)
    response.gaps.emplace(candidates[i], best - certs[i].value);
  return response;
}

inline AdversaryResponse best_response_enumerate(const NetworkSpec& spec,
                                                 const MonitorSet& monitors,
                                                 const GameBudgets& budgets,
                                                 int workers = 1) {
  DisruptionEvaluator evaluator(spec, budgets.energy, workers);
  return best_response_enumerate(evaluator, monitors, budgets);
}

/// Joint coupled-program path. weight_r must exceed the number of attack
/// sets; the result is cross-checked against a direct per-set solve of the
/// winning set and an under-weighted coupling is reported, never absorbed.
inline AdversaryResponse best_response_joint(
    const NetworkSpec& spec, const MonitorSet& monitors,
    const GameBudgets& budgets, double weight_r = 0.0,
    const SolverSettings& settings = disruption_solver_settings()) {
  budgets.validate(spec.n_nodes);
  const auto candidates = enumerate_attack_sets(spec.n_nodes, budgets.alpha);
  if (weight_r == 0.0)
    weight_r = default_joint_weight(spec.n_nodes, budgets.alpha);
  if (weight_r <= static_cast<double>(candidates.size()))
    fail("best_response_joint: weight_r=", weight_r,
         " is under-weighted; it must exceed the ", candidates.size(),
         " attack sets so the shared top value cannot inflate");

  ConicProgram program;
  const int q_var = program.add_variable("q_top", VarSign::Positive);
  program.set_objective(q_var, weight_r);

  struct SetVars {
    detail::DisruptionLayout layout;
    int eps = -1;
  };
  std::vector<SetVars> sets(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    sets[i].layout = detail::assemble_disruption_lmi_impl(
        spec, monitors, candidates[i], budgets.energy, program,
        /*with_objective=*/false);
    sets[i].eps = program.add_variable(
        str("eps_", format_node_set(candidates[i].nodes)), VarSign::NonNegative);
    program.set_objective(sets[i].eps, -1.0);

    // delta'gamma + E 1'psi + eps <= Q_k
    std::vector<int> vars;
    std::vector<double> coeffs;
    for (std::size_t g = 0; g < monitors.nodes.size(); ++g) {
      vars.push_back(sets[i].layout.gamma_vars[g]);
      coeffs.push_back(spec.alarm_thresholds(monitors.nodes[g]));
    }
    for (int p : sets[i].layout.psi_vars) {
      vars.push_back(p);
      coeffs.push_back(budgets.energy);
    }
    vars.push_back(sets[i].eps);
    coeffs.push_back(1.0);
    vars.push_back(q_var);
    coeffs.push_back(-1.0);
    program.add_linear_constraint(std::move(vars), std::move(coeffs), 0.0);
  }

  const ConicSolution sol = solve(program, settings);
  if (sol.status != SolveStatus::Optimal)
    throw SolveError(str("joint adversary program against monitors ",
                         format_node_set(monitors.nodes), " ended with status ",
                         to_string(sol.status)));

  AdversaryResponse response;
  response.method = AdversaryMethod::JointSdp;
  response.best_value = sol.values(q_var);
  double eps_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i)
    eps_min = std::min(eps_min, sol.values(sets[i].eps));
  const double tie =
      kNearTieRel * std::max(1.0, std::abs(response.best_value));
  int chosen = -1;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double eps = sol.values(sets[i].eps);
    response.gaps.emplace(candidates[i], eps);
    if (chosen < 0 && eps <= eps_min + tie) chosen = static_cast<int>(i);
  }
  response.best_set = candidates[chosen];

  const DisruptionCertificate direct = worst_case_disruption(
      spec, monitors, response.best_set, budgets.energy, settings);
  if (!rel_close(direct.value, response.best_value, 1e-4))
    throw SolveError(str(
        "best_response_joint: shared top value ", response.best_value,
        " deviates from the direct solve ", direct.value, " for set ",
        format_node_set(response.best_set.nodes),
        "; the coupling weight appears too small"));
  return response;
}

/// Attack sets whose slack is within `cap` of the best response.
inline std::vector<AttackSet> epsilon_cap(const AdversaryResponse& response,
                                          double cap) {
  if (!(cap >= 0)) fail("epsilon_cap: cap must be nonnegative");
  const double threshold = std::max(cap, 1e-6);
  std::vector<AttackSet> near_best;
  for (const auto& [set, eps] : response.gaps)
    if (eps <= threshold) near_best.push_back(set);
  return near_best;
}

}  // namespace cogsec
