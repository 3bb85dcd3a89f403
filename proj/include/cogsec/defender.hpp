#pragma once

#include <map>
#include <queue>

#include "cogsec/disruption.hpp"

namespace cogsec {

// CH-k defender: choose a monitor set of size <= beta minimizing
//   R(M) = kappa'z + max_i Q(M, A_i)
// over the adversary policies seen so far. For a fixed monitor set the inner
// program decouples into independent per-adversary disruption solves sharing
// only the scalar top value, so enumeration over candidate sets is exact and
// cache-friendly. Branch-and-bound on the [0,1] relaxation with the big-M
// linkage omega_i <= M_inf * z provides the independent cross-check and the
// path for budgets where enumeration is too large.

constexpr std::uint64_t kDefenderEnumerationCap = 10000;

enum class DefenderMethod { Enumeration, BranchAndBound };

struct PerAdversaryCertificate {
  Eigen::VectorXd omega;    // gamma o z, zero off-monitor
  Eigen::VectorXd psi;
  Eigen::MatrixXd storage;
  double value = 0.0;       // Q(M, A_i)
};

struct DefenderSolution {
  MonitorSet monitor_set;
  double objective = 0.0;    // kappa'z + inner_value
  double inner_value = 0.0;  // max_i Q(M, A_i)
  std::map<AttackSet, PerAdversaryCertificate> per_adversary;
  DefenderMethod method = DefenderMethod::Enumeration;
  int explored_nodes = 0;    // branch-and-bound only
};

inline double sensor_cost(const NetworkSpec& spec, const MonitorSet& monitors) {
  validate_node_list(monitors.nodes, spec.n_nodes, "monitor set");
  double cost = 0.0;
  for (int m : monitors.nodes) cost += spec.sensor_costs(m);
  return cost;
}

inline double effective_big_m(const NetworkSpec& spec, const GameBudgets& budgets) {
  if (budgets.big_m > 0) return budgets.big_m;
  return 1e6 * std::max(1.0, perf_quadratic(spec).cwiseAbs().maxCoeff());
}

namespace detail {

inline std::vector<AttackSet> dedupe_policies(std::vector<AttackSet> policies) {
  std::vector<AttackSet> out;
  for (auto& p : policies)
    if (std::find(out.begin(), out.end(), p) == out.end())
      out.push_back(std::move(p));
  return out;
}

/// objective, then sensor cost, then lexicographic set; near ties at 1e-6.
inline bool defender_preferred(double obj_a, double cost_a,
                               const std::vector<int>& set_a, double obj_b,
                               double cost_b, const std::vector<int>& set_b) {
  const double tie = kNearTieRel * std::max({1.0, std::abs(obj_a), std::abs(obj_b)});
  if (obj_a < obj_b - tie) return true;
  if (obj_b < obj_a - tie) return false;
  if (cost_a != cost_b) return cost_a < cost_b;
  return set_a < set_b;
}

struct EvaluatedMonitorSet {
  double objective = std::numeric_limits<double>::infinity();
  double cost = 0.0;
  double inner = 0.0;
  std::vector<DisruptionCertificate> certs;
};

inline EvaluatedMonitorSet evaluate_monitor_set(
    DisruptionEvaluator& evaluator, const MonitorSet& monitors,
    const std::vector<AttackSet>& policies) {
  std::vector<std::pair<MonitorSet, AttackSet>> pairs;
  pairs.reserve(policies.size());
  for (const auto& a : policies) pairs.emplace_back(monitors, a);
  EvaluatedMonitorSet out;
  out.certs = evaluator.values(pairs);
  out.cost = sensor_cost(evaluator.spec(), monitors);
  out.inner = 0.0;
  for (const auto& c : out.certs) out.inner = std::max(out.inner, c.value);
  out.objective = out.cost + out.inner;
  return out;
}

inline DefenderSolution package_solution(const MonitorSet& monitors,
                                         const EvaluatedMonitorSet& eval,
                                         const std::vector<AttackSet>& policies,
                                         DefenderMethod method) {
  DefenderSolution sol;
  sol.monitor_set = monitors;
  sol.objective = eval.objective;
  sol.inner_value = eval.inner;
  sol.method = method;
  for (std::size_t i = 0; i < policies.size(); ++i) {
    PerAdversaryCertificate cert;
    cert.omega = eval.certs[i].gamma;  // gamma is zero off-monitor already
    cert.psi = eval.certs[i].psi;
    cert.storage = eval.certs[i].storage;
    cert.value = eval.certs[i].value;
    sol.per_adversary.emplace(policies[i], std::move(cert));
  }
  return sol;
}

}  // namespace detail

inline DefenderSolution defender_enumerate(DisruptionEvaluator& evaluator,
                                           std::vector<AttackSet> adversary_policies,
                                           const GameBudgets& budgets) {
  const NetworkSpec& spec = evaluator.spec();
  budgets.validate(spec.n_nodes);
  if (adversary_policies.empty())
    fail("defender_enumerate: adversary policy list is empty");
  adversary_policies = detail::dedupe_policies(std::move(adversary_policies));
  const auto candidates = enumerate_monitor_sets(spec.n_nodes, budgets.beta);

  // Warm the cache with the full candidate x policy grid in one batch.
  std::vector<std::pair<MonitorSet, AttackSet>> grid;
  grid.reserve(candidates.size() * adversary_policies.size());
  for (const auto& m : candidates)
    for (const auto& a : adversary_policies) grid.emplace_back(m, a);
  evaluator.values(grid);

  int best = -1;
  detail::EvaluatedMonitorSet best_eval;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    auto eval =
        detail::evaluate_monitor_set(evaluator, candidates[i], adversary_policies);
    if (best < 0 ||
        detail::defender_preferred(eval.objective, eval.cost, candidates[i].nodes,
                                   best_eval.objective, best_eval.cost,
                                   candidates[best].nodes)) {
      best = static_cast<int>(i);
      best_eval = std::move(eval);
    }
  }
  return detail::package_solution(candidates[best], best_eval,
                                  adversary_policies, DefenderMethod::Enumeration);
}

inline DefenderSolution defender_enumerate(const NetworkSpec& spec,
                                           std::vector<AttackSet> policies,
                                           const GameBudgets& budgets,
                                           int workers = 1) {
  DisruptionEvaluator evaluator(spec, budgets.energy, workers);
  return defender_enumerate(evaluator, std::move(policies), budgets);
}

namespace detail {

/// [0,1]-relaxed monitor selection with partial fixing. Coordinates fixed to
/// zero drop their omega entries (the LMI loses those diagonal slots exactly
/// as gamma o z does); coordinates fixed to one keep omega free up to the
/// inactive big-M ceiling, which is omitted as it only loosens the relaxation.
struct RelaxationResult {
  SolveStatus status = SolveStatus::NumericFailure;
  double objective = std::numeric_limits<double>::infinity();
  Eigen::VectorXd z;
};

inline RelaxationResult solve_defender_relaxation(
    const NetworkSpec& spec, const std::vector<AttackSet>& policies,
    const GameBudgets& budgets, const std::vector<int>& fixed,  // -1 free, 0, 1
    const SolverSettings& settings) {
  const int n = spec.n_nodes;
  const double big_m = effective_big_m(spec, budgets);
  int n_fixed1 = 0;
  for (int v : fixed) n_fixed1 += v == 1;

  RelaxationResult out;
  if (n_fixed1 > budgets.beta) {
    out.status = SolveStatus::Infeasible;
    return out;
  }

  ConicProgram program;
  std::vector<int> z_vars(n, -1);
  double fixed_cost = 0.0;
  std::vector<int> budget_vars;
  for (int j = 0; j < n; ++j) {
    if (fixed[j] == 0) continue;
    if (fixed[j] == 1) {
      fixed_cost += spec.sensor_costs(j);
      continue;
    }
    z_vars[j] = program.add_variable(str("z_", j + 1), VarSign::NonNegative);
    program.set_objective(z_vars[j], spec.sensor_costs(j));
    program.add_linear_constraint({z_vars[j]}, {1.0}, 1.0);  // z <= 1
    budget_vars.push_back(z_vars[j]);
  }
  if (!budget_vars.empty())
    program.add_linear_constraint(
        budget_vars, std::vector<double>(budget_vars.size(), 1.0),
        static_cast<double>(budgets.beta - n_fixed1));

  const int q_var = program.add_variable("q_top", VarSign::Positive);
  program.set_objective(q_var, 1.0);

  const Eigen::MatrixXd wq = perf_quadratic(spec);
  for (std::size_t i = 0; i < policies.size(); ++i) {
    const Eigen::MatrixXd b_attack = attack_input_matrix(spec, policies[i]);
    const int alpha = static_cast<int>(policies[i].nodes.size());
    const int dim = n + alpha;

    std::vector<std::pair<int, Eigen::MatrixXd>> terms;
    std::vector<int> row_vars;
    std::vector<double> row_coeffs;
    for (int j = 0; j < n; ++j) {
      if (fixed[j] == 0) continue;  // omega_j identically zero
      const int omega =
          program.add_variable(str("omega_", i, "_", j + 1), VarSign::NonNegative);
      Eigen::MatrixXd coeff = Eigen::MatrixXd::Zero(dim, dim);
      coeff(j, j) = -1.0;
      terms.emplace_back(omega, std::move(coeff));
      row_vars.push_back(omega);
      row_coeffs.push_back(spec.alarm_thresholds(j));
      if (fixed[j] == -1)  // omega <= M z
        program.add_linear_constraint({omega, z_vars[j]}, {1.0, -big_m}, 0.0);
    }
    std::vector<int> psi_vars;
    for (int j = 0; j < alpha; ++j) {
      const int psi = program.add_variable(str("psi_", i, "_", j), VarSign::Positive);
      Eigen::MatrixXd coeff = Eigen::MatrixXd::Zero(dim, dim);
      coeff(n + j, n + j) = -1.0;
      terms.emplace_back(psi, std::move(coeff));
      row_vars.push_back(psi);
      row_coeffs.push_back(budgets.energy);
    }
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) {
        const int var = program.add_variable(str("p_", i, "_", a, "_", b));
        Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(n, n);
        basis(a, b) = 1.0;
        basis(b, a) = 1.0;
        Eigen::MatrixXd coeff = Eigen::MatrixXd::Zero(dim, dim);
        coeff.topLeftCorner(n, n) =
            spec.a_closed.transpose() * basis + basis * spec.a_closed;
        coeff.topRightCorner(n, alpha) = basis * b_attack;
        coeff.bottomLeftCorner(alpha, n) = b_attack.transpose() * basis;
        terms.emplace_back(var, std::move(coeff));
      }
    Eigen::MatrixXd constant = Eigen::MatrixXd::Zero(dim, dim);
    constant.topLeftCorner(n, n) = wq;
    program.add_lmi_block(constant, terms);

    row_vars.push_back(q_var);
    row_coeffs.push_back(-1.0);
    program.add_linear_constraint(std::move(row_vars), std::move(row_coeffs), 0.0);
  }

  const ConicSolution sol = solve(program, settings);
  out.status = sol.status;
  if (sol.status != SolveStatus::Optimal) return out;
  out.objective = sol.objective_value + fixed_cost;
  out.z.resize(n);
  for (int j = 0; j < n; ++j)
    out.z(j) = fixed[j] >= 0 ? static_cast<double>(fixed[j])
                             : sol.values(z_vars[j]);
  return out;
}

}  // namespace detail

inline DefenderSolution defender_branch_and_bound(
    DisruptionEvaluator& evaluator, std::vector<AttackSet> adversary_policies,
    const GameBudgets& budgets,
    const SolverSettings& settings = disruption_solver_settings()) {
  const NetworkSpec& spec = evaluator.spec();
  budgets.validate(spec.n_nodes);
  if (adversary_policies.empty())
    fail("defender_branch_and_bound: adversary policy list is empty");
  adversary_policies = detail::dedupe_policies(std::move(adversary_policies));
  const int n = spec.n_nodes;

  struct Node {
    std::vector<int> fixed;
    double bound;
    int order;
  };
  auto worse = [](const Node& a, const Node& b) {
    return a.bound != b.bound ? a.bound > b.bound : a.order > b.order;
  };
  std::priority_queue<Node, std::vector<Node>, decltype(worse)> open(worse);

  double incumbent_obj = std::numeric_limits<double>::infinity();
  double incumbent_cost = 0.0;
  MonitorSet incumbent_set;
  detail::EvaluatedMonitorSet incumbent_eval;
  bool have_incumbent = false;
  auto try_incumbent = [&](const Eigen::VectorXd& z) {
    std::vector<int> nodes;
    for (int j = 0; j < n; ++j)
      if (z(j) > 0.5) nodes.push_back(j);
    if (static_cast<int>(nodes.size()) > budgets.beta) return;
    const MonitorSet m{nodes};
    auto eval = detail::evaluate_monitor_set(evaluator, m, adversary_policies);
    if (!have_incumbent ||
        detail::defender_preferred(eval.objective, eval.cost, m.nodes,
                                   incumbent_obj, incumbent_cost,
                                   incumbent_set.nodes)) {
      have_incumbent = true;
      incumbent_obj = eval.objective;
      incumbent_cost = eval.cost;
      incumbent_set = m;
      incumbent_eval = std::move(eval);
    }
  };

  const auto root = detail::solve_defender_relaxation(
      spec, adversary_policies, budgets, std::vector<int>(n, -1), settings);
  if (root.status != SolveStatus::Optimal)
    throw SolveError(str("defender branch-and-bound: root relaxation ended with ",
                         to_string(root.status)));
  try_incumbent(root.z);  // rounded root seeds the incumbent

  int order = 0;
  open.push(Node{std::vector<int>(n, -1), root.objective, order++});
  int explored = 0;
  const auto prune_tol = [&] {
    return 1e-8 * std::max(1.0, std::abs(incumbent_obj));
  };

  while (!open.empty()) {
    const Node node = open.top();
    open.pop();
    if (have_incumbent && node.bound >= incumbent_obj - prune_tol()) break;
    ++explored;

    const auto relax = detail::solve_defender_relaxation(
        spec, adversary_policies, budgets, node.fixed, settings);
    if (relax.status == SolveStatus::Infeasible) continue;

    double bound = node.bound;
    Eigen::VectorXd z;
    if (relax.status == SolveStatus::Optimal) {
      bound = std::max(bound, relax.objective);
      z = relax.z;
      if (have_incumbent && bound >= incumbent_obj - prune_tol()) continue;
    }

    int branch_var = -1;
    double most_fractional = 1e-6;
    for (int j = 0; j < n; ++j) {
      if (node.fixed[j] != -1) continue;
      const double frac =
          z.size() == n ? 0.5 - std::abs(z(j) - 0.5) : 0.5;  // unsolved: any
      if (frac > most_fractional) {
        most_fractional = frac;
        branch_var = j;
      }
    }
    if (z.size() == n) try_incumbent(z);
    if (branch_var < 0) {
      if (z.size() != n) {
        // relaxation failed and no fractional information: fix the first
        // free coordinate to keep the tree finite
        for (int j = 0; j < n && branch_var < 0; ++j)
          if (node.fixed[j] == -1) branch_var = j;
        if (branch_var < 0) continue;  // fully fixed leaf, already evaluated
      } else {
        continue;  // integral relaxation: node solved exactly
      }
    }
    for (int value : {1, 0}) {
      Node child{node.fixed, bound, order++};
      child.fixed[branch_var] = value;
      open.push(child);
    }
  }

  if (!have_incumbent)
    throw SolveError("defender branch-and-bound: no feasible monitor set found");
  DefenderSolution sol =
      detail::package_solution(incumbent_set, incumbent_eval, adversary_policies,
                               DefenderMethod::BranchAndBound);
  sol.explored_nodes = explored;
  return sol;
}

inline DefenderSolution defender_branch_and_bound(const NetworkSpec& spec,
                                                  std::vector<AttackSet> policies,
                                                  const GameBudgets& budgets,
                                                  int workers = 1) {
  DisruptionEvaluator evaluator(spec, budgets.energy, workers);
  return defender_branch_and_bound(evaluator, std::move(policies), budgets);
}

/// Monitor-set candidate count for the exact path.
inline std::uint64_t monitor_candidate_count(int n_nodes, int beta) {
  std::uint64_t total = 0;
  for (int s = 0; s <= beta; ++s) total += binomial(n_nodes, s);
  return total;
}

/// Dispatch: exact enumeration while the candidate count is tractable,
/// branch-and-bound beyond.
inline DefenderSolution defender_solve(DisruptionEvaluator& evaluator,
                                       std::vector<AttackSet> policies,
                                       const GameBudgets& budgets) {
  if (monitor_candidate_count(evaluator.spec().n_nodes, budgets.beta) <=
      kDefenderEnumerationCap)
    return defender_enumerate(evaluator, std::move(policies), budgets);
  return defender_branch_and_bound(evaluator, std::move(policies), budgets);
}

/// Defender policy robust against every admissible attack set.
inline DefenderSolution full_coverage_policy(DisruptionEvaluator& evaluator,
                                             const GameBudgets& budgets,
                                             std::uint64_t attack_set_cap = 10000) {
  const NetworkSpec& spec = evaluator.spec();
  budgets.validate(spec.n_nodes);
  const std::uint64_t count = binomial(spec.n_nodes, budgets.alpha);
  if (count > attack_set_cap)
    fail("full_coverage_policy: ", count, " attack sets exceed the cap of ",
         attack_set_cap);
  return defender_solve(evaluator, enumerate_attack_sets(spec.n_nodes, budgets.alpha),
                        budgets);
}

inline DefenderSolution full_coverage_policy(const NetworkSpec& spec,
                                             const GameBudgets& budgets,
                                             int workers = 1,
                                             std::uint64_t attack_set_cap = 10000) {
  DisruptionEvaluator evaluator(spec, budgets.energy, workers);
  return full_coverage_policy(evaluator, budgets, attack_set_cap);
}

}  // namespace cogsec
