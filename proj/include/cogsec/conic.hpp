#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <string>
#include <vector>

#include "cogsec/common.hpp"

namespace cogsec {

// Linear-objective conic programs with affine LMI blocks in the "<= 0"
// orientation:   minimize c'x   s.t.   F0 + sum_i x_i F_i  negative
// semidefinite per block, plus affine inequalities a'x <= b and sign
// constraints on variables.

constexpr double kPositiveEps = 1e-9;     // lower bound standing in for "> 0"
constexpr double kSymmetryTol = 1e-10;    // relative input symmetrization tolerance

enum class VarSign { Free, NonNegative, Positive };

struct ConicVariable {
  std::string name;
  VarSign sign = VarSign::Free;

  double lower_bound() const {
    switch (sign) {
      case VarSign::NonNegative: return 0.0;
      case VarSign::Positive: return kPositiveEps;
      default: return -std::numeric_limits<double>::infinity();
    }
  }
};

/// a'x <= bound, with sparse coefficient storage.
struct LinearConstraint {
  std::vector<int> vars;
  std::vector<double> coeffs;
  double bound = 0.0;
};

/// F0 + sum_i x_i F_i <= 0 (negative semidefinite).
struct LmiBlock {
  Eigen::MatrixXd constant;
  std::vector<int> vars;
  std::vector<Eigen::MatrixXd> coeffs;

  Eigen::Index dim() const { return constant.rows(); }

  Eigen::MatrixXd evaluate(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd m = constant;
    for (std::size_t t = 0; t < vars.size(); ++t) m += x(vars[t]) * coeffs[t];
    return m;
  }
};

class ConicProgram {
public:
  int add_variable(std::string name, VarSign sign = VarSign::Free) {
    variables_.push_back(ConicVariable{std::move(name), sign});
    objective_.push_back(0.0);
    return static_cast<int>(variables_.size()) - 1;
  }

  void set_objective(int var, double coeff) {
    check_var(var);
    objective_[var] = coeff;
  }

  void add_linear_constraint(std::vector<int> vars, std::vector<double> coeffs,
                             double bound) {
    if (vars.size() != coeffs.size())
      fail("linear constraint: ", vars.size(), " variables vs ", coeffs.size(),
           " coefficients");
    for (int v : vars) check_var(v);
    linear_.push_back(LinearConstraint{std::move(vars), std::move(coeffs), bound});
  }

  /// Append an LMI block. Inputs are symmetrized; asymmetry beyond tolerance
  /// or inconsistent dimensions are rejected.
  void add_lmi_block(const Eigen::MatrixXd& constant,
                     const std::vector<std::pair<int, Eigen::MatrixXd>>& terms) {
    LmiBlock block;
    block.constant = symmetrize_checked(constant, "constant");
    const auto n = block.constant.rows();
    for (const auto& [var, coeff] : terms) {
      check_var(var);
      if (coeff.rows() != n || coeff.cols() != n)
        fail("lmi block: coefficient for variable '", variables_[var].name,
             "' is ", coeff.rows(), "x", coeff.cols(), ", block is ", n, "x", n);
      block.vars.push_back(var);
      block.coeffs.push_back(symmetrize_checked(coeff, variables_[var].name.c_str()));
    }
    blocks_.push_back(std::move(block));
  }

  int num_variables() const { return static_cast<int>(variables_.size()); }
  const std::vector<ConicVariable>& variables() const { return variables_; }
  const std::vector<double>& objective() const { return objective_; }
  const std::vector<LinearConstraint>& linear_constraints() const { return linear_; }
  const std::vector<LmiBlock>& lmi_blocks() const { return blocks_; }

  double objective_at(const Eigen::VectorXd& x) const {
    double v = 0.0;
    for (std::size_t i = 0; i < objective_.size(); ++i) v += objective_[i] * x(i);
    return v;
  }

  /// Self-describing text dump (sparse triplets per block) for external
  /// cross-checking.
  std::string dump() const {
    std::ostringstream os;
    os.precision(17);
    os << "conic-program variables=" << variables_.size()
       << " linear=" << linear_.size() << " blocks=" << blocks_.size() << "\n";
    for (std::size_t i = 0; i < variables_.size(); ++i) {
      os << "var " << i << " name=" << variables_[i].name << " sign=";
      switch (variables_[i].sign) {
        case VarSign::Free: os << "free"; break;
        case VarSign::NonNegative: os << "nonneg"; break;
        case VarSign::Positive: os << "positive"; break;
      }
      os << " obj=" << objective_[i] << "\n";
    }
    for (const auto& lc : linear_) {
      os << "linear bound=" << lc.bound;
      for (std::size_t t = 0; t < lc.vars.size(); ++t)
        os << " " << lc.vars[t] << ":" << lc.coeffs[t];
      os << "\n";
    }
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      const auto& blk = blocks_[b];
      os << "block " << b << " dim=" << blk.dim() << "\n";
      dump_triplets(os, "  const", blk.constant);
      for (std::size_t t = 0; t < blk.vars.size(); ++t)
        dump_triplets(os, str("  term var=", blk.vars[t]).c_str(), blk.coeffs[t]);
    }
    return os.str();
  }

private:
  void check_var(int var) const {
    if (var < 0 || var >= num_variables())
      fail("conic program: undeclared variable index ", var);
  }

  static Eigen::MatrixXd symmetrize_checked(const Eigen::MatrixXd& m,
                                            const char* what) {
    if (m.rows() != m.cols())
      fail("lmi block: ", what, " matrix is not square (", m.rows(), "x",
           m.cols(), ")");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > kSymmetryTol * scale)
      fail("lmi block: ", what, " matrix asymmetric beyond tolerance (", asym,
           " vs ", kSymmetryTol * scale, ")");
    return 0.5 * (m + m.transpose());
  }

  static void dump_triplets(std::ostringstream& os, const char* head,
                            const Eigen::MatrixXd& m) {
    os << head << ":";
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = r; c < m.cols(); ++c)
        if (m(r, c) != 0.0) os << " (" << r << "," << c << "," << m(r, c) << ")";
    os << "\n";
  }

  std::vector<ConicVariable> variables_;
  std::vector<double> objective_;
  std::vector<LinearConstraint> linear_;
  std::vector<LmiBlock> blocks_;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericFailure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::NumericFailure: return "numeric_failure";
  }
  return "?";
}

struct ConicSolution {
  SolveStatus status = SolveStatus::NumericFailure;
  Eigen::VectorXd values;
  double objective_value = 0.0;
  double max_lmi_residual = 0.0;  // largest positive eigenvalue over all blocks
  int iterations = 0;
};

struct SolverSettings {
  double feasibility_tol = 1e-8;
  double gap_tol = 1e-8;
  int max_iterations = 200;
};

/// Solver-independent residual recomputation from the program data alone.
struct ResidualReport {
  double max_lmi_eigenvalue = 0.0;     // max over blocks of lambda_max(F(x))
  double max_linear_violation = 0.0;   // max over rows of (a'x - b)+
  double max_sign_violation = 0.0;     // max over vars of (lower - x)+
  double objective_mismatch = 0.0;     // |c'x - reported| / max(1,|reported|)
  std::vector<double> block_eigenvalues;

  double worst() const {
    return std::max({max_lmi_eigenvalue, max_linear_violation,
                     max_sign_violation, objective_mismatch});
  }
  bool within(double tol) const { return worst() <= tol; }
};

inline ResidualReport verify_solution(const ConicProgram& program,
                                      const ConicSolution& solution,
                                      double /*tol*/ = 1e-6) {
  ResidualReport report;
  if (solution.values.size() != program.num_variables())
    fail("verify_solution: solution has ", solution.values.size(),
         " values for ", program.num_variables(), " variables");
  const Eigen::VectorXd& x = solution.values;
  for (const auto& blk : program.lmi_blocks()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(blk.evaluate(x),
                                                       Eigen::EigenvaluesOnly);
    const double lam = blk.dim() > 0 ? eig.eigenvalues().maxCoeff() : 0.0;
    report.block_eigenvalues.push_back(lam);
    report.max_lmi_eigenvalue = std::max(report.max_lmi_eigenvalue, lam);
  }
  for (const auto& lc : program.linear_constraints()) {
    double lhs = 0.0;
    for (std::size_t t = 0; t < lc.vars.size(); ++t)
      lhs += lc.coeffs[t] * x(lc.vars[t]);
    report.max_linear_violation =
        std::max(report.max_linear_violation, lhs - lc.bound);
  }
  for (int i = 0; i < program.num_variables(); ++i) {
    const double lb = program.variables()[i].lower_bound();
    if (std::isfinite(lb))
      report.max_sign_violation = std::max(report.max_sign_violation, lb - x(i));
  }
  report.max_linear_violation = std::max(0.0, report.max_linear_violation);
  report.max_sign_violation = std::max(0.0, report.max_sign_violation);
  report.objective_mismatch =
      std::abs(program.objective_at(x) - solution.objective_value) /
      std::max(1.0, std::abs(solution.objective_value));
  return report;
}

}  // namespace cogsec
