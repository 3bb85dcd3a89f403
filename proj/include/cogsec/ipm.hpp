#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <vector>

#ifdef COGSEC_IPM_DEBUG
#include <cstdio>
#endif

#include "cogsec/conic.hpp"

namespace cogsec {

// Embedded dense semidefinite solver: primal-dual interior-point iteration
// with the HKM search direction and a Mehrotra predictor-corrector step.
//
// The user program
//     min c'x   s.t.  F0 + sum_i x_i F_i <= 0 per block, a'x <= b, x_i >= l_i
// is treated as the inequality-form pair
//     (y-side)  max  b'y   s.t.  S = C - sum_i y_i A_i,  S >= 0
//     (X-side)  min <C,X>  s.t.  <A_i,X> = b_i,          X >= 0
// with y = x, b = -c, C = -F0, A_i = F_i; linear rows and variable bounds
// become 1x1 blocks. Every Schur assembly touches only the variables present
// in a block.

namespace ipm {

struct Block {
  Eigen::MatrixXd cmat;                 // C (scaled)
  std::vector<int> vars;                // solver variable indices
  std::vector<Eigen::MatrixXd> coeff;   // A_i (scaled)
  Eigen::Index dim() const { return cmat.rows(); }
};

struct Standardized {
  std::vector<Block> blocks;
  Eigen::VectorXd b;             // scaled objective of the y-side (maximize)
  std::vector<double> var_scale; // x_user = var_scale .* y, per solver variable
  std::vector<int> user_index;   // solver variable -> user variable
  std::vector<int> solver_index; // user variable -> solver variable or -1
  int m = 0;
};

inline double trace_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  // tr(a*b) without forming the product
  return a.cwiseProduct(b.transpose()).sum();
}

/// Cholesky with escalating diagonal jitter for nearly singular iterates.
inline bool factor_spd(Eigen::MatrixXd m, Eigen::LLT<Eigen::MatrixXd>& llt) {
  llt.compute(m);
  if (llt.info() == Eigen::Success) return true;
  const double scale = std::max(1e-300, m.diagonal().cwiseAbs().maxCoeff());
  for (double jitter = 1e-15; jitter <= 1e-7; jitter *= 100.0) {
    m.diagonal().array() += jitter * scale;
    llt.compute(m);
    if (llt.info() == Eigen::Success) return true;
  }
  return false;
}

/// sup { alpha : P + alpha*dP >= 0 } for P positive definite.
inline double max_step(const Eigen::LLT<Eigen::MatrixXd>& llt,
                       const Eigen::MatrixXd& dp) {
  const Eigen::MatrixXd l = llt.matrixL();
  Eigen::MatrixXd y = l.triangularView<Eigen::Lower>().solve(dp);
  Eigen::MatrixXd b = l.triangularView<Eigen::Lower>().solve(y.transpose());
  b = 0.5 * (b + b.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b, Eigen::EigenvaluesOnly);
  const double lam = es.eigenvalues().minCoeff();
  if (lam >= -1e-13) return std::numeric_limits<double>::infinity();
  return -1.0 / lam;
}

inline Standardized standardize(const ConicProgram& program, SolveStatus& early,
                                Eigen::VectorXd& pinned_values) {
  const int n_user = program.num_variables();
  early = SolveStatus::Optimal;  // meaning: no early exit
  pinned_values = Eigen::VectorXd::Zero(n_user);

  std::vector<bool> used(n_user, false);
  for (const auto& blk : program.lmi_blocks())
    for (int v : blk.vars) used[v] = true;
  for (const auto& lc : program.linear_constraints())
    for (std::size_t t = 0; t < lc.vars.size(); ++t)
      if (lc.coeffs[t] != 0.0) used[lc.vars[t]] = true;
  for (int v = 0; v < n_user; ++v)
    if (std::isfinite(program.variables()[v].lower_bound())) used[v] = true;

  Standardized s;
  s.solver_index.assign(n_user, -1);
  for (int v = 0; v < n_user; ++v) {
    if (!used[v]) {
      if (program.objective()[v] != 0.0) {
        early = SolveStatus::Unbounded;  // free variable with nonzero cost
        return s;
      }
      continue;  // pinned to zero
    }
    s.solver_index[v] = static_cast<int>(s.user_index.size());
    s.user_index.push_back(v);
  }
  s.m = static_cast<int>(s.user_index.size());

  for (const auto& blk : program.lmi_blocks()) {
    if (blk.vars.empty()) {
      // constant-feasibility block: no interior role, just a feasibility gate
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(blk.constant,
                                                        Eigen::EigenvaluesOnly);
      if (es.eigenvalues().maxCoeff() > 1e-12) {
        early = SolveStatus::Infeasible;
        return s;
      }
      continue;
    }
    Block b;
    b.cmat = -blk.constant;
    for (std::size_t t = 0; t < blk.vars.size(); ++t) {
      b.vars.push_back(s.solver_index[blk.vars[t]]);
      b.coeff.push_back(blk.coeffs[t]);
    }
    s.blocks.push_back(std::move(b));
  }
  for (const auto& lc : program.linear_constraints()) {
    Block b;
    b.cmat = Eigen::MatrixXd::Constant(1, 1, lc.bound);
    for (std::size_t t = 0; t < lc.vars.size(); ++t) {
      if (lc.coeffs[t] == 0.0) continue;
      b.vars.push_back(s.solver_index[lc.vars[t]]);
      b.coeff.push_back(Eigen::MatrixXd::Constant(1, 1, lc.coeffs[t]));
    }
    if (b.vars.empty()) {
      if (lc.bound < 0) {
        early = SolveStatus::Infeasible;
        return s;
      }
      continue;
    }
    s.blocks.push_back(std::move(b));
  }
  for (int v = 0; v < n_user; ++v) {
    const double lb = program.variables()[v].lower_bound();
    if (!std::isfinite(lb)) continue;
    Block b;
    b.cmat = Eigen::MatrixXd::Constant(1, 1, -lb);
    b.vars.push_back(s.solver_index[v]);
    b.coeff.push_back(Eigen::MatrixXd::Constant(1, 1, -1.0));
    s.blocks.push_back(std::move(b));
  }

  // Diagonal congruence equilibration per block (exact reformulation), then
  // per-variable scaling so coefficient magnitudes sit near one.
  for (auto& blk : s.blocks) {
    for (int pass = 0; pass < 2; ++pass) {
      const auto n = blk.dim();
      Eigen::VectorXd rowmax = blk.cmat.cwiseAbs().rowwise().maxCoeff();
      for (const auto& a : blk.coeff)
        rowmax = rowmax.cwiseMax(a.cwiseAbs().rowwise().maxCoeff());
      Eigen::VectorXd t(n);
      for (Eigen::Index r = 0; r < n; ++r) {
        const double v = std::clamp(rowmax(r), 1e-8, 1e8);
        t(r) = 1.0 / std::sqrt(v);
      }
      const auto scale = t.asDiagonal();
      blk.cmat = scale * blk.cmat * scale;
      for (auto& a : blk.coeff) a = scale * a * scale;
    }
  }
  s.var_scale.assign(s.m, 1.0);
  std::vector<double> coeff_max(s.m, 0.0);
  for (const auto& blk : s.blocks)
    for (std::size_t t = 0; t < blk.vars.size(); ++t)
      coeff_max[blk.vars[t]] = std::max(coeff_max[blk.vars[t]],
                                        blk.coeff[t].cwiseAbs().maxCoeff());
  for (int i = 0; i < s.m; ++i)
    s.var_scale[i] = 1.0 / std::clamp(coeff_max[i], 1e-6, 1e6);
  for (auto& blk : s.blocks)
    for (std::size_t t = 0; t < blk.vars.size(); ++t)
      blk.coeff[t] *= s.var_scale[blk.vars[t]];

  s.b.resize(s.m);
  for (int i = 0; i < s.m; ++i)
    s.b(i) = -program.objective()[s.user_index[i]] * s.var_scale[i];
  return s;
}

}  // namespace ipm

inline ConicSolution solve(const ConicProgram& program,
                           const SolverSettings& settings = {}) {
  ConicSolution out;
  out.values = Eigen::VectorXd::Zero(program.num_variables());

  SolveStatus early = SolveStatus::Optimal;
  Eigen::VectorXd pinned;
  ipm::Standardized s = ipm::standardize(program, early, pinned);
  if (early != SolveStatus::Optimal) {
    out.status = early;
    return out;
  }

  auto finalize = [&](SolveStatus status, const Eigen::VectorXd& y, int iters) {
    out.status = status;
    out.iterations = iters;
    for (int i = 0; i < s.m; ++i)
      out.values(s.user_index[i]) = s.var_scale[i] * y(i);
    out.objective_value = program.objective_at(out.values);
    out.max_lmi_residual = 0.0;
    for (const auto& blk : program.lmi_blocks()) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(blk.evaluate(out.values),
                                                        Eigen::EigenvaluesOnly);
      out.max_lmi_residual =
          std::max(out.max_lmi_residual, es.eigenvalues().maxCoeff());
    }
    return out;
  };

  const int m = s.m;
  if (m == 0) return finalize(SolveStatus::Optimal, Eigen::VectorXd(), 0);

  const int nblocks = static_cast<int>(s.blocks.size());
  double n_total = 0.0;
  for (const auto& blk : s.blocks) n_total += static_cast<double>(blk.dim());

  // Iterates
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
  std::vector<Eigen::MatrixXd> X(nblocks), S(nblocks);
  double data_scale = 1.0;
  for (const auto& blk : s.blocks) {
    data_scale = std::max(data_scale, blk.cmat.cwiseAbs().maxCoeff());
    for (const auto& a : blk.coeff)
      data_scale = std::max(data_scale, a.cwiseAbs().maxCoeff());
  }
  const double init_scale =
      10.0 * std::max(1.0, std::max(data_scale, s.b.cwiseAbs().maxCoeff()));
  for (int j = 0; j < nblocks; ++j) {
    const auto n = s.blocks[j].dim();
    X[j] = init_scale * Eigen::MatrixXd::Identity(n, n);
    S[j] = init_scale * Eigen::MatrixXd::Identity(n, n);
  }

  const double bnorm = 1.0 + s.b.cwiseAbs().maxCoeff();
  double cnorm = 1.0;
  for (const auto& blk : s.blocks)
    cnorm = std::max(cnorm, 1.0 + blk.cmat.cwiseAbs().maxCoeff());

  // Workspaces
  Eigen::MatrixXd schur(m, m);
  Eigen::VectorXd rp(m), rhs(m), dy(m), dy_aff(m);
  std::vector<Eigen::MatrixXd> Sinv(nblocks), Rd(nblocks), dS(nblocks),
      dX(nblocks), dS_aff(nblocks), dX_aff(nblocks);
  std::vector<std::vector<Eigen::MatrixXd>> vwork(nblocks);
  for (int j = 0; j < nblocks; ++j)
    vwork[j].resize(s.blocks[j].vars.size());

  Eigen::VectorXd best_y = y;
  double best_merit = std::numeric_limits<double>::infinity();
  int stall = 0;

  for (int iter = 0; iter < settings.max_iterations; ++iter) {
    // Residuals
    double pobj = 0.0;
    for (int j = 0; j < nblocks; ++j)
      pobj += ipm::trace_product(s.blocks[j].cmat, X[j]);
    const double dobj = s.b.dot(y);

    rp = s.b;
    for (int j = 0; j < nblocks; ++j) {
      const auto& blk = s.blocks[j];
      for (std::size_t t = 0; t < blk.vars.size(); ++t)
        rp(blk.vars[t]) -= ipm::trace_product(blk.coeff[t], X[j]);
    }
    double derr = 0.0;
    double gap = 0.0;
    for (int j = 0; j < nblocks; ++j) {
      const auto& blk = s.blocks[j];
      Rd[j] = blk.cmat - S[j];
      for (std::size_t t = 0; t < blk.vars.size(); ++t)
        Rd[j] -= y(blk.vars[t]) * blk.coeff[t];
      derr = std::max(derr, Rd[j].cwiseAbs().maxCoeff());
      gap += ipm::trace_product(X[j], S[j]);
    }
    const double perr = rp.cwiseAbs().maxCoeff() / bnorm;
    derr /= cnorm;
    const double relgap = gap / (1.0 + std::abs(pobj) + std::abs(dobj));
    const double merit = std::max({perr, derr, relgap});
#ifdef COGSEC_IPM_DEBUG
    {
      double trx_dbg = 0.0;
      for (int j = 0; j < nblocks; ++j) trx_dbg += X[j].trace();
      std::printf(
          "it=%d perr=%.2e derr=%.2e gap=%.2e pobj=%.3e dobj=%.3e trx=%.2e "
          "ynorm=%.2e\n",
          iter, perr, derr, relgap, pobj, dobj, trx_dbg,
          y.cwiseAbs().maxCoeff());
    }
#endif

    if (merit < best_merit * 0.9999) {
      best_merit = merit;
      best_y = y;
      stall = 0;
    } else if (++stall > 25) {
      break;
    }

    if (perr <= settings.feasibility_tol && derr <= settings.feasibility_tol &&
        relgap <= settings.gap_tol)
      return finalize(SolveStatus::Optimal, y, iter);

    // Divergence heuristics: an exploding X with vanishing A(X) certifies
    // infeasibility of the user constraints; an exploding improving y ray
    // certifies an unbounded objective.
    auto classify_divergence = [&](double gate) -> SolveStatus {
      double trx = 0.0;
      for (int j = 0; j < nblocks; ++j) trx += X[j].trace();
      if (trx > gate * init_scale * n_total) {
        const double amap = (s.b - rp).cwiseAbs().maxCoeff() / trx;
        const double cdot = pobj / trx;
        if (amap < 1e-7 && cdot < -1e-8)
          return SolveStatus::Infeasible;
      }
      const double ynorm = y.cwiseAbs().maxCoeff();
      if (ynorm > gate * init_scale) {
        double ray_pos = 0.0;
        for (int j = 0; j < nblocks; ++j) {
          const auto& blk = s.blocks[j];
          Eigen::MatrixXd dir = Eigen::MatrixXd::Zero(blk.dim(), blk.dim());
          for (std::size_t t = 0; t < blk.vars.size(); ++t)
            dir += (y(blk.vars[t]) / ynorm) * blk.coeff[t];
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
              dir, Eigen::EigenvaluesOnly);
          ray_pos = std::max(ray_pos, es.eigenvalues().maxCoeff());
        }
        if (ray_pos < 1e-7 && s.b.dot(y) / ynorm > 1e-9)
          return SolveStatus::Unbounded;
      }
      return SolveStatus::NumericFailure;  // no verdict
    };
    if (const auto verdict = classify_divergence(1e8);
        verdict != SolveStatus::NumericFailure)
      return finalize(verdict, best_y, iter);

    const double mu = gap / n_total;

    // Factor S and assemble the Schur complement M_ik = tr(A_i X A_k S^-1).
    std::vector<Eigen::LLT<Eigen::MatrixXd>> slt(nblocks), xlt(nblocks);
    bool factor_ok = true;
    for (int j = 0; j < nblocks && factor_ok; ++j) {
      factor_ok = ipm::factor_spd(S[j], slt[j]) && ipm::factor_spd(X[j], xlt[j]);
      if (factor_ok)
        Sinv[j] = slt[j].solve(
            Eigen::MatrixXd::Identity(s.blocks[j].dim(), s.blocks[j].dim()));
    }
    if (!factor_ok) break;

    schur.setZero();
    for (int j = 0; j < nblocks; ++j) {
      const auto& blk = s.blocks[j];
      const std::size_t nv = blk.vars.size();
      for (std::size_t t = 0; t < nv; ++t)
        vwork[j][t] = X[j] * blk.coeff[t] * Sinv[j];
      for (std::size_t t = 0; t < nv; ++t)
        for (std::size_t u = 0; u < nv; ++u) {
          const int gi = blk.vars[u], gk = blk.vars[t];
          if (gi < gk) continue;
          schur(gi, gk) += ipm::trace_product(blk.coeff[u], vwork[j][t]);
        }
    }
    schur = schur.selfadjointView<Eigen::Lower>();

    // Statically regularized factorization; refinement against the pristine
    // matrix recovers accuracy without letting near-null directions drift.
    Eigen::MatrixXd schur_reg = schur;
    schur_reg.diagonal().array() +=
        1e-11 * (1.0 + schur.diagonal().cwiseAbs().maxCoeff());
    Eigen::LDLT<Eigen::MatrixXd> mldlt(schur_reg);
    if (mldlt.info() != Eigen::Success) {
      schur_reg.diagonal().array() +=
          1e-8 * (1.0 + schur.diagonal().cwiseAbs().maxCoeff());
      mldlt.compute(schur_reg);
      if (mldlt.info() != Eigen::Success) break;
    }
    auto solve_schur = [&](const Eigen::VectorXd& r) {
      Eigen::VectorXd sol = mldlt.solve(r);
      double prev = std::numeric_limits<double>::infinity();
      for (int refine = 0; refine < 3; ++refine) {
        const Eigen::VectorXd resid = r - schur * sol;
        const double rnorm = resid.cwiseAbs().maxCoeff();
        if (!(rnorm < 0.5 * prev)) break;
        prev = rnorm;
        sol += mldlt.solve(resid);
      }
      return sol;
    };

    auto assemble_rhs = [&](double sigma_mu, bool with_corrector) {
      rhs = s.b;
      for (int j = 0; j < nblocks; ++j) {
        const auto& blk = s.blocks[j];
        Eigen::MatrixXd g = X[j] * Rd[j] * Sinv[j];
        if (with_corrector) g += dX_aff[j] * dS_aff[j] * Sinv[j];
        if (sigma_mu != 0.0) g -= sigma_mu * Sinv[j];
        for (std::size_t t = 0; t < blk.vars.size(); ++t)
          rhs(blk.vars[t]) += ipm::trace_product(blk.coeff[t], g);
      }
    };
    auto recover_directions = [&](const Eigen::VectorXd& step, double sigma_mu,
                                  bool with_corrector,
                                  std::vector<Eigen::MatrixXd>& ds,
                                  std::vector<Eigen::MatrixXd>& dx) {
      for (int j = 0; j < nblocks; ++j) {
        const auto& blk = s.blocks[j];
        ds[j] = Rd[j];
        for (std::size_t t = 0; t < blk.vars.size(); ++t)
          ds[j] -= step(blk.vars[t]) * blk.coeff[t];
        Eigen::MatrixXd tail = X[j] * ds[j];
        if (with_corrector) tail += dX_aff[j] * dS_aff[j];
        Eigen::MatrixXd v = -X[j] - tail * Sinv[j];
        if (sigma_mu != 0.0) v += sigma_mu * Sinv[j];
        dx[j] = 0.5 * (v + v.transpose());
      }
    };
    auto step_lengths = [&](const std::vector<Eigen::MatrixXd>& dx,
                            const std::vector<Eigen::MatrixXd>& ds, double cap,
                            double& ap, double& ad) {
      ap = ad = cap;
      for (int j = 0; j < nblocks; ++j) {
        ap = std::min(ap, ipm::max_step(xlt[j], dx[j]));
        ad = std::min(ad, ipm::max_step(slt[j], ds[j]));
      }
    };

    // Predictor
    assemble_rhs(0.0, false);
    dy_aff = solve_schur(rhs);
    recover_directions(dy_aff, 0.0, false, dS_aff, dX_aff);
    double ap_aff, ad_aff;
    step_lengths(dX_aff, dS_aff, 1.0, ap_aff, ad_aff);
    double gap_aff = 0.0;
    for (int j = 0; j < nblocks; ++j)
      gap_aff += ipm::trace_product(X[j] + ap_aff * dX_aff[j],
                                    S[j] + ad_aff * dS_aff[j]);
    gap_aff = std::max(gap_aff, 0.0);
    const double sigma =
        std::clamp(std::pow(gap_aff / gap, 3.0), 1e-10, 1.0);

    // Corrector
    assemble_rhs(sigma * mu, true);
    dy = solve_schur(rhs);
    recover_directions(dy, sigma * mu, true, dS, dX);

    const double tau = iter < 3 ? 0.92 : 0.98;
    double ap, ad;
    step_lengths(dX, dS, std::numeric_limits<double>::infinity(), ap, ad);
    ap = std::min(1.0, tau * ap);
    ad = std::min(1.0, tau * ad);

    bool finite = std::isfinite(ap) && std::isfinite(ad) && dy.allFinite();
    for (int j = 0; j < nblocks && finite; ++j)
      finite = dX[j].allFinite() && dS[j].allFinite();
    if (!finite) break;

    for (int j = 0; j < nblocks; ++j) {
      X[j] += ap * dX[j];
      X[j] = 0.5 * (X[j] + X[j].transpose()).eval();
      S[j] += ad * dS[j];
      S[j] = 0.5 * (S[j] + S[j].transpose()).eval();
    }
    y += ad * dy;
    out.iterations = iter + 1;
  }

  return finalize(SolveStatus::NumericFailure, best_y, out.iterations);
}

}  // namespace cogsec
