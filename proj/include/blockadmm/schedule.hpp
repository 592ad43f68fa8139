#pragma once

#include <string>
#include <vector>

#include "blockadmm/batch_admm.hpp"

namespace blockadmm {

/// Adaptive penalty parameter with shrinking residual bounds and primal
/// accuracy targets. rho contracts by c whenever the constraint residual
/// exceeds the current bound; eta and eps decay geometrically every step.
struct PenaltySchedule {
  Scalar rho0 = 1.0;
  Scalar c = 0.9;
  Scalar eta0 = 1.0;
  Scalar eta_q = 0.95;
  Scalar eps0 = 1.0;
  Scalar eps_q = 0.95;

  int k = 0;
  Scalar rho = 1.0;
  Scalar eta = 1.0;
  Scalar eps = 1.0;

  void reset() {
    k = 0;
    rho = rho0;
    eta = eta0;
    eps = eps0;
  }

  void validate() const {
    if (!(rho0 > 0) || !(c > 0 && c < 1) || !(eta0 > 0) ||
        !(eta_q > 0 && eta_q < 1) || !(eps0 > 0) ||
        !(eps_q > 0 && eps_q < 1)) {
      throw ConfigError("PenaltySchedule: need rho0,eta0,eps0 > 0 and "
                        "c,eta_q,eps_q in (0,1)");
    }
  }
};

/// Keep rho when the residual is within the bound, otherwise contract by c.
/// Advances k and the eta/eps sequences either way.
void rho_update(PenaltySchedule& schedule, Scalar residual_norm);

struct ConvergenceConfig {
  BatchAdmmConfig admm;  // beta is overwritten with 1/rho every outer step
  PenaltySchedule schedule;
  int inner_cap0 = 20;          // primal-sweep budget at k = 0
  Scalar inner_growth = 1.1;    // geometric growth of the budget
  Scalar batch_growth = 1.1;    // Theta minibatch growth toward full batch
};

struct ConvergenceTraceRow {
  int k = 0;
  Scalar rho = 0;
  Scalar eta = 0;
  Scalar eps = 0;
  Scalar h_norm = 0;      // stacked constraint residual after the dual step
  int inner_iters = 0;    // primal sweeps run this outer step
  Scalar grad_sq = 0;     // ||G||^2 at primal exit
};

struct ConvergenceRun {
  std::vector<MetricsRecord> metrics;
  std::vector<ConvergenceTraceRow> trace;
  CouplingState coupling;
};

/// Outer primal-dual loop over the batch trainer: every outer step sets
/// beta_t = 1/rho_k, runs primal sweeps until the measured squared gradient
/// norm of the augmented objective drops below eps_k (or the growing sweep
/// budget runs out; sweep counts never decrease across outer steps), takes
/// the dual step, and applies the rho rule to the stacked residual norm.
/// Scaled duals are rescaled by rho_new/rho_old whenever rho changes so the
/// unscaled multipliers stay continuous.
ConvergenceRun convergence_mode_train(std::vector<Block>& blocks,
                                      const Matrix& x, const Matrix& y,
                                      const Matrix* test_x,
                                      const Matrix* test_y, LossKind loss,
                                      ConvergenceConfig cfg, int outer_iters,
                                      Rng& rng);

/// Trace CSV: k,rho,eta,eps,h_norm,inner_iters,grad_sq.
void write_trace_csv(const std::string& path,
                     const std::vector<ConvergenceTraceRow>& rows);

}  // namespace blockadmm
