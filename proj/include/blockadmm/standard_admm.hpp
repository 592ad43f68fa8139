#pragma once

#include <vector>

#include "blockadmm/loss.hpp"
#include "blockadmm/metrics.hpp"
#include "blockadmm/rng.hpp"

namespace blockadmm {

/// Per-layer splitting state for the closed-form trainer: weights W_l,
/// pre-activations Z_l, activations A_l (A_0 is the input X), and the duals
/// for both constraint families.
struct StandardAdmmState {
  std::vector<Matrix> w;  // L
  std::vector<Matrix> z;  // L
  std::vector<Matrix> a;  // L-1
  std::vector<Matrix> u;  // L
  std::vector<Matrix> v;  // L-1
  std::vector<Scalar> beta;
  std::vector<Scalar> gamma;
  std::vector<Scalar> lambda;
  int w_solve_fallbacks = 0;

  Index layer_count() const { return static_cast<Index>(w.size()); }
  const Matrix& a_prev(const Matrix& x, Index l) const {
    return l == 0 ? x : a[l - 1];
  }
};

struct StandardAdmmConfig {
  Scalar beta = 10;
  Scalar gamma = 10;
  Scalar lambda = 5e-5;
  Scalar init_hi = 1e-4;
  int ce_z_steps = 50;  // iterative last-layer solve when loss has no closed form
  Scalar ce_z_lr = 0.1;
};

/// Ridge-regularized least squares: the exact minimizer of
/// beta/2 ||Z - W A + U||_F^2 + lambda ||W||_F^2. With lambda == 0 and a
/// rank-deficient A the Cholesky solve can fail; a small ridge is then added
/// and reported through `regularized_fallback`.
Matrix solve_w(const Matrix& z, const Matrix& u, const Matrix& a_prev,
               Scalar beta, Scalar lambda,
               bool* regularized_fallback = nullptr);

/// Exact minimizer of beta/2 ||Z_next - W_next A + U_next||^2 +
/// gamma/2 ||A - relu(Z_l) + V||^2 (SPD system for gamma > 0).
Matrix solve_a(const Matrix& z_next, const Matrix& u_next,
               const Matrix& w_next, const Matrix& z_l, const Matrix& v_l,
               Scalar beta_next, Scalar gamma);

/// Entrywise exact minimizer of beta/2 (z-a)^2 + gamma/2 (b - relu(z))^2
/// with a = (W A_prev - U) entry and b = (A_l + V) entry. Both branch minima
/// are compared; ties go to the nonnegative branch.
Matrix solve_z_inner(const Matrix& w, const Matrix& a_prev, const Matrix& u,
                     const Matrix& a_l, const Matrix& v, Scalar beta,
                     Scalar gamma);

/// Last-layer pre-activation solve. MSE has the entrywise closed form
/// (Y/N + beta (W A - U)) / (1/N + beta); cross-entropy is minimized
/// iteratively with Adam.
Matrix solve_z_last(const Matrix& y, const Matrix& w, const Matrix& a_prev,
                    const Matrix& u, Scalar beta, LossKind loss,
                    const StandardAdmmConfig& cfg, const Matrix& z_start);

StandardAdmmState init_standard_admm(const std::vector<Index>& dims,
                                     Index samples,
                                     const StandardAdmmConfig& cfg, Rng& rng);

/// One full primal pass in the fixed update order (W sweep, then Z/A pairs,
/// then the last-layer Z).
void standard_admm_sweep(StandardAdmmState& state, const Matrix& x,
                         const Matrix& y, LossKind loss,
                         const StandardAdmmConfig& cfg);

/// Exact dual ascent on both constraint families.
void standard_admm_dual_update(StandardAdmmState& state, const Matrix& x);

/// Value of the full augmented Lagrangian at the current state.
Scalar standard_admm_objective(const StandardAdmmState& state, const Matrix& x,
                               const Matrix& y, LossKind loss);

/// Inference with the current weights: relu between layers, linear output.
Matrix standard_admm_predict(const StandardAdmmState& state, const Matrix& x);

Scalar standard_admm_residual(const StandardAdmmState& state, const Matrix& x);

std::vector<MetricsRecord> standard_admm_train(
    const std::vector<Index>& dims, const Matrix& x, const Matrix& y,
    const Matrix* test_x, const Matrix* test_y, LossKind loss,
    const StandardAdmmConfig& cfg, int epochs, Rng& rng,
    StandardAdmmState* state_out = nullptr);

}  // namespace blockadmm
