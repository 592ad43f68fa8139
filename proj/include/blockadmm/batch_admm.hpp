#pragma once

#include <vector>

#include "blockadmm/layer.hpp"
#include "blockadmm/loss.hpp"
#include "blockadmm/metrics.hpp"
#include "blockadmm/rng.hpp"

namespace blockadmm {

/// Decoupling variables for batch training: one (Z_t, U_t, beta_t) triple per
/// block. Z_0 is the input X and is passed around separately.
struct CouplingState {
  std::vector<Matrix> z;
  std::vector<Matrix> u;
  std::vector<Scalar> beta;
  std::vector<AdamState> z_opt;

  Index block_count() const { return static_cast<Index>(z.size()); }

  /// Stored coupling scalars (Z and U entries); the memory-accounting
  /// counter compared against online mode.
  std::size_t coupling_elements() const {
    std::size_t n = 0;
    for (const Matrix& m : z) n += static_cast<std::size_t>(m.size());
    for (const Matrix& m : u) n += static_cast<std::size_t>(m.size());
    return n;
  }
};

struct BatchAdmmConfig {
  std::vector<Scalar> beta;  // per block
  Scalar z_lr = 0.5;
  Scalar theta_lr = 5e-3;
  Optim z_optim = Optim::Adam;
  Optim theta_optim = Optim::Adam;
  int primal_steps = 3;
  int theta_batch = 64;
  // Repeat the Theta sweep inside every primal step; when off, the Z sweeps
  // are repeated and Theta is updated once per cycle.
  bool repeat_theta = true;
  Scalar dual_init_hi = 1e-4;
};

/// Value and gradients of the block-coupling term
/// beta/2 ||z_t - block(z_prev) + u_t||_F^2.
struct PenaltyGrads {
  Scalar value = 0;
  Matrix d_z_t;
  Matrix d_z_prev;
  BlockGrads d_theta;
};

Scalar coupling_penalty(const Matrix& z_t, const Matrix& z_prev,
                        const Matrix& u_t, const Block& block, Scalar beta);

PenaltyGrads coupling_penalty_grads(const Matrix& z_t, const Matrix& z_prev,
                                    const Matrix& u_t, const Block& block,
                                    Scalar beta);

/// Z_t from a chained forward pass, U_t ~ U(0, dual_init_hi) (zeros when
/// dual_init_hi == 0).
CouplingState init_coupling(const std::vector<Block>& blocks, const Matrix& x,
                            const std::vector<Scalar>& beta,
                            Scalar dual_init_hi, Rng& rng);

/// One optimizer step on Z_T against loss + terminal coupling.
void update_z_terminal(CouplingState& state, const std::vector<Block>& blocks,
                       const Matrix& x, const Matrix& y, LossKind loss,
                       const BatchAdmmConfig& cfg);

/// One optimizer step on Z_t (0 <= t <= T-2) against its own coupling plus
/// the already-updated downstream coupling (Gauss-Seidel order).
void update_z_inner(CouplingState& state, const std::vector<Block>& blocks,
                    const Matrix& x, Index t, const BatchAdmmConfig& cfg);

/// Optimizer step on block t's parameters using the coupling penalty
/// restricted to the drawn sample columns, normalized by the batch size.
void update_theta_minibatch(CouplingState& state, std::vector<Block>& blocks,
                            const Matrix& x, Index t,
                            const std::vector<Index>& batch,
                            const BatchAdmmConfig& cfg);

/// One parameter step against beta/2 ||z - block(z_prev) + u||^2 / cols.
void coupling_theta_step(Block& block, const Matrix& z_prev_cols,
                         const Matrix& z_cols, const Matrix& u_cols,
                         Scalar beta, Optim optim, Scalar lr);

/// Exact dual ascent: U_t += Z_t - block(Z_{t-1}), fresh forward passes.
void update_duals(CouplingState& state, const std::vector<Block>& blocks,
                  const Matrix& x);

/// Per-block residual norms ||Z_t - block(Z_{t-1})||_F.
std::vector<Scalar> residual_norms(const CouplingState& state,
                                   const std::vector<Block>& blocks,
                                   const Matrix& x);

/// Sum of the per-block residual norms.
Scalar total_residual(const CouplingState& state,
                      const std::vector<Block>& blocks, const Matrix& x);

/// Norm of the stacked constraint residual (blocks ascending, column-major).
Scalar stacked_residual_norm(const CouplingState& state,
                             const std::vector<Block>& blocks,
                             const Matrix& x);

/// Full augmented objective: J(Y, Z_T) + sum_t beta_t/2 ||Z_t - f(Z_prev) +
/// U_t||^2.
Scalar augmented_objective(const CouplingState& state,
                           const std::vector<Block>& blocks, const Matrix& x,
                           const Matrix& y, LossKind loss);

/// Squared norm of the deterministic full-batch gradient of the augmented
/// objective over every Z_t and every block parameter.
Scalar augmented_grad_sqnorm(const CouplingState& state,
                             const std::vector<Block>& blocks, const Matrix& x,
                             const Matrix& y, LossKind loss);

/// One primal sweep: Z_T update, inner Z updates in reverse order, then a
/// minibatch Theta update per block.
void primal_sweep(CouplingState& state, std::vector<Block>& blocks,
                  const Matrix& x, const Matrix& y, LossKind loss,
                  const BatchAdmmConfig& cfg, Rng& rng, bool update_theta);

/// primal_steps primal sweeps followed by one dual sweep.
void train_cycle(CouplingState& state, std::vector<Block>& blocks,
                 const Matrix& x, const Matrix& y, LossKind loss,
                 const BatchAdmmConfig& cfg, Rng& rng);

/// Full batch training run; one metrics row per cycle.
std::vector<MetricsRecord> batch_admm_train(
    std::vector<Block>& blocks, const Matrix& x, const Matrix& y,
    const Matrix* test_x, const Matrix* test_y, LossKind loss,
    const BatchAdmmConfig& cfg, int epochs, Rng& rng,
    CouplingState* state_out = nullptr);

/// k distinct indices drawn uniformly from [0, n).
std::vector<Index> draw_batch(Index n, Index k, Rng& rng);

/// Copy of the selected columns.
Matrix gather_columns(const Matrix& m, const std::vector<Index>& idx);

}  // namespace blockadmm
