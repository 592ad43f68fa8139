#pragma once

#include <vector>

#include "blockadmm/batch_admm.hpp"
#include "blockadmm/layer.hpp"
#include "blockadmm/loss.hpp"
#include "blockadmm/metrics.hpp"
#include "blockadmm/rng.hpp"

namespace blockadmm {

/// Online coupling state: one scalar dual per block. The per-sample z
/// vectors are rebuilt from a forward pass at every iteration and discarded
/// afterwards.
struct OnlineState {
  std::vector<Scalar> u;
  std::vector<Scalar> beta;
  // high-water mark of live coupling scalars (transient z's plus duals)
  std::size_t peak_coupling_elements = 0;
};

struct OnlineAdmmConfig {
  std::vector<Scalar> beta;
  Scalar z_lr = 0.5;
  Scalar theta_lr = 5e-3;
  Optim z_optim = Optim::Adam;
  Optim theta_optim = Optim::Adam;
  int batch = 64;
  // Use the squared-residual-plus-dual penalty variant instead of the
  // (norm + dual)^2 default.
  bool additive_dual_form = false;
  Scalar dual_init_hi = 1e-4;
};

/// beta/2 (||z_t - block(z_prev)||_F + u)^2, or with additive_dual_form
/// beta/2 (||z_t - block(z_prev)||_F^2 + u).
Scalar online_penalty(const Matrix& z_t, const Matrix& z_prev, Scalar u,
                      const Block& block, Scalar beta,
                      bool additive_dual_form = false);

struct OnlinePenaltyGrads {
  Scalar value = 0;
  Scalar resid_norm = 0;
  Matrix d_z_t;
  Matrix d_z_prev;
  BlockGrads d_theta;
};

/// Gradients of online_penalty. At zero residual the norm's gradient is
/// taken as 0.
OnlinePenaltyGrads online_penalty_grads(const Matrix& z_t,
                                        const Matrix& z_prev, Scalar u,
                                        const Block& block, Scalar beta,
                                        bool additive_dual_form = false);

struct OnlineStepStats {
  Scalar loss = 0;            // J at the freshly initialized z_T
  Scalar residual_sum = 0;    // sum_t ||z_t - block(z_{t-1})|| after updates
};

/// One pass of the per-sample algorithm over a column batch: fresh z init,
/// one reverse z sweep, one Theta sweep, then scalar dual accumulation.
OnlineStepStats online_sample_step(const Matrix& x_cols, const Matrix& y_cols,
                                   std::vector<Block>& blocks,
                                   OnlineState& state, LossKind loss,
                                   const OnlineAdmmConfig& cfg);

std::vector<MetricsRecord> online_train(std::vector<Block>& blocks,
                                        const Matrix& x, const Matrix& y,
                                        const Matrix* test_x,
                                        const Matrix* test_y, LossKind loss,
                                        const OnlineAdmmConfig& cfg,
                                        int epochs, Rng& rng,
                                        OnlineState* state_out = nullptr);

}  // namespace blockadmm
