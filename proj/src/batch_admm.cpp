#include "blockadmm/batch_admm.hpp"

#include <chrono>
#include <numeric>

namespace blockadmm {

namespace {

const Matrix& z_prev_of(const CouplingState& state, const Matrix& x,
                        Index t) {
  return t == 0 ? x : state.z[t - 1];
}

void z_step(CouplingState& state, Index t, const Matrix& grad,
            const BatchAdmmConfig& cfg) {
  if (cfg.z_optim == Optim::Adam) {
    adam_step(state.z[t], grad, state.z_opt[t], cfg.z_lr);
  } else {
    sgd_step(state.z[t], grad, cfg.z_lr);
  }
}

void theta_step(Block& block, const BlockGrads& grads,
                const BatchAdmmConfig& cfg) {
  block.ensure_opt_state();
  for (std::size_t i = 0; i < block.layers.size(); ++i) {
    Layer& layer = block.layers[i];
    if (layer.kind != Layer::Kind::Linear) continue;
    if (cfg.theta_optim == Optim::Adam) {
      adam_step(layer.weight, grads.weight[i], block.weight_opt[i],
                cfg.theta_lr);
      if (layer.has_bias) {
        adam_step(layer.bias, grads.bias[i], block.bias_opt[i], cfg.theta_lr);
      }
    } else {
      sgd_step(layer.weight, grads.weight[i], cfg.theta_lr);
      if (layer.has_bias) sgd_step(layer.bias, grads.bias[i], cfg.theta_lr);
    }
  }
}

}  // namespace

Scalar coupling_penalty(const Matrix& z_t, const Matrix& z_prev,
                        const Matrix& u_t, const Block& block, Scalar beta) {
  const Matrix r = z_t - block_forward(block, z_prev) + u_t;
  return 0.5 * beta * r.squaredNorm();
}

PenaltyGrads coupling_penalty_grads(const Matrix& z_t, const Matrix& z_prev,
                                    const Matrix& u_t, const Block& block,
                                    Scalar beta) {
  BlockCache cache;
  const Matrix out = block_forward(block, z_prev, &cache);
  require_same_shape(z_t, out, "coupling_penalty");
  const Matrix r = z_t - out + u_t;

  PenaltyGrads g;
  g.value = 0.5 * beta * r.squaredNorm();
  g.d_z_t = beta * r;
  // d/d(theta, z_prev) of beta/2 ||z - f(z_prev) + u||^2 flows through -f
  g.d_theta = block_backward(block, cache, (-beta) * r);
  g.d_z_prev = g.d_theta.input;
  return g;
}

CouplingState init_coupling(const std::vector<Block>& blocks, const Matrix& x,
                            const std::vector<Scalar>& beta,
                            Scalar dual_init_hi, Rng& rng) {
  const Index t_count = static_cast<Index>(blocks.size());
  if (static_cast<Index>(beta.size()) != t_count) {
    throw ShapeError("init_coupling: beta count " +
                     std::to_string(beta.size()) + " vs " +
                     std::to_string(t_count) + " blocks");
  }
  CouplingState state;
  state.beta = beta;
  state.z.reserve(t_count);
  state.u.reserve(t_count);
  state.z_opt.assign(t_count, AdamState{});

  Matrix cur = x;
  for (const Block& b : blocks) {
    cur = block_forward(b, cur);
    state.z.push_back(cur);
    if (dual_init_hi > 0) {
      state.u.push_back(
          init_uniform(cur.rows(), cur.cols(), 0.0, dual_init_hi, rng));
    } else {
      state.u.push_back(Matrix::Zero(cur.rows(), cur.cols()));
    }
  }
  return state;
}

void update_z_terminal(CouplingState& state, const std::vector<Block>& blocks,
                       const Matrix& x, const Matrix& y, LossKind loss,
                       const BatchAdmmConfig& cfg) {
  const Index last = state.block_count() - 1;
  const Matrix out =
      block_forward(blocks[last], z_prev_of(state, x, last));
  const Matrix grad = loss_grad(loss, y, state.z[last]) +
                      state.beta[last] * (state.z[last] - out + state.u[last]);
  z_step(state, last, grad, cfg);
}

void update_z_inner(CouplingState& state, const std::vector<Block>& blocks,
                    const Matrix& x, Index t, const BatchAdmmConfig& cfg) {
  if (t < 0 || t >= state.block_count() - 1) {
    throw ShapeError("update_z_inner: t out of range");
  }
  // own coupling term
  const Matrix own_out = block_forward(blocks[t], z_prev_of(state, x, t));
  Matrix grad = state.beta[t] * (state.z[t] - own_out + state.u[t]);

  // downstream coupling, already-updated z_{t+1}
  BlockCache cache;
  const Matrix next_out = block_forward(blocks[t + 1], state.z[t], &cache);
  const Matrix next_r = state.z[t + 1] - next_out + state.u[t + 1];
  grad += block_backward(blocks[t + 1], cache, (-state.beta[t + 1]) * next_r)
              .input;

  z_step(state, t, grad, cfg);
}

void coupling_theta_step(Block& block, const Matrix& z_prev_cols,
                         const Matrix& z_cols, const Matrix& u_cols,
                         Scalar beta, Optim optim, Scalar lr) {
  BlockCache cache;
  const Matrix out = block_forward(block, z_prev_cols, &cache);
  const Matrix r = z_cols - out + u_cols;
  // penalty normalized by the batch size so the gradient scale does not
  // depend on how many columns were drawn
  const Scalar scale = -beta / static_cast<Scalar>(z_cols.cols());
  const BlockGrads grads = block_backward(block, cache, scale * r);
  BatchAdmmConfig step_cfg;
  step_cfg.theta_optim = optim;
  step_cfg.theta_lr = lr;
  theta_step(block, grads, step_cfg);
}

void update_theta_minibatch(CouplingState& state, std::vector<Block>& blocks,
                            const Matrix& x, Index t,
                            const std::vector<Index>& batch,
                            const BatchAdmmConfig& cfg) {
  if (batch.empty()) {
    throw ShapeError("update_theta_minibatch: empty batch");
  }
  coupling_theta_step(blocks[t],
                      gather_columns(z_prev_of(state, x, t), batch),
                      gather_columns(state.z[t], batch),
                      gather_columns(state.u[t], batch), state.beta[t],
                      cfg.theta_optim, cfg.theta_lr);
}

void update_duals(CouplingState& state, const std::vector<Block>& blocks,
                  const Matrix& x) {
  for (Index t = 0; t < state.block_count(); ++t) {
    state.u[t] +=
        state.z[t] - block_forward(blocks[t], z_prev_of(state, x, t));
  }
}

std::vector<Scalar> residual_norms(const CouplingState& state,
                                   const std::vector<Block>& blocks,
                                   const Matrix& x) {
  std::vector<Scalar> norms;
  norms.reserve(state.z.size());
  for (Index t = 0; t < state.block_count(); ++t) {
    norms.push_back(
        (state.z[t] - block_forward(blocks[t], z_prev_of(state, x, t)))
            .norm());
  }
  return norms;
}

Scalar total_residual(const CouplingState& state,
                      const std::vector<Block>& blocks, const Matrix& x) {
  const auto norms = residual_norms(state, blocks, x);
  return std::accumulate(norms.begin(), norms.end(), Scalar(0));
}

Scalar stacked_residual_norm(const CouplingState& state,
                             const std::vector<Block>& blocks,
                             const Matrix& x) {
  Scalar sq = 0;
  for (Scalar r : residual_norms(state, blocks, x)) sq += r * r;
  return std::sqrt(sq);
}

Scalar augmented_objective(const CouplingState& state,
                           const std::vector<Block>& blocks, const Matrix& x,
                           const Matrix& y, LossKind loss) {
  Scalar value = loss_value(loss, y, state.z.back());
  for (Index t = 0; t < state.block_count(); ++t) {
    value += coupling_penalty(state.z[t], z_prev_of(state, x, t), state.u[t],
                              blocks[t], state.beta[t]);
  }
  return value;
}

Scalar augmented_grad_sqnorm(const CouplingState& state,
                             const std::vector<Block>& blocks, const Matrix& x,
                             const Matrix& y, LossKind loss) {
  const Index t_count = state.block_count();
  std::vector<BlockCache> caches(t_count);
  std::vector<Matrix> resid(t_count);
  for (Index t = 0; t < t_count; ++t) {
    const Matrix out =
        block_forward(blocks[t], z_prev_of(state, x, t), &caches[t]);
    resid[t] = state.z[t] - out + state.u[t];
  }

  Scalar sq = 0;
  std::vector<Matrix> input_grads(t_count);  // pull of coupling t on z_{t-1}
  for (Index t = 0; t < t_count; ++t) {
    const BlockGrads g =
        block_backward(blocks[t], caches[t], (-state.beta[t]) * resid[t]);
    for (const Matrix& gw : g.weight) sq += gw.squaredNorm();
    for (const Vector& gb : g.bias) sq += gb.squaredNorm();
    input_grads[t] = g.input;
  }
  for (Index t = 0; t < t_count; ++t) {
    Matrix gz = state.beta[t] * resid[t];
    if (t + 1 < t_count) gz += input_grads[t + 1];
    if (t == t_count - 1) gz += loss_grad(loss, y, state.z[t]);
    sq += gz.squaredNorm();
  }
  return sq;
}

void primal_sweep(CouplingState& state, std::vector<Block>& blocks,
                  const Matrix& x, const Matrix& y, LossKind loss,
                  const BatchAdmmConfig& cfg, Rng& rng, bool update_theta) {
  const Index t_count = state.block_count();
  update_z_terminal(state, blocks, x, y, loss, cfg);
  for (Index t = t_count - 2; t >= 0; --t) {
    update_z_inner(state, blocks, x, t, cfg);
  }
  if (update_theta) {
    const Index n = x.cols();
    const Index k = std::min<Index>(cfg.theta_batch, n);
    for (Index t = 0; t < t_count; ++t) {
      update_theta_minibatch(state, blocks, x, t, draw_batch(n, k, rng), cfg);
    }
  }
}

void train_cycle(CouplingState& state, std::vector<Block>& blocks,
                 const Matrix& x, const Matrix& y, LossKind loss,
                 const BatchAdmmConfig& cfg, Rng& rng) {
  for (int p = 0; p < cfg.primal_steps; ++p) {
    const bool theta_now = cfg.repeat_theta || p == cfg.primal_steps - 1;
    primal_sweep(state, blocks, x, y, loss, cfg, rng, theta_now);
  }
  update_duals(state, blocks, x);
}

std::vector<MetricsRecord> batch_admm_train(
    std::vector<Block>& blocks, const Matrix& x, const Matrix& y,
    const Matrix* test_x, const Matrix* test_y, LossKind loss,
    const BatchAdmmConfig& cfg, int epochs, Rng& rng,
    CouplingState* state_out) {
  CouplingState state =
      init_coupling(blocks, x, cfg.beta, cfg.dual_init_hi, rng);

  std::vector<MetricsRecord> metrics;
  metrics.reserve(epochs);
  Scalar train_seconds = 0;
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    train_cycle(state, blocks, x, y, loss, cfg, rng);
    train_seconds +=
        std::chrono::duration<Scalar>(std::chrono::steady_clock::now() -
                                      started)
            .count();

    MetricsRecord rec;
    rec.epoch = epoch;
    rec.wall_clock_seconds = train_seconds;
    rec.train_loss = loss_value(loss, y, state.z.back());
    rec.total_coupling_residual = total_residual(state, blocks, x);
    if (test_x && test_y) {
      rec.test_accuracy = accuracy(*test_y, straight_through(blocks, *test_x));
    }
    if (!std::isfinite(rec.train_loss) ||
        !std::isfinite(rec.total_coupling_residual)) {
      throw NumericError("batch_admm_train: non-finite state at epoch " +
                         std::to_string(epoch));
    }
    metrics.push_back(rec);
  }
  if (state_out) *state_out = std::move(state);
  return metrics;
}

std::vector<Index> draw_batch(Index n, Index k, Rng& rng) {
  if (k <= 0 || k > n) {
    throw ShapeError("draw_batch: need 0 < k <= n");
  }
  std::vector<Index> idx(n);
  std::iota(idx.begin(), idx.end(), Index(0));
  for (Index i = 0; i < k; ++i) {
    std::swap(idx[i], idx[i + rng.index(n - i)]);
  }
  idx.resize(k);
  return idx;
}

Matrix gather_columns(const Matrix& m, const std::vector<Index>& idx) {
  Matrix out(m.rows(), static_cast<Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) {
    out.col(static_cast<Index>(j)) = m.col(idx[j]);
  }
  return out;
}

}  // namespace blockadmm
