#include "blockadmm/online_admm.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

namespace blockadmm {

namespace {

struct PenaltyPieces {
  Scalar value = 0;
  Scalar resid_norm = 0;
  Matrix diff;          // z_t - block(z_prev)
  Scalar diff_weight;   // d value / d diff = diff_weight * diff
  BlockCache cache;
};

PenaltyPieces eval_pieces(const Matrix& z_t, const Matrix& z_prev, Scalar u,
                          const Block& block, Scalar beta,
                          bool additive_dual_form, bool want_cache) {
  PenaltyPieces p;
  const Matrix out = want_cache ? block_forward(block, z_prev, &p.cache)
                                : block_forward(block, z_prev);
  require_same_shape(z_t, out, "online_penalty");
  p.diff = z_t - out;
  p.resid_norm = p.diff.norm();
  if (additive_dual_form) {
    p.value = 0.5 * beta * (p.diff.squaredNorm() + u);
    p.diff_weight = beta;
  } else {
    const Scalar s = p.resid_norm + u;
    p.value = 0.5 * beta * s * s;
    // d/d diff of beta/2 (||diff|| + u)^2 = beta (||diff|| + u) diff/||diff||;
    // zero at zero residual (subgradient choice)
    p.diff_weight = p.resid_norm > 0 ? beta * s / p.resid_norm : 0.0;
  }
  return p;
}

void theta_step(Block& block, const BlockGrads& grads,
                const OnlineAdmmConfig& cfg) {
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

Scalar online_penalty(const Matrix& z_t, const Matrix& z_prev, Scalar u,
                      const Block& block, Scalar beta,
                      bool additive_dual_form) {
  return eval_pieces(z_t, z_prev, u, block, beta, additive_dual_form, false)
      .value;
}

OnlinePenaltyGrads online_penalty_grads(const Matrix& z_t,
                                        const Matrix& z_prev, Scalar u,
                                        const Block& block, Scalar beta,
                                        bool additive_dual_form) {
  PenaltyPieces p =
      eval_pieces(z_t, z_prev, u, block, beta, additive_dual_form, true);
  OnlinePenaltyGrads g;
  g.value = p.value;
  g.resid_norm = p.resid_norm;
  g.d_z_t = p.diff_weight * p.diff;
  g.d_theta = block_backward(block, p.cache, (-p.diff_weight) * p.diff);
  g.d_z_prev = g.d_theta.input;
  return g;
}

OnlineStepStats online_sample_step(const Matrix& x_cols, const Matrix& y_cols,
                                   std::vector<Block>& blocks,
                                   OnlineState& state, LossKind loss,
                                   const OnlineAdmmConfig& cfg) {
  const Index t_count = static_cast<Index>(blocks.size());
  OnlineStepStats stats;

  // fresh z's from a forward pass; discarded when this step returns
  std::vector<Matrix> z(t_count);
  {
    Matrix cur = x_cols;
    for (Index t = 0; t < t_count; ++t) {
      cur = block_forward(blocks[t], cur);
      z[t] = cur;
    }
  }
  std::size_t live = static_cast<std::size_t>(state.u.size());
  for (const Matrix& m : z) live += static_cast<std::size_t>(m.size());
  state.peak_coupling_elements = std::max(state.peak_coupling_elements, live);

  stats.loss = loss_value(loss, y_cols, z.back());

  auto z_prev_of = [&](Index t) -> const Matrix& {
    return t == 0 ? x_cols : z[t - 1];
  };
  std::vector<AdamState> z_opt(t_count);
  auto z_step = [&](Index t, const Matrix& grad) {
    if (cfg.z_optim == Optim::Adam) {
      adam_step(z[t], grad, z_opt[t], cfg.z_lr);
    } else {
      sgd_step(z[t], grad, cfg.z_lr);
    }
  };

  // terminal z update
  {
    const Index last = t_count - 1;
    OnlinePenaltyGrads pg =
        online_penalty_grads(z[last], z_prev_of(last), state.u[last],
                             blocks[last], state.beta[last],
                             cfg.additive_dual_form);
    z_step(last, loss_grad(loss, y_cols, z[last]) + pg.d_z_t);
  }
  // inner z updates, reverse order, using the already-updated neighbor
  for (Index t = t_count - 2; t >= 0; --t) {
    OnlinePenaltyGrads own =
        online_penalty_grads(z[t], z_prev_of(t), state.u[t], blocks[t],
                             state.beta[t], cfg.additive_dual_form);
    OnlinePenaltyGrads next =
        online_penalty_grads(z[t + 1], z[t], state.u[t + 1], blocks[t + 1],
                             state.beta[t + 1], cfg.additive_dual_form);
    z_step(t, own.d_z_t + next.d_z_prev);
  }
  // Theta sweep, then dual accumulation with the fresh parameters
  for (Index t = 0; t < t_count; ++t) {
    OnlinePenaltyGrads pg =
        online_penalty_grads(z[t], z_prev_of(t), state.u[t], blocks[t],
                             state.beta[t], cfg.additive_dual_form);
    theta_step(blocks[t], pg.d_theta, cfg);

    const Scalar resid =
        (z[t] - block_forward(blocks[t], z_prev_of(t))).norm();
    state.u[t] += resid;
    stats.residual_sum += resid;
  }
  return stats;
}

std::vector<MetricsRecord> online_train(std::vector<Block>& blocks,
                                        const Matrix& x, const Matrix& y,
                                        const Matrix* test_x,
                                        const Matrix* test_y, LossKind loss,
                                        const OnlineAdmmConfig& cfg,
                                        int epochs, Rng& rng,
                                        OnlineState* state_out) {
  const Index t_count = static_cast<Index>(blocks.size());
  const Index n = x.cols();
  OnlineState state;
  state.beta = cfg.beta;
  if (static_cast<Index>(state.beta.size()) != t_count) {
    throw ShapeError("online_train: beta count mismatch");
  }
  state.u.resize(t_count);
  for (Scalar& u : state.u) {
    u = cfg.dual_init_hi > 0 ? rng.uniform(0.0, cfg.dual_init_hi) : 0.0;
  }

  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index(0));

  std::vector<MetricsRecord> metrics;
  metrics.reserve(epochs);
  Scalar train_seconds = 0;
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    rng.shuffle(order);
    Scalar resid_sum = 0;
    Index steps = 0;
    for (Index begin = 0; begin < n; begin += cfg.batch) {
      const Index size = std::min<Index>(cfg.batch, n - begin);
      std::vector<Index> idx(order.begin() + begin,
                             order.begin() + begin + size);
      const Matrix xb = gather_columns(x, idx);
      const Matrix yb = gather_columns(y, idx);
      const OnlineStepStats s =
          online_sample_step(xb, yb, blocks, state, loss, cfg);
      resid_sum += s.residual_sum;
      ++steps;
    }
    train_seconds +=
        std::chrono::duration<Scalar>(std::chrono::steady_clock::now() -
                                      started)
            .count();

    MetricsRecord rec;
    rec.epoch = epoch;
    rec.wall_clock_seconds = train_seconds;
    rec.train_loss = loss_value(loss, y, straight_through(blocks, x));
    rec.total_coupling_residual = resid_sum / static_cast<Scalar>(steps);
    if (test_x && test_y) {
      rec.test_accuracy = accuracy(*test_y, straight_through(blocks, *test_x));
    }
    if (!std::isfinite(rec.train_loss)) {
      throw NumericError("online_train: non-finite loss at epoch " +
                         std::to_string(epoch));
    }
    metrics.push_back(rec);
  }
  if (state_out) *state_out = std::move(state);
  return metrics;
}

}  // namespace blockadmm
