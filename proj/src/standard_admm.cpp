#include "blockadmm/standard_admm.hpp"

#include <Eigen/Cholesky>

#include <chrono>
#include <cmath>

#include "blockadmm/optim.hpp"

namespace blockadmm {

Matrix solve_w(const Matrix& z, const Matrix& u, const Matrix& a_prev,
               Scalar beta, Scalar lambda, bool* regularized_fallback) {
  if (!(beta > 0)) throw ConfigError("solve_w: beta must be positive");
  require_same_shape(z, u, "solve_w");
  if (a_prev.cols() != z.cols()) {
    throw ShapeError("solve_w: activations " +
                     shape_str(a_prev.rows(), a_prev.cols()) +
                     " vs pre-activations " + shape_str(z.rows(), z.cols()));
  }
  if (regularized_fallback) *regularized_fallback = false;
  const Matrix rhs = a_prev * (z + u).transpose();
  Matrix gram = a_prev * a_prev.transpose();
  gram.diagonal().array() += 2.0 * lambda / beta;

  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) {
    // rank-deficient A with lambda == 0: retry with a small ridge
    gram.diagonal().array() += 1e-10 * (1.0 + gram.diagonal().maxCoeff());
    llt.compute(gram);
    if (llt.info() != Eigen::Success) {
      throw NumericError("solve_w: Cholesky failed even with ridge fallback");
    }
    if (regularized_fallback) *regularized_fallback = true;
  }
  return llt.solve(rhs).transpose();
}

Matrix solve_a(const Matrix& z_next, const Matrix& u_next,
               const Matrix& w_next, const Matrix& z_l, const Matrix& v_l,
               Scalar beta_next, Scalar gamma) {
  if (!(gamma > 0)) throw ConfigError("solve_a: gamma must be positive");
  require_same_shape(z_next, u_next, "solve_a");
  require_same_shape(z_l, v_l, "solve_a");
  if (w_next.rows() != z_next.rows() || w_next.cols() != z_l.rows() ||
      z_next.cols() != z_l.cols()) {
    throw ShapeError("solve_a: weight " +
                     shape_str(w_next.rows(), w_next.cols()) +
                     " incompatible with " + shape_str(z_next.rows(),
                                                       z_next.cols()) +
                     " and " + shape_str(z_l.rows(), z_l.cols()));
  }
  Matrix normal = beta_next * (w_next.transpose() * w_next);
  normal.diagonal().array() += gamma;
  const Matrix rhs = beta_next * (w_next.transpose() * (z_next + u_next)) +
                     gamma * (relu(z_l) - v_l);
  Eigen::LLT<Matrix> llt(normal);
  if (llt.info() != Eigen::Success) {
    throw NumericError("solve_a: Cholesky failed");
  }
  return llt.solve(rhs);
}

Matrix solve_z_inner(const Matrix& w, const Matrix& a_prev, const Matrix& u,
                     const Matrix& a_l, const Matrix& v, Scalar beta,
                     Scalar gamma) {
  const Matrix a = w * a_prev - u;
  const Matrix b = a_l + v;

  // nonnegative branch: relu(z) = z
  Matrix z_pos =
      ((beta * a.array() + gamma * b.array()) / (beta + gamma)).cwiseMax(0.0);
  // negative branch: relu(z) = 0
  Matrix z_neg = a.cwiseMin(0.0);

  const auto obj_pos = 0.5 * beta * (z_pos.array() - a.array()).square() +
                       0.5 * gamma * (b.array() - z_pos.array()).square();
  const auto obj_neg = 0.5 * beta * (z_neg.array() - a.array()).square() +
                       0.5 * gamma * b.array().square();
  return (obj_pos <= obj_neg).select(z_pos, z_neg);
}

Matrix solve_z_last(const Matrix& y, const Matrix& w, const Matrix& a_prev,
                    const Matrix& u, Scalar beta, LossKind loss,
                    const StandardAdmmConfig& cfg, const Matrix& z_start) {
  const Matrix target = w * a_prev - u;
  if (loss == LossKind::Mse) {
    const Scalar inv_n = 1.0 / static_cast<Scalar>(y.cols());
    return (inv_n * y + beta * target) / (inv_n + beta);
  }
  // no closed form for cross-entropy; run a short Adam minimization
  Matrix z = z_start;
  AdamState opt;
  for (int i = 0; i < cfg.ce_z_steps; ++i) {
    const Matrix grad = softmax_ce_grad(y, z) + beta * (z - target);
    adam_step(z, grad, opt, cfg.ce_z_lr);
  }
  return z;
}

StandardAdmmState init_standard_admm(const std::vector<Index>& dims,
                                     Index samples,
                                     const StandardAdmmConfig& cfg, Rng& rng) {
  if (dims.size() < 2) {
    throw ConfigError("init_standard_admm: need at least input and output");
  }
  const Index layers = static_cast<Index>(dims.size()) - 1;
  StandardAdmmState st;
  st.beta.assign(layers, cfg.beta);
  st.gamma.assign(layers, cfg.gamma);
  st.lambda.assign(layers, cfg.lambda);
  for (Index l = 0; l < layers; ++l) {
    st.w.push_back(init_uniform(dims[l + 1], dims[l], 0.0, cfg.init_hi, rng));
    st.z.push_back(init_uniform(dims[l + 1], samples, 0.0, cfg.init_hi, rng));
    st.u.push_back(init_uniform(dims[l + 1], samples, 0.0, cfg.init_hi, rng));
    if (l + 1 < layers) {
      st.a.push_back(
          init_uniform(dims[l + 1], samples, 0.0, cfg.init_hi, rng));
      st.v.push_back(
          init_uniform(dims[l + 1], samples, 0.0, cfg.init_hi, rng));
    }
  }
  return st;
}

void standard_admm_sweep(StandardAdmmState& state, const Matrix& x,
                         const Matrix& y, LossKind loss,
                         const StandardAdmmConfig& cfg) {
  const Index layers = state.layer_count();
  bool fallback = false;
  for (Index l = 0; l < layers; ++l) {
    state.w[l] = solve_w(state.z[l], state.u[l], state.a_prev(x, l),
                         state.beta[l], state.lambda[l], &fallback);
    if (fallback) ++state.w_solve_fallbacks;
  }
  for (Index l = 0; l + 1 < layers; ++l) {
    state.z[l] = solve_z_inner(state.w[l], state.a_prev(x, l), state.u[l],
                               state.a[l], state.v[l], state.beta[l],
                               state.gamma[l]);
    state.a[l] = solve_a(state.z[l + 1], state.u[l + 1], state.w[l + 1],
                         state.z[l], state.v[l], state.beta[l + 1],
                         state.gamma[l]);
  }
  const Index last = layers - 1;
  state.z[last] =
      solve_z_last(y, state.w[last], state.a_prev(x, last), state.u[last],
                   state.beta[last], loss, cfg, state.z[last]);
}

void standard_admm_dual_update(StandardAdmmState& state, const Matrix& x) {
  const Index layers = state.layer_count();
  for (Index l = 0; l < layers; ++l) {
    state.u[l] += state.z[l] - state.w[l] * state.a_prev(x, l);
  }
  for (Index l = 0; l + 1 < layers; ++l) {
    state.v[l] += state.a[l] - relu(state.z[l]);
  }
}

Scalar standard_admm_objective(const StandardAdmmState& state, const Matrix& x,
                               const Matrix& y, LossKind loss) {
  const Index layers = state.layer_count();
  Scalar value = loss_value(loss, y, state.z[layers - 1]);
  for (Index l = 0; l < layers; ++l) {
    value += state.lambda[l] * state.w[l].squaredNorm();
    value += 0.5 * state.beta[l] *
             (state.z[l] - state.w[l] * state.a_prev(x, l) + state.u[l])
                 .squaredNorm();
  }
  for (Index l = 0; l + 1 < layers; ++l) {
    value += 0.5 * state.gamma[l] *
             (state.a[l] - relu(state.z[l]) + state.v[l]).squaredNorm();
  }
  return value;
}

Matrix standard_admm_predict(const StandardAdmmState& state, const Matrix& x) {
  const Index layers = state.layer_count();
  Matrix cur = x;
  for (Index l = 0; l < layers; ++l) {
    cur = state.w[l] * cur;
    if (l + 1 < layers) cur = relu(cur);
  }
  return cur;
}

Scalar standard_admm_residual(const StandardAdmmState& state,
                              const Matrix& x) {
  const Index layers = state.layer_count();
  Scalar total = 0;
  for (Index l = 0; l < layers; ++l) {
    total += (state.z[l] - state.w[l] * state.a_prev(x, l)).norm();
  }
  for (Index l = 0; l + 1 < layers; ++l) {
    total += (state.a[l] - relu(state.z[l])).norm();
  }
  return total;
}

std::vector<MetricsRecord> standard_admm_train(
    const std::vector<Index>& dims, const Matrix& x, const Matrix& y,
    const Matrix* test_x, const Matrix* test_y, LossKind loss,
    const StandardAdmmConfig& cfg, int epochs, Rng& rng,
    StandardAdmmState* state_out) {
  StandardAdmmState state = init_standard_admm(dims, x.cols(), cfg, rng);

  std::vector<MetricsRecord> metrics;
  metrics.reserve(epochs);
  Scalar train_seconds = 0;
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    standard_admm_sweep(state, x, y, loss, cfg);
    standard_admm_dual_update(state, x);
    train_seconds +=
        std::chrono::duration<Scalar>(std::chrono::steady_clock::now() -
                                      started)
            .count();

    MetricsRecord rec;
    rec.epoch = epoch;
    rec.wall_clock_seconds = train_seconds;
    rec.train_loss = loss_value(loss, y, state.z.back());
    rec.total_coupling_residual = standard_admm_residual(state, x);
    if (test_x && test_y) {
      rec.test_accuracy = accuracy(*test_y, standard_admm_predict(state, *test_x));
    }
    if (!std::isfinite(rec.train_loss)) {
      throw NumericError("standard_admm_train: non-finite loss at epoch " +
                         std::to_string(epoch));
    }
    metrics.push_back(rec);
  }
  if (state_out) *state_out = std::move(state);
  return metrics;
}

}  // namespace blockadmm
