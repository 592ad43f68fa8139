#include "blockadmm/nmf.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

namespace blockadmm {

Matrix reshape_activations(const Tensor4& t) {
  const auto [n, c, h, w] = t.dims;
  if (n <= 0 || c <= 0 || h <= 0 || w <= 0) {
    throw ShapeError("reshape_activations: need a rank-4 tensor");
  }
  Matrix m(c, n * h * w);
  for (Index ni = 0; ni < n; ++ni) {
    for (Index ci = 0; ci < c; ++ci) {
      for (Index hi = 0; hi < h; ++hi) {
        for (Index wi = 0; wi < w; ++wi) {
          m(ci, (ni * h + hi) * w + wi) = t.at(ni, ci, hi, wi);
        }
      }
    }
  }
  return m;
}

Tensor4 restore_activations(const Matrix& m,
                            const std::array<Index, 4>& dims) {
  const auto [n, c, h, w] = dims;
  if (m.rows() != c || m.cols() != n * h * w) {
    throw ShapeError("restore_activations: matrix " +
                     shape_str(m.rows(), m.cols()) + " does not match dims");
  }
  Tensor4 t = Tensor4::zeros(n, c, h, w);
  for (Index ni = 0; ni < n; ++ni) {
    for (Index ci = 0; ci < c; ++ci) {
      for (Index hi = 0; hi < h; ++hi) {
        for (Index wi = 0; wi < w; ++wi) {
          t.at(ni, ci, hi, wi) = m(ci, (ni * h + hi) * w + wi);
        }
      }
    }
  }
  return t;
}

NmfState init_nmf(const Matrix& z_t, int rank, Scalar gamma, int position,
                  Rng& rng) {
  if (rank <= 0) throw ConfigError("init_nmf: rank must be positive");
  if (!(gamma > 0)) throw ConfigError("init_nmf: gamma must be positive");
  const Index m = z_t.rows();
  const Index n = z_t.cols();
  if (rank > std::min(m, n)) {
    std::fprintf(stderr,
                 "warning: nmf rank %d exceeds min(%lld, %lld); factors are "
                 "overcomplete\n",
                 rank, static_cast<long long>(m), static_cast<long long>(n));
  }
  NmfState nmf;
  nmf.rank = rank;
  nmf.gamma = gamma;
  nmf.position = position;
  nmf.basis = init_normal(m, rank, 0.1, rng).cwiseAbs();
  nmf.dual = Matrix::Zero(m, n);
  nmf.scores = project_scores(nmf.basis, z_t);
  return nmf;
}

Scalar scores_objective(const NmfState& nmf, const Matrix& z_t,
                        const NextCoupling* next, const Matrix& scores) {
  Scalar value =
      0.5 * nmf.gamma * (z_t - nmf.basis * scores + nmf.dual).squaredNorm();
  if (next && next->block) {
    value += 0.5 * next->beta *
             (*next->z_next - block_forward(*next->block, scores) +
              *next->u_next)
                 .squaredNorm();
  }
  return value;
}

namespace {

bool single_linear(const Block& block) {
  return block.layers.size() == 1 &&
         block.layers[0].kind == Layer::Kind::Linear;
}

}  // namespace

void update_scores(NmfState& nmf, const Matrix& z_t, const NextCoupling* next,
                   int pg_steps, Scalar pg_lr) {
  const Matrix target = z_t + nmf.dual;
  const Index n = nmf.scores.cols();

  if (!next || !next->block) {
    // factorization term only: plain NNLS per column
    for (Index j = 0; j < n; ++j) {
      nmf.scores.col(j) = nnls(nmf.basis, target.col(j)).x;
    }
    return;
  }

  if (single_linear(*next->block)) {
    // both terms are least squares in S: stack them and solve exactly
    const Layer& lin = next->block->layers[0];
    const Scalar sb = std::sqrt(next->beta);
    const Scalar sg = std::sqrt(nmf.gamma);
    Matrix stacked(lin.weight.rows() + nmf.basis.rows(), nmf.rank);
    stacked.topRows(lin.weight.rows()) = sb * lin.weight;
    stacked.bottomRows(nmf.basis.rows()) = sg * nmf.basis;

    Matrix coupled = *next->z_next + *next->u_next;
    if (lin.has_bias) coupled.colwise() -= lin.bias;
    Vector rhs(stacked.rows());
    for (Index j = 0; j < n; ++j) {
      rhs.head(lin.weight.rows()) = sb * coupled.col(j);
      rhs.tail(nmf.basis.rows()) = sg * target.col(j);
      nmf.scores.col(j) = nnls(stacked, rhs).x;
    }
    return;
  }

  // nonlinear downstream block: projected Adam steps, keeping the best
  // feasible iterate so the objective cannot increase
  Matrix best = nmf.scores;
  Scalar best_obj = scores_objective(nmf, z_t, next, best);
  Matrix s = nmf.scores;
  AdamState opt;
  for (int step = 0; step < pg_steps; ++step) {
    Matrix grad =
        nmf.gamma * (nmf.basis.transpose() * (nmf.basis * s - target));
    BlockCache cache;
    const Matrix out = block_forward(*next->block, s, &cache);
    const Matrix resid = *next->z_next - out + *next->u_next;
    grad +=
        block_backward(*next->block, cache, (-next->beta) * resid).input;
    adam_step(s, grad, opt, pg_lr);
    s = s.cwiseMax(0.0);
    const Scalar obj = scores_objective(nmf, z_t, next, s);
    if (obj < best_obj) {
      best_obj = obj;
      best = s;
    }
  }
  nmf.scores = std::move(best);
}

void update_basis(NmfState& nmf, const Matrix& z_t) {
  const Matrix target = z_t + nmf.dual;
  const Matrix st = nmf.scores.transpose();
  for (Index i = 0; i < nmf.basis.rows(); ++i) {
    nmf.basis.row(i) = nnls(st, target.row(i).transpose()).x.transpose();
  }
}

void update_dual(NmfState& nmf, const Matrix& z_t) {
  nmf.dual += z_t - nmf.basis * nmf.scores;
}

Scalar factorization_residual(const NmfState& nmf, const Matrix& z_t) {
  return (z_t - nmf.basis * nmf.scores).norm();
}

Matrix project_scores(const Matrix& basis, const Matrix& z) {
  if (basis.rows() != z.rows()) {
    throw ShapeError("project_scores: basis rows " +
                     std::to_string(basis.rows()) + " vs activations " +
                     std::to_string(z.rows()));
  }
  Matrix s(basis.cols(), z.cols());
  for (Index j = 0; j < z.cols(); ++j) {
    s.col(j) = nnls(basis, z.col(j)).x;
  }
  return s;
}

Matrix deepfacto_predict(const std::vector<Block>& blocks, const NmfState& nmf,
                         const Matrix& x) {
  Matrix cur = x;
  for (int t = 0; t <= nmf.position; ++t) {
    cur = block_forward(blocks[t], cur);
  }
  cur = project_scores(nmf.basis, cur);
  for (int t = nmf.position + 1; t < static_cast<int>(blocks.size()); ++t) {
    cur = block_forward(blocks[t], cur);
  }
  return cur;
}

DeepFactoRun deepfacto_train(std::vector<Block>& blocks, const Matrix& x,
                             const Matrix& y, const Matrix* test_x,
                             const Matrix* test_y, LossKind loss,
                             const DeepFactoConfig& cfg, int epochs, Rng& rng,
                             const DeepFactoCallback& callback) {
  const Index t_count = static_cast<Index>(blocks.size());
  const int pos = cfg.position;
  if (pos < 0 || pos + 1 >= t_count) {
    throw ConfigError(
        "deepfacto_train: the factorization needs at least one downstream "
        "block");
  }
  if (cfg.admm.beta.size() != blocks.size()) {
    throw ShapeError("deepfacto_train: beta count mismatch");
  }

  DeepFactoRun run;
  CouplingState& st = run.coupling;
  st.beta = cfg.admm.beta;
  st.z.resize(t_count);
  st.u.resize(t_count);
  st.z_opt.assign(t_count, AdamState{});

  // forward pass up to the factorized activation
  {
    Matrix cur = x;
    for (Index t = 0; t <= pos; ++t) {
      cur = block_forward(blocks[t], cur);
      st.z[t] = cur;
    }
  }

  NmfState& nmf = run.nmf;
  if (cfg.identity_init && cfg.rank == st.z[pos].rows()) {
    nmf.rank = cfg.rank;
    nmf.gamma = cfg.gamma;
    nmf.position = pos;
    nmf.basis = Matrix::Identity(st.z[pos].rows(), cfg.rank);
    nmf.scores = st.z[pos].cwiseMax(0.0);
    nmf.dual = Matrix::Zero(st.z[pos].rows(), st.z[pos].cols());
  } else {
    nmf = init_nmf(st.z[pos], cfg.rank, cfg.gamma, pos, rng);
  }

  // phase 1: fit the factorization against the frozen activations
  run.phase1_residual = factorization_residual(nmf, st.z[pos]);
  while (run.phase1_residual > cfg.phase1_tol &&
         run.phase1_iters < cfg.phase1_max_iters) {
    update_scores(nmf, st.z[pos], nullptr, cfg.pg_steps, cfg.pg_lr);
    update_basis(nmf, st.z[pos]);
    update_dual(nmf, st.z[pos]);
    run.phase1_residual = factorization_residual(nmf, st.z[pos]);
    ++run.phase1_iters;
  }

  // complete the chain through the scores and set up the duals
  {
    Matrix cur = nmf.scores;
    for (Index t = pos + 1; t < t_count; ++t) {
      cur = block_forward(blocks[t], cur);
      st.z[t] = cur;
    }
  }
  for (Index t = 0; t < t_count; ++t) {
    if (cfg.admm.dual_init_hi > 0) {
      st.u[t] = init_uniform(st.z[t].rows(), st.z[t].cols(), 0.0,
                             cfg.admm.dual_init_hi, rng);
    } else {
      st.u[t] = Matrix::Zero(st.z[t].rows(), st.z[t].cols());
    }
  }

  auto prev_of = [&](Index t) -> const Matrix& {
    if (t == 0) return x;
    if (t == pos + 1) return nmf.scores;
    return st.z[t - 1];
  };
  auto z_step = [&](Index t, const Matrix& grad) {
    if (cfg.admm.z_optim == Optim::Adam) {
      adam_step(st.z[t], grad, st.z_opt[t], cfg.admm.z_lr);
    } else {
      sgd_step(st.z[t], grad, cfg.admm.z_lr);
    }
  };
  auto residual_total = [&]() {
    Scalar total = 0;
    for (Index t = 0; t < t_count; ++t) {
      total += (st.z[t] - block_forward(blocks[t], prev_of(t))).norm();
    }
    total += factorization_residual(nmf, st.z[pos]);
    return total;
  };

  // phase 2: joint cycles
  run.metrics.reserve(epochs);
  Scalar train_seconds = 0;
  const Index n = x.cols();
  const Index batch_k = std::min<Index>(cfg.admm.theta_batch, n);
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    for (int p = 0; p < cfg.admm.primal_steps; ++p) {
      // terminal z
      {
        const Index last = t_count - 1;
        const Matrix out = block_forward(blocks[last], prev_of(last));
        const Matrix grad =
            loss_grad(loss, y, st.z[last]) +
            st.beta[last] * (st.z[last] - out + st.u[last]);
        z_step(last, grad);
      }
      // reverse sweep; the scores and basis are updated at their position
      for (Index t = t_count - 2; t >= 0; --t) {
        if (t == pos) {
          NextCoupling nc{&blocks[t + 1], &st.z[t + 1], &st.u[t + 1],
                          st.beta[t + 1]};
          update_scores(nmf, st.z[t], &nc, cfg.pg_steps, cfg.pg_lr);
          update_basis(nmf, st.z[t]);
          const Matrix out = block_forward(blocks[t], prev_of(t));
          const Matrix grad =
              st.beta[t] * (st.z[t] - out + st.u[t]) +
              nmf.gamma * (st.z[t] - nmf.basis * nmf.scores + nmf.dual);
          z_step(t, grad);
        } else {
          const Matrix own_out = block_forward(blocks[t], prev_of(t));
          Matrix grad = st.beta[t] * (st.z[t] - own_out + st.u[t]);
          BlockCache cache;
          const Matrix next_out =
              block_forward(blocks[t + 1], st.z[t], &cache);
          const Matrix next_r = st.z[t + 1] - next_out + st.u[t + 1];
          grad += block_backward(blocks[t + 1], cache,
                                 (-st.beta[t + 1]) * next_r)
                      .input;
          z_step(t, grad);
        }
      }
      // theta sweep
      if (cfg.admm.repeat_theta || p == cfg.admm.primal_steps - 1) {
        for (Index t = 0; t < t_count; ++t) {
          const auto batch = draw_batch(n, batch_k, rng);
          coupling_theta_step(blocks[t], gather_columns(prev_of(t), batch),
                              gather_columns(st.z[t], batch),
                              gather_columns(st.u[t], batch), st.beta[t],
                              cfg.admm.theta_optim, cfg.admm.theta_lr);
        }
      }
    }
    // duals
    for (Index t = 0; t < t_count; ++t) {
      st.u[t] += st.z[t] - block_forward(blocks[t], prev_of(t));
    }
    update_dual(nmf, st.z[pos]);
    train_seconds +=
        std::chrono::duration<Scalar>(std::chrono::steady_clock::now() -
                                      started)
            .count();

    MetricsRecord rec;
    rec.epoch = epoch;
    rec.wall_clock_seconds = train_seconds;
    rec.train_loss = loss_value(loss, y, st.z.back());
    rec.total_coupling_residual = residual_total();
    if (test_x && test_y) {
      rec.test_accuracy =
          accuracy(*test_y, deepfacto_predict(blocks, nmf, *test_x));
    }
    if (!std::isfinite(rec.train_loss)) {
      throw NumericError("deepfacto_train: non-finite loss at epoch " +
                         std::to_string(epoch));
    }
    run.metrics.push_back(rec);
    if (callback) callback(epoch, nmf, st);
  }
  return run;
}

}  // namespace blockadmm
