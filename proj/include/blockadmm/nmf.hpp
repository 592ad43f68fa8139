#pragma once

#include <array>
#include <functional>
#include <vector>

#include "blockadmm/batch_admm.hpp"
#include "blockadmm/nnls.hpp"

namespace blockadmm {

/// Dense rank-4 activation tensor (samples, channels, height, width),
/// row-major. Only the channel-matrix reshape below needs it.
struct Tensor4 {
  std::array<Index, 4> dims{};  // n, c, h, w
  std::vector<Scalar> data;

  static Tensor4 zeros(Index n, Index c, Index h, Index w) {
    Tensor4 t;
    t.dims = {n, c, h, w};
    t.data.assign(static_cast<std::size_t>(n * c * h * w), 0.0);
    return t;
  }

  std::size_t offset(Index n, Index c, Index h, Index w) const {
    return static_cast<std::size_t>(
        ((n * dims[1] + c) * dims[2] + h) * dims[3] + w);
  }
  Scalar& at(Index n, Index c, Index h, Index w) {
    return data[offset(n, c, h, w)];
  }
  Scalar at(Index n, Index c, Index h, Index w) const {
    return data[offset(n, c, h, w)];
  }
};

/// [N, C, H, W] -> C x (N*H*W): channels become rows, everything else is
/// flattened into columns ordered (n, h, w).
Matrix reshape_activations(const Tensor4& t);

/// Exact inverse of reshape_activations given the original dims.
Tensor4 restore_activations(const Matrix& m, const std::array<Index, 4>& dims);

/// Factorization insert: Z_t ~ basis * scores with both factors entrywise
/// nonnegative, plus the dual enforcing the equality.
struct NmfState {
  Matrix basis;   // m x r
  Matrix scores;  // r x n
  Matrix dual;    // m x n
  Scalar gamma = 1.0;
  int rank = 0;
  int position = 0;  // factorizes the output of blocks[position]
};

/// basis from |N(0, 0.1)|, scores from one NNLS pass against z_t. Warns to
/// stderr when rank exceeds min(m, n).
NmfState init_nmf(const Matrix& z_t, int rank, Scalar gamma, int position,
                  Rng& rng);

/// The downstream coupling term seen by the score update.
struct NextCoupling {
  const Block* block = nullptr;
  const Matrix* z_next = nullptr;
  const Matrix* u_next = nullptr;
  Scalar beta = 0;
};

/// Local objective for the score matrix: gamma/2 ||Z_t - M S + V||^2 plus,
/// when a downstream coupling is given, beta/2 ||Z_next - block(S) +
/// U_next||^2.
Scalar scores_objective(const NmfState& nmf, const Matrix& z_t,
                        const NextCoupling* next, const Matrix& scores);

/// Minimize the score objective over S >= 0. Exact stacked NNLS per column
/// when the downstream block is a single linear layer (or absent); otherwise
/// projected Adam steps keeping the best feasible iterate. The objective
/// never increases and the result is exactly nonnegative.
void update_scores(NmfState& nmf, const Matrix& z_t, const NextCoupling* next,
                   int pg_steps, Scalar pg_lr);

/// Row-wise NNLS refit of the basis at fixed scores; exact minimizer of the
/// factorization term over M >= 0.
void update_basis(NmfState& nmf, const Matrix& z_t);

/// Dual ascent: V += Z_t - M S.
void update_dual(NmfState& nmf, const Matrix& z_t);

/// ||Z_t - M S||_F.
Scalar factorization_residual(const NmfState& nmf, const Matrix& z_t);

/// Test-time nonnegative projection: one NNLS per activation column.
Matrix project_scores(const Matrix& basis, const Matrix& z);

/// Inference with the factorization insert: blocks up to `position`, then
/// the nonnegative projection, then the remaining blocks.
Matrix deepfacto_predict(const std::vector<Block>& blocks, const NmfState& nmf,
                         const Matrix& x);

struct DeepFactoConfig {
  BatchAdmmConfig admm;
  Scalar gamma = 1.0;
  int rank = 4;
  int position = 0;
  int phase1_max_iters = 200;
  Scalar phase1_tol = 1e-6;
  int pg_steps = 5;
  Scalar pg_lr = 0.05;
  // start from basis = I, scores = relu(Z_t) when rank equals the
  // activation dimension
  bool identity_init = false;
};

struct DeepFactoRun {
  std::vector<MetricsRecord> metrics;
  NmfState nmf;
  CouplingState coupling;
  int phase1_iters = 0;
  Scalar phase1_residual = 0;
};

using DeepFactoCallback =
    std::function<void(int cycle, const NmfState&, const CouplingState&)>;

/// Two-phase training: alternating S/M/V updates against the frozen forward
/// activations first, then joint cycles where block position+1 consumes the
/// score matrix and all other couplings run as in the batch trainer.
DeepFactoRun deepfacto_train(std::vector<Block>& blocks, const Matrix& x,
                             const Matrix& y, const Matrix* test_x,
                             const Matrix* test_y, LossKind loss,
                             const DeepFactoConfig& cfg, int epochs, Rng& rng,
                             const DeepFactoCallback& callback = {});

}  // namespace blockadmm
