#pragma once

#include <string>
#include <utility>
#include <vector>

#include "blockadmm/rng.hpp"

namespace blockadmm {

/// Samples as columns: X is features x N, Y is one-hot classes x N.
struct Dataset {
  Matrix x;
  Matrix y;
  std::string name;
  std::string split;  // train | test

  Index samples() const { return x.cols(); }
  Index classes() const { return y.rows(); }
};

/// Big-endian IDX pair: images (magic 0x00000803, pixels scaled by 1/255)
/// plus labels (magic 0x00000801, one-hot with C = 10). Bad magic, truncated
/// payloads and image/label count mismatches raise distinct DataErrors.
Dataset load_idx(const std::string& images_path,
                 const std::string& labels_path);

/// Writers for fixtures and exports; values are clamped to [0, 1] and
/// quantized to bytes.
void write_idx_images(const std::string& path, const Matrix& x01, Index rows,
                      Index cols);
void write_idx_labels(const std::string& path,
                      const std::vector<int>& labels);

/// Disjoint class-stratified subsets drawn from a pool, sized by
/// largest-remainder proportional allocation.
std::pair<Dataset, Dataset> stratified_split(const Dataset& pool,
                                             Index n_train, Index n_test,
                                             Rng& rng);

/// Labels come from a hidden random linear map shared by both splits;
/// sampling rejects points whose top-two teacher scores are closer than
/// `margin`, so the classes stay linearly separable. Gaussian feature noise
/// is added after labeling.
std::pair<Dataset, Dataset> synth_linear_teacher(Index dim, Index classes,
                                                 Index n_train, Index n_test,
                                                 Scalar margin, Scalar noise,
                                                 Rng& rng);

/// Two interleaved half-circles with Gaussian noise, C = 2.
Dataset synth_two_moons(Index n, Scalar noise, Rng& rng, std::string split);

/// Ground truth of the low-rank generator, for oracle checks.
struct LowRankTruth {
  Matrix basis;         // dim x rank, nonnegative
  Matrix scores_train;  // rank x n_train, nonnegative
  Matrix scores_test;
};

/// X = basis * scores with nonnegative factors; labels from a margin-guarded
/// linear teacher acting on the latent scores.
std::pair<Dataset, Dataset> synth_low_rank_nonneg(Index dim, Index rank,
                                                  Index classes,
                                                  Index n_train, Index n_test,
                                                  Rng& rng,
                                                  LowRankTruth* truth = nullptr);

Matrix one_hot(const std::vector<int>& labels, Index classes);

void write_dataset_csv(const std::string& x_path, const std::string& y_path,
                       const Dataset& ds);

}  // namespace blockadmm
