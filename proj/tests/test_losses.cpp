#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "blockadmm/loss.hpp"
#include "support.hpp"

using namespace blockadmm;

namespace {

Matrix random_one_hot(Index classes, Index n, Rng& rng) {
  Matrix y = Matrix::Zero(classes, n);
  for (Index j = 0; j < n; ++j) y(rng.index(classes), j) = 1.0;
  return y;
}

}  // namespace

TEST_CASE("mse loss basic values") {
  Matrix y(2, 1), z(2, 1);
  y << 1, 0;
  z << 0, 0;
  CHECK(mse_loss(y, y) == 0);
  CHECK(mse_loss(y, z) == doctest::Approx(0.5));
}

TEST_CASE("mse gradient matches finite differences") {
  Rng rng(1);
  const Matrix y = init_normal(3, 4, 1.0, rng);
  Matrix z = init_normal(3, 4, 1.0, rng);
  const Matrix g = mse_grad(y, z);
  auto f = [&]() { return mse_loss(y, z); };
  CHECK(testing::grad_mismatch(g, testing::fd_matrix(f, z, 1e-6)) < 1e-7);
}

TEST_CASE("softmax ce on uniform logits is log C") {
  const Index classes = 10, n = 3;
  Rng rng(2);
  const Matrix y = random_one_hot(classes, n, rng);
  const Matrix z = Matrix::Zero(classes, n);
  CHECK(softmax_ce_loss(y, z) ==
        doctest::Approx(std::log(10.0)).epsilon(1e-9));
}

TEST_CASE("softmax ce saturates when the true logit dominates") {
  Matrix y = Matrix::Zero(4, 1);
  y(2, 0) = 1.0;
  Matrix z = Matrix::Zero(4, 1);
  z(2, 0) = 50.0;
  CHECK(softmax_ce_loss(y, z) < 1e-9);
}

TEST_CASE("softmax ce gradient matches finite differences") {
  Rng rng(3);
  const Matrix y = random_one_hot(5, 4, rng);
  Matrix z = init_normal(5, 4, 1.0, rng);
  const Matrix g = softmax_ce_grad(y, z);
  auto f = [&]() { return softmax_ce_loss(y, z); };
  CHECK(testing::grad_mismatch(g, testing::fd_matrix(f, z, 1e-6)) < 1e-7);
}

TEST_CASE("softmax ce gradient columns sum to zero") {
  Rng rng(4);
  const Matrix y = random_one_hot(6, 8, rng);
  const Matrix z = init_normal(6, 8, 2.0, rng);
  const Matrix g = softmax_ce_grad(y, z);
  for (Index j = 0; j < g.cols(); ++j) {
    CHECK(std::abs(g.col(j).sum()) < 1e-12);
  }
}

TEST_CASE("losses are nonnegative and mse is zero only at equality") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix y = random_one_hot(4, 3, rng);
    const Matrix z = init_normal(4, 3, 1.0, rng);
    CHECK(mse_loss(y, z) >= 0);
    CHECK(softmax_ce_loss(y, z) >= 0);
    if (mse_loss(y, z) == 0) CHECK((y - z).norm() == 0);
  }
}

TEST_CASE("non-one-hot targets are rejected") {
  Matrix y(2, 1);
  y << 0.5, 0.5;
  const Matrix z = Matrix::Zero(2, 1);
  CHECK_THROWS_AS(softmax_ce_loss(y, z), ShapeError);

  Matrix two(2, 1);
  two << 1, 1;
  CHECK_THROWS_AS(validate_one_hot(two), ShapeError);
}

TEST_CASE("accuracy with matching predictions and the tie rule") {
  Rng rng(6);
  const Matrix y = random_one_hot(5, 10, rng);
  CHECK(accuracy(y, y) == 1.0);

  // all-zero scores tie; the lowest index wins, so only class-0 labels count
  const Matrix z = Matrix::Zero(5, 10);
  Index zeros = 0;
  for (Index j = 0; j < 10; ++j) {
    if (y(0, j) == 1.0) ++zeros;
  }
  CHECK(accuracy(y, z) == doctest::Approx(Scalar(zeros) / 10.0));
}

TEST_CASE("accuracy agrees with a per-column loop oracle") {
  Rng rng(7);
  const Matrix y = random_one_hot(4, 32, rng);
  const Matrix z = init_normal(4, 32, 1.0, rng);
  Index hits = 0;
  for (Index j = 0; j < 32; ++j) {
    Index by = 0, bz = 0;
    for (Index i = 1; i < 4; ++i) {
      if (y(i, j) > y(by, j)) by = i;
      if (z(i, j) > z(bz, j)) bz = i;
    }
    if (by == bz) ++hits;
  }
  CHECK(accuracy(y, z) == doctest::Approx(Scalar(hits) / 32.0));
}
