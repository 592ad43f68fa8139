#include "blockadmm/loss.hpp"

#include <cmath>

namespace blockadmm {

namespace {

void check_pair(const Matrix& y, const Matrix& z, const char* what) {
  require_same_shape(y, z, what);
  if (z.cols() == 0) {
    throw ShapeError(std::string(what) + ": no sample columns");
  }
}

}  // namespace

Scalar mse_loss(const Matrix& y, const Matrix& z) {
  check_pair(y, z, "mse_loss");
  const Scalar n = static_cast<Scalar>(z.cols());
  return (y - z).squaredNorm() / (2.0 * n);
}

Matrix mse_grad(const Matrix& y, const Matrix& z) {
  check_pair(y, z, "mse_grad");
  return (z - y) / static_cast<Scalar>(z.cols());
}

Matrix softmax_columns(const Matrix& z) {
  Matrix p(z.rows(), z.cols());
  for (Index j = 0; j < z.cols(); ++j) {
    const Scalar shift = z.col(j).maxCoeff();
    p.col(j) = (z.col(j).array() - shift).exp();
    p.col(j) /= p.col(j).sum();
  }
  return p;
}

Scalar softmax_ce_loss(const Matrix& y, const Matrix& z) {
  check_pair(y, z, "softmax_ce_loss");
  validate_one_hot(y);
  Scalar total = 0;
  for (Index j = 0; j < z.cols(); ++j) {
    const Scalar shift = z.col(j).maxCoeff();
    const Scalar lse =
        shift + std::log((z.col(j).array() - shift).exp().sum());
    const Index truth = argmax_column(y, j);
    total += lse - z(truth, j);
  }
  return total / static_cast<Scalar>(z.cols());
}

Matrix softmax_ce_grad(const Matrix& y, const Matrix& z) {
  check_pair(y, z, "softmax_ce_grad");
  validate_one_hot(y);
  return (softmax_columns(z) - y) / static_cast<Scalar>(z.cols());
}

Scalar loss_value(LossKind kind, const Matrix& y, const Matrix& z) {
  return kind == LossKind::Mse ? mse_loss(y, z) : softmax_ce_loss(y, z);
}

Matrix loss_grad(LossKind kind, const Matrix& y, const Matrix& z) {
  return kind == LossKind::Mse ? mse_grad(y, z) : softmax_ce_grad(y, z);
}

Index argmax_column(const Matrix& m, Index col) {
  Index best = 0;
  for (Index i = 1; i < m.rows(); ++i) {
    if (m(i, col) > m(best, col)) best = i;
  }
  return best;
}

Scalar accuracy(const Matrix& y, const Matrix& z) {
  check_pair(y, z, "accuracy");
  Index hits = 0;
  for (Index j = 0; j < z.cols(); ++j) {
    if (argmax_column(z, j) == argmax_column(y, j)) ++hits;
  }
  return static_cast<Scalar>(hits) / static_cast<Scalar>(z.cols());
}

void validate_one_hot(const Matrix& y) {
  for (Index j = 0; j < y.cols(); ++j) {
    Index ones = 0;
    for (Index i = 0; i < y.rows(); ++i) {
      const Scalar v = y(i, j);
      if (v == 1.0) {
        ++ones;
      } else if (v != 0.0) {
        throw ShapeError("validate_one_hot: column " + std::to_string(j) +
                         " has entry " + std::to_string(v));
      }
    }
    if (ones != 1) {
      throw ShapeError("validate_one_hot: column " + std::to_string(j) +
                       " has " + std::to_string(ones) + " ones");
    }
  }
}

}  // namespace blockadmm
