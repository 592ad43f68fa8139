#pragma once

#include "blockadmm/types.hpp"

namespace blockadmm {

enum class LossKind { Mse, SoftmaxCe };

/// (1 / 2N) * ||Y - Z||_F^2.
Scalar mse_loss(const Matrix& y, const Matrix& z);

/// Gradient of mse_loss with respect to Z: (Z - Y) / N.
Matrix mse_grad(const Matrix& y, const Matrix& z);

/// Mean over columns of -log softmax(z)[true class], with max-shift
/// stabilization. Y columns must be one-hot.
Scalar softmax_ce_loss(const Matrix& y, const Matrix& z);

/// (softmax(Z) - Y) / N.
Matrix softmax_ce_grad(const Matrix& y, const Matrix& z);

Scalar loss_value(LossKind kind, const Matrix& y, const Matrix& z);
Matrix loss_grad(LossKind kind, const Matrix& y, const Matrix& z);

/// Fraction of columns where argmax Z matches argmax Y. Ties pick the lowest
/// index.
Scalar accuracy(const Matrix& y, const Matrix& z);

/// Throws unless every column of y has exactly one entry equal to 1 and the
/// rest equal to 0.
void validate_one_hot(const Matrix& y);

/// Column-wise softmax with max-shift stabilization.
Matrix softmax_columns(const Matrix& z);

/// Lowest-index argmax of a column.
Index argmax_column(const Matrix& m, Index col);

}  // namespace blockadmm
