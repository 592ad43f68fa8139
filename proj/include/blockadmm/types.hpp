#pragma once

#include <Eigen/Dense>

#include <sstream>
#include <stdexcept>
#include <string>

namespace blockadmm {

using Scalar = double;

template <typename T>
using MatrixX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using VectorX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using Matrix = MatrixX<Scalar>;
using Vector = VectorX<Scalar>;
using Index = Eigen::Index;

/// Mismatched dimensions anywhere in the math layer.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Invalid run configuration (unknown key, bad value, bad CLI usage).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Broken input data (bad magic, truncated file, count mismatch).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Non-finite values or a diverged solve.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string shape_str(Index rows, Index cols) {
  std::ostringstream os;
  os << rows << "x" << cols;
  return os.str();
}

/// a * b with an explicit inner-dimension check naming both shapes.
template <typename A, typename B>
Matrix matmul(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions disagree: " +
                     shape_str(a.rows(), a.cols()) + " * " +
                     shape_str(b.rows(), b.cols()));
  }
  return a * b;
}

/// Entrywise max(0, x).
template <typename D>
Matrix relu(const Eigen::MatrixBase<D>& x) {
  return x.cwiseMax(Scalar(0));
}

/// 1 where x > 0, else 0. The subgradient at 0 is taken as 0.
template <typename D>
Matrix relu_mask(const Eigen::MatrixBase<D>& x) {
  return (x.array() > Scalar(0)).template cast<Scalar>();
}

template <typename D>
Scalar frob_norm(const Eigen::MatrixBase<D>& x) {
  return x.norm();
}

template <typename D>
bool all_finite(const Eigen::MatrixBase<D>& x) {
  return x.allFinite();
}

inline void require_same_shape(const Matrix& a, const Matrix& b,
                               const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(what) + ": shapes disagree: " +
                     shape_str(a.rows(), a.cols()) + " vs " +
                     shape_str(b.rows(), b.cols()));
  }
}

}  // namespace blockadmm
