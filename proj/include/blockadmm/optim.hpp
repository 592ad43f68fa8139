#pragma once

#include <cmath>

#include "blockadmm/types.hpp"

namespace blockadmm {

enum class Optim { Sgd, Adam };

/// Per-parameter Adam state. First/second moment estimates plus the step
/// counter used for bias correction.
struct AdamState {
  Matrix m;
  Matrix v;
  long step_count = 0;
  Scalar beta1 = 0.9;
  Scalar beta2 = 0.999;
  Scalar eps = 1e-8;

  void reset(Index rows, Index cols) {
    m = Matrix::Zero(rows, cols);
    v = Matrix::Zero(rows, cols);
    step_count = 0;
  }

  bool matches(Index rows, Index cols) const {
    return m.rows() == rows && m.cols() == cols;
  }
};

namespace detail {

template <typename Param, typename Grad>
void adam_step_impl(Param& param, const Grad& grad, AdamState& st, Scalar lr) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols()) {
    throw ShapeError("adam_step: grad shape " +
                     shape_str(grad.rows(), grad.cols()) +
                     " does not match param " +
                     shape_str(param.rows(), param.cols()));
  }
  if (!(lr > 0)) {
    throw ConfigError("adam_step: learning rate must be positive");
  }
  if (!st.matches(param.rows(), param.cols())) {
    st.reset(param.rows(), param.cols());
  }
  st.m = st.beta1 * st.m + (1.0 - st.beta1) * grad;
  st.v.array() =
      st.beta2 * st.v.array() + (1.0 - st.beta2) * grad.array().square();
  ++st.step_count;
  const Scalar bc1 = 1.0 - std::pow(st.beta1, st.step_count);
  const Scalar bc2 = 1.0 - std::pow(st.beta2, st.step_count);
  param.array() -= lr * (st.m.array() / bc1) /
                   ((st.v.array() / bc2).sqrt() + st.eps);
}

}  // namespace detail

inline void adam_step(Matrix& param, const Matrix& grad, AdamState& st,
                      Scalar lr) {
  detail::adam_step_impl(param, grad, st, lr);
}

inline void adam_step(Vector& param, const Vector& grad, AdamState& st,
                      Scalar lr) {
  detail::adam_step_impl(param, grad, st, lr);
}

inline void sgd_step(Matrix& param, const Matrix& grad, Scalar lr) {
  require_same_shape(param, grad, "sgd_step");
  param -= lr * grad;
}

inline void sgd_step(Vector& param, const Vector& grad, Scalar lr) {
  if (param.size() != grad.size()) {
    throw ShapeError("sgd_step: vector sizes disagree");
  }
  param -= lr * grad;
}

}  // namespace blockadmm
