#pragma once

#include <functional>

#include "blockadmm/types.hpp"

namespace blockadmm {

/// Central-difference gradient of a scalar function, entry by entry:
/// (f(x + h e_i) - f(x - h e_i)) / (2 h). The reference oracle for every
/// analytic gradient in the test and acceptance suites.
inline Matrix finite_diff_grad(const std::function<Scalar(const Matrix&)>& f,
                               Matrix x, Scalar h) {
  if (!(h > 0)) {
    throw ConfigError("finite_diff_grad: h must be positive");
  }
  Matrix g(x.rows(), x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    for (Index i = 0; i < x.rows(); ++i) {
      const Scalar saved = x(i, j);
      x(i, j) = saved + h;
      const Scalar fp = f(x);
      x(i, j) = saved - h;
      const Scalar fm = f(x);
      x(i, j) = saved;
      g(i, j) = (fp - fm) / (2.0 * h);
    }
  }
  return g;
}

}  // namespace blockadmm
