#pragma once

#include "blockadmm/types.hpp"

namespace blockadmm {

struct NnlsResult {
  Vector x;
  bool converged = true;
  int iterations = 0;
};

/// min ||A x - b||_2 subject to x >= 0, by Lawson-Hanson active-set
/// iteration. The returned x is always feasible; `converged` is false when
/// the iteration cap (default 10 * cols) was hit first. At convergence the
/// KKT conditions hold to `tol`: the gradient of 1/2 ||Ax - b||^2 is >= -tol
/// on active (zero) coordinates and 0 within tol on free ones.
NnlsResult nnls(const Matrix& a, const Vector& b, Scalar tol = 1e-10,
                int max_iter = -1);

}  // namespace blockadmm
