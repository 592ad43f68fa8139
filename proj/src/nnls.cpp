#include "blockadmm/nnls.hpp"

#include <Eigen/QR>

#include <vector>

namespace blockadmm {

namespace {

/// Least squares over the passive columns only; zeros elsewhere.
Vector subset_solve(const Matrix& a, const Vector& b,
                    const std::vector<bool>& passive) {
  const Index n = a.cols();
  Index count = 0;
  for (Index i = 0; i < n; ++i) count += passive[i] ? 1 : 0;
  Matrix ap(a.rows(), count);
  std::vector<Index> cols;
  cols.reserve(count);
  for (Index i = 0; i < n; ++i) {
    if (passive[i]) {
      ap.col(static_cast<Index>(cols.size())) = a.col(i);
      cols.push_back(i);
    }
  }
  const Vector sol = ap.colPivHouseholderQr().solve(b);
  Vector z = Vector::Zero(n);
  for (std::size_t k = 0; k < cols.size(); ++k) {
    z[cols[k]] = sol[static_cast<Index>(k)];
  }
  return z;
}

}  // namespace

NnlsResult nnls(const Matrix& a, const Vector& b, Scalar tol, int max_iter) {
  if (a.rows() != b.size()) {
    throw ShapeError("nnls: A has " + std::to_string(a.rows()) +
                     " rows, b has " + std::to_string(b.size()));
  }
  const Index n = a.cols();
  const int cap = max_iter > 0 ? max_iter : static_cast<int>(10 * n);

  NnlsResult res;
  res.x = Vector::Zero(n);
  std::vector<bool> passive(n, false);
  Vector w = a.transpose() * b;

  while (true) {
    // most-violated KKT multiplier among active coordinates
    Index best = -1;
    Scalar best_w = tol;
    for (Index i = 0; i < n; ++i) {
      if (!passive[i] && w[i] > best_w) {
        best = i;
        best_w = w[i];
      }
    }
    if (best < 0) {
      res.converged = true;
      return res;
    }
    passive[best] = true;

    while (true) {
      if (++res.iterations > cap) {
        res.converged = false;
        return res;
      }
      const Vector z = subset_solve(a, b, passive);
      Scalar min_passive = std::numeric_limits<Scalar>::infinity();
      for (Index i = 0; i < n; ++i) {
        if (passive[i]) min_passive = std::min(min_passive, z[i]);
      }
      if (min_passive > 0) {
        res.x = z;
        break;
      }
      // step to the feasibility boundary and drop the zeroed coordinates
      Scalar alpha = std::numeric_limits<Scalar>::infinity();
      for (Index i = 0; i < n; ++i) {
        if (passive[i] && z[i] <= 0 && res.x[i] > z[i]) {
          alpha = std::min(alpha, res.x[i] / (res.x[i] - z[i]));
        }
      }
      if (!std::isfinite(alpha)) alpha = 0;
      res.x += alpha * (z - res.x);
      for (Index i = 0; i < n; ++i) {
        if (passive[i] && res.x[i] <= 1e-14) {
          res.x[i] = 0;
          passive[i] = false;
        }
      }
    }
    w = a.transpose() * (b - a * res.x);
  }
}

}  // namespace blockadmm
