#pragma once

// Shared helpers for the test suites: random network generators and the
// independent oracles the expected values are checked against.

#include <cmath>
#include <functional>
#include <vector>

#include "blockadmm/gradcheck.hpp"
#include "blockadmm/layer.hpp"
#include "blockadmm/rng.hpp"

namespace testing {

using namespace blockadmm;

inline Scalar rel_err(Scalar got, Scalar want, Scalar abs_floor = 1e-12) {
  return std::abs(got - want) / std::max(std::abs(want), abs_floor);
}

/// Max entrywise error of `got` against `want` with a relative/absolute mix.
inline Scalar grad_mismatch(const Matrix& got, const Matrix& want,
                            Scalar abs_floor = 1e-8) {
  Scalar worst = 0;
  for (Index j = 0; j < got.cols(); ++j) {
    for (Index i = 0; i < got.rows(); ++i) {
      const Scalar denom = std::max(std::abs(want(i, j)), abs_floor);
      worst = std::max(worst, std::abs(got(i, j) - want(i, j)) / denom);
    }
  }
  return worst;
}

/// Triple-loop reference matmul.
inline Matrix matmul_oracle(const Matrix& a, const Matrix& b) {
  Matrix c = Matrix::Zero(a.rows(), b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < b.cols(); ++j) {
      for (Index p = 0; p < a.cols(); ++p) {
        c(i, j) += a(i, p) * b(p, j);
      }
    }
  }
  return c;
}

/// Independent scalar Adam recurrence used to check the tensor version.
struct ScalarAdamOracle {
  double m = 0, v = 0;
  long t = 0;
  double step(double param, double grad, double lr, double b1 = 0.9,
              double b2 = 0.999, double eps = 1e-8) {
    m = b1 * m + (1 - b1) * grad;
    v = b2 * v + (1 - b2) * grad * grad;
    ++t;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    return param - lr * mh / (std::sqrt(vh) + eps);
  }
};

/// Random block of up to `max_layers` layers; linear layers alternate with
/// relu. Dimensions chain from in_dim to a random out dim <= max_dim.
inline Block random_block(Rng& rng, Index in_dim, Index max_dim,
                          int max_layers, bool with_bias) {
  Block b;
  Index cur = in_dim;
  const int n_linear = 1 + static_cast<int>(rng.index(max_layers));
  for (int i = 0; i < n_linear; ++i) {
    const Index out = 1 + rng.index(max_dim);
    if (with_bias) {
      b.layers.push_back(linear_layer(init_normal(out, cur, 0.7, rng),
                                      init_normal(out, 1, 0.5, rng)));
    } else {
      b.layers.push_back(linear_layer(init_normal(out, cur, 0.7, rng)));
    }
    cur = out;
    if (i + 1 < n_linear) b.layers.push_back(relu_layer());
  }
  return b;
}

/// All layers of several blocks merged into one.
inline Block merge_blocks(const std::vector<Block>& blocks) {
  Block merged;
  for (const Block& b : blocks) {
    for (const Layer& l : b.layers) merged.layers.push_back(l);
  }
  return merged;
}

/// Flatten a block's linear parameters into one vector for finite-diff
/// checks.
inline std::vector<Matrix*> block_params(Block& b) {
  std::vector<Matrix*> params;
  for (Layer& l : b.layers) {
    if (l.kind == Layer::Kind::Linear) params.push_back(&l.weight);
  }
  return params;
}

/// Exhaustive NNLS oracle: tries every active set (free-coordinate subset),
/// solves unconstrained least squares on it, and keeps the best feasible
/// objective. Only for small column counts.
inline Scalar nnls_enum_objective(const Matrix& a, const Vector& b) {
  const Index k = a.cols();
  Scalar best = b.squaredNorm();  // x = 0 is always feasible
  for (unsigned mask = 1; mask < (1u << k); ++mask) {
    std::vector<Index> free_cols;
    for (Index i = 0; i < k; ++i) {
      if (mask & (1u << i)) free_cols.push_back(i);
    }
    Matrix sub(a.rows(), static_cast<Index>(free_cols.size()));
    for (std::size_t c = 0; c < free_cols.size(); ++c) {
      sub.col(static_cast<Index>(c)) = a.col(free_cols[c]);
    }
    const Vector sol = sub.colPivHouseholderQr().solve(b);
    if ((sol.array() >= -1e-12).all()) {
      best = std::min(best, (sub * sol - b).squaredNorm());
    }
  }
  return 0.5 * best;
}

/// Plain gradient descent to a tight gradient norm; the independent oracle
/// for the closed-form solves.
inline Matrix gd_minimize(const std::function<Scalar(const Matrix&)>& f,
                          const std::function<Matrix(const Matrix&)>& grad,
                          Matrix x, Scalar lr, Scalar grad_tol = 1e-10,
                          int max_iter = 500000) {
  (void)f;
  for (int i = 0; i < max_iter; ++i) {
    const Matrix g = grad(x);
    if (g.norm() < grad_tol) break;
    x -= lr * g;
  }
  return x;
}

/// Dense 1-D grid search at a fixed resolution.
inline Scalar grid_minimize(const std::function<Scalar(Scalar)>& f, Scalar lo,
                            Scalar hi, Scalar step) {
  Scalar best_x = lo, best_f = f(lo);
  for (Scalar x = lo; x <= hi; x += step) {
    const Scalar v = f(x);
    if (v < best_f) {
      best_f = v;
      best_x = x;
    }
  }
  return best_x;
}

/// Central finite differences of a scalar function with respect to one
/// matrix captured by reference.
inline Matrix fd_matrix(const std::function<Scalar()>& f, Matrix& x,
                        Scalar h) {
  Matrix g(x.rows(), x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    for (Index i = 0; i < x.rows(); ++i) {
      const Scalar saved = x(i, j);
      x(i, j) = saved + h;
      const Scalar fp = f();
      x(i, j) = saved - h;
      const Scalar fm = f();
      x(i, j) = saved;
      g(i, j) = (fp - fm) / (2 * h);
    }
  }
  return g;
}

}  // namespace testing
