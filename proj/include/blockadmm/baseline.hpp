#pragma once

#include <vector>

#include "blockadmm/layer.hpp"
#include "blockadmm/loss.hpp"
#include "blockadmm/metrics.hpp"
#include "blockadmm/rng.hpp"

namespace blockadmm {

struct BaselineConfig {
  Optim optim = Optim::Adam;
  Scalar lr = 5e-3;
  int batch = 64;
};

/// Conventional end-to-end backpropagation: the whole network is one block
/// and minibatch gradients flow through it unbroken.
std::vector<MetricsRecord> baseline_train(Block& net, const Matrix& x,
                                          const Matrix& y,
                                          const Matrix* test_x,
                                          const Matrix* test_y, LossKind loss,
                                          const BaselineConfig& cfg,
                                          int epochs, Rng& rng);

}  // namespace blockadmm
