#include "blockadmm/baseline.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "blockadmm/batch_admm.hpp"

namespace blockadmm {

std::vector<MetricsRecord> baseline_train(Block& net, const Matrix& x,
                                          const Matrix& y,
                                          const Matrix* test_x,
                                          const Matrix* test_y, LossKind loss,
                                          const BaselineConfig& cfg,
                                          int epochs, Rng& rng) {
  const Index n = x.cols();
  net.ensure_opt_state();

  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index(0));

  std::vector<MetricsRecord> metrics;
  metrics.reserve(epochs);
  Scalar train_seconds = 0;
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    rng.shuffle(order);
    for (Index begin = 0; begin < n; begin += cfg.batch) {
      const Index size = std::min<Index>(cfg.batch, n - begin);
      std::vector<Index> idx(order.begin() + begin,
                             order.begin() + begin + size);
      const Matrix xb = gather_columns(x, idx);
      const Matrix yb = gather_columns(y, idx);

      BlockCache cache;
      const Matrix out = block_forward(net, xb, &cache);
      const BlockGrads grads =
          block_backward(net, cache, loss_grad(loss, yb, out));
      for (std::size_t i = 0; i < net.layers.size(); ++i) {
        Layer& layer = net.layers[i];
        if (layer.kind != Layer::Kind::Linear) continue;
        if (cfg.optim == Optim::Adam) {
          adam_step(layer.weight, grads.weight[i], net.weight_opt[i], cfg.lr);
          if (layer.has_bias) {
            adam_step(layer.bias, grads.bias[i], net.bias_opt[i], cfg.lr);
          }
        } else {
          sgd_step(layer.weight, grads.weight[i], cfg.lr);
          if (layer.has_bias) sgd_step(layer.bias, grads.bias[i], cfg.lr);
        }
      }
    }
    train_seconds +=
        std::chrono::duration<Scalar>(std::chrono::steady_clock::now() -
                                      started)
            .count();

    MetricsRecord rec;
    rec.epoch = epoch;
    rec.wall_clock_seconds = train_seconds;
    rec.train_loss = loss_value(loss, y, block_forward(net, x));
    rec.total_coupling_residual = 0;
    if (test_x && test_y) {
      rec.test_accuracy = accuracy(*test_y, block_forward(net, *test_x));
    }
    if (!std::isfinite(rec.train_loss)) {
      throw NumericError("baseline_train: non-finite loss at epoch " +
                         std::to_string(epoch));
    }
    metrics.push_back(rec);
  }
  return metrics;
}

}  // namespace blockadmm
