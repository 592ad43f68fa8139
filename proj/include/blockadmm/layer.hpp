#pragma once

#include <vector>

#include "blockadmm/optim.hpp"
#include "blockadmm/types.hpp"

namespace blockadmm {

/// One differentiable layer: an affine map or a ReLU.
struct Layer {
  enum class Kind { Linear, Relu };

  Kind kind = Kind::Relu;
  Matrix weight;  // out x in, Linear only
  Vector bias;    // out, Linear only, optional
  bool has_bias = false;

  Index in_size() const { return kind == Kind::Linear ? weight.cols() : -1; }
  Index out_size() const { return kind == Kind::Linear ? weight.rows() : -1; }
};

inline Layer linear_layer(Matrix weight) {
  Layer l;
  l.kind = Layer::Kind::Linear;
  l.weight = std::move(weight);
  return l;
}

inline Layer linear_layer(Matrix weight, Vector bias) {
  if (bias.size() != weight.rows()) {
    throw ShapeError("linear_layer: bias size " + std::to_string(bias.size()) +
                     " does not match weight rows " +
                     std::to_string(weight.rows()));
  }
  Layer l;
  l.kind = Layer::Kind::Linear;
  l.weight = std::move(weight);
  l.bias = std::move(bias);
  l.has_bias = true;
  return l;
}

inline Layer relu_layer() { return Layer{}; }

/// A contiguous run of layers trained as one unit. Gradients computed for a
/// block never leave it: the only cross-block signal is the coupling
/// variables owned by the trainers.
struct Block {
  std::vector<Layer> layers;
  int index = 0;

  // Adam state per layer (unused entries for ReLU layers).
  std::vector<AdamState> weight_opt;
  std::vector<AdamState> bias_opt;

  /// Input size required by the first Linear layer; -1 if the block is
  /// shape-preserving (no Linear layer).
  Index in_size() const {
    for (const Layer& l : layers) {
      if (l.kind == Layer::Kind::Linear) return l.in_size();
    }
    return -1;
  }

  Index out_size() const {
    for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
      if (it->kind == Layer::Kind::Linear) return it->out_size();
    }
    return -1;
  }

  void ensure_opt_state() {
    if (weight_opt.size() != layers.size()) {
      weight_opt.assign(layers.size(), AdamState{});
      bias_opt.assign(layers.size(), AdamState{});
    }
  }
};

/// Per-layer inputs captured on the forward pass; consumed by the matching
/// backward pass.
struct BlockCache {
  std::vector<Matrix> inputs;
  Index cols = 0;
};

/// Gradients of <upstream, block(input)> with respect to every parameter and
/// to the block input.
struct BlockGrads {
  std::vector<Matrix> weight;  // aligned with layers, empty for ReLU
  std::vector<Vector> bias;
  Matrix input;
};

Matrix block_forward(const Block& block, const Matrix& input,
                     BlockCache* cache = nullptr);

BlockGrads block_backward(const Block& block, const BlockCache& cache,
                          const Matrix& upstream);

/// Inference path: the blocks composed directly, coupling variables dropped.
Matrix straight_through(const std::vector<Block>& blocks, const Matrix& x);

/// Partition layers into blocks starting at each boundary index. Boundaries
/// must be strictly increasing and inside (0, layer count).
std::vector<Block> split_network(std::vector<Layer> layers,
                                 const std::vector<int>& boundaries);

/// Number of scalar parameters across all blocks.
std::size_t param_count(const std::vector<Block>& blocks);

}  // namespace blockadmm
