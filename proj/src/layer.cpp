#include "blockadmm/layer.hpp"

namespace blockadmm {

Matrix block_forward(const Block& block, const Matrix& input,
                     BlockCache* cache) {
  if (cache) {
    cache->inputs.clear();
    cache->inputs.reserve(block.layers.size());
    cache->cols = input.cols();
  }
  Matrix cur = input;
  for (const Layer& layer : block.layers) {
    if (cache) cache->inputs.push_back(cur);
    if (layer.kind == Layer::Kind::Linear) {
      if (cur.rows() != layer.weight.cols()) {
        throw ShapeError("block_forward: input " +
                         shape_str(cur.rows(), cur.cols()) +
                         " does not match linear layer weight " +
                         shape_str(layer.weight.rows(), layer.weight.cols()));
      }
      Matrix next = layer.weight * cur;
      if (layer.has_bias) next.colwise() += layer.bias;
      cur = std::move(next);
    } else {
      cur = cur.cwiseMax(Scalar(0));
    }
  }
  return cur;
}

BlockGrads block_backward(const Block& block, const BlockCache& cache,
                          const Matrix& upstream) {
  const std::size_t n = block.layers.size();
  if (cache.inputs.size() != n) {
    throw ShapeError("block_backward: stale or missing cache (" +
                     std::to_string(cache.inputs.size()) + " entries for " +
                     std::to_string(n) + " layers)");
  }
  if (upstream.cols() != cache.cols) {
    throw ShapeError("block_backward: upstream has " +
                     std::to_string(upstream.cols()) +
                     " columns, cache was built for " +
                     std::to_string(cache.cols));
  }

  BlockGrads grads;
  grads.weight.resize(n);
  grads.bias.resize(n);

  Matrix g = upstream;
  for (std::size_t i = n; i-- > 0;) {
    const Layer& layer = block.layers[i];
    const Matrix& in = cache.inputs[i];
    if (layer.kind == Layer::Kind::Linear) {
      if (g.rows() != layer.weight.rows()) {
        throw ShapeError("block_backward: upstream rows " +
                         std::to_string(g.rows()) + " vs layer output " +
                         std::to_string(layer.weight.rows()));
      }
      grads.weight[i] = g * in.transpose();
      if (layer.has_bias) grads.bias[i] = g.rowwise().sum();
      g = layer.weight.transpose() * g;
    } else {
      g = g.cwiseProduct(relu_mask(in));
    }
  }
  grads.input = std::move(g);
  return grads;
}

Matrix straight_through(const std::vector<Block>& blocks, const Matrix& x) {
  Matrix cur = x;
  for (const Block& b : blocks) {
    const Index need = b.in_size();
    if (need >= 0 && cur.rows() != need) {
      throw ShapeError("straight_through: block " + std::to_string(b.index) +
                       " expects " + std::to_string(need) + " rows, got " +
                       std::to_string(cur.rows()));
    }
    cur = block_forward(b, cur);
  }
  return cur;
}

std::vector<Block> split_network(std::vector<Layer> layers,
                                 const std::vector<int>& boundaries) {
  const int count = static_cast<int>(layers.size());
  if (count == 0) throw ShapeError("split_network: no layers");
  int prev = 0;
  for (int b : boundaries) {
    if (b <= prev || b >= count) {
      throw ShapeError("split_network: boundary " + std::to_string(b) +
                       " not strictly increasing inside (0, " +
                       std::to_string(count) + ")");
    }
    prev = b;
  }

  std::vector<Block> blocks;
  blocks.reserve(boundaries.size() + 1);
  std::size_t next_boundary = 0;
  Block cur;
  for (int i = 0; i < count; ++i) {
    if (next_boundary < boundaries.size() &&
        i == boundaries[next_boundary]) {
      blocks.push_back(std::move(cur));
      cur = Block{};
      ++next_boundary;
    }
    cur.layers.push_back(std::move(layers[i]));
  }
  blocks.push_back(std::move(cur));
  for (std::size_t t = 0; t < blocks.size(); ++t) {
    blocks[t].index = static_cast<int>(t);
  }
  return blocks;
}

std::size_t param_count(const std::vector<Block>& blocks) {
  std::size_t n = 0;
  for (const Block& b : blocks) {
    for (const Layer& l : b.layers) {
      if (l.kind == Layer::Kind::Linear) {
        n += static_cast<std::size_t>(l.weight.size());
        if (l.has_bias) n += static_cast<std::size_t>(l.bias.size());
      }
    }
  }
  return n;
}

}  // namespace blockadmm
