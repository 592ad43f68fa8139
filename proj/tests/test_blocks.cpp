#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"

using namespace blockadmm;

TEST_CASE("identity linear block passes input through") {
  Block b;
  b.layers.push_back(linear_layer(Matrix::Identity(3, 3)));
  Rng rng(1);
  const Matrix x = init_normal(3, 5, 1.0, rng);
  CHECK((block_forward(b, x) - x).norm() == 0);
}

TEST_CASE("linear then relu composes by hand") {
  Block b;
  Matrix w(1, 2);
  w << 1, 1;
  b.layers.push_back(linear_layer(w));
  b.layers.push_back(relu_layer());
  Matrix x(2, 1);
  x << 1, -2;
  CHECK(block_forward(b, x)(0, 0) == 0);  // relu(-1)
}

TEST_CASE("multi-layer forward equals the layer-by-layer oracle") {
  Rng rng(2);
  Block b = testing::random_block(rng, 4, 6, 3, true);
  const Matrix x = init_normal(4, 7, 1.0, rng);

  Matrix expect = x;
  for (const Layer& l : b.layers) {
    if (l.kind == Layer::Kind::Linear) {
      expect = l.weight * expect;
      if (l.has_bias) expect.colwise() += l.bias;
    } else {
      expect = expect.cwiseMax(0.0);
    }
  }
  CHECK((block_forward(b, x) - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("zero upstream produces zero gradients") {
  Rng rng(3);
  Block b = testing::random_block(rng, 3, 5, 3, true);
  const Matrix x = init_normal(3, 4, 1.0, rng);
  BlockCache cache;
  const Matrix out = block_forward(b, x, &cache);
  const BlockGrads g =
      block_backward(b, cache, Matrix::Zero(out.rows(), out.cols()));
  for (const Matrix& gw : g.weight) {
    if (gw.size()) CHECK(gw.norm() == 0);
  }
  CHECK(g.input.norm() == 0);
}

TEST_CASE("scalar product rule") {
  Block b;
  Matrix w(1, 1);
  w << 1.7;
  b.layers.push_back(linear_layer(w));
  Matrix x(1, 1);
  x << 0.4;
  BlockCache cache;
  block_forward(b, x, &cache);
  Matrix up(1, 1);
  up << 2.5;
  const BlockGrads g = block_backward(b, cache, up);
  CHECK(g.weight[0](0, 0) == doctest::Approx(2.5 * 0.4));
  CHECK(g.input(0, 0) == doctest::Approx(2.5 * 1.7));
}

TEST_CASE("backward matches finite differences on random blocks") {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Index in = 1 + rng.index(5);
    Block b = testing::random_block(rng, in, 6, 3, trial % 2 == 0);
    Matrix x = init_normal(in, 1 + rng.index(4), 1.0, rng);
    const Matrix up = init_normal(block_forward(b, x).rows(), x.cols(), 1.0, rng);

    BlockCache cache;
    block_forward(b, x, &cache);
    const BlockGrads g = block_backward(b, cache, up);

    auto objective = [&]() {
      return (up.array() * block_forward(b, x).array()).sum();
    };
    for (std::size_t li = 0; li < b.layers.size(); ++li) {
      if (b.layers[li].kind != Layer::Kind::Linear) continue;
      const Matrix fd = testing::fd_matrix(objective, b.layers[li].weight, 1e-6);
      CHECK(testing::grad_mismatch(g.weight[li], fd) < 1e-5);
    }
    const Matrix fd_in = testing::fd_matrix(objective, x, 1e-6);
    CHECK(testing::grad_mismatch(g.input, fd_in) < 1e-5);
  }
}

TEST_CASE("backward rejects a stale cache") {
  Block b;
  b.layers.push_back(linear_layer(Matrix::Identity(2, 2)));
  BlockCache cache;  // never filled
  CHECK_THROWS_AS(block_backward(b, cache, Matrix::Zero(2, 1)), ShapeError);
}

TEST_CASE("straight through over identity blocks is the identity") {
  std::vector<Block> blocks(3);
  for (auto& b : blocks) {
    b.layers.push_back(linear_layer(Matrix::Identity(2, 2)));
  }
  Rng rng(5);
  const Matrix x = init_normal(2, 3, 1.0, rng);
  CHECK((straight_through(blocks, x) - x).norm() == 0);
}

TEST_CASE("two blocks equal one merged block") {
  Rng rng(6);
  Block b1 = testing::random_block(rng, 3, 5, 2, false);
  Block b2 = testing::random_block(rng, block_forward(b1, Matrix::Zero(3, 1)).rows(),
                                   5, 2, false);
  const std::vector<Block> blocks{b1, b2};
  const Block merged = testing::merge_blocks(blocks);
  const Matrix x = init_normal(3, 4, 1.0, rng);
  CHECK((straight_through(blocks, x) - block_forward(merged, x))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("split_network partitions layers in order") {
  auto make_layers = [] {
    std::vector<Layer> layers;
    for (int i = 0; i < 3; ++i) {
      layers.push_back(linear_layer(Matrix::Identity(2, 2)));
    }
    return layers;
  };

  const auto one = split_network(make_layers(), {});
  CHECK(one.size() == 1);
  CHECK(one[0].layers.size() == 3);

  const auto three = split_network(make_layers(), {1, 2});
  CHECK(three.size() == 3);
  for (const Block& b : three) CHECK(b.layers.size() == 1);

  CHECK_THROWS_AS(split_network(make_layers(), {2, 1}), ShapeError);
  CHECK_THROWS_AS(split_network(make_layers(), {3}), ShapeError);
  CHECK_THROWS_AS(split_network(make_layers(), {0}), ShapeError);
}

TEST_CASE("every split of the same layers gives the same inference") {
  Rng rng(7);
  std::vector<Layer> layers;
  Index cur = 3;
  for (int i = 0; i < 4; ++i) {
    const Index out = 2 + rng.index(4);
    layers.push_back(linear_layer(init_normal(out, cur, 0.8, rng)));
    cur = out;
    if (i < 3) layers.push_back(relu_layer());
  }
  const Matrix x = init_normal(3, 5, 1.0, rng);
  const Matrix reference =
      straight_through(split_network(layers, {}), x);

  const std::vector<std::vector<int>> splits{
      {1}, {2}, {3}, {1, 4}, {2, 5}, {1, 3, 5}, {2, 4, 6}};
  for (const auto& boundaries : splits) {
    const Matrix out = straight_through(split_network(layers, boundaries), x);
    CHECK((out - reference).cwiseAbs().maxCoeff() < 1e-12);
  }
}
