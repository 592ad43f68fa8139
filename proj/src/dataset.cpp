#include "blockadmm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <numeric>

#include "blockadmm/loss.hpp"
#include "blockadmm/metrics.hpp"

namespace blockadmm {

namespace {

std::uint32_t read_u32_be(std::istream& in, const std::string& path) {
  unsigned char buf[4];
  if (!in.read(reinterpret_cast<char*>(buf), 4)) {
    throw DataError("truncated IDX header in " + path);
  }
  return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
         (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

void write_u32_be(std::ostream& out, std::uint32_t v) {
  const unsigned char buf[4] = {
      static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
      static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(buf), 4);
}

std::vector<unsigned char> read_payload(std::istream& in,
                                        std::size_t expected,
                                        const std::string& path) {
  std::vector<unsigned char> data(expected);
  in.read(reinterpret_cast<char*>(data.data()), expected);
  const std::size_t got = static_cast<std::size_t>(in.gcount());
  if (got != expected) {
    throw DataError("truncated IDX payload in " + path + ": expected " +
                    std::to_string(expected) + " bytes, got " +
                    std::to_string(got));
  }
  return data;
}

std::string hex(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "0x%08x", v);
  return buf;
}

}  // namespace

Dataset load_idx(const std::string& images_path,
                 const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw DataError("cannot open IDX image file: " + images_path);
  const std::uint32_t img_magic = read_u32_be(img, images_path);
  if (img_magic != 0x00000803u) {
    throw DataError("bad IDX image magic " + hex(img_magic) + " in " +
                    images_path + " (expected 0x00000803)");
  }
  const std::uint32_t n = read_u32_be(img, images_path);
  const std::uint32_t rows = read_u32_be(img, images_path);
  const std::uint32_t cols = read_u32_be(img, images_path);
  const std::size_t pixels = std::size_t(n) * rows * cols;
  const auto img_data = read_payload(img, pixels, images_path);

  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw DataError("cannot open IDX label file: " + labels_path);
  const std::uint32_t lab_magic = read_u32_be(lab, labels_path);
  if (lab_magic != 0x00000801u) {
    throw DataError("bad IDX label magic " + hex(lab_magic) + " in " +
                    labels_path + " (expected 0x00000801)");
  }
  const std::uint32_t n_labels = read_u32_be(lab, labels_path);
  if (n_labels != n) {
    throw DataError("IDX count mismatch: " + std::to_string(n) +
                    " images vs " + std::to_string(n_labels) + " labels");
  }
  const auto lab_data = read_payload(lab, n_labels, labels_path);

  constexpr Index kClasses = 10;
  Dataset ds;
  ds.name = "idx";
  ds.x.resize(static_cast<Index>(rows) * cols, n);
  ds.y = Matrix::Zero(kClasses, n);
  for (std::uint32_t j = 0; j < n; ++j) {
    for (std::uint32_t p = 0; p < rows * cols; ++p) {
      ds.x(p, j) =
          static_cast<Scalar>(img_data[std::size_t(j) * rows * cols + p]) /
          255.0;
    }
    const unsigned char label = lab_data[j];
    if (label >= kClasses) {
      throw DataError("IDX label " + std::to_string(int(label)) +
                      " out of range at sample " + std::to_string(j));
    }
    ds.y(label, j) = 1.0;
  }
  return ds;
}

void write_idx_images(const std::string& path, const Matrix& x01, Index rows,
                      Index cols) {
  if (x01.rows() != rows * cols) {
    throw ShapeError("write_idx_images: feature dim " +
                     std::to_string(x01.rows()) + " != " +
                     std::to_string(rows) + "*" + std::to_string(cols));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path);
  write_u32_be(out, 0x00000803u);
  write_u32_be(out, static_cast<std::uint32_t>(x01.cols()));
  write_u32_be(out, static_cast<std::uint32_t>(rows));
  write_u32_be(out, static_cast<std::uint32_t>(cols));
  for (Index j = 0; j < x01.cols(); ++j) {
    for (Index p = 0; p < x01.rows(); ++p) {
      const Scalar v = std::clamp(x01(p, j), 0.0, 1.0);
      out.put(static_cast<char>(std::lround(v * 255.0)));
    }
  }
}

void write_idx_labels(const std::string& path,
                      const std::vector<int>& labels) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path);
  write_u32_be(out, 0x00000801u);
  write_u32_be(out, static_cast<std::uint32_t>(labels.size()));
  for (int l : labels) out.put(static_cast<char>(l));
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& pool,
                                             Index n_train, Index n_test,
                                             Rng& rng) {
  const Index n = pool.samples();
  const Index classes = pool.classes();
  if (n_train + n_test > n) {
    throw DataError("stratified_split: requested " +
                    std::to_string(n_train + n_test) + " of " +
                    std::to_string(n) + " samples");
  }

  std::vector<std::vector<Index>> by_class(classes);
  for (Index j = 0; j < n; ++j) {
    by_class[argmax_column(pool.y, j)].push_back(j);
  }
  for (auto& idx : by_class) rng.shuffle(idx);

  // largest-remainder proportional allocation per class
  auto allocate = [&](Index total) {
    std::vector<Index> take(classes, 0);
    std::vector<std::pair<Scalar, Index>> rema(classes);
    Index assigned = 0;
    for (Index c = 0; c < classes; ++c) {
      const Scalar exact = static_cast<Scalar>(total) *
                           static_cast<Scalar>(by_class[c].size()) /
                           static_cast<Scalar>(n);
      take[c] = static_cast<Index>(std::floor(exact));
      rema[c] = {exact - std::floor(exact), c};
      assigned += take[c];
    }
    std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
      return a.first > b.first || (a.first == b.first && a.second < b.second);
    });
    for (Index i = 0; assigned < total; ++i, ++assigned) {
      ++take[rema[static_cast<std::size_t>(i) % classes].second];
    }
    return take;
  };
  const auto train_take = allocate(n_train);
  const auto test_take = allocate(n_test);

  std::vector<Index> train_idx, test_idx;
  for (Index c = 0; c < classes; ++c) {
    const auto& idx = by_class[c];
    if (static_cast<Index>(idx.size()) < train_take[c] + test_take[c]) {
      throw DataError("stratified_split: class " + std::to_string(c) +
                      " has only " + std::to_string(idx.size()) + " samples");
    }
    train_idx.insert(train_idx.end(), idx.begin(), idx.begin() + train_take[c]);
    test_idx.insert(test_idx.end(), idx.begin() + train_take[c],
                    idx.begin() + train_take[c] + test_take[c]);
  }

  auto take_set = [&](const std::vector<Index>& idx, const char* split) {
    Dataset out;
    out.name = pool.name;
    out.split = split;
    out.x.resize(pool.x.rows(), static_cast<Index>(idx.size()));
    out.y.resize(classes, static_cast<Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) {
      out.x.col(static_cast<Index>(j)) = pool.x.col(idx[j]);
      out.y.col(static_cast<Index>(j)) = pool.y.col(idx[j]);
    }
    return out;
  };
  return {take_set(train_idx, "train"), take_set(test_idx, "test")};
}

Matrix one_hot(const std::vector<int>& labels, Index classes) {
  Matrix y = Matrix::Zero(classes, static_cast<Index>(labels.size()));
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (labels[j] < 0 || labels[j] >= classes) {
      throw DataError("one_hot: label out of range");
    }
    y(labels[j], static_cast<Index>(j)) = 1.0;
  }
  return y;
}

namespace {

Index margined_argmax(const Vector& score, Scalar margin) {
  Index best = 0;
  for (Index i = 1; i < score.size(); ++i) {
    if (score[i] > score[best]) best = i;
  }
  Scalar second = -std::numeric_limits<Scalar>::infinity();
  for (Index i = 0; i < score.size(); ++i) {
    if (i != best) second = std::max(second, score[i]);
  }
  return score[best] - second >= margin ? best : Index(-1);
}

}  // namespace

std::pair<Dataset, Dataset> synth_linear_teacher(Index dim, Index classes,
                                                 Index n_train, Index n_test,
                                                 Scalar margin, Scalar noise,
                                                 Rng& rng) {
  const Matrix teacher = init_normal(classes, dim, 1.0, rng);
  auto make = [&](Index n, const char* split) {
    Dataset ds;
    ds.name = "linear-teacher";
    ds.split = split;
    ds.x.resize(dim, n);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (Index j = 0; j < n; ++j) {
      while (true) {
        Vector x = init_normal(dim, 1, 1.0, rng);
        const Index best = margined_argmax(teacher * x, margin);
        if (best >= 0) {
          ds.x.col(j) = x;
          labels[static_cast<std::size_t>(j)] = static_cast<int>(best);
          break;
        }
      }
    }
    if (noise > 0) ds.x += init_normal(dim, n, noise, rng);
    ds.y = one_hot(labels, classes);
    return ds;
  };
  Dataset train = make(n_train, "train");
  Dataset test = make(n_test, "test");
  return {std::move(train), std::move(test)};
}

Dataset synth_two_moons(Index n, Scalar noise, Rng& rng, std::string split) {
  Dataset ds;
  ds.name = "two-moons";
  ds.split = std::move(split);
  ds.x.resize(2, n);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    const int cls = static_cast<int>(rng.index(2));
    const Scalar t = rng.uniform() * std::numbers::pi_v<Scalar>;
    Scalar px, py;
    if (cls == 0) {
      px = std::cos(t);
      py = std::sin(t);
    } else {
      px = 1.0 - std::cos(t);
      py = 0.5 - std::sin(t);
    }
    ds.x(0, j) = px + (noise > 0 ? rng.normal(noise) : 0.0);
    ds.x(1, j) = py + (noise > 0 ? rng.normal(noise) : 0.0);
    labels[static_cast<std::size_t>(j)] = cls;
  }
  ds.y = one_hot(labels, 2);
  return ds;
}

std::pair<Dataset, Dataset> synth_low_rank_nonneg(Index dim, Index rank,
                                                  Index classes,
                                                  Index n_train, Index n_test,
                                                  Rng& rng,
                                                  LowRankTruth* truth) {
  const Matrix basis = init_normal(dim, rank, 1.0, rng).cwiseAbs();
  const Matrix teacher = init_normal(classes, rank, 1.0, rng);

  auto make = [&](Index n, const char* split, Matrix* scores_out) {
    Dataset ds;
    ds.name = "low-rank-nonneg";
    ds.split = split;
    Matrix scores(rank, n);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (Index j = 0; j < n; ++j) {
      while (true) {
        Vector s(rank);
        for (Index i = 0; i < rank; ++i) s[i] = rng.uniform();
        const Index best = margined_argmax(teacher * s, 0.2);
        if (best >= 0) {
          scores.col(j) = s;
          labels[static_cast<std::size_t>(j)] = static_cast<int>(best);
          break;
        }
      }
    }
    ds.x = basis * scores;
    ds.y = one_hot(labels, classes);
    if (scores_out) *scores_out = std::move(scores);
    return ds;
  };

  Matrix s_train, s_test;
  Dataset train = make(n_train, "train", &s_train);
  Dataset test = make(n_test, "test", &s_test);
  if (truth) {
    truth->basis = basis;
    truth->scores_train = std::move(s_train);
    truth->scores_test = std::move(s_test);
  }
  return {std::move(train), std::move(test)};
}

void write_dataset_csv(const std::string& x_path, const std::string& y_path,
                       const Dataset& ds) {
  auto write_matrix = [](const std::string& path, const Matrix& m) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path);
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j) {
        if (j) out << ',';
        out << format_csv_value(m(i, j));
      }
      out << '\n';
    }
  };
  write_matrix(x_path, ds.x);
  write_matrix(y_path, ds.y);
}

}  // namespace blockadmm
