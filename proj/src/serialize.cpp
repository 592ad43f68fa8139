#include "blockadmm/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "model container assumes a little-endian host");

namespace blockadmm {

namespace {

std::size_t payload_count(const std::vector<Block>& blocks,
                          const NmfState* nmf) {
  std::size_t n = param_count(blocks);
  if (nmf) n += static_cast<std::size_t>(nmf->basis.size());
  return n;
}

void append_matrix(std::vector<Scalar>& payload, const Matrix& m) {
  payload.insert(payload.end(), m.data(), m.data() + m.size());
}

void append_vector(std::vector<Scalar>& payload, const Vector& v) {
  payload.insert(payload.end(), v.data(), v.data() + v.size());
}

}  // namespace

void save_model(const std::string& path, const std::vector<Block>& blocks,
                const NmfState* nmf) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open model file for writing: " + path);

  out << "BLOCKADMM v1\n";
  out << "blocks " << blocks.size() << "\n";
  std::vector<Scalar> payload;
  for (const Block& b : blocks) {
    out << "block " << b.layers.size() << "\n";
    for (const Layer& l : b.layers) {
      if (l.kind == Layer::Kind::Linear) {
        out << "linear " << l.weight.rows() << " " << l.weight.cols() << " "
            << (l.has_bias ? 1 : 0) << "\n";
        append_matrix(payload, l.weight);
        if (l.has_bias) append_vector(payload, l.bias);
      } else {
        out << "relu\n";
      }
    }
  }
  if (nmf) {
    out << "nmf " << nmf->rank << " " << nmf->basis.rows() << " "
        << nmf->position << "\n";
    append_matrix(payload, nmf->basis);
  }
  out << "payload " << payload.size() << "\n";
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(Scalar)));
  if (!out) throw DataError("failed writing model payload to " + path);
}

LoadedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file: " + path);

  std::string header;
  if (!std::getline(in, header) || header != "BLOCKADMM v1") {
    throw DataError("unsupported model header '" + header + "' in " + path);
  }

  LoadedModel model;
  std::string word;
  std::size_t declared_payload = 0;
  std::size_t expected = 0;
  std::size_t block_count = 0;

  if (!(in >> word) || word != "blocks" || !(in >> block_count)) {
    throw DataError("malformed model structure in " + path);
  }
  for (std::size_t bi = 0; bi < block_count; ++bi) {
    std::size_t layer_count = 0;
    if (!(in >> word) || word != "block" || !(in >> layer_count)) {
      throw DataError("malformed block header in " + path);
    }
    Block b;
    b.index = static_cast<int>(bi);
    for (std::size_t li = 0; li < layer_count; ++li) {
      if (!(in >> word)) throw DataError("malformed layer list in " + path);
      if (word == "linear") {
        Index rows = 0, cols = 0;
        int has_bias = 0;
        if (!(in >> rows >> cols >> has_bias)) {
          throw DataError("malformed linear layer in " + path);
        }
        Layer l;
        l.kind = Layer::Kind::Linear;
        l.weight.resize(rows, cols);
        l.has_bias = has_bias != 0;
        if (l.has_bias) l.bias.resize(rows);
        expected += static_cast<std::size_t>(rows * cols) +
                    (l.has_bias ? static_cast<std::size_t>(rows) : 0);
        b.layers.push_back(std::move(l));
      } else if (word == "relu") {
        b.layers.push_back(relu_layer());
      } else {
        throw DataError("unknown layer kind '" + word + "' in " + path);
      }
    }
    model.blocks.push_back(std::move(b));
  }

  if (!(in >> word)) throw DataError("missing payload section in " + path);
  if (word == "nmf") {
    NmfState nmf;
    Index rows = 0;
    if (!(in >> nmf.rank >> rows >> nmf.position)) {
      throw DataError("malformed nmf section in " + path);
    }
    nmf.basis.resize(rows, nmf.rank);
    expected += static_cast<std::size_t>(nmf.basis.size());
    model.nmf = std::move(nmf);
    if (!(in >> word)) throw DataError("missing payload section in " + path);
  }
  if (word != "payload" || !(in >> declared_payload)) {
    throw DataError("malformed payload header in " + path);
  }
  if (declared_payload != expected) {
    throw DataError("model payload length mismatch in " + path +
                    ": header declares " + std::to_string(declared_payload) +
                    " values, structure needs " + std::to_string(expected));
  }
  in.get();  // the newline before the binary payload

  std::vector<Scalar> payload(declared_payload);
  in.read(reinterpret_cast<char*>(payload.data()),
          static_cast<std::streamsize>(declared_payload * sizeof(Scalar)));
  if (static_cast<std::size_t>(in.gcount()) !=
      declared_payload * sizeof(Scalar)) {
    throw DataError("truncated model payload in " + path + ": expected " +
                    std::to_string(declared_payload * sizeof(Scalar)) +
                    " bytes, got " + std::to_string(in.gcount()));
  }

  const Scalar* cursor = payload.data();
  for (Block& b : model.blocks) {
    for (Layer& l : b.layers) {
      if (l.kind != Layer::Kind::Linear) continue;
      std::memcpy(l.weight.data(), cursor,
                  static_cast<std::size_t>(l.weight.size()) * sizeof(Scalar));
      cursor += l.weight.size();
      if (l.has_bias) {
        std::memcpy(l.bias.data(), cursor,
                    static_cast<std::size_t>(l.bias.size()) * sizeof(Scalar));
        cursor += l.bias.size();
      }
    }
  }
  if (model.nmf) {
    std::memcpy(model.nmf->basis.data(), cursor,
                static_cast<std::size_t>(model.nmf->basis.size()) *
                    sizeof(Scalar));
  }
  return model;
}

}  // namespace blockadmm
