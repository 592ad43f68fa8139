#pragma once

#include <optional>
#include <string>
#include <vector>

#include "blockadmm/layer.hpp"
#include "blockadmm/nmf.hpp"

namespace blockadmm {

/// Versioned model container: a text header starting with "BLOCKADMM v1"
/// that lists per-block layer kinds and shapes (plus an optional
/// factorization section), followed by the raw little-endian float64 payload
/// in declaration order (column-major within each matrix). Round trips are
/// bit-exact.
void save_model(const std::string& path, const std::vector<Block>& blocks,
                const NmfState* nmf = nullptr);

struct LoadedModel {
  std::vector<Block> blocks;
  std::optional<NmfState> nmf;  // basis and position only; training state
                                // is not part of a checkpoint
};

LoadedModel load_model(const std::string& path);

}  // namespace blockadmm
