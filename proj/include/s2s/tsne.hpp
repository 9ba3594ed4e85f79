#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace s2s {

struct TsneResult {
  std::vector<std::array<double, 2>> coords;
  bool jittered = false;  // true when identical rows forced a perturbation
};

/// Exact (O(n^2)) t-SNE to two dimensions. Deterministic under seed.
/// Needs at least two rows of equal width.
TsneResult tsne2d(const std::vector<std::vector<double>>& rows, uint64_t seed);

}  // namespace s2s
