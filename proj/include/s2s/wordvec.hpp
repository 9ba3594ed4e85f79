#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "s2s/common.hpp"

namespace s2s {

/// Label -> vector table. Keys are stored lowercased; lookups lowercase their
/// argument, so access is case-insensitive. Immutable once built.
struct EmbeddingTable {
  int dim = 0;
  std::map<std::string, std::vector<float>> entries;

  bool contains(const std::string& label) const;
  /// Exact-key lookup (after lowercasing). nullptr when absent.
  const std::vector<float>* find(const std::string& label) const;
  std::vector<std::string> labels() const;
};

/// Parses the whitespace-delimited word-vector text format:
/// an optional `count dim` header line, then one `token c_1 ... c_dim` per line.
EmbeddingTable load_embeddings(const fs::path& path, std::optional<int> expected_dim = {});

/// Writes the same text format (with header), entries in sorted key order.
/// Components are printed with enough digits to round-trip float32 exactly.
void save_embeddings(const EmbeddingTable& table, const fs::path& path);

/// Phrase lookup with underscore join first ("hair dryer" -> "hair_dryer"),
/// then mean of per-token vectors. Throws UnknownLabelError naming the first
/// missing token if neither path resolves.
std::vector<float> embed_label(const EmbeddingTable& table, const std::string& label);

/// Pairwise-orthogonal unit vectors assigned to labels in list order,
/// from Gram-Schmidt over a seeded Gaussian matrix. Deterministic in
/// (labels order, dim, seed).
EmbeddingTable make_orthonormal_table(const std::vector<std::string>& labels, int dim,
                                      uint64_t seed);

/// Gram-Schmidt rows used by make_orthonormal_table; also reused by the
/// synthetic-vector generator. Returns `count` orthonormal rows of length dim.
std::vector<std::vector<double>> orthonormal_rows(int count, int dim, Rng& rng);

}  // namespace s2s
