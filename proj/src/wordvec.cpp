#include "s2s/wordvec.hpp"

#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace s2s {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) i++;
    size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) j++;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_nonneg_int(const std::string& tok, long& out) {
  if (tok.empty()) return false;
  char* end = nullptr;
  errno = 0;
  long v = std::strtol(tok.c_str(), &end, 10);
  if (errno != 0 || end != tok.c_str() + tok.size() || v < 0) return false;
  out = v;
  return true;
}

bool parse_f32(const std::string& tok, float& out) {
  if (tok.empty()) return false;
  char* end = nullptr;
  errno = 0;
  float v = std::strtof(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size()) return false;
  out = v;
  return true;
}

}  // namespace

bool EmbeddingTable::contains(const std::string& label) const {
  return entries.count(lowercase(label)) > 0;
}

const std::vector<float>* EmbeddingTable::find(const std::string& label) const {
  auto it = entries.find(lowercase(label));
  return it == entries.end() ? nullptr : &it->second;
}

std::vector<std::string> EmbeddingTable::labels() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto& [k, v] : entries) out.push_back(k);
  return out;
}

EmbeddingTable load_embeddings(const fs::path& path, std::optional<int> expected_dim) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open word-vector file: " + path.string());
  if (expected_dim && *expected_dim <= 0)
    throw DimensionError("expected_dim must be positive");

  EmbeddingTable table;
  std::optional<long> header_count;
  bool saw_first = false;
  std::string line;
  long line_no = 0;

  while (std::getline(in, line)) {
    line_no++;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto toks = split_ws(line);
    if (toks.empty()) continue;

    if (!saw_first) {
      saw_first = true;
      long count = 0, dim = 0;
      if (toks.size() == 2 && parse_nonneg_int(toks[0], count) && parse_nonneg_int(toks[1], dim)) {
        if (dim <= 0)
          throw ParseError("line " + std::to_string(line_no) + ": header dim must be positive");
        if (expected_dim && dim != *expected_dim)
          throw DimensionError("header dim " + std::to_string(dim) + " does not match expected " +
                               std::to_string(*expected_dim));
        header_count = count;
        table.dim = int(dim);
        continue;
      }
    }

    if (toks.size() < 2)
      throw ParseError("line " + std::to_string(line_no) + ": expected `token c_1 ... c_dim`");

    std::string token = lowercase(toks[0]);
    int ncomp = int(toks.size()) - 1;
    if (table.dim == 0) {
      if (expected_dim && ncomp != *expected_dim)
        throw DimensionError("first vector has " + std::to_string(ncomp) +
                             " components, expected " + std::to_string(*expected_dim));
      table.dim = ncomp;
    } else if (ncomp != table.dim) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(table.dim) + " components, got " + std::to_string(ncomp));
    }

    std::vector<float> vec(size_t(ncomp), 0.0f);
    for (int i = 0; i < ncomp; i++) {
      float v;
      if (!parse_f32(toks[size_t(i) + 1], v))
        throw ParseError("line " + std::to_string(line_no) + ": non-numeric component `" +
                         toks[size_t(i) + 1] + "`");
      if (!std::isfinite(v))
        throw ParseError("line " + std::to_string(line_no) + ": non-finite component `" +
                         toks[size_t(i) + 1] + "`");
      vec[size_t(i)] = v;
    }
    if (!table.entries.emplace(std::move(token), std::move(vec)).second)
      throw DuplicateKeyError("line " + std::to_string(line_no) + ": duplicate token `" +
                              lowercase(toks[0]) + "`");
  }
  if (in.bad()) throw IoError("read failed: " + path.string());

  if (header_count && *header_count != long(table.entries.size()))
    throw ParseError("header count " + std::to_string(*header_count) + " does not match " +
                     std::to_string(table.entries.size()) + " entries");
  if (expected_dim && table.dim != *expected_dim)
    throw DimensionError("table dim " + std::to_string(table.dim) + " does not match expected " +
                         std::to_string(*expected_dim));
  return table;
}

void save_embeddings(const EmbeddingTable& table, const fs::path& path) {
  std::ostringstream out;
  out << table.entries.size() << ' ' << table.dim << '\n';
  char buf[64];
  for (const auto& [token, vec] : table.entries) {
    out << token;
    for (float v : vec) {
      std::snprintf(buf, sizeof buf, " %.9g", double(v));
      out << buf;
    }
    out << '\n';
  }
  write_file_bytes(path, out.str());
}

std::vector<float> embed_label(const EmbeddingTable& table, const std::string& label) {
  auto tokens = split_ws(lowercase(label));
  if (tokens.empty()) throw UnknownLabelError("empty label");

  std::string phrase = tokens[0];
  for (size_t i = 1; i < tokens.size(); i++) phrase += "_" + tokens[i];
  if (const auto* v = table.find(phrase)) return *v;

  std::vector<double> acc(size_t(table.dim), 0.0);
  for (const auto& tok : tokens) {
    const auto* v = table.find(tok);
    if (!v) throw UnknownLabelError("unknown label token `" + tok + "` in `" + label + "`");
    for (size_t i = 0; i < acc.size(); i++) acc[i] += double((*v)[i]);
  }
  std::vector<float> out(acc.size());
  for (size_t i = 0; i < acc.size(); i++) out[i] = float(acc[i] / double(tokens.size()));
  return out;
}

std::vector<std::vector<double>> orthonormal_rows(int count, int dim, Rng& rng) {
  if (count > dim)
    throw CapacityError("cannot fit " + std::to_string(count) + " orthonormal vectors in " +
                        std::to_string(dim) + " dimensions");
  std::vector<std::vector<double>> rows;
  rows.reserve(size_t(count));
  while (int(rows.size()) < count) {
    std::vector<double> v(size_t(dim), 0.0);
    for (auto& x : v) x = rng.normal();
    // two-pass modified Gram-Schmidt for orthogonality well below 1e-6
    for (int pass = 0; pass < 2; pass++) {
      for (const auto& q : rows) {
        double d = 0;
        for (int i = 0; i < dim; i++) d += v[size_t(i)] * q[size_t(i)];
        for (int i = 0; i < dim; i++) v[size_t(i)] -= d * q[size_t(i)];
      }
    }
    double n2 = 0;
    for (double x : v) n2 += x * x;
    double n = std::sqrt(n2);
    if (n < 1e-8) continue;  // degenerate draw; take a fresh one
    for (auto& x : v) x /= n;
    rows.push_back(std::move(v));
  }
  return rows;
}

EmbeddingTable make_orthonormal_table(const std::vector<std::string>& labels, int dim,
                                      uint64_t seed) {
  if (dim <= 0) throw DimensionError("dim must be positive");
  if (int(labels.size()) > dim)
    throw CapacityError("cannot fit " + std::to_string(labels.size()) +
                        " orthonormal labels in dimension " + std::to_string(dim));

  EmbeddingTable table;
  table.dim = dim;
  Rng rng(seed);
  auto rows = orthonormal_rows(int(labels.size()), dim, rng);
  for (size_t i = 0; i < labels.size(); i++) {
    if (labels[i].empty()) throw UnknownLabelError("empty label at index " + std::to_string(i));
    std::vector<float> v(size_t(dim), 0.0f);
    for (int j = 0; j < dim; j++) v[size_t(j)] = float(rows[i][size_t(j)]);
    if (!table.entries.emplace(lowercase(labels[i]), std::move(v)).second)
      throw DuplicateKeyError("duplicate label `" + lowercase(labels[i]) + "`");
  }
  return table;
}

}  // namespace s2s
