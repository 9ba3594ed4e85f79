#include "s2s/common.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

namespace s2s {

std::string read_file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + p.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + p.string());
  return bytes;
}

void write_file_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + p.string());
  out.write(bytes.data(), std::streamsize(bytes.size()));
  out.flush();
  if (!out) throw IoError("write failed: " + p.string());
}

uint64_t hash_tree(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::vector<std::string> rels;
  rels.reserve(files.size());
  for (const auto& f : files) rels.push_back(f.lexically_relative(root).generic_string());
  std::sort(rels.begin(), rels.end());
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& r : rels) {
    h = fnv1a64(r.data(), r.size(), h);
    std::string bytes = read_file_bytes(root / r);
    h = fnv1a64(bytes.data(), bytes.size(), h);
  }
  return h;
}

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return char(std::tolower(c)); });
  return s;
}

}  // namespace s2s
