#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace s2s {

namespace fs = std::filesystem;

// Base class for all library errors. The CLI maps these to exit code 1.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : Error { using Error::Error; };
struct DimensionError : Error { using Error::Error; };
struct DuplicateKeyError : Error { using Error::Error; };
struct UnknownLabelError : Error { using Error::Error; };
struct ConsistencyError : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct CapacityError : Error { using Error::Error; };
struct GenerationError : Error { using Error::Error; };
struct SamplingError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct ProtocolError : Error { using Error::Error; };
struct NumericError : Error { using Error::Error; };
struct DivergenceError : Error { using Error::Error; };
struct LossError : Error { using Error::Error; };

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; i++) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Deterministic RNG. All sampling helpers are implemented here rather than
// with std distributions, whose output is not pinned by the standard.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(splitmix64(seed ^ 0x6a09e667f3bcc909ULL)) {}

  uint64_t next_u64() {
    // xorshift* over a splitmix-initialized state
    uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545f4914f6cdd1dULL;
  }

  // uniform in [0, 1)
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [lo, hi] inclusive
  int64_t uniform_int(int64_t lo, int64_t hi) {
    if (hi < lo) throw SamplingError("uniform_int: empty range");
    uint64_t span = uint64_t(hi - lo) + 1;
    // multiply-shift mapping; bias is negligible for span << 2^64 and the
    // mapping is fully deterministic
    __uint128_t prod = (__uint128_t)next_u64() * span;
    return lo + int64_t(prod >> 64);
  }

  size_t index(size_t n) {
    if (n == 0) throw SamplingError("index: empty collection");
    return size_t(uniform_int(0, int64_t(n) - 1));
  }

  // standard normal via Box-Muller
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; i--) {
      size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Little-endian binary IO, independent of host endianness.
inline void put_u32(std::string& out, uint32_t v) {
  char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff), char((v >> 24) & 0xff)};
  out.append(b, 4);
}

inline void put_f32(std::string& out, float f) {
  uint32_t v;
  std::memcpy(&v, &f, 4);
  put_u32(out, v);
}

class ByteReader {
 public:
  ByteReader(const std::string& data, std::string what) : data_(data), what_(std::move(what)) {}

  uint32_t u32() {
    need(4);
    uint32_t v = uint32_t(uint8_t(data_[pos_])) | uint32_t(uint8_t(data_[pos_ + 1])) << 8 |
                 uint32_t(uint8_t(data_[pos_ + 2])) << 16 | uint32_t(uint8_t(data_[pos_ + 3])) << 24;
    pos_ += 4;
    return v;
  }

  float f32() {
    uint32_t v = u32();
    float f;
    std::memcpy(&f, &v, 4);
    return f;
  }

  std::string bytes(size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void f32_into(float* dst, size_t n) {
    need(4 * n);
    for (size_t i = 0; i < n; i++) dst[i] = f32();
  }

  bool at_end() const { return pos_ == data_.size(); }
  size_t pos() const { return pos_; }

 private:
  void need(size_t n) {
    if (pos_ + n > data_.size()) throw FormatError(what_ + ": truncated data");
  }
  const std::string& data_;
  std::string what_;
  size_t pos_ = 0;
};

std::string read_file_bytes(const fs::path& p);
void write_file_bytes(const fs::path& p, const std::string& bytes);

// FNV-1a over (relative path, contents) of every regular file under root,
// visited in sorted order. Used for regeneration-determinism checks.
uint64_t hash_tree(const fs::path& root);

std::string lowercase(std::string s);

}  // namespace s2s
