#include "s2s/pngio.hpp"

#include <zlib.h>

#include <cstring>

namespace s2s {

namespace {

void put_u32_be(std::string& out, uint32_t v) {
  char b[4] = {char((v >> 24) & 0xff), char((v >> 16) & 0xff), char((v >> 8) & 0xff),
               char(v & 0xff)};
  out.append(b, 4);
}

uint32_t get_u32_be(const unsigned char* p) {
  return uint32_t(p[0]) << 24 | uint32_t(p[1]) << 16 | uint32_t(p[2]) << 8 | uint32_t(p[3]);
}

void append_chunk(std::string& out, const char type[4], const std::string& payload) {
  put_u32_be(out, uint32_t(payload.size()));
  size_t start = out.size();
  out.append(type, 4);
  out += payload;
  uint32_t crc = uint32_t(
      ::crc32(0, reinterpret_cast<const Bytef*>(out.data() + start), uInt(out.size() - start)));
  put_u32_be(out, crc);
}

int paeth(int a, int b, int c) {
  int p = a + b - c;
  int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace

RgbImage make_rgb(int width, int height, uint8_t r, uint8_t g, uint8_t b) {
  if (width <= 0 || height <= 0) throw DimensionError("make_rgb: non-positive size");
  RgbImage img;
  img.width = width;
  img.height = height;
  img.pixels.resize(size_t(width) * height * 3);
  for (size_t i = 0; i < img.pixels.size(); i += 3) {
    img.pixels[i] = r;
    img.pixels[i + 1] = g;
    img.pixels[i + 2] = b;
  }
  return img;
}

void write_png(const fs::path& path, const RgbImage& img) {
  if (img.width <= 0 || img.height <= 0 ||
      img.pixels.size() != size_t(img.width) * img.height * 3)
    throw DimensionError("write_png: inconsistent image dimensions");

  size_t stride = size_t(img.width) * 3;
  std::string raw;
  raw.reserve((stride + 1) * size_t(img.height));
  for (int r = 0; r < img.height; r++) {
    raw.push_back('\0');  // filter type 0 (None)
    raw.append(reinterpret_cast<const char*>(img.pixels.data() + stride * size_t(r)), stride);
  }

  uLongf bound = ::compressBound(uLong(raw.size()));
  std::string compressed(bound, '\0');
  if (::compress2(reinterpret_cast<Bytef*>(compressed.data()), &bound,
                  reinterpret_cast<const Bytef*>(raw.data()), uLong(raw.size()),
                  6) != Z_OK)
    throw IoError("write_png: deflate failed");
  compressed.resize(bound);

  std::string out("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  put_u32_be(ihdr, uint32_t(img.width));
  put_u32_be(ihdr, uint32_t(img.height));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // color type: truecolor
  ihdr.push_back(0);   // compression
  ihdr.push_back(0);   // filter method
  ihdr.push_back(0);   // no interlace
  append_chunk(out, "IHDR", ihdr);
  append_chunk(out, "IDAT", compressed);
  append_chunk(out, "IEND", "");
  write_file_bytes(path, out);
}

RgbImage read_png(const fs::path& path) {
  std::string data = read_file_bytes(path);
  if (data.size() < 8 || std::memcmp(data.data(), "\x89PNG\r\n\x1a\n", 8) != 0)
    throw FormatError("read_png: bad signature: " + path.string());

  const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
  size_t pos = 8;
  int width = 0, height = 0, channels = 0;
  std::string idat;
  bool saw_ihdr = false, saw_iend = false;

  while (pos + 8 <= data.size() && !saw_iend) {
    uint32_t len = get_u32_be(bytes + pos);
    if (pos + 12 + len > data.size()) throw FormatError("read_png: truncated chunk");
    std::string type(data, pos + 4, 4);
    const unsigned char* payload = bytes + pos + 8;
    if (type == "IHDR") {
      if (len != 13) throw FormatError("read_png: bad IHDR");
      width = int(get_u32_be(payload));
      height = int(get_u32_be(payload + 4));
      int depth = payload[8], color = payload[9], interlace = payload[12];
      if (depth != 8 || (color != 2 && color != 6) || interlace != 0)
        throw FormatError("read_png: unsupported format (need 8-bit RGB/RGBA, no interlace)");
      channels = color == 2 ? 3 : 4;
      saw_ihdr = true;
    } else if (type == "IDAT") {
      idat.append(reinterpret_cast<const char*>(payload), len);
    } else if (type == "IEND") {
      saw_iend = true;
    }
    pos += 12 + len;
  }
  if (!saw_ihdr || !saw_iend || width <= 0 || height <= 0)
    throw FormatError("read_png: missing chunks");

  size_t stride = size_t(width) * size_t(channels);
  uLongf raw_len = uLongf((stride + 1) * size_t(height));
  std::string raw(raw_len, '\0');
  if (::uncompress(reinterpret_cast<Bytef*>(raw.data()), &raw_len,
                   reinterpret_cast<const Bytef*>(idat.data()), uLong(idat.size())) != Z_OK ||
      raw_len != (stride + 1) * size_t(height))
    throw FormatError("read_png: inflate failed");

  // undo per-scanline filters
  auto* p = reinterpret_cast<unsigned char*>(raw.data());
  std::vector<unsigned char> prev(stride, 0), cur(stride);
  RgbImage img;
  img.width = width;
  img.height = height;
  img.pixels.resize(size_t(width) * height * 3);
  int bpp = channels;
  for (int r = 0; r < height; r++) {
    unsigned char filter = p[(stride + 1) * size_t(r)];
    const unsigned char* line = p + (stride + 1) * size_t(r) + 1;
    for (size_t i = 0; i < stride; i++) {
      int x = line[i];
      int a = i >= size_t(bpp) ? cur[i - size_t(bpp)] : 0;
      int b = prev[i];
      int c = i >= size_t(bpp) ? prev[i - size_t(bpp)] : 0;
      switch (filter) {
        case 0: break;
        case 1: x += a; break;
        case 2: x += b; break;
        case 3: x += (a + b) / 2; break;
        case 4: x += paeth(a, b, c); break;
        default: throw FormatError("read_png: unknown filter type");
      }
      cur[i] = (unsigned char)(x & 0xff);
    }
    for (int col = 0; col < width; col++) {
      uint8_t* dst = img.at(r, col);
      dst[0] = cur[size_t(col) * size_t(channels)];
      dst[1] = cur[size_t(col) * size_t(channels) + 1];
      dst[2] = cur[size_t(col) * size_t(channels) + 2];
    }
    std::swap(prev, cur);
  }
  return img;
}

}  // namespace s2s
