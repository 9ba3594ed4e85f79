#include "s2s/maskio.hpp"

#include <algorithm>
#include <cctype>

#include "json.hpp"

namespace s2s {

using nlohmann::json;

std::vector<int64_t> encode_rle(const Mask& m) {
  std::vector<int64_t> runs;
  int64_t n = int64_t(m.height) * m.width;
  int64_t i = 0;
  while (i < n) {
    if (m.data[size_t(i)]) {
      int64_t start = i;
      while (i < n && m.data[size_t(i)]) i++;
      runs.push_back(start);
      runs.push_back(i - start);
    } else {
      i++;
    }
  }
  return runs;
}

Mask decode_rle(const std::vector<int64_t>& runs, int height, int width) {
  if (runs.size() % 2 != 0) throw FormatError("rle: odd run-length list");
  Mask m(height, width);
  int64_t n = int64_t(height) * width;
  int64_t prev_end = -1;
  for (size_t k = 0; k < runs.size(); k += 2) {
    int64_t start = runs[k], len = runs[k + 1];
    if (start < 0 || len < 1 || start + len > n)
      throw FormatError("rle: run out of bounds");
    if (start <= prev_end) throw FormatError("rle: runs not sorted or overlapping");
    prev_end = start + len - 1;
    std::fill(m.data.begin() + size_t(start), m.data.begin() + size_t(start + len), uint8_t(1));
  }
  return m;
}

namespace {

fs::path pgm_path(const fs::path& root, const std::string& id) { return root / (id + ".pgm"); }
fs::path json_path(const fs::path& root, const std::string& id) { return root / (id + ".json"); }

std::vector<uint16_t> build_id_map(const SceneAnnotation& scene) {
  std::vector<uint16_t> ids(size_t(scene.width) * scene.height, 0);
  for (size_t k = 0; k < scene.instances.size(); k++) {
    const Mask& m = scene.instances[k].mask;
    for (size_t p = 0; p < ids.size(); p++)
      if (m.data[p]) ids[p] = uint16_t(k + 1);
  }
  return ids;
}

void validate_scene_fields(const SceneAnnotation& scene) {
  if (scene.image_id.empty()) throw FormatError("scene: empty image_id");
  if (scene.width <= 0 || scene.height <= 0) throw FormatError("scene: non-positive dimensions");
  if (scene.verb.empty() || scene.object.empty())
    throw FormatError("scene " + scene.image_id + ": verb and object must be non-empty");
  if (scene.instances.size() > 65535)
    throw CapacityError("scene " + scene.image_id + ": too many instances for 16-bit id map");
  for (size_t k = 0; k < scene.instances.size(); k++) {
    const auto& inst = scene.instances[k];
    if (inst.label.empty())
      throw FormatError("scene " + scene.image_id + ": instance " + std::to_string(k + 1) +
                        " has empty label");
    if (inst.mask.width != scene.width || inst.mask.height != scene.height)
      throw DimensionError("scene " + scene.image_id + ": instance " + std::to_string(k + 1) +
                           " mask size does not match scene size");
    if (inst.mask.count() == 0)
      throw FormatError("scene " + scene.image_id + ": instance " + std::to_string(k + 1) +
                        " has no pixels");
  }
}

// PGM header tokenizer: whitespace-separated tokens, `#` comments to EOL.
struct PgmCursor {
  const std::string& data;
  size_t pos = 0;

  std::string token() {
    while (pos < data.size()) {
      char c = data[pos];
      if (c == '#') {
        while (pos < data.size() && data[pos] != '\n') pos++;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        pos++;
      } else {
        break;
      }
    }
    size_t start = pos;
    while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos])) &&
           data[pos] != '#')
      pos++;
    if (pos == start) throw FormatError("pgm: truncated header");
    return data.substr(start, pos - start);
  }

  long int_token(const char* what) {
    std::string t = token();
    for (char c : t)
      if (!std::isdigit(static_cast<unsigned char>(c)))
        throw FormatError(std::string("pgm: bad ") + what + " `" + t + "`");
    return std::stol(t);
  }
};

}  // namespace

void write_scene(const fs::path& root, const SceneAnnotation& scene) {
  validate_scene_fields(scene);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoError("cannot create directory " + root.string() + ": " + ec.message());

  auto ids = build_id_map(scene);
  std::string pgm = "P5\n" + std::to_string(scene.width) + " " + std::to_string(scene.height) +
                    "\n65535\n";
  pgm.reserve(pgm.size() + ids.size() * 2);
  for (uint16_t v : ids) {
    pgm.push_back(char(v >> 8));
    pgm.push_back(char(v & 0xff));
  }
  write_file_bytes(pgm_path(root, scene.image_id), pgm);

  json j;
  j["image_id"] = scene.image_id;
  j["width"] = scene.width;
  j["height"] = scene.height;
  j["verb"] = scene.verb;
  j["object"] = scene.object;
  json insts = json::array();
  for (size_t k = 0; k < scene.instances.size(); k++) {
    json inst;
    inst["id"] = k + 1;
    inst["label"] = scene.instances[k].label;
    inst["rle"] = encode_rle(scene.instances[k].mask);
    insts.push_back(std::move(inst));
  }
  j["instances"] = std::move(insts);
  write_file_bytes(json_path(root, scene.image_id), j.dump(2) + "\n");
}

SceneAnnotation read_scene(const fs::path& root, const std::string& image_id) {
  std::string pgm = read_file_bytes(pgm_path(root, image_id));
  PgmCursor cur{pgm};
  if (cur.token() != "P5") throw FormatError("pgm: expected magic P5: " + image_id);
  long w = cur.int_token("width");
  long h = cur.int_token("height");
  long maxval = cur.int_token("maxval");
  if (w <= 0 || h <= 0) throw FormatError("pgm: non-positive dimensions: " + image_id);
  if (maxval != 65535) throw FormatError("pgm: expected maxval 65535: " + image_id);
  if (cur.pos >= pgm.size() || !std::isspace(static_cast<unsigned char>(pgm[cur.pos])))
    throw FormatError("pgm: missing header terminator: " + image_id);
  cur.pos++;
  size_t need = size_t(w) * size_t(h) * 2;
  if (pgm.size() - cur.pos != need) throw FormatError("pgm: sample data size mismatch: " + image_id);
  std::vector<uint16_t> ids(size_t(w) * size_t(h));
  for (size_t i = 0; i < ids.size(); i++) {
    ids[i] = uint16_t(uint8_t(pgm[cur.pos + 2 * i])) << 8 | uint16_t(uint8_t(pgm[cur.pos + 2 * i + 1]));
  }

  json j;
  try {
    j = json::parse(read_file_bytes(json_path(root, image_id)));
  } catch (const json::exception& e) {
    throw FormatError("sidecar json parse failed for " + image_id + ": " + e.what());
  }

  SceneAnnotation scene;
  try {
    scene.image_id = j.at("image_id").get<std::string>();
    scene.width = j.at("width").get<int>();
    scene.height = j.at("height").get<int>();
    scene.verb = j.at("verb").get<std::string>();
    scene.object = j.at("object").get<std::string>();
    const json& insts = j.at("instances");
    if (!insts.is_array()) throw FormatError("sidecar: instances must be an array");
    std::vector<std::pair<long, InstanceMask>> parsed;
    for (const json& inst : insts) {
      long id = inst.at("id").get<long>();
      InstanceMask im;
      im.label = inst.at("label").get<std::string>();
      auto runs = inst.at("rle").get<std::vector<int64_t>>();
      im.mask = decode_rle(runs, scene.height, scene.width);
      parsed.emplace_back(id, std::move(im));
    }
    std::sort(parsed.begin(), parsed.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (size_t k = 0; k < parsed.size(); k++) {
      if (parsed[k].first != long(k + 1))
        throw ConsistencyError("scene " + image_id + ": instance ids are not a contiguous 1..N set");
      scene.instances.push_back(std::move(parsed[k].second));
    }
  } catch (const json::exception& e) {
    throw FormatError("sidecar schema error for " + image_id + ": " + e.what());
  }

  if (scene.image_id != image_id)
    throw ConsistencyError("sidecar image_id `" + scene.image_id + "` does not match `" +
                           image_id + "`");
  if (scene.width != int(w) || scene.height != int(h))
    throw ConsistencyError("scene " + image_id + ": sidecar and id-map dimensions disagree");
  validate_scene_fields(scene);

  auto rebuilt = build_id_map(scene);
  for (size_t p = 0; p < rebuilt.size(); p++) {
    if (rebuilt[p] != ids[p])
      throw ConsistencyError("scene " + image_id + ": id map and sidecar masks disagree at pixel " +
                             std::to_string(p) + " (map=" + std::to_string(ids[p]) +
                             ", sidecar=" + std::to_string(rebuilt[p]) + ")");
  }

  if (fs::exists(root / (image_id + ".png"))) scene.rgb_path = image_id + ".png";
  return scene;
}

}  // namespace s2s
