#include "s2s/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "s2s/pngio.hpp"

namespace s2s {

namespace {

int relation_index(const std::string& r) {
  const auto& kinds = relation_kinds();
  auto it = std::find(kinds.begin(), kinds.end(), r);
  if (it == kinds.end()) throw ConfigError("unknown relation kind `" + r + "`");
  return int(it - kinds.begin());
}

int family_index(const std::string& f) {
  const auto& fams = shape_families();
  auto it = std::find(fams.begin(), fams.end(), f);
  if (it == fams.end()) throw ConfigError("unknown shape family `" + f + "`");
  return int(it - fams.begin());
}

int size_index(const std::string& s) {
  const auto& sizes = size_classes();
  auto it = std::find(sizes.begin(), sizes.end(), s);
  if (it == sizes.end()) throw ConfigError("unknown size class `" + s + "`");
  return int(it - sizes.begin());
}

std::string slug(const std::string& name) {
  std::string out;
  for (char c : lowercase(name)) out.push_back(c == ' ' ? '-' : c);
  return out;
}

std::string underscore_key(const std::string& name) {
  std::string out;
  for (char c : lowercase(name)) out.push_back(c == ' ' ? '_' : c);
  return out;
}

// --- local shape rasters (tight bounding grids) ----------------------------

Mask raster_circle(int d) {
  Mask m(d, d);
  double c = (d - 1) / 2.0, r2 = (d / 2.0) * (d / 2.0);
  for (int y = 0; y < d; y++)
    for (int x = 0; x < d; x++) {
      double dy = y - c, dx = x - c;
      if (dy * dy + dx * dx <= r2) m.set(y, x, true);
    }
  return m;
}

Mask raster_rect(int h, int w) {
  Mask m(h, w);
  std::fill(m.data.begin(), m.data.end(), uint8_t(1));
  return m;
}

Mask raster_triangle(int h, int w) {
  Mask m(h, w);
  for (int y = 0; y < h; y++) {
    int span = std::max(1, int(std::lround(double(w) * (y + 1) / h)));
    int left = (w - span) / 2;
    for (int x = left; x < left + span; x++) m.set(y, x, true);
  }
  return m;
}

Mask raster_ring(int d) {
  Mask m = raster_circle(d);
  int din = std::max(1, int(std::lround(d * 0.55)));
  double c = (d - 1) / 2.0, r2 = (din / 2.0) * (din / 2.0);
  for (int y = 0; y < d; y++)
    for (int x = 0; x < d; x++) {
      double dy = y - c, dx = x - c;
      if (dy * dy + dx * dx <= r2) m.set(y, x, false);
    }
  return m;
}

int jittered(int image_size, double frac, Rng& rng) {
  return std::max(5, int(std::lround(image_size * frac * rng.uniform(0.85, 1.15))));
}

Mask raster_object(const ObjectSpec& spec, int image_size, Rng& rng) {
  static const double kSizeFrac[3] = {0.16, 0.22, 0.30};
  int dim = jittered(image_size, kSizeFrac[size_index(spec.size_class)], rng);
  if (spec.family == "circle") return raster_circle(dim);
  if (spec.family == "ring") return raster_ring(dim);
  if (spec.family == "rectangle")
    return raster_rect(std::max(5, int(std::lround(dim * rng.uniform(0.7, 1.4)))), dim);
  return raster_triangle(std::max(5, int(std::lround(dim * rng.uniform(0.8, 1.2)))), dim);
}

Mask raster_person(int image_size, Rng& rng) {
  int h = jittered(image_size, 0.24, rng);
  int w = std::max(3, int(std::lround(h * 0.55)));
  return raster_rect(h, w);
}

struct Box {
  int top = 0, bottom = -1, left = 0, right = -1;
  int h() const { return bottom - top + 1; }
  int w() const { return right - left + 1; }
};

Box bbox(const Mask& m) {
  Box b{m.height, -1, m.width, -1};
  for (int y = 0; y < m.height; y++)
    for (int x = 0; x < m.width; x++)
      if (m.at(y, x)) {
        b.top = std::min(b.top, y);
        b.bottom = std::max(b.bottom, y);
        b.left = std::min(b.left, x);
        b.right = std::max(b.right, x);
      }
  if (b.bottom < 0) throw GenerationError("bbox of empty mask");
  return b;
}

/// Stamps a local raster into a full-size mask at (top, left). Fails if any
/// part would fall outside.
Mask place(const Mask& local, int image_size, int top, int left) {
  if (top < 0 || left < 0 || top + local.height > image_size || left + local.width > image_size)
    throw GenerationError("placement outside image bounds");
  Mask m(image_size, image_size);
  for (int y = 0; y < local.height; y++)
    for (int x = 0; x < local.width; x++)
      if (local.at(y, x)) m.set(top + y, left + x, true);
  return m;
}

long overlap_area(const Mask& a, const Mask& b) {
  long n = 0;
  for (size_t i = 0; i < a.data.size(); i++) n += (a.data[i] & b.data[i]);
  return n;
}

// Samples `a_left` so that the bbox column overlap with [b_left, b_right]
// is at least `needed`, keeping a inside [0, limit]. Returns false when no
// such position exists.
bool sample_aligned(Rng& rng, int a_w, int b_left, int b_right, int needed, int limit,
                    int& a_left_out) {
  int lo = std::max(0, b_left - a_w + needed);
  int hi = std::min(limit, b_right - needed + 1);
  if (hi < lo) return false;
  a_left_out = int(rng.uniform_int(lo, hi));
  return true;
}

}  // namespace

bool RelationPredicates::only(const std::string& relation) const {
  bool flags[4] = {above_contact, overlap_major, adjacent_side, beneath_contact};
  int idx = relation_index(relation);
  for (int i = 0; i < 4; i++)
    if (flags[i] != (i == idx)) return false;
  return true;
}

RelationPredicates eval_relation_predicates(const Mask& person, const Mask& object) {
  if (person.height != object.height || person.width != object.width)
    throw DimensionError("predicates: mask size mismatch");
  Box p = bbox(person), o = bbox(object);
  long area = overlap_area(person, object);
  long p_area = person.count(), o_area = object.count();
  int hov = std::max(0, std::min(p.right, o.right) - std::max(p.left, o.left) + 1);
  int vov = std::max(0, std::min(p.bottom, o.bottom) - std::max(p.top, o.top) + 1);
  double h_need = 0.3 * std::min(p.w(), o.w());
  double v_need = 0.3 * std::min(p.h(), o.h());

  RelationPredicates out;
  out.above_contact =
      area == 0 && std::abs((p.bottom + 1) - o.top) <= 1 && double(hov) >= h_need;
  out.beneath_contact =
      area == 0 && std::abs((o.bottom + 1) - p.top) <= 1 && double(hov) >= h_need;
  out.adjacent_side =
      area == 0 &&
      (std::abs((p.right + 1) - o.left) <= 1 || std::abs((o.right + 1) - p.left) <= 1) &&
      double(vov) >= v_need;
  out.overlap_major = area >= (std::min(p_area, o_area) + 1) / 2 && area > 0;
  return out;
}

void SynthConfig::validate() const {
  if (verbs.empty()) throw ConfigError("synth config: no verbs");
  if (objects.empty()) throw ConfigError("synth config: no objects");
  if (image_size < 16) throw ConfigError("synth config: image_size must be at least 16");
  if (samples_per_pair < 0) throw ConfigError("synth config: negative samples_per_pair");
  if (lv <= 0) throw ConfigError("synth config: lv must be positive");
  if (verb_noise < 0.0 || object_noise < 0.0)
    throw ConfigError("synth config: noise scales must be non-negative");

  std::set<std::string> verb_set, object_set;
  for (const auto& v : verbs) {
    if (v.name.empty()) throw ConfigError("synth config: empty verb name");
    relation_index(v.relation);
    if (!verb_set.insert(v.name).second)
      throw ConfigError("synth config: duplicate verb `" + v.name + "`");
  }
  for (const auto& o : objects) {
    if (o.name.empty()) throw ConfigError("synth config: empty object name");
    family_index(o.family);
    size_index(o.size_class);
    if (!object_set.insert(o.name).second)
      throw ConfigError("synth config: duplicate object `" + o.name + "`");
  }
  if (objects_per_verb.empty()) throw ConfigError("synth config: no verb-object pairs");
  for (const auto& [verb, objs] : objects_per_verb) {
    if (!verb_set.count(verb))
      throw ConfigError("synth config: pair list names unknown verb `" + verb + "`");
    if (objs.empty()) throw ConfigError("synth config: verb `" + verb + "` has no objects");
    std::set<std::string> seen;
    for (const auto& obj : objs) {
      if (!object_set.count(obj))
        throw ConfigError("synth config: pair list names unknown object `" + obj + "`");
      if (!seen.insert(obj).second)
        throw ConfigError("synth config: duplicate pair (" + verb + ", " + obj + ")");
    }
  }
}

const VerbSpec& SynthConfig::verb(const std::string& name) const {
  for (const auto& v : verbs)
    if (v.name == name) return v;
  throw UnknownLabelError("unknown verb `" + name + "`");
}

const ObjectSpec& SynthConfig::object(const std::string& name) const {
  for (const auto& o : objects)
    if (o.name == name) return o;
  throw UnknownLabelError("unknown object `" + name + "`");
}

std::vector<std::string> SynthConfig::verb_names() const {
  std::vector<std::string> out;
  for (const auto& v : verbs) out.push_back(v.name);
  return out;
}

std::vector<std::string> SynthConfig::all_labels() const {
  std::vector<std::string> out;
  for (const auto& v : verbs) out.push_back(v.name);
  for (const auto& o : objects) out.push_back(o.name);
  out.push_back("person");
  return out;
}

SynthConfig vt60_default_config() {
  SynthConfig cfg;
  const std::vector<std::pair<std::string, std::string>> verbs = {
      {"eat", "overlap-major"},     {"feed", "adjacent-side"},   {"hold", "overlap-major"},
      {"kiss", "adjacent-side"},    {"lie on", "above-contact"}, {"ride", "above-contact"},
      {"sit on", "above-contact"},  {"stand on", "above-contact"},
      {"wash", "beneath-contact"}};
  for (const auto& [name, rel] : verbs) cfg.verbs.push_back({name, rel});

  cfg.objects_per_verb = {
      {"eat", {"apple", "banana", "broccoli", "donut"}},
      {"feed", {"bird", "cat", "cow", "dog", "giraffe", "horse", "sheep"}},
      {"hold",
       {"baseball bat", "book", "bottle", "carrot", "cell phone", "cup", "frisbee", "hair dryer",
        "handbag", "knife", "orange", "scissors", "skateboard", "sports ball", "surfboard",
        "tennis racket", "toothbrush", "vase", "wine glass"}},
      {"kiss", {"bird", "cat", "cow", "dog", "giraffe", "horse"}},
      {"lie on", {"bed", "bench", "couch", "surfboard"}},
      {"ride", {"bicycle", "cow", "elephant", "horse", "motorcycle", "sheep"}},
      {"sit on", {"bed", "bench", "chair", "couch"}},
      {"stand on", {"bed", "bench", "chair", "couch"}},
      {"wash", {"bicycle", "cow", "dog", "elephant", "horse", "motorcycle"}}};

  std::set<std::string> names;
  for (const auto& [verb, objs] : cfg.objects_per_verb)
    for (const auto& o : objs) names.insert(o);
  for (const auto& name : names) {
    ObjectSpec spec;
    spec.name = name;
    spec.family = shape_families()[fnv1a64("family:" + name) % 4];
    spec.size_class = size_classes()[fnv1a64("size:" + name) % 3];
    cfg.objects.push_back(std::move(spec));
  }
  return cfg;
}

bool VOSplit::in_train(const std::string& verb, const std::string& object) const {
  return std::find(train_pairs.begin(), train_pairs.end(), std::make_pair(verb, object)) !=
         train_pairs.end();
}

bool VOSplit::in_test(const std::string& verb, const std::string& object) const {
  return std::find(test_pairs.begin(), test_pairs.end(), std::make_pair(verb, object)) !=
         test_pairs.end();
}

VOSplit make_split(const std::vector<std::string>& verbs,
                   const std::map<std::string, std::vector<std::string>>& objects_per_verb,
                   uint64_t seed) {
  VOSplit split;
  int balance = 0;  // train minus test totals so far
  for (const auto& verb : verbs) {
    auto it = objects_per_verb.find(verb);
    if (it == objects_per_verb.end() || it->second.size() < 2)
      throw GenerationError("split infeasible: verb `" + verb + "` needs at least 2 objects");
    std::vector<std::string> objs = it->second;
    Rng rng(splitmix64(seed ^ fnv1a64("split:" + verb)));
    rng.shuffle(objs);
    int n = int(objs.size());
    int k = n / 2;
    if (n % 2 != 0) {
      // alternate which side takes the extra object so the totals balance
      if (balance <= 0) k = n / 2 + 1;
      balance += (k - (n - k));
    }
    for (int i = 0; i < n; i++) {
      auto& side = i < k ? split.train_pairs : split.test_pairs;
      side.emplace_back(verb, objs[size_t(i)]);
    }
  }
  std::sort(split.train_pairs.begin(), split.train_pairs.end());
  std::sort(split.test_pairs.begin(), split.test_pairs.end());
  return split;
}

namespace {

/// One placement attempt for a relation; returns true and fills the
/// full-frame masks on success.
bool try_place(const std::string& relation, const Mask& person_local, const Mask& object_local,
               int s, Rng& rng, Mask& person_out, Mask& object_out) {
  int ph = person_local.height, pw = person_local.width;
  int oh = object_local.height, ow = object_local.width;

  if (relation == "above-contact" || relation == "beneath-contact") {
    bool person_on_top = relation == "above-contact";
    int top_h = person_on_top ? ph : oh, bot_h = person_on_top ? oh : ph;
    if (top_h + bot_h > s) return false;
    int top_row = int(rng.uniform_int(0, s - top_h - bot_h));
    int bot_row = top_row + top_h;
    int needed = std::max(1, int(std::ceil(0.3 * std::min(pw, ow))));
    int bot_w = person_on_top ? ow : pw, top_w = person_on_top ? pw : ow;
    int bot_left = int(rng.uniform_int(0, s - bot_w));
    int top_left;
    if (!sample_aligned(rng, top_w, bot_left, bot_left + bot_w - 1, needed, s - top_w, top_left))
      return false;
    int p_top = person_on_top ? top_row : bot_row, p_left = person_on_top ? top_left : bot_left;
    int o_top = person_on_top ? bot_row : top_row, o_left = person_on_top ? bot_left : top_left;
    person_out = place(person_local, s, p_top, p_left);
    object_out = place(object_local, s, o_top, o_left);
    return true;
  }

  if (relation == "adjacent-side") {
    bool person_left = rng.uniform() < 0.5;
    int lw = person_left ? pw : ow, rw = person_left ? ow : pw;
    if (lw + rw > s) return false;
    int left_col = int(rng.uniform_int(0, s - lw - rw));
    int right_col = left_col + lw;
    int needed = std::max(1, int(std::ceil(0.3 * std::min(ph, oh))));
    int l_h = person_left ? ph : oh, r_h = person_left ? oh : ph;
    int l_top = int(rng.uniform_int(0, s - l_h));
    int r_top;
    if (!sample_aligned(rng, r_h, l_top, l_top + l_h - 1, needed, s - r_h, r_top)) return false;
    int p_top = person_left ? l_top : r_top, p_left = person_left ? left_col : right_col;
    int o_top = person_left ? r_top : l_top, o_left = person_left ? right_col : left_col;
    person_out = place(person_local, s, p_top, p_left);
    object_out = place(object_local, s, o_top, o_left);
    return true;
  }

  if (relation == "overlap-major") {
    if (ph > s || pw > s || oh > s || ow > s) return false;
    int p_top = int(rng.uniform_int(0, s - ph)), p_left = int(rng.uniform_int(0, s - pw));
    double pcy = p_top + (ph - 1) / 2.0, pcx = p_left + (pw - 1) / 2.0;
    int jitter = std::max(1, std::min(ph, oh) / 3);
    int o_top = int(std::lround(pcy - (oh - 1) / 2.0 + rng.uniform_int(-jitter, jitter)));
    int o_left = int(std::lround(pcx - (ow - 1) / 2.0 + rng.uniform_int(-jitter, jitter)));
    o_top = std::clamp(o_top, 0, s - oh);
    o_left = std::clamp(o_left, 0, s - ow);
    person_out = place(person_local, s, p_top, p_left);
    object_out = place(object_local, s, o_top, o_left);
    return true;
  }

  throw ConfigError("unknown relation kind `" + relation + "`");
}

uint32_t label_hash_color(const std::string& label) {
  return uint32_t(fnv1a64("color:" + label));
}

void paint_mask(RgbImage& img, const Mask& m, const std::string& label, bool patterned) {
  uint32_t h = label_hash_color(label);
  uint8_t base[3] = {uint8_t(60 + (h % 156)), uint8_t(60 + ((h >> 8) % 156)),
                     uint8_t(60 + ((h >> 16) % 156))};
  int pattern = patterned ? int((h >> 24) % 4) : 0;
  for (int y = 0; y < m.height; y++)
    for (int x = 0; x < m.width; x++) {
      if (!m.at(y, x)) continue;
      bool dark = false;
      switch (pattern) {
        case 1: dark = (y % 3 == 0); break;           // horizontal stripes
        case 2: dark = ((y / 2 + x / 2) % 2 == 0); break;  // checker
        case 3: dark = (x % 3 == 0); break;           // vertical stripes
        default: break;
      }
      uint8_t* px = img.at(y, x);
      for (int c = 0; c < 3; c++) px[c] = dark ? uint8_t(base[c] * 0.55) : base[c];
    }
}

RgbImage render_scene(const SceneAnnotation& scene) {
  RgbImage img = make_rgb(scene.width, scene.height, 235, 235, 235);
  // paint in instance order so the id-map layering matches the pixels
  for (size_t i = 0; i < scene.instances.size(); i++) {
    const auto& inst = scene.instances[i];
    if (inst.label == "person") {
      for (int y = 0; y < inst.mask.height; y++)
        for (int x = 0; x < inst.mask.width; x++)
          if (inst.mask.at(y, x)) {
            uint8_t* px = img.at(y, x);
            px[0] = 60;
            px[1] = 80;
            px[2] = 180;
          }
    } else {
      paint_mask(img, inst.mask, inst.label, true);
    }
  }
  return img;
}

}  // namespace

std::vector<ManifestEntry> generate_dataset(const SynthConfig& config, const VOSplit& split,
                                            const fs::path& out_root) {
  config.validate();
  std::vector<ManifestEntry> manifest;

  for (const auto& verb_spec : config.verbs) {
    auto it = config.objects_per_verb.find(verb_spec.name);
    if (it == config.objects_per_verb.end()) continue;
    for (const auto& object_name : it->second) {
      std::string split_name;
      if (split.in_train(verb_spec.name, object_name))
        split_name = "train";
      else if (split.in_test(verb_spec.name, object_name))
        split_name = "test";
      else
        throw GenerationError("split does not cover pair (" + verb_spec.name + ", " +
                              object_name + ")");

      const ObjectSpec& object_spec = config.object(object_name);
      for (int k = 0; k < config.samples_per_pair; k++) {
        char suffix[16];
        std::snprintf(suffix, sizeof suffix, "%03d", k);
        std::string image_id = slug(verb_spec.name) + "_" + slug(object_name) + "_" + suffix;
        Rng rng(splitmix64(config.seed ^ fnv1a64(image_id)));

        Mask person_local = raster_person(config.image_size, rng);
        Mask object_local = raster_object(object_spec, config.image_size, rng);
        Mask person, object;
        bool ok = false;
        for (int attempt = 0; attempt < 200 && !ok; attempt++) {
          if (attempt > 0 && attempt % 25 == 0) {
            person_local = raster_person(config.image_size, rng);
            object_local = raster_object(object_spec, config.image_size, rng);
          }
          if (!try_place(verb_spec.relation, person_local, object_local, config.image_size, rng,
                         person, object))
            continue;
          ok = eval_relation_predicates(person, object).only(verb_spec.relation);
        }
        if (!ok)
          throw GenerationError("relation `" + verb_spec.relation + "` unsatisfiable at size " +
                                std::to_string(config.image_size) + " for scene " + image_id);

        SceneAnnotation scene;
        scene.image_id = image_id;
        scene.width = config.image_size;
        scene.height = config.image_size;
        scene.verb = verb_spec.name;
        scene.object = object_name;
        scene.instances.push_back({"person", std::move(person)});
        scene.instances.push_back({object_name, std::move(object)});
        write_scene(out_root, scene);
        write_png(out_root / (image_id + ".png"), render_scene(scene));
        manifest.push_back({image_id, verb_spec.name, object_name, split_name});
      }
    }
  }

  save_manifest(out_root, manifest);
  return manifest;
}

namespace {

std::vector<float> noisy_mix(const std::vector<std::vector<double>>& basis,
                             const std::vector<std::pair<int, double>>& mix, double noise_scale,
                             int lv, uint64_t noise_seed) {
  std::vector<double> v(size_t(lv), 0.0);
  for (auto [idx, w] : mix)
    for (int i = 0; i < lv; i++) v[size_t(i)] += w * basis[size_t(idx)][size_t(i)];
  Rng rng(noise_seed);
  std::vector<double> noise(size_t(lv), 0.0);
  double n2 = 0;
  for (auto& x : noise) {
    x = rng.normal();
    n2 += x * x;
  }
  double n = std::sqrt(n2);
  for (int i = 0; i < lv; i++) v[size_t(i)] += noise_scale * noise[size_t(i)] / n;
  double v2 = 0;
  for (double x : v) v2 += x * x;
  double vn = std::sqrt(v2);
  std::vector<float> out(size_t(lv), 0.0f);
  for (int i = 0; i < lv; i++) out[i] = float(v[size_t(i)] / vn);
  return out;
}

}  // namespace

EmbeddingTable make_synthetic_wordvecs(const SynthConfig& config) {
  config.validate();
  int nb = 4 + 4 + 3 + 1;  // relations, families, sizes, person
  if (config.lv < nb)
    throw CapacityError("lv=" + std::to_string(config.lv) + " too small for " +
                        std::to_string(nb) + " semantic basis directions");
  Rng basis_rng(splitmix64(config.seed ^ fnv1a64("semantic-basis")));
  auto basis = orthonormal_rows(nb, config.lv, basis_rng);

  EmbeddingTable table;
  table.dim = config.lv;
  for (const auto& v : config.verbs) {
    int rel = relation_index(v.relation);
    table.entries[underscore_key(v.name)] =
        noisy_mix(basis, {{rel, 1.0}}, config.verb_noise, config.lv,
                  splitmix64(config.seed ^ fnv1a64("wv:" + underscore_key(v.name))));
  }
  for (const auto& o : config.objects) {
    int fam = 4 + family_index(o.family);
    int siz = 8 + size_index(o.size_class);
    table.entries[underscore_key(o.name)] =
        noisy_mix(basis, {{fam, 1.0}, {siz, 0.5}}, config.object_noise, config.lv,
                  splitmix64(config.seed ^ fnv1a64("wv:" + underscore_key(o.name))));
  }
  std::vector<float> person(size_t(config.lv));
  for (int i = 0; i < config.lv; i++) person[size_t(i)] = float(basis[11][size_t(i)]);
  table.entries["person"] = std::move(person);
  return table;
}

EmbeddingTable make_control_wordvecs(const SynthConfig& config) {
  config.validate();
  std::vector<std::string> labels;
  for (const auto& name : config.all_labels()) labels.push_back(underscore_key(name));
  return make_orthonormal_table(labels, config.lv, splitmix64(config.seed ^ fnv1a64("ortho-table")));
}

}  // namespace s2s
