#include "s2s/model.hpp"

#include <set>

#include "json.hpp"

namespace s2s {

using nlohmann::json;

void ModelConfig::validate_and_resolve() {
  static const std::set<std::string> kModes = {"rgb", "s2s", "orthovec2s"};
  static const std::set<std::string> kBackbones = {"tiny", "paper18", "paper34", "paper50"};
  static const std::set<std::string> kCombiners = {"sum", "catV", "catH", "hadamard"};
  if (!kModes.count(input_mode)) throw ConfigError("unknown input_mode `" + input_mode + "`");
  if (!kBackbones.count(backbone)) throw ConfigError("unknown backbone `" + backbone + "`");
  if (!kCombiners.count(combiner)) throw ConfigError("unknown combiner `" + combiner + "`");
  if (lv <= 0) throw ConfigError("lv must be positive");
  if (d_v <= 0) throw ConfigError("d_v must be positive");
  if (input_size <= 0) throw ConfigError("input_size must be positive");

  int expected_channels = input_mode == "rgb" ? 3 : lv;
  if (in_channels == 0) in_channels = expected_channels;
  if (in_channels != expected_channels)
    throw ConfigError("in_channels=" + std::to_string(in_channels) + " inconsistent with " +
                      input_mode + " input (expected " + std::to_string(expected_channels) + ")");

  if (backbone == "paper18" || backbone == "paper34") {
    if (d_v != 512) throw ConfigError(backbone + " requires d_v=512");
  } else if (backbone == "paper50") {
    if (d_v != 2048) throw ConfigError("paper50 requires d_v=2048");
  }

  if (q_hidden == 0) q_hidden = d_v;
  if (c_hidden == 0) c_hidden = 2 * d_v;
  if (q_hidden <= 0 || c_hidden <= 0) throw ConfigError("hidden widths must be positive");

  if (separate_qnets) {
    if (d_v % 2 != 0) throw ConfigError("separate Q-Nets need even d_v");
    if (q_hidden % 2 != 0) throw ConfigError("separate Q-Nets need even q_hidden");
  }

  int min_input = is_paper_backbone() ? 32 : 16;
  if (input_size < min_input)
    throw ConfigError("input_size must be at least " + std::to_string(min_input) + " for " +
                      backbone);
}

std::string encode_model_config(const ModelConfig& cfg, int64_t iteration) {
  json j;
  j["input_mode"] = cfg.input_mode;
  j["backbone"] = cfg.backbone;
  j["combiner"] = cfg.combiner;
  j["separate_qnets"] = cfg.separate_qnets;
  j["lv"] = cfg.lv;
  j["in_channels"] = cfg.in_channels;
  j["d_v"] = cfg.d_v;
  j["q_hidden"] = cfg.q_hidden;
  j["c_hidden"] = cfg.c_hidden;
  j["input_size"] = cfg.input_size;
  j["iteration"] = iteration;
  return j.dump();
}

ModelConfig decode_model_config(const std::string& json_text, int64_t& iteration) {
  ModelConfig cfg;
  try {
    json j = json::parse(json_text);
    cfg.input_mode = j.at("input_mode").get<std::string>();
    cfg.backbone = j.at("backbone").get<std::string>();
    cfg.combiner = j.at("combiner").get<std::string>();
    cfg.separate_qnets = j.at("separate_qnets").get<bool>();
    cfg.lv = j.at("lv").get<int>();
    cfg.in_channels = j.at("in_channels").get<int>();
    cfg.d_v = j.at("d_v").get<int>();
    cfg.q_hidden = j.at("q_hidden").get<int>();
    cfg.c_hidden = j.at("c_hidden").get<int>();
    cfg.input_size = j.at("input_size").get<int>();
    iteration = j.at("iteration").get<int64_t>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint config block: ") + e.what());
  }
  cfg.validate_and_resolve();
  return cfg;
}

nn::Tensor<float> blob_input(const S2SBlob& blob) {
  nn::Tensor<float> x({1, blob.channels, blob.height, blob.width});
  size_t plane = size_t(blob.height) * blob.width;
  for (size_t p = 0; p < plane; p++) {
    const float* src = blob.data.data() + p * blob.channels;
    for (int c = 0; c < blob.channels; c++) x.data[size_t(c) * plane + p] = src[c];
  }
  return x;
}

RgbImage resize_rgb_nearest(const RgbImage& img, int out_height, int out_width) {
  if (out_height <= 0 || out_width <= 0)
    throw DimensionError("resize_rgb_nearest: non-positive output size");
  RgbImage out = make_rgb(out_width, out_height, 0, 0, 0);
  for (int r = 0; r < out_height; r++) {
    int sr = int(double(r + 0.5) * img.height / out_height);
    if (sr >= img.height) sr = img.height - 1;
    for (int c = 0; c < out_width; c++) {
      int sc = int(double(c + 0.5) * img.width / out_width);
      if (sc >= img.width) sc = img.width - 1;
      const uint8_t* s = img.at(sr, sc);
      uint8_t* d = out.at(r, c);
      d[0] = s[0];
      d[1] = s[1];
      d[2] = s[2];
    }
  }
  return out;
}

nn::Tensor<float> rgb_input(const RgbImage& img, int out_size) {
  RgbImage r = (img.width == out_size && img.height == out_size)
                   ? img
                   : resize_rgb_nearest(img, out_size, out_size);
  nn::Tensor<float> x({1, 3, out_size, out_size});
  size_t plane = size_t(out_size) * out_size;
  for (size_t p = 0; p < plane; p++)
    for (int c = 0; c < 3; c++) x.data[size_t(c) * plane + p] = float(r.pixels[3 * p + c]) / 255.0f;
  return x;
}

double score_input(TwoStreamModel& model, const nn::Tensor<float>& input, const std::string& verb,
                   const std::string& object, const EmbeddingTable& table) {
  const ModelConfig& cfg = model.config();
  auto fv = model.forward_vnet(input, nullptr);
  std::vector<float> ev = embed_label(table, verb);
  std::vector<float> eo = embed_label(table, object);
  nn::Tensor<float> fq;
  if (cfg.separate_qnets) {
    nn::Tensor<float> qv({1, cfg.lv}, std::move(ev)), qo({1, cfg.lv}, std::move(eo));
    fq = model.forward_qnet_separate(qv, qo, nullptr);
  } else {
    std::vector<float> q = combine_query(ev, eo, cfg.combiner);
    const int qd = int(q.size());  // take the size before the move below
    nn::Tensor<float> qt({1, qd}, std::move(q));
    fq = model.forward_qnet(qt, nullptr);
  }
  return double(model.closeness(fv, fq, nullptr).data[0]);
}

double score(TwoStreamModel& model, const S2SBlob& blob, const std::string& verb,
             const std::string& object, const EmbeddingTable& table) {
  if (blob.channels != model.config().in_channels)
    throw DimensionError("score: blob channels " + std::to_string(blob.channels) +
                         " do not match model input channels " +
                         std::to_string(model.config().in_channels));
  return score_input(model, blob_input(blob), verb, object, table);
}

double score(TwoStreamModel& model, const RgbImage& img, const std::string& verb,
             const std::string& object, const EmbeddingTable& table) {
  if (model.config().input_mode != "rgb")
    throw DimensionError("score: rgb input passed to a " + model.config().input_mode + " model");
  return score_input(model, rgb_input(img, model.config().input_size), verb, object, table);
}

}  // namespace s2s
