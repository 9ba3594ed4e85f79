#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "s2s/blob.hpp"
#include "s2s/nn.hpp"
#include "s2s/pngio.hpp"
#include "s2s/wordvec.hpp"

namespace s2s {

struct ModelConfig {
  std::string input_mode = "s2s";  // rgb | s2s | orthovec2s
  std::string backbone = "tiny";   // tiny | paper18 | paper34 | paper50
  std::string combiner = "sum";    // sum | catV | catH | hadamard
  bool separate_qnets = false;
  int lv = 300;         // word-vector dimension (query side)
  int in_channels = 0;  // 0 = derive: 3 for rgb, lv otherwise
  int d_v = 64;         // visual feature dimension
  int q_hidden = 0;     // 0 = default d_v
  int c_hidden = 0;     // 0 = default 2*d_v
  int input_size = 64;  // square encoder input resolution

  /// Fills derived defaults and throws ConfigError on any inconsistency.
  void validate_and_resolve();

  bool is_paper_backbone() const { return backbone != "tiny"; }
  /// Input width of the single-query Q-Net for the configured combiner.
  int query_dim() const {
    return (combiner == "catV" || combiner == "catH") ? 2 * lv : lv;
  }
};

/// Combines verb/object word vectors into one query vector:
/// sum, catV (stacked), catH (interleaved), hadamard (elementwise, L2-normalized).
template <typename T>
std::vector<T> combine_query(const std::vector<T>& v_verb, const std::vector<T>& v_obj,
                             const std::string& mode) {
  if (v_verb.size() != v_obj.size()) throw DimensionError("combine_query: length mismatch");
  size_t n = v_verb.size();
  std::vector<T> out;
  if (mode == "sum") {
    out.resize(n);
    for (size_t i = 0; i < n; i++) out[i] = v_verb[i] + v_obj[i];
  } else if (mode == "catV") {
    out.reserve(2 * n);
    out.insert(out.end(), v_verb.begin(), v_verb.end());
    out.insert(out.end(), v_obj.begin(), v_obj.end());
  } else if (mode == "catH") {
    out.resize(2 * n);
    for (size_t i = 0; i < n; i++) {
      out[2 * i] = v_verb[i];
      out[2 * i + 1] = v_obj[i];
    }
  } else if (mode == "hadamard") {
    out.resize(n);
    double norm_sq = 0;
    for (size_t i = 0; i < n; i++) {
      out[i] = v_verb[i] * v_obj[i];
      norm_sq += double(out[i]) * double(out[i]);
    }
    double denom = std::max(std::sqrt(norm_sq), 1e-12);
    for (auto& v : out) v = T(double(v) / denom);
  } else {
    throw ConfigError("combine_query: unknown mode `" + mode + "`");
  }
  return out;
}

namespace detail {

template <typename T>
struct BasicBlock {
  nn::Conv2d<T> c1, c2;
  std::optional<nn::Conv2d<T>> down;
  nn::ReLU<T> relu;

  BasicBlock(const std::string& name, int in_c, int out_c, int stride, Rng& rng)
      : c1(name + ".c1", in_c, out_c, 3, stride, 1, rng),
        c2(name + ".c2", out_c, out_c, 3, 1, 1, rng) {
    if (stride != 1 || in_c != out_c)
      down.emplace(name + ".down", in_c, out_c, 1, stride, 0, rng);
  }

  nn::Tensor<T> forward(const nn::Tensor<T>& x, nn::Ctx<T>* ctx) {
    auto a = relu.forward(c1.forward(x, ctx), ctx);
    auto b = c2.forward(a, ctx);
    if (down) {
      auto s = down->forward(x, ctx);
      for (size_t i = 0; i < b.numel(); i++) b.data[i] += s.data[i];
    } else {
      for (size_t i = 0; i < b.numel(); i++) b.data[i] += x.data[i];
    }
    return relu.forward(b, ctx);
  }

  nn::Tensor<T> backward(const nn::Tensor<T>& g, nn::Ctx<T>& ctx) {
    auto gy = relu.backward(g, ctx);
    nn::Tensor<T> gx_skip;
    if (down) gx_skip = down->backward(gy, ctx);
    auto ga = relu.backward(c2.backward(gy, ctx), ctx);
    auto gx = c1.backward(ga, ctx);
    const nn::Tensor<T>& skip = down ? gx_skip : gy;
    for (size_t i = 0; i < gx.numel(); i++) gx.data[i] += skip.data[i];
    return gx;
  }

  void collect(std::vector<nn::Param<T>*>& out) {
    out.push_back(&c1.weight);
    out.push_back(&c1.bias);
    out.push_back(&c2.weight);
    out.push_back(&c2.bias);
    if (down) {
      out.push_back(&down->weight);
      out.push_back(&down->bias);
    }
  }
};

template <typename T>
struct Bottleneck {
  nn::Conv2d<T> c1, c2, c3;
  std::optional<nn::Conv2d<T>> down;
  nn::ReLU<T> relu;

  Bottleneck(const std::string& name, int in_c, int planes, int stride, Rng& rng)
      : c1(name + ".c1", in_c, planes, 1, 1, 0, rng),
        c2(name + ".c2", planes, planes, 3, stride, 1, rng),
        c3(name + ".c3", planes, planes * 4, 1, 1, 0, rng) {
    if (stride != 1 || in_c != planes * 4)
      down.emplace(name + ".down", in_c, planes * 4, 1, stride, 0, rng);
  }

  nn::Tensor<T> forward(const nn::Tensor<T>& x, nn::Ctx<T>* ctx) {
    auto a = relu.forward(c1.forward(x, ctx), ctx);
    auto b = relu.forward(c2.forward(a, ctx), ctx);
    auto c = c3.forward(b, ctx);
    if (down) {
      auto s = down->forward(x, ctx);
      for (size_t i = 0; i < c.numel(); i++) c.data[i] += s.data[i];
    } else {
      for (size_t i = 0; i < c.numel(); i++) c.data[i] += x.data[i];
    }
    return relu.forward(c, ctx);
  }

  nn::Tensor<T> backward(const nn::Tensor<T>& g, nn::Ctx<T>& ctx) {
    auto gy = relu.backward(g, ctx);
    nn::Tensor<T> gx_skip;
    if (down) gx_skip = down->backward(gy, ctx);
    auto gb = relu.backward(c3.backward(gy, ctx), ctx);
    auto ga = relu.backward(c2.backward(gb, ctx), ctx);
    auto gx = c1.backward(ga, ctx);
    const nn::Tensor<T>& skip = down ? gx_skip : gy;
    for (size_t i = 0; i < gx.numel(); i++) gx.data[i] += skip.data[i];
    return gx;
  }

  void collect(std::vector<nn::Param<T>*>& out) {
    out.push_back(&c1.weight);
    out.push_back(&c1.bias);
    out.push_back(&c2.weight);
    out.push_back(&c2.bias);
    out.push_back(&c3.weight);
    out.push_back(&c3.bias);
    if (down) {
      out.push_back(&down->weight);
      out.push_back(&down->bias);
    }
  }
};

}  // namespace detail

/// The full matching network: visual encoder (V), query encoder (Q, single or
/// separate verb/object subnets), and closeness head (C) ending in a sigmoid.
template <typename T>
class TwoStreamModelT {
 public:
  TwoStreamModelT(ModelConfig cfg, uint64_t seed) : cfg_(std::move(cfg)) {
    cfg_.validate_and_resolve();
    Rng rng(splitmix64(seed ^ 0x5331bd3f2a6c4e77ULL));
    build_vnet(rng);
    build_qnet(rng);
    cnet_fc1_.emplace("cnet.fc1", 2 * cfg_.d_v, cfg_.c_hidden, rng);
    cnet_fc2_.emplace("cnet.fc2", cfg_.c_hidden, 1, rng);
    register_params();
  }

  // params_/names_ point into our own layer members, so moves must re-register
  // rather than copy the pointer tables.
  TwoStreamModelT(TwoStreamModelT&& other)
      : cfg_(std::move(other.cfg_)),
        tiny_convs_(std::move(other.tiny_convs_)),
        stem_(std::move(other.stem_)),
        stem_pool_(std::move(other.stem_pool_)),
        basic_blocks_(std::move(other.basic_blocks_)),
        bottlenecks_(std::move(other.bottlenecks_)),
        q_fc1_(std::move(other.q_fc1_)),
        q_fc2_(std::move(other.q_fc2_)),
        qv_fc1_(std::move(other.qv_fc1_)),
        qv_fc2_(std::move(other.qv_fc2_)),
        qo_fc1_(std::move(other.qo_fc1_)),
        qo_fc2_(std::move(other.qo_fc2_)),
        cnet_fc1_(std::move(other.cnet_fc1_)),
        cnet_fc2_(std::move(other.cnet_fc2_)) {
    other.params_.clear();
    other.names_.clear();
    register_params();
  }

  TwoStreamModelT& operator=(TwoStreamModelT&& other) {
    if (this == &other) return *this;
    cfg_ = std::move(other.cfg_);
    tiny_convs_ = std::move(other.tiny_convs_);
    stem_ = std::move(other.stem_);
    stem_pool_ = std::move(other.stem_pool_);
    basic_blocks_ = std::move(other.basic_blocks_);
    bottlenecks_ = std::move(other.bottlenecks_);
    q_fc1_ = std::move(other.q_fc1_);
    q_fc2_ = std::move(other.q_fc2_);
    qv_fc1_ = std::move(other.qv_fc1_);
    qv_fc2_ = std::move(other.qv_fc2_);
    qo_fc1_ = std::move(other.qo_fc1_);
    qo_fc2_ = std::move(other.qo_fc2_);
    cnet_fc1_ = std::move(other.cnet_fc1_);
    cnet_fc2_ = std::move(other.cnet_fc2_);
    other.params_.clear();
    other.names_.clear();
    register_params();
    return *this;
  }

  TwoStreamModelT(const TwoStreamModelT&) = delete;
  TwoStreamModelT& operator=(const TwoStreamModelT&) = delete;

  const ModelConfig& config() const { return cfg_; }
  std::vector<nn::Param<T>*>& params() { return params_; }
  nn::Param<T>* find_param(const std::string& name) {
    auto it = names_.find(name);
    return it == names_.end() ? nullptr : it->second;
  }

  void zero_grad() {
    for (auto* p : params_) p->grad.fill(T(0));
  }

  /// [N, in_channels, S, S] -> [N, d_v]
  nn::Tensor<T> forward_vnet(const nn::Tensor<T>& x, nn::Ctx<T>* ctx) {
    nn::Tensor<T> h = x;
    if (stem_) {
      h = relu_.forward(stem_->forward(h, ctx), ctx);
      h = stem_pool_->forward(h, ctx);
      for (auto& b : basic_blocks_) h = b.forward(h, ctx);
      for (auto& b : bottlenecks_) h = b.forward(h, ctx);
    } else {
      for (auto& c : tiny_convs_) {
        h = relu_.forward(c.forward(h, ctx), ctx);
        h = pool_.forward(h, ctx);
      }
    }
    return gap_.forward(h, ctx);
  }

  nn::Tensor<T> vnet_backward(const nn::Tensor<T>& g, nn::Ctx<T>& ctx) {
    nn::Tensor<T> gh = gap_.backward(g, ctx);
    if (stem_) {
      for (auto it = bottlenecks_.rbegin(); it != bottlenecks_.rend(); ++it)
        gh = it->backward(gh, ctx);
      for (auto it = basic_blocks_.rbegin(); it != basic_blocks_.rend(); ++it)
        gh = it->backward(gh, ctx);
      gh = stem_pool_->backward(gh, ctx);
      gh = stem_->backward(relu_.backward(gh, ctx), ctx);
    } else {
      for (auto it = tiny_convs_.rbegin(); it != tiny_convs_.rend(); ++it) {
        gh = pool_.backward(gh, ctx);
        gh = it->backward(relu_.backward(gh, ctx), ctx);
      }
    }
    return gh;
  }

  /// Single-query path: [N, query_dim] -> [N, d_v].
  nn::Tensor<T> forward_qnet(const nn::Tensor<T>& q, nn::Ctx<T>* ctx) {
    if (cfg_.separate_qnets)
      throw ConfigError("forward_qnet: model is configured with separate Q-Nets");
    return q_fc2_->forward(relu_.forward(q_fc1_->forward(q, ctx), ctx), ctx);
  }

  void qnet_backward(const nn::Tensor<T>& g, nn::Ctx<T>& ctx) {
    q_fc1_->backward(relu_.backward(q_fc2_->backward(g, ctx), ctx), ctx);
  }

  /// Separate path: verb and object vectors [N, lv] each -> concatenated [N, d_v].
  nn::Tensor<T> forward_qnet_separate(const nn::Tensor<T>& qv, const nn::Tensor<T>& qo,
                                      nn::Ctx<T>* ctx) {
    if (!cfg_.separate_qnets)
      throw ConfigError("forward_qnet_separate: model is configured with a single Q-Net");
    auto fv = qv_fc2_->forward(relu_.forward(qv_fc1_->forward(qv, ctx), ctx), ctx);
    auto fo = qo_fc2_->forward(relu_.forward(qo_fc1_->forward(qo, ctx), ctx), ctx);
    int n = fv.dim(0), half = cfg_.d_v / 2;
    nn::Tensor<T> out({n, cfg_.d_v});
    for (int i = 0; i < n; i++) {
      std::copy_n(fv.ptr() + size_t(i) * half, half, out.ptr() + size_t(i) * cfg_.d_v);
      std::copy_n(fo.ptr() + size_t(i) * half, half, out.ptr() + size_t(i) * cfg_.d_v + half);
    }
    return out;
  }

  void qnet_separate_backward(const nn::Tensor<T>& g, nn::Ctx<T>& ctx) {
    int n = g.dim(0), half = cfg_.d_v / 2;
    nn::Tensor<T> gv({n, half}), go({n, half});
    for (int i = 0; i < n; i++) {
      std::copy_n(g.ptr() + size_t(i) * cfg_.d_v, half, gv.ptr() + size_t(i) * half);
      std::copy_n(g.ptr() + size_t(i) * cfg_.d_v + half, half, go.ptr() + size_t(i) * half);
    }
    // reverse of forward: object subnet ran second, unwind it first
    qo_fc1_->backward(relu_.backward(qo_fc2_->backward(go, ctx), ctx), ctx);
    qv_fc1_->backward(relu_.backward(qv_fc2_->backward(gv, ctx), ctx), ctx);
  }

  /// tau = sigmoid(C(concat(f_v, f_q))) per row; returns [N].
  nn::Tensor<T> closeness(const nn::Tensor<T>& fv, const nn::Tensor<T>& fq, nn::Ctx<T>* ctx) {
    if (fv.ndim() != 2 || fq.ndim() != 2 || fv.dim(0) != fq.dim(0) ||
        fv.dim(1) != cfg_.d_v || fq.dim(1) != cfg_.d_v)
      throw DimensionError("closeness: expected two [N,d_v] inputs");
    for (T v : fv.data)
      if (!std::isfinite(double(v))) throw NumericError("closeness: non-finite visual feature");
    for (T v : fq.data)
      if (!std::isfinite(double(v))) throw NumericError("closeness: non-finite query feature");
    int n = fv.dim(0);
    nn::Tensor<T> cat({n, 2 * cfg_.d_v});
    for (int i = 0; i < n; i++) {
      std::copy_n(fv.ptr() + size_t(i) * cfg_.d_v, cfg_.d_v, cat.ptr() + size_t(i) * 2 * cfg_.d_v);
      std::copy_n(fq.ptr() + size_t(i) * cfg_.d_v, cfg_.d_v,
                  cat.ptr() + size_t(i) * 2 * cfg_.d_v + cfg_.d_v);
    }
    auto h = relu_.forward(cnet_fc1_->forward(cat, ctx), ctx);
    auto z = sigmoid_.forward(cnet_fc2_->forward(h, ctx), ctx);  // [N,1]
    nn::Tensor<T> tau({n});
    std::copy_n(z.ptr(), n, tau.ptr());
    return tau;
  }

  /// g: [N] dtau. Returns (df_v, df_q), each [N, d_v].
  std::pair<nn::Tensor<T>, nn::Tensor<T>> closeness_backward(const nn::Tensor<T>& g,
                                                             nn::Ctx<T>& ctx) {
    int n = g.dim(0);
    nn::Tensor<T> gz({n, 1});
    std::copy_n(g.ptr(), n, gz.ptr());
    auto gh = relu_.backward(cnet_fc2_->backward(sigmoid_.backward(gz, ctx), ctx), ctx);
    auto gcat = cnet_fc1_->backward(gh, ctx);
    nn::Tensor<T> gfv({n, cfg_.d_v}), gfq({n, cfg_.d_v});
    for (int i = 0; i < n; i++) {
      std::copy_n(gcat.ptr() + size_t(i) * 2 * cfg_.d_v, cfg_.d_v, gfv.ptr() + size_t(i) * cfg_.d_v);
      std::copy_n(gcat.ptr() + size_t(i) * 2 * cfg_.d_v + cfg_.d_v, cfg_.d_v,
                  gfq.ptr() + size_t(i) * cfg_.d_v);
    }
    return {std::move(gfv), std::move(gfq)};
  }

 private:
  void build_vnet(Rng& rng) {
    if (!cfg_.is_paper_backbone()) {
      int prev = cfg_.in_channels;
      for (int i = 1; i <= 4; i++) {
        int ch = std::max(1, cfg_.d_v * i / 4);
        tiny_convs_.emplace_back("vnet.b" + std::to_string(i) + ".conv", prev, ch, 3, 1, 1, rng);
        prev = ch;
      }
      return;
    }
    stem_.emplace("vnet.stem", cfg_.in_channels, 64, 7, 2, 3, rng);
    stem_pool_.emplace(3, 2, 1);
    const int planes[4] = {64, 128, 256, 512};
    std::vector<int> depths = cfg_.backbone == "paper18" ? std::vector<int>{2, 2, 2, 2}
                                                         : std::vector<int>{3, 4, 6, 3};
    bool bottleneck = cfg_.backbone == "paper50";
    int in_c = 64;
    for (int s = 0; s < 4; s++) {
      for (int b = 0; b < depths[size_t(s)]; b++) {
        int stride = (s > 0 && b == 0) ? 2 : 1;
        std::string name = "vnet.s" + std::to_string(s + 1) + ".b" + std::to_string(b + 1);
        if (bottleneck) {
          bottlenecks_.emplace_back(name, in_c, planes[s], stride, rng);
          in_c = planes[s] * 4;
        } else {
          basic_blocks_.emplace_back(name, in_c, planes[s], stride, rng);
          in_c = planes[s];
        }
      }
    }
  }

  void build_qnet(Rng& rng) {
    if (cfg_.separate_qnets) {
      int hidden = cfg_.q_hidden / 2, half = cfg_.d_v / 2;
      qv_fc1_.emplace("qnet.v.fc1", cfg_.lv, hidden, rng, true);
      qv_fc2_.emplace("qnet.v.fc2", hidden, half, rng, true);
      qo_fc1_.emplace("qnet.o.fc1", cfg_.lv, hidden, rng, true);
      qo_fc2_.emplace("qnet.o.fc2", hidden, half, rng, true);
    } else {
      q_fc1_.emplace("qnet.fc1", cfg_.query_dim(), cfg_.q_hidden, rng, true);
      q_fc2_.emplace("qnet.fc2", cfg_.q_hidden, cfg_.d_v, rng, true);
    }
  }

  // Rebuild params_/names_ from the layer members, in construction order.
  void register_params() {
    params_.clear();
    names_.clear();
    for (auto& c : tiny_convs_) {
      params_.push_back(&c.weight);
      params_.push_back(&c.bias);
    }
    if (stem_) {
      params_.push_back(&stem_->weight);
      params_.push_back(&stem_->bias);
    }
    for (auto& b : basic_blocks_) b.collect(params_);
    for (auto& b : bottlenecks_) b.collect(params_);
    for (auto* l : {&qv_fc1_, &qv_fc2_, &qo_fc1_, &qo_fc2_, &q_fc1_, &q_fc2_, &cnet_fc1_,
                    &cnet_fc2_}) {
      if (l->has_value()) {
        params_.push_back(&(*l)->weight);
        params_.push_back(&(*l)->bias);
      }
    }
    for (auto* p : params_) {
      if (names_.count(p->name)) throw ConsistencyError("duplicate parameter name " + p->name);
      names_[p->name] = p;
    }
  }

  ModelConfig cfg_;
  std::vector<nn::Conv2d<T>> tiny_convs_;
  std::optional<nn::Conv2d<T>> stem_;
  std::optional<nn::MaxPool<T>> stem_pool_;
  std::vector<detail::BasicBlock<T>> basic_blocks_;
  std::vector<detail::Bottleneck<T>> bottlenecks_;
  std::optional<nn::Linear<T>> q_fc1_, q_fc2_;
  std::optional<nn::Linear<T>> qv_fc1_, qv_fc2_, qo_fc1_, qo_fc2_;
  std::optional<nn::Linear<T>> cnet_fc1_, cnet_fc2_;
  nn::ReLU<T> relu_;
  nn::Sigmoid<T> sigmoid_;
  nn::AvgPool2<T> pool_;
  nn::GlobalAvgPool<T> gap_;
  std::vector<nn::Param<T>*> params_;
  std::map<std::string, nn::Param<T>*> names_;
};

using TwoStreamModel = TwoStreamModelT<float>;

// --- checkpoint plumbing (format: magic S2SM, version, JSON config, ---------
// --- then per-parameter records in sorted name order, float32 LE)   ---------

std::string encode_model_config(const ModelConfig& cfg, int64_t iteration);
ModelConfig decode_model_config(const std::string& json_text, int64_t& iteration);

inline constexpr char kCheckpointMagic[4] = {'S', '2', 'S', 'M'};
inline constexpr uint32_t kCheckpointVersion = 1;

template <typename T>
void save_checkpoint(const fs::path& path, TwoStreamModelT<T>& model, int64_t iteration) {
  std::string out;
  out.append(kCheckpointMagic, 4);
  put_u32(out, kCheckpointVersion);
  std::string cfg = encode_model_config(model.config(), iteration);
  put_u32(out, uint32_t(cfg.size()));
  out += cfg;
  std::vector<nn::Param<T>*> sorted = model.params();
  std::sort(sorted.begin(), sorted.end(),
            [](const nn::Param<T>* a, const nn::Param<T>* b) { return a->name < b->name; });
  for (const auto* p : sorted) {
    put_u32(out, uint32_t(p->name.size()));
    out += p->name;
    put_u32(out, uint32_t(p->value.shape.size()));
    for (int d : p->value.shape) put_u32(out, uint32_t(d));
    for (T v : p->value.data) put_f32(out, float(v));
  }
  write_file_bytes(path, out);
}

template <typename T>
TwoStreamModelT<T> load_checkpoint(const fs::path& path, int64_t* iteration_out = nullptr) {
  std::string bytes = read_file_bytes(path);
  ByteReader r(bytes, "checkpoint " + path.string());
  if (r.bytes(4) != std::string(kCheckpointMagic, 4))
    throw FormatError("checkpoint " + path.string() + ": bad magic");
  uint32_t ver = r.u32();
  if (ver != kCheckpointVersion)
    throw FormatError("checkpoint " + path.string() + ": unsupported version " +
                      std::to_string(ver));
  int64_t iteration = 0;
  ModelConfig cfg = decode_model_config(r.bytes(r.u32()), iteration);
  TwoStreamModelT<T> model(cfg, 0);
  std::map<std::string, bool> seen;
  while (!r.at_end()) {
    std::string name = r.bytes(r.u32());
    nn::Param<T>* p = model.find_param(name);
    if (!p) throw ConsistencyError("checkpoint: unknown parameter `" + name + "`");
    if (seen.count(name)) throw ConsistencyError("checkpoint: duplicate parameter `" + name + "`");
    seen[name] = true;
    uint32_t ndims = r.u32();
    std::vector<int> dims(ndims);
    for (auto& d : dims) d = int(r.u32());
    if (dims != p->value.shape)
      throw ConsistencyError("checkpoint: shape mismatch for `" + name + "`");
    for (auto& v : p->value.data) v = T(r.f32());
  }
  if (seen.size() != model.params().size())
    throw ConsistencyError("checkpoint " + path.string() + ": missing parameters");
  if (iteration_out) *iteration_out = iteration;
  return model;
}

// --- single-sample scoring (inference composition of the full pipeline) -----

/// HWC blob -> [1,C,H,W] network input.
nn::Tensor<float> blob_input(const S2SBlob& blob);
/// RGB -> [1,3,S,S] network input, nearest-resized, scaled to [0,1].
nn::Tensor<float> rgb_input(const RgbImage& img, int out_size);
RgbImage resize_rgb_nearest(const RgbImage& img, int out_height, int out_width);

/// tau for one prepared visual input and one (verb, object) query.
double score_input(TwoStreamModel& model, const nn::Tensor<float>& input, const std::string& verb,
                   const std::string& object, const EmbeddingTable& table);
double score(TwoStreamModel& model, const S2SBlob& blob, const std::string& verb,
             const std::string& object, const EmbeddingTable& table);
double score(TwoStreamModel& model, const RgbImage& img, const std::string& verb,
             const std::string& object, const EmbeddingTable& table);

}  // namespace s2s
