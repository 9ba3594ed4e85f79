// Model configuration, query combiners, closeness head, checkpoints, and the
// scoring wrappers.
#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "s2s/blob.hpp"
#include "s2s/model.hpp"
#include "s2s/pngio.hpp"

using namespace s2s;

namespace {

ModelConfig tiny_cfg(const std::string& combiner = "sum", bool separate = false) {
  ModelConfig cfg;
  cfg.lv = 6;
  cfg.d_v = 4;
  cfg.input_size = 16;
  cfg.combiner = combiner;
  cfg.separate_qnets = separate;
  return cfg;
}

nn::Tensor<float> random_input(const ModelConfig& cfg, int n, Rng& rng) {
  nn::Tensor<float> x({n, cfg.in_channels, cfg.input_size, cfg.input_size});
  for (auto& v : x.data) v = float(rng.uniform(-1.0, 1.0));
  return x;
}

}  // namespace

TEST_CASE("model config resolves derived defaults") {
  ModelConfig cfg;
  cfg.validate_and_resolve();
  CHECK(cfg.in_channels == 300);  // s2s input carries one channel per word-vector dim
  CHECK(cfg.q_hidden == 64);
  CHECK(cfg.c_hidden == 128);

  ModelConfig rgb;
  rgb.input_mode = "rgb";
  rgb.validate_and_resolve();
  CHECK(rgb.in_channels == 3);

  ModelConfig ortho = tiny_cfg();
  ortho.input_mode = "orthovec2s";
  ortho.validate_and_resolve();
  CHECK(ortho.in_channels == 6);
}

TEST_CASE("model config rejects inconsistent settings") {
  auto expect_bad = [](void (*mutate)(ModelConfig&)) {
    ModelConfig cfg;
    cfg.lv = 6;
    cfg.d_v = 4;
    cfg.input_size = 16;
    mutate(cfg);
    CHECK_THROWS_AS(cfg.validate_and_resolve(), ConfigError);
  };
  expect_bad([](ModelConfig& c) { c.input_mode = "grayscale"; });
  expect_bad([](ModelConfig& c) { c.backbone = "vgg"; });
  expect_bad([](ModelConfig& c) { c.combiner = "concat"; });
  expect_bad([](ModelConfig& c) { c.lv = 0; });
  expect_bad([](ModelConfig& c) { c.d_v = -1; });
  expect_bad([](ModelConfig& c) {
    c.input_mode = "rgb";
    c.in_channels = 5;
  });
  expect_bad([](ModelConfig& c) { c.in_channels = 7; });  // != lv for s2s
  expect_bad([](ModelConfig& c) { c.backbone = "paper18"; });  // needs d_v=512
  expect_bad([](ModelConfig& c) {
    c.separate_qnets = true;
    c.d_v = 5;
  });
  expect_bad([](ModelConfig& c) {
    c.separate_qnets = true;
    c.q_hidden = 3;
  });
  expect_bad([](ModelConfig& c) { c.input_size = 8; });
  expect_bad([](ModelConfig& c) {
    c.backbone = "paper18";
    c.d_v = 512;
    c.input_size = 16;  // paper backbones need at least 32
  });

  ModelConfig ok;
  ok.backbone = "paper18";
  ok.d_v = 512;
  ok.input_size = 32;
  CHECK_NOTHROW(ok.validate_and_resolve());
  CHECK(ok.q_hidden == 512);
  CHECK(ok.c_hidden == 1024);
}

TEST_CASE("combine_query implements all four combiners") {
  std::vector<float> vv = {1.0f, 2.0f}, vo = {3.0f, 4.0f};

  CHECK(combine_query(vv, vo, "sum") == std::vector<float>{4.0f, 6.0f});
  CHECK(combine_query(vv, vo, "catV") == std::vector<float>{1.0f, 2.0f, 3.0f, 4.0f});
  CHECK(combine_query(vv, vo, "catH") == std::vector<float>{1.0f, 3.0f, 2.0f, 4.0f});

  auto had = combine_query(vv, vo, "hadamard");
  REQUIRE(had.size() == 2);
  const double norm = std::sqrt(3.0 * 3.0 + 8.0 * 8.0);
  CHECK(had[0] == doctest::Approx(3.0 / norm).epsilon(1e-6));
  CHECK(had[1] == doctest::Approx(8.0 / norm).epsilon(1e-6));

  // All-zero product must not divide by zero.
  std::vector<float> zeros = {0.0f, 0.0f};
  auto hz = combine_query(zeros, vo, "hadamard");
  for (float v : hz) {
    CHECK(std::isfinite(v));
    CHECK(v == 0.0f);
  }

  std::vector<float> shorter = {1.0f};
  CHECK_THROWS_AS(combine_query(vv, shorter, "sum"), DimensionError);
  CHECK_THROWS_AS(combine_query(vv, vo, "outer"), ConfigError);

  ModelConfig cfg = tiny_cfg("catV");
  CHECK(cfg.query_dim() == 12);
  cfg.combiner = "catH";
  CHECK(cfg.query_dim() == 12);
  cfg.combiner = "sum";
  CHECK(cfg.query_dim() == 6);
  cfg.combiner = "hadamard";
  CHECK(cfg.query_dim() == 6);
}

TEST_CASE("closeness is a probability and batching matches per-row evaluation") {
  TwoStreamModel model(tiny_cfg(), 31);
  const ModelConfig& cfg = model.config();
  Rng rng(5);
  const int n = 5;
  auto x = random_input(cfg, n, rng);
  nn::Tensor<float> q({n, cfg.query_dim()});
  for (auto& v : q.data) v = float(rng.uniform(-1.0, 1.0));

  auto fv = model.forward_vnet(x, nullptr);
  auto fq = model.forward_qnet(q, nullptr);
  auto tau = model.closeness(fv, fq, nullptr);
  REQUIRE(tau.numel() == size_t(n));
  for (float t : tau.data) {
    CHECK(t > 0.0f);
    CHECK(t < 1.0f);
  }

  // Row-by-row forward of the same data.
  size_t plane = size_t(cfg.in_channels) * cfg.input_size * cfg.input_size;
  for (int i = 0; i < n; i++) {
    nn::Tensor<float> xi({1, cfg.in_channels, cfg.input_size, cfg.input_size});
    std::copy_n(x.ptr() + size_t(i) * plane, plane, xi.ptr());
    nn::Tensor<float> qi({1, cfg.query_dim()});
    std::copy_n(q.ptr() + size_t(i) * cfg.query_dim(), size_t(cfg.query_dim()), qi.ptr());
    auto ti = model.closeness(model.forward_vnet(xi, nullptr), model.forward_qnet(qi, nullptr),
                              nullptr);
    CHECK(double(ti.data[0]) == doctest::Approx(double(tau.data[size_t(i)])).epsilon(1e-5));
  }

  // Non-finite features and shape mismatches are rejected.
  nn::Tensor<float> bad_fv({1, cfg.d_v});
  bad_fv.fill(std::numeric_limits<float>::quiet_NaN());
  nn::Tensor<float> ok_fq({1, cfg.d_v});
  CHECK_THROWS_AS(model.closeness(bad_fv, ok_fq, nullptr), NumericError);
  nn::Tensor<float> narrow({1, cfg.d_v + 1});
  CHECK_THROWS_AS(model.closeness(narrow, ok_fq, nullptr), DimensionError);
}

TEST_CASE("checkpoint round-trip is bit-exact") {
  testutil::TempDir tmp;
  TwoStreamModel model(tiny_cfg("catH"), 42);
  const fs::path path = tmp.path / "model.s2sm";
  save_checkpoint(path, model, 1234);

  int64_t iteration = -1;
  TwoStreamModel loaded = load_checkpoint<float>(path, &iteration);
  CHECK(iteration == 1234);
  CHECK(loaded.config().combiner == "catH");
  CHECK(loaded.config().lv == 6);
  CHECK(loaded.config().d_v == 4);
  CHECK(loaded.config().input_size == 16);

  auto& a = model.params();
  auto& b = loaded.params();
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); i++) {
    CHECK(a[i]->name == b[i]->name);
    CHECK(a[i]->value.data == b[i]->value.data);
  }

  Rng rng(77);
  auto x = random_input(model.config(), 2, rng);
  nn::Tensor<float> q({2, model.config().query_dim()});
  for (auto& v : q.data) v = float(rng.uniform(-1.0, 1.0));
  auto t1 = model.closeness(model.forward_vnet(x, nullptr), model.forward_qnet(q, nullptr),
                            nullptr);
  auto t2 = loaded.closeness(loaded.forward_vnet(x, nullptr), loaded.forward_qnet(q, nullptr),
                             nullptr);
  CHECK(t1.data == t2.data);

  SUBCASE("a moved model keeps working and re-saves identically") {
    // params()/find_param() point into the model's own layers; a move must
    // re-register them, not carry stale pointers to the moved-from object.
    TwoStreamModel moved = std::move(loaded);
    REQUIRE(moved.params().size() == a.size());
    for (size_t i = 0; i < a.size(); i++) CHECK(moved.params()[i]->name == a[i]->name);
    nn::Param<float>* qw = moved.find_param("qnet.fc1.weight");
    REQUIRE(qw != nullptr);
    CHECK(std::count(moved.params().begin(), moved.params().end(), qw) == 1);

    const fs::path path2 = tmp.path / "moved.s2sm";
    save_checkpoint(path2, moved, 1234);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);

    auto t3 = moved.closeness(moved.forward_vnet(x, nullptr), moved.forward_qnet(q, nullptr),
                              nullptr);
    CHECK(t3.data == t1.data);
  }

  SUBCASE("tampered magic is rejected") {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    REQUIRE(bytes.size() > 8);
    bytes[0] ^= 0x5a;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), std::streamsize(bytes.size()));
    out.close();
    CHECK_THROWS_AS(load_checkpoint<float>(path), FormatError);
  }

  SUBCASE("truncated checkpoint is rejected") {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    bytes.resize(bytes.size() / 2);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), std::streamsize(bytes.size()));
    out.close();
    CHECK_THROWS_AS(load_checkpoint<float>(path), Error);
  }
}

TEST_CASE("weight initialization is seed-deterministic") {
  TwoStreamModel a(tiny_cfg(), 11);
  TwoStreamModel b(tiny_cfg(), 11);
  TwoStreamModel c(tiny_cfg(), 12);

  auto& pa = a.params();
  auto& pb = b.params();
  auto& pc = c.params();
  REQUIRE(pa.size() == pb.size());
  REQUIRE(pa.size() == pc.size());
  bool any_diff = false;
  for (size_t i = 0; i < pa.size(); i++) {
    CHECK(pa[i]->value.data == pb[i]->value.data);
    if (pa[i]->value.data != pc[i]->value.data) any_diff = true;
  }
  CHECK(any_diff);
}

TEST_CASE("scoring wrappers agree and reject mismatched inputs") {
  EmbeddingTable table = testutil::tiny_table();  // dim 3
  ModelConfig cfg;
  cfg.lv = 3;
  cfg.d_v = 4;
  cfg.input_size = 16;
  TwoStreamModel model(cfg, 9);

  Rng rng(21);
  SceneAnnotation scene = testutil::random_scene("img_000", 12, 12, 2, rng);
  S2SBlob blob = build_s2s(scene, table, 16);
  double s = score(model, blob, "hold", "cat", table);
  CHECK(s > 0.0);
  CHECK(s < 1.0);
  CHECK(s == score_input(model, blob_input(blob), "hold", "cat", table));

  // Channel mismatch: a 3-channel blob fed to a model expecting 6.
  ModelConfig wide = tiny_cfg();
  TwoStreamModel wide_model(wide, 9);
  CHECK_THROWS_AS(score(wide_model, blob, "hold", "cat", table), DimensionError);

  // RGB scoring only works on an rgb-mode model.
  RgbImage img = make_rgb(20, 14, 120, 30, 200);
  CHECK_THROWS_AS(score(model, img, "hold", "cat", table), DimensionError);

  ModelConfig rgb_cfg;
  rgb_cfg.input_mode = "rgb";
  rgb_cfg.lv = 3;
  rgb_cfg.d_v = 4;
  rgb_cfg.input_size = 16;
  TwoStreamModel rgb_model(rgb_cfg, 9);
  double rs = score(rgb_model, img, "hold", "cat", table);
  CHECK(rs > 0.0);
  CHECK(rs < 1.0);
}

TEST_CASE("separate q-nets keep verb and object halves independent") {
  TwoStreamModelT<double> model(tiny_cfg("sum", true), 13);
  const ModelConfig& cfg = model.config();
  const int half = cfg.d_v / 2;

  Rng rng(3);
  nn::Tensor<double> qv({2, cfg.lv}), qo({2, cfg.lv}), qo2({2, cfg.lv});
  for (auto& v : qv.data) v = rng.uniform(-1.0, 1.0);
  for (auto& v : qo.data) v = rng.uniform(-1.0, 1.0);
  for (auto& v : qo2.data) v = rng.uniform(-1.0, 1.0);

  auto f1 = model.forward_qnet_separate(qv, qo, nullptr);
  auto f2 = model.forward_qnet_separate(qv, qo2, nullptr);
  REQUIRE(f1.shape == std::vector<int>{2, cfg.d_v});
  bool object_half_changed = false;
  for (int i = 0; i < 2; i++) {
    for (int j = 0; j < half; j++) {
      CHECK(f1.data[size_t(i) * cfg.d_v + j] == f2.data[size_t(i) * cfg.d_v + j]);
      if (f1.data[size_t(i) * cfg.d_v + half + j] != f2.data[size_t(i) * cfg.d_v + half + j])
        object_half_changed = true;
    }
  }
  CHECK(object_half_changed);

  // The single-query entry point is closed on a separate-qnet model and
  // vice versa.
  nn::Tensor<double> q({2, cfg.query_dim()});
  CHECK_THROWS_AS(model.forward_qnet(q, nullptr), ConfigError);
  TwoStreamModelT<double> single(tiny_cfg(), 13);
  CHECK_THROWS_AS(single.forward_qnet_separate(qv, qo, nullptr), ConfigError);
}

TEST_CASE("paper backbone builds and scores") {
  ModelConfig cfg;
  cfg.backbone = "paper18";
  cfg.lv = 8;
  cfg.d_v = 512;
  cfg.input_size = 32;
  TwoStreamModel model(cfg, 1);
  CHECK(model.config().in_channels == 8);
  CHECK(model.params().size() > 40);

  Rng rng(2);
  auto x = random_input(model.config(), 1, rng);
  nn::Tensor<float> q({1, model.config().query_dim()});
  for (auto& v : q.data) v = float(rng.uniform(-1.0, 1.0));
  auto tau = model.closeness(model.forward_vnet(x, nullptr), model.forward_qnet(q, nullptr),
                             nullptr);
  REQUIRE(tau.numel() == 1);
  CHECK(tau.data[0] > 0.0f);
  CHECK(tau.data[0] < 1.0f);
}
