#include "s2s/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

namespace s2s {

void TrainConfig::validate() const {
  if (lr0 <= 0) throw ConfigError("train config: lr0 must be positive");
  if (anneal_factor <= 0) throw ConfigError("train config: anneal_factor must be positive");
  if (anneal_every <= 0) throw ConfigError("train config: anneal_every must be positive");
  if (weight_decay < 0) throw ConfigError("train config: weight_decay must be non-negative");
  if (batch_size <= 0) throw ConfigError("train config: batch_size must be positive");
  if (iterations < 0) throw ConfigError("train config: iterations must be non-negative");
  if (episode_classes < 2)
    throw ConfigError("train config: episode_classes must be at least 2 "
                      "(an unmatched query must exist)");
  if (negatives_per_positive <= 0)
    throw ConfigError("train config: negatives_per_positive must be positive");
  if (batch_size % (1 + negatives_per_positive) != 0)
    throw ConfigError("train config: batch_size must be a multiple of 1+negatives_per_positive");
  if (log_every <= 0) throw ConfigError("train config: log_every must be positive");
}

EpisodeBatch sample_episode(const std::vector<ManifestEntry>& train_entries,
                            const TrainConfig& config, Rng& rng) {
  config.validate();
  std::map<std::pair<std::string, std::string>, std::vector<const ManifestEntry*>> by_pair;
  for (const auto& e : train_entries) by_pair[{e.verb, e.object}].push_back(&e);
  if (int(by_pair.size()) < config.episode_classes)
    throw SamplingError("sample_episode: " + std::to_string(by_pair.size()) +
                        " train pairs available, episode needs " +
                        std::to_string(config.episode_classes));

  std::vector<const std::pair<const std::pair<std::string, std::string>,
                              std::vector<const ManifestEntry*>>*> pairs;
  for (const auto& kv : by_pair) pairs.push_back(&kv);
  rng.shuffle(pairs);
  pairs.resize(size_t(config.episode_classes));

  int matched = config.batch_size / (1 + config.negatives_per_positive);
  EpisodeBatch batch;
  batch.reserve(size_t(config.batch_size));
  for (int m = 0; m < matched; m++) {
    int own = m % config.episode_classes;
    const auto& [pair, images] = *pairs[size_t(own)];
    const ManifestEntry* img = images[rng.index(images.size())];
    batch.push_back({img->image_id, pair.first, pair.second, 1.0f});
    for (int n = 0; n < config.negatives_per_positive; n++) {
      int j = int(rng.uniform_int(0, config.episode_classes - 2));
      if (j >= own) j++;
      const auto& other = pairs[size_t(j)]->first;
      batch.push_back({img->image_id, other.first, other.second, 0.0f});
    }
  }
  return batch;
}

double mse_loss(const std::vector<double>& predictions, const std::vector<double>& targets) {
  if (predictions.size() != targets.size())
    throw DimensionError("mse_loss: prediction/target length mismatch");
  if (predictions.empty()) throw LossError("mse_loss: empty batch");
  double acc = 0;
  for (size_t i = 0; i < predictions.size(); i++) {
    double d = predictions[i] - targets[i];
    acc += d * d;
  }
  return acc / double(predictions.size());
}

double lr_at(int64_t iteration, const TrainConfig& config) {
  if (iteration < 0) throw ConfigError("lr_at: negative iteration");
  return config.lr0 * std::pow(config.anneal_factor, double(iteration / config.anneal_every));
}

void apply_weight_decay(TwoStreamModel& model, double wd) {
  if (wd == 0) return;
  for (auto* p : model.params()) {
    if (!p->qnet_affine) continue;
    for (size_t j = 0; j < p->value.numel(); j++)
      p->grad.data[j] += float(wd * double(p->value.data[j]));
  }
}

double weight_decay_penalty(TwoStreamModel& model, double wd) {
  if (wd == 0) return 0.0;
  double acc = 0;
  for (auto* p : model.params()) {
    if (!p->qnet_affine) continue;
    for (float v : p->value.data) acc += double(v) * double(v);
  }
  return 0.5 * wd * acc;
}

namespace {

struct QueryCache {
  const EmbeddingTable& table;
  std::map<std::string, std::vector<float>> embeds;

  const std::vector<float>& embed(const std::string& label) {
    auto it = embeds.find(label);
    if (it != embeds.end()) return it->second;
    return embeds.emplace(label, embed_label(table, label)).first->second;
  }
};

}  // namespace

TrainResult train_loop(TwoStreamModel& model, DataCache& cache,
                       const std::vector<ManifestEntry>& train_entries, const TrainConfig& config,
                       const fs::path& metrics_path, const fs::path& checkpoint_path,
                       int64_t start_iteration, nn::Adam<float>* external_opt) {
  config.validate();
  const ModelConfig& mc = model.config();
  if (mc.input_size != cache.config().input_size || mc.input_mode != cache.config().input_mode)
    throw ConfigError("train_loop: model and data cache configs disagree");

  std::optional<nn::Adam<float>> own_opt;
  if (!external_opt) own_opt.emplace(model.params());
  nn::Adam<float>& opt = external_opt ? *external_opt : *own_opt;

  std::ofstream metrics;
  if (!metrics_path.empty()) {
    metrics.open(metrics_path, std::ios::app);
    if (!metrics) throw IoError("cannot open metrics log " + metrics_path.string());
  }

  Rng rng(splitmix64(config.seed ^ fnv1a64("train-loop") ^ uint64_t(start_iteration)));
  QueryCache queries{cache.table(), {}};
  int b = config.batch_size;
  size_t in_numel = size_t(mc.in_channels) * mc.input_size * mc.input_size;

  TrainResult result{start_iteration, 0.0};
  for (int64_t it = start_iteration; it < config.iterations; it++) {
    EpisodeBatch batch = sample_episode(train_entries, config, rng);

    nn::Tensor<float> x({b, mc.in_channels, mc.input_size, mc.input_size});
    for (int i = 0; i < b; i++) {
      const auto& in = cache.input(batch[size_t(i)].image_id);
      if (in.numel() != in_numel) throw DimensionError("train_loop: unexpected input shape");
      std::copy(in.data.begin(), in.data.end(), x.ptr() + size_t(i) * in_numel);
    }

    nn::Ctx<float> ctx;
    nn::Tensor<float> fv = model.forward_vnet(x, &ctx);
    nn::Tensor<float> fq;
    if (mc.separate_qnets) {
      nn::Tensor<float> qv({b, mc.lv}), qo({b, mc.lv});
      for (int i = 0; i < b; i++) {
        const auto& ev = queries.embed(batch[size_t(i)].verb);
        const auto& eo = queries.embed(batch[size_t(i)].object);
        std::copy(ev.begin(), ev.end(), qv.ptr() + size_t(i) * mc.lv);
        std::copy(eo.begin(), eo.end(), qo.ptr() + size_t(i) * mc.lv);
      }
      fq = model.forward_qnet_separate(qv, qo, &ctx);
    } else {
      int qdim = mc.query_dim();
      nn::Tensor<float> q({b, qdim});
      for (int i = 0; i < b; i++) {
        auto qvec = combine_query(queries.embed(batch[size_t(i)].verb),
                                  queries.embed(batch[size_t(i)].object), mc.combiner);
        std::copy(qvec.begin(), qvec.end(), q.ptr() + size_t(i) * qdim);
      }
      fq = model.forward_qnet(q, &ctx);
    }
    nn::Tensor<float> tau = model.closeness(fv, fq, &ctx);

    std::vector<double> preds(size_t(b), 0.0), targets(size_t(b), 0.0);
    for (int i = 0; i < b; i++) {
      preds[size_t(i)] = double(tau.data[size_t(i)]);
      targets[size_t(i)] = double(batch[size_t(i)].target);
    }
    double loss = mse_loss(preds, targets) + weight_decay_penalty(model, config.weight_decay);
    if (!std::isfinite(loss))
      throw DivergenceError("training diverged at iteration " + std::to_string(it));

    model.zero_grad();
    nn::Tensor<float> dtau({b});
    for (int i = 0; i < b; i++)
      dtau.data[size_t(i)] = float(2.0 * (preds[size_t(i)] - targets[size_t(i)]) / double(b));
    auto [gfv, gfq] = model.closeness_backward(dtau, ctx);
    if (mc.separate_qnets)
      model.qnet_separate_backward(gfq, ctx);
    else
      model.qnet_backward(gfq, ctx);
    model.vnet_backward(gfv, ctx);
    if (!ctx.empty()) throw ConsistencyError("train_loop: unconsumed autograd context");
    apply_weight_decay(model, config.weight_decay);
    opt.step(lr_at(it, config));

    result.final_loss = loss;
    if (metrics.is_open() && (it % config.log_every == 0 || it == config.iterations - 1)) {
      char line[96];
      std::snprintf(line, sizeof line, "%lld,%.9g,%.9g\n", (long long)it, loss,
                    lr_at(it, config));
      metrics << line;
      if (!metrics) throw IoError("metrics log write failed");
    }
  }
  if (metrics.is_open()) metrics.flush();

  if (!checkpoint_path.empty())
    save_checkpoint(checkpoint_path, model, std::max(start_iteration, config.iterations));
  result.final_iteration = std::max(start_iteration, config.iterations);
  return result;
}

}  // namespace s2s
