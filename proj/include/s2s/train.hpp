#pragma once

#include <optional>
#include <string>
#include <vector>

#include "s2s/dataset.hpp"
#include "s2s/model.hpp"

namespace s2s {

struct TrainConfig {
  double lr0 = 1e-5;
  double anneal_factor = 0.5;
  int64_t anneal_every = 200000;
  double weight_decay = 1e-5;  // L2 penalty on Q-Net affine parameters only
  int batch_size = 32;
  int64_t iterations = 2000;
  uint64_t seed = 0;
  int episode_classes = 8;        // VO pairs sampled per episode
  int negatives_per_positive = 1;
  int64_t log_every = 100;

  void validate() const;  // ConfigError on bad values
};

struct EpisodeSample {
  std::string image_id;
  std::string verb;
  std::string object;
  float target = 0.0f;  // 1 matched, 0 unmatched
};
using EpisodeBatch = std::vector<EpisodeSample>;

/// Samples one episode: `episode_classes` distinct train pairs, matched
/// samples drawn from their images, and for each matched sample
/// `negatives_per_positive` unmatched queries drawn uniformly from the other
/// episode pairs (never equal to the image's own pair).
EpisodeBatch sample_episode(const std::vector<ManifestEntry>& train_entries,
                            const TrainConfig& config, Rng& rng);

double mse_loss(const std::vector<double>& predictions, const std::vector<double>& targets);

/// lr0 * anneal_factor^floor(iteration / anneal_every)
double lr_at(int64_t iteration, const TrainConfig& config);

/// Adds wd * theta to the gradients of the decayed (Q-Net affine) parameters.
void apply_weight_decay(TwoStreamModel& model, double wd);
/// The matching penalty term added to the reported loss: (wd/2) * sum(theta^2).
double weight_decay_penalty(TwoStreamModel& model, double wd);

struct TrainResult {
  int64_t final_iteration = 0;  // iterations completed in total
  double final_loss = 0.0;
};

/// Runs iterations [start_iteration, config.iterations): episode sampling,
/// forward, MSE + decay penalty, backward, Adam. Appends `iter,loss,lr` lines
/// to metrics_path every log_every steps (plus the last), then writes the
/// final checkpoint. Non-finite loss raises DivergenceError naming the
/// iteration. Pass an external Adam to keep optimizer state across calls.
TrainResult train_loop(TwoStreamModel& model, DataCache& cache,
                       const std::vector<ManifestEntry>& train_entries, const TrainConfig& config,
                       const fs::path& metrics_path, const fs::path& checkpoint_path,
                       int64_t start_iteration = 0, nn::Adam<float>* external_opt = nullptr);

}  // namespace s2s
