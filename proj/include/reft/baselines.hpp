#pragma once

#include <span>
#include <vector>

#include "reft/metrics.hpp"
#include "reft/reward.hpp"
#include "reft/sft.hpp"

namespace reft {

// --- offline self-training ----------------------------------------------

struct OfflineStConfig {
  int k = 20;  // samples drawn per question
  int m = 2;   // kept per question after dedup
  double temperature = 1.0;
  int max_new = 96;
  SftConfig sft;  // fine-tuning schedule on the augmented set
  uint64_t seed = 0;
};

// Sample k CoTs per question from `sampler`, keep the ones whose extracted
// answer is correct, dedup by text, subsample to at most m, and return the
// union with the original examples.
std::vector<Example> augment_self_training(const Model& sampler,
                                           std::span<const Example> train,
                                           const Vocab& vocab,
                                           const RewardConfig& rcfg,
                                           const OfflineStConfig& cfg);

// Fine-tune the warm-up model on the augmented set.
SftResult offline_self_train(const Model& warmup, const std::vector<Example>& train,
                             const std::vector<Example>& dev, const Vocab& vocab,
                             const OfflineStConfig& cfg, const RewardConfig& rcfg,
                             MetricsSink* sink = nullptr);

// --- online self-training -------------------------------------------------

struct OnlineStConfig {
  int epochs = 30;
  int batch_size = 32;
  double lr = 3e-5;
  double temperature = 1.0;
  int max_new = 96;
  int eval_every = 1;
  int eval_max_new = 96;
  uint64_t seed = 0;
};

struct OnlineStResult {
  Model final_model;
  Model best_model;
  double best_accuracy = -1.0;
};

// Each step samples one CoT per question from the current model; questions
// answered correctly train on their sample, the rest fall back to the
// ground-truth CoT.
OnlineStResult online_self_train(const Model& warmup,
                                 const std::vector<Example>& train,
                                 const std::vector<Example>& dev,
                                 const Vocab& vocab, const OnlineStConfig& cfg,
                                 const RewardConfig& rcfg,
                                 MetricsSink* sink = nullptr);

}  // namespace reft
