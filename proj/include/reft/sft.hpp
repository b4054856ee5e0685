#pragma once

#include <span>
#include <vector>

#include "reft/corpus.hpp"
#include "reft/metrics.hpp"
#include "reft/model.hpp"
#include "reft/optim.hpp"
#include "reft/reward.hpp"
#include "reft/vocab.hpp"

namespace reft {

struct SftConfig {
  int epochs = 60;
  int max_steps = -1;  // optional cap on total optimizer steps (warm-up W)
  int batch_size = 48;
  double lr = 1e-3;
  double warmup_frac = 0.1;
  double weight_decay = 0.0;
  int eval_every = 1;  // epochs between held-out evaluations
  int eval_max_new = 96;
  uint64_t seed = 0;
};

// Prompt tokens for a question and the full training sequence
// question-prompt ++ cot ++ <eos>.
std::vector<int> sft_prompt(const Vocab& vocab, const std::string& question);
std::vector<int> sft_sequence(const Vocab& vocab, const Example& ex);

// Mean over the batch of negative summed CoT-token log-probabilities (the
// question tokens contribute no terms). Accumulates gradients when given.
double sft_loss(const Model& model, std::span<const Example> batch,
                const Vocab& vocab, Params* grads = nullptr);

struct SftResult {
  Model final_model;
  Model best_model;
  double best_accuracy = -1.0;
  double final_train_loss = 0.0;
  std::vector<double> loss_history;  // one entry per epoch
};

// Mini-batch optimization of sft_loss; tracks held-out greedy accuracy and
// keeps the best checkpoint by that metric.
SftResult train_sft(const Model& init, const std::vector<Example>& train,
                    const std::vector<Example>& dev, const Vocab& vocab,
                    const SftConfig& cfg, const RewardConfig& rcfg,
                    MetricsSink* sink = nullptr);

}  // namespace reft
