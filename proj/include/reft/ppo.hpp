#pragma once

#include <functional>
#include <span>
#include <vector>

#include "reft/corpus.hpp"
#include "reft/metrics.hpp"
#include "reft/model.hpp"
#include "reft/reward.hpp"
#include "reft/vocab.hpp"

namespace reft {

struct PpoConfig {
  int epochs = 30;
  int max_steps = -1;        // T: cap on RL steps; -1 derives it from epochs
  int updates_per_step = 2;  // U
  double beta = 0.01;        // KL coefficient
  double gamma = 0.95;       // TD discount
  double lambda = 1.0;       // GAE trace parameter
  double alpha = 5.0;        // value-loss weight
  double clip_eps = 0.2;
  double lr = 3e-5;
  int batch_size = 32;
  double temperature = 1.0;
  int max_new = 96;
  bool advantage_norm = false;  // off by default; the objective has none
  bool exact_kl = true;         // full-vocabulary KL; false = sampled log-ratio
  bool shared_value = true;     // false: separate value model (ablation)
  bool paper_value_clip = false;  // strict printed clip bounds, for comparison
  int eval_every = 1;
  int eval_max_new = 96;
  double collapse_floor = -1.0;  // accuracy floor; negative disables detection
  int collapse_patience = 5;
  uint64_t seed = 0;
};

// One sampled trajectory with everything the clipped losses need. All
// per-step vectors share length L and returns[t] = advantages[t] +
// old_values[t] by construction.
struct Rollout {
  std::vector<int> prompt;
  std::vector<int> actions;
  std::vector<double> old_logp;
  std::vector<double> old_values;
  std::vector<double> kl;
  std::vector<double> rewards_total;
  std::vector<double> advantages;
  std::vector<double> returns;
  double terminal_reward_value = 0.0;
  ExtractedAnswer extracted;
  bool truncated = false;
};

// Backward recursion A_t = delta_t + gamma*lambda*A_{t+1} with V(s_{L+1}) = 0.
std::vector<double> compute_gae(std::span<const double> rewards,
                                std::span<const double> values, double gamma,
                                double lambda);

// R_t = A_t + V_old(s_t).
std::vector<double> lambda_returns(std::span<const double> advantages,
                                   std::span<const double> values);

// One sampled CoT per question from the frozen policy snapshot. value_old is
// the separate value snapshot for the non-shared ablation (null = shared).
std::vector<Rollout> collect_rollouts(const Model& policy_old, const Model* value_old,
                                      const Model& initial_policy,
                                      std::span<const Example> batch,
                                      const Vocab& vocab, const RewardConfig& rcfg,
                                      const PpoConfig& cfg, uint64_t step_seed);

// Clipped surrogate objectives, averaged over all (rollout, step) pairs.
double policy_loss(const Model& model, std::span<const Rollout> rollouts,
                   const PpoConfig& cfg, Params* grads = nullptr);
double value_loss(const Model& model, std::span<const Rollout> rollouts,
                  const PpoConfig& cfg, Params* grads = nullptr);
// L_RL = L_policy + alpha * L_value, one shared forward pass.
double unified_loss(const Model& model, std::span<const Rollout> rollouts,
                    const PpoConfig& cfg, Params* grads = nullptr,
                    double* out_policy = nullptr, double* out_value = nullptr);

struct ReftEpochRow {
  double mean_train_reward = 0.0;
  double eval_accuracy = -1.0;
  double mean_seq_kl = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
};

struct ReftResult {
  Model final_model;
  Model best_model;
  double best_accuracy = -1.0;
  bool collapsed = false;
  std::vector<ReftEpochRow> history;
};

// Observes every collected rollout batch (for audits and diagnostics).
using RolloutHook = std::function<void(int epoch, std::span<const Example> batch,
                                       std::span<const Rollout> rollouts)>;

// The RL stage: repeatedly snapshot, sample a mini-batch without CoT, compute
// advantages/returns, and apply U clipped-loss updates.
ReftResult train_reft(const Model& warmup, const std::vector<Example>& train,
                      const std::vector<Example>& dev, const Vocab& vocab,
                      const PpoConfig& cfg, const RewardConfig& rcfg,
                      MetricsSink* sink = nullptr, const RolloutHook& hook = {});

}  // namespace reft
