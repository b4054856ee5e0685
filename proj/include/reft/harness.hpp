#pragma once

#include <string>
#include <vector>

#include "reft/baselines.hpp"
#include "reft/inference.hpp"
#include "reft/ppo.hpp"
#include "reft/sft.hpp"

namespace reft {

// Fully resolved experiment: data, model, and one schedule per method. A run's
// manifest is this structure serialized back out.
struct ExperimentConfig {
  DatasetSpec data;  // training-split parameters; count = train size
  int dev_count = 200;
  int test_count = 500;
  ModelConfig model{/*vocab_size=*/0, /*d_model=*/128, /*n_layers=*/4,
                    /*n_heads=*/8, /*max_seq=*/256, /*init_seed=*/0};
  SftConfig warmup;   // short warm-up phase preceding RL-style methods
  SftConfig sft;      // converged SFT baseline schedule
  PpoConfig ppo;
  OfflineStConfig offline;
  OnlineStConfig online;
  OrmConfig orm;
  int orm_k = 4;             // sampled CoTs per question for ORM data
  int orm_question_cap = 300;
  RewardConfig reward;
  int vote_k = 20;
  int eval_max_new = 96;
  double eval_temperature = 1.0;
  uint64_t seed = 1;
  std::string method = "reft";  // sft | reft | offline-st | online-st
  std::string out_dir = "runs";
};

ExperimentConfig default_experiment();
// JSON file with optional sections; unspecified keys keep their defaults.
ExperimentConfig load_experiment(const std::string& path);
std::string experiment_to_json(const ExperimentConfig& cfg);
void save_manifest(const ExperimentConfig& cfg, const std::string& path);

struct Splits {
  std::vector<Example> train, dev, test;
};

// One generation pass split three ways; question uniqueness makes the splits
// disjoint.
Splits make_splits(const ExperimentConfig& cfg);

// --- reward-hacking audit ---------------------------------------------------

// Re-executes every "a op b = c" equation in a natural-language CoT, checks
// that consecutive equations chain (each one consumes the previous result),
// and that the final derived value equals the gold answer. Returns false for
// CoTs with no equations.
bool audit_cot(const Example& ex, const std::string& cot,
               const RewardConfig& rcfg);

// The numeric counterpart of an MCQ example: options stripped from the
// question, the gold option value as the answer, same reasoning chain.
Example numeric_twin(const Example& mcq);

// --- orchestration ----------------------------------------------------------

struct TrainOutput {
  Model model;             // best checkpoint by dev accuracy
  double test_accuracy = -1.0;
  bool collapsed = false;
  std::vector<ReftEpochRow> rl_history;  // RL methods only
};

// Dispatches on cfg.method; writes metrics/timing/manifest/checkpoint under
// run_dir when non-empty.
TrainOutput run_training(const ExperimentConfig& cfg, const Splits& splits,
                         const std::string& run_dir = "");

struct InferenceReport {
  double greedy = 0.0;
  double vote = 0.0;
  double rerank = -1.0;       // -1 when reranking is skipped
  double orm_holdout = -1.0;
};

InferenceReport run_inference_eval(const ExperimentConfig& cfg, const Model& policy,
                                   const Splits& splits, bool with_rerank);

struct HackingReport {
  std::vector<double> mcq_reward, mcq_audited;  // per epoch, training batches
  std::vector<double> num_reward, num_audited;
  double mcq_max_gap = 0.0;
  double num_max_gap = 0.0;
};

HackingReport run_hacking_demo(const ExperimentConfig& cfg,
                               const std::string& run_dir = "");

struct AblationRow {
  std::string name;
  double test_accuracy = 0.0;
  bool collapsed = false;
  double seconds = 0.0;
};

// full / no-partial-reward / beta=0 / non-shared value model.
std::vector<AblationRow> run_ablations(const ExperimentConfig& cfg,
                                       const Splits& splits,
                                       const std::string& run_dir = "");

// --- CLI entry points (return a process exit code) --------------------------

int cmd_gen_data(const ExperimentConfig& cfg, const std::string& dir);
int cmd_train(const ExperimentConfig& cfg, const std::string& data_dir,
              const std::string& run_dir);
int cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint_path,
             const std::string& data_dir, const std::string& mode);
int cmd_hacking_demo(const ExperimentConfig& cfg, const std::string& run_dir);
int cmd_ablate(const ExperimentConfig& cfg, const std::string& run_dir);
int cmd_report(const std::string& dir);

}  // namespace reft
