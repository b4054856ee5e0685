#pragma once

#include <span>
#include <string>
#include <vector>

#include "reft/corpus.hpp"
#include "reft/model.hpp"
#include "reft/reward.hpp"
#include "reft/vocab.hpp"

namespace reft {

struct Candidate {
  std::string cot;
  ExtractedAnswer extracted;
  double logprob = 0.0;  // sum of per-token sampling log-probs
  double score = 0.0;    // ORM score when reranking
};

struct CandidateSet {
  std::string question;
  std::vector<Candidate> candidates;
};

struct EvalOptions {
  int max_new = 96;
  double temperature = 1.0;
};

// Greedy decode per question; accuracy is the fraction with terminal reward
// equal to the correct reward (partial never counts). If `correct_bits` is
// given it receives one 0/1 entry per question.
double evaluate_greedy(const Model& model, std::span<const Example> test,
                       const Vocab& vocab, const RewardConfig& rcfg,
                       int max_new = 96, std::vector<int>* correct_bits = nullptr);

CandidateSet sample_candidates(const Model& model, const Example& ex, int k,
                               const Vocab& vocab, const RewardConfig& rcfg,
                               const EvalOptions& opt, Rng& rng);

// Nulls are discarded; ties break by earliest occurrence in sampling order;
// all-null abstains (returns Null).
ExtractedAnswer majority_vote(const CandidateSet& candidates);

// Answer of the highest-scoring candidate; ties by earliest occurrence.
ExtractedAnswer rerank(const CandidateSet& scored);

// --- outcome-based reward model ---------------------------------------------

struct OrmExample {
  std::string question, cot;
  int label = 0;  // 1 iff the extracted answer matched the gold answer
};

std::vector<OrmExample> build_orm_data(const Model& warmup,
                                       std::span<const Example> train, int k,
                                       const Vocab& vocab, const RewardConfig& rcfg,
                                       const EvalOptions& opt, uint64_t seed);

struct OrmConfig {
  int epochs = 3;
  int batch_size = 16;
  double lr = 3e-4;
  double dev_frac = 0.1;
  uint64_t seed = 0;
};

// Mean binary cross-entropy of sigmoid(scalar head at the last token).
double orm_bce_loss(const Model& model, std::span<const OrmExample> batch,
                    const Vocab& vocab, Params* grads = nullptr);

struct OrmResult {
  Model model;
  double holdout_accuracy = 0.0;
};

// Requires both classes present in the data.
OrmResult train_orm(const Model& init, const std::vector<OrmExample>& data,
                    const Vocab& vocab, const OrmConfig& cfg);

// Probability in (0, 1) that the CoT is correct.
double orm_score(const Model& orm, const std::string& question,
                 const std::string& cot, const Vocab& vocab);

void score_candidates(const Model& orm, const std::string& question,
                      CandidateSet& cands, const Vocab& vocab);

}  // namespace reft
