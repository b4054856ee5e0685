#include "reft/inference.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "reft/optim.hpp"

namespace reft {

namespace {

std::vector<int> question_prompt(const Vocab& vocab, const std::string& question) {
  return vocab.encode(question + "\n");
}

// A CoT sampled at the full budget leaves no room for the trailing <eos>;
// clip to the context so the score still comes from the last visible token.
std::vector<int> scoring_tokens(const Model& model, const Vocab& vocab,
                                const std::string& question,
                                const std::string& cot) {
  auto tokens = encode_with_eos(vocab, question + "\n" + cot);
  if (tokens.size() > static_cast<size_t>(model.cfg.max_seq))
    tokens.resize(model.cfg.max_seq);
  return tokens;
}

}  // namespace

double evaluate_greedy(const Model& model, std::span<const Example> test,
                       const Vocab& vocab, const RewardConfig& rcfg, int max_new,
                       std::vector<int>* correct_bits) {
  const int n = static_cast<int>(test.size());
  std::vector<int> bits(n, 0);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    const Example& ex = test[i];
    Rng rng(0);  // unused in greedy mode
    const auto prompt = question_prompt(vocab, ex.question);
    const auto res = model.sample(prompt, 1.0, max_new, rng, /*greedy=*/true);
    const std::string text = ex.question + "\n" + vocab.decode(res.tokens);
    const auto ans = extract(text, ex.kind, ex.format, rcfg);
    bits[i] = terminal_reward(ans, ex.answer, ex.format, rcfg) == rcfg.correct_value;
  }
  if (correct_bits != nullptr) *correct_bits = bits;
  double acc = 0.0;
  for (int b : bits) acc += b;
  return n > 0 ? acc / n : 0.0;
}

CandidateSet sample_candidates(const Model& model, const Example& ex, int k,
                               const Vocab& vocab, const RewardConfig& rcfg,
                               const EvalOptions& opt, Rng& rng) {
  CandidateSet set;
  set.question = ex.question;
  const auto prompt = question_prompt(vocab, ex.question);
  for (int i = 0; i < k; ++i) {
    const auto res = model.sample(prompt, opt.temperature, opt.max_new, rng);
    Candidate c;
    c.cot = vocab.decode(res.tokens);
    c.extracted = extract(ex.question + "\n" + c.cot, ex.kind, ex.format, rcfg);
    for (double lp : res.logprobs) c.logprob += lp;
    set.candidates.push_back(std::move(c));
  }
  return set;
}

ExtractedAnswer majority_vote(const CandidateSet& candidates) {
  if (candidates.candidates.empty())
    throw ArgumentError("majority_vote requires at least one candidate");
  std::map<std::string, int> counts;
  std::map<std::string, size_t> first_seen;
  std::map<std::string, ExtractedAnswer> repr;
  for (size_t i = 0; i < candidates.candidates.size(); ++i) {
    const auto& ans = candidates.candidates[i].extracted;
    if (ans.is_null()) continue;
    const std::string key = ans.key();
    if (counts.find(key) == counts.end()) {
      first_seen[key] = i;
      repr[key] = ans;
    }
    ++counts[key];
  }
  if (counts.empty()) return ExtractedAnswer::null();  // abstain
  std::string best;
  int best_count = -1;
  size_t best_first = 0;
  for (const auto& [key, count] : counts) {
    const size_t seen = first_seen[key];
    if (count > best_count || (count == best_count && seen < best_first)) {
      best = key;
      best_count = count;
      best_first = seen;
    }
  }
  return repr[best];
}

ExtractedAnswer rerank(const CandidateSet& scored) {
  if (scored.candidates.empty())
    throw ArgumentError("rerank requires at least one candidate");
  size_t best = 0;
  for (size_t i = 1; i < scored.candidates.size(); ++i)
    if (scored.candidates[i].score > scored.candidates[best].score) best = i;
  return scored.candidates[best].extracted;
}

std::vector<OrmExample> build_orm_data(const Model& warmup,
                                       std::span<const Example> train, int k,
                                       const Vocab& vocab, const RewardConfig& rcfg,
                                       const EvalOptions& opt, uint64_t seed) {
  const int n = static_cast<int>(train.size());
  std::vector<std::vector<OrmExample>> per_question(n);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    const Example& ex = train[i];
    Rng rng = Rng::stream(seed, static_cast<uint64_t>(i));
    const auto cands = sample_candidates(warmup, ex, k, vocab, rcfg, opt, rng);
    std::set<std::string> seen;
    for (const auto& c : cands.candidates) {
      if (!seen.insert(c.cot).second) continue;  // deduplicate
      OrmExample oe;
      oe.question = ex.question;
      oe.cot = c.cot;
      oe.label =
          terminal_reward(c.extracted, ex.answer, ex.format, rcfg) == rcfg.correct_value;
      per_question[i].push_back(std::move(oe));
    }
  }
  std::vector<OrmExample> out;
  for (auto& v : per_question)
    for (auto& oe : v) out.push_back(std::move(oe));
  return out;
}

double orm_bce_loss(const Model& model, std::span<const OrmExample> batch,
                    const Vocab& vocab, Params* grads) {
  if (batch.empty()) throw ArgumentError("empty ORM batch");
  const int n = static_cast<int>(batch.size());
  const int nt = std::min(max_threads(), n);
  std::vector<Params> tgrads;
  if (grads != nullptr) {
    tgrads.resize(nt);
    for (auto& g : tgrads) g.init_shapes(model.cfg);
  }
  std::vector<double> losses(n, 0.0);
#pragma omp parallel for schedule(static) num_threads(nt)
  for (int b = 0; b < n; ++b) {
#ifdef _OPENMP
    const int tid = omp_get_thread_num();
#else
    const int tid = 0;
#endif
    const auto tokens = scoring_tokens(model, vocab, batch[b].question, batch[b].cot);
    Cache cache;
    model.forward(tokens, cache);
    const int last = cache.T - 1;
    const double s = cache.values[last];
    const double y = batch[b].label;
    // numerically stable BCE on the logit
    const double loss = std::max(s, 0.0) - s * y + std::log1p(std::exp(-std::abs(s)));
    losses[b] = loss;
    if (grads != nullptr) {
      const double sig = 1.0 / (1.0 + std::exp(-s));
      std::vector<double> dvalues(cache.T, 0.0);
      dvalues[last] = (sig - y) / n;
      Mat dlogits(cache.T, model.cfg.vocab_size);
      model.backward(tokens, cache, dlogits, dvalues, tgrads[tid]);
    }
  }
  if (grads != nullptr)
    for (const auto& g : tgrads) grads->axpy(1.0, g);
  double total = 0.0;
  for (double l : losses) total += l;
  return total / n;
}

OrmResult train_orm(const Model& init, const std::vector<OrmExample>& data,
                    const Vocab& vocab, const OrmConfig& cfg) {
  bool has_pos = false, has_neg = false;
  for (const auto& d : data) (d.label != 0 ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg)
    throw ConfigError("ORM training data must contain both classes");

  Rng rng(splitmix64(cfg.seed ^ 0x6f726dull));
  std::vector<size_t> order(data.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.uniform_int(0, static_cast<int>(i) - 1)]);

  const size_t n_dev = std::max<size_t>(1, static_cast<size_t>(cfg.dev_frac * data.size()));
  std::vector<OrmExample> dev, tr;
  for (size_t i = 0; i < order.size(); ++i)
    (i < n_dev ? dev : tr).push_back(data[order[i]]);

  OrmResult res;
  res.model = init;
  AdamW opt(res.model.p.count());
  AdamWConfig ocfg;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (size_t i = tr.size(); i > 1; --i)
      std::swap(tr[i - 1], tr[rng.uniform_int(0, static_cast<int>(i) - 1)]);
    for (size_t start = 0; start < tr.size(); start += cfg.batch_size) {
      const size_t end = std::min(tr.size(), start + cfg.batch_size);
      Params grads;
      grads.init_shapes(res.model.cfg);
      orm_bce_loss(res.model, std::span(tr).subspan(start, end - start), vocab, &grads);
      opt.step(res.model.p, grads, cfg.lr, ocfg);
    }
  }

  int correct = 0;
  for (const auto& d : dev) {
    const double s = orm_score(res.model, d.question, d.cot, vocab);
    correct += (s > 0.5) == (d.label != 0);
  }
  res.holdout_accuracy = dev.empty() ? 0.0 : static_cast<double>(correct) / dev.size();
  return res;
}

double orm_score(const Model& orm, const std::string& question,
                 const std::string& cot, const Vocab& vocab) {
  const auto tokens = scoring_tokens(orm, vocab, question, cot);
  Cache cache;
  orm.forward(tokens, cache);
  const double s = cache.values[cache.T - 1];
  return 1.0 / (1.0 + std::exp(-s));
}

void score_candidates(const Model& orm, const std::string& question,
                      CandidateSet& cands, const Vocab& vocab) {
  const int n = static_cast<int>(cands.candidates.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i)
    cands.candidates[i].score =
        orm_score(orm, question, cands.candidates[i].cot, vocab);
}

}  // namespace reft
