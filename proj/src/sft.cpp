#include "reft/sft.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "reft/inference.hpp"

namespace reft {

std::vector<int> sft_prompt(const Vocab& vocab, const std::string& question) {
  return vocab.encode(question + "\n");
}

std::vector<int> sft_sequence(const Vocab& vocab, const Example& ex) {
  std::vector<int> tokens = sft_prompt(vocab, ex.question);
  const auto cot = encode_with_eos(vocab, ex.cot);
  tokens.insert(tokens.end(), cot.begin(), cot.end());
  return tokens;
}

double sft_loss(const Model& model, std::span<const Example> batch,
                const Vocab& vocab, Params* grads) {
  if (batch.empty()) throw ArgumentError("empty SFT batch");
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
    const int prompt_len = static_cast<int>(sft_prompt(vocab, batch[b].question).size());
    const auto tokens = sft_sequence(vocab, batch[b]);
    Cache cache;
    model.forward(tokens, cache);
    const int T = cache.T;
    const int V = model.cfg.vocab_size;
    Mat dlogits;
    if (grads != nullptr) dlogits.resize(T, V);
    double loss = 0.0;
    std::vector<double> z(V);
    // action a_t at index t is predicted from position t-1
    for (int t = prompt_len; t < T; ++t) {
      const double* row = cache.logits.row(t - 1);
      const double lse = log_sum_exp(row, V);
      loss -= row[tokens[t]] - lse;
      if (grads != nullptr) {
        double* dr = dlogits.row(t - 1);
        for (int i = 0; i < V; ++i) dr[i] = std::exp(row[i] - lse) / n;
        dr[tokens[t]] -= 1.0 / n;
      }
    }
    losses[b] = loss;
    if (grads != nullptr)
      model.backward(tokens, cache, dlogits, {}, tgrads[tid]);
  }
  if (grads != nullptr)
    for (const auto& g : tgrads) grads->axpy(1.0, g);
  double total = 0.0;
  for (double l : losses) total += l;
  return total / n;
}

SftResult train_sft(const Model& init, const std::vector<Example>& train,
                    const std::vector<Example>& dev, const Vocab& vocab,
                    const SftConfig& cfg, const RewardConfig& rcfg,
                    MetricsSink* sink) {
  if (train.empty()) throw ArgumentError("training set must be non-empty");
  if (cfg.batch_size < 1) throw ConfigError("batch size must be at least 1");

  SftResult res;
  res.final_model = init;
  res.best_model = init;

  AdamW opt(res.final_model.p.count());
  AdamWConfig ocfg;
  ocfg.weight_decay = cfg.weight_decay;

  Rng shuffle_rng(splitmix64(cfg.seed ^ 0x736674ull));
  const int64_t steps_per_epoch =
      (static_cast<int64_t>(train.size()) + cfg.batch_size - 1) / cfg.batch_size;
  const int64_t total_steps =
      cfg.max_steps > 0 ? cfg.max_steps : steps_per_epoch * cfg.epochs;

  std::vector<size_t> order(train.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  int64_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs && step < total_steps; ++epoch) {
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.uniform_int(0, static_cast<int>(i) - 1)]);

    double epoch_loss = 0.0;
    int64_t epoch_batches = 0;
    for (size_t start = 0; start < train.size() && step < total_steps;
         start += cfg.batch_size) {
      const size_t end = std::min(train.size(), start + cfg.batch_size);
      std::vector<Example> batch;
      batch.reserve(end - start);
      for (size_t i = start; i < end; ++i) batch.push_back(train[order[i]]);

      Params grads;
      grads.init_shapes(res.final_model.cfg);
      const double loss = sft_loss(res.final_model, batch, vocab, &grads);
      if (!std::isfinite(loss))
        throw NumericError("non-finite SFT loss at step " + std::to_string(step));
      ++step;
      opt.step(res.final_model.p, grads,
               warmup_lr(cfg.lr, cfg.warmup_frac, step, total_steps), ocfg);
      epoch_loss += loss;
      ++epoch_batches;
    }
    epoch_loss /= std::max<int64_t>(1, epoch_batches);
    res.loss_history.push_back(epoch_loss);
    res.final_train_loss = epoch_loss;

    double acc = -1.0;
    if (!dev.empty() && (epoch % cfg.eval_every == 0 || step >= total_steps ||
                         epoch == cfg.epochs - 1)) {
      acc = evaluate_greedy(res.final_model, dev, vocab, rcfg, cfg.eval_max_new);
      if (acc > res.best_accuracy) {
        res.best_accuracy = acc;
        res.best_model = res.final_model;
      }
    }
    if (sink != nullptr) {
      std::map<std::string, double> row{{"train_loss", epoch_loss}};
      if (acc >= 0.0) row["eval_accuracy"] = acc;
      sink->record(epoch, row);
    }
  }
  if (res.best_accuracy < 0.0) {
    res.best_model = res.final_model;
    res.best_accuracy = 0.0;
  }
  return res;
}

}  // namespace reft
