#include "reft/baselines.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "reft/inference.hpp"
#include "reft/optim.hpp"
#include "reft/rng.hpp"

namespace reft {

std::vector<Example> augment_self_training(const Model& sampler,
                                           std::span<const Example> train,
                                           const Vocab& vocab,
                                           const RewardConfig& rcfg,
                                           const OfflineStConfig& cfg) {
  std::vector<std::vector<Example>> kept(train.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < (int)train.size(); ++i) {
    const Example& ex = train[i];
    Rng rng = Rng::stream(cfg.seed, (uint64_t)i);
    std::vector<int> prompt = sft_prompt(vocab, ex.question);
    std::set<std::string> seen;
    for (int s = 0; s < cfg.k; ++s) {
      auto res = sampler.sample(prompt, cfg.temperature, cfg.max_new, rng);
      // Only keep samples that still fit the training context as
      // prompt ++ cot ++ <eos>.
      if (prompt.size() + res.tokens.size() + 1 > (size_t)sampler.cfg.max_seq)
        continue;
      std::string cot = vocab.decode(res.tokens);
      auto ans = extract(ex.question + "\n" + cot, ex.kind, ex.format, rcfg);
      if (terminal_reward(ans, ex.answer, ex.format, rcfg) != rcfg.correct_value)
        continue;
      if (!seen.insert(cot).second) continue;
      Example aug = ex;
      aug.cot = cot;
      if ((int)kept[i].size() < cfg.m) kept[i].push_back(std::move(aug));
    }
  }

  std::vector<Example> out(train.begin(), train.end());
  for (auto& v : kept)
    for (auto& ex : v) out.push_back(std::move(ex));
  return out;
}

SftResult offline_self_train(const Model& warmup, const std::vector<Example>& train,
                             const std::vector<Example>& dev, const Vocab& vocab,
                             const OfflineStConfig& cfg, const RewardConfig& rcfg,
                             MetricsSink* sink) {
  auto augmented = augment_self_training(warmup, train, vocab, rcfg, cfg);
  return train_sft(warmup, augmented, dev, vocab, cfg.sft, rcfg, sink);
}

OnlineStResult online_self_train(const Model& warmup,
                                 const std::vector<Example>& train,
                                 const std::vector<Example>& dev,
                                 const Vocab& vocab, const OnlineStConfig& cfg,
                                 const RewardConfig& rcfg, MetricsSink* sink) {
  if (train.empty()) throw ArgumentError("online_self_train: empty training set");
  OnlineStResult res;
  res.final_model = warmup;
  res.best_model = warmup;
  Model& model = res.final_model;

  AdamW opt(model.p.count());
  AdamWConfig ocfg;
  Rng shuffle_rng = Rng::stream(cfg.seed, 0x5e1f77ea17);
  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), size_t{0});

  int64_t global_step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (size_t k = order.size(); k > 1; --k)
      std::swap(order[k - 1], order[(size_t)shuffle_rng.uniform_int(0, (int)k - 1)]);

    double loss_sum = 0.0;
    int64_t n_steps = 0;
    for (size_t off = 0; off < train.size(); off += (size_t)cfg.batch_size) {
      size_t end = std::min(train.size(), off + (size_t)cfg.batch_size);
      std::vector<Example> batch(end - off);
      uint64_t step_seed = splitmix64(cfg.seed ^ (uint64_t)(global_step + 1));
#pragma omp parallel for schedule(dynamic)
      for (int j = 0; j < (int)(end - off); ++j) {
        const Example& ex = train[order[off + j]];
        Rng rng = Rng::stream(step_seed, (uint64_t)j);
        auto pr = sft_prompt(vocab, ex.question);
        auto s = model.sample(pr, cfg.temperature, cfg.max_new, rng);
        std::string cot = vocab.decode(s.tokens);
        auto ans = extract(ex.question + "\n" + cot, ex.kind, ex.format, rcfg);
        Example b = ex;
        // Train on the sample when it is correct and still fits the context
        // as prompt ++ cot ++ <eos>; fall back to the gold CoT otherwise.
        if (terminal_reward(ans, ex.answer, ex.format, rcfg) == rcfg.correct_value &&
            pr.size() + s.tokens.size() + 1 <= (size_t)model.cfg.max_seq)
          b.cot = cot;
        batch[j] = std::move(b);
      }

      Params grads;
      grads.init_shapes(model.cfg);
      grads.zero();
      double loss = sft_loss(model, batch, vocab, &grads);
      if (!std::isfinite(loss))
        throw NumericError("online_self_train: non-finite loss");
      opt.step(model.p, grads, cfg.lr, ocfg);
      loss_sum += loss;
      ++n_steps;
      ++global_step;
    }

    double eval_acc = -1.0;
    if (!dev.empty() && (epoch % cfg.eval_every == 0 || epoch == cfg.epochs - 1)) {
      eval_acc = evaluate_greedy(model, dev, vocab, rcfg, cfg.eval_max_new);
      if (eval_acc > res.best_accuracy) {
        res.best_accuracy = eval_acc;
        res.best_model = model;
      }
    }
    if (sink && sink->enabled()) {
      std::map<std::string, double> vals{
          {"train_loss", n_steps ? loss_sum / (double)n_steps : 0.0}};
      if (eval_acc >= 0.0) vals["eval_accuracy"] = eval_acc;
      sink->record(epoch, vals);
    }
  }
  if (res.best_accuracy < 0.0) res.best_model = model;
  return res;
}

}  // namespace reft
