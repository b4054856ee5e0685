#include "reft/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "reft/inference.hpp"
#include "reft/kernels.hpp"
#include "reft/optim.hpp"
#include "reft/rng.hpp"
#include "reft/sft.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace reft {

std::vector<double> compute_gae(std::span<const double> rewards,
                                std::span<const double> values, double gamma,
                                double lambda) {
  if (rewards.size() != values.size())
    throw ArgumentError("compute_gae: rewards/values length mismatch");
  const int L = (int)rewards.size();
  std::vector<double> adv(L);
  double acc = 0.0;
  for (int t = L - 1; t >= 0; --t) {
    double v_next = (t + 1 < L) ? values[t + 1] : 0.0;
    double delta = rewards[t] + gamma * v_next - values[t];
    acc = delta + gamma * lambda * acc;
    adv[t] = acc;
  }
  return adv;
}

std::vector<double> lambda_returns(std::span<const double> advantages,
                                   std::span<const double> values) {
  if (advantages.size() != values.size())
    throw ArgumentError("lambda_returns: length mismatch");
  std::vector<double> ret(advantages.size());
  for (size_t t = 0; t < ret.size(); ++t) ret[t] = advantages[t] + values[t];
  return ret;
}

namespace {

// KL(pi_old || pi0) at one state from the two raw logit rows.
double exact_kl_row(const std::vector<double>& pol_logits,
                    const std::vector<double>& ref_logits, double temperature) {
  const int v = (int)pol_logits.size();
  std::vector<double> zp(v), zq(v);
  for (int i = 0; i < v; ++i) {
    zp[i] = pol_logits[i] / temperature;
    zq[i] = ref_logits[i] / temperature;
  }
  double lp = log_sum_exp(zp.data(), v);
  double lq = log_sum_exp(zq.data(), v);
  double kl = 0.0;
  for (int i = 0; i < v; ++i) {
    double logp = zp[i] - lp;
    kl += std::exp(logp) * (logp - (zq[i] - lq));
  }
  return kl;
}

}  // namespace

std::vector<Rollout> collect_rollouts(const Model& policy_old, const Model* value_old,
                                      const Model& initial_policy,
                                      std::span<const Example> batch,
                                      const Vocab& vocab, const RewardConfig& rcfg,
                                      const PpoConfig& cfg, uint64_t step_seed) {
  std::vector<Rollout> out(batch.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < (int)batch.size(); ++i) {
    const Example& ex = batch[i];
    Rng rng = Rng::stream(step_seed, (uint64_t)i);
    Rollout r;
    r.prompt = sft_prompt(vocab, ex.question);
    auto s = policy_old.sample(r.prompt, cfg.temperature, cfg.max_new, rng,
                               /*greedy=*/false, /*want_logits=*/true);
    r.actions = s.tokens;
    r.old_logp = s.logprobs;
    r.old_values = s.values;
    r.truncated = s.truncated;
    const int L = (int)r.actions.size();

    std::vector<int> full = r.prompt;
    full.insert(full.end(), r.actions.begin(), r.actions.end());
    const int p = (int)r.prompt.size();

    if (value_old) {
      Cache vc;
      value_old->forward(full, vc);
      for (int t = 0; t < L; ++t) r.old_values[t] = vc.values[p - 1 + t];
    }

    r.kl.resize(L);
    if (cfg.beta != 0.0) {
      Cache c0;
      initial_policy.forward(full, c0);
      for (int t = 0; t < L; ++t) {
        int pos = p - 1 + t;
        if (cfg.exact_kl) {
          std::vector<double> ref(c0.logits.cols);
          for (int j = 0; j < c0.logits.cols; ++j) ref[j] = c0.logits.at(pos, j);
          r.kl[t] = exact_kl_row(s.logits[t], ref, cfg.temperature);
        } else {
          std::vector<double> row(c0.logits.cols);
          for (int j = 0; j < c0.logits.cols; ++j) row[j] = c0.logits.at(pos, j) / cfg.temperature;
          double lq = row[r.actions[t]] - log_sum_exp(row.data(), (int)row.size());
          r.kl[t] = r.old_logp[t] - lq;
        }
      }
    }

    std::string text = ex.question + "\n" + vocab.decode(r.actions);
    r.extracted = extract(text, ex.kind, ex.format, rcfg);
    r.terminal_reward_value = terminal_reward(r.extracted, ex.answer, ex.format, rcfg);

    r.rewards_total.assign(L, 0.0);
    for (int t = 0; t < L; ++t) {
      r.rewards_total[t] = -cfg.beta * r.kl[t];
      if (t == L - 1) r.rewards_total[t] += r.terminal_reward_value;
    }
    r.advantages = compute_gae(r.rewards_total, r.old_values, cfg.gamma, cfg.lambda);
    r.returns = lambda_returns(r.advantages, r.old_values);
    out[i] = std::move(r);
  }

  if (cfg.advantage_norm) {
    double sum = 0.0, sq = 0.0;
    size_t n = 0;
    for (const auto& r : out)
      for (double a : r.advantages) { sum += a; sq += a * a; ++n; }
    if (n > 1) {
      double mean = sum / (double)n;
      double var = std::max(0.0, sq / (double)n - mean * mean);
      double sd = std::sqrt(var) + 1e-8;
      for (auto& r : out)
        for (double& a : r.advantages) a = (a - mean) / sd;
    }
  }
  return out;
}

namespace {

// Shared implementation: one forward per rollout, both clipped losses from the
// same activations. w_policy/w_value pick which heads feed the gradient.
double ppo_losses(const Model& model, std::span<const Rollout> rollouts,
                  const PpoConfig& cfg, double w_policy, double w_value,
                  Params* grads, double* out_policy, double* out_value) {
  size_t total = 0;
  for (const auto& r : rollouts) total += r.actions.size();
  if (total == 0) throw ArgumentError("ppo_losses: empty rollout batch");
  const double inv_n = 1.0 / (double)total;
  const double eps = cfg.clip_eps;
  const double temp = cfg.temperature;

  double pol_sum = 0.0, val_sum = 0.0;
  int n_threads = 1;
#ifdef _OPENMP
  n_threads = max_threads();
#endif
  std::vector<Params> tgrads;
  if (grads) {
    tgrads.resize(n_threads);
    for (auto& g : tgrads) { g.init_shapes(model.cfg); g.zero(); }
  }
#pragma omp parallel for schedule(dynamic) reduction(+ : pol_sum, val_sum)
  for (int i = 0; i < (int)rollouts.size(); ++i) {
    const Rollout& r = rollouts[i];
    int tid = 0;
#ifdef _OPENMP
    tid = omp_get_thread_num();
#endif
    std::vector<int> full = r.prompt;
    full.insert(full.end(), r.actions.begin(), r.actions.end());
    const int p = (int)r.prompt.size();
    const int L = (int)r.actions.size();
    const int V = model.cfg.vocab_size;

    Cache c;
    model.forward(full, c);

    Mat dlogits;
    std::vector<double> dvalues;
    if (grads) {
      dlogits.resize((int)full.size(), V);
      dlogits.zero();
      dvalues.assign(full.size(), 0.0);
    }

    std::vector<double> row(V);
    for (int t = 0; t < L; ++t) {
      const int pos = p - 1 + t;
      const int a = r.actions[t];

      // --- clipped policy surrogate
      for (int j = 0; j < V; ++j) row[j] = c.logits.at(pos, j) / temp;
      const double lse = log_sum_exp(row.data(), V);
      const double lp = row[a] - lse;
      const double ratio = std::exp(lp - r.old_logp[t]);
      if (!std::isfinite(ratio))
        throw NumericError("ppo_losses: non-finite ratio at rollout " +
                           std::to_string(i) + " step " + std::to_string(t));
      const double A = r.advantages[t];
      const double u = ratio * A;
      const double cl = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * A;
      pol_sum += -std::min(u, cl) * inv_n;
      double dlp = (u <= cl) ? -A * ratio * inv_n : 0.0;

      // --- clipped value loss
      const double v = c.values[pos];
      const double vo = r.old_values[t];
      const double R = r.returns[t];
      double diff = v - R;
      double clipped, dclipped;  // clipped residual and its dv
      if (cfg.paper_value_clip) {
        double lo = A - eps, hi = A + eps;
        clipped = std::clamp(diff, lo, hi);
        dclipped = (diff > lo && diff < hi) ? 1.0 : 0.0;
      } else {
        double vc = vo + std::clamp(v - vo, -eps, eps);
        clipped = vc - R;
        dclipped = (std::abs(v - vo) < eps) ? 1.0 : 0.0;
      }
      double dv;
      if (diff * diff >= clipped * clipped) {
        val_sum += 0.5 * diff * diff * inv_n;
        dv = diff * inv_n;
      } else {
        val_sum += 0.5 * clipped * clipped * inv_n;
        dv = clipped * dclipped * inv_n;
      }

      if (grads) {
        if (dlp != 0.0) {
          // d lp / d logits_j = (1[j==a] - softmax_j) / temp
          for (int j = 0; j < V; ++j)
            dlogits.at(pos, j) = w_policy * dlp * (-std::exp(row[j] - lse)) / temp;
          dlogits.at(pos, a) += w_policy * dlp / temp;
        }
        dvalues[pos] = w_value * dv;
      }
    }

    if (grads) model.backward(full, c, dlogits, dvalues, tgrads[tid]);
  }

  if (grads) {
    for (int t = 0; t < n_threads; ++t) grads->axpy(1.0, tgrads[t]);
  }
  if (out_policy) *out_policy = pol_sum;
  if (out_value) *out_value = val_sum;
  return w_policy * pol_sum + w_value * val_sum;
}

}  // namespace

double policy_loss(const Model& model, std::span<const Rollout> rollouts,
                   const PpoConfig& cfg, Params* grads) {
  double pl = 0.0;
  ppo_losses(model, rollouts, cfg, 1.0, 0.0, grads, &pl, nullptr);
  return pl;
}

double value_loss(const Model& model, std::span<const Rollout> rollouts,
                  const PpoConfig& cfg, Params* grads) {
  double vl = 0.0;
  ppo_losses(model, rollouts, cfg, 0.0, 1.0, grads, nullptr, &vl);
  return vl;
}

double unified_loss(const Model& model, std::span<const Rollout> rollouts,
                    const PpoConfig& cfg, Params* grads, double* out_policy,
                    double* out_value) {
  return ppo_losses(model, rollouts, cfg, 1.0, cfg.alpha, grads, out_policy,
                    out_value);
}

ReftResult train_reft(const Model& warmup, const std::vector<Example>& train,
                      const std::vector<Example>& dev, const Vocab& vocab,
                      const PpoConfig& cfg, const RewardConfig& rcfg,
                      MetricsSink* sink, const RolloutHook& hook) {
  if (train.empty()) throw ArgumentError("train_reft: empty training set");
  ReftResult res;
  res.final_model = warmup;
  res.best_model = warmup;
  Model& model = res.final_model;
  const Model initial_policy = warmup;  // pi^(0), the KL anchor

  Model value_model;  // used only in the non-shared ablation
  if (!cfg.shared_value) value_model = warmup;

  AdamW opt(model.p.count());
  AdamW vopt;
  if (!cfg.shared_value) vopt = AdamW(model.p.count());
  AdamWConfig ocfg;  // no weight decay during RL

  Rng shuffle_rng = Rng::stream(cfg.seed, 0xb17c0de);
  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), size_t{0});

  const int steps_per_epoch =
      (int)((train.size() + cfg.batch_size - 1) / (size_t)cfg.batch_size);
  int64_t global_step = 0;
  const int64_t max_steps =
      cfg.max_steps >= 0 ? cfg.max_steps : (int64_t)cfg.epochs * steps_per_epoch;
  int collapse_run = 0;

  for (int epoch = 0; epoch < cfg.epochs && global_step < max_steps; ++epoch) {
    for (size_t k = order.size(); k > 1; --k)
      std::swap(order[k - 1], order[(size_t)shuffle_rng.uniform_int(0, (int)k - 1)]);

    double reward_sum = 0.0, kl_sum = 0.0, pl_sum = 0.0, vl_sum = 0.0;
    int64_t n_rollouts = 0, n_updates = 0;

    for (size_t off = 0; off < train.size() && global_step < max_steps;
         off += (size_t)cfg.batch_size, ++global_step) {
      size_t end = std::min(train.size(), off + (size_t)cfg.batch_size);
      std::vector<Example> batch;
      batch.reserve(end - off);
      for (size_t j = off; j < end; ++j) batch.push_back(train[order[j]]);

      // Snapshot, then collect on-policy trajectories from the snapshot.
      const Model policy_old = model;
      const Model* value_old = cfg.shared_value ? nullptr : &value_model;
      uint64_t step_seed = splitmix64(cfg.seed ^ (0x9e3779b97f4a7c15ULL +
                                                  (uint64_t)global_step));
      auto rollouts = collect_rollouts(policy_old, value_old, initial_policy,
                                       batch, vocab, rcfg, cfg, step_seed);
      if (hook) hook(epoch, batch, rollouts);
      for (const auto& r : rollouts) {
        reward_sum += r.terminal_reward_value;
        kl_sum += std::accumulate(r.kl.begin(), r.kl.end(), 0.0);
        ++n_rollouts;
      }

      for (int u = 0; u < cfg.updates_per_step; ++u) {
        double pl = 0.0, vl = 0.0;
        if (cfg.shared_value) {
          Params grads;
          grads.init_shapes(model.cfg);
          grads.zero();
          unified_loss(model, rollouts, cfg, &grads, &pl, &vl);
          opt.step(model.p, grads, cfg.lr, ocfg);
        } else {
          Params pg, vg;
          pg.init_shapes(model.cfg);
          pg.zero();
          vg.init_shapes(model.cfg);
          vg.zero();
          pl = policy_loss(model, rollouts, cfg, &pg);
          vl = value_loss(value_model, rollouts, cfg, &vg);
          opt.step(model.p, pg, cfg.lr, ocfg);
          vg.axpy(cfg.alpha - 1.0, vg);  // vg *= alpha (self-axpy is element-wise)
          vopt.step(value_model.p, vg, cfg.lr, ocfg);
        }
        if (!std::isfinite(pl) || !std::isfinite(vl))
          throw NumericError("train_reft: non-finite loss at step " +
                             std::to_string(global_step));
        pl_sum += pl;
        vl_sum += vl;
        ++n_updates;
      }
    }

    ReftEpochRow row;
    row.mean_train_reward = n_rollouts ? reward_sum / (double)n_rollouts : 0.0;
    row.mean_seq_kl = n_rollouts ? kl_sum / (double)n_rollouts : 0.0;
    row.policy_loss = n_updates ? pl_sum / (double)n_updates : 0.0;
    row.value_loss = n_updates ? vl_sum / (double)n_updates : 0.0;

    if (!dev.empty() && (epoch % cfg.eval_every == 0 || epoch == cfg.epochs - 1)) {
      row.eval_accuracy = evaluate_greedy(model, dev, vocab, rcfg, cfg.eval_max_new);
      if (row.eval_accuracy > res.best_accuracy) {
        res.best_accuracy = row.eval_accuracy;
        res.best_model = model;
      }
      if (cfg.collapse_floor >= 0.0) {
        collapse_run = row.eval_accuracy < cfg.collapse_floor ? collapse_run + 1 : 0;
        if (collapse_run >= cfg.collapse_patience) {
          res.collapsed = true;
          res.history.push_back(row);
          if (sink && sink->enabled())
            sink->record(epoch, {{"mean_train_reward", row.mean_train_reward},
                                 {"eval_accuracy", row.eval_accuracy},
                                 {"mean_seq_kl", row.mean_seq_kl},
                                 {"policy_loss", row.policy_loss},
                                 {"value_loss", row.value_loss}});
          return res;
        }
      }
    }
    res.history.push_back(row);
    if (sink && sink->enabled()) {
      std::map<std::string, double> vals{{"mean_train_reward", row.mean_train_reward},
                                         {"mean_seq_kl", row.mean_seq_kl},
                                         {"policy_loss", row.policy_loss},
                                         {"value_loss", row.value_loss}};
      if (row.eval_accuracy >= 0.0) vals["eval_accuracy"] = row.eval_accuracy;
      sink->record(epoch, vals);
    }
  }
  if (res.best_accuracy < 0.0) {
    res.best_model = model;
  }
  return res;
}

}  // namespace reft
