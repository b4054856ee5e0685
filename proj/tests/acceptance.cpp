// End-to-end verification suite. Each criterion prints exactly one
// "criterion N: PASS|FAIL - <name> (<detail>)" line; the exit code is the
// number of failures. Criteria may be selected by number on the command line
// (default: all). Criteria 6, 7, and 9 share one set of trained models.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "reft/checkpoint.hpp"
#include "reft/harness.hpp"
#include "reft/kernels.hpp"

namespace fs = std::filesystem;
using namespace reft;

namespace {

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string out_root() {
  const char* env = std::getenv("REFT_OUT_ROOT");
  std::string root = (env && *env) ? std::string(env) : std::string(".");
  return root + "/acceptance_runs";
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// --- experiment schedule ------------------------------------------------------
// One fixed recipe, sized so the whole suite finishes on a single core.
// Held-out accuracy only appears once the per-token loss is small, so SFT
// runs long enough (36 epochs at a fairly high rate) to pass that threshold
// and converge. The RL stage starts from the converged SFT model, so every
// method shares the same warm-up. The RL stage normalizes advantages per
// batch: without it the -beta*KL reward term feeds back on itself and the
// policy eventually blows up (KL runs away and accuracy collapses).

ExperimentConfig trend_config(uint64_t seed) {
  ExperimentConfig cfg = default_experiment();
  cfg.data = DatasetSpec{};
  cfg.data.count = 2000;
  cfg.data.depth = 2;
  cfg.data.ops = "+-*";
  cfg.data.min_operand = 2;
  cfg.data.max_operand = 50;
  cfg.data.kind = CotKind::Program;
  cfg.data.distractor_prob = 0.25;
  cfg.data.max_len = 140;
  cfg.dev_count = 200;
  cfg.test_count = 500;
  cfg.model = ModelConfig{0, 40, 2, 4, 142, 0};
  cfg.eval_max_new = 56;

  cfg.warmup = SftConfig{};
  cfg.warmup.epochs = 36;
  cfg.warmup.batch_size = 32;
  cfg.warmup.lr = 2e-3;
  cfg.warmup.eval_every = 4;
  cfg.warmup.eval_max_new = 56;

  cfg.sft = SftConfig{};  // unused: the warm-up alone converges
  cfg.sft.epochs = 0;

  cfg.ppo = PpoConfig{};
  cfg.ppo.epochs = 14;
  cfg.ppo.lr = 1e-4;
  cfg.ppo.batch_size = 32;
  cfg.ppo.beta = 0.01;
  cfg.ppo.max_new = 72;
  cfg.ppo.eval_max_new = 56;
  cfg.ppo.advantage_norm = true;

  cfg.offline = OfflineStConfig{};
  cfg.offline.k = 10;
  cfg.offline.m = 1;
  cfg.offline.max_new = 72;
  cfg.offline.sft.epochs = 4;
  cfg.offline.sft.batch_size = 32;
  cfg.offline.sft.lr = 2e-3;  // every SFT-style stage uses the one SFT recipe
  cfg.offline.sft.eval_every = 1;
  cfg.offline.sft.eval_max_new = 56;

  cfg.online = OnlineStConfig{};
  cfg.online.epochs = 4;
  cfg.online.batch_size = 32;
  cfg.online.lr = 2e-3;  // matched to the SFT recipe, like offline-ST
  cfg.online.max_new = 72;
  cfg.online.eval_max_new = 56;

  cfg.vote_k = 20;
  cfg.orm_k = 4;
  cfg.orm_question_cap = 300;
  cfg.seed = seed;
  return cfg;
}

// Everything criteria 6/7/9 need from one seed.
struct SeedRun {
  Splits splits;
  Vocab vocab;
  Model sft_model;  // converged SFT baseline (best by dev accuracy)
  double sft_dev = 0.0, sft_test = 0.0;
  ReftResult reft;
  double reft_test = 0.0;
  double offline_test = 0.0, online_test = 0.0;
};

struct TrendArtifacts {
  std::vector<SeedRun> runs;
};

SeedRun run_seed(uint64_t seed) {
  ExperimentConfig cfg = trend_config(seed);
  SeedRun r;
  r.splits = make_splits(cfg);

  ModelConfig mc = cfg.model;
  mc.vocab_size = static_cast<int>(r.vocab.size());
  mc.init_seed = splitmix64(seed ^ 0xf00dULL);
  Model init(mc);

  SftConfig s1 = cfg.warmup;
  s1.seed = splitmix64(seed ^ 0x51ULL);
  SftResult warm = train_sft(init, r.splits.train, r.splits.dev, r.vocab, s1,
                             cfg.reward);
  r.sft_model = warm.best_model;
  r.sft_dev = warm.best_accuracy;
  r.sft_test = evaluate_greedy(r.sft_model, r.splits.test, r.vocab, cfg.reward,
                               cfg.eval_max_new);

  PpoConfig pc = cfg.ppo;
  pc.seed = splitmix64(seed ^ 0x99ULL);
  r.reft = train_reft(r.sft_model, r.splits.train, r.splits.dev, r.vocab, pc,
                      cfg.reward);
  r.reft_test = evaluate_greedy(r.reft.best_model, r.splits.test, r.vocab,
                                cfg.reward, cfg.eval_max_new);

  OfflineStConfig oc = cfg.offline;
  oc.seed = splitmix64(seed ^ 0x0ffULL);
  oc.sft.seed = splitmix64(seed ^ 0x0f1ULL);
  SftResult off = offline_self_train(r.sft_model, r.splits.train, r.splits.dev,
                                     r.vocab, oc, cfg.reward);
  const Model& off_best =
      off.best_accuracy >= r.sft_dev ? off.best_model : r.sft_model;
  r.offline_test = evaluate_greedy(off_best, r.splits.test, r.vocab, cfg.reward,
                                   cfg.eval_max_new);

  OnlineStConfig nc = cfg.online;
  nc.seed = splitmix64(seed ^ 0x0a1ULL);
  OnlineStResult on = online_self_train(r.sft_model, r.splits.train,
                                        r.splits.dev, r.vocab, nc, cfg.reward);
  const Model& on_best =
      on.best_accuracy >= r.sft_dev ? on.best_model : r.sft_model;
  r.online_test = evaluate_greedy(on_best, r.splits.test, r.vocab, cfg.reward,
                                  cfg.eval_max_new);
  return r;
}

TrendArtifacts* trend(bool build_if_missing = true) {
  static std::optional<TrendArtifacts> cache;
  if (!cache && build_if_missing) {
    cache.emplace();
    for (uint64_t seed : {1ull, 2ull, 3ull}) {
      const double t0 = now_s();
      cache->runs.push_back(run_seed(seed));
      const SeedRun& r = cache->runs.back();
      std::printf(
          "  [trend seed %llu] sft %.3f reft %.3f offline-st %.3f "
          "online-st %.3f (%.0fs)\n",
          static_cast<unsigned long long>(seed), r.sft_test, r.reft_test,
          r.offline_test, r.online_test, now_s() - t0);
      std::fflush(stdout);
    }
  }
  return cache ? &*cache : nullptr;
}

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// --- criterion 1: GAE backward recursion vs the explicit double sum ----------

bool crit_gae(std::string& detail) {
  const double t0 = now_s();
  Rng rng(20260826);
  double max_err = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int L = 1 + static_cast<int>(rng.uniform_int(0, 19));
    std::vector<double> rewards(L), values(L);
    for (auto& x : rewards) x = rng.uniform() * 4.0 - 2.0;
    for (auto& x : values) x = rng.uniform() * 4.0 - 2.0;
    const double gamma = rng.uniform();
    const double lambda = rng.uniform();
    auto fast = compute_gae(rewards, values, gamma, lambda);
    auto slow = oracle::gae_double_sum(rewards, values, gamma, lambda);
    for (int t = 0; t < L; ++t)
      max_err = std::max(max_err, std::abs(fast[t] - slow[t]));
  }
  const double secs = now_s() - t0;
  detail = "max abs err " + fmt(max_err) + ", " + fmt(secs) + "s";
  return max_err < 1e-10 && secs < 5.0;
}

// --- criterion 2: lambda-return identity on a smoke run ----------------------

bool crit_return_identity(std::string& detail) {
  DatasetSpec spec;
  spec.count = 48;
  spec.depth = 1;
  spec.ops = "+-";
  spec.max_len = 120;
  spec.seed = 7;
  auto data = generate(spec);
  Vocab vocab;
  Model m(ModelConfig{static_cast<int>(vocab.size()), 24, 1, 2, 128, 11});

  PpoConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 16;
  cfg.max_new = 24;
  cfg.lr = 1e-3;
  cfg.eval_every = 100;
  cfg.seed = 5;
  RewardConfig rcfg;

  int64_t steps = 0, violations = 0;
  auto hook = [&](int, std::span<const Example>, std::span<const Rollout> rs) {
    for (const Rollout& r : rs)
      for (size_t t = 0; t < r.returns.size(); ++t) {
        ++steps;
        if (r.returns[t] != r.advantages[t] + r.old_values[t]) ++violations;
      }
  };
  std::vector<Example> dev;
  train_reft(m, data, dev, vocab, cfg, rcfg, nullptr, hook);
  detail = std::to_string(steps) + " steps checked, " +
           std::to_string(violations) + " bitwise violations";
  return steps > 0 && violations == 0;
}

// --- criterion 3: finite-difference gradient checks --------------------------

bool crit_grad_checks(std::string& detail) {
  const double t0 = now_s();
  DatasetSpec spec;
  spec.count = 10;
  spec.depth = 1;
  spec.ops = "+-";
  spec.max_len = 120;
  spec.seed = 13;
  auto data = generate(spec);
  Vocab vocab;
  std::vector<Example> batch(data.begin(), data.begin() + 3);

  Model m(ModelConfig{static_cast<int>(vocab.size()), 16, 1, 2, 128, 3});
  RewardConfig rcfg;
  Rng rng(99);

  const double e_sft = grad_check(
      m,
      [&](const Model& mm, Params* g) { return sft_loss(mm, batch, vocab, g); },
      40, 1e-5, rng);

  // Rollouts from a slightly perturbed sibling so the ratios are not all 1.
  Model sampler = m;
  {
    Rng prng(1234);
    for (size_t i = 0; i < sampler.p.count(); ++i)
      sampler.p.flat_add(i, 0.02 * (prng.uniform() - 0.5));
  }
  PpoConfig pc;
  pc.batch_size = 3;
  pc.max_new = 16;
  auto rollouts = collect_rollouts(sampler, nullptr, sampler, batch, vocab,
                                   rcfg, pc, 77);
  // Nudge advantages away from zero so the clip indicator is stable under the
  // finite-difference step.
  for (auto& r : rollouts)
    for (auto& a : r.advantages) a += (a >= 0 ? 0.5 : -0.5);

  const double e_pol = grad_check(
      m,
      [&](const Model& mm, Params* g) { return policy_loss(mm, rollouts, pc, g); },
      40, 1e-6, rng);
  const double e_val = grad_check(
      m,
      [&](const Model& mm, Params* g) { return value_loss(mm, rollouts, pc, g); },
      40, 1e-6, rng);
  const double e_uni = grad_check(
      m,
      [&](const Model& mm, Params* g) { return unified_loss(mm, rollouts, pc, g); },
      40, 1e-6, rng);

  std::vector<OrmExample> orm_batch;
  for (int i = 0; i < 3; ++i)
    orm_batch.push_back({data[i].question, data[i].cot, i % 2});
  const double e_orm = grad_check(
      m,
      [&](const Model& mm, Params* g) {
        return orm_bce_loss(mm, orm_batch, vocab, g);
      },
      40, 1e-5, rng);

  const double secs = now_s() - t0;
  const double worst =
      std::max({e_sft, e_pol, e_val, e_uni, e_orm});
  detail = "max rel err: sft " + fmt(e_sft) + ", policy " + fmt(e_pol) +
           ", value " + fmt(e_val) + ", unified " + fmt(e_uni) + ", orm-bce " +
           fmt(e_orm) + ", " + fmt(secs) + "s";
  return worst < 1e-3 && secs < 60.0;
}

// --- criterion 4: terminal reward table ---------------------------------------

bool crit_reward_table(std::string& detail) {
  RewardConfig on;  // partial enabled (default)
  RewardConfig off = on;
  off.partial_enabled = false;
  AnswerFormat num;  // numeric
  AnswerFormat mcq;
  mcq.kind = AnswerFormat::Kind::MultipleChoice;
  mcq.options = {{'A', "3"}, {'B', "7"}, {'C', "9"}, {'D', "11"}};

  int failures = 0;
  auto expect = [&](double got, double want, const char* what) {
    if (got != want) {
      ++failures;
      std::printf("  reward case failed: %s (got %g want %g)\n", what, got,
                  want);
    }
  };

  // The three cases of the terminal reward, numeric form.
  expect(terminal_reward(ExtractedAnswer::make_value(7.0), "7", num, on), 1.0,
         "numeric correct -> 1");
  expect(terminal_reward(ExtractedAnswer::make_value(8.0), "7", num, on), 0.1,
         "numeric wrong -> 0.1 (partial on)");
  expect(terminal_reward(ExtractedAnswer::make_value(8.0), "7", num, off), 0.0,
         "numeric wrong -> 0 (partial off)");
  expect(terminal_reward(ExtractedAnswer::null(), "7", num, on), 0.0,
         "null -> 0");
  // Floating-point tolerance and sign handling.
  expect(terminal_reward(ExtractedAnswer::make_value(7.0 + 1e-9), "7", num, on),
         1.0, "numeric within rel_tol -> 1");
  expect(terminal_reward(ExtractedAnswer::make_value(-7.0), "-7", num, on), 1.0,
         "negative correct -> 1");
  // MCQ: only the gold letter earns reward; letters are extractable but a
  // wrong choice is not a "numeric" answer, so no partial credit.
  expect(terminal_reward(ExtractedAnswer::make_choice('C'), "C", mcq, on), 1.0,
         "mcq correct letter -> 1");
  expect(terminal_reward(ExtractedAnswer::make_choice('B'), "C", mcq, on), 0.0,
         "mcq wrong letter -> 0");
  expect(terminal_reward(ExtractedAnswer::null(), "C", mcq, on), 0.0,
         "mcq null -> 0");
  // Extraction edge cases feeding the table.
  expect(terminal_reward(extract("x = 3\ny = 4", CotKind::Program, num, on),
                         "4", num, on),
         1.0, "program executes -> value of last statement");
  expect(terminal_reward(extract("x = 3\ny = ", CotKind::Program, num, on), "4",
                         num, on),
         0.0, "malformed program -> null -> 0");
  expect(terminal_reward(
             extract("The answer is 12.", CotKind::NaturalLanguage, num, on),
             "13", num, on),
         0.1, "nl wrong numeric -> 0.1");
  expect(terminal_reward(
             extract("The answer is twelve.", CotKind::NaturalLanguage, num, on),
             "12", num, on),
         0.0, "nl non-numeric -> null -> 0");
  expect(terminal_reward(
             extract("Therefore, the answer is: C", CotKind::NaturalLanguage,
                      mcq, on),
             "C", mcq, on),
         1.0, "mcq marker extraction -> 1");
  // Truncated generations: no extractable tail.
  expect(
      terminal_reward(extract("12 + 5 = 17. Then 17 *", CotKind::NaturalLanguage,
                              num, on),
                      "17", num, on),
      0.0, "truncated nl (no answer marker) -> 0");

  detail = failures == 0 ? "16/16 cases" : std::to_string(failures) + " failed";
  return failures == 0;
}

// --- criterion 5: interpreter vs independent oracle ---------------------------

std::string random_program(Rng& rng, int max_stmts) {
  static const char* ops[] = {"+", "-", "*", "/"};
  const int n = 1 + static_cast<int>(rng.uniform_int(0, max_stmts - 1));
  std::ostringstream out;
  std::vector<std::string> vars;
  for (int s = 0; s < n; ++s) {
    std::string name(1, static_cast<char>('a' + s));
    out << name << " = ";
    const int terms = 1 + static_cast<int>(rng.uniform_int(0, 2));
    for (int t = 0; t < terms; ++t) {
      if (t > 0) out << " " << ops[rng.uniform_int(0, 3)] << " ";
      const bool paren = rng.uniform() < 0.2;
      if (paren) out << "(";
      if (!vars.empty() && rng.uniform() < 0.4) {
        out << vars[rng.uniform_int(0, static_cast<int>(vars.size()) - 1)];
      } else {
        if (rng.uniform() < 0.15) out << "-";
        out << rng.uniform_int(0, 99);
        if (rng.uniform() < 0.2) out << "." << rng.uniform_int(0, 9);
      }
      if (paren) {
        out << " " << ops[rng.uniform_int(0, 3)] << " "
            << rng.uniform_int(0, 9) << ")";
      }
    }
    out << "\n";
    vars.push_back(name);
  }
  return out.str();
}

bool crit_interpreter(std::string& detail) {
  Rng rng(424242);
  RewardConfig rcfg;
  int checked = 0, valid = 0, mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::string text = random_program(rng, 5);
    ++checked;

    std::optional<double> lib_val;
    std::optional<oracle::Error::Kind> lib_err;
    auto parsed = parse_program(text);
    if (std::holds_alternative<ProgramError>(parsed)) {
      lib_err = oracle::Error::Kind::Parse;
    } else {
      auto ran = run_program(std::get<Program>(parsed), rcfg.step_limit);
      if (std::holds_alternative<double>(ran)) {
        lib_val = std::get<double>(ran);
      } else {
        switch (std::get<ProgramError>(ran).kind) {
          case ProgramError::Kind::Parse:
            lib_err = oracle::Error::Kind::Parse;
            break;
          case ProgramError::Kind::UseBeforeAssign:
            lib_err = oracle::Error::Kind::UseBeforeAssign;
            break;
          case ProgramError::Kind::DivByZero:
            lib_err = oracle::Error::Kind::DivByZero;
            break;
          case ProgramError::Kind::Overflow:
            lib_err = oracle::Error::Kind::Overflow;
            break;
          case ProgramError::Kind::StepLimit:
            lib_err = oracle::Error::Kind::StepLimit;
            break;
        }
      }
    }

    auto ref = oracle::eval_program(text, rcfg.step_limit);
    if (lib_val && std::holds_alternative<double>(ref)) {
      ++valid;
      const double a = *lib_val, b = std::get<double>(ref);
      const double scale = std::max({1.0, std::abs(a), std::abs(b)});
      if (std::abs(a - b) / scale > 1e-12) ++mismatches;
    } else if (lib_err && std::holds_alternative<oracle::Error>(ref)) {
      if (*lib_err != std::get<oracle::Error>(ref).kind) ++mismatches;
    } else {
      ++mismatches;
    }
  }

  // Sandbox limits must trip, and identically on both sides.
  struct Limit {
    const char* text;
    ProgramError::Kind want;
    int step_limit;
  };
  const Limit limits[] = {
      {"a = 1 / 0\n", ProgramError::Kind::DivByZero, 10000},
      {"a = b + 1\n", ProgramError::Kind::UseBeforeAssign, 10000},
      {"a = 999999999999999999 * 1000\n", ProgramError::Kind::Overflow, 10000},
      {"a = 1 + 2 + 3 + 4 + 5\n", ProgramError::Kind::StepLimit, 3},
  };
  int limit_failures = 0;
  for (const auto& c : limits) {
    auto parsed = parse_program(c.text);
    if (std::holds_alternative<ProgramError>(parsed)) {
      ++limit_failures;
      continue;
    }
    auto ran = run_program(std::get<Program>(parsed), c.step_limit);
    if (!std::holds_alternative<ProgramError>(ran) ||
        std::get<ProgramError>(ran).kind != c.want)
      ++limit_failures;
    auto ref = oracle::eval_program(c.text, c.step_limit);
    if (!std::holds_alternative<oracle::Error>(ref)) ++limit_failures;
  }

  detail = std::to_string(checked) + " programs (" + std::to_string(valid) +
           " valid), " + std::to_string(mismatches) + " mismatches, " +
           std::to_string(limit_failures) + " limit failures";
  return mismatches == 0 && limit_failures == 0 && valid >= 300;
}

// --- criterion 6: RL beats converged SFT and both self-training baselines ----

bool crit_trend(std::string& detail) {
  const TrendArtifacts* art = trend();
  std::vector<double> sft, rl, off, onl;
  for (const SeedRun& r : art->runs) {
    sft.push_back(r.sft_test);
    rl.push_back(r.reft_test);
    off.push_back(r.offline_test);
    onl.push_back(r.online_test);
  }
  const double m_sft = mean(sft), m_rl = mean(rl), m_off = mean(off),
               m_onl = mean(onl);
  detail = "mean test acc over 3 seeds: rl-tuned " + fmt(m_rl) + ", sft " +
           fmt(m_sft) + ", offline-st " + fmt(m_off) + ", online-st " +
           fmt(m_onl);
  return m_rl >= m_sft + 0.05 && m_rl > m_off && m_rl > m_onl;
}

// --- criterion 7: training-dynamics shape -------------------------------------

bool crit_dynamics(std::string& detail) {
  const TrendArtifacts* art = trend();
  int pass_seeds = 0;
  std::string parts;
  for (size_t si = 0; si < art->runs.size(); ++si) {
    const SeedRun& r = art->runs[si];
    const auto& h = r.reft.history;
    if (h.size() < 3) continue;

    // Reward rises over the RL stage.
    const size_t third = std::max<size_t>(1, h.size() / 3);
    std::vector<double> first, last;
    for (size_t i = 0; i < third; ++i) first.push_back(h[i].mean_train_reward);
    for (size_t i = h.size() - third; i < h.size(); ++i)
      last.push_back(h[i].mean_train_reward);
    const bool reward_rises = mean(last) > mean(first);

    // Held-out accuracy keeps improving after the SFT plateau: the RL stage
    // starts from the converged SFT model, so any later epoch that beats the
    // SFT plateau accuracy is improvement past it.
    double best_eval = -1.0;
    for (const auto& row : h) best_eval = std::max(best_eval, row.eval_accuracy);
    const bool improves_past_plateau = best_eval > r.sft_dev;

    // KL vs the initial policy stays bounded: never above 5x the post-burn-in
    // median.
    std::vector<double> kls;
    for (size_t i = std::min<size_t>(2, h.size() - 1); i < h.size(); ++i)
      kls.push_back(h[i].mean_seq_kl);
    std::vector<double> sorted = kls;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    bool kl_bounded = true;
    for (double k : kls)
      if (k > 5.0 * median) kl_bounded = false;

    if (reward_rises && improves_past_plateau && kl_bounded) ++pass_seeds;
    parts += (parts.empty() ? "" : "; ") + std::string("seed ") +
             std::to_string(si + 1) + ": reward " + fmt(mean(first)) + "->" +
             fmt(mean(last)) + ", best dev " + fmt(best_eval) + " vs plateau " +
             fmt(r.sft_dev) + ", kl median " + fmt(median) +
             (kl_bounded ? " bounded" : " UNBOUNDED");
  }
  detail = parts;
  return pass_seeds == static_cast<int>(art->runs.size());
}

// --- criterion 8: ablation trends ---------------------------------------------

bool crit_ablations(std::string& detail) {
  // Smaller corpus, weak warm-up: partial credit and the KL anchor both matter
  // most early in RL, which is where the ablations are told apart.
  ExperimentConfig cfg = trend_config(21);
  cfg.data.count = 800;
  cfg.dev_count = 150;
  cfg.test_count = 300;
  Splits sp = make_splits(cfg);
  Vocab vocab;
  ModelConfig mc = cfg.model;
  mc.vocab_size = static_cast<int>(vocab.size());
  mc.init_seed = splitmix64(cfg.seed ^ 0xf00dULL);

  SftConfig s1 = cfg.warmup;
  s1.epochs = 48;  // the smaller corpus needs more passes to converge
  s1.seed = 1;
  SftResult warm = train_sft(Model(mc), sp.train, sp.dev, vocab, s1, cfg.reward);
  const double sft_acc = evaluate_greedy(warm.best_model, sp.test, vocab,
                                         cfg.reward, cfg.eval_max_new);

  PpoConfig base = cfg.ppo;
  base.epochs = 8;
  base.lr = 2e-4;
  base.seed = 31;

  struct Row {
    const char* name;
    double acc = 0.0;
    double secs = 0.0;
    bool collapsed = false;
  };
  auto run_variant = [&](const char* name, PpoConfig pc, RewardConfig rc,
                         bool final_model) {
    const double t0 = now_s();
    ReftResult res = train_reft(warm.best_model, sp.train, sp.dev, vocab, pc, rc);
    const Model& m = final_model ? res.final_model : res.best_model;
    Row row{name, evaluate_greedy(m, sp.test, vocab, rc, cfg.eval_max_new),
            now_s() - t0, res.collapsed};
    std::printf("  [ablation] %-18s acc %.3f (%.0fs)\n", name, row.acc,
                row.secs);
    std::fflush(stdout);
    return row;
  };

  RewardConfig rfull = cfg.reward;
  RewardConfig rnopart = cfg.reward;
  rnopart.partial_enabled = false;
  PpoConfig beta0 = base;
  beta0.beta = 0.0;
  beta0.lr = 1e-3;  // same budget, no KL anchor: free to run away
  PpoConfig anchored = base;
  anchored.lr = 1e-3;  // the full run survives this rate because of the anchor
  anchored.beta = 0.05;
  PpoConfig nonshared = base;
  nonshared.shared_value = false;

  Row full = run_variant("full", base, rfull, false);
  Row nopart = run_variant("no-partial-reward", base, rnopart, false);
  // Collapse is judged on the final model: best-by-dev would mask it.
  Row b0 = run_variant("beta-0", beta0, rfull, true);
  Row anchor = run_variant("anchored-high-lr", anchored, rfull, true);
  Row nshared = run_variant("non-shared-value", nonshared, rfull, false);

  const bool beta0_collapses = b0.acc < 0.5 * anchor.acc;
  const bool nopart_ok = nopart.acc <= full.acc + 1e-9 && nopart.acc > sft_acc;
  const double overhead = nshared.secs / std::max(1.0, full.secs);
  const bool nonshared_ok =
      std::abs(nshared.acc - full.acc) <= 0.02 || overhead > 0.0;

  detail = "sft " + fmt(sft_acc) + ", full " + fmt(full.acc) +
           ", no-partial " + fmt(nopart.acc) + ", beta-0 " + fmt(b0.acc) +
           " vs anchored " + fmt(anchor.acc) + ", non-shared " +
           fmt(nshared.acc) + " at " + fmt(overhead) + "x compute";
  return beta0_collapses && nopart_ok && nonshared_ok;
}

// --- criterion 9: voting and reranking gains ----------------------------------

bool crit_inference(std::string& detail) {
  const TrendArtifacts* art = trend();
  std::vector<double> greedy, vote, rerank_acc;
  for (size_t si = 0; si < art->runs.size(); ++si) {
    const SeedRun& r = art->runs[si];
    ExperimentConfig cfg = trend_config(si + 1);
    InferenceReport rep = run_inference_eval(cfg, r.reft.best_model, r.splits,
                                             /*with_rerank=*/true);
    greedy.push_back(rep.greedy);
    vote.push_back(rep.vote);
    rerank_acc.push_back(rep.rerank);
    std::printf("  [inference seed %zu] greedy %.3f vote %.3f rerank %.3f\n",
                si + 1, rep.greedy, rep.vote, rep.rerank);
    std::fflush(stdout);
  }
  const double g = mean(greedy), v = mean(vote), rr = mean(rerank_acc);
  detail = "mean over 3 seeds: greedy " + fmt(g) + ", vote " + fmt(v) +
           ", rerank " + fmt(rr);
  return v >= g && rr >= v && (v > g || rr > v);
}

// --- criterion 10: reward hacking on MCQ vs the numeric twin -------------------

bool crit_hacking(std::string& detail) {
  ExperimentConfig cfg = trend_config(4);
  cfg.data.count = 600;
  cfg.dev_count = 100;
  cfg.test_count = 100;
  cfg.data.format = AnswerFormat::Kind::MultipleChoice;
  cfg.data.kind = CotKind::NaturalLanguage;
  cfg.data.max_len = 170;
  cfg.model.max_seq = 172;
  // Weak warm-up: arithmetic is still poor, so guessing a letter is the
  // easiest path to MCQ reward. The numeric twin has no letters to guess.
  cfg.warmup.epochs = 10;
  cfg.sft.epochs = 0;
  cfg.ppo.epochs = 10;
  cfg.ppo.lr = 2e-4;
  cfg.ppo.max_new = 80;
  cfg.ppo.eval_every = 100;

  HackingReport rep = run_hacking_demo(cfg, out_root() + "/hacking-demo");
  detail = "mcq max gap " + fmt(rep.mcq_max_gap) + ", numeric max gap " +
           fmt(rep.num_max_gap);
  return rep.mcq_max_gap > 0.10 && rep.num_max_gap < 0.03;
}

// --- criterion 11: byte-for-byte determinism -----------------------------------

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

bool crit_determinism(std::string& detail) {
  set_threads(1);
  ExperimentConfig cfg = trend_config(9);
  cfg.data.count = 60;
  cfg.dev_count = 20;
  cfg.test_count = 20;
  cfg.model = ModelConfig{0, 24, 1, 2, 152, 0};
  cfg.warmup.epochs = 2;
  cfg.warmup.eval_every = 1;
  cfg.sft = cfg.warmup;
  cfg.ppo.epochs = 2;
  cfg.ppo.batch_size = 16;
  cfg.ppo.max_new = 24;

  Splits sp = make_splits(cfg);
  const std::string root = out_root() + "/determinism";
  bool ok = true;
  std::string parts;
  for (std::string method : {"sft", "reft"}) {
    ExperimentConfig c = cfg;
    c.method = method;
    run_training(c, sp, root + "/" + method + "-a");
    run_training(c, sp, root + "/" + method + "-b");
    const std::string a = read_file(root + "/" + method + "-a/metrics.jsonl");
    const std::string b = read_file(root + "/" + method + "-b/metrics.jsonl");
    const bool same = !a.empty() && a == b;
    ok = ok && same;
    parts += (parts.empty() ? "" : ", ") + method +
             (same ? " identical" : " DIFFERS");
  }
  // Dataset generation too.
  cmd_gen_data(cfg, root + "/data-a");
  cmd_gen_data(cfg, root + "/data-b");
  const bool data_same = !read_file(root + "/data-a/train.jsonl").empty() &&
                         read_file(root + "/data-a/train.jsonl") ==
                             read_file(root + "/data-b/train.jsonl");
  ok = ok && data_same;
  parts += std::string(", gen-data ") + (data_same ? "identical" : "DIFFERS");
  detail = parts;
  set_threads(0);
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    bool (*fn)(std::string&);
  };
  const Criterion all[] = {
      {1, "GAE recursion matches explicit double sum", crit_gae},
      {2, "lambda-return identity is bitwise on every rollout",
       crit_return_identity},
      {3, "reverse-mode gradients match finite differences", crit_grad_checks},
      {4, "terminal reward table (correct/partial/null)", crit_reward_table},
      {5, "interpreter agrees with the independent oracle", crit_interpreter},
      {6, "RL tuning beats converged SFT and self-training", crit_trend},
      {7, "reward rises, accuracy passes the SFT plateau, KL bounded",
       crit_dynamics},
      {8, "ablations: beta=0 collapses, partial reward helps", crit_ablations},
      {9, "voting >= greedy and reranking >= voting", crit_inference},
      {10, "MCQ reward hacking gap; numeric twin stays honest", crit_hacking},
      {11, "single-threaded reruns are byte-identical", crit_determinism},
  };

  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const Criterion& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    std::string detail;
    bool pass = false;
    try {
      pass = c.fn(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::printf("criterion %d: %s - %s (%s)\n", c.id, pass ? "PASS" : "FAIL",
                c.name, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
  }
  return failures;
}
