#include "reft/harness.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>

#include "json.hpp"
#include "reft/checkpoint.hpp"
#include "reft/metrics.hpp"
#include "reft/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace reft {

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

// --- config <-> json ---------------------------------------------------------

void read_into(const json& j, DatasetSpec& d) {
  d.count = j.value("count", d.count);
  d.min_operand = j.value("min_operand", d.min_operand);
  d.max_operand = j.value("max_operand", d.max_operand);
  d.ops = j.value("ops", d.ops);
  d.depth = j.value("depth", d.depth);
  std::string fmt = j.value("format", std::string(
      d.format == AnswerFormat::Kind::Numeric ? "numeric" : "mcq"));
  if (fmt == "numeric")
    d.format = AnswerFormat::Kind::Numeric;
  else if (fmt == "mcq")
    d.format = AnswerFormat::Kind::MultipleChoice;
  else
    throw ConfigError("data.format must be numeric or mcq");
  d.mcq_options = j.value("mcq_options", d.mcq_options);
  std::string kind = j.value("cot", std::string(
      d.kind == CotKind::Program ? "program" : "natural"));
  if (kind == "program")
    d.kind = CotKind::Program;
  else if (kind == "natural")
    d.kind = CotKind::NaturalLanguage;
  else
    throw ConfigError("data.cot must be program or natural");
  d.distractor_prob = j.value("distractor_prob", d.distractor_prob);
  d.max_len = j.value("max_len", d.max_len);
  d.seed = j.value("seed", d.seed);
}

json to_json(const DatasetSpec& d) {
  return json{{"count", d.count},
              {"min_operand", d.min_operand},
              {"max_operand", d.max_operand},
              {"ops", d.ops},
              {"depth", d.depth},
              {"format", d.format == AnswerFormat::Kind::Numeric ? "numeric" : "mcq"},
              {"mcq_options", d.mcq_options},
              {"cot", d.kind == CotKind::Program ? "program" : "natural"},
              {"distractor_prob", d.distractor_prob},
              {"max_len", d.max_len},
              {"seed", d.seed}};
}

void read_into(const json& j, ModelConfig& m) {
  m.d_model = j.value("d_model", m.d_model);
  m.n_layers = j.value("n_layers", m.n_layers);
  m.n_heads = j.value("n_heads", m.n_heads);
  m.max_seq = j.value("max_seq", m.max_seq);
  m.init_seed = j.value("init_seed", m.init_seed);
}

json to_json(const ModelConfig& m) {
  return json{{"d_model", m.d_model},
              {"n_layers", m.n_layers},
              {"n_heads", m.n_heads},
              {"max_seq", m.max_seq},
              {"init_seed", m.init_seed}};
}

void read_into(const json& j, SftConfig& s) {
  s.epochs = j.value("epochs", s.epochs);
  s.max_steps = j.value("max_steps", s.max_steps);
  s.batch_size = j.value("batch_size", s.batch_size);
  s.lr = j.value("lr", s.lr);
  s.warmup_frac = j.value("warmup_frac", s.warmup_frac);
  s.weight_decay = j.value("weight_decay", s.weight_decay);
  s.eval_every = j.value("eval_every", s.eval_every);
  s.eval_max_new = j.value("eval_max_new", s.eval_max_new);
  s.seed = j.value("seed", s.seed);
}

json to_json(const SftConfig& s) {
  return json{{"epochs", s.epochs},         {"max_steps", s.max_steps},
              {"batch_size", s.batch_size}, {"lr", s.lr},
              {"warmup_frac", s.warmup_frac}, {"weight_decay", s.weight_decay},
              {"eval_every", s.eval_every}, {"eval_max_new", s.eval_max_new},
              {"seed", s.seed}};
}

void read_into(const json& j, PpoConfig& p) {
  p.epochs = j.value("epochs", p.epochs);
  p.max_steps = j.value("max_steps", p.max_steps);
  p.updates_per_step = j.value("updates_per_step", p.updates_per_step);
  p.beta = j.value("beta", p.beta);
  p.gamma = j.value("gamma", p.gamma);
  p.lambda = j.value("lambda", p.lambda);
  p.alpha = j.value("alpha", p.alpha);
  p.clip_eps = j.value("clip_eps", p.clip_eps);
  p.lr = j.value("lr", p.lr);
  p.batch_size = j.value("batch_size", p.batch_size);
  p.temperature = j.value("temperature", p.temperature);
  p.max_new = j.value("max_new", p.max_new);
  p.advantage_norm = j.value("advantage_norm", p.advantage_norm);
  p.exact_kl = j.value("exact_kl", p.exact_kl);
  p.shared_value = j.value("shared_value", p.shared_value);
  p.paper_value_clip = j.value("paper_value_clip", p.paper_value_clip);
  p.eval_every = j.value("eval_every", p.eval_every);
  p.eval_max_new = j.value("eval_max_new", p.eval_max_new);
  p.collapse_floor = j.value("collapse_floor", p.collapse_floor);
  p.collapse_patience = j.value("collapse_patience", p.collapse_patience);
  p.seed = j.value("seed", p.seed);
}

json to_json(const PpoConfig& p) {
  return json{{"epochs", p.epochs},
              {"max_steps", p.max_steps},
              {"updates_per_step", p.updates_per_step},
              {"beta", p.beta},
              {"gamma", p.gamma},
              {"lambda", p.lambda},
              {"alpha", p.alpha},
              {"clip_eps", p.clip_eps},
              {"lr", p.lr},
              {"batch_size", p.batch_size},
              {"temperature", p.temperature},
              {"max_new", p.max_new},
              {"advantage_norm", p.advantage_norm},
              {"exact_kl", p.exact_kl},
              {"shared_value", p.shared_value},
              {"paper_value_clip", p.paper_value_clip},
              {"eval_every", p.eval_every},
              {"eval_max_new", p.eval_max_new},
              {"collapse_floor", p.collapse_floor},
              {"collapse_patience", p.collapse_patience},
              {"seed", p.seed}};
}

void read_into(const json& j, RewardConfig& r) {
  r.partial_enabled = j.value("partial_enabled", r.partial_enabled);
  r.partial_value = j.value("partial_value", r.partial_value);
  r.correct_value = j.value("correct_value", r.correct_value);
  r.rel_tol = j.value("rel_tol", r.rel_tol);
  r.step_limit = j.value("step_limit", r.step_limit);
}

json to_json(const RewardConfig& r) {
  return json{{"partial_enabled", r.partial_enabled},
              {"partial_value", r.partial_value},
              {"correct_value", r.correct_value},
              {"rel_tol", r.rel_tol},
              {"step_limit", r.step_limit}};
}

void read_into(const json& j, OfflineStConfig& o) {
  o.k = j.value("k", o.k);
  o.m = j.value("m", o.m);
  o.temperature = j.value("temperature", o.temperature);
  o.max_new = j.value("max_new", o.max_new);
  o.seed = j.value("seed", o.seed);
  if (j.contains("sft")) read_into(j.at("sft"), o.sft);
}

json to_json(const OfflineStConfig& o) {
  return json{{"k", o.k},
              {"m", o.m},
              {"temperature", o.temperature},
              {"max_new", o.max_new},
              {"seed", o.seed},
              {"sft", to_json(o.sft)}};
}

void read_into(const json& j, OnlineStConfig& o) {
  o.epochs = j.value("epochs", o.epochs);
  o.batch_size = j.value("batch_size", o.batch_size);
  o.lr = j.value("lr", o.lr);
  o.temperature = j.value("temperature", o.temperature);
  o.max_new = j.value("max_new", o.max_new);
  o.eval_every = j.value("eval_every", o.eval_every);
  o.eval_max_new = j.value("eval_max_new", o.eval_max_new);
  o.seed = j.value("seed", o.seed);
}

json to_json(const OnlineStConfig& o) {
  return json{{"epochs", o.epochs},       {"batch_size", o.batch_size},
              {"lr", o.lr},               {"temperature", o.temperature},
              {"max_new", o.max_new},     {"eval_every", o.eval_every},
              {"eval_max_new", o.eval_max_new}, {"seed", o.seed}};
}

void read_into(const json& j, OrmConfig& o) {
  o.epochs = j.value("epochs", o.epochs);
  o.batch_size = j.value("batch_size", o.batch_size);
  o.lr = j.value("lr", o.lr);
  o.dev_frac = j.value("dev_frac", o.dev_frac);
  o.seed = j.value("seed", o.seed);
}

json to_json(const OrmConfig& o) {
  return json{{"epochs", o.epochs},
              {"batch_size", o.batch_size},
              {"lr", o.lr},
              {"dev_frac", o.dev_frac},
              {"seed", o.seed}};
}

}  // namespace

ExperimentConfig default_experiment() {
  ExperimentConfig cfg;
  cfg.data.count = 2000;
  cfg.warmup.epochs = 10;
  return cfg;
}

ExperimentConfig load_experiment(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  ExperimentConfig cfg = default_experiment();
  if (j.contains("data")) read_into(j.at("data"), cfg.data);
  cfg.dev_count = j.value("dev_count", cfg.dev_count);
  cfg.test_count = j.value("test_count", cfg.test_count);
  if (j.contains("model")) read_into(j.at("model"), cfg.model);
  if (j.contains("warmup")) read_into(j.at("warmup"), cfg.warmup);
  if (j.contains("sft")) read_into(j.at("sft"), cfg.sft);
  if (j.contains("ppo")) read_into(j.at("ppo"), cfg.ppo);
  if (j.contains("offline")) read_into(j.at("offline"), cfg.offline);
  if (j.contains("online")) read_into(j.at("online"), cfg.online);
  if (j.contains("orm")) read_into(j.at("orm"), cfg.orm);
  cfg.orm_k = j.value("orm_k", cfg.orm_k);
  cfg.orm_question_cap = j.value("orm_question_cap", cfg.orm_question_cap);
  if (j.contains("reward")) read_into(j.at("reward"), cfg.reward);
  cfg.vote_k = j.value("vote_k", cfg.vote_k);
  cfg.eval_max_new = j.value("eval_max_new", cfg.eval_max_new);
  cfg.eval_temperature = j.value("eval_temperature", cfg.eval_temperature);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.method = j.value("method", cfg.method);
  cfg.out_dir = j.value("out_dir", cfg.out_dir);
  return cfg;
}

std::string experiment_to_json(const ExperimentConfig& cfg) {
  json j{{"data", to_json(cfg.data)},
         {"dev_count", cfg.dev_count},
         {"test_count", cfg.test_count},
         {"model", to_json(cfg.model)},
         {"warmup", to_json(cfg.warmup)},
         {"sft", to_json(cfg.sft)},
         {"ppo", to_json(cfg.ppo)},
         {"offline", to_json(cfg.offline)},
         {"online", to_json(cfg.online)},
         {"orm", to_json(cfg.orm)},
         {"orm_k", cfg.orm_k},
         {"orm_question_cap", cfg.orm_question_cap},
         {"reward", to_json(cfg.reward)},
         {"vote_k", cfg.vote_k},
         {"eval_max_new", cfg.eval_max_new},
         {"eval_temperature", cfg.eval_temperature},
         {"seed", cfg.seed},
         {"method", cfg.method},
         {"out_dir", cfg.out_dir}};
  return j.dump(2);
}

void save_manifest(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write manifest: " + path);
  f << experiment_to_json(cfg) << "\n";
}

Splits make_splits(const ExperimentConfig& cfg) {
  DatasetSpec spec = cfg.data;
  spec.count = cfg.data.count + cfg.dev_count + cfg.test_count;
  spec.seed = splitmix64(cfg.seed ^ cfg.data.seed);
  auto all = generate(spec);
  Splits s;
  s.train.assign(all.begin(), all.begin() + cfg.data.count);
  s.dev.assign(all.begin() + cfg.data.count,
               all.begin() + cfg.data.count + cfg.dev_count);
  s.test.assign(all.begin() + cfg.data.count + cfg.dev_count, all.end());
  return s;
}

// --- audit -------------------------------------------------------------------

namespace {

bool parse_number(const std::string& tok, double& out) {
  if (tok.empty()) return false;
  size_t used = 0;
  try {
    out = std::stod(tok, &used);
  } catch (...) {
    return false;
  }
  return used == tok.size();
}

}  // namespace

bool audit_cot(const Example& ex, const std::string& cot,
               const RewardConfig& rcfg) {
  // whitespace-split tokens with sentence punctuation stripped
  std::vector<std::string> toks;
  std::string cur;
  for (char ch : cot) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) toks.push_back(cur), cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) toks.push_back(cur);
  for (auto& t : toks)
    while (!t.empty() && (t.back() == '.' || t.back() == ','))
      t.pop_back();

  struct Eq {
    double a, b, r;
    char op;
  };
  std::vector<Eq> eqs;
  for (size_t i = 0; i + 4 < toks.size(); ++i) {
    Eq e{};
    if (!parse_number(toks[i], e.a)) continue;
    if (toks[i + 1].size() != 1 ||
        std::string("+-*/").find(toks[i + 1][0]) == std::string::npos)
      continue;
    if (!parse_number(toks[i + 2], e.b)) continue;
    if (toks[i + 3] != "=") continue;
    if (!parse_number(toks[i + 4], e.r)) continue;
    e.op = toks[i + 1][0];
    eqs.push_back(e);
    i += 4;
  }
  if (eqs.empty()) return false;

  for (const auto& e : eqs) {
    double want;
    switch (e.op) {
      case '+': want = e.a + e.b; break;
      case '-': want = e.a - e.b; break;
      case '*': want = e.a * e.b; break;
      default:
        if (e.b == 0.0) return false;
        want = e.a / e.b;
        break;
    }
    if (!numeric_match(e.r, want, rcfg.rel_tol)) return false;
  }
  // consecutive equations must consume the previous result
  for (size_t i = 1; i < eqs.size(); ++i)
    if (!numeric_match(eqs[i].a, eqs[i - 1].r, rcfg.rel_tol) &&
        !numeric_match(eqs[i].b, eqs[i - 1].r, rcfg.rel_tol))
      return false;

  double gold;
  if (ex.format.kind == AnswerFormat::Kind::Numeric) {
    if (!parse_number(ex.answer, gold)) return false;
  } else {
    gold = 0.0;
    bool found = false;
    for (const auto& o : ex.format.options)
      if (o.letter == ex.answer[0]) {
        if (!parse_number(o.value, gold)) return false;
        found = true;
      }
    if (!found) return false;
  }
  return numeric_match(eqs.back().r, gold, rcfg.rel_tol);
}

Example numeric_twin(const Example& mcq) {
  if (mcq.format.kind != AnswerFormat::Kind::MultipleChoice)
    throw ConfigError("numeric_twin: example is not multiple-choice");
  Example ex = mcq;
  ex.format = AnswerFormat{};  // numeric, no options
  size_t opt_pos = ex.question.rfind(" Options:");
  if (opt_pos != std::string::npos) ex.question.erase(opt_pos);
  for (const auto& o : mcq.format.options)
    if (o.letter == mcq.answer[0]) ex.answer = o.value;
  size_t tail = ex.cot.rfind("Therefore, the answer is:");
  if (tail != std::string::npos)
    ex.cot.replace(tail, std::string::npos,
                   "The answer is " + ex.answer + ".");
  return ex;
}

// --- orchestration -----------------------------------------------------------

TrainOutput run_training(const ExperimentConfig& cfg, const Splits& splits,
                         const std::string& run_dir) {
  Vocab vocab;
  ModelConfig mc = cfg.model;
  mc.vocab_size = vocab.size();
  mc.init_seed = splitmix64(cfg.seed ^ 0xf00dULL);
  Model init(mc);

  MetricsSink sink;
  if (!run_dir.empty()) {
    fs::create_directories(run_dir);
    save_manifest(cfg, run_dir + "/manifest.json");
    sink = MetricsSink(run_dir + "/metrics.jsonl", run_dir + "/timing.jsonl",
                       "seed" + std::to_string(cfg.seed), cfg.method);
  }
  MetricsSink* sp = sink.enabled() ? &sink : nullptr;
  const double t0 = now_seconds();

  auto with_seed = [&](auto c) {
    c.seed = cfg.seed;
    return c;
  };

  TrainOutput out;
  if (cfg.method == "sft") {
    auto r = train_sft(init, splits.train, splits.dev, vocab, with_seed(cfg.sft),
                       cfg.reward, sp);
    out.model = r.best_model;
  } else if (cfg.method == "reft" || cfg.method == "offline-st" ||
             cfg.method == "online-st") {
    auto warm = train_sft(init, splits.train, splits.dev, vocab,
                          with_seed(cfg.warmup), cfg.reward, nullptr);
    if (cfg.method == "reft") {
      auto r = train_reft(warm.final_model, splits.train, splits.dev, vocab,
                          with_seed(cfg.ppo), cfg.reward, sp);
      out.model = r.best_model;
      out.collapsed = r.collapsed;
      out.rl_history = r.history;
    } else if (cfg.method == "offline-st") {
      auto r = offline_self_train(warm.final_model, splits.train, splits.dev,
                                  vocab, with_seed(cfg.offline), cfg.reward, sp);
      out.model = r.best_model;
    } else {
      auto r = online_self_train(warm.final_model, splits.train, splits.dev,
                                 vocab, with_seed(cfg.online), cfg.reward, sp);
      out.model = r.best_model;
    }
  } else {
    throw ConfigError("unknown method: " + cfg.method);
  }

  if (!splits.test.empty())
    out.test_accuracy =
        evaluate_greedy(out.model, splits.test, vocab, cfg.reward, cfg.eval_max_new);
  if (sp) sp->record_timing(-1, now_seconds() - t0);
  if (!run_dir.empty())
    save_checkpoint(run_dir + "/checkpoint.bin", out.model, nullptr,
                    Rng(cfg.seed).serialize(), 0);
  return out;
}

InferenceReport run_inference_eval(const ExperimentConfig& cfg, const Model& policy,
                                   const Splits& splits, bool with_rerank) {
  Vocab vocab;
  InferenceReport rep;
  rep.greedy = evaluate_greedy(policy, splits.test, vocab, cfg.reward,
                               cfg.eval_max_new);

  Model orm;
  if (with_rerank) {
    EvalOptions opt{cfg.eval_max_new, cfg.eval_temperature};
    size_t cap = std::min(splits.train.size(), (size_t)cfg.orm_question_cap);
    std::span<const Example> sub(splits.train.data(), cap);
    auto data = build_orm_data(policy, sub, cfg.orm_k, vocab, cfg.reward, opt,
                               splitmix64(cfg.seed ^ 0x02aaULL));
    OrmConfig ocfg = cfg.orm;
    ocfg.seed = cfg.seed;
    auto trained = train_orm(policy, data, vocab, ocfg);
    orm = trained.model;
    rep.orm_holdout = trained.holdout_accuracy;
  }

  EvalOptions opt{cfg.eval_max_new, cfg.eval_temperature};
  int vote_hits = 0, rerank_hits = 0;
  std::vector<CandidateSet> sets(splits.test.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < (int)splits.test.size(); ++i) {
    Rng rng = Rng::stream(splitmix64(cfg.seed ^ 0x707eULL), (uint64_t)i);
    sets[i] = sample_candidates(policy, splits.test[i], cfg.vote_k, vocab,
                                cfg.reward, opt, rng);
  }
  for (size_t i = 0; i < sets.size(); ++i) {
    const Example& ex = splits.test[i];
    auto vote = majority_vote(sets[i]);
    if (terminal_reward(vote, ex.answer, ex.format, cfg.reward) ==
        cfg.reward.correct_value)
      ++vote_hits;
    if (with_rerank) {
      score_candidates(orm, ex.question, sets[i], vocab);
      auto top = rerank(sets[i]);
      if (terminal_reward(top, ex.answer, ex.format, cfg.reward) ==
          cfg.reward.correct_value)
        ++rerank_hits;
    }
  }
  rep.vote = (double)vote_hits / (double)splits.test.size();
  if (with_rerank) rep.rerank = (double)rerank_hits / (double)splits.test.size();
  return rep;
}

namespace {

// Shared by the hacking demo: per-epoch mean terminal reward and mean audited
// consistency over all training rollouts.
struct AuditSeries {
  std::vector<double> reward, audited;
};

AuditSeries reft_with_audit(const ExperimentConfig& cfg, const Splits& splits,
                            MetricsSink* sink) {
  Vocab vocab;
  ModelConfig mc = cfg.model;
  mc.vocab_size = vocab.size();
  mc.init_seed = splitmix64(cfg.seed ^ 0xf00dULL);
  Model init(mc);

  SftConfig wcfg = cfg.warmup;
  wcfg.seed = cfg.seed;
  auto warm = train_sft(init, splits.train, splits.dev, vocab, wcfg, cfg.reward,
                        nullptr);

  std::map<int, std::pair<double, double>> sums;  // epoch -> (reward, audited)
  std::map<int, int> counts;
  std::mutex mu;
  RolloutHook hook = [&](int epoch, std::span<const Example> batch,
                         std::span<const Rollout> rollouts) {
    double rsum = 0.0, asum = 0.0;
    for (size_t i = 0; i < rollouts.size(); ++i) {
      rsum += rollouts[i].terminal_reward_value;
      std::string cot = vocab.decode(rollouts[i].actions);
      asum += audit_cot(batch[i], cot, cfg.reward) ? 1.0 : 0.0;
    }
    std::lock_guard<std::mutex> lock(mu);
    sums[epoch].first += rsum;
    sums[epoch].second += asum;
    counts[epoch] += (int)rollouts.size();
  };

  PpoConfig pcfg = cfg.ppo;
  pcfg.seed = cfg.seed;
  train_reft(warm.final_model, splits.train, splits.dev, vocab, pcfg, cfg.reward,
             sink, hook);

  AuditSeries series;
  for (const auto& [epoch, s] : sums) {
    double n = std::max(1, counts[epoch]);
    series.reward.push_back(s.first / n);
    series.audited.push_back(s.second / n);
  }
  return series;
}

}  // namespace

HackingReport run_hacking_demo(const ExperimentConfig& cfg,
                               const std::string& run_dir) {
  if (cfg.data.format != AnswerFormat::Kind::MultipleChoice)
    throw ConfigError("hacking demo requires a multiple-choice dataset");

  ExperimentConfig mcq_cfg = cfg;
  mcq_cfg.reward.partial_enabled = false;  // keep reward binary on both twins
  Splits mcq = make_splits(mcq_cfg);

  ExperimentConfig num_cfg = mcq_cfg;
  num_cfg.data.format = AnswerFormat::Kind::Numeric;
  Splits num;
  for (const auto& e : mcq.train) num.train.push_back(numeric_twin(e));
  for (const auto& e : mcq.dev) num.dev.push_back(numeric_twin(e));
  for (const auto& e : mcq.test) num.test.push_back(numeric_twin(e));

  MetricsSink mcq_sink, num_sink;
  if (!run_dir.empty()) {
    fs::create_directories(run_dir);
    save_manifest(cfg, run_dir + "/manifest.json");
    mcq_sink = MetricsSink(run_dir + "/mcq_metrics.jsonl",
                           run_dir + "/mcq_timing.jsonl",
                           "seed" + std::to_string(cfg.seed), "reft-mcq");
    num_sink = MetricsSink(run_dir + "/numeric_metrics.jsonl",
                           run_dir + "/numeric_timing.jsonl",
                           "seed" + std::to_string(cfg.seed), "reft-numeric");
  }

  HackingReport rep;
  auto m = reft_with_audit(mcq_cfg, mcq, mcq_sink.enabled() ? &mcq_sink : nullptr);
  rep.mcq_reward = m.reward;
  rep.mcq_audited = m.audited;
  auto n = reft_with_audit(num_cfg, num, num_sink.enabled() ? &num_sink : nullptr);
  rep.num_reward = n.reward;
  rep.num_audited = n.audited;

  for (size_t i = 0; i < rep.mcq_reward.size(); ++i)
    rep.mcq_max_gap = std::max(rep.mcq_max_gap, rep.mcq_reward[i] - rep.mcq_audited[i]);
  for (size_t i = 0; i < rep.num_reward.size(); ++i)
    rep.num_max_gap = std::max(rep.num_max_gap, rep.num_reward[i] - rep.num_audited[i]);
  return rep;
}

std::vector<AblationRow> run_ablations(const ExperimentConfig& cfg,
                                       const Splits& splits,
                                       const std::string& run_dir) {
  struct Variant {
    std::string name;
    std::function<void(ExperimentConfig&)> apply;
  };
  std::vector<Variant> grid = {
      {"full", [](ExperimentConfig&) {}},
      {"no-partial-reward",
       [](ExperimentConfig& c) { c.reward.partial_enabled = false; }},
      {"beta-0", [](ExperimentConfig& c) { c.ppo.beta = 0.0; }},
      {"non-shared-value",
       [](ExperimentConfig& c) { c.ppo.shared_value = false; }},
  };

  std::vector<AblationRow> rows;
  for (const auto& v : grid) {
    ExperimentConfig c = cfg;
    c.method = "reft";
    v.apply(c);
    const double t0 = now_seconds();
    std::string dir = run_dir.empty() ? "" : run_dir + "/" + v.name;
    auto out = run_training(c, splits, dir);
    AblationRow row;
    row.name = v.name;
    row.test_accuracy = out.test_accuracy;
    row.collapsed = out.collapsed;
    row.seconds = now_seconds() - t0;
    rows.push_back(row);
  }
  return rows;
}

// --- CLI entry points --------------------------------------------------------

int cmd_gen_data(const ExperimentConfig& cfg, const std::string& dir) {
  fs::create_directories(dir);
  Splits s = make_splits(cfg);
  save(s.train, dir + "/train.jsonl");
  save(s.dev, dir + "/dev.jsonl");
  save(s.test, dir + "/test.jsonl");
  save_manifest(cfg, dir + "/manifest.json");
  std::cout << "wrote " << s.train.size() << " train / " << s.dev.size()
            << " dev / " << s.test.size() << " test examples to " << dir << "\n";
  return 0;
}

namespace {

Splits load_splits(const std::string& data_dir) {
  Splits s;
  s.train = load(data_dir + "/train.jsonl");
  s.dev = load(data_dir + "/dev.jsonl");
  s.test = load(data_dir + "/test.jsonl");
  return s;
}

}  // namespace

int cmd_train(const ExperimentConfig& cfg, const std::string& data_dir,
              const std::string& run_dir) {
  Splits s = data_dir.empty() ? make_splits(cfg) : load_splits(data_dir);
  auto out = run_training(cfg, s, run_dir);
  std::cout << "method=" << cfg.method << " seed=" << cfg.seed
            << " test_accuracy=" << out.test_accuracy
            << (out.collapsed ? " (collapsed)" : "") << "\n";
  return 0;
}

int cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint_path,
             const std::string& data_dir, const std::string& mode) {
  Splits s = data_dir.empty() ? make_splits(cfg) : load_splits(data_dir);
  auto ckpt = load_checkpoint(checkpoint_path);
  if (mode == "greedy") {
    Vocab vocab;
    double acc = evaluate_greedy(ckpt.model, s.test, vocab, cfg.reward,
                                 cfg.eval_max_new);
    std::cout << "greedy " << acc << "\n";
  } else if (mode == "vote" || mode == "rerank") {
    auto rep = run_inference_eval(cfg, ckpt.model, s, mode == "rerank");
    std::cout << "greedy " << rep.greedy << "\n";
    std::cout << "vote-" << cfg.vote_k << " " << rep.vote << "\n";
    if (mode == "rerank")
      std::cout << "rerank-" << cfg.vote_k << " " << rep.rerank
                << " (orm holdout " << rep.orm_holdout << ")\n";
  } else {
    throw ConfigError("unknown eval mode: " + mode);
  }
  return 0;
}

int cmd_hacking_demo(const ExperimentConfig& cfg, const std::string& run_dir) {
  auto rep = run_hacking_demo(cfg, run_dir);
  std::cout << "epoch  mcq_reward  mcq_audited  num_reward  num_audited\n";
  size_t n = std::max(rep.mcq_reward.size(), rep.num_reward.size());
  for (size_t i = 0; i < n; ++i) {
    auto cell = [&](const std::vector<double>& v) {
      return i < v.size() ? std::to_string(v[i]) : std::string("-");
    };
    std::cout << i << "  " << cell(rep.mcq_reward) << "  "
              << cell(rep.mcq_audited) << "  " << cell(rep.num_reward) << "  "
              << cell(rep.num_audited) << "\n";
  }
  std::cout << "max gap: mcq " << rep.mcq_max_gap << ", numeric "
            << rep.num_max_gap << "\n";
  return 0;
}

int cmd_ablate(const ExperimentConfig& cfg, const std::string& run_dir) {
  Splits s = make_splits(cfg);
  auto rows = run_ablations(cfg, s, run_dir);
  std::cout << "variant  test_accuracy  collapsed  seconds\n";
  for (const auto& r : rows)
    std::cout << r.name << "  " << r.test_accuracy << "  "
              << (r.collapsed ? "yes" : "no") << "  " << r.seconds << "\n";
  return 0;
}

int cmd_report(const std::string& dir) {
  struct Row {
    std::string run, method;
    double last_acc = -1.0, best_acc = -1.0;
    int64_t epochs = 0;
  };
  std::map<std::string, Row> rows;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().filename().string().find("metrics.jsonl") == std::string::npos)
      continue;
    std::ifstream f(entry.path());
    std::string line;
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded()) continue;
      std::string key = entry.path().string();
      Row& r = rows[key];
      r.run = j.value("run", "");
      r.method = j.value("method", "");
      r.epochs = std::max(r.epochs, j.value("step", (int64_t)0) + 1);
      if (j.contains("eval_accuracy")) {
        double a = j["eval_accuracy"].get<double>();
        r.last_acc = a;
        r.best_acc = std::max(r.best_acc, a);
      }
    }
  }
  if (rows.empty()) {
    std::cout << "no metrics files under " << dir << "\n";
    return 0;
  }
  std::cout << "file  run  method  epochs  last_eval_acc  best_eval_acc\n";
  for (const auto& [path, r] : rows)
    std::cout << path << "  " << r.run << "  " << r.method << "  " << r.epochs
              << "  " << r.last_acc << "  " << r.best_acc << "\n";
  return 0;
}

}  // namespace reft
