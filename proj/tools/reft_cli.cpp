#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "reft/harness.hpp"
#include "reft/kernels.hpp"

using namespace reft;

namespace {

// Shared option bundle: config file, seed/method overrides, output root.
struct Common {
  std::string config_path;
  std::string out_dir;
  std::string method;
  int64_t seed = -1;
  int threads = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config_path, "JSON experiment config")
      ->check(CLI::ExistingFile);
  cmd->add_option("-o,--out", c.out_dir,
                  "output directory (default $REFT_OUT_ROOT or ./runs)");
  cmd->add_option("--seed", c.seed, "override the config seed");
  cmd->add_option("--method", c.method, "sft | reft | offline-st | online-st");
  cmd->add_option("--threads", c.threads, "worker threads (0 = all)");
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = c.config_path.empty() ? default_experiment()
                                               : load_experiment(c.config_path);
  if (c.seed >= 0) cfg.seed = (uint64_t)c.seed;
  if (!c.method.empty()) cfg.method = c.method;
  if (!c.out_dir.empty()) {
    cfg.out_dir = c.out_dir;
  } else if (const char* root = std::getenv("REFT_OUT_ROOT")) {
    cfg.out_dir = root;
  }
  if (c.threads > 0) set_threads(c.threads);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic math CoT fine-tuning: SFT, PPO, self-training, reranking"};
  app.require_subcommand(1);

  Common gen_c, train_c, eval_c, hack_c, ablate_c;
  std::string data_dir, ckpt_path, eval_mode = "greedy", report_dir;

  auto* gen = app.add_subcommand("gen-data", "generate train/dev/test splits");
  add_common(gen, gen_c);

  auto* train = app.add_subcommand("train", "train one method on one seed");
  add_common(train, train_c);
  train->add_option("--data", data_dir, "directory from gen-data (default: regenerate)");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval, eval_c);
  eval->add_option("--checkpoint", ckpt_path, "policy checkpoint")->required();
  eval->add_option("--data", data_dir, "directory from gen-data (default: regenerate)");
  eval->add_option("--mode", eval_mode, "greedy | vote | rerank");

  auto* hack = app.add_subcommand("hacking-demo",
                                  "train on MCQ and its numeric twin; audit CoTs");
  add_common(hack, hack_c);

  auto* ablate = app.add_subcommand("ablate", "full / no-partial / beta=0 / non-shared");
  add_common(ablate, ablate_c);

  auto* report = app.add_subcommand("report", "summarize metrics files");
  report->add_option("dir", report_dir, "directory to scan")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      auto cfg = resolve(gen_c);
      return cmd_gen_data(cfg, cfg.out_dir);
    }
    if (train->parsed()) {
      auto cfg = resolve(train_c);
      return cmd_train(cfg, data_dir,
                       cfg.out_dir + "/" + cfg.method + "-seed" +
                           std::to_string(cfg.seed));
    }
    if (eval->parsed()) {
      auto cfg = resolve(eval_c);
      return cmd_eval(cfg, ckpt_path, data_dir, eval_mode);
    }
    if (hack->parsed()) {
      auto cfg = resolve(hack_c);
      if (cfg.data.format != AnswerFormat::Kind::MultipleChoice) {
        cfg.data.format = AnswerFormat::Kind::MultipleChoice;
        cfg.data.kind = CotKind::NaturalLanguage;
      }
      return cmd_hacking_demo(cfg, cfg.out_dir + "/hacking-demo");
    }
    if (ablate->parsed()) {
      auto cfg = resolve(ablate_c);
      return cmd_ablate(cfg, cfg.out_dir + "/ablations");
    }
    if (report->parsed()) return cmd_report(report_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
