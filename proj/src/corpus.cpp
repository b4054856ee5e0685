#include "reft/corpus.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "reft/rng.hpp"

namespace reft {

namespace {

using nlohmann::json;

const std::vector<std::string> kNames = {"Ava", "Ben", "Cal", "Dee",
                                         "Eli", "Fay", "Gus", "Ivy"};
const std::vector<std::string> kItems = {"apples", "books", "coins", "pens",
                                         "shells", "stars", "cards", "nuts"};

constexpr long kValueCap = 5000;  // intermediate results stay in [1, cap]

struct Chain {
  long start = 0;
  std::vector<char> ops;
  std::vector<long> operands;
  std::vector<long> values;  // values[i] = result after step i
};

// Divisors of v within [lo, hi], excluding 1 unless lo allows it.
std::vector<long> divisors_in(long v, long lo, long hi) {
  std::vector<long> out;
  for (long d = std::max<long>(2, lo); d <= std::min<long>(hi, v); ++d)
    if (v % d == 0) out.push_back(d);
  return out;
}

bool build_chain(const DatasetSpec& spec, Rng& rng, Chain& chain) {
  const long lo = spec.min_operand, hi = spec.max_operand;
  chain = Chain{};
  chain.start = rng.uniform_int(static_cast<int>(lo), static_cast<int>(hi));
  long v = chain.start;
  for (int step = 0; step < spec.depth; ++step) {
    std::string feasible;
    for (char op : spec.ops) {
      switch (op) {
        case '+':
          if (v + lo <= kValueCap) feasible.push_back(op);
          break;
        case '-':
          if (v - lo >= 1) feasible.push_back(op);
          break;
        case '*':
          if (v * std::max<long>(2, lo) <= kValueCap) feasible.push_back(op);
          break;
        case '/':
          if (!divisors_in(v, lo, hi).empty()) feasible.push_back(op);
          break;
        default:
          break;
      }
    }
    if (feasible.empty()) return false;
    const char op = feasible[rng.uniform_int(0, static_cast<int>(feasible.size()) - 1)];
    long b = 0;
    switch (op) {
      case '+':
        b = rng.uniform_int(static_cast<int>(lo),
                            static_cast<int>(std::min(hi, kValueCap - v)));
        v += b;
        break;
      case '-':
        b = rng.uniform_int(static_cast<int>(lo),
                            static_cast<int>(std::min(hi, v - 1)));
        v -= b;
        break;
      case '*': {
        const long bl = std::max<long>(2, lo);
        const long bh = std::min(hi, kValueCap / v);
        b = rng.uniform_int(static_cast<int>(bl), static_cast<int>(bh));
        v *= b;
        break;
      }
      case '/': {
        const auto ds = divisors_in(v, lo, hi);
        b = ds[rng.uniform_int(0, static_cast<int>(ds.size()) - 1)];
        v /= b;
        break;
      }
      default:
        return false;
    }
    chain.ops.push_back(op);
    chain.operands.push_back(b);
    chain.values.push_back(v);
  }
  return true;
}

std::string pick(const std::vector<std::string>& v, Rng& rng) {
  return v[rng.uniform_int(0, static_cast<int>(v.size()) - 1)];
}

std::string step_sentence(char op, long b, const std::string& name,
                          const std::string& item, Rng& rng) {
  const std::string bs = std::to_string(b);
  switch (op) {
    case '+':
      return pick({"Then " + name + " finds " + bs + " more.",
                   name + " gets " + bs + " more " + item + ".",
                   "Another " + bs + " " + item + " arrive."},
                  rng);
    case '-':
      return pick({"Then " + name + " loses " + bs + " of them.",
                   name + " gives away " + bs + ".",
                   "Sadly " + bs + " of them break."},
                  rng);
    case '*':
      return pick({"Then the pile grows to " + bs + " times its size.",
                   "The count is multiplied by " + bs + ".",
                   "Each one turns into " + bs + " " + item + "."},
                  rng);
    case '/':
      return pick({"Then the " + item + " are split into " + bs +
                       " equal piles and " + name + " keeps one pile.",
                   name + " shares them into " + bs +
                       " equal groups and keeps one group."},
                  rng);
    default:
      return "";
  }
}

std::string render_question(const Chain& chain, const DatasetSpec& spec, Rng& rng,
                            const std::string& name, const std::string& item) {
  std::string q = pick({name + " has " + std::to_string(chain.start) + " " + item + ".",
                        name + " starts with " + std::to_string(chain.start) + " " + item + ".",
                        name + " collects " + std::to_string(chain.start) + " " + item + "."},
                       rng);
  if (spec.distractor_prob > 0.0 && rng.uniform() < spec.distractor_prob) {
    std::string other = pick(kNames, rng);
    while (other == name) other = pick(kNames, rng);
    const std::string other_item = pick(kItems, rng);
    q += " " + other + " has " +
         std::to_string(rng.uniform_int(static_cast<int>(spec.min_operand),
                                        static_cast<int>(spec.max_operand))) +
         " " + other_item + ".";
  }
  for (size_t i = 0; i < chain.ops.size(); ++i)
    q += " " + step_sentence(chain.ops[i], chain.operands[i], name, item, rng);
  q += " " + pick({"How many " + item + " does " + name + " have now?",
                   "How many " + item + " remain?"},
                  rng);
  return q;
}

std::string render_program_cot(const Chain& chain) {
  std::string cot;
  char var = 'a';
  cot += std::string(1, var) + " = " + std::to_string(chain.start) + "\n";
  for (size_t i = 0; i < chain.ops.size(); ++i) {
    const char prev = var;
    ++var;
    cot += std::string(1, var) + " = " + std::string(1, prev) + " " +
           std::string(1, chain.ops[i]) + " " + std::to_string(chain.operands[i]) + "\n";
  }
  cot += std::string("r = ") + std::string(1, var);
  return cot;
}

std::string render_nl_cot(const Chain& chain, const AnswerFormat& format,
                          char gold_letter) {
  std::string cot;
  long v = chain.start;
  for (size_t i = 0; i < chain.ops.size(); ++i) {
    cot += std::to_string(v) + " " + std::string(1, chain.ops[i]) + " " +
           std::to_string(chain.operands[i]) + " = " +
           std::to_string(chain.values[i]) + ". ";
    v = chain.values[i];
  }
  if (format.kind == AnswerFormat::Kind::MultipleChoice)
    cot += std::string("Therefore, the answer is: ") + std::string(1, gold_letter);
  else
    cot += "The answer is " + std::to_string(v) + ".";
  return cot;
}

// Distractor option values differ from the answer and from each other.
AnswerFormat make_mcq(long answer, int n_options, Rng& rng, char& gold_letter) {
  AnswerFormat fmt;
  fmt.kind = AnswerFormat::Kind::MultipleChoice;
  std::set<long> values = {answer};
  while (static_cast<int>(values.size()) < n_options) {
    long d = answer;
    switch (rng.uniform_int(0, 2)) {
      case 0: d = answer + rng.uniform_int(1, 12); break;
      case 1: d = std::max<long>(0, answer - rng.uniform_int(1, 12)); break;
      default: d = answer * rng.uniform_int(2, 3) + rng.uniform_int(0, 4); break;
    }
    values.insert(d);
  }
  std::vector<long> vals(values.begin(), values.end());
  // deterministic shuffle
  for (size_t i = vals.size(); i > 1; --i)
    std::swap(vals[i - 1], vals[rng.uniform_int(0, static_cast<int>(i) - 1)]);
  for (size_t i = 0; i < vals.size(); ++i) {
    McqOption opt;
    opt.letter = static_cast<char>('A' + i);
    opt.value = std::to_string(vals[i]);
    if (vals[i] == answer) gold_letter = opt.letter;
    fmt.options.push_back(opt);
  }
  return fmt;
}

json format_to_json(const AnswerFormat& f) {
  if (f.kind == AnswerFormat::Kind::Numeric) return json{{"type", "numeric"}};
  json opts = json::array();
  for (const auto& o : f.options)
    opts.push_back(json::array({std::string(1, o.letter), o.value}));
  return json{{"type", "mcq"}, {"options", opts}};
}

AnswerFormat format_from_json(const json& j) {
  AnswerFormat f;
  const std::string type = j.at("type").get<std::string>();
  if (type == "numeric") {
    f.kind = AnswerFormat::Kind::Numeric;
  } else if (type == "mcq") {
    f.kind = AnswerFormat::Kind::MultipleChoice;
    for (const auto& o : j.at("options")) {
      McqOption opt;
      opt.letter = o.at(0).get<std::string>().at(0);
      opt.value = o.at(1).get<std::string>();
      f.options.push_back(opt);
    }
  } else {
    throw ParseError("unknown answer format: " + type);
  }
  return f;
}

}  // namespace

bool operator==(const McqOption& a, const McqOption& b) {
  return a.letter == b.letter && a.value == b.value;
}

bool operator==(const AnswerFormat& a, const AnswerFormat& b) {
  return a.kind == b.kind && a.options == b.options;
}

bool operator==(const Example& a, const Example& b) {
  return a.question == b.question && a.cot == b.cot && a.answer == b.answer &&
         a.format == b.format && a.kind == b.kind;
}

std::vector<Example> generate(const DatasetSpec& spec) {
  if (spec.count <= 0) throw ConfigError("dataset count must be positive");
  if (spec.depth <= 0) throw ConfigError("chain depth must be at least 1");
  if (spec.ops.empty()) throw ConfigError("operator set must not be empty");
  for (char op : spec.ops)
    if (std::string("+-*/").find(op) == std::string::npos)
      throw ConfigError(std::string("unknown operator: ") + op);
  if (spec.min_operand < 1 || spec.max_operand < spec.min_operand)
    throw ConfigError("operand range invalid");
  if (spec.format == AnswerFormat::Kind::MultipleChoice) {
    if (spec.mcq_options < 2 || spec.mcq_options > 5)
      throw ConfigError("mcq_options must be in [2, 5]");
    if (spec.kind == CotKind::Program)
      throw ConfigError("multiple-choice datasets require natural-language CoT");
  }

  Vocab vocab;
  Rng rng(spec.seed);
  std::vector<Example> out;
  std::set<std::string> seen;
  long attempts = 0;
  const long max_attempts = static_cast<long>(spec.count) * 1000 + 10000;
  while (static_cast<int>(out.size()) < spec.count) {
    if (++attempts > max_attempts)
      throw ConfigError("unable to generate enough unique problems; widen the spec");
    Chain chain;
    if (!build_chain(spec, rng, chain)) continue;
    const std::string name = pick(kNames, rng);
    const std::string item = pick(kItems, rng);

    Example ex;
    ex.kind = spec.kind;
    const long answer = chain.values.back();
    char gold_letter = 'A';
    if (spec.format == AnswerFormat::Kind::MultipleChoice) {
      ex.format = make_mcq(answer, spec.mcq_options, rng, gold_letter);
      ex.answer = std::string(1, gold_letter);
    } else {
      ex.format.kind = AnswerFormat::Kind::Numeric;
      ex.answer = std::to_string(answer);
    }

    ex.question = render_question(chain, spec, rng, name, item);
    if (spec.format == AnswerFormat::Kind::MultipleChoice) {
      ex.question += " Options:";
      for (const auto& o : ex.format.options)
        ex.question += " " + std::string(1, o.letter) + ") " + o.value;
    }
    ex.cot = spec.kind == CotKind::Program
                 ? render_program_cot(chain)
                 : render_nl_cot(chain, ex.format, gold_letter);

    if (static_cast<int>(ex.question.size() + ex.cot.size()) + 2 > spec.max_len) continue;
    if (!seen.insert(ex.question).second) continue;
    (void)vocab.encode(ex.question + "\n" + ex.cot);  // fail fast on coverage gaps
    out.push_back(std::move(ex));
  }
  return out;
}

void save(const std::vector<Example>& dataset, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ParseError("cannot open for writing: " + path);
  for (const auto& ex : dataset) {
    json j{{"question", ex.question},
           {"cot", ex.cot},
           {"answer", ex.answer},
           {"format", format_to_json(ex.format)},
           {"kind", ex.kind == CotKind::Program ? "prog" : "nl"}};
    f << j.dump() << "\n";
  }
}

std::vector<Example> load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open: " + path);
  std::vector<Example> out;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      Example ex;
      ex.question = j.at("question").get<std::string>();
      ex.cot = j.at("cot").get<std::string>();
      ex.answer = j.at("answer").get<std::string>();
      ex.format = format_from_json(j.at("format"));
      ex.kind = j.at("kind").get<std::string>() == "prog" ? CotKind::Program
                                                          : CotKind::NaturalLanguage;
      out.push_back(std::move(ex));
    } catch (const std::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace reft
