#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "reft/vocab.hpp"

namespace reft {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class CotKind { NaturalLanguage, Program };

struct McqOption {
  char letter = 'A';
  std::string value;
};

struct AnswerFormat {
  enum class Kind { Numeric, MultipleChoice };
  Kind kind = Kind::Numeric;
  std::vector<McqOption> options;  // MultipleChoice only: 2..5 distinct letters A..E
};

// One training tuple: question x, chain of thought e, answer y.
struct Example {
  std::string question;
  std::string cot;
  std::string answer;  // decimal string, or a choice letter for MCQ
  AnswerFormat format;
  CotKind kind = CotKind::Program;
};

struct DatasetSpec {
  int count = 1000;
  int min_operand = 2;
  int max_operand = 20;
  std::string ops = "+-*/";  // subset of + - * /
  int depth = 2;             // number of reasoning steps
  AnswerFormat::Kind format = AnswerFormat::Kind::Numeric;
  int mcq_options = 4;
  CotKind kind = CotKind::Program;
  double distractor_prob = 0.0;  // chance of an irrelevant sentence
  int max_len = 256;             // question + cot + <eos> must fit
  uint64_t seed = 0;
};

// Deterministic for a fixed seed. Every question string is unique and every
// generated CoT re-derives exactly the stored answer.
std::vector<Example> generate(const DatasetSpec& spec);

// Line-delimited JSON records; save followed by load is the identity.
void save(const std::vector<Example>& dataset, const std::string& path);
std::vector<Example> load(const std::string& path);

bool operator==(const McqOption& a, const McqOption& b);
bool operator==(const AnswerFormat& a, const AnswerFormat& b);
bool operator==(const Example& a, const Example& b);

}  // namespace reft
