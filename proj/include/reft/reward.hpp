#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "reft/corpus.hpp"

namespace reft {

struct ExtractedAnswer {
  enum class Kind { Value, Choice, Null };
  Kind kind = Kind::Null;
  double value = 0.0;
  char letter = '\0';

  static ExtractedAnswer make_value(double v) { return {Kind::Value, v, '\0'}; }
  static ExtractedAnswer make_choice(char c) { return {Kind::Choice, 0.0, c}; }
  static ExtractedAnswer null() { return {}; }
  bool is_null() const { return kind == Kind::Null; }

  // Canonical string for vote counting and logging.
  std::string key() const;
};

struct RewardConfig {
  bool partial_enabled = true;
  double partial_value = 0.1;
  double correct_value = 1.0;
  double rel_tol = 1e-6;
  int step_limit = 10000;
};

// --- straight-line program interpreter -------------------------------------

struct ProgramError {
  enum class Kind { Parse, UseBeforeAssign, DivByZero, Overflow, StepLimit };
  Kind kind;
  std::string message;
};

struct Expr {
  enum class Type { Number, Variable, Binary, Negate };
  Type type = Type::Number;
  double number = 0.0;
  std::string var;
  char op = '\0';
  std::unique_ptr<Expr> lhs, rhs;
};

struct Statement {
  std::string name;
  std::unique_ptr<Expr> expr;
};

// `identifier = expression` per line; the result is the identifier assigned
// by the final statement.
struct Program {
  std::vector<Statement> statements;
};

std::variant<Program, ProgramError> parse_program(const std::string& text);
std::variant<double, ProgramError> run_program(const Program& p,
                                               int step_limit = 10000);

// --- answer extraction and reward -------------------------------------------

// Total: every failure maps to Null, extraction never throws.
ExtractedAnswer extract(const std::string& full_text, CotKind kind,
                        const AnswerFormat& format,
                        const RewardConfig& cfg = RewardConfig{});

bool numeric_match(double a, double b, double rel_tol);

// gold is the Example answer string: a decimal for Numeric, a letter for MCQ.
double terminal_reward(const ExtractedAnswer& extracted, const std::string& gold,
                       const AnswerFormat& format, const RewardConfig& cfg);

}  // namespace reft
