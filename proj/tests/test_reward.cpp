#include <string>

#include "doctest.h"
#include "oracles.hpp"
#include "reft/corpus.hpp"
#include "reft/reward.hpp"
#include "reft/rng.hpp"

using namespace reft;

namespace {

AnswerFormat mcq_abc() {
  AnswerFormat f;
  f.kind = AnswerFormat::Kind::MultipleChoice;
  f.options = {{'A', "10"}, {'B', "17"}, {'C', "34"}};
  return f;
}

double reward_of(const std::string& text, CotKind kind, const AnswerFormat& fmt,
                 const std::string& gold, RewardConfig cfg = RewardConfig{}) {
  return terminal_reward(extract(text, kind, fmt, cfg), gold, fmt, cfg);
}

}  // namespace

TEST_SUITE("reward") {

TEST_CASE("three reward cases, natural language") {
  AnswerFormat num;
  RewardConfig cfg;
  CHECK(reward_of("q\n12 + 5 = 17. The answer is 17.", CotKind::NaturalLanguage,
                  num, "17") == 1.0);
  CHECK(reward_of("q\nThe answer is 16.", CotKind::NaturalLanguage, num, "17") ==
        0.1);
  CHECK(reward_of("q\nno final statement", CotKind::NaturalLanguage, num, "17") ==
        0.0);
  SUBCASE("partial disabled maps wrong answers to 0") {
    cfg.partial_enabled = false;
    CHECK(reward_of("q\nThe answer is 16.", CotKind::NaturalLanguage, num, "17",
                    cfg) == 0.0);
  }
}

TEST_CASE("three reward cases, program form") {
  AnswerFormat num;
  CHECK(reward_of("q\na = 12\nb = a + 5\nr = b", CotKind::Program, num, "17") ==
        1.0);
  CHECK(reward_of("q\na = 12\nb = a + 4\nr = b", CotKind::Program, num, "17") ==
        0.1);
  CHECK(reward_of("q\na = 12\nb = a +", CotKind::Program, num, "17") == 0.0);
}

TEST_CASE("MCQ rewards") {
  auto fmt = mcq_abc();
  CHECK(reward_of("q\nTherefore, the answer is: B", CotKind::NaturalLanguage, fmt,
                  "B") == 1.0);
  // A wrong letter is extractable but not numeric, so no partial credit.
  CHECK(reward_of("q\nTherefore, the answer is: A", CotKind::NaturalLanguage, fmt,
                  "B") == 0.0);
  CHECK(reward_of("q\nTherefore, the answer is: Z", CotKind::NaturalLanguage, fmt,
                  "B") == 0.0);
  CHECK(reward_of("q\nno letter anywhere", CotKind::NaturalLanguage, fmt, "B") ==
        0.0);
}

TEST_CASE("truncation and edge cases extract to null") {
  AnswerFormat num;
  // truncated mid-statement: no extractable answer
  CHECK(extract("q\n12 + 5 = 17. The answer is", CotKind::NaturalLanguage, num)
            .is_null());
  CHECK(extract("", CotKind::NaturalLanguage, num).is_null());
  CHECK(extract("q", CotKind::Program, num).is_null());
  // last marker wins
  auto a = extract("q\nThe answer is 3. The answer is 5.",
                   CotKind::NaturalLanguage, num);
  REQUIRE(a.kind == ExtractedAnswer::Kind::Value);
  CHECK(a.value == 5.0);
  // trailing punctuation is stripped
  auto b = extract("q\nThe answer is 3.5.", CotKind::NaturalLanguage, num);
  REQUIRE(b.kind == ExtractedAnswer::Kind::Value);
  CHECK(b.value == 3.5);
}

TEST_CASE("numeric tolerance") {
  CHECK(numeric_match(17.0, 17.0, 1e-6));
  CHECK(numeric_match(17.0 + 1e-9, 17.0, 1e-6));
  CHECK(!numeric_match(17.1, 17.0, 1e-6));
  CHECK(numeric_match(0.0, 0.0, 1e-6));
}

TEST_CASE("interpreter errors are enforced") {
  auto run = [](const std::string& text, int limit = 10000) {
    auto p = parse_program(text);
    REQUIRE(std::holds_alternative<Program>(p));
    return run_program(std::get<Program>(p), limit);
  };
  auto kind_of = [&](const std::string& text, int limit = 10000) {
    auto r = run(text, limit);
    REQUIRE(std::holds_alternative<ProgramError>(r));
    return std::get<ProgramError>(r).kind;
  };
  CHECK(kind_of("a = 1 / 0") == ProgramError::Kind::DivByZero);
  CHECK(kind_of("a = b + 1") == ProgramError::Kind::UseBeforeAssign);
  CHECK(kind_of("a = 999999999999999999 * 1000") == ProgramError::Kind::Overflow);
  CHECK(kind_of("a = 1 + 2 + 3 + 4", 3) == ProgramError::Kind::StepLimit);
  CHECK(std::holds_alternative<ProgramError>(parse_program("a = ")));
  CHECK(std::holds_alternative<ProgramError>(parse_program("= 3")));
  CHECK(std::holds_alternative<ProgramError>(parse_program("")));
}

TEST_CASE("parser handles precedence, parens, unary minus") {
  auto value = [](const std::string& text) {
    auto p = parse_program(text);
    REQUIRE(std::holds_alternative<Program>(p));
    auto r = run_program(std::get<Program>(p));
    REQUIRE(std::holds_alternative<double>(r));
    return std::get<double>(r);
  };
  CHECK(value("a = 2 + 3 * 4") == 14.0);
  CHECK(value("a = (2 + 3) * 4") == 20.0);
  CHECK(value("a = -3 + 10") == 7.0);
  CHECK(value("a = 2 - -3") == 5.0);
  CHECK(value("a = 10 / 4") == 2.5);
  CHECK(value("a = 6\nb = a * a\nc = b - a") == 30.0);
}

TEST_CASE("random programs agree with the independent evaluator") {
  Rng rng(77);
  int checked = 0;
  for (int it = 0; it < 300; ++it) {
    // random straight-line program over previously assigned variables
    int n_stmt = rng.uniform_int(1, 5);
    std::string text;
    std::vector<std::string> vars;
    for (int s = 0; s < n_stmt; ++s) {
      std::string name(1, (char)('a' + s));
      std::string expr = std::to_string(rng.uniform_int(-20, 20));
      int terms = rng.uniform_int(0, 3);
      for (int t = 0; t < terms; ++t) {
        const char op = "+-*/"[rng.uniform_int(0, 3)];
        std::string operand =
            (!vars.empty() && rng.uniform() < 0.4)
                ? vars[(size_t)rng.uniform_int(0, (int)vars.size() - 1)]
                : std::to_string(rng.uniform_int(-9, 9));
        expr += std::string(" ") + op + " " + operand;
      }
      if (rng.uniform() < 0.2) expr = "(" + expr + ") * 2";
      text += name + " = " + expr + "\n";
      vars.push_back(name);
    }
    text.pop_back();

    auto main_p = parse_program(text);
    auto o = oracle::eval_program(text);
    if (std::holds_alternative<ProgramError>(main_p)) {
      CHECK(std::holds_alternative<oracle::Error>(o));
      continue;
    }
    auto r = run_program(std::get<Program>(main_p));
    if (std::holds_alternative<ProgramError>(r)) {
      REQUIRE(std::holds_alternative<oracle::Error>(o));
      auto want = std::get<ProgramError>(r).kind;
      auto got = std::get<oracle::Error>(o).kind;
      CHECK((int)want == (int)got);
    } else {
      REQUIRE(std::holds_alternative<double>(o));
      CHECK(std::get<double>(r) ==
            doctest::Approx(std::get<double>(o)).epsilon(1e-12));
      ++checked;
    }
  }
  CHECK(checked > 100);  // most random programs are valid
}

TEST_CASE("trailing program extraction ignores leading prose") {
  AnswerFormat num;
  auto a = extract("Tom has 4 pens. How many?\na = 4\nb = a * 2\nr = b",
                   CotKind::Program, num);
  REQUIRE(a.kind == ExtractedAnswer::Kind::Value);
  CHECK(a.value == 8.0);
}

TEST_CASE("answer keys are canonical") {
  CHECK(ExtractedAnswer::make_value(17.0).key() ==
        ExtractedAnswer::make_value(17.0).key());
  CHECK(ExtractedAnswer::make_value(17.0).key() !=
        ExtractedAnswer::make_value(16.0).key());
  CHECK(ExtractedAnswer::make_choice('B').key() !=
        ExtractedAnswer::make_value(2.0).key());
}

}  // TEST_SUITE
