#include "reft/reward.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace reft {

std::string ExtractedAnswer::key() const {
  switch (kind) {
    case Kind::Value: {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.10g", value);
      return buf;
    }
    case Kind::Choice:
      return std::string(1, letter);
    default:
      return "<null>";
  }
}

namespace {

constexpr double kOverflowLimit = 1e18;

// Recursive-descent parser for `ident = expr` lines with the usual
// precedence: expr := term (('+'|'-') term)*, term := factor (('*'|'/')
// factor)*, factor := number | ident | '(' expr ')' | '-' factor.
struct Parser {
  const std::string& s;
  size_t i = 0;
  bool failed = false;
  std::string error;

  explicit Parser(const std::string& text) : s(text) {}

  void fail(const std::string& msg) {
    if (!failed) {
      failed = true;
      error = msg + " at offset " + std::to_string(i);
    }
  }

  void skip_ws() {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  }

  bool at_end() const { return i >= s.size(); }

  char peek() { return i < s.size() ? s[i] : '\0'; }

  std::unique_ptr<Expr> parse_expr() {
    auto lhs = parse_term();
    if (failed) return nullptr;
    skip_ws();
    while (peek() == '+' || peek() == '-') {
      const char op = s[i++];
      auto rhs = parse_term();
      if (failed) return nullptr;
      auto node = std::make_unique<Expr>();
      node->type = Expr::Type::Binary;
      node->op = op;
      node->lhs = std::move(lhs);
      node->rhs = std::move(rhs);
      lhs = std::move(node);
      skip_ws();
    }
    return lhs;
  }

  std::unique_ptr<Expr> parse_term() {
    auto lhs = parse_factor();
    if (failed) return nullptr;
    skip_ws();
    while (peek() == '*' || peek() == '/') {
      const char op = s[i++];
      auto rhs = parse_factor();
      if (failed) return nullptr;
      auto node = std::make_unique<Expr>();
      node->type = Expr::Type::Binary;
      node->op = op;
      node->lhs = std::move(lhs);
      node->rhs = std::move(rhs);
      lhs = std::move(node);
      skip_ws();
    }
    return lhs;
  }

  std::unique_ptr<Expr> parse_factor() {
    skip_ws();
    if (at_end()) {
      fail("unexpected end of expression");
      return nullptr;
    }
    const char c = peek();
    if (c == '(') {
      ++i;
      auto inner = parse_expr();
      skip_ws();
      if (peek() != ')') {
        fail("expected ')'");
        return nullptr;
      }
      ++i;
      return inner;
    }
    if (c == '-') {
      ++i;
      auto inner = parse_factor();
      if (failed) return nullptr;
      auto node = std::make_unique<Expr>();
      node->type = Expr::Type::Negate;
      node->lhs = std::move(inner);
      return node;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      size_t start = i;
      while (i < s.size() &&
             (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.'))
        ++i;
      auto node = std::make_unique<Expr>();
      node->type = Expr::Type::Number;
      try {
        size_t used = 0;
        node->number = std::stod(s.substr(start, i - start), &used);
        if (used != i - start) {
          fail("bad number literal");
          return nullptr;
        }
      } catch (const std::exception&) {
        fail("bad number literal");
        return nullptr;
      }
      return node;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = i;
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) ||
                              s[i] == '_'))
        ++i;
      auto node = std::make_unique<Expr>();
      node->type = Expr::Type::Variable;
      node->var = s.substr(start, i - start);
      return node;
    }
    fail(std::string("unexpected character '") + c + "'");
    return nullptr;
  }
};

std::optional<Statement> parse_statement(const std::string& line, std::string* err) {
  const size_t eq = line.find('=');
  if (eq == std::string::npos) {
    if (err) *err = "missing '='";
    return std::nullopt;
  }
  // lhs must be a bare identifier
  std::string name;
  size_t j = 0;
  while (j < eq && (line[j] == ' ' || line[j] == '\t')) ++j;
  const size_t name_start = j;
  while (j < eq && (std::isalnum(static_cast<unsigned char>(line[j])) || line[j] == '_'))
    ++j;
  name = line.substr(name_start, j - name_start);
  while (j < eq && (line[j] == ' ' || line[j] == '\t')) ++j;
  if (name.empty() || j != eq ||
      !(std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_')) {
    if (err) *err = "left-hand side is not an identifier";
    return std::nullopt;
  }
  const std::string rhs = line.substr(eq + 1);
  Parser p(rhs);
  auto expr = p.parse_expr();
  p.skip_ws();
  if (p.failed || expr == nullptr || !p.at_end()) {
    if (err) *err = p.failed ? p.error : "trailing characters in expression";
    return std::nullopt;
  }
  Statement st;
  st.name = std::move(name);
  st.expr = std::move(expr);
  return st;
}

struct EvalContext {
  const std::vector<std::pair<std::string, double>>* env;
  int steps = 0;
  int step_limit = 10000;
  std::optional<ProgramError> error;

  double lookup(const std::string& name) {
    for (auto it = env->rbegin(); it != env->rend(); ++it)
      if (it->first == name) return it->second;
    error = ProgramError{ProgramError::Kind::UseBeforeAssign,
                         "variable used before assignment: " + name};
    return 0.0;
  }
};

double eval_expr(const Expr& e, EvalContext& ctx) {
  if (ctx.error) return 0.0;
  if (++ctx.steps > ctx.step_limit) {
    ctx.error = ProgramError{ProgramError::Kind::StepLimit, "step limit exceeded"};
    return 0.0;
  }
  switch (e.type) {
    case Expr::Type::Number:
      return e.number;
    case Expr::Type::Variable:
      return ctx.lookup(e.var);
    case Expr::Type::Negate:
      return -eval_expr(*e.lhs, ctx);
    case Expr::Type::Binary: {
      const double a = eval_expr(*e.lhs, ctx);
      const double b = eval_expr(*e.rhs, ctx);
      if (ctx.error) return 0.0;
      double r = 0.0;
      switch (e.op) {
        case '+': r = a + b; break;
        case '-': r = a - b; break;
        case '*': r = a * b; break;
        case '/':
          if (b == 0.0) {
            ctx.error = ProgramError{ProgramError::Kind::DivByZero, "division by zero"};
            return 0.0;
          }
          r = a / b;
          break;
        default:
          ctx.error = ProgramError{ProgramError::Kind::Parse,
                                   std::string("bad operator '") + e.op + "'"};
          return 0.0;
      }
      if (!std::isfinite(r) || std::abs(r) > kOverflowLimit) {
        ctx.error = ProgramError{ProgramError::Kind::Overflow, "value overflow"};
        return 0.0;
      }
      return r;
    }
  }
  return 0.0;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  lines.push_back(cur);
  return lines;
}

bool is_blank(const std::string& s) {
  for (char c : s)
    if (c != ' ' && c != '\t') return false;
  return true;
}

// The decoded terminal state is question ++ cot; the program is the maximal
// trailing block of lines that parse as assignment statements.
std::optional<Program> trailing_program(const std::string& text) {
  const auto lines = split_lines(text);
  std::vector<Statement> rev;
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    if (is_blank(*it)) {
      if (rev.empty()) continue;  // tolerate trailing blank lines
      break;
    }
    auto st = parse_statement(*it, nullptr);
    if (!st) break;
    rev.push_back(std::move(*st));
  }
  if (rev.empty()) return std::nullopt;
  Program p;
  for (auto it = rev.rbegin(); it != rev.rend(); ++it) p.statements.push_back(std::move(*it));
  return p;
}

std::optional<double> parse_number(const std::string& s) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    while (used < s.size() && (s[used] == ' ' || s[used] == '\t')) ++used;
    if (used != s.size()) return std::nullopt;
    if (!std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

// Case-insensitive search for the last occurrence of "answer is".
size_t find_last_answer_marker(const std::string& text) {
  static const std::string marker = "answer is";
  size_t best = std::string::npos;
  for (size_t pos = 0; pos + marker.size() <= text.size(); ++pos) {
    bool match = true;
    for (size_t k = 0; k < marker.size(); ++k) {
      if (std::tolower(static_cast<unsigned char>(text[pos + k])) != marker[k]) {
        match = false;
        break;
      }
    }
    if (match) best = pos + marker.size();
  }
  return best;
}

ExtractedAnswer extract_nl(const std::string& text, const AnswerFormat& format) {
  size_t pos = find_last_answer_marker(text);
  if (pos == std::string::npos) return ExtractedAnswer::null();
  while (pos < text.size() && (text[pos] == ' ' || text[pos] == ':')) ++pos;
  if (pos >= text.size()) return ExtractedAnswer::null();
  if (format.kind == AnswerFormat::Kind::MultipleChoice) {
    const char c = text[pos];
    if (c < 'A' || c > 'E') return ExtractedAnswer::null();
    return ExtractedAnswer::make_choice(c);
  }
  // Numeric: take the token up to whitespace / end, strip a trailing period.
  size_t end = pos;
  while (end < text.size() && text[end] != ' ' && text[end] != '\n') ++end;
  std::string token = text.substr(pos, end - pos);
  // strip sentence punctuation: "10." -> "10", "3.5." -> "3.5"
  while (!token.empty() && (token.back() == '.' || token.back() == ','))
    token.pop_back();
  const auto v = parse_number(token);
  if (!v) return ExtractedAnswer::null();
  return ExtractedAnswer::make_value(*v);
}

}  // namespace

std::variant<Program, ProgramError> parse_program(const std::string& text) {
  Program p;
  const auto lines = split_lines(text);
  for (size_t ln = 0; ln < lines.size(); ++ln) {
    if (is_blank(lines[ln])) continue;
    std::string err;
    auto st = parse_statement(lines[ln], &err);
    if (!st)
      return ProgramError{ProgramError::Kind::Parse,
                          "line " + std::to_string(ln + 1) + ": " + err};
    p.statements.push_back(std::move(*st));
  }
  if (p.statements.empty())
    return ProgramError{ProgramError::Kind::Parse, "empty program"};
  return std::variant<Program, ProgramError>(std::in_place_index<0>, std::move(p));
}

std::variant<double, ProgramError> run_program(const Program& p, int step_limit) {
  std::vector<std::pair<std::string, double>> env;
  EvalContext ctx;
  ctx.env = &env;
  ctx.step_limit = step_limit;
  double last = 0.0;
  for (const auto& st : p.statements) {
    last = eval_expr(*st.expr, ctx);
    if (ctx.error) return *ctx.error;
    env.emplace_back(st.name, last);
  }
  return last;
}

bool numeric_match(double a, double b, double rel_tol) {
  return std::abs(a - b) <= rel_tol * std::max(1.0, std::abs(b));
}

ExtractedAnswer extract(const std::string& full_text, CotKind kind,
                        const AnswerFormat& format, const RewardConfig& cfg) {
  try {
    if (kind == CotKind::Program) {
      auto prog = trailing_program(full_text);
      if (!prog) return ExtractedAnswer::null();
      auto result = run_program(*prog, cfg.step_limit);
      if (std::holds_alternative<ProgramError>(result)) return ExtractedAnswer::null();
      return ExtractedAnswer::make_value(std::get<double>(result));
    }
    return extract_nl(full_text, format);
  } catch (const std::exception&) {
    return ExtractedAnswer::null();
  }
}

double terminal_reward(const ExtractedAnswer& extracted, const std::string& gold,
                       const AnswerFormat& format, const RewardConfig& cfg) {
  if (extracted.is_null()) return 0.0;
  if (format.kind == AnswerFormat::Kind::MultipleChoice) {
    if (extracted.kind == ExtractedAnswer::Kind::Choice && !gold.empty() &&
        extracted.letter == gold[0])
      return cfg.correct_value;
    return 0.0;
  }
  // Numeric format
  const auto gv = parse_number(gold);
  if (extracted.kind == ExtractedAnswer::Kind::Value && gv &&
      numeric_match(extracted.value, *gv, cfg.rel_tol))
    return cfg.correct_value;
  if (cfg.partial_enabled && extracted.kind == ExtractedAnswer::Kind::Value)
    return cfg.partial_value;
  return 0.0;
}

}  // namespace reft
