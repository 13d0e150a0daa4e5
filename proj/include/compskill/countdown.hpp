#pragma once

// Countdown: combine the given integers with + - * /, each exactly once, to
// hit a target. Arithmetic is exact-rational throughout; intermediates need
// not be integers as long as the final value equals the target.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "compskill/errors.hpp"
#include "compskill/rational.hpp"
#include "compskill/rng.hpp"

namespace compskill {

struct CountdownProblem {
  std::vector<std::int64_t> numbers;
  std::int64_t target = 0;

  int level() const noexcept { return static_cast<int>(numbers.size()); }

  friend bool operator==(const CountdownProblem&, const CountdownProblem&) = default;
};

/// Immutable arithmetic tree; nodes are shared so solver witnesses are cheap to assemble.
class ArithExpr {
 public:
  using Ptr = std::shared_ptr<const ArithExpr>;

  static Ptr leaf(std::int64_t value) { return Ptr(new ArithExpr(value, '\0', nullptr, nullptr)); }

  static Ptr binary(char op, Ptr lhs, Ptr rhs) {
    if (op != '+' && op != '-' && op != '*' && op != '/') throw ContractViolation(std::string("unknown operator ") + op);
    return Ptr(new ArithExpr(0, op, std::move(lhs), std::move(rhs)));
  }

  bool is_leaf() const noexcept { return op_ == '\0'; }
  std::int64_t value() const noexcept { return value_; }
  char op() const noexcept { return op_; }
  const ArithExpr& lhs() const { return *lhs_; }
  const ArithExpr& rhs() const { return *rhs_; }

  /// Throws DivisionByZero or ArithmeticOverflow.
  Rational evaluate() const {
    if (is_leaf()) return Rational(value_);
    const Rational a = lhs_->evaluate();
    const Rational b = rhs_->evaluate();
    switch (op_) {
      case '+': return a + b;
      case '-': return a - b;
      case '*': return a * b;
      default: return a / b;
    }
  }

  std::vector<std::int64_t> leaves() const {
    std::vector<std::int64_t> out;
    collect(out);
    return out;
  }

  /// Infix with the minimal parentheses needed to re-parse to the same tree.
  std::string to_string() const {
    if (is_leaf()) return std::to_string(value_);
    const int prec = precedence(op_);
    std::string left = lhs_->to_string();
    if (!lhs_->is_leaf() && precedence(lhs_->op_) < prec) left = "(" + left + ")";
    std::string right = rhs_->to_string();
    if (!rhs_->is_leaf() && (precedence(rhs_->op_) < prec || (precedence(rhs_->op_) == prec)))
      right = "(" + right + ")";
    return left + " " + op_ + " " + right;
  }

 private:
  ArithExpr(std::int64_t value, char op, Ptr lhs, Ptr rhs)
      : value_(value), op_(op), lhs_(std::move(lhs)), rhs_(std::move(rhs)) {}

  static int precedence(char op) { return op == '+' || op == '-' ? 1 : 2; }

  void collect(std::vector<std::int64_t>& out) const {
    if (is_leaf()) {
      out.push_back(value_);
      return;
    }
    lhs_->collect(out);
    rhs_->collect(out);
  }

  std::int64_t value_;
  char op_;
  Ptr lhs_;
  Ptr rhs_;
};

// ---------------------------------------------------------------------------
// Solver

inline constexpr std::size_t kMinSolveNumbers = 2;
inline constexpr std::size_t kMaxSolveNumbers = 6;

/// Complete exhaustive search. Dynamic programming over index subsets: every
/// value reachable from a subset is derived from a split into two disjoint
/// nonempty halves. Memo tables are per call.
inline std::optional<ArithExpr::Ptr> solve(std::span<const std::int64_t> numbers, std::int64_t target) {
  const std::size_t n = numbers.size();
  if (n < kMinSolveNumbers || n > kMaxSolveNumbers)
    throw ContractViolation("solve supports 2..6 numbers, got " + std::to_string(n));

  const std::uint32_t full = (1u << n) - 1;
  std::vector<std::unordered_map<Rational, ArithExpr::Ptr>> reach(full + 1);
  for (std::size_t i = 0; i < n; ++i) reach[1u << i].emplace(Rational(numbers[i]), ArithExpr::leaf(numbers[i]));

  std::vector<std::uint32_t> masks;
  for (std::uint32_t m = 1; m <= full; ++m)
    if (__builtin_popcount(m) >= 2) masks.push_back(m);
  std::stable_sort(masks.begin(), masks.end(), [](std::uint32_t a, std::uint32_t b) { return __builtin_popcount(a) < __builtin_popcount(b); });

  const Rational goal(target);
  for (std::uint32_t mask : masks) {
    const bool is_full = mask == full;
    auto& out = reach[mask];
    const std::uint32_t low = mask & (~mask + 1);
    // Unordered splits: the left part always holds the lowest set bit.
    for (std::uint32_t left = (mask - 1) & mask; left != 0; left = (left - 1) & mask) {
      if ((left & low) == 0) continue;
      const std::uint32_t right = mask ^ left;
      for (const auto& [a, ea] : reach[left]) {
        for (const auto& [b, eb] : reach[right]) {
          const auto offer = [&](Rational v, char op, const ArithExpr::Ptr& x, const ArithExpr::Ptr& y) -> bool {
            if (is_full) {
              if (v == goal) {
                out.emplace(v, ArithExpr::binary(op, x, y));
                return true;
              }
              return false;
            }
            if (!out.contains(v)) out.emplace(v, ArithExpr::binary(op, x, y));
            return false;
          };
          try {
            if (offer(a + b, '+', ea, eb)) return out.at(goal);
            if (offer(a - b, '-', ea, eb)) return out.at(goal);
            if (offer(b - a, '-', eb, ea)) return out.at(goal);
            if (offer(a * b, '*', ea, eb)) return out.at(goal);
            if (!b.is_zero() && offer(a / b, '/', ea, eb)) return out.at(goal);
            if (!a.is_zero() && offer(b / a, '/', eb, ea)) return out.at(goal);
          } catch (const ArithmeticOverflow&) {
            // unreachable for in-bounds inputs; out-of-range values cannot be emitted
          }
        }
      }
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Generation

struct CountdownBounds {
  std::int64_t number_min = 1;
  std::int64_t number_max = 99;
  std::int64_t target_min = 10;
  std::int64_t target_max = 999;
  std::size_t max_retries = 1000;
};

struct GeneratedCountdown {
  CountdownProblem problem;
  ArithExpr::Ptr witness;
};

/// Draws `level` numbers, folds them into a random full binary tree with random
/// operators, and accepts when the value is an integer inside the target bounds.
inline GeneratedCountdown generate_countdown(int level, std::uint64_t seed, const CountdownBounds& bounds = {}) {
  if (level < 2) throw ContractViolation("Countdown level must be >= 2");
  if (bounds.number_min < 1 || bounds.number_min > bounds.number_max || bounds.target_min > bounds.target_max)
    throw ContractViolation("invalid Countdown bounds");
  static constexpr char kOps[] = {'+', '-', '*', '/'};
  Rng rng(seed);
  for (std::size_t attempt = 0; attempt < bounds.max_retries; ++attempt) {
    std::vector<std::int64_t> numbers(static_cast<std::size_t>(level));
    for (auto& v : numbers) v = rng.uniform(bounds.number_min, bounds.number_max);

    std::vector<std::pair<Rational, ArithExpr::Ptr>> items;
    for (auto v : numbers) items.emplace_back(Rational(v), ArithExpr::leaf(v));
    bool ok = true;
    while (items.size() > 1 && ok) {
      const std::size_t i = rng.index(items.size());
      std::size_t j = rng.index(items.size() - 1);
      if (j >= i) ++j;
      const char op = kOps[rng.index(4)];
      try {
        auto node = ArithExpr::binary(op, items[i].second, items[j].second);
        Rational v = node->evaluate();
        items[i] = {v, std::move(node)};
        items.erase(items.begin() + static_cast<std::ptrdiff_t>(j));
      } catch (const DivisionByZero&) {
        ok = false;
      } catch (const ArithmeticOverflow&) {
        ok = false;
      }
    }
    if (!ok) continue;
    const Rational value = items.front().first;
    if (!value.is_integer() || value.num() < bounds.target_min || value.num() > bounds.target_max) continue;
    return {CountdownProblem{std::move(numbers), value.num()}, items.front().second};
  }
  throw GenerationExhausted("no level-" + std::to_string(level) + " Countdown problem within bounds after " +
                            std::to_string(bounds.max_retries) + " attempts");
}

// ---------------------------------------------------------------------------
// Answer parsing and verification

enum class Diagnostic : std::uint8_t { ok, missing_answer, parse_error, wrong_value, number_misuse, division_by_zero };

inline std::string_view diagnostic_name(Diagnostic d) {
  switch (d) {
    case Diagnostic::ok: return "ok";
    case Diagnostic::missing_answer: return "missing-answer";
    case Diagnostic::parse_error: return "parse-error";
    case Diagnostic::wrong_value: return "wrong-value";
    case Diagnostic::number_misuse: return "number-misuse";
    case Diagnostic::division_by_zero: return "division-by-zero";
  }
  return "?";
}

inline std::optional<Diagnostic> diagnostic_from_name(std::string_view name) {
  for (auto d : {Diagnostic::ok, Diagnostic::missing_answer, Diagnostic::parse_error, Diagnostic::wrong_value,
                 Diagnostic::number_misuse, Diagnostic::division_by_zero})
    if (diagnostic_name(d) == name) return d;
  return std::nullopt;
}

/// Parse failure carrying the downstream diagnostic (missing-answer or parse-error).
class AnswerError : public std::runtime_error {
 public:
  AnswerError(Diagnostic code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Diagnostic code() const noexcept { return code_; }

 private:
  Diagnostic code_;
};

/// Content of the last <answer>...</answer> span, if any.
inline std::optional<std::string_view> last_answer_span(std::string_view response) {
  static constexpr std::string_view open = "<answer>";
  static constexpr std::string_view close = "</answer>";
  const std::size_t end = response.rfind(close);
  if (end == std::string_view::npos) return std::nullopt;
  const std::size_t start = response.rfind(open, end);
  if (start == std::string_view::npos) return std::nullopt;
  return response.substr(start + open.size(), end - start - open.size());
}

namespace detail {

// expr := term (('+'|'-') term)* ; term := factor (('*'|'/') factor)* ;
// factor := INT | '(' expr ')'. No unary operators.
class InfixParser {
 public:
  explicit InfixParser(std::string_view text) : text_(text) {}

  ArithExpr::Ptr parse() {
    auto e = expr();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw AnswerError(Diagnostic::parse_error, what + " at offset " + std::to_string(pos_));
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::optional<char> peek_op(std::string_view ops) {
    skip_space();
    if (pos_ < text_.size() && ops.find(text_[pos_]) != std::string_view::npos) return text_[pos_];
    return std::nullopt;
  }

  ArithExpr::Ptr expr() {
    auto lhs = term();
    while (auto op = peek_op("+-")) {
      ++pos_;
      lhs = ArithExpr::binary(*op, lhs, term());
    }
    return lhs;
  }

  ArithExpr::Ptr term() {
    auto lhs = factor();
    while (auto op = peek_op("*/")) {
      ++pos_;
      lhs = ArithExpr::binary(*op, lhs, factor());
    }
    return lhs;
  }

  ArithExpr::Ptr factor() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    if (text_[pos_] == '(') {
      ++pos_;
      auto inner = expr();
      skip_space();
      if (pos_ >= text_.size() || text_[pos_] != ')') fail("expected ')'");
      ++pos_;
      return inner;
    }
    if (!std::isdigit(static_cast<unsigned char>(text_[pos_]))) fail("expected an integer or '('");
    std::int64_t value = 0;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      const int digit = text_[pos_] - '0';
      if (value > (INT64_MAX - digit) / 10) fail("integer literal too large");
      value = value * 10 + digit;
      ++pos_;
    }
    return ArithExpr::leaf(value);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Throws AnswerError (missing-answer or parse-error).
inline ArithExpr::Ptr parse_answer(std::string_view response) {
  const auto span = last_answer_span(response);
  if (!span) throw AnswerError(Diagnostic::missing_answer, "no <answer>...</answer> span");
  return detail::InfixParser(*span).parse();
}

struct CountdownVerdict {
  int reward = 0;
  Diagnostic diagnostic = Diagnostic::missing_answer;
  std::optional<std::string> parsed_answer;  // trimmed content of the answer span
};

inline std::string trim_copy(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

inline CountdownVerdict verify_countdown(const CountdownProblem& problem, std::string_view response) {
  CountdownVerdict v;
  const auto span = last_answer_span(response);
  if (!span) return v;
  v.parsed_answer = trim_copy(*span);
  ArithExpr::Ptr expr;
  try {
    expr = detail::InfixParser(*span).parse();
  } catch (const AnswerError& e) {
    v.diagnostic = e.code();
    return v;
  }
  auto used = expr->leaves();
  auto given = problem.numbers;
  std::sort(used.begin(), used.end());
  std::sort(given.begin(), given.end());
  if (used != given) {
    v.diagnostic = Diagnostic::number_misuse;
    return v;
  }
  try {
    if (expr->evaluate() != Rational(problem.target)) {
      v.diagnostic = Diagnostic::wrong_value;
      return v;
    }
  } catch (const DivisionByZero&) {
    v.diagnostic = Diagnostic::division_by_zero;
    return v;
  } catch (const ArithmeticOverflow&) {
    v.diagnostic = Diagnostic::wrong_value;
    return v;
  }
  v.reward = 1;
  v.diagnostic = Diagnostic::ok;
  return v;
}

}  // namespace compskill
