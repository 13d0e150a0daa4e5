#include <array>
#include <cctype>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "compskill/composition.hpp"
#include "support.hpp"

using namespace compskill;
using testing_support::interlace_concat_expr;
using testing_support::nested_case_expr;

namespace {

/// Parses the compact `return` expression back into a tree, resolving labels
/// through `names`. Test-only: accepts exactly what render_expr produces.
class ReturnExprParser {
 public:
  ReturnExprParser(std::string_view text, const PseudonymMap& names) : text_(text), names_(names) {}

  Expr parse() {
    Expr e = expr();
    if (pos_ != text_.size()) throw std::runtime_error("trailing input at " + std::to_string(pos_));
    return e;
  }

 private:
  Expr expr() {
    if (peek() == '(') {
      ++pos_;
      Expr lhs = expr();
      expect(" + ");
      Expr rhs = expr();
      expect(")");
      return Expr::apply(SkillId::concat, {std::move(lhs), std::move(rhs)});
    }
    if (peek() == '\'') return Expr::constant(quoted());
    if (text_.substr(pos_, 5) == "func_") return call();
    if (peek() == 'x') {
      ++pos_;
      return Expr::input();
    }
    throw std::runtime_error("unexpected character at " + std::to_string(pos_));
  }

  Expr call() {
    const std::size_t start = pos_;
    pos_ += 5;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    const auto id = names_.skill_for(text_.substr(start, pos_ - start));
    if (!id) throw std::runtime_error("unknown label");
    const SkillSpec& spec = skill_spec(*id);
    expect("(");
    std::vector<Expr> children;
    std::vector<AuxValue> aux;
    for (int i = 0; i < spec.string_arity; ++i) {
      if (i > 0) expect(", ");
      children.push_back(expr());
    }
    if (spec.aux) {
      expect(", ");
      if (peek() == '\'') {
        aux.emplace_back(quoted());
      } else {
        const std::size_t s = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        aux.emplace_back(std::stoll(std::string(text_.substr(s, pos_ - s))));
      }
    }
    expect(")");
    return Expr::apply(*id, std::move(children), std::move(aux));
  }

  std::string quoted() {
    expect("'");
    std::string out;
    while (peek() != '\'') {
      if (peek() == '\\') ++pos_;
      out.push_back(text_[pos_++]);
    }
    ++pos_;
    return out;
  }

  char peek() const {
    if (pos_ >= text_.size()) throw std::runtime_error("unexpected end");
    return text_[pos_];
  }

  void expect(std::string_view s) {
    if (text_.substr(pos_, s.size()) != s) throw std::runtime_error("expected '" + std::string(s) + "'");
    pos_ += s.size();
  }

  std::string_view text_;
  const PseudonymMap& names_;
  std::size_t pos_ = 0;
};

std::string return_expr_of(const std::string& program) {
  const std::string marker = "def main_solution(x):\n    return ";
  const auto at = program.rfind(marker);
  return program.substr(at + marker.size());
}

PseudonymMap map_with(std::initializer_list<std::pair<SkillId, int>> pins) {
  std::array<int, kNamedSkillCount> numbers{};
  for (auto [id, n] : pins) numbers[static_cast<std::size_t>(id)] = n;
  int next = 1;
  for (auto& n : numbers) {
    if (n != 0) continue;
    while (std::find(numbers.begin(), numbers.end(), next) != numbers.end()) ++next;
    n = next++;
  }
  return PseudonymMap(numbers);
}

std::vector<SkillId> full_pool() {
  auto pool = named_skills();
  pool.push_back(SkillId::concat);
  return pool;
}

}  // namespace

// ---------------------------------------------------------------------------
// Structure

TEST(Spine, Levels) {
  EXPECT_EQ(spine_level(Expr::apply(SkillId::compress_repeats, {Expr::input()})), 1);
  EXPECT_EQ(spine_level(interlace_concat_expr()), 2);
  EXPECT_EQ(spine_level(nested_case_expr()), 3);
  EXPECT_EQ(spine_level(Expr::input()), 0);
  EXPECT_THROW(spine_level(Expr::apply(SkillId::remove_vowels, {Expr::constant("abc")})), ContractViolation);
}

TEST(Spine, SkillsInApplicationOrder) {
  EXPECT_EQ(spine_skills(interlace_concat_expr()), (std::vector<SkillId>{SkillId::interlace_str, SkillId::concat}));
  EXPECT_EQ(spine_skills(nested_case_expr()),
            (std::vector<SkillId>{SkillId::remove_vowels, SkillId::duplicate_every_char, SkillId::alternate_case}));
}

TEST(Validate, RejectsBadShapes) {
  EXPECT_THROW(validate(Expr::apply(SkillId::concat, {Expr::input(), Expr::input()})), ContractViolation);
  EXPECT_THROW(validate(Expr::apply(SkillId::concat, {Expr::input()})), ContractViolation);
  EXPECT_THROW(validate(Expr::apply(SkillId::repeat_str, {Expr::input()})), ContractViolation);
  EXPECT_NO_THROW(validate(interlace_concat_expr()));
}

// ---------------------------------------------------------------------------
// Evaluation

TEST(Evaluate, WorkedExamples) {
  EXPECT_EQ(evaluate(interlace_concat_expr(), "nar"), "vnpatrqjxbh");
  EXPECT_EQ(evaluate(nested_case_expr(), "htoek"), "hHtTkK");
  EXPECT_EQ(evaluate(Expr::input(), "abc"), "abc");
}

TEST(Evaluate, OverflowCap) {
  Expr e = Expr::input();
  for (int i = 0; i < 5; ++i) e = Expr::apply(SkillId::duplicate_every_char, {std::move(e)});
  EXPECT_EQ(evaluate(e, "abcd").size(), 128u);
  EXPECT_THROW(evaluate(e, "abcd", 100), EvaluationOverflow);
}

TEST(Evaluate, Compositionality) {
  Rng rng(11);
  std::vector<SkillId> unary;
  for (SkillId id : named_skills())
    if (skill_spec(id).string_arity == 1) unary.push_back(id);
  for (int trial = 0; trial < 2000; ++trial) {
    const int depth = static_cast<int>(rng.uniform(1, 4));
    const std::string x = testing_support::random_string(rng, 10, testing_support::kPrintable);
    Expr e = Expr::input();
    std::string expected = x;
    for (int d = 0; d < depth; ++d) {
      const SkillId id = rng.pick(std::span<const SkillId>(unary));
      const auto aux = detail::sample_aux(id, rng);
      expected = apply_skill(id, std::vector<std::string>{expected}, aux);
      e = Expr::apply(id, {std::move(e)}, aux);
    }
    ASSERT_EQ(evaluate(e, x), expected);
  }
}

// ---------------------------------------------------------------------------
// Pseudonyms

TEST(Pseudonyms, CanonicalAnchors) {
  const auto names = assign_pseudonyms(0);
  EXPECT_EQ(names.label(SkillId::compress_repeats), "func_16");
  EXPECT_EQ(names.label(SkillId::remove_vowels), "func_2");
  EXPECT_EQ(names.label(SkillId::interlace_str), "func_7");
  EXPECT_EQ(names.label(SkillId::alternate_case), "func_10");
  EXPECT_EQ(names.label(SkillId::duplicate_every_char), "func_14");
  EXPECT_THROW(names.label(SkillId::concat), ContractViolation);
}

TEST(Pseudonyms, BijectiveAndStable) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto names = assign_pseudonyms(seed);
    std::set<std::string> labels;
    for (SkillId id : named_skills()) {
      labels.insert(names.label(id));
      EXPECT_EQ(names.skill_for(names.label(id)), id);
    }
    EXPECT_EQ(labels.size(), 25u);
    EXPECT_EQ(assign_pseudonyms(seed).numbers(), names.numbers());
  }
  EXPECT_NE(assign_pseudonyms(1).numbers(), assign_pseudonyms(2).numbers());
}

TEST(Pseudonyms, JsonRoundTrip) {
  const auto names = assign_pseudonyms(5);
  EXPECT_EQ(PseudonymMap::from_json(names.to_json()).numbers(), names.numbers());
}

TEST(Pseudonyms, NamesNeverChangeGroundTruth) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const Expr e = sample_composition(static_cast<int>(rng.uniform(1, 5)), full_pool(), rng.next());
    const auto a = assign_pseudonyms(rng.next() | 1), b = assign_pseudonyms(rng.next() | 1);
    const std::string x = "abcdefg";
    const auto y_a = evaluate(ReturnExprParser(return_expr_of(render_program(e, a, false)), a).parse(), x);
    const auto y_b = evaluate(ReturnExprParser(return_expr_of(render_program(e, b, false)), b).parse(), x);
    ASSERT_EQ(y_a, y_b);
    ASSERT_EQ(y_a, evaluate(e, x));
  }
}

// ---------------------------------------------------------------------------
// Rendering

TEST(Render, LevelOneWithoutDefinitions) {
  const auto names = assign_pseudonyms(0);
  EXPECT_EQ(render_program(Expr::apply(SkillId::compress_repeats, {Expr::input()}), names, false),
            "def main_solution(x):\n    return func_16(x)");
}

TEST(Render, AuxArgumentFollowsOperand) {
  const auto names = map_with({{SkillId::repeat_str, 2}, {SkillId::compress_repeats, 16}});
  const Expr e = Expr::apply(SkillId::repeat_str, {Expr::apply(SkillId::compress_repeats, {Expr::input()})}, {std::int64_t{3}});
  EXPECT_EQ(render_program(e, names, false), "def main_solution(x):\n    return func_2(func_16(x), 3)");
}

TEST(Render, ConcatIsInfix) {
  EXPECT_EQ(render_expr(interlace_concat_expr(), assign_pseudonyms(0)), "(func_7('vptqj', x) + func_2('xbh'))");
}

TEST(Render, WithDefinitions) {
  const auto program = render_program(Expr::apply(SkillId::compress_repeats, {Expr::input()}), assign_pseudonyms(0), true);
  const std::string expected =
      "def func_16(s):\n"
      "    \"\"\"Remove adjacent duplicate characters (compress repeats).\"\"\"\n"
      "    if not s:\n"
      "        return s\n"
      "    result = [s[0]]\n"
      "    for ch in s[1:]:\n"
      "        if ch != result[-1]:\n"
      "            result.append(ch)\n"
      "    return ''.join(result)\n"
      "\n"
      "def main_solution(x):\n"
      "    return func_16(x)";
  EXPECT_EQ(program, expected);
}

TEST(Render, RecursiveDefinitionsCallTheirPseudonym) {
  const auto def = render_definition(SkillId::backchain_palindrome, "func_25");
  EXPECT_NE(def.find("def func_25(s, depth):"), std::string::npos);
  EXPECT_NE(def.find("return func_25(new_s, depth - 1)"), std::string::npos);
  EXPECT_EQ(def.find("backchain_palindrome"), std::string::npos);
}

TEST(Render, QuotesEscape) {
  EXPECT_EQ(py_single_quoted("it's"), "'it\\'s'");
  EXPECT_EQ(py_double_quoted("a\"b\\"), "\"a\\\"b\\\\\"");
}

TEST(Render, RoundTripThroughParser) {
  const auto names = assign_pseudonyms(0);
  Rng rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const int level = static_cast<int>(rng.uniform(1, 6));
    const Expr e = sample_composition(level, full_pool(), rng.next());
    const Expr back = ReturnExprParser(return_expr_of(render_program(e, names, true)), names).parse();
    ASSERT_EQ(back, e);
    for (int i = 0; i < 100; ++i) {
      const std::string x = testing_support::random_string(rng, 10, "abcdefghijklmnopqrstuvwxyz");
      ASSERT_EQ(evaluate(back, x), evaluate(e, x));
    }
  }
}

TEST(ExprJson, RoundTrip) {
  Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const Expr e = sample_composition(static_cast<int>(rng.uniform(1, 8)), full_pool(), rng.next());
    ASSERT_EQ(expr_from_json(to_json(e)), e);
  }
  EXPECT_THROW(expr_from_json({{"kind", "apply"}, {"skill", "nope"}, {"children", nlohmann::ordered_json::array()}}), DataError);
}

// ---------------------------------------------------------------------------
// Sampling

TEST(Sample, SingleSkillLevelOne) {
  const std::vector<SkillId> pool{SkillId::compress_repeats};
  EXPECT_EQ(sample_composition(1, pool, 123), Expr::apply(SkillId::compress_repeats, {Expr::input()}));
}

TEST(Sample, SpineLevelAcrossSeeds) {
  const auto pool = full_pool();
  for (int level = 1; level <= 8; ++level) {
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      const Expr e = sample_composition(level, pool, seed);
      ASSERT_EQ(spine_level(e), level) << "seed " << seed;
      ASSERT_NE(spine(e).front()->skill, SkillId::concat);
      ASSERT_LE(evaluate(e, "abcdefghij").size(), 512u);
    }
  }
}

TEST(Sample, StaysWithinPool) {
  const std::vector<SkillId> pool{SkillId::remove_vowels, SkillId::interlace_str, SkillId::rotate_str, SkillId::concat};
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    for (SkillId id : skills_used(sample_composition(4, pool, seed)))
      ASSERT_NE(std::find(pool.begin(), pool.end(), id), pool.end());
  }
}

TEST(Sample, ConstantsOnlyUnderBinarySkillsOrBranches) {
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const Expr e = sample_composition(5, full_pool(), seed);
    for (const Expr* node : spine(e)) {
      if (skill_spec(node->skill).string_arity == 2) {
        const Expr& branch = node->children[0].is_input() || detail::count_inputs(node->children[0]) ? node->children[1]
                                                                                                      : node->children[0];
        if (branch.is_apply()) {
          ASSERT_EQ(branch.children.size(), 1u);
          ASSERT_TRUE(branch.children[0].is_constant());
        } else {
          ASSERT_TRUE(branch.is_constant());
        }
      }
    }
  }
}

TEST(Sample, Deterministic) {
  const auto pool = full_pool();
  for (std::uint64_t seed = 0; seed < 200; ++seed)
    ASSERT_EQ(sample_composition(6, pool, seed), sample_composition(6, pool, seed));
}

TEST(Sample, DuplicateOnlyExhausts) {
  const std::vector<SkillId> pool{SkillId::duplicate_every_char};
  CompositionConstraints c;
  c.probe_input = "abcdefghi";
  EXPECT_THROW(sample_composition(6, pool, 0, c), GenerationExhausted);
  c.probe_input = "abcdefgh";
  EXPECT_EQ(evaluate(sample_composition(6, pool, 0, c), c.probe_input).size(), 512u);
}

TEST(Sample, Contracts) {
  EXPECT_THROW(sample_composition(0, full_pool(), 0), ContractViolation);
  EXPECT_THROW(sample_composition(1, std::vector<SkillId>{}, 0), ContractViolation);
  EXPECT_THROW(sample_composition(1, std::vector<SkillId>{SkillId::concat}, 0), GenerationExhausted);
}
