#include <algorithm>
#include <functional>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "compskill/skills.hpp"
#include "support.hpp"

using namespace compskill;
using testing_support::kLetters;
using testing_support::kPrintable;
using testing_support::random_string;

namespace {

constexpr int kTrials = 10000;

std::string apply1(SkillId id, const std::string& s) { return apply_skill(id, std::vector<std::string>{s}); }

std::string apply1(SkillId id, const std::string& s, AuxValue aux) {
  return apply_skill(id, std::vector<std::string>{s}, std::vector<AuxValue>{std::move(aux)});
}

std::string apply2(SkillId id, const std::string& a, const std::string& b) {
  return apply_skill(id, std::vector<std::string>{a, b});
}

std::string sorted(std::string s) {
  std::sort(s.begin(), s.end());
  return s;
}

bool is_palindrome(const std::string& s) { return std::equal(s.begin(), s.end(), s.rbegin()); }

// Literal transcriptions of the recursive reference definitions.
std::optional<std::string> add_digit_helper(const std::string& t, std::size_t d) {
  if (std::any_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; })) return t;
  if (d == 0) return std::nullopt;
  const std::vector<std::function<std::string(const std::string&)>> transformations = {
      [](const std::string& x) { return x + "1"; },
      [](const std::string& x) { return "2" + x; },
      [](const std::string& x) {
        std::string y = x;
        std::replace(y.begin(), y.end(), 'a', '3');
        return y;
      },
      [](const std::string& x) { return std::string(x.rbegin(), x.rend()); },
  };
  for (const auto& trans : transformations)
    if (auto res = add_digit_helper(trans(t), d - 1)) return res;
  return std::nullopt;
}

std::string reference_add_digit(const std::string& s, std::size_t depth) {
  return add_digit_helper(s, depth).value_or(s);
}

std::string reference_palindrome(const std::string& s, std::size_t depth) {
  if (is_palindrome(s)) return s;
  if (depth == 0) return s;
  return reference_palindrome(s + std::string(s.rbegin(), s.rend()), depth - 1);
}

}  // namespace

// ---------------------------------------------------------------------------
// Catalog

TEST(SkillCatalog, HasTwentySixDistinctIdentities) {
  std::set<std::string_view> names;
  for (const auto& spec : skill_catalog()) names.insert(spec.name);
  EXPECT_EQ(names.size(), 26u);
  EXPECT_EQ(named_skills().size(), 25u);
  EXPECT_EQ(skill_name(SkillId::concat), "concat");
}

TEST(SkillCatalog, NamesRoundTrip) {
  for (const auto& spec : skill_catalog()) EXPECT_EQ(skill_from_name(spec.name), spec.id);
  EXPECT_FALSE(skill_from_name("not_a_skill").has_value());
}

TEST(SkillCatalog, Arities) {
  const std::set<SkillId> binary = {SkillId::interlace_str, SkillId::recursive_interlace, SkillId::concat};
  for (const auto& spec : skill_catalog()) EXPECT_EQ(spec.string_arity, binary.contains(spec.id) ? 2 : 1) << spec.name;
}

TEST(SkillCatalog, AuxParameters) {
  const std::set<SkillId> int_aux = {SkillId::repeat_str,  SkillId::loop_concat,         SkillId::rotate_str,
                                     SkillId::while_rotate, SkillId::shift_chars,        SkillId::backchain_add_digit,
                                     SkillId::backchain_palindrome};
  const std::set<SkillId> str_aux = {SkillId::add_prefix, SkillId::add_suffix, SkillId::insert_separator};
  for (const auto& spec : skill_catalog()) {
    if (int_aux.contains(spec.id)) {
      ASSERT_TRUE(spec.aux) << spec.name;
      EXPECT_NE(spec.aux->kind, AuxKind::char_string) << spec.name;
    } else if (str_aux.contains(spec.id)) {
      ASSERT_TRUE(spec.aux) << spec.name;
      EXPECT_EQ(spec.aux->kind, AuxKind::char_string) << spec.name;
    } else {
      EXPECT_FALSE(spec.aux) << spec.name;
    }
  }
}

TEST(SkillCatalog, SourcesCarryTheirOwnName) {
  for (SkillId id : named_skills()) {
    const auto& spec = skill_spec(id);
    EXPECT_EQ(spec.source.rfind("def " + std::string(spec.name) + "(", 0), 0u) << spec.name;
    // Multi-line docstrings are joined into one description line.
    EXPECT_NE(spec.source.find(spec.description.substr(0, 20)), std::string_view::npos) << spec.name;
  }
  EXPECT_TRUE(skill_spec(SkillId::concat).source.empty());
}

TEST(SkillCatalog, ManifestListsEverySkill) {
  const auto m = skill_manifest();
  ASSERT_EQ(m.size(), 26u);
  EXPECT_EQ(m[1]["name"], "repeat_str");
  EXPECT_EQ(m[1]["aux_params"][0]["kind"], "small-int");
}

// ---------------------------------------------------------------------------
// Examples

TEST(SkillExamples, Fixed) {
  EXPECT_EQ(apply1(SkillId::compress_repeats, "tihess"), "tihes");
  EXPECT_EQ(apply1(SkillId::remove_vowels, "xbh"), "xbh");
  EXPECT_EQ(apply1(SkillId::duplicate_every_char, "htk"), "hhttkk");
  EXPECT_EQ(apply1(SkillId::alternate_case, "hhttkk"), "hHtTkK");
  EXPECT_EQ(apply2(SkillId::interlace_str, "vptqj", "nar"), "vnpatrqj");
  EXPECT_EQ(apply1(SkillId::rotate_str, "abcde", std::int64_t{2}), "cdeab");
  EXPECT_EQ(apply1(SkillId::mirror_str, "ab"), "abba");
  EXPECT_EQ(apply1(SkillId::vowel_to_number, "aeiou"), "12345");
  EXPECT_EQ(apply1(SkillId::vowel_to_number, "AEIOUx"), "12345x");
  EXPECT_EQ(apply1(SkillId::verify_even_length, "abcd"), "abcd");
  EXPECT_EQ(apply1(SkillId::verify_even_length, "abc"), "ab");
  EXPECT_EQ(apply2(SkillId::concat, "vnpatrqj", "xbh"), "vnpatrqjxbh");
}

TEST(SkillExamples, DeterministicShuffle) {
  EXPECT_EQ(skills::deterministic_shuffle("abcde"), "adbec");
  EXPECT_EQ(skills::deterministic_shuffle("abcdef"), "afedcb");
  EXPECT_EQ(skills::deterministic_shuffle(""), "");
  EXPECT_EQ(skills::deterministic_shuffle("a"), "a");
}

TEST(SkillExamples, Backchain) {
  EXPECT_EQ(skills::backchain_add_digit("ab", 1), "ab1");
  EXPECT_EQ(skills::backchain_add_digit("7x", 5), "7x");
  EXPECT_EQ(skills::backchain_add_digit("bc", 0), "bc");
  EXPECT_EQ(skills::backchain_palindrome("aba", 3), "aba");
  EXPECT_EQ(skills::backchain_palindrome("ab", 2), "abba");
  EXPECT_EQ(skills::backchain_palindrome("ab", 0), "ab");
}

TEST(SkillExamples, Misc) {
  EXPECT_EQ(skills::repeat_str("ab", 3), "ababab");
  EXPECT_EQ(skills::repeat_str("ab", 0), "");
  EXPECT_EQ(skills::sort_chars("dcba"), "abcd");
  EXPECT_EQ(skills::reverse_words("  hello   big world "), "world big hello");
  EXPECT_EQ(skills::reverse_words("a\tb\nc"), "c b a");
  EXPECT_EQ(skills::reverse_words(""), "");
  EXPECT_EQ(skills::add_prefix("bc", "a"), "abc");
  EXPECT_EQ(skills::add_suffix("ab", "c"), "abc");
  EXPECT_EQ(skills::interlace_str("ab", "wxyz"), "awbxyz");
  EXPECT_EQ(skills::rotate_str("abc", 4), "bca");
  EXPECT_EQ(skills::rotate_str("", 3), "");
  EXPECT_EQ(skills::alternate_case("ABCD"), "aBcD");
  EXPECT_EQ(skills::shift_chars("xyZ!", 3), "abC!");
  EXPECT_EQ(skills::insert_separator("abc", "-"), "a-b-c");
  EXPECT_EQ(skills::insert_separator("", "-"), "");
  EXPECT_EQ(skills::fancy_brackets("ab"), "<<a>><<b>>");
  EXPECT_EQ(skills::loop_concat("ab", 2), "abab");
  EXPECT_EQ(skills::while_rotate("abc", 1), "bca");
  EXPECT_EQ(skills::recursive_interlace("abc", "x"), "axbc");
  EXPECT_EQ(skills::loop_filter_nonalpha("a1 b-C"), "abC");
  EXPECT_EQ(skills::recursive_reverse("abc"), "cba");
}

TEST(SkillArguments, MismatchNamesTheParameter) {
  EXPECT_THROW(apply_skill(SkillId::concat, std::vector<std::string>{"a"}), ContractViolation);
  EXPECT_THROW(apply1(SkillId::remove_vowels, "a", std::int64_t{1}), ContractViolation);
  try {
    apply1(SkillId::rotate_str, "abc", std::string("x"));
    FAIL();
  } catch (const ContractViolation& e) {
    EXPECT_NE(std::string(e.what()).find("rotate_str.n"), std::string::npos) << e.what();
  }
  try {
    apply1(SkillId::repeat_str, "abc", std::int64_t{-1});
    FAIL();
  } catch (const ContractViolation& e) {
    EXPECT_NE(std::string(e.what()).find("repeat_str.n"), std::string::npos) << e.what();
  }
  EXPECT_THROW(apply1(SkillId::add_prefix, "abc", std::int64_t{2}), ContractViolation);
}

// ---------------------------------------------------------------------------
// Properties over randomized inputs

class SkillProperty : public ::testing::Test {
 protected:
  Rng rng{0x5eed};
  std::string any() { return random_string(rng, 64, kPrintable); }
  std::size_t small() { return static_cast<std::size_t>(rng.uniform(0, 100)); }
};

TEST_F(SkillProperty, PermutationsPreserveMultiset) {
  for (int i = 0; i < kTrials; ++i) {
    const std::string s = any();
    const std::size_t n = small();
    for (const std::string& out : {skills::deterministic_shuffle(s), skills::rotate_str(s, n), skills::while_rotate(s, n),
                                   skills::sort_chars(s), skills::recursive_reverse(s)}) {
      ASSERT_EQ(out.size(), s.size());
      ASSERT_EQ(sorted(out), sorted(s)) << s;
    }
  }
}

TEST_F(SkillProperty, ShuffleMatchesIndexFormula) {
  for (int i = 0; i < kTrials; ++i) {
    const std::string s = any();
    const std::size_t len = s.size();
    std::string expected;
    if (len > 0) {
      std::size_t m = 3;
      while (std::gcd(m, len) != 1) m += 2;
      for (std::size_t k = 0; k < len; ++k) expected += s[(k * m) % len];
    }
    ASSERT_EQ(skills::deterministic_shuffle(s), expected);
  }
}

TEST_F(SkillProperty, Idempotence) {
  for (int i = 0; i < kTrials; ++i) {
    const std::string s = any();
    for (SkillId id : {SkillId::compress_repeats, SkillId::sort_chars, SkillId::remove_vowels, SkillId::loop_filter_nonalpha}) {
      const std::string once = apply1(id, s);
      ASSERT_EQ(apply1(id, once), once) << skill_name(id) << " on " << s;
    }
  }
}

TEST_F(SkillProperty, ExtensionalEquivalences) {
  for (int i = 0; i < kTrials; ++i) {
    const std::string a = any(), b = any();
    const std::size_t n = small();
    const std::size_t reps = static_cast<std::size_t>(rng.uniform(0, 6));
    ASSERT_EQ(skills::loop_concat(a, reps), skills::repeat_str(a, reps));
    ASSERT_EQ(skills::while_rotate(a, n), skills::rotate_str(a, n));
    ASSERT_EQ(skills::recursive_interlace(a, b), skills::interlace_str(a, b));
    ASSERT_EQ(skills::recursive_reverse(a), std::string(a.rbegin(), a.rend()));
  }
}

TEST_F(SkillProperty, PalindromeGuarantees) {
  for (int i = 0; i < kTrials; ++i) {
    const std::string s = any();
    const std::size_t d = static_cast<std::size_t>(rng.uniform(1, 4));
    ASSERT_TRUE(is_palindrome(skills::mirror_str(s)));
    const std::string p = skills::backchain_palindrome(s, d);
    ASSERT_TRUE(is_palindrome(p)) << s;
    ASSERT_EQ(p, reference_palindrome(s, d));
    ASSERT_EQ(skills::backchain_palindrome(s, 0), s);
  }
}

TEST_F(SkillProperty, LengthLaws) {
  for (int i = 0; i < kTrials; ++i) {
    const std::string s = any();
    const std::size_t k = static_cast<std::size_t>(rng.uniform(0, 26));
    ASSERT_EQ(skills::duplicate_every_char(s).size(), 2 * s.size());
    ASSERT_EQ(skills::alternate_case(s).size(), s.size());
    ASSERT_EQ(skills::shift_chars(s, k).size(), s.size());
    ASSERT_EQ(skills::verify_even_length(s).size() % 2, 0u);
  }
}

TEST_F(SkillProperty, ShiftInverse) {
  for (int i = 0; i < kTrials; ++i) {
    const std::string s = random_string(rng, 64, kLetters);
    const std::size_t k = static_cast<std::size_t>(rng.uniform(0, 26));
    ASSERT_EQ(skills::shift_chars(skills::shift_chars(s, k), 26 - k), s);
  }
}

TEST_F(SkillProperty, AddDigitMatchesRecursiveReference) {
  for (int i = 0; i < kTrials; ++i) {
    const std::string s = random_string(rng, 12, i % 2 ? kLetters : kPrintable);
    const std::size_t d = static_cast<std::size_t>(rng.uniform(0, 4));
    const std::string out = skills::backchain_add_digit(s, d);
    ASSERT_EQ(out, reference_add_digit(s, d)) << s << " depth " << d;
    if (d >= 1) {
      ASSERT_TRUE(std::any_of(out.begin(), out.end(), [](char c) { return c >= '0' && c <= '9'; }));
    }
  }
}

TEST_F(SkillProperty, ReferentialTransparency) {
  for (int i = 0; i < kTrials / 10; ++i) {
    const std::string a = any(), b = any();
    for (const auto& spec : skill_catalog()) {
      std::vector<std::string> strings = spec.string_arity == 2 ? std::vector<std::string>{a, b} : std::vector<std::string>{a};
      std::vector<AuxValue> aux;
      if (spec.aux && spec.aux->kind == AuxKind::char_string) aux.emplace_back(std::string("-"));
      if (spec.aux && spec.aux->kind != AuxKind::char_string) aux.emplace_back(std::int64_t{2});
      ASSERT_EQ(apply_skill(spec.id, strings, aux), apply_skill(spec.id, strings, aux)) << spec.name;
    }
  }
}
