#pragma once

// The fixed catalog of atomic string transformations. Each function mirrors
// its Python reference body exactly (ASCII semantics); `SkillSpec::source`
// holds that body verbatim for prompts that show definitions.

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "compskill/errors.hpp"

namespace compskill {

enum class SkillId : std::uint8_t {
  deterministic_shuffle,
  repeat_str,
  remove_vowels,
  sort_chars,
  reverse_words,
  add_prefix,
  add_suffix,
  interlace_str,
  rotate_str,
  mirror_str,
  alternate_case,
  shift_chars,
  vowel_to_number,
  insert_separator,
  duplicate_every_char,
  fancy_brackets,
  compress_repeats,
  recursive_reverse,
  loop_concat,
  while_rotate,
  recursive_interlace,
  loop_filter_nonalpha,
  verify_even_length,
  backchain_add_digit,
  backchain_palindrome,
  concat,
};

inline constexpr std::size_t kNamedSkillCount = 25;
inline constexpr std::size_t kSkillCount = 26;

enum class AuxKind : std::uint8_t { small_int, char_string, shift_int, depth_int };

struct AuxParam {
  std::string_view name;
  AuxKind kind;
};

using AuxValue = std::variant<std::int64_t, std::string>;

struct SkillSpec {
  SkillId id;
  std::string_view name;
  int string_arity;
  std::optional<AuxParam> aux;  // every skill has at most one aux parameter
  std::string_view description;
  std::string_view source;  // empty for concat, which renders as infix '+'

  std::size_t aux_count() const noexcept { return aux ? 1 : 0; }
};

namespace detail {

inline constexpr std::array<SkillSpec, kSkillCount> kCatalog{{
    {SkillId::deterministic_shuffle, "deterministic_shuffle", 1, std::nullopt,
     "Reorder characters using a fixed multiplier permutation.",
     R"py(def deterministic_shuffle(s):
    """Reorder characters using a fixed multiplier permutation."""
    L = len(s)
    if L == 0:
        return s
    multiplier = 3
    while gcd(multiplier, L) != 1:
        multiplier += 2
    return ''.join(s[(i * multiplier) % L] for i in range(L)))py"},
    {SkillId::repeat_str, "repeat_str", 1, AuxParam{"n", AuxKind::small_int},
     "Repeat the string s exactly n times.",
     R"py(def repeat_str(s, n):
    """Repeat the string s exactly n times."""
    return s * n)py"},
    {SkillId::remove_vowels, "remove_vowels", 1, std::nullopt, "Remove vowels from the string.",
     R"py(def remove_vowels(s):
    """Remove vowels from the string."""
    vowels = 'aeiouAEIOU'
    return ''.join(ch for ch in s if ch not in vowels))py"},
    {SkillId::sort_chars, "sort_chars", 1, std::nullopt, "Sort the characters in the string.",
     R"py(def sort_chars(s):
    """Sort the characters in the string."""
    return ''.join(sorted(s)))py"},
    {SkillId::reverse_words, "reverse_words", 1, std::nullopt,
     "Reverse the order of words in the string.",
     R"py(def reverse_words(s):
    """Reverse the order of words in the string."""
    words = s.split()
    return ' '.join(reversed(words)))py"},
    {SkillId::add_prefix, "add_prefix", 1, AuxParam{"pre", AuxKind::char_string},
     "Add a fixed prefix to the string.",
     R"py(def add_prefix(s, pre):
    """Add a fixed prefix to the string."""
    return pre + s)py"},
    {SkillId::add_suffix, "add_suffix", 1, AuxParam{"suf", AuxKind::char_string},
     "Add a fixed suffix to the string.",
     R"py(def add_suffix(s, suf):
    """Add a fixed suffix to the string."""
    return s + suf)py"},
    {SkillId::interlace_str, "interlace_str", 2, std::nullopt,
     "Interlace two strings character by character (iterative).",
     R"py(def interlace_str(s1, s2):
    """Interlace two strings character by character (iterative)."""
    result = []
    len1, len2 = len(s1), len(s2)
    for i in range(max(len1, len2)):
        if i < len1:
            result.append(s1[i])
        if i < len2:
            result.append(s2[i])
    return ''.join(result))py"},
    {SkillId::rotate_str, "rotate_str", 1, AuxParam{"n", AuxKind::small_int},
     "Rotate the string s by n positions using slicing.",
     R"py(def rotate_str(s, n):
    """Rotate the string s by n positions using slicing."""
    if not s:
        return s
    n = n % len(s)
    return s[n:] + s[:n])py"},
    {SkillId::mirror_str, "mirror_str", 1, std::nullopt,
     "Append the reversed string to the original.",
     R"py(def mirror_str(s):
    """Append the reversed string to the original."""
    return s + s[::-1])py"},
    {SkillId::alternate_case, "alternate_case", 1, std::nullopt,
     "Alternate the case of characters (even-index lower, odd-index upper).",
     R"py(def alternate_case(s):
    """Alternate the case of characters (even-index lower, odd-index upper)."""
    return ''.join(ch.lower() if i % 2 == 0 else ch.upper() for i, ch in enumerate(s)))py"},
    {SkillId::shift_chars, "shift_chars", 1, AuxParam{"shift", AuxKind::shift_int},
     "Shift alphabetical characters by a fixed amount (wrapping around). Non-letters remain "
     "unchanged.",
     R"py(def shift_chars(s, shift):
    """
    Shift alphabetical characters by a fixed amount (wrapping around).
    Non-letters remain unchanged.
    """

    def shift_char(ch):
        if 'a' <= ch <= 'z':
            return chr((ord(ch) - ord('a') + shift) % 26 + ord('a'))
        elif 'A' <= ch <= 'Z':
            return chr((ord(ch) - ord('A') + shift) % 26 + ord('A'))
        return ch

    return ''.join(shift_char(ch) for ch in s))py"},
    {SkillId::vowel_to_number, "vowel_to_number", 1, std::nullopt,
     "Replace vowels with numbers: a/A->1, e/E->2, i/I->3, o/O->4, u/U->5.",
     R"py(def vowel_to_number(s):
    """Replace vowels with numbers: a/A->1, e/E->2, i/I->3, o/O->4, u/U->5."""
    mapping = {'a': '1', 'e': '2', 'i': '3', 'o': '4', 'u': '5', 'A': '1', 'E': '2', 'I': '3', 'O': '4', 'U': '5'}
    return ''.join(mapping.get(ch, ch) for ch in s))py"},
    {SkillId::insert_separator, "insert_separator", 1, AuxParam{"sep", AuxKind::char_string},
     "Insert a fixed separator between every two characters.",
     R"py(def insert_separator(s, sep):
    """Insert a fixed separator between every two characters."""
    return sep.join(s))py"},
    {SkillId::duplicate_every_char, "duplicate_every_char", 1, std::nullopt,
     "Duplicate every character in the string.",
     R"py(def duplicate_every_char(s):
    """Duplicate every character in the string."""
    return ''.join(ch * 2 for ch in s))py"},
    {SkillId::fancy_brackets, "fancy_brackets", 1, std::nullopt,
     "Enclose each character in fancy brackets.",
     R"py(def fancy_brackets(s):
    """Enclose each character in fancy brackets."""
    return ''.join("<<" + ch + ">>" for ch in s))py"},
    {SkillId::compress_repeats, "compress_repeats", 1, std::nullopt,
     "Remove adjacent duplicate characters (compress repeats).",
     R"py(def compress_repeats(s):
    """Remove adjacent duplicate characters (compress repeats)."""
    if not s:
        return s
    result = [s[0]]
    for ch in s[1:]:
        if ch != result[-1]:
            result.append(ch)
    return ''.join(result))py"},
    {SkillId::recursive_reverse, "recursive_reverse", 1, std::nullopt,
     "Recursively reverse the string.",
     R"py(def recursive_reverse(s):
    """Recursively reverse the string."""
    if s == "":
        return s
    return recursive_reverse(s[1:]) + s[0])py"},
    {SkillId::loop_concat, "loop_concat", 1, AuxParam{"n", AuxKind::small_int},
     "Concatenate s with itself n times using a loop.",
     R"py(def loop_concat(s, n):
    """Concatenate s with itself n times using a loop."""
    result = ""
    for _ in range(n):
        result += s
    return result)py"},
    {SkillId::while_rotate, "while_rotate", 1, AuxParam{"n", AuxKind::small_int},
     "Rotate the string using a while loop (n times).",
     R"py(def while_rotate(s, n):
    """Rotate the string using a while loop (n times)."""
    count = 0
    while count < n and s:
        s = s[1:] + s[0]
        count += 1
    return s)py"},
    {SkillId::recursive_interlace, "recursive_interlace", 2, std::nullopt,
     "Recursively interlace two strings character by character.",
     R"py(def recursive_interlace(s1, s2):
    """Recursively interlace two strings character by character."""
    if not s1 or not s2:
        return s1 + s2
    return s1[0] + s2[0] + recursive_interlace(s1[1:], s2[1:]))py"},
    {SkillId::loop_filter_nonalpha, "loop_filter_nonalpha", 1, std::nullopt,
     "Remove non-alphabetic characters using an explicit loop.",
     R"py(def loop_filter_nonalpha(s):
    """Remove non-alphabetic characters using an explicit loop."""
    result = ""
    for ch in s:
        if ch.isalpha():
            result += ch
    return result)py"},
    {SkillId::verify_even_length, "verify_even_length", 1, std::nullopt,
     "Verification operator: if the length of s is even, return s; otherwise remove the last "
     "character.",
     R"py(def verify_even_length(s):
    """
    Verification operator: if the length of s is even, return s;
    otherwise remove the last character.
    """
    return s if len(s) % 2 == 0 else s[:-1])py"},
    {SkillId::backchain_add_digit, "backchain_add_digit", 1,
     AuxParam{"depth", AuxKind::depth_int},
     "Backtracking operator: deterministically transform s so it contains a digit. Applies a "
     "fixed sequence of transformations recursively.",
     R"py(def backchain_add_digit(s, depth):
    """
    Backtracking operator: deterministically transform s so it contains a digit.
    Applies a fixed sequence of transformations recursively.
    """

    def has_digit(t):
        return any(ch.isdigit() for ch in t)

    transformations = [
        lambda t: t + "1",
        lambda t: "2" + t,
        lambda t: t.replace("a", "3"),
        lambda t: t[::-1],
    ]

    def helper(t, d):
        if has_digit(t):
            return t
        if d == 0:
            return None
        for trans in transformations:
            new_t = trans(t)
            res = helper(new_t, d - 1)
            if res is not None:
                return res
        return None

    result = helper(s, depth)
    return result if result is not None else s)py"},
    {SkillId::backchain_palindrome, "backchain_palindrome", 1,
     AuxParam{"depth", AuxKind::depth_int},
     "Back chaining: try to transform s into a palindrome. If s is not already a palindrome and "
     "depth permits, append its reverse and try again.",
     R"py(def backchain_palindrome(s, depth):
    """
    Back chaining: try to transform s into a palindrome.
    If s is not already a palindrome and depth permits, append its reverse and try again.
    """
    if s == s[::-1]:
        return s
    if depth <= 0:
        return s
    new_s = s + s[::-1]
    return backchain_palindrome(new_s, depth - 1))py"},
    {SkillId::concat, "concat", 2, std::nullopt, "String concatenation, rendered as infix '+'.",
     ""},
}};

}  // namespace detail

constexpr const SkillSpec& skill_spec(SkillId id) {
  return detail::kCatalog[static_cast<std::size_t>(id)];
}

constexpr std::span<const SkillSpec, kSkillCount> skill_catalog() { return detail::kCatalog; }

constexpr std::string_view skill_name(SkillId id) { return skill_spec(id).name; }

inline std::optional<SkillId> skill_from_name(std::string_view name) {
  for (const auto& spec : detail::kCatalog)
    if (spec.name == name) return spec.id;
  return std::nullopt;
}

/// The 25 catalog skills, excluding concat.
inline std::vector<SkillId> named_skills() {
  std::vector<SkillId> out;
  out.reserve(kNamedSkillCount);
  for (std::size_t i = 0; i < kNamedSkillCount; ++i) out.push_back(static_cast<SkillId>(i));
  return out;
}

inline std::string_view aux_kind_name(AuxKind kind) {
  switch (kind) {
    case AuxKind::small_int: return "small-int";
    case AuxKind::char_string: return "char-string";
    case AuxKind::shift_int: return "shift-int";
    case AuxKind::depth_int: return "depth-int";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Reference semantics. ASCII only: "vowel", "alpha", "digit", case and
// whitespace follow the C locale's ASCII classes.

namespace skills {

namespace ascii {
constexpr bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
constexpr bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
constexpr bool is_alpha(char c) { return is_lower(c) || is_upper(c); }
constexpr bool is_digit(char c) { return c >= '0' && c <= '9'; }
constexpr bool is_vowel(char c) {
  return std::string_view("aeiouAEIOU").find(c) != std::string_view::npos;
}
// str.split() separators restricted to ASCII: \t\n\v\f\r, \x1c-\x1f and space.
constexpr bool is_space(char c) { return c == ' ' || (c >= '\t' && c <= '\r') || (c >= '\x1c' && c <= '\x1f'); }
constexpr char to_lower(char c) { return is_upper(c) ? static_cast<char>(c - 'A' + 'a') : c; }
constexpr char to_upper(char c) { return is_lower(c) ? static_cast<char>(c - 'a' + 'A') : c; }
}  // namespace ascii

inline std::string deterministic_shuffle(std::string_view s) {
  const std::size_t len = s.size();
  if (len == 0) return std::string();
  std::size_t multiplier = 3;
  while (std::gcd(multiplier, len) != 1) multiplier += 2;
  std::string out(len, '\0');
  for (std::size_t i = 0; i < len; ++i) out[i] = s[(i * multiplier) % len];
  return out;
}

inline std::string repeat_str(std::string_view s, std::size_t n) {
  std::string out;
  out.reserve(s.size() * n);
  for (std::size_t i = 0; i < n; ++i) out += s;
  return out;
}

inline std::string remove_vowels(std::string_view s) {
  std::string out;
  for (char ch : s)
    if (!ascii::is_vowel(ch)) out.push_back(ch);
  return out;
}

inline std::string sort_chars(std::string_view s) {
  std::string out(s);
  std::sort(out.begin(), out.end(),
            [](char a, char b) { return static_cast<unsigned char>(a) < static_cast<unsigned char>(b); });
  return out;
}

inline std::string reverse_words(std::string_view s) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && ascii::is_space(s[i])) ++i;
    const std::size_t start = i;
    while (i < s.size() && !ascii::is_space(s[i])) ++i;
    if (i > start) words.push_back(s.substr(start, i - start));
  }
  std::string out;
  for (auto it = words.rbegin(); it != words.rend(); ++it) {
    if (!out.empty() || it != words.rbegin()) out.push_back(' ');
    out += *it;
  }
  return out;
}

inline std::string add_prefix(std::string_view s, std::string_view pre) {
  return std::string(pre) + std::string(s);
}

inline std::string add_suffix(std::string_view s, std::string_view suf) {
  return std::string(s) + std::string(suf);
}

inline std::string interlace_str(std::string_view s1, std::string_view s2) {
  std::string out;
  out.reserve(s1.size() + s2.size());
  for (std::size_t i = 0; i < std::max(s1.size(), s2.size()); ++i) {
    if (i < s1.size()) out.push_back(s1[i]);
    if (i < s2.size()) out.push_back(s2[i]);
  }
  return out;
}

inline std::string rotate_str(std::string_view s, std::size_t n) {
  if (s.empty()) return std::string();
  n %= s.size();
  return std::string(s.substr(n)) + std::string(s.substr(0, n));
}

inline std::string mirror_str(std::string_view s) {
  std::string out(s);
  out.append(s.rbegin(), s.rend());
  return out;
}

inline std::string alternate_case(std::string_view s) {
  std::string out(s);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = i % 2 == 0 ? ascii::to_lower(out[i]) : ascii::to_upper(out[i]);
  return out;
}

inline std::string shift_chars(std::string_view s, std::size_t shift) {
  const auto k = static_cast<int>(shift % 26);
  std::string out(s);
  for (char& ch : out) {
    if (ascii::is_lower(ch))
      ch = static_cast<char>((ch - 'a' + k) % 26 + 'a');
    else if (ascii::is_upper(ch))
      ch = static_cast<char>((ch - 'A' + k) % 26 + 'A');
  }
  return out;
}

inline std::string vowel_to_number(std::string_view s) {
  std::string out(s);
  for (char& ch : out) {
    switch (ascii::to_lower(ch)) {
      case 'a': ch = '1'; break;
      case 'e': ch = '2'; break;
      case 'i': ch = '3'; break;
      case 'o': ch = '4'; break;
      case 'u': ch = '5'; break;
      default: break;
    }
  }
  return out;
}

inline std::string insert_separator(std::string_view s, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i > 0) out += sep;
    out.push_back(s[i]);
  }
  return out;
}

inline std::string duplicate_every_char(std::string_view s) {
  std::string out;
  out.reserve(s.size() * 2);
  for (char ch : s) out.append(2, ch);
  return out;
}

inline std::string fancy_brackets(std::string_view s) {
  std::string out;
  out.reserve(s.size() * 5);
  for (char ch : s) {
    out += "<<";
    out.push_back(ch);
    out += ">>";
  }
  return out;
}

inline std::string compress_repeats(std::string_view s) {
  std::string out;
  for (char ch : s)
    if (out.empty() || out.back() != ch) out.push_back(ch);
  return out;
}

// recursive_reverse(s) = recursive_reverse(s[1:]) + s[0], unrolled.
inline std::string recursive_reverse(std::string_view s) { return std::string(s.rbegin(), s.rend()); }

inline std::string loop_concat(std::string_view s, std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) out += s;
  return out;
}

// One left rotation per iteration; after len(s) iterations the string is back
// where it started, so only n mod len(s) iterations are observable.
inline std::string while_rotate(std::string_view s, std::size_t n) {
  std::string cur(s);
  if (cur.empty()) return cur;
  for (std::size_t count = 0; count < n % cur.size(); ++count) {
    std::rotate(cur.begin(), cur.begin() + 1, cur.end());
  }
  return cur;
}

inline std::string recursive_interlace(std::string_view s1, std::string_view s2) {
  std::string out;
  out.reserve(s1.size() + s2.size());
  while (!s1.empty() && !s2.empty()) {
    out.push_back(s1.front());
    out.push_back(s2.front());
    s1.remove_prefix(1);
    s2.remove_prefix(1);
  }
  out += s1;
  out += s2;
  return out;
}

inline std::string loop_filter_nonalpha(std::string_view s) {
  std::string out;
  for (char ch : s)
    if (ascii::is_alpha(ch)) out.push_back(ch);
  return out;
}

inline std::string verify_even_length(std::string_view s) {
  return std::string(s.size() % 2 == 0 ? s : s.substr(0, s.size() - 1));
}

/// Strict DFS over [append "1", prepend "2", replace "a"->"3", reverse],
/// with an explicit stack in place of the recursive helper.
inline std::string backchain_add_digit(std::string_view s, std::size_t depth) {
  const auto has_digit = [](std::string_view t) { return std::any_of(t.begin(), t.end(), ascii::is_digit); };
  const auto transform = [](const std::string& t, int which) {
    switch (which) {
      case 0: return t + "1";
      case 1: return "2" + t;
      case 2: {
        std::string r = t;
        std::replace(r.begin(), r.end(), 'a', '3');
        return r;
      }
      default: return std::string(t.rbegin(), t.rend());
    }
  };

  struct Frame {
    std::string text;
    std::size_t depth_left;
    int next_transform;
  };
  std::vector<Frame> stack;
  stack.push_back({std::string(s), depth, 0});
  bool entering = true;
  while (!stack.empty()) {
    Frame& top = stack.back();
    if (entering) {
      if (has_digit(top.text)) return top.text;
      if (top.depth_left == 0) {
        stack.pop_back();
        entering = false;
        continue;
      }
    }
    if (top.next_transform == 4) {
      stack.pop_back();
      entering = false;
      continue;
    }
    Frame child{transform(top.text, top.next_transform), top.depth_left - 1, 0};
    ++top.next_transform;
    stack.push_back(std::move(child));
    entering = true;
  }
  return std::string(s);
}

inline std::string backchain_palindrome(std::string_view s, std::size_t depth) {
  std::string cur(s);
  const auto is_palindrome = [](const std::string& t) { return std::equal(t.begin(), t.begin() + t.size() / 2, t.rbegin()); };
  for (;;) {
    if (is_palindrome(cur)) return cur;
    if (depth == 0) return cur;
    cur = mirror_str(cur);
    --depth;
  }
}

inline std::string concat(std::string_view s1, std::string_view s2) {
  return std::string(s1) + std::string(s2);
}

}  // namespace skills

/// Check operand/aux shapes against the catalog; throws ContractViolation naming the parameter.
inline void check_skill_arguments(const SkillSpec& spec, std::size_t string_count,
                                  std::span<const AuxValue> aux) {
  if (string_count != static_cast<std::size_t>(spec.string_arity)) {
    throw ContractViolation(std::string(spec.name) + ": expected " + std::to_string(spec.string_arity) +
                            " string operand(s), got " + std::to_string(string_count));
  }
  if (aux.size() != spec.aux_count()) {
    throw ContractViolation(std::string(spec.name) + ": expected " + std::to_string(spec.aux_count()) +
                            " aux parameter(s), got " + std::to_string(aux.size()));
  }
  if (!spec.aux) return;
  const std::string param = std::string(spec.name) + "." + std::string(spec.aux->name);
  if (spec.aux->kind == AuxKind::char_string) {
    if (!std::holds_alternative<std::string>(aux[0]))
      throw ContractViolation(param + ": expected a string aux value");
  } else {
    if (!std::holds_alternative<std::int64_t>(aux[0]))
      throw ContractViolation(param + ": expected an integer aux value");
    if (std::get<std::int64_t>(aux[0]) < 0) throw ContractViolation(param + ": must be >= 0");
  }
}

inline std::string apply_skill(SkillId id, std::span<const std::string> strings,
                               std::span<const AuxValue> aux = {}) {
  const SkillSpec& spec = skill_spec(id);
  check_skill_arguments(spec, strings.size(), aux);
  const auto n = [&] { return static_cast<std::size_t>(std::get<std::int64_t>(aux[0])); };
  const auto text = [&]() -> const std::string& { return std::get<std::string>(aux[0]); };
  const std::string& s = strings[0];

  switch (id) {
    case SkillId::deterministic_shuffle: return skills::deterministic_shuffle(s);
    case SkillId::repeat_str: return skills::repeat_str(s, n());
    case SkillId::remove_vowels: return skills::remove_vowels(s);
    case SkillId::sort_chars: return skills::sort_chars(s);
    case SkillId::reverse_words: return skills::reverse_words(s);
    case SkillId::add_prefix: return skills::add_prefix(s, text());
    case SkillId::add_suffix: return skills::add_suffix(s, text());
    case SkillId::interlace_str: return skills::interlace_str(s, strings[1]);
    case SkillId::rotate_str: return skills::rotate_str(s, n());
    case SkillId::mirror_str: return skills::mirror_str(s);
    case SkillId::alternate_case: return skills::alternate_case(s);
    case SkillId::shift_chars: return skills::shift_chars(s, n());
    case SkillId::vowel_to_number: return skills::vowel_to_number(s);
    case SkillId::insert_separator: return skills::insert_separator(s, text());
    case SkillId::duplicate_every_char: return skills::duplicate_every_char(s);
    case SkillId::fancy_brackets: return skills::fancy_brackets(s);
    case SkillId::compress_repeats: return skills::compress_repeats(s);
    case SkillId::recursive_reverse: return skills::recursive_reverse(s);
    case SkillId::loop_concat: return skills::loop_concat(s, n());
    case SkillId::while_rotate: return skills::while_rotate(s, n());
    case SkillId::recursive_interlace: return skills::recursive_interlace(s, strings[1]);
    case SkillId::loop_filter_nonalpha: return skills::loop_filter_nonalpha(s);
    case SkillId::verify_even_length: return skills::verify_even_length(s);
    case SkillId::backchain_add_digit: return skills::backchain_add_digit(s, n());
    case SkillId::backchain_palindrome: return skills::backchain_palindrome(s, n());
    case SkillId::concat: return skills::concat(s, strings[1]);
  }
  throw ContractViolation("apply_skill: unknown skill id");
}

/// Machine-readable catalog: canonical name, arity, aux kinds, docstring.
inline nlohmann::ordered_json skill_manifest() {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& spec : skill_catalog()) {
    nlohmann::ordered_json aux = nlohmann::ordered_json::array();
    if (spec.aux) aux.push_back({{"name", spec.aux->name}, {"kind", aux_kind_name(spec.aux->kind)}});
    out.push_back({{"name", spec.name},
                   {"string_arity", spec.string_arity},
                   {"aux_params", std::move(aux)},
                   {"description", spec.description}});
  }
  return out;
}

}  // namespace compskill
