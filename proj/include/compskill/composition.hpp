#pragma once

// Composition trees over skills. A tree has exactly one input-variable leaf;
// the path from that leaf to the root is the "spine", and the number of
// skill applications on it is the problem's level.

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "compskill/errors.hpp"
#include "compskill/rng.hpp"
#include "compskill/skills.hpp"

namespace compskill {

struct Expr {
  enum class Kind : std::uint8_t { input, constant, apply };

  Kind kind = Kind::input;
  std::string text;  // constant value
  SkillId skill = SkillId::concat;
  std::vector<Expr> children;
  std::vector<AuxValue> aux;

  static Expr input() { return Expr{}; }

  static Expr constant(std::string value) {
    Expr e;
    e.kind = Kind::constant;
    e.text = std::move(value);
    return e;
  }

  static Expr apply(SkillId id, std::vector<Expr> operands, std::vector<AuxValue> aux_values = {}) {
    Expr e;
    e.kind = Kind::apply;
    e.skill = id;
    e.children = std::move(operands);
    e.aux = std::move(aux_values);
    return e;
  }

  bool is_input() const noexcept { return kind == Kind::input; }
  bool is_constant() const noexcept { return kind == Kind::constant; }
  bool is_apply() const noexcept { return kind == Kind::apply; }

  friend bool operator==(const Expr&, const Expr&) = default;
};

namespace detail {

inline std::size_t count_inputs(const Expr& e) {
  if (e.is_input()) return 1;
  std::size_t n = 0;
  for (const auto& c : e.children) n += count_inputs(c);
  return n;
}

inline void validate_node(const Expr& e) {
  if (!e.is_apply()) {
    if (!e.children.empty() || !e.aux.empty())
      throw ContractViolation("leaf expression carries children or aux values");
    return;
  }
  check_skill_arguments(skill_spec(e.skill), e.children.size(), e.aux);
  for (const auto& c : e.children) validate_node(c);
}

}  // namespace detail

/// Throws ContractViolation unless `e` has exactly one input leaf and every
/// application matches its catalog signature.
inline void validate(const Expr& e) {
  detail::validate_node(e);
  const std::size_t inputs = detail::count_inputs(e);
  if (inputs != 1)
    throw ContractViolation("expression must contain exactly one input variable, found " +
                            std::to_string(inputs));
}

/// Applications on the spine, innermost first.
inline std::vector<const Expr*> spine(const Expr& root) {
  std::vector<const Expr*> path;  // root .. input
  const Expr* cur = &root;
  while (!cur->is_input()) {
    const Expr* next = nullptr;
    for (const auto& c : cur->children) {
      if (detail::count_inputs(c) > 0) {
        next = &c;
        break;
      }
    }
    if (next == nullptr) throw ContractViolation("expression has no input variable");
    path.push_back(cur);
    cur = next;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

inline int spine_level(const Expr& e) {
  if (detail::count_inputs(e) == 0) throw ContractViolation("expression has no input variable");
  return static_cast<int>(spine(e).size());
}

/// Every skill in the tree, in evaluation (post-order) order, with repeats.
inline std::vector<SkillId> skills_used(const Expr& e) {
  std::vector<SkillId> out;
  auto walk = [&](auto&& self, const Expr& node) -> void {
    for (const auto& c : node.children) self(self, c);
    if (node.is_apply()) out.push_back(node.skill);
  };
  walk(walk, e);
  return out;
}

inline std::vector<SkillId> spine_skills(const Expr& e) {
  std::vector<SkillId> out;
  for (const Expr* node : spine(e)) out.push_back(node->skill);
  return out;
}

inline constexpr std::size_t kDefaultEvaluationCap = 65536;

namespace detail {

inline std::string evaluate_node(const Expr& e, std::string_view input, std::size_t cap) {
  switch (e.kind) {
    case Expr::Kind::input: return std::string(input);
    case Expr::Kind::constant: return e.text;
    case Expr::Kind::apply: break;
  }
  std::vector<std::string> operands;
  operands.reserve(e.children.size());
  for (const auto& c : e.children) operands.push_back(evaluate_node(c, input, cap));
  std::string out = apply_skill(e.skill, operands, e.aux);
  if (out.size() > cap)
    throw EvaluationOverflow(std::string(skill_name(e.skill)) + " produced " + std::to_string(out.size()) +
                             " chars, above the cap of " + std::to_string(cap));
  return out;
}

}  // namespace detail

/// Ground truth y for input x, evaluated bottom-up.
inline std::string evaluate(const Expr& e, std::string_view input,
                            std::size_t cap = kDefaultEvaluationCap) {
  validate(e);
  return detail::evaluate_node(e, input, cap);
}

// ---------------------------------------------------------------------------
// Pseudonyms

/// Bijection from the 25 named skills onto func_1..func_25.
class PseudonymMap {
 public:
  /// `numbers[i]` is the func_ number of SkillId i; must be a permutation of 1..25.
  explicit PseudonymMap(const std::array<int, kNamedSkillCount>& numbers) : numbers_(numbers) {
    std::array<bool, kNamedSkillCount + 1> seen{};
    for (int n : numbers_) {
      if (n < 1 || n > static_cast<int>(kNamedSkillCount) || seen[static_cast<std::size_t>(n)])
        throw ContractViolation("pseudonym numbers must be a permutation of 1..25");
      seen[static_cast<std::size_t>(n)] = true;
    }
  }

  std::string label(SkillId id) const {
    if (id == SkillId::concat) throw ContractViolation("concat has no pseudonym");
    return "func_" + std::to_string(numbers_[static_cast<std::size_t>(id)]);
  }

  std::optional<SkillId> skill_for(std::string_view label) const {
    for (std::size_t i = 0; i < kNamedSkillCount; ++i)
      if (label == "func_" + std::to_string(numbers_[i])) return static_cast<SkillId>(i);
    return std::nullopt;
  }

  const std::array<int, kNamedSkillCount>& numbers() const noexcept { return numbers_; }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json out = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < kNamedSkillCount; ++i) out[std::string(skill_name(static_cast<SkillId>(i)))] = label(static_cast<SkillId>(i));
    return out;
  }

  static PseudonymMap from_json(const nlohmann::ordered_json& j) {
    std::array<int, kNamedSkillCount> numbers{};
    if (!j.is_object() || j.size() != kNamedSkillCount)
      throw DataError("pseudonym map must be an object with 25 entries");
    for (const auto& [name, label] : j.items()) {
      const auto id = skill_from_name(name);
      if (!id || *id == SkillId::concat) throw DataError("unknown skill in pseudonym map: " + name);
      const std::string text = label.get<std::string>();
      if (text.rfind("func_", 0) != 0) throw DataError("bad pseudonym label: " + text);
      numbers[static_cast<std::size_t>(*id)] = std::stoi(text.substr(5));
    }
    return PseudonymMap(numbers);
  }

  friend bool operator==(const PseudonymMap&, const PseudonymMap&) = default;

 private:
  std::array<int, kNamedSkillCount> numbers_;
};

/// Seed 0 is the canonical map (compress_repeats=func_16, remove_vowels=func_2,
/// interlace_str=func_7, alternate_case=func_10, duplicate_every_char=func_14;
/// remaining labels in catalog order). Other seeds draw a uniform permutation.
inline PseudonymMap assign_pseudonyms(std::uint64_t seed) {
  std::array<int, kNamedSkillCount> numbers{};
  if (seed == 0) {
    numbers.fill(0);
    numbers[static_cast<std::size_t>(SkillId::compress_repeats)] = 16;
    numbers[static_cast<std::size_t>(SkillId::remove_vowels)] = 2;
    numbers[static_cast<std::size_t>(SkillId::interlace_str)] = 7;
    numbers[static_cast<std::size_t>(SkillId::alternate_case)] = 10;
    numbers[static_cast<std::size_t>(SkillId::duplicate_every_char)] = 14;
    int next = 1;
    const auto taken = [&](int n) { return std::find(numbers.begin(), numbers.end(), n) != numbers.end(); };
    for (auto& n : numbers) {
      if (n != 0) continue;
      while (taken(next)) ++next;
      n = next++;
    }
    return PseudonymMap(numbers);
  }
  for (std::size_t i = 0; i < kNamedSkillCount; ++i) numbers[i] = static_cast<int>(i) + 1;
  Rng rng(derive_seed(seed, "pseudonyms"));
  rng.shuffle(std::span<int>(numbers));
  return PseudonymMap(numbers);
}

// ---------------------------------------------------------------------------
// Rendering

/// Python single-quoted literal.
inline std::string py_single_quoted(std::string_view s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\\' || c == '\'') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('\'');
  return out;
}

inline std::string py_double_quoted(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '\\' || c == '"') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

/// Compact text form: the `return` expression of main_solution.
inline std::string render_expr(const Expr& e, const PseudonymMap& names) {
  switch (e.kind) {
    case Expr::Kind::input: return "x";
    case Expr::Kind::constant: return py_single_quoted(e.text);
    case Expr::Kind::apply: break;
  }
  if (e.skill == SkillId::concat)
    return "(" + render_expr(e.children[0], names) + " + " + render_expr(e.children[1], names) + ")";
  std::string out = names.label(e.skill) + "(";
  bool first = true;
  const auto sep = [&] {
    if (!first) out += ", ";
    first = false;
  };
  for (const auto& c : e.children) {
    sep();
    out += render_expr(c, names);
  }
  for (const auto& a : e.aux) {
    sep();
    if (const auto* i = std::get_if<std::int64_t>(&a))
      out += std::to_string(*i);
    else
      out += py_single_quoted(std::get<std::string>(a));
  }
  return out + ")";
}

/// Catalog source of `id` with its own name (including recursive calls) replaced by `label`.
inline std::string render_definition(SkillId id, std::string_view label) {
  const SkillSpec& spec = skill_spec(id);
  const std::string_view src = spec.source;
  const auto is_ident = [](char c) { return c == '_' || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9'); };
  std::string out;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t hit = src.find(spec.name, pos);
    if (hit == std::string_view::npos) break;
    const std::size_t end = hit + spec.name.size();
    const bool bounded = (hit == 0 || !is_ident(src[hit - 1])) && (end == src.size() || !is_ident(src[end]));
    out += src.substr(pos, hit - pos);
    out += bounded ? label : spec.name;
    pos = end;
  }
  out += src.substr(pos);
  return out;
}

/// Distinct non-concat skills in left-to-right order of appearance in the rendered text.
inline std::vector<SkillId> skills_in_render_order(const Expr& e) {
  std::vector<SkillId> out;
  auto walk = [&](auto&& self, const Expr& node) -> void {
    if (node.is_apply() && node.skill != SkillId::concat &&
        std::find(out.begin(), out.end(), node.skill) == out.end())
      out.push_back(node.skill);
    for (const auto& c : node.children) self(self, c);
  };
  walk(walk, e);
  return out;
}

inline std::string render_program(const Expr& e, const PseudonymMap& names, bool with_definitions) {
  std::string out;
  if (with_definitions) {
    for (SkillId id : skills_in_render_order(e)) {
      out += render_definition(id, names.label(id));
      out += "\n\n";
    }
  }
  out += "def main_solution(x):\n    return ";
  out += render_expr(e, names);
  return out;
}

// ---------------------------------------------------------------------------
// Structural JSON

inline nlohmann::ordered_json to_json(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::input: return {{"kind", "input"}};
    case Expr::Kind::constant: return {{"kind", "constant"}, {"value", e.text}};
    case Expr::Kind::apply: break;
  }
  nlohmann::ordered_json children = nlohmann::ordered_json::array();
  for (const auto& c : e.children) children.push_back(to_json(c));
  nlohmann::ordered_json aux = nlohmann::ordered_json::array();
  for (const auto& a : e.aux) {
    if (const auto* i = std::get_if<std::int64_t>(&a))
      aux.push_back(*i);
    else
      aux.push_back(std::get<std::string>(a));
  }
  return {{"kind", "apply"}, {"skill", skill_name(e.skill)}, {"children", std::move(children)}, {"aux", std::move(aux)}};
}

inline Expr expr_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object() || !j.contains("kind")) throw DataError("expression node must be an object with a kind");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "input") return Expr::input();
  if (kind == "constant") return Expr::constant(j.at("value").get<std::string>());
  if (kind != "apply") throw DataError("unknown expression kind: " + kind);
  const std::string name = j.at("skill").get<std::string>();
  const auto id = skill_from_name(name);
  if (!id) throw DataError("unknown skill: " + name);
  std::vector<Expr> children;
  for (const auto& c : j.at("children")) children.push_back(expr_from_json(c));
  std::vector<AuxValue> aux;
  for (const auto& a : j.value("aux", nlohmann::ordered_json::array())) {
    if (a.is_number_integer())
      aux.emplace_back(a.get<std::int64_t>());
    else if (a.is_string())
      aux.emplace_back(a.get<std::string>());
    else
      throw DataError("aux values must be integers or strings");
  }
  return Expr::apply(*id, std::move(children), std::move(aux));
}

// ---------------------------------------------------------------------------
// Sampling

struct CompositionConstraints {
  std::size_t max_output_length = 512;
  /// Input used to probe output length; the problem's actual input.
  std::string probe_input = "abcdefghij";
  std::size_t max_retries = 1000;
};

namespace detail {

inline constexpr std::array<std::string_view, 8> kAffixPool{"a", "b", "x", "z", "ab", "xy", "abc", "qz"};

inline std::string random_lowercase(Rng& rng, std::size_t min_len, std::size_t max_len) {
  const auto len = static_cast<std::size_t>(rng.uniform(static_cast<std::int64_t>(min_len), static_cast<std::int64_t>(max_len)));
  std::string out(len, 'a');
  for (auto& c : out) c = static_cast<char>('a' + rng.uniform(0, 25));
  return out;
}

inline std::vector<AuxValue> sample_aux(SkillId id, Rng& rng) {
  const SkillSpec& spec = skill_spec(id);
  if (!spec.aux) return {};
  switch (id) {
    case SkillId::repeat_str:
    case SkillId::loop_concat: return {AuxValue(rng.uniform(2, 3))};
    case SkillId::rotate_str:
    case SkillId::while_rotate: return {AuxValue(rng.uniform(1, 4))};
    case SkillId::shift_chars: return {AuxValue(rng.uniform(1, 25))};
    case SkillId::backchain_add_digit:
    case SkillId::backchain_palindrome: return {AuxValue(rng.uniform(1, 3))};
    default: return {AuxValue(std::string(rng.pick(std::span<const std::string_view>(kAffixPool))))};
  }
}

}  // namespace detail

/// Random expression of exactly `level` spine applications drawn from `pool`.
///
/// The innermost spine node is never concat. Arity-2 nodes place the spine
/// operand on a random side; the other operand is a lowercase constant of
/// length 3-6, or (half the time, when the pool has one) a unary pool skill
/// applied to such a constant. A candidate node whose probe output would
/// exceed `max_output_length` is redrawn; `max_retries` redraws in total.
inline Expr sample_composition(int level, std::span<const SkillId> pool, std::uint64_t seed,
                               const CompositionConstraints& constraints = {}) {
  if (level < 1) throw ContractViolation("level must be >= 1");
  if (pool.empty()) throw ContractViolation("skill pool is empty");

  std::vector<SkillId> first_choices;
  std::vector<SkillId> branch_choices;
  for (SkillId id : pool) {
    if (id != SkillId::concat) first_choices.push_back(id);
    if (id != SkillId::concat && skill_spec(id).string_arity == 1) branch_choices.push_back(id);
  }
  if (first_choices.empty())
    throw GenerationExhausted("skill pool has no named skill for the innermost spine node");

  Rng rng(seed);
  Expr current = Expr::input();
  std::string value = constraints.probe_input;
  std::size_t retries = 0;

  for (int step = 0; step < level; ++step) {
    for (;;) {
      const SkillId id = step == 0 ? rng.pick(std::span<const SkillId>(first_choices)) : rng.pick(pool);
      const SkillSpec& spec = skill_spec(id);
      std::vector<Expr> operands;
      std::vector<std::string> operand_values;
      if (spec.string_arity == 2) {
        Expr branch = Expr::constant(detail::random_lowercase(rng, 3, 6));
        if (!branch_choices.empty() && rng.bernoulli(0.5)) {
          const SkillId b = rng.pick(std::span<const SkillId>(branch_choices));
          branch = Expr::apply(b, {std::move(branch)}, detail::sample_aux(b, rng));
        }
        std::string branch_value = detail::evaluate_node(branch, "", kDefaultEvaluationCap);
        if (rng.bernoulli(0.5)) {
          operands = {current, std::move(branch)};
          operand_values = {value, std::move(branch_value)};
        } else {
          operands = {std::move(branch), current};
          operand_values = {std::move(branch_value), value};
        }
      } else {
        operands = {current};
        operand_values = {value};
      }
      std::vector<AuxValue> aux = detail::sample_aux(id, rng);
      std::string next_value = apply_skill(id, operand_values, aux);
      if (next_value.size() <= constraints.max_output_length) {
        current = Expr::apply(id, std::move(operands), std::move(aux));
        value = std::move(next_value);
        break;
      }
      if (++retries >= constraints.max_retries) {
        throw GenerationExhausted("no level-" + std::to_string(level) + " composition within " +
                                  std::to_string(constraints.max_output_length) + " output chars after " +
                                  std::to_string(retries) + " retries");
      }
    }
  }
  return current;
}

}  // namespace compskill
