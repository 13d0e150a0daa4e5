#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "compskill/composition.hpp"
#include "compskill/countdown.hpp"
#include "compskill/errors.hpp"
#include "compskill/rng.hpp"

namespace compskill {

inline constexpr std::string_view kTemplateVersion = "v1";

enum class TaskKind : std::uint8_t { string_transform, countdown };
enum class Split : std::uint8_t { train, heldout_eval };

inline std::string_view task_name(TaskKind t) {
  return t == TaskKind::string_transform ? "string-transform" : "countdown";
}

inline TaskKind task_from_name(std::string_view name) {
  if (name == "string-transform") return TaskKind::string_transform;
  if (name == "countdown") return TaskKind::countdown;
  throw DataError("unknown task kind: " + std::string(name));
}

inline std::string_view split_name(Split s) { return s == Split::train ? "train" : "heldout-eval"; }

inline Split split_from_name(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "heldout-eval") return Split::heldout_eval;
  throw DataError("unknown split: " + std::string(name));
}

// ---------------------------------------------------------------------------
// Prompt templates

inline std::string string_task_prompt(std::string_view program, std::string_view input) {
  std::string out = "You are given a code:\n\n";
  out += program;
  out += "\n\nCan you predict the output of `main_solution(";
  out += py_double_quoted(input);
  out +=
      ")` without writing any code? Please reason and put your final answer in the following json format: "
      "{\"output\": <your output>}, where <your output> should be the final string.";
  return out;
}

inline std::string countdown_prompt(const CountdownProblem& p) {
  std::string numbers;
  for (std::size_t i = 0; i < p.numbers.size(); ++i) {
    if (i > 0) numbers += ", ";
    numbers += std::to_string(p.numbers[i]);
  }
  return "Using the numbers [" + numbers + "], create an equation that equals " + std::to_string(p.target) +
         ". You can use basic arithmetic operations (+, -, *, /) and each number can only be used once. Show your "
         "work in <think> </think> tags. And return the final answer in <answer> </answer> tags, for example "
         "<answer> (1 + 2) / 3 * 4 </answer>.";
}

// ---------------------------------------------------------------------------

struct Problem {
  std::string id;
  TaskKind task = TaskKind::string_transform;
  std::string prompt;
  int level = 1;
  Split split = Split::train;
  std::vector<SkillId> skills;     // string task: every skill application, post-order
  std::string answer;              // string task ground truth
  CountdownProblem countdown;      // countdown ground truth
  std::uint64_t seed = 0;          // per-problem derived seed
  std::string template_version = std::string(kTemplateVersion);
  std::string input;               // string task input x
  std::optional<Expr> expr;        // string task program
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();  // unknown fields, preserved

  friend bool operator==(const Problem&, const Problem&) = default;
};

inline std::string ground_truth_text(const Problem& p) {
  if (p.task == TaskKind::string_transform) return p.answer;
  std::string out;
  for (auto v : p.countdown.numbers) out += std::to_string(v) + ",";
  return out + "=" + std::to_string(p.countdown.target);
}

/// Content hash of (template version, rendered prompt, ground truth).
inline std::string problem_content_id(const Problem& p) {
  std::uint64_t h = fnv1a64(p.template_version);
  h = fnv1a64(std::string_view("\x1f", 1), h);
  h = fnv1a64(p.prompt, h);
  h = fnv1a64(std::string_view("\x1f", 1), h);
  h = fnv1a64(ground_truth_text(p), h);
  return hex64(splitmix64(h));
}

/// Assemble a string-transform problem; prompt and id are derived here.
inline Problem make_string_problem(Expr expr, std::string input, const PseudonymMap& names, bool with_definitions,
                                   Split split, std::uint64_t seed) {
  Problem p;
  p.task = TaskKind::string_transform;
  p.level = spine_level(expr);
  p.split = split;
  p.skills = skills_used(expr);
  p.answer = evaluate(expr, input);
  p.prompt = string_task_prompt(render_program(expr, names, with_definitions), input);
  p.seed = seed;
  p.input = std::move(input);
  p.expr = std::move(expr);
  p.id = problem_content_id(p);
  return p;
}

inline Problem make_countdown_problem(CountdownProblem cd, Split split, std::uint64_t seed) {
  Problem p;
  p.task = TaskKind::countdown;
  p.level = cd.level();
  p.split = split;
  p.prompt = countdown_prompt(cd);
  p.countdown = std::move(cd);
  p.seed = seed;
  p.id = problem_content_id(p);
  return p;
}

// ---------------------------------------------------------------------------
// JSON (JSONL line schema)

inline nlohmann::ordered_json to_json(const Problem& p) {
  nlohmann::ordered_json j;
  j["id"] = p.id;
  j["task"] = task_name(p.task);
  j["prompt"] = p.prompt;
  j["level"] = p.level;
  j["split"] = split_name(p.split);
  if (p.task == TaskKind::string_transform) {
    nlohmann::ordered_json skills = nlohmann::ordered_json::array();
    for (auto s : p.skills) skills.push_back(skill_name(s));
    j["skills"] = std::move(skills);
    j["answer"] = p.answer;
  } else {
    j["skills"] = nlohmann::ordered_json::array();
    j["numbers"] = p.countdown.numbers;
    j["target"] = p.countdown.target;
  }
  j["seed"] = p.seed;
  j["template_version"] = p.template_version;
  if (p.task == TaskKind::string_transform) {
    j["input"] = p.input;
    if (p.expr) j["expr"] = to_json(*p.expr);
  }
  for (const auto& [k, v] : p.extra.items()) j[k] = v;
  return j;
}

namespace detail {

inline const nlohmann::ordered_json& require(const nlohmann::ordered_json& j, const char* key) {
  if (!j.contains(key)) throw DataError(std::string("missing field '") + key + "'");
  return j.at(key);
}

}  // namespace detail

/// Throws DataError on schema violations (callers add the line number).
inline Problem problem_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object()) throw DataError("problem must be a JSON object");
  Problem p;
  try {
    p.id = detail::require(j, "id").get<std::string>();
    p.task = task_from_name(detail::require(j, "task").get<std::string>());
    p.prompt = detail::require(j, "prompt").get<std::string>();
    p.level = detail::require(j, "level").get<int>();
    p.split = split_from_name(detail::require(j, "split").get<std::string>());
    p.seed = detail::require(j, "seed").get<std::uint64_t>();
    p.template_version = detail::require(j, "template_version").get<std::string>();
    if (p.task == TaskKind::string_transform) {
      for (const auto& s : detail::require(j, "skills")) {
        const auto id = skill_from_name(s.get<std::string>());
        if (!id) throw DataError("unknown skill '" + s.get<std::string>() + "'");
        p.skills.push_back(*id);
      }
      p.answer = detail::require(j, "answer").get<std::string>();
      if (j.contains("input")) p.input = j.at("input").get<std::string>();
      if (j.contains("expr")) p.expr = expr_from_json(j.at("expr"));
    } else {
      p.countdown.numbers = detail::require(j, "numbers").get<std::vector<std::int64_t>>();
      p.countdown.target = detail::require(j, "target").get<std::int64_t>();
      if (p.countdown.numbers.empty()) throw DataError("countdown problem has no numbers");
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("schema violation: ") + e.what());
  }
  static constexpr std::string_view known[] = {"id",     "task", "prompt",           "level", "split",
                                               "skills", "answer", "numbers",        "target", "seed",
                                               "template_version", "input", "expr"};
  for (const auto& [k, v] : j.items()) {
    if (std::find(std::begin(known), std::end(known), k) == std::end(known)) p.extra[k] = v;
  }
  if (p.task == TaskKind::countdown && j.contains("answer")) p.extra["answer"] = j.at("answer");
  if (p.task == TaskKind::countdown && j.contains("input")) p.extra["input"] = j.at("input");
  if (p.task == TaskKind::countdown && j.contains("expr")) p.extra["expr"] = j.at("expr");
  if (p.task == TaskKind::string_transform && j.contains("numbers")) p.extra["numbers"] = j.at("numbers");
  if (p.task == TaskKind::string_transform && j.contains("target")) p.extra["target"] = j.at("target");
  return p;
}

}  // namespace compskill
