#pragma once

// Binary rewards for both task kinds behind one entry point.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "compskill/countdown.hpp"
#include "compskill/problem.hpp"

namespace compskill {

struct VerificationResult {
  int reward = 0;
  std::optional<std::string> parsed_answer;
  Diagnostic diagnostic = Diagnostic::missing_answer;
  TaskKind task = TaskKind::string_transform;

  friend bool operator==(const VerificationResult&, const VerificationResult&) = default;
};

namespace detail {

/// End of the JSON object starting at `open` (one past its '}'), honoring
/// string literals and escapes; npos when the braces never balance.
inline std::size_t match_object_end(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\')
        ++i;
      else if (c == '"')
        in_string = false;
      continue;
    }
    if (c == '"')
      in_string = true;
    else if (c == '{')
      ++depth;
    else if (c == '}' && --depth == 0)
      return i + 1;
  }
  return std::string_view::npos;
}

struct OutputField {
  bool found = false;       // an object with an "output" key exists
  std::optional<std::string> value;  // set only when that value is a JSON string
};

/// Scan right-to-left for the last strict-JSON object carrying an "output" key.
inline OutputField last_output_field(std::string_view response) {
  std::size_t pos = response.size();
  while (pos > 0) {
    const std::size_t open = response.rfind('{', pos - 1);
    if (open == std::string_view::npos) break;
    pos = open;
    const std::size_t end = match_object_end(response, open);
    if (end == std::string_view::npos) continue;
    const auto parsed = nlohmann::json::parse(response.substr(open, end - open), nullptr, /*allow_exceptions=*/false);
    if (!parsed.is_object() || !parsed.contains("output")) continue;
    OutputField out;
    out.found = true;
    if (parsed.at("output").is_string()) out.value = parsed.at("output").get<std::string>();
    return out;
  }
  return {};
}

}  // namespace detail

/// String value of the last JSON object with an "output" key; absent when none
/// exists or the value is not a JSON string.
inline std::optional<std::string> extract_string_answer(std::string_view response) {
  return detail::last_output_field(response).value;
}

inline VerificationResult verify_string(std::string_view ground_truth, std::string_view response) {
  VerificationResult r;
  r.task = TaskKind::string_transform;
  const auto field = detail::last_output_field(response);
  if (!field.found) {
    r.diagnostic = Diagnostic::missing_answer;
    return r;
  }
  if (!field.value) {
    r.diagnostic = Diagnostic::parse_error;
    return r;
  }
  r.parsed_answer = field.value;
  if (*field.value == ground_truth) {
    r.reward = 1;
    r.diagnostic = Diagnostic::ok;
  } else {
    r.diagnostic = Diagnostic::wrong_value;
  }
  return r;
}

inline VerificationResult verify(const Problem& problem, std::string_view response) {
  if (problem.task == TaskKind::string_transform) return verify_string(problem.answer, response);
  const CountdownVerdict v = verify_countdown(problem.countdown, response);
  return {v.reward, v.parsed_answer, v.diagnostic, TaskKind::countdown};
}

struct VerifyItem {
  const Problem* problem;
  std::string_view response;
};

inline std::vector<VerificationResult> verify_batch(std::span<const VerifyItem> items) {
  std::vector<VerificationResult> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back(verify(*item.problem, item.response));
  return out;
}

inline nlohmann::ordered_json to_json(const VerificationResult& r) {
  nlohmann::ordered_json j;
  j["reward"] = r.reward;
  j["diagnostic"] = diagnostic_name(r.diagnostic);
  j["parsed_answer"] = r.parsed_answer ? nlohmann::ordered_json(*r.parsed_answer) : nlohmann::ordered_json(nullptr);
  j["task"] = task_name(r.task);
  return j;
}

/// A response that the verifier accepts for `problem`. Countdown needs a
/// witness, found by exhaustive search.
inline std::string oracle_response(const Problem& problem) {
  if (problem.task == TaskKind::string_transform)
    return nlohmann::json{{"output", problem.answer}}.dump();
  const auto witness = solve(problem.countdown.numbers, problem.countdown.target);
  if (!witness) throw ContractViolation("countdown problem " + problem.id + " has no solution");
  return "<answer>" + (*witness)->to_string() + "</answer>";
}

}  // namespace compskill
