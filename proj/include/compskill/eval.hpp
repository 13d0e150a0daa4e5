#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "compskill/composition.hpp"
#include "compskill/dataset.hpp"
#include "compskill/errors.hpp"
#include "compskill/model.hpp"
#include "compskill/problem.hpp"
#include "compskill/verification.hpp"

namespace compskill {

// ---------------------------------------------------------------------------
// Estimators

/// Unbiased pass@k: 1 - C(n-c, k) / C(n, k), as the product
/// prod_{i=n-c+1}^{n} (1 - k/i). pass@1 is returned as c/n exactly.
inline double pass_at_k(std::int64_t n, std::int64_t c, std::int64_t k) {
  if (n < 1 || c < 0 || c > n || k < 1 || k > n)
    throw ContractViolation("pass_at_k requires 0 <= c <= n and 1 <= k <= n (n=" + std::to_string(n) +
                            ", c=" + std::to_string(c) + ", k=" + std::to_string(k) + ")");
  if (c == 0) return 0.0;
  if (n - c < k) return 1.0;
  if (k == 1) return static_cast<double>(c) / static_cast<double>(n);
  double miss = 1.0;
  for (std::int64_t i = n - c + 1; i <= n; ++i) miss *= 1.0 - static_cast<double>(k) / static_cast<double>(i);
  return 1.0 - miss;
}

/// Rewards of every sample drawn for one problem.
struct ProblemOutcome {
  std::string problem_id;
  int level = 0;
  std::vector<int> rewards;

  std::int64_t correct() const { return std::count(rewards.begin(), rewards.end(), 1); }
};

/// Mean of per-problem mean rewards, per level. All problems must share one sample count.
inline std::map<int, double> avg_at_n(std::span<const ProblemOutcome> outcomes) {
  std::optional<std::size_t> n;
  std::map<int, std::pair<double, std::size_t>> sums;
  for (const auto& o : outcomes) {
    if (o.rewards.empty()) throw ContractViolation("problem " + o.problem_id + " has no samples");
    if (n && *n != o.rewards.size())
      throw ContractViolation("problem " + o.problem_id + " has " + std::to_string(o.rewards.size()) +
                              " samples, expected " + std::to_string(*n));
    n = o.rewards.size();
    auto& [sum, count] = sums[o.level];
    sum += static_cast<double>(o.correct()) / static_cast<double>(o.rewards.size());
    ++count;
  }
  std::map<int, double> out;
  for (const auto& [level, s] : sums) out[level] = s.first / static_cast<double>(s.second);
  return out;
}

inline std::vector<std::int64_t> default_k_grid() {
  std::vector<std::int64_t> out;
  for (std::int64_t k = 1; k <= 1024; k *= 2) out.push_back(k);
  return out;
}

// ---------------------------------------------------------------------------
// Failure taxonomy

enum class FailureCategory : std::uint8_t {
  correct,
  ignores_composition,
  incomplete_trace,
  incorrect_composition,
  atomic_error,
  unclassified,
};

inline std::string_view failure_name(FailureCategory c) {
  switch (c) {
    case FailureCategory::correct: return "correct";
    case FailureCategory::ignores_composition: return "ignores-composition";
    case FailureCategory::incomplete_trace: return "incomplete-trace";
    case FailureCategory::incorrect_composition: return "incorrect-composition";
    case FailureCategory::atomic_error: return "atomic-error";
    case FailureCategory::unclassified: return "unclassified";
  }
  return "?";
}

inline std::optional<FailureCategory> failure_from_name(std::string_view name) {
  for (auto c : {FailureCategory::correct, FailureCategory::ignores_composition, FailureCategory::incomplete_trace,
                 FailureCategory::incorrect_composition, FailureCategory::atomic_error, FailureCategory::unclassified})
    if (failure_name(c) == name) return c;
  return std::nullopt;
}

inline constexpr std::string_view kJudgeRubricVersion = "judge-rubric-v1";

/// Rubric prompt for an external judge model. Slots: {program}, {input},
/// {expected}, {response}.
inline constexpr std::string_view kJudgeRubric =
    R"(You are grading a model's reasoning about a string-transformation program. The program composes several functions; the model had to predict main_solution's output without running code.

Program:
{program}

Input: {input}
Correct output: {expected}

Model response:
<<<
{response}
>>>

The final answer is wrong. Classify the main reason into exactly one category:
- ignores-composition: the response analyzes only some of the functions (e.g. a single one) and never reasons about the full composition.
- incomplete-trace: the response reasons about every function but stops before producing a final answer.
- incorrect-composition: the response applies the functions in the wrong order or with the wrong nesting or data flow.
- atomic-error: the composition is handled correctly but at least one individual function is computed incorrectly.

Reply with a single JSON object: {"category": "<one of the four names>"})";

inline std::string render_judge_prompt(const Problem& problem, std::string_view response) {
  std::string program = problem.prompt;
  const std::size_t start = program.find("def main_solution");
  const std::size_t end = program.find("\n\nCan you predict");
  if (start != std::string::npos && end != std::string::npos && end > start) program = program.substr(start, end - start);
  std::string out(kJudgeRubric);
  const auto replace = [&](std::string_view slot, std::string_view value) {
    const std::size_t at = out.find(slot);
    if (at != std::string::npos) out.replace(at, slot.size(), value);
  };
  replace("{program}", program);
  replace("{input}", py_double_quoted(problem.input));
  replace("{expected}", py_double_quoted(problem.answer));
  replace("{response}", response);
  return out;
}

/// Pluggable classifier for incorrect responses. nullopt = the judge could not
/// answer (transport failure), which is recorded as unclassified.
class Judge {
 public:
  virtual ~Judge() = default;
  virtual std::optional<FailureCategory> classify(const Problem& problem, std::string_view response) = 0;
};

namespace detail {

inline std::vector<std::size_t> mention_positions(std::string_view text, std::string_view label) {
  std::vector<std::size_t> out;
  for (std::size_t pos = text.find(label); pos != std::string_view::npos; pos = text.find(label, pos + 1)) {
    const std::size_t end = pos + label.size();
    const bool digit_follows = end < text.size() && text[end] >= '0' && text[end] <= '9';
    if (!digit_follows) out.push_back(pos);
  }
  return out;
}

}  // namespace detail

/// Rule-based fallback classifier for string problems:
///  1. fewer distinct program functions mentioned than the level, and the
///     final spine function never mentioned -> ignores-composition;
///  2. every spine function mentioned but no final {"output": ...} -> incomplete-trace;
///  3. spine functions first mentioned in neither application order nor its
///     reverse (outermost-first) -> incorrect-composition;
///  4. otherwise atomic-error.
/// Countdown problems are outside this taxonomy and come back unclassified.
inline FailureCategory heuristic_classify(const Problem& problem, std::string_view response, const PseudonymMap& names) {
  if (problem.task != TaskKind::string_transform || !problem.expr) return FailureCategory::unclassified;
  const Expr& expr = *problem.expr;

  std::set<std::string> program_labels;
  for (SkillId s : skills_used(expr))
    if (s != SkillId::concat) program_labels.insert(names.label(s));
  std::vector<std::string> spine_labels;  // application order, innermost first, distinct
  for (SkillId s : spine_skills(expr)) {
    if (s == SkillId::concat) continue;
    const std::string l = names.label(s);
    if (std::find(spine_labels.begin(), spine_labels.end(), l) == spine_labels.end()) spine_labels.push_back(l);
  }

  std::size_t mentioned = 0;
  for (const auto& l : program_labels)
    if (!detail::mention_positions(response, l).empty()) ++mentioned;
  const bool final_mentioned = !spine_labels.empty() && !detail::mention_positions(response, spine_labels.back()).empty();
  if (mentioned < static_cast<std::size_t>(spine_level(expr)) && !final_mentioned)
    return FailureCategory::ignores_composition;

  std::vector<std::pair<std::size_t, std::string>> first_mentions;
  for (const auto& l : spine_labels) {
    const auto pos = detail::mention_positions(response, l);
    if (!pos.empty()) first_mentions.emplace_back(pos.front(), l);
  }
  const bool all_spine = first_mentions.size() == spine_labels.size();
  if (all_spine && !detail::last_output_field(response).found) return FailureCategory::incomplete_trace;

  std::sort(first_mentions.begin(), first_mentions.end());
  std::vector<std::string> stated;
  for (auto& [pos, l] : first_mentions) stated.push_back(l);
  std::vector<std::string> reversed(spine_labels.rbegin(), spine_labels.rend());
  if (stated != spine_labels && stated != reversed) return FailureCategory::incorrect_composition;
  return FailureCategory::atomic_error;
}

class HeuristicJudge final : public Judge {
 public:
  explicit HeuristicJudge(PseudonymMap names) : names_(std::move(names)) {}
  std::optional<FailureCategory> classify(const Problem& problem, std::string_view response) override {
    return heuristic_classify(problem, response, names_);
  }

 private:
  PseudonymMap names_;
};

/// Judge backed by any Model (an LLM endpoint): sends the rubric prompt, reads {"category": ...}.
class ModelJudge final : public Judge {
 public:
  explicit ModelJudge(Model& model) : model_(model) {}

  std::optional<FailureCategory> classify(const Problem& problem, std::string_view response) override {
    Problem query = problem;
    query.prompt = render_judge_prompt(problem, response);
    query.id = problem.id + ":judge";
    try {
      const auto groups = model_.sample(std::span<const Problem>(&query, 1), 1);
      if (groups.empty() || groups[0].empty()) return std::nullopt;
      return parse_category(groups[0][0].text);
    } catch (const std::runtime_error&) {
      return std::nullopt;
    }
  }

  static std::optional<FailureCategory> parse_category(std::string_view text) {
    std::size_t pos = text.size();
    while (pos > 0) {
      const std::size_t open = text.rfind('{', pos - 1);
      if (open == std::string_view::npos) break;
      pos = open;
      const std::size_t end = detail::match_object_end(text, open);
      if (end == std::string_view::npos) continue;
      const auto j = nlohmann::json::parse(text.substr(open, end - open), nullptr, false);
      if (j.is_object() && j.contains("category") && j["category"].is_string()) {
        const auto c = failure_from_name(j["category"].get<std::string>());
        if (c && *c != FailureCategory::correct && *c != FailureCategory::unclassified) return c;
      }
    }
    return std::nullopt;
  }

 private:
  Model& model_;
};

/// Verified-correct responses short-circuit; everything else goes to the judge.
inline FailureCategory classify_failure(const Problem& problem, std::string_view response, Judge& judge) {
  if (verify(problem, response).reward == 1) return FailureCategory::correct;
  return judge.classify(problem, response).value_or(FailureCategory::unclassified);
}

// ---------------------------------------------------------------------------
// Harness

struct EvalConfig {
  int n_samples = 32;
  std::vector<std::int64_t> k_grid = default_k_grid();
  Judge* judge = nullptr;  // classify incorrect responses when set
};

struct LevelReport {
  int level = 0;
  std::size_t n_problems = 0;       // problems in the dataset at this level
  std::size_t covered_problems = 0; // problems with a full set of samples
  std::size_t n_samples = 0;        // samples per problem requested
  double accuracy = 0.0;            // mean reward over all collected samples
  double avg_at_n = 0.0;            // mean of per-problem mean rewards over covered problems
  std::map<std::int64_t, double> pass_at_k;
};

struct EvalReport {
  std::string model;
  std::string dataset;
  std::uint64_t seed = 0;
  bool partial = false;
  std::vector<LevelReport> levels;
  std::map<std::string, std::size_t> failures;
  std::vector<ProblemOutcome> outcomes;
};

/// Aggregate verified rewards into per-level metrics.
inline std::vector<LevelReport> aggregate_levels(std::span<const ProblemOutcome> outcomes, std::size_t n_samples,
                                                 std::span<const std::int64_t> k_grid) {
  std::map<int, std::vector<const ProblemOutcome*>> by_level;
  for (const auto& o : outcomes) by_level[o.level].push_back(&o);
  std::vector<LevelReport> out;
  for (const auto& [level, group] : by_level) {
    LevelReport r;
    r.level = level;
    r.n_problems = group.size();
    r.n_samples = n_samples;
    std::size_t total = 0;
    std::int64_t correct = 0;
    std::vector<ProblemOutcome> full;
    for (const auto* o : group) {
      total += o->rewards.size();
      correct += o->correct();
      if (o->rewards.size() == n_samples) full.push_back(*o);
    }
    r.covered_problems = full.size();
    r.accuracy = total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
    if (!full.empty()) {
      r.avg_at_n = avg_at_n(full).at(level);
      for (std::int64_t k : k_grid) {
        if (k > static_cast<std::int64_t>(n_samples)) continue;
        double sum = 0.0;
        for (const auto& o : full) sum += pass_at_k(static_cast<std::int64_t>(n_samples), o.correct(), k);
        r.pass_at_k[k] = sum / static_cast<double>(full.size());
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline EvalReport evaluate_model(Model& model, const Dataset& dataset, const EvalConfig& cfg) {
  if (dataset.problems.empty()) throw ContractViolation("evaluation dataset is empty");
  if (cfg.n_samples < 1) throw ContractViolation("n_samples must be >= 1");
  EvalReport report;
  report.model = model.tag();
  report.dataset = dataset.meta.handle.empty() ? dataset.meta.name : dataset.meta.name + "@" + dataset.meta.handle;
  report.seed = dataset.meta.seed;

  SampleGroups groups;
  try {
    groups = model.sample(dataset.problems, cfg.n_samples);
  } catch (const PartialResults& e) {
    report.partial = true;
    groups = e.completed();
  }
  groups.resize(dataset.problems.size());

  for (std::size_t i = 0; i < dataset.problems.size(); ++i) {
    const Problem& p = dataset.problems[i];
    ProblemOutcome o{p.id, p.level, {}};
    for (const auto& s : groups[i]) {
      const auto v = verify(p, s.text);
      o.rewards.push_back(v.reward);
      if (cfg.judge != nullptr && v.reward == 0) {
        const auto c = cfg.judge->classify(p, s.text).value_or(FailureCategory::unclassified);
        ++report.failures[std::string(failure_name(c))];
      }
    }
    report.outcomes.push_back(std::move(o));
  }
  report.levels = aggregate_levels(report.outcomes, static_cast<std::size_t>(cfg.n_samples), cfg.k_grid);
  return report;
}

inline nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["metadata"] = {{"model", r.model}, {"dataset", r.dataset}, {"seed", r.seed}};
  j["partial"] = r.partial;
  nlohmann::ordered_json levels = nlohmann::ordered_json::array();
  for (const auto& l : r.levels) {
    nlohmann::ordered_json pk = nlohmann::ordered_json::object();
    for (const auto& [k, v] : l.pass_at_k) pk[std::to_string(k)] = v;
    levels.push_back({{"level", l.level},
                      {"n_problems", l.n_problems},
                      {"covered_problems", l.covered_problems},
                      {"n_samples", l.n_samples},
                      {"accuracy", l.accuracy},
                      {"avg_at_n", l.avg_at_n},
                      {"pass_at_k", std::move(pk)}});
  }
  j["levels"] = std::move(levels);
  nlohmann::ordered_json failures = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.failures) failures[k] = v;
  j["failures"] = std::move(failures);
  return j;
}

/// Flat CSV: level,metric,k,value,n_problems (k empty for non-pass@k rows).
inline std::string to_csv(const EvalReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "level,metric,k,value,n_problems\n";
  for (const auto& l : r.levels) {
    out << l.level << ",accuracy,," << l.accuracy << ',' << l.n_problems << '\n';
    out << l.level << ",avg@" << l.n_samples << ",," << l.avg_at_n << ',' << l.n_problems << '\n';
    for (const auto& [k, v] : l.pass_at_k) out << l.level << ",pass@k," << k << ',' << v << ',' << l.n_problems << '\n';
  }
  return out.str();
}

}  // namespace compskill
