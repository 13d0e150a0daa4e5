#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "compskill/errors.hpp"
#include "compskill/problem.hpp"
#include "compskill/rng.hpp"
#include "compskill/verification.hpp"

namespace compskill {

struct Sample {
  std::string text;
  std::string finish_reason = "stop";
};

/// Per-problem sample groups; a group may be short when collection stopped early.
using SampleGroups = std::vector<std::vector<Sample>>;

/// Collection stopped before every sample arrived; `completed` holds what did.
class PartialResults : public std::runtime_error {
 public:
  PartialResults(const std::string& what, SampleGroups completed)
      : std::runtime_error(what), completed_(std::move(completed)) {}
  const SampleGroups& completed() const noexcept { return completed_; }

 private:
  SampleGroups completed_;
};

/// Anything that answers prompts. Results are grouped by problem, in input order.
class Model {
 public:
  virtual ~Model() = default;
  virtual std::string tag() const = 0;
  virtual SampleGroups sample(std::span<const Problem> problems, int n) = 0;
};

/// In-process test double: oracle, corrupted(p) or canned transcripts.
class ScriptedModel final : public Model {
 public:
  static ScriptedModel oracle() { return ScriptedModel(Kind::oracle, 0.0, 0, {}); }

  /// Each sample is independently wrong with probability `p`, seeded per (problem, sample).
  static ScriptedModel corrupted(double p, std::uint64_t seed = 0) {
    if (!(p >= 0.0 && p <= 1.0)) throw ContractViolation("corruption probability must be in [0, 1]");
    return ScriptedModel(Kind::corrupted, p, seed, {});
  }

  /// Replays fixture transcripts by problem id; sample i uses transcript i mod size.
  static ScriptedModel canned(std::map<std::string, std::vector<std::string>> fixture) {
    return ScriptedModel(Kind::canned, 0.0, 0, std::move(fixture));
  }

  std::string tag() const override {
    switch (kind_) {
      case Kind::oracle: return "scripted:oracle";
      case Kind::corrupted: return "scripted:corrupted(" + nlohmann::json(p_).dump() + ")";
      case Kind::canned: return "scripted:canned";
    }
    return "scripted";
  }

  std::string respond(const Problem& problem, int sample_index) const {
    switch (kind_) {
      case Kind::oracle: return oracle_response(problem);
      case Kind::corrupted: {
        Rng rng(derive_seed(derive_seed(seed_, problem.id), static_cast<std::uint64_t>(sample_index)));
        return rng.bernoulli(p_) ? wrong_response(problem) : oracle_response(problem);
      }
      case Kind::canned: {
        const auto it = fixture_.find(problem.id);
        if (it == fixture_.end() || it->second.empty())
          throw ContractViolation("no canned response for problem " + problem.id);
        return it->second[static_cast<std::size_t>(sample_index) % it->second.size()];
      }
    }
    return {};
  }

  SampleGroups sample(std::span<const Problem> problems, int n) override {
    if (n < 1) throw ContractViolation("n_samples must be >= 1");
    SampleGroups out(problems.size());
    for (std::size_t i = 0; i < problems.size(); ++i) {
      out[i].reserve(static_cast<std::size_t>(n));
      for (int s = 0; s < n; ++s) out[i].push_back({respond(problems[i], s), "stop"});
    }
    return out;
  }

 private:
  enum class Kind { oracle, corrupted, canned };

  ScriptedModel(Kind kind, double p, std::uint64_t seed, std::map<std::string, std::vector<std::string>> fixture)
      : kind_(kind), p_(p), seed_(seed), fixture_(std::move(fixture)) {}

  static std::string wrong_response(const Problem& problem) {
    if (problem.task == TaskKind::string_transform) {
      const std::string wrong = problem.answer.empty() ? "x" : problem.answer.substr(0, problem.answer.size() - 1);
      return nlohmann::json{{"output", wrong}}.dump();
    }
    // An extra literal always breaks the exactly-once rule.
    const std::string right = oracle_response(problem);
    return right.substr(0, right.size() - std::string_view("</answer>").size()) + " + 1</answer>";
  }

  Kind kind_;
  double p_;
  std::uint64_t seed_;
  std::map<std::string, std::vector<std::string>> fixture_;
};

}  // namespace compskill
