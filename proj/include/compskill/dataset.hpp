#pragma once

// Stage-1 / Stage-2 / Countdown dataset construction, held-out skill
// partitions, rejection filtering and JSONL persistence.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "compskill/composition.hpp"
#include "compskill/countdown.hpp"
#include "compskill/problem.hpp"
#include "compskill/rng.hpp"
#include "compskill/skills.hpp"

namespace compskill {

// ---------------------------------------------------------------------------
// Held-out partition

struct SplitPlan {
  std::vector<SkillId> train_skills;  // catalog order
  std::vector<SkillId> eval_skills;   // catalog order
  std::uint64_t seed = 0;

  /// Pools for composition sampling; concat is shared by both sides.
  std::vector<SkillId> train_pool() const { return with_concat(train_skills); }
  std::vector<SkillId> eval_pool() const { return with_concat(eval_skills); }

  friend bool operator==(const SplitPlan&, const SplitPlan&) = default;

 private:
  static std::vector<SkillId> with_concat(std::vector<SkillId> v) {
    v.push_back(SkillId::concat);
    return v;
  }
};

inline SplitPlan partition_functions(std::uint64_t seed, std::size_t train_size = 13) {
  if (train_size == 0 || train_size >= kNamedSkillCount)
    throw ContractViolation("train partition size must be in 1..24");
  std::vector<SkillId> all = named_skills();
  Rng rng(derive_seed(seed, "partition"));
  rng.shuffle(std::span<SkillId>(all));
  SplitPlan plan;
  plan.seed = seed;
  plan.train_skills.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(train_size));
  plan.eval_skills.assign(all.begin() + static_cast<std::ptrdiff_t>(train_size), all.end());
  std::sort(plan.train_skills.begin(), plan.train_skills.end());
  std::sort(plan.eval_skills.begin(), plan.eval_skills.end());
  return plan;
}

inline nlohmann::ordered_json to_json(const SplitPlan& plan) {
  nlohmann::ordered_json train = nlohmann::ordered_json::array();
  nlohmann::ordered_json eval = nlohmann::ordered_json::array();
  for (auto s : plan.train_skills) train.push_back(skill_name(s));
  for (auto s : plan.eval_skills) eval.push_back(skill_name(s));
  return {{"seed", plan.seed}, {"train", std::move(train)}, {"eval", std::move(eval)}};
}

inline SplitPlan split_plan_from_json(const nlohmann::ordered_json& j) {
  SplitPlan plan;
  plan.seed = j.at("seed").get<std::uint64_t>();
  const auto read = [](const nlohmann::ordered_json& arr, std::vector<SkillId>& out) {
    for (const auto& s : arr) {
      const auto id = skill_from_name(s.get<std::string>());
      if (!id) throw DataError("unknown skill in split plan: " + s.get<std::string>());
      out.push_back(*id);
    }
  };
  read(j.at("train"), plan.train_skills);
  read(j.at("eval"), plan.eval_skills);
  return plan;
}

// ---------------------------------------------------------------------------
// Generation configuration

struct InputAlphabet {
  std::size_t min_length = 3;
  std::size_t max_length = 10;
  /// Mix digits and spaces into inputs (exercises reverse_words, loop_filter_nonalpha).
  bool mixed = false;
};

struct GenerationConfig {
  std::uint64_t seed = 0;  // experiment seed: drives the split plan, pseudonyms and problems
  InputAlphabet alphabet;
  CompositionConstraints composition;  // probe_input is overwritten per problem
  CountdownBounds countdown;
  std::size_t train_partition_size = 13;
  unsigned threads = 0;  // 0 = hardware concurrency
};

inline std::string sample_input(Rng& rng, const InputAlphabet& alphabet) {
  static constexpr std::string_view lower = "abcdefghijklmnopqrstuvwxyz";
  static constexpr std::string_view mixed = "abcdefghijklmnopqrstuvwxyz0123456789 ";
  const std::string_view chars = alphabet.mixed ? mixed : lower;
  const auto len = static_cast<std::size_t>(
      rng.uniform(static_cast<std::int64_t>(alphabet.min_length), static_cast<std::int64_t>(alphabet.max_length)));
  std::string out(len, 'a');
  for (auto& c : out) c = chars[rng.index(chars.size())];
  return out;
}

/// One block of a dataset: `count` problems of a single level.
struct Segment {
  TaskKind task = TaskKind::string_transform;
  int level = 1;
  std::size_t count = 0;
  std::vector<SkillId> pool;  // string task only
  bool with_definitions = false;
  Split split = Split::train;
  std::string salt;  // distinguishes RNG streams of different segments
};

namespace detail {

inline Problem generate_one(const Segment& seg, const GenerationConfig& cfg, const PseudonymMap& names,
                            std::uint64_t problem_seed) {
  if (seg.task == TaskKind::countdown) {
    auto gen = generate_countdown(seg.level, problem_seed, cfg.countdown);
    return make_countdown_problem(std::move(gen.problem), seg.split, problem_seed);
  }
  Rng rng(problem_seed);
  std::string input = sample_input(rng, cfg.alphabet);
  CompositionConstraints constraints = cfg.composition;
  constraints.probe_input = input;
  Expr expr = sample_composition(seg.level, seg.pool, rng.next(), constraints);
  return make_string_problem(std::move(expr), std::move(input), names, seg.with_definitions, seg.split,
                             problem_seed);
}

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> workers;
  for (unsigned t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next.store(count);
        }
      }
    });
  }
  workers.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

/// Problems for each segment, in segment order then index order. Each index
/// derives its own seed from (experiment seed, segment salt, index, attempt),
/// so results do not depend on thread scheduling. A problem whose content id
/// repeats an earlier one is regenerated with the next attempt number.
inline std::vector<Problem> generate_segments(std::span<const Segment> segments, const GenerationConfig& cfg,
                                              const PseudonymMap& names) {
  std::vector<Problem> out;
  std::unordered_set<std::string> seen;
  for (const Segment& seg : segments) {
    const std::uint64_t seg_seed = derive_seed(cfg.seed, seg.salt);
    const auto seed_for = [&](std::size_t index, std::uint64_t attempt) {
      return derive_seed(derive_seed(seg_seed, index), attempt);
    };
    std::vector<Problem> batch(seg.count);
    detail::parallel_for(seg.count, cfg.threads,
                         [&](std::size_t i) { batch[i] = detail::generate_one(seg, cfg, names, seed_for(i, 0)); });
    for (std::size_t i = 0; i < seg.count; ++i) {
      std::uint64_t attempt = 0;
      while (seen.contains(batch[i].id)) {
        if (++attempt > 1000)
          throw GenerationExhausted("could not draw a distinct problem for index " + std::to_string(i));
        batch[i] = detail::generate_one(seg, cfg, names, seed_for(i, attempt));
      }
      seen.insert(batch[i].id);
      out.push_back(std::move(batch[i]));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Datasets

struct DatasetMeta {
  std::string name;  // preset or free-form label
  std::uint64_t seed = 0;
  std::string template_version = std::string(kTemplateVersion);
  std::optional<PseudonymMap> pseudonyms;
  std::optional<SplitPlan> plan;
  std::string handle;  // content hash of the exported JSONL
};

struct Dataset {
  std::vector<Problem> problems;
  DatasetMeta meta;
};

/// Every experiment seed uses one pseudonym map and one split plan for all of its datasets.
inline PseudonymMap experiment_pseudonyms(std::uint64_t seed) { return assign_pseudonyms(seed); }

inline Dataset build_stage1(std::size_t count, const GenerationConfig& cfg) {
  if (count < 1) throw ContractViolation("count must be >= 1");
  const PseudonymMap names = experiment_pseudonyms(cfg.seed);
  // Stage 1 draws the skill uniformly first, then composes a level-1 program over just that skill.
  const std::vector<SkillId> all = named_skills();
  Dataset d;
  d.meta.name = "stage1";
  d.meta.seed = cfg.seed;
  d.meta.pseudonyms = names;
  std::unordered_set<std::string> seen;
  const std::uint64_t seg_seed = derive_seed(cfg.seed, "stage1");
  std::vector<Problem> batch(count);
  const auto make = [&](std::size_t i, std::uint64_t attempt) {
    const std::uint64_t s = derive_seed(derive_seed(seg_seed, i), attempt);
    Rng rng(s);
    const SkillId skill = rng.pick(std::span<const SkillId>(all));
    Segment seg{TaskKind::string_transform, 1, 1, {skill}, true, Split::train, "stage1"};
    return detail::generate_one(seg, cfg, names, rng.next());
  };
  detail::parallel_for(count, cfg.threads, [&](std::size_t i) { batch[i] = make(i, 0); });
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t attempt = 0;
    while (seen.contains(batch[i].id)) {
      if (++attempt > 1000) throw GenerationExhausted("could not draw a distinct stage-1 problem");
      batch[i] = make(i, attempt);
    }
    seen.insert(batch[i].id);
    d.problems.push_back(std::move(batch[i]));
  }
  return d;
}

/// Stage-2 problems over plan.train_skills (or plan.eval_skills when `split`
/// is heldout-eval), rendered without definitions.
inline Dataset build_stage2(const std::map<int, std::size_t>& level_mix, const SplitPlan& plan,
                            const GenerationConfig& cfg, Split split = Split::train) {
  std::vector<Segment> segments;
  const auto pool = split == Split::train ? plan.train_pool() : plan.eval_pool();
  for (const auto& [level, count] : level_mix) {
    if (level < 1) throw ContractViolation("levels must be >= 1");
    segments.push_back({TaskKind::string_transform, level, count, pool, false, split,
                        std::string(split_name(split)) + "-l" + std::to_string(level)});
  }
  Dataset d;
  d.meta.name = split == Split::train ? "stage2" : "heldout-eval";
  d.meta.seed = cfg.seed;
  d.meta.pseudonyms = experiment_pseudonyms(cfg.seed);
  d.meta.plan = plan;
  d.problems = generate_segments(segments, cfg, *d.meta.pseudonyms);
  return d;
}

inline Dataset build_countdown(const std::map<int, std::size_t>& level_mix, const GenerationConfig& cfg) {
  std::vector<Segment> segments;
  for (const auto& [level, count] : level_mix)
    segments.push_back({TaskKind::countdown, level, count, {}, false, Split::heldout_eval, "countdown-l" + std::to_string(level)});
  Dataset d;
  d.meta.name = "countdown";
  d.meta.seed = cfg.seed;
  d.problems = generate_segments(segments, cfg, experiment_pseudonyms(cfg.seed));
  return d;
}

// ---------------------------------------------------------------------------
// Presets

struct Preset {
  std::string name;
  std::string description;
};

inline std::vector<Preset> preset_catalog() {
  std::vector<Preset> out = {
      {"stage1", "50000 level-1 problems over all 25 skills, definitions shown"},
      {"rl-l1", "50000 level-1 problems over the train partition"},
      {"rl-l2", "50000 level-2 problems over the train partition"},
      {"rl-l1+2", "25000 level-1 + 25000 level-2 problems over the train partition"},
  };
  for (int l = 1; l <= 8; ++l)
    out.push_back({"eval-l" + std::to_string(l), "256 level-" + std::to_string(l) + " problems over the held-out partition"});
  for (int l = 2; l <= 5; ++l)
    out.push_back({"countdown-l" + std::to_string(l), "128 level-" + std::to_string(l) + " Countdown problems"});
  return out;
}

/// Expand "eval-l1..l8" style ranges; plain names pass through.
inline std::vector<std::string> expand_preset_names(std::string_view spec) {
  const std::size_t dots = spec.find("..");
  if (dots == std::string_view::npos) return {std::string(spec)};
  const std::string_view head = spec.substr(0, dots);
  std::string_view tail = spec.substr(dots + 2);
  const std::size_t digits_at = head.find_last_not_of("0123456789") + 1;
  if (digits_at == 0 || digits_at == head.size()) throw ContractViolation("bad preset range: " + std::string(spec));
  const std::string_view prefix = head.substr(0, digits_at);
  const int from = std::stoi(std::string(head.substr(digits_at)));
  if (tail.rfind("l", 0) == 0) tail.remove_prefix(1);
  const int to = std::stoi(std::string(tail));
  if (to < from) throw ContractViolation("bad preset range: " + std::string(spec));
  std::vector<std::string> out;
  for (int l = from; l <= to; ++l) out.push_back(std::string(prefix) + std::to_string(l));
  return out;
}

/// Build a named preset. `count_override` replaces the per-level count
/// (split evenly for rl-l1+2).
inline Dataset build_preset(std::string_view name, const GenerationConfig& cfg,
                            std::optional<std::size_t> count_override = std::nullopt) {
  const SplitPlan plan = partition_functions(cfg.seed, cfg.train_partition_size);
  const auto count = [&](std::size_t dflt) { return count_override.value_or(dflt); };
  Dataset d;
  const auto level_suffix = [&](std::string_view prefix) -> std::optional<int> {
    if (name.rfind(prefix, 0) != 0) return std::nullopt;
    const std::string rest(name.substr(prefix.size()));
    if (rest.empty() || rest.find_first_not_of("0123456789") != std::string::npos) return std::nullopt;
    return std::stoi(rest);
  };

  if (name == "stage1") {
    d = build_stage1(count(50000), cfg);
  } else if (name == "rl-l1") {
    d = build_stage2({{1, count(50000)}}, plan, cfg);
  } else if (name == "rl-l2") {
    d = build_stage2({{2, count(50000)}}, plan, cfg);
  } else if (name == "rl-l1+2") {
    const std::size_t total = count(50000);
    d = build_stage2({{1, total - total / 2}, {2, total / 2}}, plan, cfg);
  } else if (auto l = level_suffix("eval-l")) {
    if (*l < 1) throw ContractViolation("eval level must be >= 1");
    d = build_stage2({{*l, count(256)}}, plan, cfg, Split::heldout_eval);
  } else if (auto l = level_suffix("countdown-l")) {
    if (*l < 2) throw ContractViolation("Countdown level must be >= 2");
    d = build_countdown({{*l, count(128)}}, cfg);
  } else {
    throw ContractViolation("unknown preset: " + std::string(name));
  }
  d.meta.name = std::string(name);
  if (name != "stage1") d.meta.plan = plan;
  return d;
}

// ---------------------------------------------------------------------------
// JSONL

inline std::string to_jsonl(std::span<const Problem> problems) {
  std::string out;
  for (const auto& p : problems) {
    out += to_json(p).dump();
    out.push_back('\n');
  }
  return out;
}

inline std::string dataset_handle(std::string_view jsonl_bytes) { return hex64(splitmix64(fnv1a64(jsonl_bytes))); }

inline std::vector<Problem> problems_from_jsonl(std::istream& in) {
  std::vector<Problem> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::ordered_json j;
    try {
      j = nlohmann::ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    try {
      out.push_back(problem_from_json(j));
    } catch (const DataError& e) {
      throw DataError(e.what(), line_no);
    } catch (const ContractViolation& e) {
      throw DataError(e.what(), line_no);
    }
  }
  return out;
}

inline nlohmann::ordered_json to_json(const DatasetMeta& m) {
  nlohmann::ordered_json j;
  j["name"] = m.name;
  j["seed"] = m.seed;
  j["template_version"] = m.template_version;
  j["handle"] = m.handle;
  if (m.pseudonyms) j["pseudonyms"] = m.pseudonyms->to_json();
  if (m.plan) j["split_plan"] = to_json(*m.plan);
  return j;
}

inline DatasetMeta meta_from_json(const nlohmann::ordered_json& j) {
  DatasetMeta m;
  m.name = j.value("name", "");
  m.seed = j.value("seed", std::uint64_t{0});
  m.template_version = j.value("template_version", std::string(kTemplateVersion));
  m.handle = j.value("handle", "");
  if (j.contains("pseudonyms")) m.pseudonyms = PseudonymMap::from_json(j.at("pseudonyms"));
  if (j.contains("split_plan")) m.plan = split_plan_from_json(j.at("split_plan"));
  return m;
}

inline std::filesystem::path meta_path_for(const std::filesystem::path& jsonl) {
  std::filesystem::path p = jsonl;
  p.replace_extension(".meta.json");
  return p;
}

/// Writes `path` and its `.meta.json` sidecar; returns the dataset handle.
inline std::string export_jsonl(Dataset& d, const std::filesystem::path& path) {
  const std::string bytes = to_jsonl(d.problems);
  d.meta.handle = dataset_handle(bytes);
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << bytes;
  }
  std::ofstream meta(meta_path_for(path), std::ios::binary);
  if (!meta) throw DataError("cannot write " + meta_path_for(path).string());
  meta << to_json(d.meta).dump(2) << '\n';
  return d.meta.handle;
}

inline Dataset import_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string bytes = buffer.str();
  std::istringstream lines(bytes);
  Dataset d;
  d.problems = problems_from_jsonl(lines);
  if (std::ifstream meta(meta_path_for(path)); meta) {
    try {
      d.meta = meta_from_json(nlohmann::ordered_json::parse(meta));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(meta_path_for(path).string() + ": " + e.what());
    }
  } else {
    d.meta.name = path.stem().string();
  }
  d.meta.handle = dataset_handle(bytes);
  return d;
}

/// All `*.jsonl` datasets under `dir` (or the single file), sorted by path.
/// Rollout files are recognized by name and skipped.
inline std::vector<Dataset> load_datasets(const std::filesystem::path& path) {
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_directory(path)) {
    for (const auto& entry : std::filesystem::directory_iterator(path)) {
      const auto& p = entry.path();
      if (p.extension() == ".jsonl" && p.filename().string().find("rollouts") == std::string::npos)
        files.push_back(p);
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(path);
  }
  std::vector<Dataset> out;
  for (const auto& f : files) {
    try {
      out.push_back(import_jsonl(f));
    } catch (const DataError& e) {
      throw DataError(f.string() + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rollouts and rejection filtering

struct RolloutRecord {
  std::string problem_id;
  int sample_index = 0;
  std::string response;
  std::string finish_reason;
  std::optional<int> reward;
  double temperature = 1.0;
  int max_tokens = 8192;
  std::string model;

  friend bool operator==(const RolloutRecord&, const RolloutRecord&) = default;
};

inline nlohmann::ordered_json to_json(const RolloutRecord& r) {
  nlohmann::ordered_json j;
  j["problem_id"] = r.problem_id;
  j["sample_index"] = r.sample_index;
  j["response"] = r.response;
  j["finish_reason"] = r.finish_reason;
  if (r.reward) j["reward"] = *r.reward;
  j["temperature"] = r.temperature;
  j["max_tokens"] = r.max_tokens;
  j["model"] = r.model;
  return j;
}

inline RolloutRecord rollout_from_json(const nlohmann::ordered_json& j) {
  RolloutRecord r;
  try {
    r.problem_id = j.at("problem_id").get<std::string>();
    r.sample_index = j.value("sample_index", 0);
    r.response = j.at("response").get<std::string>();
    r.finish_reason = j.value("finish_reason", "");
    if (j.contains("reward") && !j.at("reward").is_null()) r.reward = j.at("reward").get<int>();
    r.temperature = j.value("temperature", 1.0);
    r.max_tokens = j.value("max_tokens", 8192);
    r.model = j.value("model", "");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("schema violation: ") + e.what());
  }
  return r;
}

inline std::vector<RolloutRecord> read_rollouts(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::vector<RolloutRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(rollout_from_json(nlohmann::ordered_json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(std::string("malformed JSON: ") + e.what(), line_no);
    } catch (const DataError& e) {
      throw DataError(e.what(), line_no);
    }
  }
  return out;
}

inline void write_rollouts(std::span<const RolloutRecord> rollouts, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& r : rollouts) out << to_json(r).dump() << '\n';
}

enum class FilterMode { sft, rl };

struct SftRecord {
  std::string problem_id;
  std::string prompt;
  std::string response;

  friend bool operator==(const SftRecord&, const SftRecord&) = default;
};

struct FilterOutput {
  std::vector<SftRecord> sft_records;  // sft mode
  std::vector<Problem> problems;       // rl mode: surviving problems; sft mode: problems kept
  std::vector<std::string> dropped_ids;
};

/// Rejection filtering over rewarded rollouts.
///
/// sft: drop problems solved by every rollout; emit each correct response of
/// the rest. rl: drop problems whose rollouts are all correct or all wrong.
/// Every rollout must carry a reward and reference a problem in the set.
inline FilterOutput rejection_filter(std::span<const Problem> problems, std::span<const RolloutRecord> rollouts,
                                     FilterMode mode) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < problems.size(); ++i) index.emplace(problems[i].id, i);
  std::vector<std::vector<const RolloutRecord*>> by_problem(problems.size());
  for (const auto& r : rollouts) {
    const auto it = index.find(r.problem_id);
    if (it == index.end()) throw ContractViolation("orphan rollout for unknown problem id " + r.problem_id);
    if (!r.reward) throw ContractViolation("rollout for " + r.problem_id + " has no reward");
    by_problem[it->second].push_back(&r);
  }

  FilterOutput out;
  for (std::size_t i = 0; i < problems.size(); ++i) {
    const auto& group = by_problem[i];
    if (group.empty()) throw ContractViolation("problem " + problems[i].id + " has no rollouts");
    const auto correct = static_cast<std::size_t>(
        std::count_if(group.begin(), group.end(), [](const RolloutRecord* r) { return *r->reward == 1; }));
    const bool all_correct = correct == group.size();
    const bool drop = mode == FilterMode::sft ? all_correct : (all_correct || correct == 0);
    if (drop) {
      out.dropped_ids.push_back(problems[i].id);
      continue;
    }
    out.problems.push_back(problems[i]);
    if (mode == FilterMode::sft) {
      for (const RolloutRecord* r : group)
        if (*r->reward == 1) out.sft_records.push_back({problems[i].id, problems[i].prompt, r->response});
    }
  }
  return out;
}

}  // namespace compskill
