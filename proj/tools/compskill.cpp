// compskill command-line front end.
//
// Every subcommand prints a one-line JSON summary on stdout as its last line.
// Exit codes: 0 ok, 1 usage, 2 data error, 3 transport error.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "compskill/compskill.hpp"
#include "compskill/gateway.hpp"
#include "compskill/service.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace compskill;

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kData = 2, kTransport = 3 };

void emit(const ordered_json& summary) { std::cout << summary.dump() << std::endl; }

void write_file(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << bytes;
}

/// All datasets under `path`, merged into one for evaluation.
Dataset load_merged(const fs::path& path) {
  auto datasets = load_datasets(path);
  if (datasets.empty()) throw DataError("no datasets found at " + path.string());
  if (datasets.size() == 1) return std::move(datasets.front());
  Dataset merged;
  merged.meta = datasets.front().meta;
  std::string names, handles;
  for (auto& d : datasets) {
    names += (names.empty() ? "" : "+") + d.meta.name;
    handles += d.meta.handle;
    for (auto& p : d.problems) merged.problems.push_back(std::move(p));
  }
  merged.meta.name = names;
  merged.meta.handle = dataset_handle(handles);
  return merged;
}

std::unordered_map<std::string, const Problem*> index_by_id(const Dataset& d) {
  std::unordered_map<std::string, const Problem*> out;
  for (const auto& p : d.problems) out.emplace(p.id, &p);
  return out;
}

const Problem& find_problem(const std::unordered_map<std::string, const Problem*>& index, const std::string& id) {
  const auto it = index.find(id);
  if (it == index.end()) throw DataError("rollout references unknown problem id " + id);
  return *it->second;
}

struct EndpointOptions {
  std::string endpoint;
  std::string model_name;
  std::string api_key_env;
  std::string system_prompt;
  double temperature = 1.0;
  int max_tokens = 8192;
  std::size_t max_in_flight = 32;
  double time_budget_s = 0.0;

  void add_to(CLI::App* app) {
    app->add_option("--endpoint", endpoint, "OpenAI-compatible base URL, e.g. http://localhost:8000/v1");
    app->add_option("--model-name", model_name, "model tag sent to the endpoint");
    app->add_option("--api-key-env", api_key_env, "environment variable holding the bearer token");
    app->add_option("--system-prompt", system_prompt, "optional system message");
    app->add_option("--temperature", temperature, "sampling temperature")->capture_default_str();
    app->add_option("--max-tokens", max_tokens, "completion token cap")->capture_default_str();
    app->add_option("--max-in-flight", max_in_flight, "concurrent requests")->capture_default_str();
    app->add_option("--time-budget", time_budget_s, "seconds before stopping with partial results (0 = none)");
  }

  SamplingConfig sampling() const {
    SamplingConfig c;
    c.endpoint = endpoint;
    c.model = model_name;
    c.api_key_env = api_key_env;
    c.system_prompt = system_prompt;
    c.temperature = temperature;
    c.max_tokens = max_tokens;
    c.max_in_flight = max_in_flight;
    if (time_budget_s > 0) c.time_budget = std::chrono::milliseconds(static_cast<std::int64_t>(time_budget_s * 1000));
    c.log = [](std::string_view msg) { std::cerr << msg << '\n'; };
    return c;
  }
};

std::unique_ptr<Model> make_model(const std::string& spec, const EndpointOptions& ep, std::uint64_t seed) {
  if (!ep.endpoint.empty()) return std::make_unique<HttpModel>(ep.sampling());
  if (spec == "oracle") return std::make_unique<ScriptedModel>(ScriptedModel::oracle());
  if (spec.rfind("corrupted:", 0) == 0) {
    double p = 0;
    try {
      p = std::stod(spec.substr(10));
    } catch (const std::exception&) {
      throw CLI::ValidationError("--model", "corruption probability must be a number: " + spec);
    }
    return std::make_unique<ScriptedModel>(ScriptedModel::corrupted(p, seed));
  }
  throw CLI::ValidationError("--model", "expected oracle, corrupted:P, or --endpoint: " + spec);
}

PseudonymMap names_for(const Dataset& d) { return d.meta.pseudonyms.value_or(assign_pseudonyms(d.meta.seed)); }

// -- subcommands -------------------------------------------------------------

int run_gen(const std::vector<std::string>& presets, const std::string& out, std::uint64_t seed,
            std::optional<std::size_t> count, unsigned threads, bool mixed) {
  GenerationConfig cfg;
  cfg.seed = seed;
  cfg.threads = threads;
  cfg.alphabet.mixed = mixed;
  ordered_json written = ordered_json::array();
  for (const auto& spec : presets) {
    for (const auto& name : expand_preset_names(spec)) {
      const auto start = std::chrono::steady_clock::now();
      Dataset d = build_preset(name, cfg, count);
      const fs::path path = fs::path(out) / (name + ".jsonl");
      fs::create_directories(path.parent_path());
      const std::string handle = export_jsonl(d, path);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::cerr << "wrote " << d.problems.size() << " problems to " << path.string() << " in " << secs << " s\n";
      written.push_back({{"preset", name}, {"path", path.string()}, {"problems", d.problems.size()}, {"handle", handle}});
    }
  }
  emit({{"command", "gen"}, {"seed", seed}, {"datasets", std::move(written)}});
  return kOk;
}

int run_verify(const std::string& dataset_path, const std::string& rollouts_path, const std::string& out,
               std::uint64_t seed) {
  const Dataset d = load_merged(dataset_path);
  const auto index = index_by_id(d);
  auto rollouts = read_rollouts(rollouts_path);
  std::size_t correct = 0;
  std::map<std::string, std::size_t> diagnostics;
  for (auto& r : rollouts) {
    const auto v = verify(find_problem(index, r.problem_id), r.response);
    r.reward = v.reward;
    correct += static_cast<std::size_t>(v.reward);
    ++diagnostics[std::string(diagnostic_name(v.diagnostic))];
    if (out.empty())
      std::cout << ordered_json{{"problem_id", r.problem_id}, {"sample_index", r.sample_index}, {"reward", v.reward},
                                {"diagnostic", diagnostic_name(v.diagnostic)}}.dump() << '\n';
  }
  if (!out.empty()) write_rollouts(rollouts, out);
  ordered_json diag = ordered_json::object();
  for (const auto& [k, v] : diagnostics) diag[k] = v;
  emit({{"command", "verify"},
        {"seed", seed},
        {"rollouts", rollouts.size()},
        {"correct", correct},
        {"accuracy", rollouts.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(rollouts.size())},
        {"diagnostics", std::move(diag)}});
  return kOk;
}

int run_eval(const std::string& dataset_path, const std::string& model_spec, const EndpointOptions& ep, int n,
             const std::string& out, const std::string& csv, const std::string& judge_kind, std::uint64_t seed) {
  const Dataset d = load_merged(dataset_path);
  auto model = make_model(model_spec, ep, seed);
  EvalConfig cfg;
  cfg.n_samples = n;
  std::unique_ptr<Judge> judge;
  if (judge_kind == "heuristic") judge = std::make_unique<HeuristicJudge>(names_for(d));
  cfg.judge = judge.get();
  const auto start = std::chrono::steady_clock::now();
  EvalReport report = evaluate_model(*model, d, cfg);
  report.seed = seed;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ordered_json j = to_json(report);
  if (!out.empty()) write_file(out, j.dump(2) + "\n");
  if (!csv.empty()) write_file(csv, to_csv(report));
  ordered_json levels = ordered_json::object();
  for (const auto& l : report.levels) levels[std::to_string(l.level)] = l.avg_at_n;
  emit({{"command", "eval"},
        {"seed", seed},
        {"model", report.model},
        {"dataset", report.dataset},
        {"partial", report.partial},
        {"n_samples", n},
        {"avg_at_n", std::move(levels)},
        {"seconds", secs}});
  return report.partial ? kTransport : kOk;
}

int run_solve(const std::vector<std::int64_t>& numbers, std::int64_t target, std::uint64_t seed) {
  const auto witness = solve(numbers, target);
  ordered_json j{{"command", "solve"}, {"seed", seed}, {"numbers", numbers}, {"target", target},
                 {"solvable", witness.has_value()}};
  j["expression"] = witness ? ordered_json((*witness)->to_string()) : ordered_json(nullptr);
  emit(j);
  return kOk;
}

int run_analyze(const std::string& dataset_path, const std::string& rollouts_path, const EndpointOptions& ep,
                std::uint64_t seed) {
  const Dataset d = load_merged(dataset_path);
  const auto index = index_by_id(d);
  const auto rollouts = read_rollouts(rollouts_path);
  std::unique_ptr<Model> judge_model;
  std::unique_ptr<Judge> judge;
  if (!ep.endpoint.empty()) {
    judge_model = std::make_unique<HttpModel>(ep.sampling());
    judge = std::make_unique<ModelJudge>(*judge_model);
  } else {
    judge = std::make_unique<HeuristicJudge>(names_for(d));
  }
  std::map<int, std::map<std::string, std::size_t>> by_level;
  std::map<std::string, std::size_t> total;
  for (const auto& r : rollouts) {
    const Problem& p = find_problem(index, r.problem_id);
    const std::string c(failure_name(classify_failure(p, r.response, *judge)));
    ++by_level[p.level][c];
    ++total[c];
  }
  ordered_json levels = ordered_json::object();
  for (const auto& [level, counts] : by_level) {
    ordered_json row = ordered_json::object();
    for (const auto& [k, v] : counts) row[k] = v;
    levels[std::to_string(level)] = std::move(row);
  }
  ordered_json all = ordered_json::object();
  for (const auto& [k, v] : total) all[k] = v;
  emit({{"command", "analyze"},
        {"seed", seed},
        {"judge", ep.endpoint.empty() ? "heuristic" : std::string(kJudgeRubricVersion)},
        {"rollouts", rollouts.size()},
        {"categories", std::move(all)},
        {"levels", std::move(levels)}});
  return kOk;
}

int run_filter(const std::string& dataset_path, const std::string& rollouts_path, const std::string& mode_name,
               const std::string& out, std::uint64_t seed) {
  const Dataset d = load_merged(dataset_path);
  auto rollouts = read_rollouts(rollouts_path);
  const auto index = index_by_id(d);
  for (auto& r : rollouts)
    if (!r.reward) r.reward = verify(find_problem(index, r.problem_id), r.response).reward;
  const FilterMode mode = mode_name == "sft" ? FilterMode::sft : FilterMode::rl;
  FilterOutput result;
  try {
    result = rejection_filter(d.problems, rollouts, mode);
  } catch (const ContractViolation& e) {
    throw DataError(e.what());
  }
  std::string bytes;
  if (mode == FilterMode::sft) {
    for (const auto& r : result.sft_records)
      bytes += ordered_json{{"problem_id", r.problem_id}, {"prompt", r.prompt}, {"response", r.response}}.dump() + "\n";
  } else {
    bytes = to_jsonl(result.problems);
  }
  write_file(out, bytes);
  emit({{"command", "filter"},
        {"seed", seed},
        {"mode", mode_name},
        {"kept_problems", result.problems.size()},
        {"dropped_problems", result.dropped_ids.size()},
        {"sft_records", result.sft_records.size()},
        {"out", out}});
  return kOk;
}

int run_serve(const std::vector<std::string>& dataset_paths, const std::string& host, int port,
              const std::string& token_env, std::uint64_t seed) {
  std::vector<Dataset> datasets;
  for (const auto& p : dataset_paths)
    for (auto& d : load_datasets(p)) datasets.push_back(std::move(d));
  ServiceConfig cfg;
  cfg.host = host;
  cfg.port = port;
  cfg.generation.seed = seed;
  if (!token_env.empty()) {
    const char* v = std::getenv(token_env.c_str());
    if (v == nullptr || *v == '\0') throw ConfigError("environment variable " + token_env + " is not set");
    cfg.token = v;
  }
  std::size_t problems = 0;
  for (const auto& d : datasets) problems += d.problems.size();
  RewardService service(std::move(datasets), cfg);
  emit({{"command", "serve"}, {"seed", seed}, {"host", host}, {"port", port}, {"problems", problems}});
  if (!service.listen()) {
    std::cerr << "cannot listen on " << host << ':' << port << '\n';
    return kTransport;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compositional string-transformation and Countdown task engine"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "compskill 0.1.0");

  std::uint64_t seed = 0;
  const auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", seed, "experiment seed")->capture_default_str(); };

  // gen
  auto* gen = app.add_subcommand("gen", "generate datasets from presets");
  std::vector<std::string> presets;
  std::string gen_out = ".";
  std::optional<std::size_t> gen_count;
  unsigned threads = 0;
  bool mixed = false;
  bool list_presets = false;
  gen->add_option("--preset", presets, "preset name or range such as eval-l1..l8 (repeatable)");
  gen->add_option("--out", gen_out, "output directory")->capture_default_str();
  gen->add_option("--count", gen_count, "override the per-preset problem count");
  gen->add_option("--threads", threads, "worker threads (0 = all cores)");
  gen->add_flag("--mixed-inputs", mixed, "draw inputs over letters, digits and spaces");
  gen->add_flag("--list-presets", list_presets, "print the preset catalog and exit");
  add_seed(gen);

  // verify
  auto* ver = app.add_subcommand("verify", "score a rollout file against its dataset");
  std::string dataset_path, rollouts_path, ver_out;
  ver->add_option("--dataset", dataset_path, "dataset JSONL file or directory")->required();
  ver->add_option("--rollouts", rollouts_path, "rollout JSONL file")->required();
  ver->add_option("--out", ver_out, "write rewarded rollouts here instead of per-line output");
  add_seed(ver);

  // eval
  auto* ev = app.add_subcommand("eval", "run the evaluation harness");
  std::string model_spec = "oracle", eval_out, eval_csv, judge_kind = "heuristic";
  int n_samples = 32;
  EndpointOptions eval_ep;
  ev->add_option("--dataset", dataset_path, "dataset JSONL file or directory")->required();
  ev->add_option("--model", model_spec, "oracle | corrupted:P (ignored with --endpoint)")->capture_default_str();
  ev->add_option("-n,--samples", n_samples, "samples per problem")->capture_default_str()->check(CLI::PositiveNumber);
  ev->add_option("--out", eval_out, "report JSON path");
  ev->add_option("--csv", eval_csv, "flat CSV path");
  ev->add_option("--judge", judge_kind, "failure judge: heuristic | none")
      ->capture_default_str()
      ->check(CLI::IsMember({"heuristic", "none"}));
  eval_ep.add_to(ev);
  add_seed(ev);

  // solve
  auto* sol = app.add_subcommand("solve", "solve a Countdown instance");
  std::vector<std::int64_t> numbers;
  std::int64_t target = 0;
  sol->add_option("--numbers", numbers, "comma-separated numbers")->required()->delimiter(',');
  sol->add_option("--target", target, "target value")->required();
  add_seed(sol);

  // analyze
  auto* an = app.add_subcommand("analyze", "classify failure modes in a rollout file");
  EndpointOptions judge_ep;
  an->add_option("--dataset", dataset_path, "dataset JSONL file or directory")->required();
  an->add_option("--rollouts", rollouts_path, "rollout JSONL file")->required();
  judge_ep.add_to(an);
  add_seed(an);

  // filter
  auto* fil = app.add_subcommand("filter", "rejection-filter rollouts for SFT or RL");
  std::string filter_mode, filter_out;
  fil->add_option("--dataset", dataset_path, "dataset JSONL file or directory")->required();
  fil->add_option("--rollouts", rollouts_path, "rollout JSONL file")->required();
  fil->add_option("--mode", filter_mode, "sft | rl")->required()->check(CLI::IsMember({"sft", "rl"}));
  fil->add_option("--out", filter_out, "output JSONL path")->required();
  add_seed(fil);

  // serve
  auto* srv = app.add_subcommand("serve", "run the HTTP reward service");
  std::vector<std::string> serve_datasets;
  std::string host = "127.0.0.1", token_env;
  int port = 8080;
  srv->add_option("--dataset", serve_datasets, "dataset JSONL file or directory (repeatable)");
  srv->add_option("--host", host, "bind address")->capture_default_str();
  srv->add_option("--port", port, "port")->capture_default_str();
  srv->add_option("--token-env", token_env, "environment variable holding the shared bearer token");
  add_seed(srv);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (gen->parsed()) {
      if (list_presets) {
        ordered_json list = ordered_json::array();
        for (const auto& p : preset_catalog()) list.push_back({{"name", p.name}, {"description", p.description}});
        emit({{"command", "gen"}, {"seed", seed}, {"presets", std::move(list)}});
        return kOk;
      }
      if (presets.empty()) {
        std::cerr << "gen: at least one --preset is required\n" << gen->help();
        return kUsage;
      }
      return run_gen(presets, gen_out, seed, gen_count, threads, mixed);
    }
    if (ver->parsed()) return run_verify(dataset_path, rollouts_path, ver_out, seed);
    if (ev->parsed()) return run_eval(dataset_path, model_spec, eval_ep, n_samples, eval_out, eval_csv, judge_kind, seed);
    if (sol->parsed()) return run_solve(numbers, target, seed);
    if (an->parsed()) return run_analyze(dataset_path, rollouts_path, judge_ep, seed);
    if (fil->parsed()) return run_filter(dataset_path, rollouts_path, filter_mode, filter_out, seed);
    if (srv->parsed()) return run_serve(serve_datasets, host, port, token_env, seed);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ContractViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const TransportError& e) {
    std::cerr << "transport error: " << e.what() << '\n';
    return kTransport;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
