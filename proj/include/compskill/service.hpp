#pragma once

// HTTP reward service. All state is built at startup and immutable after;
// handlers run concurrently on httplib's thread pool.
//
//   POST /verify           one VerifyRequest  -> VerifyResponse
//   POST /verify/batch     {"items": [...]}   -> {"results": [...]} (order-preserving)
//   POST /problems/sample  generate problems on demand
//   GET  /health           {"status": "ok", "datasets": [...]}

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "compskill/dataset.hpp"
#include "compskill/errors.hpp"
#include "compskill/problem.hpp"
#include "compskill/verification.hpp"

namespace compskill {

/// A request failure with its HTTP status and a human-readable message.
class HttpError : public std::runtime_error {
 public:
  HttpError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string token;              // shared static bearer token; empty = open
  GenerationConfig generation;    // seed/pseudonyms/partition for /problems/sample
  std::size_t max_sample_count = 1000;
};

class RewardService {
 public:
  RewardService(std::vector<Dataset> datasets, ServiceConfig cfg)
      : datasets_(std::move(datasets)), cfg_(std::move(cfg)) {
    for (std::size_t d = 0; d < datasets_.size(); ++d) {
      handles_.emplace(datasets_[d].meta.handle, d);
      for (std::size_t i = 0; i < datasets_[d].problems.size(); ++i)
        by_id_.try_emplace(datasets_[d].problems[i].id, Ref{d, i});
    }
    install_routes();
  }

  RewardService(const RewardService&) = delete;
  RewardService& operator=(const RewardService&) = delete;

  // -- request handling (also usable without the HTTP layer) --------------

  nlohmann::json verify_one(const nlohmann::json& item, const std::string& path = "") const {
    if (!item.is_object()) throw HttpError(400, field(path, "") + "expected an object");
    const std::string response = response_text(item, path);
    if (item.contains("problem_id")) {
      const Problem& p = lookup(item, path);
      return result_json(verify(p, response));
    }
    const TaskKind task = parse_task(item, path);
    if (task == TaskKind::string_transform) {
      if (!item.contains("answer") || !item["answer"].is_string())
        throw HttpError(400, field(path, "answer") + "expected a string (or give problem_id)");
      return result_json(verify_string(item["answer"].get<std::string>(), response));
    }
    CountdownProblem cd;
    if (!item.contains("numbers") || !item["numbers"].is_array())
      throw HttpError(400, field(path, "numbers") + "expected an array of integers");
    for (std::size_t i = 0; i < item["numbers"].size(); ++i) {
      const auto& v = item["numbers"][i];
      if (!v.is_number_integer()) throw HttpError(400, field(path, "numbers[" + std::to_string(i) + "]") + "expected an integer");
      cd.numbers.push_back(v.get<std::int64_t>());
    }
    if (!item.contains("target") || !item["target"].is_number_integer())
      throw HttpError(400, field(path, "target") + "expected an integer");
    cd.target = item["target"].get<std::int64_t>();
    const auto v = verify_countdown(cd, response);
    return result_json({v.reward, v.parsed_answer, v.diagnostic, TaskKind::countdown});
  }

  nlohmann::json verify_batch_json(const nlohmann::json& body) const {
    if (!body.is_object() || !body.contains("items") || !body["items"].is_array())
      throw HttpError(400, "items: expected an array");
    nlohmann::json results = nlohmann::json::array();
    const auto& items = body["items"];
    for (std::size_t i = 0; i < items.size(); ++i) results.push_back(verify_one(items[i], "items[" + std::to_string(i) + "]"));
    return {{"results", std::move(results)}};
  }

  nlohmann::json sample_problems(const nlohmann::json& body) const {
    if (!body.is_object()) throw HttpError(400, "expected an object");
    GenerationConfig gen = cfg_.generation;
    if (body.contains("seed")) {
      if (!body["seed"].is_number_unsigned() && !body["seed"].is_number_integer()) throw HttpError(400, "seed: expected an integer");
      gen.seed = body["seed"].get<std::uint64_t>();
    }
    gen.threads = 1;
    std::size_t count = 1;
    if (body.contains("count")) {
      if (!body["count"].is_number_integer() || body["count"].get<std::int64_t>() < 1) throw HttpError(400, "count: expected a positive integer");
      count = body["count"].get<std::size_t>();
    }
    if (count > cfg_.max_sample_count) throw HttpError(400, "count: at most " + std::to_string(cfg_.max_sample_count));

    Dataset d;
    try {
      if (body.contains("preset")) {
        if (!body["preset"].is_string()) throw HttpError(400, "preset: expected a string");
        d = build_preset(body["preset"].get<std::string>(), gen, count);
      } else {
        const TaskKind task = parse_task(body, "");
        if (!body.contains("level") || !body["level"].is_number_integer()) throw HttpError(400, "level: expected an integer");
        const int level = body["level"].get<int>();
        if (task == TaskKind::countdown) {
          d = build_countdown({{level, count}}, gen);
        } else {
          Split split = Split::train;
          if (body.contains("split")) {
            if (!body["split"].is_string()) throw HttpError(400, "split: expected a string");
            split = split_from_name(body["split"].get<std::string>());
          }
          d = build_stage2({{level, count}}, partition_functions(gen.seed, gen.train_partition_size), gen, split);
        }
      }
    } catch (const ContractViolation& e) {
      throw HttpError(400, e.what());
    } catch (const DataError& e) {
      throw HttpError(400, e.what());
    } catch (const GenerationExhausted& e) {
      throw HttpError(422, e.what());
    }
    nlohmann::json problems = nlohmann::json::array();
    for (const auto& p : d.problems) problems.push_back(nlohmann::json::parse(to_json(p).dump()));
    return {{"problems", std::move(problems)}};
  }

  nlohmann::json health() const {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& d : datasets_)
      list.push_back({{"name", d.meta.name}, {"handle", d.meta.handle}, {"problems", d.problems.size()}});
    return {{"status", "ok"}, {"datasets", std::move(list)}};
  }

  // -- HTTP ----------------------------------------------------------------

  /// Blocks until stop().
  bool listen() { return server_.listen(cfg_.host, cfg_.port); }

  /// Bind an ephemeral port for tests; follow with listen_after_bind().
  int bind_any_port() { return server_.bind_to_any_port(cfg_.host); }
  bool listen_after_bind() { return server_.listen_after_bind(); }
  void wait_until_ready() const { server_.wait_until_ready(); }
  void stop() { server_.stop(); }

 private:
  struct Ref {
    std::size_t dataset;
    std::size_t problem;
  };

  static std::string field(const std::string& path, const std::string& name) {
    if (path.empty()) return name.empty() ? std::string() : name + ": ";
    return name.empty() ? path + ": " : path + "." + name + ": ";
  }

  static std::string response_text(const nlohmann::json& item, const std::string& path) {
    for (const char* key : {"response_text", "response"}) {
      if (!item.contains(key)) continue;
      if (!item[key].is_string()) throw HttpError(400, field(path, key) + "expected a string");
      return item[key].get<std::string>();
    }
    throw HttpError(400, field(path, "response_text") + "missing");
  }

  static TaskKind parse_task(const nlohmann::json& item, const std::string& path) {
    if (!item.contains("task") || !item["task"].is_string())
      throw HttpError(400, field(path, "task") + "expected \"string-transform\" or \"countdown\"");
    try {
      return task_from_name(item["task"].get<std::string>());
    } catch (const DataError&) {
      throw HttpError(400, field(path, "task") + "expected \"string-transform\" or \"countdown\"");
    }
  }

  const Problem& lookup(const nlohmann::json& item, const std::string& path) const {
    if (!item["problem_id"].is_string()) throw HttpError(400, field(path, "problem_id") + "expected a string");
    const std::string id = item["problem_id"].get<std::string>();
    if (item.contains("dataset")) {
      if (!item["dataset"].is_string()) throw HttpError(400, field(path, "dataset") + "expected a string");
      const auto h = handles_.find(item["dataset"].get<std::string>());
      if (h == handles_.end()) throw HttpError(404, "unknown dataset " + item["dataset"].get<std::string>());
      for (const auto& p : datasets_[h->second].problems)
        if (p.id == id) return p;
      throw HttpError(404, "unknown problem_id " + id);
    }
    const auto it = by_id_.find(id);
    if (it == by_id_.end()) throw HttpError(404, "unknown problem_id " + id);
    return datasets_[it->second.dataset].problems[it->second.problem];
  }

  static nlohmann::json result_json(const VerificationResult& r) {
    return {{"reward", r.reward},
            {"diagnostic", diagnostic_name(r.diagnostic)},
            {"parsed_answer", r.parsed_answer ? nlohmann::json(*r.parsed_answer) : nlohmann::json(nullptr)}};
  }

  bool authorized(const httplib::Request& req) const {
    return cfg_.token.empty() || req.get_header_value("Authorization") == "Bearer " + cfg_.token;
  }

  template <typename Fn>
  httplib::Server::Handler json_post(Fn fn) {
    return [this, fn](const httplib::Request& req, httplib::Response& res) {
      try {
        if (!authorized(req)) throw HttpError(401, "missing or wrong bearer token");
        const auto body = nlohmann::json::parse(req.body, nullptr, false);
        if (body.is_discarded()) throw HttpError(400, "body is not valid JSON");
        res.set_content(fn(body).dump(), "application/json");
      } catch (const HttpError& e) {
        res.status = e.status();
        res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
      } catch (const std::exception& e) {
        res.status = 500;
        res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
      }
    };
  }

  void install_routes() {
    server_.Post("/verify", json_post([this](const nlohmann::json& b) { return verify_one(b); }));
    server_.Post("/verify/batch", json_post([this](const nlohmann::json& b) { return verify_batch_json(b); }));
    server_.Post("/problems/sample", json_post([this](const nlohmann::json& b) { return sample_problems(b); }));
    server_.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(health().dump(), "application/json");
    });
  }

  std::vector<Dataset> datasets_;
  ServiceConfig cfg_;
  std::unordered_map<std::string, std::size_t> handles_;
  std::unordered_map<std::string, Ref> by_id_;
  httplib::Server server_;
};

}  // namespace compskill
