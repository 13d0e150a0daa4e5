#pragma once

// OpenAI-compatible chat-completions transport for rollout collection.
// One request per (prompt, sample), bounded in-flight concurrency,
// exponential backoff on transient failures, results in prompt order.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "compskill/errors.hpp"
#include "compskill/model.hpp"
#include "compskill/problem.hpp"

namespace compskill {

struct SamplingConfig {
  double temperature = 1.0;
  int max_tokens = 8192;
  int n_samples = 1;
  std::string endpoint;     // base URL such as http://localhost:8000/v1
  std::string model;        // model tag sent in the request body
  std::string api_key_env;  // name of the env var holding the bearer token; empty = no auth
  std::string system_prompt;  // empty = no system message
  std::size_t max_in_flight = 32;
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::seconds request_timeout{600};
  std::optional<std::chrono::milliseconds> time_budget;
  std::function<void(std::string_view)> log;

  void validate() const {
    if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
    if (n_samples < 1) throw ConfigError("n_samples must be >= 1");
    if (max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
    if (max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
    if (endpoint.empty()) throw ConfigError("endpoint URL is empty");
  }
};

struct Completion {
  std::size_t prompt_index = 0;
  int sample_index = 0;
  std::string text;
  std::string finish_reason;
};

struct GatewayStats {
  std::size_t requests = 0;
  std::size_t retries = 0;
};

class PartialCompletions : public std::runtime_error {
 public:
  PartialCompletions(const std::string& what, std::vector<Completion> completed)
      : std::runtime_error(what), completed_(std::move(completed)) {}
  const std::vector<Completion>& completed() const noexcept { return completed_; }

 private:
  std::vector<Completion> completed_;
};

namespace detail {

struct EndpointParts {
  std::string origin;  // scheme://host[:port]
  std::string path;    // .../chat/completions
};

inline EndpointParts split_endpoint(const std::string& url) {
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint must include a scheme: " + url);
  const std::size_t path_start = url.find('/', scheme_end + 3);
  EndpointParts parts;
  parts.origin = url.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  static constexpr std::string_view suffix = "/chat/completions";
  if (path.size() < suffix.size() || path.compare(path.size() - suffix.size(), suffix.size(), suffix) != 0)
    path += suffix;
  parts.path = path;
  return parts;
}

inline bool is_transient_status(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace detail

inline nlohmann::json chat_request_body(std::string_view prompt, const SamplingConfig& cfg) {
  nlohmann::json messages = nlohmann::json::array();
  if (!cfg.system_prompt.empty()) messages.push_back({{"role", "system"}, {"content", cfg.system_prompt}});
  messages.push_back({{"role", "user"}, {"content", prompt}});
  return {{"model", cfg.model},
          {"messages", std::move(messages)},
          {"temperature", cfg.temperature},
          {"max_tokens", cfg.max_tokens},
          {"n", 1}};
}

/// n_samples completions per prompt, grouped [p0s0..p0sN, p1s0..]. Response
/// text is returned byte-for-byte as the server sent it.
///
/// Throws ConfigError before any request when the auth variable is unset,
/// TransportError on non-transient HTTP failures or exhausted retries, and
/// PartialCompletions when the time budget runs out.
inline std::vector<Completion> sample_completions(std::span<const std::string> prompts, const SamplingConfig& cfg,
                                                  GatewayStats* stats = nullptr) {
  cfg.validate();
  std::string token;
  if (!cfg.api_key_env.empty()) {
    const char* value = std::getenv(cfg.api_key_env.c_str());
    if (value == nullptr || *value == '\0')
      throw ConfigError("environment variable " + cfg.api_key_env + " is not set");
    token = value;
  }
  const detail::EndpointParts endpoint = detail::split_endpoint(cfg.endpoint);
  const std::size_t n = static_cast<std::size_t>(cfg.n_samples);
  const std::size_t jobs = prompts.size() * n;

  std::vector<std::optional<Completion>> results(jobs);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> requests{0};
  std::atomic<std::size_t> retries{0};
  std::atomic<bool> stop{false};
  std::atomic<bool> budget_hit{false};
  std::mutex error_mutex;
  std::optional<TransportError> error;
  const auto deadline = cfg.time_budget ? std::optional(std::chrono::steady_clock::now() + *cfg.time_budget) : std::nullopt;

  const auto log = [&](const std::string& msg) {
    if (cfg.log) cfg.log(msg);
  };

  const auto worker = [&] {
    httplib::Client client(endpoint.origin);
    client.set_connection_timeout(std::chrono::seconds(10));
    client.set_read_timeout(cfg.request_timeout);
    client.set_write_timeout(std::chrono::seconds(30));
    httplib::Headers headers;
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);

    for (std::size_t job = next.fetch_add(1); job < jobs && !stop; job = next.fetch_add(1)) {
      const std::size_t prompt_index = job / n;
      const std::string body = chat_request_body(prompts[prompt_index], cfg).dump();
      auto backoff = cfg.initial_backoff;
      for (int attempt = 0;; ++attempt) {
        if (deadline && std::chrono::steady_clock::now() >= *deadline) {
          budget_hit = true;
          stop = true;
          break;
        }
        ++requests;
        const auto res = client.Post(endpoint.path, headers, body, "application/json");
        std::string failure;
        int status = 0;
        if (!res) {
          failure = "transport error: " + httplib::to_string(res.error());
        } else if (res->status != 200) {
          status = res->status;
          failure = "HTTP " + std::to_string(res->status);
          if (!detail::is_transient_status(res->status)) {
            std::lock_guard lock(error_mutex);
            if (!error) error.emplace(failure + " for prompt " + std::to_string(prompt_index) + ": " + res->body, prompt_index, status);
            stop = true;
            break;
          }
        } else {
          const auto parsed = nlohmann::json::parse(res->body, nullptr, false);
          const nlohmann::json* choice = nullptr;
          if (parsed.is_object() && parsed.contains("choices") && parsed["choices"].is_array() && !parsed["choices"].empty())
            choice = &parsed["choices"][0];
          if (choice == nullptr || !choice->contains("message") || !(*choice)["message"].contains("content") ||
              !(*choice)["message"]["content"].is_string()) {
            std::lock_guard lock(error_mutex);
            if (!error) error.emplace("malformed completion body for prompt " + std::to_string(prompt_index), prompt_index, 200);
            stop = true;
            break;
          }
          Completion c;
          c.prompt_index = prompt_index;
          c.sample_index = static_cast<int>(job % n);
          c.text = (*choice)["message"]["content"].get<std::string>();
          if (choice->contains("finish_reason") && (*choice)["finish_reason"].is_string())
            c.finish_reason = (*choice)["finish_reason"].get<std::string>();
          results[job] = std::move(c);
          break;
        }
        if (attempt >= cfg.max_retries) {
          std::lock_guard lock(error_mutex);
          if (!error) error.emplace(failure + " for prompt " + std::to_string(prompt_index) + " after " + std::to_string(attempt) + " retries", prompt_index, status);
          stop = true;
          break;
        }
        ++retries;
        log("retry " + std::to_string(attempt + 1) + " for prompt " + std::to_string(prompt_index) + " after " + failure);
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
      }
    }
  };

  {
    const std::size_t threads = std::min(cfg.max_in_flight, std::max<std::size_t>(jobs, 1));
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  if (stats != nullptr) {
    stats->requests += requests;
    stats->retries += retries;
  }
  std::vector<Completion> out;
  out.reserve(jobs);
  for (auto& r : results)
    if (r) out.push_back(std::move(*r));
  if (error) throw *error;
  if (budget_hit || out.size() != jobs)
    throw PartialCompletions("time budget exhausted after " + std::to_string(out.size()) + " of " + std::to_string(jobs) + " completions", std::move(out));
  return out;
}

/// Model backed by a chat-completions endpoint; sends each problem's prompt verbatim.
class HttpModel final : public Model {
 public:
  explicit HttpModel(SamplingConfig cfg) : cfg_(std::move(cfg)) {}

  std::string tag() const override { return cfg_.model.empty() ? cfg_.endpoint : cfg_.model; }

  SampleGroups sample(std::span<const Problem> problems, int n) override {
    SamplingConfig cfg = cfg_;
    cfg.n_samples = n;
    std::vector<std::string> prompts;
    prompts.reserve(problems.size());
    for (const auto& p : problems) prompts.push_back(p.prompt);
    const auto group = [&](const std::vector<Completion>& completions) {
      SampleGroups out(problems.size());
      for (const auto& c : completions) out[c.prompt_index].push_back({c.text, c.finish_reason});
      return out;
    };
    try {
      return group(sample_completions(prompts, cfg, &stats_));
    } catch (const PartialCompletions& e) {
      throw PartialResults(e.what(), group(e.completed()));
    }
  }

  const GatewayStats& stats() const noexcept { return stats_; }

 private:
  SamplingConfig cfg_;
  GatewayStats stats_;
};

}  // namespace compskill
