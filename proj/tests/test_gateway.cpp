#include <atomic>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <gtest/gtest.h>
#include <httplib.h>
#include <json.hpp>

#include "compskill/dataset.hpp"
#include "compskill/gateway.hpp"

using namespace compskill;
using nlohmann::json;

namespace {

// Minimal chat-completions server. The handler sees the parsed body and the
// per-prompt attempt number and returns (status, content).
class MockServer {
 public:
  using Handler = std::function<std::pair<int, std::string>(const json& body, int attempt)>;

  explicit MockServer(Handler handler) : handler_(std::move(handler)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const json body = json::parse(req.body);
      const std::string prompt = body["messages"].back()["content"];
      int attempt;
      {
        std::lock_guard lock(mutex_);
        attempt = attempts_[prompt]++;
        bodies_.push_back(body);
        auth_ = req.get_header_value("Authorization");
      }
      const auto [status, content] = handler_(body, attempt);
      res.status = status;
      if (status == 200) {
        json reply = {{"choices", json::array({{{"index", 0},
                                                {"message", {{"role", "assistant"}, {"content", content}}},
                                                {"finish_reason", "stop"}}})}};
        res.set_content(reply.dump(), "application/json");
      } else {
        res.set_content(content, "text/plain");
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~MockServer() {
    server_.stop();
    thread_.join();
  }

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

  std::size_t requests() {
    std::lock_guard lock(mutex_);
    return bodies_.size();
  }

  json last_body() {
    std::lock_guard lock(mutex_);
    return bodies_.back();
  }

  std::string last_auth() {
    std::lock_guard lock(mutex_);
    return auth_;
  }

 private:
  Handler handler_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mutex_;
  std::map<std::string, int> attempts_;
  std::vector<json> bodies_;
  std::string auth_;
};

SamplingConfig fast_config(const MockServer& server) {
  SamplingConfig cfg;
  cfg.endpoint = server.endpoint();
  cfg.model = "mock";
  cfg.initial_backoff = std::chrono::milliseconds(5);
  cfg.request_timeout = std::chrono::seconds(10);
  return cfg;
}

std::pair<int, std::string> echo(const json& body, int attempt) {
  return {200, body["messages"].back()["content"].get<std::string>() + "#" + std::to_string(attempt)};
}

}  // namespace

TEST(Gateway, EndpointNormalisation) {
  EXPECT_EQ(detail::split_endpoint("http://h:8000/v1").path, "/v1/chat/completions");
  EXPECT_EQ(detail::split_endpoint("http://h:8000/v1/").origin, "http://h:8000");
  EXPECT_EQ(detail::split_endpoint("http://h/v1/chat/completions").path, "/v1/chat/completions");
  EXPECT_EQ(detail::split_endpoint("https://h").path, "/chat/completions");
  EXPECT_THROW(detail::split_endpoint("localhost:8000"), ConfigError);
}

TEST(Gateway, RequestBody) {
  SamplingConfig cfg;
  cfg.model = "m";
  cfg.temperature = 0.6;
  cfg.max_tokens = 128;
  const json plain = chat_request_body("hi", cfg);
  EXPECT_EQ(plain["messages"].size(), 1u);
  EXPECT_EQ(plain["messages"][0]["role"], "user");
  EXPECT_EQ(plain["max_tokens"], 128);
  cfg.system_prompt = "sys";
  EXPECT_EQ(chat_request_body("hi", cfg)["messages"][0]["content"], "sys");
}

TEST(Gateway, RetriesTransientFailures) {
  MockServer server([](const json& body, int attempt) -> std::pair<int, std::string> {
    if (attempt < 2) return {attempt == 0 ? 500 : 503, "busy"};
    return echo(body, attempt);
  });
  auto cfg = fast_config(server);
  std::vector<std::string> logs;
  std::mutex log_mutex;
  cfg.log = [&](std::string_view m) {
    std::lock_guard lock(log_mutex);
    logs.emplace_back(m);
  };
  GatewayStats stats;
  const std::vector<std::string> prompts{"p0"};
  const auto out = sample_completions(prompts, cfg, &stats);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].text, "p0#2");
  EXPECT_EQ(out[0].finish_reason, "stop");
  EXPECT_EQ(stats.requests, 3u);
  EXPECT_EQ(stats.retries, 2u);
  EXPECT_EQ(logs.size(), 2u);
}

TEST(Gateway, RetryBudgetExhausted) {
  MockServer server([](const json&, int) -> std::pair<int, std::string> { return {429, "slow down"}; });
  auto cfg = fast_config(server);
  cfg.max_retries = 2;
  const std::vector<std::string> prompts{"p0"};
  try {
    sample_completions(prompts, cfg);
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_EQ(e.status(), 429);
    EXPECT_EQ(e.prompt_index(), 0u);
  }
  EXPECT_EQ(server.requests(), 3u);
}

TEST(Gateway, NonTransientFailsFast) {
  MockServer server([](const json& body, int attempt) -> std::pair<int, std::string> {
    if (body["messages"].back()["content"] == "bad") return {400, "invalid"};
    return echo(body, attempt);
  });
  auto cfg = fast_config(server);
  cfg.max_in_flight = 1;
  const std::vector<std::string> prompts{"ok", "bad", "never"};
  try {
    sample_completions(prompts, cfg);
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_EQ(e.status(), 400);
    EXPECT_EQ(e.prompt_index(), 1u);
    EXPECT_NE(std::string(e.what()).find("invalid"), std::string::npos);
  }
  EXPECT_EQ(server.requests(), 2u);
}

TEST(Gateway, OrderPreservedWithConcurrency) {
  MockServer server([](const json& body, int attempt) {
    const std::string prompt = body["messages"].back()["content"];
    std::this_thread::sleep_for(std::chrono::milliseconds(prompt.size() % 3));
    return echo(body, attempt);
  });
  auto cfg = fast_config(server);
  cfg.n_samples = 4;
  cfg.max_in_flight = 8;
  std::vector<std::string> prompts;
  for (int i = 0; i < 25; ++i) prompts.push_back("prompt-" + std::string(static_cast<std::size_t>(i), 'x'));
  const auto out = sample_completions(prompts, cfg);
  ASSERT_EQ(out.size(), 100u);
  std::map<std::size_t, std::set<std::string>> texts;
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_EQ(out[i].prompt_index, i / 4);
    EXPECT_EQ(out[i].sample_index, static_cast<int>(i % 4));
    EXPECT_EQ(out[i].text.substr(0, out[i].text.find('#')), prompts[i / 4]);
    texts[i / 4].insert(out[i].text);
  }
  for (const auto& [_, group] : texts) EXPECT_EQ(group.size(), 4u);
  EXPECT_EQ(server.last_body()["n"], 1);
  EXPECT_EQ(server.last_body()["model"], "mock");
}

TEST(Gateway, AuthFromEnvironment) {
  MockServer server(echo);
  auto cfg = fast_config(server);
  cfg.api_key_env = "COMPSKILL_TEST_UNSET_KEY";
  ::unsetenv("COMPSKILL_TEST_UNSET_KEY");
  const std::vector<std::string> prompts{"p"};
  EXPECT_THROW(sample_completions(prompts, cfg), ConfigError);
  EXPECT_EQ(server.requests(), 0u);
  ::setenv("COMPSKILL_TEST_KEY", "sekrit", 1);
  cfg.api_key_env = "COMPSKILL_TEST_KEY";
  sample_completions(prompts, cfg);
  EXPECT_EQ(server.last_auth(), "Bearer sekrit");
}

TEST(Gateway, InvalidConfig) {
  SamplingConfig cfg;
  cfg.endpoint = "http://127.0.0.1:1";
  cfg.n_samples = 0;
  const std::vector<std::string> prompts{"p"};
  EXPECT_THROW(sample_completions(prompts, cfg), ConfigError);
  cfg.n_samples = 1;
  cfg.temperature = -1;
  EXPECT_THROW(sample_completions(prompts, cfg), ConfigError);
}

TEST(Gateway, ConnectionFailureIsTransportError) {
  SamplingConfig cfg;
  cfg.endpoint = "http://127.0.0.1:1/v1";
  cfg.max_retries = 1;
  cfg.initial_backoff = std::chrono::milliseconds(1);
  const std::vector<std::string> prompts{"p"};
  try {
    sample_completions(prompts, cfg);
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_EQ(e.status(), 0);
  }
}

TEST(Gateway, TimeBudgetYieldsPartialResults) {
  MockServer server([](const json& body, int attempt) {
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    return echo(body, attempt);
  });
  auto cfg = fast_config(server);
  cfg.max_in_flight = 1;
  cfg.time_budget = std::chrono::milliseconds(100);
  std::vector<std::string> prompts;
  for (int i = 0; i < 20; ++i) prompts.push_back("p" + std::to_string(i));
  try {
    sample_completions(prompts, cfg);
    FAIL();
  } catch (const PartialCompletions& e) {
    EXPECT_GT(e.completed().size(), 0u);
    EXPECT_LT(e.completed().size(), 20u);
    for (std::size_t i = 0; i < e.completed().size(); ++i) EXPECT_EQ(e.completed()[i].prompt_index, i);
  }
}

TEST(Gateway, HttpModelGroupsByProblem) {
  MockServer server(echo);
  GenerationConfig gen;
  const Dataset d = build_preset("eval-l2", gen, 6);
  HttpModel model(fast_config(server));
  EXPECT_EQ(model.tag(), "mock");
  const auto groups = model.sample(d.problems, 3);
  ASSERT_EQ(groups.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    ASSERT_EQ(groups[i].size(), 3u);
    for (const auto& s : groups[i]) EXPECT_EQ(s.text.substr(0, s.text.rfind('#')), d.problems[i].prompt);
  }
  EXPECT_EQ(model.stats().requests, 18u);
}
