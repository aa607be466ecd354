#include "doctest.h"

#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include "ofc/error.hpp"
#include "ofc/gateway.hpp"
#include "ofc/util.hpp"
#include "ofc/web_search.hpp"
#include "support/support.hpp"

using namespace ofc;
using namespace ofc::testing;

namespace {

// A local HTTP server on an ephemeral port for the duration of a test.
class LocalServer {
 public:
  LocalServer() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Server& server() { return server_; }
  std::string url(const std::string& path = "") const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

GatewayConfig http_config(const std::string& url) {
  GatewayConfig config;
  config.backend = GatewayBackend::kHttpChat;
  config.base_url = url;
  config.api_key = "secret";
  config.model_name = "test-model";
  config.backoff_base = std::chrono::milliseconds(1);
  config.timeout = std::chrono::milliseconds(2000);
  config.max_retries = 2;
  return config;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kIo;
}

}  // namespace

TEST_CASE("mock gateway replays transcripts by prompt key") {
  ScriptedMockGateway mock;
  CHECK(ScriptedMockGateway::prompt_key("hello") == sha256_hex("hello").substr(0, 16));
  mock.add("hello", "world");
  CostMeter meter;
  const ChatReply reply = mock.chat("hello", {}, meter);
  CHECK(reply.text == "world");
  CHECK(reply.estimated);
  CHECK(meter.tokens_in() == estimate_tokens("hello"));
  CHECK(meter.tokens_out() == estimate_tokens("world"));
  CHECK(code_of([&] { mock.chat("unknown", {}, meter); }) == ErrorCode::kGateway);
  CHECK(mock.calls() == 2);
}

TEST_CASE("mock gateway records unmatched prompts and loads a directory") {
  TempDir dir("mock");
  ScriptedMockGateway recorder;
  recorder.set_record_dir(dir.path());
  CostMeter meter;
  CHECK_THROWS(recorder.chat("new prompt", {}, meter));
  const std::string key = ScriptedMockGateway::prompt_key("new prompt");
  CHECK(read_file(dir / (key + ".prompt")) == "new prompt");

  write_file_atomic(dir / (key + ".txt"), "recorded reply");
  ScriptedMockGateway replay;
  CHECK(replay.load_dir(dir.path()) == 1);
  CHECK(replay.chat("new prompt", {}, meter).text == "recorded reply");
}

TEST_CASE("estimate_tokens rounds 1.3 per word up") {
  CHECK(estimate_tokens("") == 0);
  CHECK(estimate_tokens("one") == 2);
  CHECK(estimate_tokens("one two three four five six seven eight nine ten") == 13);
}

TEST_CASE("gateway config from the environment") {
  ::setenv("OFC_LLM_BASE_URL", "http://example.invalid/v1", 1);
  ::setenv("OFC_LLM_MODEL", "m1", 1);
  ::setenv("OFC_PRICE_IN", "0.5", 1);
  ::setenv("OFC_PRICE_OUT", "1.5", 1);
  ::setenv("OFC_SEARCH_PRICE", "0.001", 1);
  const GatewayConfig config = GatewayConfig::from_env();
  CHECK(config.backend == GatewayBackend::kHttpChat);
  CHECK(config.model_name == "m1");
  CHECK(config.pricing.price_in == Usd::parse("0.5"));
  CHECK(config.pricing.search_price == Usd::parse("0.001"));
  for (const char* name : {"OFC_LLM_BASE_URL", "OFC_LLM_MODEL", "OFC_PRICE_IN", "OFC_PRICE_OUT", "OFC_SEARCH_PRICE"}) {
    ::unsetenv(name);
  }
  CHECK(GatewayConfig::from_env().backend == GatewayBackend::kScriptedMock);

  GatewayConfig bad;
  bad.backend = GatewayBackend::kHttpChat;
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("HTTP gateway sends chat completions and retries transient failures") {
  LocalServer local;
  std::atomic<int> hits{0};
  nlohmann::json last_body;
  std::string last_auth;
  local.server().Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    if (++hits < 3) {
      res.status = hits == 1 ? 429 : 503;
      return;
    }
    last_body = nlohmann::json::parse(req.body);
    last_auth = req.get_header_value("Authorization");
    res.set_content(R"({"choices":[{"message":{"content":"TRUE"}}],"usage":{"prompt_tokens":11,"completion_tokens":2}})",
                    "application/json");
  });
  HttpChatGateway gateway(http_config(local.url("/v1")));
  CostMeter meter;
  const ChatReply reply = gateway.chat("Is it true?", {}, meter);
  CHECK(reply.text == "TRUE");
  CHECK_FALSE(reply.estimated);
  CHECK(hits == 3);
  CHECK(meter.tokens_in() == 11);
  CHECK(meter.tokens_out() == 2);
  CHECK(last_auth == "Bearer secret");
  CHECK(last_body["model"] == "test-model");
  CHECK(last_body["messages"][0]["content"] == "Is it true?");
  CHECK(last_body["temperature"] == 0.0);
}

TEST_CASE("HTTP gateway error mapping") {
  LocalServer local;
  std::atomic<int> hits{0};
  local.server().Post("/auth/chat/completions", [](const httplib::Request&, httplib::Response& res) { res.status = 401; });
  local.server().Post("/down/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 500;
  });
  local.server().Post("/bad/chat/completions", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("not json", "text/plain");
  });
  local.server().Post("/client/chat/completions", [](const httplib::Request&, httplib::Response& res) { res.status = 400; });
  CostMeter meter;
  CHECK(code_of([&] { HttpChatGateway(http_config(local.url("/auth"))).chat("x", {}, meter); }) == ErrorCode::kAuth);
  CHECK(code_of([&] { HttpChatGateway(http_config(local.url("/down"))).chat("x", {}, meter); }) == ErrorCode::kProvider);
  CHECK(hits == 3);
  CHECK(code_of([&] { HttpChatGateway(http_config(local.url("/bad"))).chat("x", {}, meter); }) == ErrorCode::kProvider);
  CHECK(code_of([&] { HttpChatGateway(http_config(local.url("/client"))).chat("x", {}, meter); }) == ErrorCode::kProvider);
  CHECK(code_of([&] { HttpChatGateway(http_config("http://127.0.0.1:1")).chat("x", {}, meter); }) == ErrorCode::kNetwork);
  CHECK(meter.tokens_in() == 0);
}

TEST_CASE("Serper response parsing") {
  const auto results = parse_serper_response(
      R"({"organic":[{"title":"B","link":"http://b","snippet":"second","position":2},
                     {"title":"A","link":"http://a","snippet":"first","position":1}]})");
  REQUIRE(results.size() == 2);
  CHECK(results[0].snippet == "first");
  CHECK(parse_serper_response(R"({"searchParameters":{}})").empty());
  CHECK(code_of([] { parse_serper_response("[]"); }) == ErrorCode::kParse);
  CHECK(code_of([] { parse_serper_response(R"({"organic": 3})"); }) == ErrorCode::kParse);
}

TEST_CASE("Serper client and web_search evidence") {
  LocalServer local;
  std::string key_seen;
  local.server().Post("/search", [&](const httplib::Request& req, httplib::Response& res) {
    key_seen = req.get_header_value("X-API-KEY");
    nlohmann::json organic = nlohmann::json::array();
    for (int i = 1; i <= 5; ++i) {
      organic.push_back({{"title", "t"}, {"link", "http://r" + std::to_string(i)}, {"snippet", "s" + std::to_string(i)},
                         {"position", i}});
    }
    res.set_content(nlohmann::json{{"organic", organic}}.dump(), "application/json");
  });
  local.server().Post("/limited", [](const httplib::Request&, httplib::Response& res) {
    res.status = 429;
    res.set_header("Retry-After", "7");
  });
  SerperClient client(SerperConfig{"k1", local.url("/search")});
  CostMeter meter(Pricing{Usd{}, Usd{}, Usd::parse("0.001")});
  const Claim claim = Claim::make("Query claim.", ClaimOrigin::kPreannotated);
  const auto evidence = web_search(claim, client, 3, meter);
  CHECK(key_seen == "k1");
  REQUIRE(evidence.size() == 3);
  CHECK(evidence[0].source == "http://r1");
  CHECK(evidence[2].score == doctest::Approx(1.0 / 3));
  CHECK(meter.total().to_string() == "0.001");

  SerperClient limited(SerperConfig{"k1", local.url("/limited")});
  try {
    limited.search("q", 3);
    FAIL("rate limit not reported");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kRateLimited);
    CHECK(e.reason() == "7");
  }
  CHECK(code_of([&] { SerperClient(SerperConfig{}).search("q", 1); }) == ErrorCode::kAuth);
}
