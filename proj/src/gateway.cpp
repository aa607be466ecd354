#include "ofc/gateway.hpp"

#include <sstream>
#include <thread>

#include <json.hpp>

#include "http_util.hpp"
#include "ofc/error.hpp"
#include "ofc/util.hpp"

namespace ofc {

using nlohmann::json;

namespace {

constexpr std::uint64_t kPerMillion = 1'000'000;

Usd per_million(std::uint64_t count, Usd price) {
  return Usd::from_units(static_cast<Usd::Rep>(count) * price.units() /
                         static_cast<Usd::Rep>(kPerMillion));
}

}  // namespace

void Pricing::validate() const {
  for (const Usd& price : {price_in, price_out, search_price}) {
    if (price < Usd{}) throw Error(ErrorCode::kInvalidArgument, "negative price");
  }
  for (const Usd& price : {price_in, price_out}) {
    if (price.fractional_digits() > Usd::kScaleDigits - 6) {
      throw Error(ErrorCode::kInvalidArgument,
                  "per-1M token price needs at most 12 decimals: " + price.to_string());
    }
  }
}

Usd MeterSnapshot::total() const {
  return per_million(tokens_in, pricing.price_in) + per_million(tokens_out, pricing.price_out) +
         pricing.search_price * searches;
}

MeterSnapshot MeterSnapshot::operator+(const MeterSnapshot& other) const {
  if (!(pricing == other.pricing)) {
    throw Error(ErrorCode::kInvalidArgument, "cannot merge meters billed at different prices");
  }
  return {tokens_in + other.tokens_in, tokens_out + other.tokens_out, searches + other.searches,
          pricing};
}

MeterSnapshot MeterSnapshot::operator-(const MeterSnapshot& other) const {
  return {tokens_in - other.tokens_in, tokens_out - other.tokens_out, searches - other.searches,
          pricing};
}

CostMeter::CostMeter(Pricing pricing) : pricing_(pricing) { pricing_.validate(); }

void CostMeter::add_tokens(std::uint64_t in, std::uint64_t out) {
  tokens_in_.fetch_add(in);
  tokens_out_.fetch_add(out);
}

void CostMeter::add_search(std::uint64_t count) { searches_.fetch_add(count); }

MeterSnapshot CostMeter::snapshot() const {
  return {tokens_in_.load(), tokens_out_.load(), searches_.load(), pricing_};
}

Usd meter_total(const CostMeter& meter) { return meter.total(); }

std::uint64_t estimate_tokens(std::string_view text) {
  std::uint64_t words = 0;
  bool in_word = false;
  for (char c : text) {
    bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return (words * 13 + 9) / 10;
}

GatewayConfig GatewayConfig::from_env() {
  GatewayConfig config;
  config.base_url = getenv_or("OFC_LLM_BASE_URL", "");
  config.api_key = getenv_or("OFC_LLM_API_KEY", "");
  config.model_name = getenv_or("OFC_LLM_MODEL", config.base_url.empty() ? "mock" : "gpt-3.5-turbo-0125");
  config.pricing.price_in = Usd::parse(getenv_or("OFC_PRICE_IN", "0.5"));
  config.pricing.price_out = Usd::parse(getenv_or("OFC_PRICE_OUT", "1.5"));
  config.pricing.search_price = Usd::parse(getenv_or("OFC_SEARCH_PRICE", "0.001"));
  config.backend = config.base_url.empty() ? GatewayBackend::kScriptedMock : GatewayBackend::kHttpChat;
  return config;
}

void GatewayConfig::validate() const {
  pricing.validate();
  if (timeout.count() <= 0) throw Error(ErrorCode::kInvalidArgument, "gateway timeout must be > 0");
  if (max_retries < 0) throw Error(ErrorCode::kInvalidArgument, "max_retries must be >= 0");
  if (backend == GatewayBackend::kHttpChat && base_url.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "HTTP gateway needs a base URL");
  }
}

ModelGateway::ModelGateway(GatewayConfig config) : config_(std::move(config)) { config_.validate(); }

ChatReply ModelGateway::chat(std::string_view prompt, const DecodeOptions& decode, CostMeter& meter) {
  ChatReply reply = complete(prompt, decode);
  meter.add_tokens(reply.tokens_in, reply.tokens_out);
  return reply;
}

HttpChatGateway::HttpChatGateway(GatewayConfig config) : ModelGateway(std::move(config)) {}

ChatReply HttpChatGateway::complete(std::string_view prompt, const DecodeOptions& decode) {
  const auto& cfg = config();
  auto url = detail::split_url(cfg.base_url);
  auto client = detail::make_client(url, cfg.timeout);

  json body = {{"model", cfg.model_name},
               {"messages", json::array({{{"role", "user"}, {"content", std::string(prompt)}}})},
               {"temperature", decode.temperature},
               {"max_tokens", decode.max_tokens}};
  httplib::Headers headers;
  if (!cfg.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg.api_key);
  const std::string payload = body.dump();
  const std::string path = url.path + "/chat/completions";

  std::optional<Error> last_error;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(cfg.backoff_base * (1 << (attempt - 1)));

    auto res = client->Post(path, headers, payload, "application/json");
    if (!res) {
      auto err = res.error();
      if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout) {
        last_error.emplace(ErrorCode::kTimeout, "chat request timed out: " + httplib::to_string(err));
      } else {
        last_error.emplace(ErrorCode::kNetwork, "chat transport failure: " + httplib::to_string(err));
      }
      continue;
    }
    const int status = res->status;
    if (status == 401 || status == 403) {
      throw Error(ErrorCode::kAuth, "chat endpoint rejected credentials (HTTP " +
                                        std::to_string(status) + ")");
    }
    if (status == 429 || status >= 500) {
      last_error.emplace(ErrorCode::kProvider, std::to_string(status),
                         "chat provider returned HTTP " + std::to_string(status));
      continue;
    }
    if (status < 200 || status >= 300) {
      throw Error(ErrorCode::kProvider, std::to_string(status),
                  "chat provider returned HTTP " + std::to_string(status) + ": " + res->body);
    }

    json parsed = json::parse(res->body, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("choices") || parsed["choices"].empty()) {
      throw Error(ErrorCode::kProvider, "malformed chat response: " + res->body.substr(0, 200));
    }
    ChatReply reply;
    reply.text = parsed["choices"][0]["message"].value("content", "");
    if (parsed.contains("usage") && parsed["usage"].is_object()) {
      reply.tokens_in = parsed["usage"].value("prompt_tokens", 0ULL);
      reply.tokens_out = parsed["usage"].value("completion_tokens", 0ULL);
      reply.estimated = false;
    } else {
      reply.tokens_in = estimate_tokens(prompt);
      reply.tokens_out = estimate_tokens(reply.text);
    }
    return reply;
  }
  throw *last_error;
}

ScriptedMockGateway::ScriptedMockGateway(GatewayConfig config) : ModelGateway(std::move(config)) {}

std::string ScriptedMockGateway::prompt_key(std::string_view prompt) {
  return sha256_hex(prompt).substr(0, 16);
}

void ScriptedMockGateway::add(std::string_view prompt, std::string response) {
  add_by_key(prompt_key(prompt), std::move(response));
}

void ScriptedMockGateway::add_by_key(std::string key, std::string response) {
  std::lock_guard lock(mutex_);
  transcripts_.insert_or_assign(std::move(key), std::move(response));
}

std::size_t ScriptedMockGateway::load_dir(const std::filesystem::path& dir) {
  std::size_t loaded = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    add_by_key(entry.path().stem().string(), read_file(entry.path()));
    ++loaded;
  }
  return loaded;
}

void ScriptedMockGateway::set_fallback(Responder responder) {
  std::lock_guard lock(mutex_);
  fallback_ = std::move(responder);
}

void ScriptedMockGateway::set_record_dir(std::filesystem::path dir) {
  std::lock_guard lock(mutex_);
  record_dir_ = std::move(dir);
}

ChatReply ScriptedMockGateway::complete(std::string_view prompt, const DecodeOptions&) {
  calls_.fetch_add(1);
  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);

  const std::string key = prompt_key(prompt);
  std::optional<std::string> text;
  std::optional<std::filesystem::path> record_dir;
  {
    std::lock_guard lock(mutex_);
    if (auto it = transcripts_.find(key); it != transcripts_.end()) {
      text = it->second;
    } else if (fallback_) {
      text = fallback_(prompt);
    }
    record_dir = record_dir_;
  }
  if (!text) {
    if (record_dir) write_file_atomic(*record_dir / (key + ".prompt"), prompt);
    throw Error(ErrorCode::kGateway, "scripted mock has no transcript for prompt " + key);
  }
  ChatReply reply;
  reply.text = *text;
  reply.tokens_in = estimate_tokens(prompt);
  reply.tokens_out = estimate_tokens(reply.text);
  return reply;
}

std::shared_ptr<ModelGateway> make_gateway(const GatewayConfig& config,
                                           const std::optional<std::filesystem::path>& mock_dir) {
  if (config.backend == GatewayBackend::kHttpChat) return std::make_shared<HttpChatGateway>(config);
  auto mock = std::make_shared<ScriptedMockGateway>(config);
  if (mock_dir) mock->load_dir(*mock_dir);
  return mock;
}

}  // namespace ofc
