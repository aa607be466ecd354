#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "ofc/money.hpp"

namespace ofc {

// Prices are per 1M tokens (LLM) and per call (search).
struct Pricing {
  Usd price_in;
  Usd price_out;
  Usd search_price;

  bool operator==(const Pricing&) const = default;

  // Throws InvalidArgument if any price is negative or a per-1M price has
  // more than 12 decimals (per-token cost would not be exact).
  void validate() const;
};

// Plain-value counters plus the pricing they are billed at.
struct MeterSnapshot {
  std::uint64_t tokens_in = 0;
  std::uint64_t tokens_out = 0;
  std::uint64_t searches = 0;
  Pricing pricing;

  // tokens_in*price_in/1e6 + tokens_out*price_out/1e6 + searches*search_price
  Usd total() const;

  // Counter-wise sum. Both operands must share the same pricing.
  MeterSnapshot operator+(const MeterSnapshot& other) const;
  MeterSnapshot operator-(const MeterSnapshot& other) const;
};

// Thread-safe usage meter. Counters are atomic; the total is always
// recomputed from them, so it is exact by construction.
class CostMeter {
 public:
  CostMeter() = default;
  explicit CostMeter(Pricing pricing);

  void add_tokens(std::uint64_t in, std::uint64_t out);
  void add_search(std::uint64_t count = 1);

  std::uint64_t tokens_in() const { return tokens_in_.load(); }
  std::uint64_t tokens_out() const { return tokens_out_.load(); }
  std::uint64_t searches() const { return searches_.load(); }
  const Pricing& pricing() const { return pricing_; }

  MeterSnapshot snapshot() const;
  Usd total() const { return snapshot().total(); }

 private:
  Pricing pricing_;
  std::atomic<std::uint64_t> tokens_in_{0};
  std::atomic<std::uint64_t> tokens_out_{0};
  std::atomic<std::uint64_t> searches_{0};
};

Usd meter_total(const CostMeter& meter);

// Whitespace-token count times 1.3, rounded up. No tokenizer is bundled, so
// every figure derived from this is an estimate.
std::uint64_t estimate_tokens(std::string_view text);

struct DecodeOptions {
  double temperature = 0.0;
  int max_tokens = 512;
};

struct ChatReply {
  std::string text;
  std::uint64_t tokens_in = 0;
  std::uint64_t tokens_out = 0;
  bool estimated = true;
};

enum class GatewayBackend { kHttpChat, kScriptedMock };

struct GatewayConfig {
  GatewayBackend backend = GatewayBackend::kScriptedMock;
  std::string model_name = "mock";
  Pricing pricing;
  std::chrono::milliseconds timeout{60'000};
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{500};
  std::string base_url;
  std::string api_key;

  // OFC_LLM_BASE_URL, OFC_LLM_API_KEY, OFC_LLM_MODEL, OFC_PRICE_IN,
  // OFC_PRICE_OUT, OFC_SEARCH_PRICE. Selects the HTTP backend when a base
  // URL is set.
  static GatewayConfig from_env();
  void validate() const;
};

class ModelGateway {
 public:
  explicit ModelGateway(GatewayConfig config);
  virtual ~ModelGateway() = default;

  ModelGateway(const ModelGateway&) = delete;
  ModelGateway& operator=(const ModelGateway&) = delete;

  // Charges the reply's token counts to `meter`.
  ChatReply chat(std::string_view prompt, const DecodeOptions& decode, CostMeter& meter);

  const GatewayConfig& config() const { return config_; }

 protected:
  virtual ChatReply complete(std::string_view prompt, const DecodeOptions& decode) = 0;

 private:
  GatewayConfig config_;
};

// Chat-completions over HTTP: POST {base_url}/chat/completions with a
// messages array, reply read from choices[0].message.content. Retries
// 429/5xx/transport failures with exponential backoff.
class HttpChatGateway : public ModelGateway {
 public:
  explicit HttpChatGateway(GatewayConfig config);

 protected:
  ChatReply complete(std::string_view prompt, const DecodeOptions& decode) override;
};

// Deterministic replay gateway. Transcripts are keyed by prompt_key(prompt)
// and loaded from `<key>.txt` files or added programmatically.
class ScriptedMockGateway : public ModelGateway {
 public:
  using Responder = std::function<std::optional<std::string>(std::string_view prompt)>;

  explicit ScriptedMockGateway(GatewayConfig config = {});

  static std::string prompt_key(std::string_view prompt);

  void add(std::string_view prompt, std::string response);
  void add_by_key(std::string key, std::string response);
  // Loads every `<key>.txt` in `dir`. Returns the number of transcripts.
  std::size_t load_dir(const std::filesystem::path& dir);
  // Consulted when no transcript matches.
  void set_fallback(Responder responder);
  // When set, prompts with no transcript are written to `<dir>/<key>.prompt`.
  void set_record_dir(std::filesystem::path dir);
  void set_latency(std::chrono::milliseconds latency) { latency_ = latency; }

  std::size_t calls() const { return calls_.load(); }

 protected:
  ChatReply complete(std::string_view prompt, const DecodeOptions& decode) override;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::string> transcripts_;
  Responder fallback_;
  std::optional<std::filesystem::path> record_dir_;
  std::chrono::milliseconds latency_{0};
  std::atomic<std::size_t> calls_{0};
};

// Builds the gateway described by `config`; for the mock backend,
// transcripts are loaded from `mock_dir` when given.
std::shared_ptr<ModelGateway> make_gateway(const GatewayConfig& config,
                                           const std::optional<std::filesystem::path>& mock_dir);

}  // namespace ofc
