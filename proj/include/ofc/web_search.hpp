#pragma once

#include <chrono>
#include <string>
#include <string_view>
#include <vector>

#include "ofc/gateway.hpp"
#include "ofc/state.hpp"

namespace ofc {

struct SearchResult {
  std::string title;
  std::string link;
  std::string snippet;
  int position = 0;
};

// Implementations must be safe for concurrent calls.
class SearchClient {
 public:
  virtual ~SearchClient() = default;
  // Throws AuthError, RateLimited (reason = retry-after seconds, if sent),
  // NetworkError or ProviderError.
  virtual std::vector<SearchResult> search(std::string_view query, std::size_t k) = 0;
};

struct SerperConfig {
  static constexpr std::string_view kDefaultUrl = "https://google.serper.dev/search";

  std::string api_key;
  std::string url{kDefaultUrl};
  std::chrono::milliseconds timeout{30'000};

  // OFC_SERPER_API_KEY, OFC_SERPER_URL.
  static SerperConfig from_env();
};

// Serper-style search: POST {"q": ..., "num": k} with an X-API-KEY header,
// reply `organic[] {title, link, snippet, position}`.
class SerperClient : public SearchClient {
 public:
  explicit SerperClient(SerperConfig config) : config_(std::move(config)) {}
  std::vector<SearchResult> search(std::string_view query, std::size_t k) override;

 private:
  SerperConfig config_;
};

// Throws ParseError on a body that is not a Serper-shaped JSON object.
std::vector<SearchResult> parse_serper_response(std::string_view body);

// Top-k organic results as evidence: snippet -> text, link -> source,
// position -> rank, score = 1/rank. Bills one search to `meter`.
std::vector<Evidence> web_search(const Claim& claim, SearchClient& client, std::size_t k,
                                 CostMeter& meter);

}  // namespace ofc
