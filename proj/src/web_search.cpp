#include "ofc/web_search.hpp"

#include <algorithm>

#include <json.hpp>

#include "http_util.hpp"
#include "ofc/error.hpp"
#include "ofc/util.hpp"

namespace ofc {

using nlohmann::json;

SerperConfig SerperConfig::from_env() {
  SerperConfig config;
  config.api_key = getenv_or("OFC_SERPER_API_KEY", "");
  config.url = getenv_or("OFC_SERPER_URL", kDefaultUrl);
  return config;
}

std::vector<SearchResult> parse_serper_response(std::string_view body) {
  json parsed = json::parse(body, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) {
    throw Error(ErrorCode::kParse, "search response is not a JSON object");
  }
  std::vector<SearchResult> results;
  if (!parsed.contains("organic")) return results;
  if (!parsed["organic"].is_array()) throw Error(ErrorCode::kParse, "'organic' is not a list");
  for (const auto& item : parsed["organic"]) {
    if (!item.is_object()) continue;
    SearchResult result;
    result.title = item.value("title", "");
    result.link = item.value("link", "");
    result.snippet = item.value("snippet", "");
    result.position = item.value("position", static_cast<int>(results.size()) + 1);
    results.push_back(std::move(result));
  }
  std::stable_sort(results.begin(), results.end(),
                   [](const auto& a, const auto& b) { return a.position < b.position; });
  return results;
}

std::vector<SearchResult> SerperClient::search(std::string_view query, std::size_t k) {
  if (config_.api_key.empty()) throw Error(ErrorCode::kAuth, "no search API key configured");
  auto url = detail::split_url(config_.url);
  auto client = detail::make_client(url, config_.timeout);
  httplib::Headers headers{{"X-API-KEY", config_.api_key}};
  json body = {{"q", std::string(query)}, {"num", k}};
  auto res = client->Post(url.path.empty() ? "/" : url.path, headers, body.dump(), "application/json");
  if (!res) throw Error(ErrorCode::kNetwork, "search request failed: " + httplib::to_string(res.error()));
  if (res->status == 401 || res->status == 403) {
    throw Error(ErrorCode::kAuth, "search API rejected the key (HTTP " + std::to_string(res->status) + ")");
  }
  if (res->status == 429) {
    throw Error(ErrorCode::kRateLimited, res->get_header_value("Retry-After"), "search API rate limited");
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::kProvider, std::to_string(res->status),
                "search API returned HTTP " + std::to_string(res->status));
  }
  auto results = parse_serper_response(res->body);
  if (results.size() > k) results.resize(k);
  return results;
}

std::vector<Evidence> web_search(const Claim& claim, SearchClient& client, std::size_t k,
                                 CostMeter& meter) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be at least 1");
  auto results = client.search(claim.text, k);
  meter.add_search();
  std::vector<Evidence> evidence;
  for (const auto& result : results) {
    if (evidence.size() == k) break;
    const int rank = static_cast<int>(evidence.size()) + 1;
    evidence.push_back({claim.id, result.snippet, result.link, rank, 1.0 / rank});
  }
  return evidence;
}

}  // namespace ofc
