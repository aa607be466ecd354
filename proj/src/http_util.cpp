#include "http_util.hpp"

#include "ofc/error.hpp"

namespace ofc::detail {

SplitUrl split_url(std::string_view url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw Error(ErrorCode::kInvalidArgument, "URL without scheme: " + std::string(url));
  }
  auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  if (path_start == std::string_view::npos) {
    out.origin = std::string(url);
  } else {
    out.origin = std::string(url.substr(0, path_start));
    out.path = std::string(url.substr(path_start));
  }
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

std::unique_ptr<httplib::Client> make_client(const SplitUrl& url, std::chrono::milliseconds timeout) {
  auto client = std::make_unique<httplib::Client>(url.origin);
  auto seconds = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  auto micros = std::chrono::duration_cast<std::chrono::microseconds>(timeout - seconds);
  client->set_connection_timeout(seconds.count(), micros.count());
  client->set_read_timeout(seconds.count(), micros.count());
  client->set_write_timeout(seconds.count(), micros.count());
  return client;
}

}  // namespace ofc::detail
