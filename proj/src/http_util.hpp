#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <string_view>

#include <httplib.h>

namespace ofc::detail {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // never ends with '/'
};

SplitUrl split_url(std::string_view url);

std::unique_ptr<httplib::Client> make_client(const SplitUrl& url, std::chrono::milliseconds timeout);

}  // namespace ofc::detail
