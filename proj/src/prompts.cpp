#include "ofc/prompts.hpp"

#include "ofc/error.hpp"

namespace ofc::prompts {

namespace detail {
const std::map<std::string, std::string_view, std::less<>>& assets();
}

std::string_view get(std::string_view name) {
  const auto& assets = detail::assets();
  auto it = assets.find(name);
  if (it == assets.end()) throw Error(ErrorCode::kNotFound, "no prompt asset " + std::string(name));
  return it->second;
}

std::vector<std::string> names() {
  std::vector<std::string> out;
  for (const auto& [name, text] : detail::assets()) out.push_back(name);
  return out;
}

std::string render(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        auto it = vars.find(std::string(tmpl.substr(i + 1, close - i - 1)));
        if (it != vars.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

}  // namespace ofc::prompts
