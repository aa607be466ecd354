#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace ofc::prompts {

// Versioned prompt assets compiled in from prompts/*.txt.
inline constexpr std::string_view kDecompose = "decompose.v1";
inline constexpr std::string_view kDecomposeSentence = "decompose_sentence.v1";
inline constexpr std::string_view kDecontextualize = "decontextualize.v1";
inline constexpr std::string_view kVerify = "verify.v1";
inline constexpr std::string_view kFreshQaJudge = "freshqa_judge.v1";
inline constexpr std::string_view kTagDomainTopic = "tag_domain_topic.v1";

// Throws NotFound for an unknown asset name.
std::string_view get(std::string_view name);
std::vector<std::string> names();

// Substitutes each `{name}` whose name is in `vars`. Other braces are kept.
std::string render(std::string_view tmpl, const std::map<std::string, std::string>& vars);

}  // namespace ofc::prompts
