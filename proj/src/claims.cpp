#include "ofc/claims.hpp"

#include <cctype>
#include <set>

#include "ofc/error.hpp"
#include "ofc/prompts.hpp"
#include "ofc/util.hpp"

namespace ofc {

namespace {

const std::set<std::string, std::less<>>& abbreviations() {
  static const std::set<std::string, std::less<>> kWords = {
      "mr",   "mrs",  "ms",   "dr",   "prof", "sr",   "jr",   "st",   "mt",    "gen",
      "col",  "lt",   "sgt",  "capt", "rev",  "hon",  "gov",  "sen",  "rep",   "pres",
      "vs",   "etc",  "inc",  "ltd",  "co",   "corp", "fig",  "approx", "dept", "est",
      "jan",  "feb",  "mar",  "apr",  "jun",  "jul",  "aug",  "sep",  "sept",  "oct",
      "nov",  "dec",  "min",  "max",  "vol",  "p",    "pp",   "al",   "cf",    "ca"};
  return kWords;
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

// The run of letters and periods that ends just before text[pos].
std::string_view word_before(std::string_view text, std::size_t pos) {
  std::size_t start = pos;
  while (start > 0) {
    char c = text[start - 1];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '.') {
      --start;
    } else {
      break;
    }
  }
  return text.substr(start, pos - start);
}

bool is_abbreviation(std::string_view word) {
  if (word.empty()) return false;
  // Internal periods: U.S, e.g, Ph.D, a.m
  if (word.find('.') != std::string_view::npos) return true;
  if (word.size() == 1 && std::isupper(static_cast<unsigned char>(word[0]))) return true;
  return abbreviations().contains(to_lower(word));
}

bool plausible_sentence_start(char c) {
  auto u = static_cast<unsigned char>(c);
  return std::isupper(u) || std::isdigit(u) || c == '"' || c == '\'' || c == '(' || c == '[' || u >= 0x80;
}

// Index just past a blank-line break starting at i (a newline, optional
// horizontal space, another newline), or npos.
std::size_t blank_line_end(std::string_view text, std::size_t i) {
  if (text[i] != '\n') return std::string_view::npos;
  std::size_t j = i + 1;
  while (j < text.size() && (text[j] == ' ' || text[j] == '\t' || text[j] == '\r')) ++j;
  if (j < text.size() && text[j] == '\n') return j + 1;
  return std::string_view::npos;
}

}  // namespace

std::vector<std::string> split_sentences(std::string_view document) {
  std::vector<std::string> sentences;
  std::size_t start = 0;
  auto emit = [&](std::size_t end) {
    std::string sentence = normalize_whitespace(document.substr(start, end - start));
    if (!sentence.empty()) sentences.push_back(std::move(sentence));
    start = end;
  };

  std::size_t i = 0;
  while (i < document.size()) {
    if (auto after = blank_line_end(document, i); after != std::string_view::npos) {
      emit(i);
      i = after;
      continue;
    }
    const char c = document[i];
    if (c != '.' && c != '!' && c != '?') {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < document.size() && (document[j] == '.' || document[j] == '!' || document[j] == '?')) ++j;
    while (j < document.size() && is_closer(document[j])) ++j;
    if (j == document.size()) {
      emit(j);
      break;
    }
    if (!is_space(document[j])) {
      i = j;
      continue;
    }
    std::size_t k = j;
    while (k < document.size() && is_space(document[k]) && blank_line_end(document, k) == std::string_view::npos) ++k;
    if (k == document.size()) {
      emit(j);
      break;
    }
    bool boundary = plausible_sentence_start(document[k]) || blank_line_end(document, k) != std::string_view::npos;
    if (boundary && c == '.' && j == i + 1 && is_abbreviation(word_before(document, i))) boundary = false;
    if (boundary) emit(j);
    i = j;
  }
  if (start < document.size()) emit(document.size());
  return sentences;
}

namespace {

// Strips "1.", "1)", "(1)", "-", "*", "•" and surrounding space.
std::string_view strip_marker(std::string_view line, bool& had_marker) {
  line = trim(line);
  had_marker = false;
  if (line.starts_with("- ") || line.starts_with("* ") || line == "-" || line == "*") {
    had_marker = true;
    return trim(line.substr(1));
  }
  if (line.starts_with("\xE2\x80\xA2")) {  // bullet
    had_marker = true;
    return trim(line.substr(3));
  }
  std::size_t p = 0;
  if (p < line.size() && line[p] == '(') ++p;
  std::size_t digits = p;
  while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits]))) ++digits;
  if (digits > p && digits < line.size() && (line[digits] == '.' || line[digits] == ')') &&
      (digits + 1 == line.size() || is_space(line[digits + 1]))) {
    had_marker = true;
    return trim(line.substr(digits + 1));
  }
  return line;
}

Claim make_llm_claim(std::string text, std::optional<std::size_t> sentence_index) {
  return Claim::make(std::move(text), ClaimOrigin::kLlmDecomposed, sentence_index);
}

void append_unique(std::vector<Claim>& out, std::set<ClaimId>& seen, Claim claim) {
  if (seen.insert(claim.id).second) out.push_back(std::move(claim));
}

}  // namespace

std::vector<std::string> parse_claim_list(std::string_view reply) {
  std::vector<std::string> claims;
  const auto lines = split_lines(reply);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    std::string_view raw = trim(lines[n]);
    if (raw.empty()) continue;
    if (to_upper(raw) == "NONE") continue;
    bool had_marker = false;
    std::string_view text = strip_marker(raw, had_marker);
    if (text.empty()) continue;
    if (!had_marker && text.back() == ':') continue;
    if (!had_marker && split_sentences(text).size() > 1) {
      throw Error(ErrorCode::kParse, "model reply is not a claim list: " + std::string(reply));
    }
    claims.emplace_back(text);
  }
  return claims;
}

std::vector<Claim> decompose_document(std::string_view document, ModelGateway& gateway,
                                      CostMeter& meter) {
  const std::string prompt =
      prompts::render(prompts::get(prompts::kDecompose), {{"document", std::string(document)}});
  auto reply = gateway.chat(prompt, {}, meter);
  std::vector<Claim> claims;
  std::set<ClaimId> seen;
  for (auto& text : parse_claim_list(reply.text)) append_unique(claims, seen, make_llm_claim(std::move(text), std::nullopt));
  return claims;
}

std::vector<Claim> decompose_per_sentence(std::string_view document, ModelGateway& gateway,
                                          CostMeter& meter) {
  std::vector<Claim> claims;
  std::set<ClaimId> seen;
  const auto sentences = split_sentences(document);
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const std::string prompt = prompts::render(prompts::get(prompts::kDecomposeSentence),
                                               {{"sentence", sentences[i]}, {"document", std::string(document)}});
    auto reply = gateway.chat(prompt, {}, meter);
    for (auto& text : parse_claim_list(reply.text)) append_unique(claims, seen, make_llm_claim(std::move(text), i));
  }
  return claims;
}

Claim decontextualize(const Claim& claim, std::string_view document, ModelGateway& gateway,
                      CostMeter& meter) {
  if (trim(claim.text).empty()) throw Error(ErrorCode::kInvalidArgument, "cannot decontextualize an empty claim");
  const std::string prompt = prompts::render(prompts::get(prompts::kDecontextualize),
                                             {{"claim", claim.text}, {"document", std::string(document)}});
  auto reply = gateway.chat(prompt, {}, meter);
  std::string text;
  for (const auto& candidate : split_lines(reply.text)) {
    if (trim(candidate).empty()) continue;
    bool had_marker = false;
    text = std::string(strip_marker(candidate, had_marker));
    break;
  }
  if (text.size() >= 2 && text.front() == '"' && text.back() == '"') text = text.substr(1, text.size() - 2);
  if (trim(text).empty()) throw Error(ErrorCode::kParse, "empty decontextualization reply: " + reply.text);
  return Claim::make(std::move(text), ClaimOrigin::kDecontextualized, claim.source_sentence_index);
}

}  // namespace ofc
