#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ofc/gateway.hpp"
#include "ofc/state.hpp"

namespace ofc {

// Rule-based segmentation: a sentence ends at '.', '!' or '?' (plus any
// closing quotes/brackets) followed by whitespace and a plausible sentence
// start, unless the word before the period is a known abbreviation or a
// single-letter initial. Blank lines always end a sentence.
std::vector<std::string> split_sentences(std::string_view document);

// Parses a line-delimited claim list. Enumeration markers ("1.", "2)",
// "-", "*") are stripped; a trailing-colon preamble line is skipped; a
// lone NONE or an empty reply means no claims. Throws ParseError when a
// marker-less line holds more than one sentence (prose, not a list).
std::vector<std::string> parse_claim_list(std::string_view reply);

// FacTool style: one call over the whole document.
std::vector<Claim> decompose_document(std::string_view document, ModelGateway& gateway,
                                      CostMeter& meter);

// FactScore style: split into sentences, decompose each one. Claims keep
// the index of the sentence they came from.
std::vector<Claim> decompose_per_sentence(std::string_view document, ModelGateway& gateway,
                                          CostMeter& meter);

// Factcheck-GPT style rewrite resolving references against `document`.
// Throws InvalidArgument for an empty claim.
Claim decontextualize(const Claim& claim, std::string_view document, ModelGateway& gateway,
                      CostMeter& meter);

}  // namespace ofc
