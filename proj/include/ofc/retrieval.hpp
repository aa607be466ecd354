#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ofc/state.hpp"

namespace ofc {

struct Token {
  std::string term;
  std::size_t begin = 0;  // byte offsets into the source text
  std::size_t end = 0;
};

// Lowercased alphanumeric runs; bytes >= 0x80 count as word characters so
// UTF-8 words stay whole. No stemming, stopwords kept.
std::vector<Token> tokenize(std::string_view text);
std::vector<std::string> tokenize_terms(std::string_view text);

struct CorpusDocument {
  std::string doc_id;
  std::string title;
  std::string text;
};

// One JSON object per line with doc_id, title and text.
std::vector<CorpusDocument> load_corpus(const std::filesystem::path& path);

struct Passage {
  std::string doc_id;
  std::string title;
  std::uint32_t offset = 0;  // first token's position within the document
  std::uint32_t length = 0;  // token count
  std::string text;
};

struct Posting {
  std::uint32_t passage = 0;
  std::uint32_t tf = 0;

  bool operator==(const Posting&) const = default;
};

class CorpusIndex {
 public:
  static constexpr std::string_view kMagic = "OFCIDX1";
  static constexpr std::uint32_t kFormatVersion = 1;

  // Splits each document into windows of at most `window` tokens starting
  // every `stride` tokens; the last window ends at the document end.
  // Throws EmptyCorpus when no document yields a passage.
  static CorpusIndex build(const std::vector<CorpusDocument>& corpus, std::size_t window = 256,
                           std::size_t stride = 128);

  static CorpusIndex load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  const std::vector<Passage>& passages() const { return passages_; }
  std::size_t passage_count() const { return passages_.size(); }
  double avgdl() const { return avgdl_; }
  // Postings are ordered by passage.
  std::span<const Posting> postings(std::string_view term) const;
  std::size_t document_frequency(std::string_view term) const { return postings(term).size(); }
  std::size_t term_count() const { return postings_.size(); }

 private:
  void finalize();

  std::vector<Passage> passages_;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  double avgdl_ = 0.0;
};

CorpusIndex build_index(const std::vector<CorpusDocument>& corpus, std::size_t passage_window = 256,
                        std::size_t stride = 128);

struct Bm25Params {
  double k1 = 1.5;
  double b = 0.75;
};

struct ScoredPassage {
  std::uint32_t passage = 0;
  double score = 0.0;
};

// Okapi BM25 over query tokens (repeats count once per occurrence) with
// IDF(t) = ln(1 + (N - n_t + 0.5) / (n_t + 0.5)). Only passages sharing at
// least one term are returned, best first; ties go to (doc_id, offset).
std::vector<ScoredPassage> bm25_rank(const CorpusIndex& index, std::string_view query,
                                     std::size_t k, const Bm25Params& params = {});

std::vector<Evidence> bm25_retrieve(const Claim& claim, const CorpusIndex& index, std::size_t k,
                                    const Bm25Params& params = {});

}  // namespace ofc
