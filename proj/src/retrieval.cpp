#include "ofc/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "ofc/error.hpp"
#include "ofc/util.hpp"

namespace ofc {

namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) != 0 || c >= 0x80; }

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word_byte(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < text.size() && is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
    tokens.push_back({to_lower(text.substr(start, i - start)), start, i});
  }
  return tokens;
}

std::vector<std::string> tokenize_terms(std::string_view text) {
  std::vector<std::string> terms;
  for (auto& token : tokenize(text)) terms.push_back(std::move(token.term));
  return terms;
}

std::vector<CorpusDocument> load_corpus(const std::filesystem::path& path) {
  std::vector<CorpusDocument> corpus;
  for_each_line(path, [&](std::size_t line, std::string_view text) {
    auto record = nlohmann::json::parse(text, nullptr, false);
    if (record.is_discarded() || !record.is_object()) {
      throw Error(ErrorCode::kMalformedRecord, path.string() + ":" + std::to_string(line) + ": not a JSON object");
    }
    for (const char* field : {"doc_id", "text"}) {
      if (!record.contains(field) || !record[field].is_string()) {
        throw Error(ErrorCode::kMalformedRecord,
                    path.string() + ":" + std::to_string(line) + ": missing string field '" + field + "'");
      }
    }
    corpus.push_back({record["doc_id"].get<std::string>(), record.value("title", ""),
                      record["text"].get<std::string>()});
  });
  return corpus;
}

CorpusIndex CorpusIndex::build(const std::vector<CorpusDocument>& corpus, std::size_t window,
                               std::size_t stride) {
  if (corpus.empty()) throw Error(ErrorCode::kEmptyCorpus, "corpus has no documents");
  if (window == 0 || stride == 0) {
    throw Error(ErrorCode::kInvalidArgument, "passage window and stride must be positive");
  }
  std::set<std::string> seen;
  CorpusIndex index;
  for (const auto& doc : corpus) {
    if (!seen.insert(doc.doc_id).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate doc_id " + doc.doc_id);
    }
    auto tokens = tokenize(doc.text);
    for (std::size_t start = 0; start < tokens.size(); start += stride) {
      std::size_t end = std::min(tokens.size(), start + window);
      Passage passage;
      passage.doc_id = doc.doc_id;
      passage.title = doc.title;
      passage.offset = static_cast<std::uint32_t>(start);
      passage.length = static_cast<std::uint32_t>(end - start);
      // The last window keeps the document's trailing punctuation.
      std::size_t text_end = end == tokens.size() ? trim(doc.text).data() + trim(doc.text).size() - doc.text.data()
                                                  : tokens[end - 1].end;
      passage.text = doc.text.substr(tokens[start].begin, text_end - tokens[start].begin);

      std::map<std::string, std::uint32_t> counts;
      for (std::size_t t = start; t < end; ++t) ++counts[tokens[t].term];
      auto id = static_cast<std::uint32_t>(index.passages_.size());
      for (const auto& [term, tf] : counts) index.postings_[term].push_back({id, tf});
      index.passages_.push_back(std::move(passage));
      if (end == tokens.size()) break;
    }
  }
  if (index.passages_.empty()) throw Error(ErrorCode::kEmptyCorpus, "corpus has no indexable text");
  index.finalize();
  return index;
}

void CorpusIndex::finalize() {
  double total = 0.0;
  for (const auto& passage : passages_) total += passage.length;
  avgdl_ = passages_.empty() ? 0.0 : total / static_cast<double>(passages_.size());
}

std::span<const Posting> CorpusIndex::postings(std::string_view term) const {
  auto it = postings_.find(std::string(term));
  if (it == postings_.end()) return {};
  return it->second;
}

namespace {

class Writer {
 public:
  explicit Writer(std::string& out) : out_(out) {}
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }

 private:
  std::string& out_;
};

class Reader {
 public:
  Reader(std::string_view data, std::string source) : data_(data), source_(std::move(source)) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::string str() {
    auto n = u32();
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::string_view raw(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw Error(ErrorCode::kIo, "truncated index file " + source_);
  }
  std::string_view data_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace

void CorpusIndex::save(const std::filesystem::path& path) const {
  std::string out;
  Writer w(out);
  out.append(kMagic);
  w.u32(kFormatVersion);
  w.u64(passages_.size());
  for (const auto& p : passages_) {
    w.str(p.doc_id);
    w.str(p.title);
    w.u32(p.offset);
    w.u32(p.length);
    w.str(p.text);
  }
  // Terms sorted so the file is a pure function of the corpus.
  std::vector<const std::string*> terms;
  terms.reserve(postings_.size());
  for (const auto& [term, list] : postings_) terms.push_back(&term);
  std::sort(terms.begin(), terms.end(), [](auto* a, auto* b) { return *a < *b; });
  w.u64(terms.size());
  for (const auto* term : terms) {
    const auto& list = postings_.at(*term);
    w.str(*term);
    w.u32(static_cast<std::uint32_t>(list.size()));
    for (const auto& posting : list) {
      w.u32(posting.passage);
      w.u32(posting.tf);
    }
  }
  write_file_atomic(path, out);
}

CorpusIndex CorpusIndex::load(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  Reader r(data, path.string());
  if (data.size() < kMagic.size() || r.raw(kMagic.size()) != kMagic) {
    throw Error(ErrorCode::kIo, path.string() + " is not an OFCIDX1 index");
  }
  if (auto version = r.u32(); version != kFormatVersion) {
    throw Error(ErrorCode::kIo, "unsupported index format version " + std::to_string(version));
  }
  CorpusIndex index;
  auto passage_count = r.u64();
  for (std::uint64_t i = 0; i < passage_count; ++i) {
    Passage p;
    p.doc_id = r.str();
    p.title = r.str();
    p.offset = r.u32();
    p.length = r.u32();
    p.text = r.str();
    index.passages_.push_back(std::move(p));
  }
  auto term_count = r.u64();
  for (std::uint64_t i = 0; i < term_count; ++i) {
    std::string term = r.str();
    auto n = r.u32();
    auto& list = index.postings_[term];
    list.reserve(n);
    for (std::uint32_t j = 0; j < n; ++j) {
      Posting posting{r.u32(), r.u32()};
      if (posting.passage >= index.passages_.size()) {
        throw Error(ErrorCode::kIo, "index posting points past the passage table");
      }
      list.push_back(posting);
    }
  }
  if (!r.done()) throw Error(ErrorCode::kIo, "trailing bytes in index file " + path.string());
  index.finalize();
  return index;
}

CorpusIndex build_index(const std::vector<CorpusDocument>& corpus, std::size_t passage_window,
                        std::size_t stride) {
  return CorpusIndex::build(corpus, passage_window, stride);
}

std::vector<ScoredPassage> bm25_rank(const CorpusIndex& index, std::string_view query,
                                     std::size_t k, const Bm25Params& params) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be at least 1");
  const auto n_passages = static_cast<double>(index.passage_count());
  const double avgdl = index.avgdl();
  const auto& passages = index.passages();

  std::vector<double> scores(index.passage_count(), 0.0);
  std::vector<std::uint32_t> touched;
  std::vector<bool> seen(index.passage_count(), false);
  for (const auto& term : tokenize_terms(query)) {
    auto list = index.postings(term);
    if (list.empty()) continue;
    const auto df = static_cast<double>(list.size());
    const double idf = std::log(1.0 + (n_passages - df + 0.5) / (df + 0.5));
    for (const auto& posting : list) {
      const double tf = posting.tf;
      const double norm = params.k1 * (1.0 - params.b + params.b * passages[posting.passage].length / avgdl);
      scores[posting.passage] += idf * (tf * (params.k1 + 1.0)) / (tf + norm);
      if (!seen[posting.passage]) {
        seen[posting.passage] = true;
        touched.push_back(posting.passage);
      }
    }
  }

  std::vector<ScoredPassage> ranked;
  ranked.reserve(touched.size());
  for (auto id : touched) ranked.push_back({id, scores[id]});
  auto better = [&](const ScoredPassage& a, const ScoredPassage& b) {
    if (a.score != b.score) return a.score > b.score;
    const auto& pa = passages[a.passage];
    const auto& pb = passages[b.passage];
    if (pa.doc_id != pb.doc_id) return pa.doc_id < pb.doc_id;
    return pa.offset < pb.offset;
  };
  const std::size_t keep = std::min(k, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep), ranked.end(), better);
  ranked.resize(keep);
  return ranked;
}

std::vector<Evidence> bm25_retrieve(const Claim& claim, const CorpusIndex& index, std::size_t k,
                                    const Bm25Params& params) {
  std::vector<Evidence> evidence;
  int rank = 0;
  for (const auto& hit : bm25_rank(index, claim.text, k, params)) {
    const auto& passage = index.passages()[hit.passage];
    evidence.push_back({claim.id, passage.text, passage.doc_id, ++rank, hit.score});
  }
  return evidence;
}

}  // namespace ofc
