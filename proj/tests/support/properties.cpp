#include "properties.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "ofc/checker_eval.hpp"
#include "ofc/engine.hpp"
#include "ofc/gateway.hpp"
#include "ofc/llm_eval.hpp"
#include "support.hpp"

namespace ofc::testing {

namespace {

using Rng = std::mt19937_64;

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

}  // namespace

// ---------------------------------------------------------------------------
// BM25

std::vector<OracleHit> bm25_oracle(const std::vector<CorpusDocument>& corpus, std::string_view query, std::size_t k,
                                   std::size_t window, std::size_t stride, const Bm25Params& params) {
  struct P {
    std::string doc_id;
    std::uint32_t offset;
    std::vector<std::string> terms;
  };
  std::vector<P> passages;
  for (const auto& doc : corpus) {
    const auto terms = tokenize_terms(doc.text);
    for (std::size_t start = 0; start < terms.size(); start += stride) {
      const std::size_t end = std::min(terms.size(), start + window);
      passages.push_back({doc.doc_id, static_cast<std::uint32_t>(start),
                          std::vector<std::string>(terms.begin() + static_cast<std::ptrdiff_t>(start),
                                                   terms.begin() + static_cast<std::ptrdiff_t>(end))});
      if (end == terms.size()) break;
    }
  }
  const double n = static_cast<double>(passages.size());
  double total = 0.0;
  for (const auto& p : passages) total += static_cast<double>(p.terms.size());
  const double avgdl = total / n;

  std::vector<OracleHit> hits;
  const auto query_terms = tokenize_terms(query);
  for (const auto& p : passages) {
    double score = 0.0;
    bool shares = false;
    for (const auto& q : query_terms) {
      const auto tf_count = static_cast<std::size_t>(std::count(p.terms.begin(), p.terms.end(), q));
      if (tf_count == 0) continue;
      std::size_t df_count = 0;
      for (const auto& other : passages) {
        if (std::find(other.terms.begin(), other.terms.end(), q) != other.terms.end()) ++df_count;
      }
      const double df = static_cast<double>(df_count);
      const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
      const double tf = static_cast<double>(tf_count);
      const double norm = params.k1 * (1.0 - params.b + params.b * static_cast<double>(p.terms.size()) / avgdl);
      score += idf * (tf * (params.k1 + 1.0)) / (tf + norm);
      shares = true;
    }
    if (shares) hits.push_back({p.doc_id, p.offset, score});
  }
  std::sort(hits.begin(), hits.end(), [](const OracleHit& a, const OracleHit& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.doc_id != b.doc_id) return a.doc_id < b.doc_id;
    return a.offset < b.offset;
  });
  if (hits.size() > k) hits.resize(k);
  return hits;
}

PropertyResult check_bm25_oracle(std::uint64_t seed, std::size_t cases) {
  PropertyResult result;
  Rng rng(seed);
  const std::vector<std::string> vocab = {"alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta",
                                          "iota", "kappa", "lambda", "mu", "nu", "xi", "omicron", "pi"};
  for (std::size_t c = 0; c < cases; ++c) {
    // Small vocabularies make shared terms and tied scores common.
    const std::size_t vocab_size = pick(rng, 2, vocab.size());
    const std::size_t window = pick(rng, 3, 12);
    const std::size_t stride = pick(rng, 1, window);
    std::vector<CorpusDocument> corpus;
    std::size_t passage_budget = 20;
    const std::size_t docs = pick(rng, 1, 6);
    for (std::size_t d = 0; d < docs && passage_budget > 0; ++d) {
      // Keep the passage count within budget: windows = 1 + ceil((len - window) / stride).
      std::size_t len = pick(rng, 1, 30);
      auto windows = [&](std::size_t l) { return l <= window ? 1 : 1 + (l - window + stride - 1) / stride; };
      while (len > 1 && windows(len) > passage_budget) --len;
      passage_budget -= std::min(passage_budget, windows(len));
      std::ostringstream text;
      for (std::size_t t = 0; t < len; ++t) {
        std::string word = vocab[pick(rng, 0, vocab_size - 1)];
        if (pick(rng, 0, 5) == 0) word[0] = static_cast<char>(std::toupper(word[0]));
        text << (t ? (pick(rng, 0, 4) == 0 ? ", " : " ") : "") << word;
      }
      text << ".";
      corpus.push_back({"doc" + std::to_string(pick(rng, 0, 99)) + "_" + std::to_string(d), "", text.str()});
    }
    std::ostringstream query;
    const std::size_t qlen = pick(rng, 1, 8);
    for (std::size_t t = 0; t < qlen; ++t) query << (t ? " " : "") << vocab[pick(rng, 0, vocab.size() - 1)];
    const std::size_t k = pick(rng, 1, 25);
    const Bm25Params params{pick(rng, 0, 1) ? 1.5 : 0.5 + static_cast<double>(pick(rng, 0, 20)) / 10.0,
                            static_cast<double>(pick(rng, 0, 4)) / 4.0};

    const CorpusIndex index = CorpusIndex::build(corpus, window, stride);
    const auto got = bm25_rank(index, query.str(), k, params);
    const auto want = bm25_oracle(corpus, query.str(), k, window, stride, params);
    ++result.cases;
    bool same = got.size() == want.size();
    for (std::size_t i = 0; same && i < got.size(); ++i) {
      const auto& p = index.passages()[got[i].passage];
      same = p.doc_id == want[i].doc_id && p.offset == want[i].offset && got[i].score == want[i].score;
    }
    if (!same) {
      std::ostringstream why;
      why << "case " << c << ": query '" << query.str() << "' k=" << k << " ranking differs (" << got.size()
          << " vs " << want.size() << " hits)";
      result.fail(why.str());
    }
  }
  if (result.pass) result.detail = std::to_string(result.cases) + " instances, rankings identical";
  return result;
}

// ---------------------------------------------------------------------------
// Majority vote

MajorityResult majority_oracle(const std::vector<Stance>& stances) {
  std::size_t counts[3] = {0, 0, 0};
  for (Stance s : stances) ++counts[static_cast<int>(s)];
  const std::size_t best = std::max({counts[0], counts[1], counts[2]});
  int winners = 0;
  int winner = 0;
  for (int i = 0; i < 3; ++i) {
    if (counts[i] == best) {
      ++winners;
      winner = i;
    }
  }
  static constexpr Label kMap[] = {Label::kTrue, Label::kFalse, Label::kNotEnoughEvidence};
  return {winners == 1 ? kMap[winner] : Label::kNotEnoughEvidence,
          static_cast<double>(best) / static_cast<double>(stances.size())};
}

namespace {

// Returns the stance scripted for each premise "p<i>".
class ScriptedNli : public NliClient {
 public:
  explicit ScriptedNli(std::vector<Stance> stances) : stances_(std::move(stances)) {}
  NliResult classify(std::string_view premise, std::string_view) override {
    return {stances_.at(std::stoul(std::string(premise.substr(1)))), 0.9};
  }

 private:
  std::vector<Stance> stances_;
};

}  // namespace

PropertyResult check_majority_exhaustive(std::size_t max_size) {
  PropertyResult result;
  const Claim claim = Claim::make("The claim under test.", ClaimOrigin::kPreannotated);
  std::size_t multisets = 0;
  for (std::size_t size = 1; size <= max_size; ++size) {
    for (std::size_t e = 0; e <= size; ++e) {
      for (std::size_t c = 0; e + c <= size; ++c) {
        const std::size_t n = size - e - c;
        std::vector<Stance> stances;
        stances.insert(stances.end(), e, Stance::kEntailment);
        stances.insert(stances.end(), c, Stance::kContradiction);
        stances.insert(stances.end(), n, Stance::kNeutral);
        ++multisets;
        const MajorityResult want = majority_oracle(stances);
        std::sort(stances.begin(), stances.end());
        do {
          ++result.cases;
          const MajorityResult got = majority_vote(stances);
          if (got.label != want.label || got.confidence != want.confidence) {
            result.fail("majority_vote disagrees on E=" + std::to_string(e) + " C=" + std::to_string(c) +
                        " N=" + std::to_string(n));
          }
          std::vector<Evidence> evidence;
          for (std::size_t i = 0; i < stances.size(); ++i) {
            evidence.push_back({claim.id, "p" + std::to_string(i), "s", static_cast<int>(i + 1), 0.0});
          }
          ScriptedNli nli(stances);
          const Verdict verdict = verify_nli(claim, evidence, nli);
          if (verdict.label != want.label || verdict.label == Label::kOpinion ||
              verdict.evidence_ids.size() != stances.size()) {
            result.fail("verify_nli disagrees on E=" + std::to_string(e) + " C=" + std::to_string(c) +
                        " N=" + std::to_string(n));
          }
        } while (std::next_permutation(stances.begin(), stances.end()));
      }
    }
  }
  try {
    majority_vote(std::vector<Stance>{});
    result.fail("empty stance list did not throw");
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kEmptyEvidence) result.fail("empty stance list threw the wrong code");
  }
  if (result.pass) {
    result.detail = std::to_string(multisets) + " multisets, " + std::to_string(result.cases) + " orderings";
  }
  return result;
}

// ---------------------------------------------------------------------------
// Cost meter

std::string closed_form_cost(std::uint64_t tokens_in, std::uint64_t price_in_micro, std::uint64_t tokens_out,
                             std::uint64_t price_out_micro, std::uint64_t searches, std::uint64_t search_micro) {
  // Prices are micro-dollars per 1M tokens, so one token costs price * 1e-12 USD.
  using U = unsigned __int128;
  const U pico = static_cast<U>(tokens_in) * price_in_micro + static_cast<U>(tokens_out) * price_out_micro +
                 static_cast<U>(searches) * search_micro * 1'000'000u;
  const U scale = 1'000'000'000'000u;
  U whole = pico / scale;
  U frac = pico % scale;
  std::string int_part;
  do {
    int_part.insert(int_part.begin(), static_cast<char>('0' + static_cast<int>(whole % 10)));
    whole /= 10;
  } while (whole > 0);
  std::string frac_part(12, '0');
  for (int i = 11; i >= 0; --i) {
    frac_part[static_cast<std::size_t>(i)] = static_cast<char>('0' + static_cast<int>(frac % 10));
    frac /= 10;
  }
  while (frac_part.size() > 2 && frac_part.back() == '0') frac_part.pop_back();
  return int_part + "." + frac_part;
}

namespace {

std::string micro_to_decimal(std::uint64_t micro) {
  std::string digits = std::to_string(micro);
  while (digits.size() < 7) digits.insert(digits.begin(), '0');
  return digits.substr(0, digits.size() - 6) + "." + digits.substr(digits.size() - 6);
}

}  // namespace

PropertyResult check_cost_meter(std::uint64_t seed, std::size_t cases) {
  PropertyResult result;
  Rng rng(seed);

  struct UnitCase {
    const char* name;
    std::uint64_t in, in_price, out, out_price, searches, search_price;
    const char* expected;
  };
  // Prices in micro-dollars: $0.50/1M in, $10/1M in + $30/1M out, $0.001/search.
  const UnitCase units[] = {
      {"1M input tokens at $0.50/1M", 1'000'000, 500'000, 0, 1'500'000, 0, 0, "0.50"},
      {"1M in + 1M out at $10/$30 per 1M", 1'000'000, 10'000'000, 1'000'000, 30'000'000, 0, 0, "40.00"},
      {"one search at $0.001", 0, 0, 0, 0, 1, 1'000, "0.001"},
  };
  auto meter_total_for = [](std::uint64_t in, std::uint64_t in_price, std::uint64_t out, std::uint64_t out_price,
                            std::uint64_t searches, std::uint64_t search_price, std::size_t chunks, Rng& r) {
    Pricing pricing{Usd::parse(micro_to_decimal(in_price)), Usd::parse(micro_to_decimal(out_price)),
                    Usd::parse(micro_to_decimal(search_price))};
    CostMeter meter(pricing);
    // Charge in random increments, as concurrent solver calls would.
    std::uint64_t left_in = in, left_out = out, left_s = searches;
    for (std::size_t i = 0; i + 1 < chunks; ++i) {
      const std::uint64_t a = left_in ? std::uniform_int_distribution<std::uint64_t>(0, left_in)(r) : 0;
      const std::uint64_t b = left_out ? std::uniform_int_distribution<std::uint64_t>(0, left_out)(r) : 0;
      const std::uint64_t s = left_s ? std::uniform_int_distribution<std::uint64_t>(0, left_s)(r) : 0;
      meter.add_tokens(a, b);
      meter.add_search(s);
      left_in -= a;
      left_out -= b;
      left_s -= s;
    }
    meter.add_tokens(left_in, left_out);
    meter.add_search(left_s);
    return meter.total();
  };

  for (const auto& u : units) {
    ++result.cases;
    const Usd got = meter_total_for(u.in, u.in_price, u.out, u.out_price, u.searches, u.search_price, 1, rng);
    const std::string oracle = closed_form_cost(u.in, u.in_price, u.out, u.out_price, u.searches, u.search_price);
    if (got != Usd::parse(u.expected) || got.to_string() != oracle || oracle != u.expected) {
      result.fail(std::string(u.name) + ": got $" + got.to_string() + ", expected $" + u.expected);
    }
  }

  // Random sets, also threaded through a pipeline to check the trace deltas.
  const SolverRegistry registry = test_registry();
  for (std::size_t c = 0; c < cases; ++c) {
    const std::uint64_t in = std::uniform_int_distribution<std::uint64_t>(0, 50'000'000)(rng);
    const std::uint64_t out = std::uniform_int_distribution<std::uint64_t>(0, 50'000'000)(rng);
    const std::uint64_t searches = pick(rng, 0, 2000);
    const std::uint64_t pin = std::uniform_int_distribution<std::uint64_t>(0, 100'000'000)(rng);
    const std::uint64_t pout = std::uniform_int_distribution<std::uint64_t>(0, 100'000'000)(rng);
    const std::uint64_t ps = std::uniform_int_distribution<std::uint64_t>(0, 50'000)(rng);
    ++result.cases;
    const std::string oracle = closed_form_cost(in, pin, out, pout, searches, ps);
    const Usd got = meter_total_for(in, pin, out, pout, searches, ps, pick(rng, 1, 8), rng);
    if (got.to_string() != oracle || got != Usd::parse(oracle)) {
      result.fail("case " + std::to_string(c) + ": meter $" + got.to_string() + " vs closed form $" + oracle);
      continue;
    }

    // Split the same counters over three solvers; trace costs must add up.
    const std::uint64_t in1 = in / 3, out1 = out / 2, s1 = searches / 4;
    auto p = [](std::uint64_t a, std::uint64_t b, std::uint64_t s) {
      return std::map<std::string, std::string>{
          {"tokens_in", std::to_string(a)}, {"tokens_out", std::to_string(b)}, {"searches", std::to_string(s)}};
    };
    PipelineConfig config = three_stage(p(in1, out1, s1), p(in - in1, 0, searches - s1), p(0, out - out1, 0));
    Pricing pricing{Usd::parse(micro_to_decimal(pin)), Usd::parse(micro_to_decimal(pout)),
                    Usd::parse(micro_to_decimal(ps))};
    CostMeter meter(pricing);
    Services services;
    FactCheckState state = run_pipeline(FactCheckState::for_document("One. Two."), config, registry, services, meter);
    Usd trace_sum;
    for (const auto& t : state.trace) trace_sum += t.cost;
    if (!state.success || trace_sum != meter.total() || state.total_cost() != meter.total() ||
        meter.total().to_string() != oracle) {
      result.fail("case " + std::to_string(c) + ": trace costs do not add up to the meter total");
    }
  }
  if (result.pass) result.detail = std::to_string(result.cases) + " counter sets exact, unit cases $0.50/$40.00/$0.001";
  return result;
}

// ---------------------------------------------------------------------------
// Pipeline contract

namespace {

struct ChainPlan {
  PipelineConfig config;
  std::vector<const RegistryEntry*> entries;
};

ChainPlan random_chain(const SolverRegistry& registry, Rng& rng, std::size_t max_len) {
  const auto all = registry.entries();
  static constexpr SemanticType kStarts[] = {SemanticType::kDocument, SemanticType::kClaims,
                                             SemanticType::kEvidence, SemanticType::kOpaque};
  ChainPlan plan;
  plan.config.pipeline_id = "random";
  SemanticType current = kStarts[pick(rng, 0, 3)];
  const std::size_t target = pick(rng, 1, max_len);
  for (std::size_t i = 0; i < target; ++i) {
    std::vector<const RegistryEntry*> candidates;
    for (const auto* e : all) {
      if (e->io.input == current) candidates.push_back(e);
    }
    if (candidates.empty()) break;
    const RegistryEntry* entry = candidates[pick(rng, 0, candidates.size() - 1)];
    const SolverKind kind = pick(rng, 0, 1) ? entry->kind : SolverKind::kOther;
    plan.config.solvers.push_back(
        binding("step" + std::to_string(i), kind, entry->key, "s" + std::to_string(i), "s" + std::to_string(i + 1)));
    plan.entries.push_back(entry);
    current = entry->io.output;
  }
  return plan;
}

// State with claims known to the engine and the start slot filled.
FactCheckState seeded_state(const PipelineConfig& config, const SolverRegistry& registry, std::size_t start) {
  FactCheckState state = FactCheckState::for_document("First claim here. Second claim there.");
  seed_claims(state, "pre_claims", {"First claim here.", "Second claim there."});
  const auto& binding = config.solvers[start];
  const SemanticType type = registry.resolve(binding.implementation).io.input;
  switch (type) {
    case SemanticType::kDocument: state.named_slots.insert_or_assign(binding.input_name, Slot::document(state.document)); break;
    case SemanticType::kClaims: state.named_slots.insert_or_assign(binding.input_name, Slot::claims(state.claims)); break;
    case SemanticType::kEvidence: {
      EvidenceMap map;
      for (const auto& claim : state.claims) map[claim.id].push_back({claim.id, "seeded", "seed", 1, 1.0});
      state.named_slots.insert_or_assign(binding.input_name, Slot::evidence(std::move(map)));
      break;
    }
    case SemanticType::kVerdicts: state.named_slots.insert_or_assign(binding.input_name, Slot::verdicts({})); break;
    case SemanticType::kOpaque: state.named_slots.insert_or_assign(binding.input_name, Slot::opaque(nlohmann::json::object())); break;
  }
  return state;
}

}  // namespace

PropertyResult check_chain_validation(std::uint64_t seed, std::size_t cases) {
  PropertyResult result;
  Rng rng(seed);
  const SolverRegistry registry = test_registry();
  const auto all = registry.entries();
  std::map<std::string, std::size_t> tally;
  for (std::size_t c = 0; c < cases; ++c) {
    ChainPlan plan = random_chain(registry, rng, 8);
    ++result.cases;
    if (auto problem = validate_chain(plan.config, registry)) {
      result.fail("matched chain rejected: " + problem->message());
      continue;
    }
    PipelineConfig mutated = plan.config;
    const std::size_t n = mutated.solvers.size();
    std::vector<int> options = {2, 3};  // kind, unknown: valid at any position
    if (n > 1) options.insert(options.end(), {0, 1});
    const int mutation = options[pick(rng, 0, options.size() - 1)];
    const std::size_t at = mutation <= 1 ? pick(rng, 1, n - 1) : pick(rng, 0, n - 1);
    auto& target = mutated.solvers[at];
    ChainError::Kind expected = ChainError::Kind::kNameMismatch;
    switch (mutation) {
      case 0:
        target.input_name += "_renamed";
        expected = ChainError::Kind::kNameMismatch;
        break;
      case 1: {
        std::vector<const RegistryEntry*> wrong;
        for (const auto* e : all) {
          if (e->io.input != plan.entries[at - 1]->io.output) wrong.push_back(e);
        }
        target.implementation = wrong[pick(rng, 0, wrong.size() - 1)]->key;
        target.kind = SolverKind::kOther;
        expected = ChainError::Kind::kTypeMismatch;
        break;
      }
      case 2: {
        std::vector<SolverKind> wrong;
        for (SolverKind k : {SolverKind::kClaimProcessor, SolverKind::kRetriever, SolverKind::kVerifier}) {
          if (k != plan.entries[at]->kind) wrong.push_back(k);
        }
        target.kind = wrong[pick(rng, 0, wrong.size() - 1)];
        expected = ChainError::Kind::kKindMismatch;
        break;
      }
      default:
        target.implementation = "no.such_solver";
        expected = ChainError::Kind::kUnknownSolver;
        break;
    }
    ++result.cases;
    ++tally[std::to_string(mutation)];
    auto problem = validate_chain(mutated, registry);
    if (!problem || problem->kind != expected || problem->position != at) {
      result.fail("mutation " + std::to_string(mutation) + " at " + std::to_string(at) + " not reported there");
      continue;
    }
    if (c % 10 == 0) {
      CostMeter meter;
      Services services;
      try {
        run_pipeline(seeded_state(plan.config, registry, 0), mutated, registry, services, meter);
        result.fail("run_pipeline accepted a mismatched chain");
      } catch (const ChainValidationError&) {
      }
    }
  }
  if (result.pass) result.detail = std::to_string(result.cases) + " chains (matched + single-edge mutants)";
  return result;
}

PropertyResult check_halt_on_failure(std::uint64_t seed, std::size_t cases) {
  PropertyResult result;
  Rng rng(seed);
  const SolverRegistry registry = test_registry();
  Services services;
  for (std::size_t c = 0; c < cases; ++c) {
    ChainPlan plan = random_chain(registry, rng, 8);
    const std::size_t n = plan.config.solvers.size();
    const std::size_t fail_at = pick(rng, 0, n);  // n = no failure
    if (fail_at < n) plan.config.solvers[fail_at].params.set("fail", "true");
    CostMeter meter;
    FactCheckState state = run_pipeline(seeded_state(plan.config, registry, 0), plan.config, registry, services, meter);
    ++result.cases;
    const std::size_t expected_len = fail_at < n ? fail_at + 1 : n;
    bool ok = state.trace.size() == expected_len && state.success == (fail_at == n);
    for (std::size_t j = 0; ok && j < state.trace.size(); ++j) {
      ok = state.trace[j].solver_name == plan.config.solvers[j].name && state.trace[j].succeeded == (j != fail_at);
    }
    if (ok && fail_at < n) {
      ok = state.trace.back().note && state.trace.back().note->find("injected failure") != std::string::npos;
    }
    if (!ok) {
      result.fail("chain of " + std::to_string(n) + " failing at " + std::to_string(fail_at) + ": trace length " +
                  std::to_string(state.trace.size()));
    }
  }
  if (result.pass) result.detail = std::to_string(result.cases) + " runs halted at the failing solver";
  return result;
}

PropertyResult check_start_at(std::uint64_t seed, std::size_t cases) {
  PropertyResult result;
  Rng rng(seed);
  const SolverRegistry registry = test_registry();
  Services services;
  for (std::size_t c = 0; c < cases; ++c) {
    ChainPlan plan = random_chain(registry, rng, 8);
    const std::size_t n = plan.config.solvers.size();
    const std::size_t start = pick(rng, 0, n - 1);
    CostMeter meter;
    ++result.cases;
    FactCheckState state =
        run_pipeline(seeded_state(plan.config, registry, start), plan.config, registry, services, meter, start);
    bool ok = state.success && state.trace.size() == n - start;
    for (std::size_t j = 0; ok && j < state.trace.size(); ++j) {
      ok = state.trace[j].solver_name == plan.config.solvers[start + j].name;
    }
    if (!ok) result.fail("start_at " + std::to_string(start) + " of " + std::to_string(n) + " ran the wrong solvers");

    if (start > 0) {
      // Same start without the slot must refuse to run.
      ++result.cases;
      FactCheckState bare = FactCheckState::for_document("First claim here.");
      try {
        run_pipeline(bare, plan.config, registry, services, meter, start);
        result.fail("start_at " + std::to_string(start) + " ran without its input slot");
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kMissingInputSlot) result.fail("missing slot reported as " + std::string(e.what()));
      }
    }
  }
  ++result.cases;
  try {
    CostMeter meter;
    run_pipeline(FactCheckState::for_document("x."), three_stage(), registry, services, meter, 3);
    result.fail("start_at past the end was accepted");
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kInvalidArgument) result.fail("start_at past the end reported as " + std::string(e.what()));
  }
  if (result.pass) result.detail = std::to_string(result.cases) + " start_at runs";
  return result;
}

// ---------------------------------------------------------------------------
// Baselines

std::vector<BaselineCell> published_baseline_cells() {
  return {
      {"FacTool-QA Always-True (TRUE)", 177, 56, true, 0.76, 1.00, 0.86},
      {"FacTool-QA Always-False (FALSE)", 177, 56, false, 0.24, 1.00, 0.39},
      {"FELM-WK Always-True (TRUE)", 385, 147, true, 0.72, 1.00, 0.84},
      {"FELM-WK Always-False (FALSE)", 385, 147, false, 0.28, 1.00, 0.43},
  };
}

PropertyResult check_baselines() {
  PropertyResult result;
  std::ostringstream tally;
  tally.setf(std::ios::fixed);
  tally.precision(4);
  for (const auto& cell : published_baseline_cells()) {
    const GoldSet gold = gold_from_counts(cell.true_count, cell.false_count);
    const auto submission = run_baseline(gold, cell.always_true ? BaselineKind::kAlwaysTrue : BaselineKind::kAlwaysFalse);
    const MetricsReport report = evaluate_submission(submission, gold);
    const BinaryMetrics& m = cell.always_true ? report.true_label : report.false_label;
    ++result.cases;
    const bool ok = std::abs(m.precision - cell.precision) <= kBaselineTolerance &&
                    std::abs(m.recall - cell.recall) <= kBaselineTolerance &&
                    std::abs(m.f1 - cell.f1) <= kBaselineTolerance;
    tally << (result.cases > 1 ? "; " : "") << cell.label << " " << m.precision << "/" << m.recall << "/" << m.f1;
    if (!ok) result.fail(cell.label + " off by more than the tolerance: " + tally.str());
  }
  if (result.pass) result.detail = tally.str();
  return result;
}

// ---------------------------------------------------------------------------
// Evaluation harness

PropertyResult check_percent_identity(std::uint64_t seed, std::size_t cases) {
  PropertyResult result;
  Rng rng(seed);
  const SolverRegistry registry = test_registry();
  Services services;
  PipelineConfig config = three_stage();
  config.solvers[2].implementation = "t.mixed_verdicts";
  const std::vector<std::string> words = {"red", "blue", "green", "tall", "small", "river", "city", "stone", "bird"};
  for (std::size_t c = 0; c < cases; ++c) {
    std::vector<FreeformTask> tasks;
    const std::size_t n = pick(rng, 1, 12);
    for (std::size_t i = 0; i < n; ++i) {
      std::ostringstream text;
      const std::size_t sentences = pick(rng, 0, 6);
      for (std::size_t s = 0; s < sentences; ++s) {
        for (std::size_t w = 0; w < pick(rng, 1, 5); ++w) text << words[pick(rng, 0, words.size() - 1)] << " ";
        text << "number " << pick(rng, 0, 500) << ". ";
      }
      tasks.push_back({"q" + std::to_string(i), "question", text.str()});
    }
    PipelineConfig run_config = config;
    if (pick(rng, 0, 4) == 0) run_config.solvers[pick(rng, 0, 2)].params.set("fail", "true");
    const FreeformStats stats = freeform_eval(tasks, run_config, registry, services, pick(rng, 1, 4));
    ++result.cases;

    // Recount labels from the run states themselves.
    std::uint64_t t = 0, f = 0, u = 0;
    for (const auto& r : stats.responses) {
      if (!r.success) continue;
      for (const auto& [id, v] : r.state.at("verdicts").items()) {
        const std::string label = v.at("label");
        (label == "TRUE" ? t : label == "FALSE" ? f : u) += 1;
      }
    }
    const bool ok = stats.percent_true.numerator + stats.percent_false.numerator + stats.percent_unknown.numerator ==
                        stats.verified_claims &&
                    stats.percent_true.denominator == stats.verified_claims &&
                    stats.percent_false.denominator == stats.verified_claims &&
                    stats.percent_unknown.denominator == stats.verified_claims && stats.percent_true.numerator == t &&
                    stats.percent_false.numerator == f && stats.percent_unknown.numerator == u &&
                    stats.num_false_claims == f;
    if (!ok) result.fail("batch " + std::to_string(c) + ": percentages do not partition the verified claims");
  }
  if (result.pass) result.detail = std::to_string(result.cases) + " batches sum to 100% exactly";
  return result;
}

PropertyResult check_domain_partition(std::uint64_t seed, std::size_t cases) {
  PropertyResult result;
  Rng rng(seed);
  const std::vector<std::string> domains = {"Math", "History", "", "Science", "Art"};
  for (std::size_t c = 0; c < cases; ++c) {
    std::vector<FactQAItem> items;
    std::vector<EvalResult> results;
    const std::size_t n = pick(rng, 1, 60);
    for (std::size_t i = 0; i < n; ++i) {
      FactQAItem item;
      item.id = "q" + std::to_string(i);
      item.question = "Q?";
      item.domain = domains[pick(rng, 0, domains.size() - 1)];
      item.source = QaSource::kFacToolQa;
      item.error_type = {static_cast<ErrorType>(pick(rng, 0, 2))};
      items.push_back(item);
      if (pick(rng, 0, 3) == 0) continue;  // unanswered
      EvalResult r;
      r.question_id = item.id;
      r.family = Family::kFreeform;
      r.verdict = static_cast<EvalVerdict>(pick(rng, 0, 2));
      results.push_back(r);
    }
    if (results.empty()) continue;
    const FactualityReport report = build_report("m", items, results);
    ++result.cases;
    std::map<std::string, std::size_t> expected;
    for (const auto& r : results) {
      const std::string& d = items[std::stoul(r.question_id.substr(1))].domain;
      ++expected[d.empty() ? "(untagged)" : d];
    }
    std::size_t sum = 0;
    std::set<std::string> seen;
    bool ok = report.total_questions == results.size();
    for (const auto& row : report.per_domain) {
      ok = ok && seen.insert(row.domain).second && row.correct + row.incorrect + row.invalid == row.total &&
           expected[row.domain] == row.total;
      sum += row.total;
    }
    ok = ok && sum == results.size() && seen.size() == expected.size();
    if (!ok) result.fail("report " + std::to_string(c) + ": domain rows do not partition the questions");
  }
  if (result.pass) result.detail = std::to_string(result.cases) + " reports partitioned";
  return result;
}

std::vector<SelfAwareFixture> selfaware_fixtures() {
  // P = tp/(tp+fp), R = tp/(tp+fn), F1 = 2PR/(P+R), accuracy = (tp+tn)/all.
  return {
      {2, 1, 3, 4, 2.0 / 3.0, 2.0 / 5.0, 0.5, 6.0 / 10.0},
      {0, 0, 2, 3, 0.0, 0.0, 0.0, 3.0 / 5.0},
      {3, 0, 0, 0, 1.0, 1.0, 1.0, 1.0},
      {1, 3, 1, 5, 1.0 / 4.0, 1.0 / 2.0, 1.0 / 3.0, 6.0 / 10.0},
      {4, 2, 2, 2, 4.0 / 6.0, 4.0 / 6.0, 2.0 / 3.0, 6.0 / 10.0},
  };
}

PropertyResult check_selfaware_fixtures() {
  PropertyResult result;
  constexpr double kEps = 1e-12;
  std::size_t index = 0;
  for (const auto& fx : selfaware_fixtures()) {
    ++index;
    std::vector<FactQAItem> questions;
    ResponseSubmission submission{"fixture", {}};
    auto add = [&](bool answerable, bool abstains) {
      FactQAItem item;
      item.id = "sa" + std::to_string(questions.size());
      item.question = "Question " + item.id + "?";
      item.source = QaSource::kSelfAware;
      item.error_type = {ErrorType::kType3};
      item.answerable = answerable;
      submission.items.push_back(
          {item.id, abstains ? "I'm not sure; nobody can know that for certain." : "The answer is forty two."});
      questions.push_back(std::move(item));
    };
    for (std::size_t i = 0; i < fx.tp; ++i) add(false, true);
    for (std::size_t i = 0; i < fx.fp; ++i) add(true, true);
    for (std::size_t i = 0; i < fx.fn; ++i) add(false, false);
    for (std::size_t i = 0; i < fx.tn; ++i) add(true, false);
    LlmEvalOptions options;
    options.families = {Family::kSelfAware};
    const LlmEvalOutcome outcome = run_llm_eval(questions, submission, options);
    ++result.cases;
    const auto& m = outcome.report.selfaware;
    const bool ok = m && m->tp == fx.tp && m->fp == fx.fp && m->fn == fx.fn && m->tn == fx.tn &&
                    std::abs(m->precision - fx.precision) < kEps && std::abs(m->recall - fx.recall) < kEps &&
                    std::abs(m->f1 - fx.f1) < kEps && std::abs(m->accuracy - fx.accuracy) < kEps;
    if (!ok) result.fail("SelfAware fixture " + std::to_string(index) + " disagrees with the hand computation");
  }
  if (result.pass) result.detail = std::to_string(result.cases) + " confusion-matrix fixtures";
  return result;
}

}  // namespace ofc::testing
