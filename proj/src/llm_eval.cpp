#include "ofc/llm_eval.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <sstream>
#include <thread>

#include "ofc/engine.hpp"
#include "ofc/prompts.hpp"
#include "ofc/util.hpp"

namespace ofc {

using nlohmann::json;

std::string_view to_string(Family family) {
  switch (family) {
    case Family::kSnowball: return "snowball";
    case Family::kSelfAware: return "selfaware";
    case Family::kFreshQa: return "freshqa";
    case Family::kFreeform: return "freeform";
  }
  return "freeform";
}

std::optional<Family> parse_family(std::string_view text) {
  const std::string lower = to_lower(trim(text));
  if (lower == "snowball") return Family::kSnowball;
  if (lower == "selfaware") return Family::kSelfAware;
  if (lower == "freshqa") return Family::kFreshQa;
  if (lower == "freeform") return Family::kFreeform;
  return std::nullopt;
}

Family family_of(QaSource source) {
  switch (source) {
    case QaSource::kSnowball: return Family::kSnowball;
    case QaSource::kSelfAware: return Family::kSelfAware;
    case QaSource::kFreshQa: return Family::kFreshQa;
    default: return Family::kFreeform;
  }
}

std::string_view to_string(EvalVerdict verdict) {
  switch (verdict) {
    case EvalVerdict::kCorrect: return "correct";
    case EvalVerdict::kIncorrect: return "incorrect";
    case EvalVerdict::kInvalid: return "invalid";
  }
  return "invalid";
}

json to_json(const EvalResult& result) {
  return {{"question_id", result.question_id},
          {"family", std::string(to_string(result.family))},
          {"verdict", std::string(to_string(result.verdict))},
          {"detail", result.detail}};
}

namespace {

// Lowercased alphanumeric words joined by single spaces.
std::string normalize_answer(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || u >= 0x80) {
      if (pending_space && !out.empty()) out += ' ';
      pending_space = false;
      out += static_cast<char>(std::tolower(u));
    } else {
      pending_space = true;
    }
  }
  return out;
}

}  // namespace

std::string leading_yes_no(std::string_view response) {
  const std::string normalized = normalize_answer(response);
  const std::string first = normalized.substr(0, normalized.find(' '));
  if (first == "yes" || first == "no") return first;
  return {};
}

bool exact_match_eval(std::string_view response, std::string_view gold) {
  const std::string normalized_gold = normalize_answer(gold);
  if (normalized_gold.empty()) return false;
  if (normalized_gold == "yes" || normalized_gold == "no") return leading_yes_no(response) == normalized_gold;
  const std::string haystack = " " + normalize_answer(response) + " ";
  return haystack.find(" " + normalized_gold + " ") != std::string::npos;
}

Tally& Tally::operator+=(const Tally& other) {
  correct += other.correct;
  total += other.total;
  return *this;
}

SnowballMetrics snowball_eval(const std::vector<EvalResult>& results,
                              const std::map<std::string, const FactQAItem*>& items) {
  SnowballMetrics metrics;
  for (const auto& result : results) {
    if (result.family != Family::kSnowball) continue;
    auto it = items.find(result.question_id);
    if (it == items.end()) throw Error(ErrorCode::kUnresolvedId, "no question '" + result.question_id + "'");
    std::string subset = trim(it->second->task).empty() ? "unspecified" : it->second->task;
    Tally one{result.verdict == EvalVerdict::kCorrect ? 1u : 0u, 1};
    metrics.subsets[subset] += one;
    metrics.full_set += one;
  }
  return metrics;
}

std::vector<std::string> default_abstention_phrases() {
  return {"i don't know",      "i do not know",        "cannot be determined", "can't be determined",
          "unanswerable",      "cannot be answered",   "can't be answered",    "no definitive answer",
          "not possible to know", "impossible to know", "i am not sure",       "i'm not sure",
          "it is unknown",     "there is no way to know", "i cannot answer",    "i can't answer"};
}

bool detect_abstention(std::string_view response, const std::vector<std::string>& phrases) {
  std::string text = to_lower(response);
  // Curly apostrophes to ASCII.
  for (std::size_t pos; (pos = text.find("\xE2\x80\x99")) != std::string::npos;) text.replace(pos, 3, "'");
  const std::string collapsed = normalize_whitespace(text);
  return std::any_of(phrases.begin(), phrases.end(), [&](const std::string& phrase) {
    return !phrase.empty() && collapsed.find(normalize_whitespace(to_lower(phrase))) != std::string::npos;
  });
}

SelfAwareMetrics selfaware_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  SelfAwareMetrics m{tp, fp, fn, tn};
  m.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  m.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  const std::size_t all = tp + fp + fn + tn;
  m.accuracy = all == 0 ? 0.0 : static_cast<double>(tp + tn) / static_cast<double>(all);
  return m;
}

SelfAwareMetrics selfaware_eval(const std::vector<EvalResult>& results) {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (const auto& result : results) {
    if (result.family != Family::kSelfAware) continue;
    const bool predicted_positive = result.detail.value("abstained", false);
    const bool gold_positive = !result.detail.value("answerable", true);
    if (predicted_positive && gold_positive) ++tp;
    else if (predicted_positive) ++fp;
    else if (gold_positive) ++fn;
    else ++tn;
  }
  return selfaware_from_counts(tp, fp, fn, tn);
}

EvalVerdict parse_judge_reply(std::string_view reply) {
  for (const auto& raw : split_lines(reply)) {
    std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (starts_with_icase(line, "verdict:")) line = trim(line.substr(8));
    const std::string word = to_upper(normalize_answer(line).substr(0, normalize_answer(line).find(' ')));
    if (word == "CORRECT") return EvalVerdict::kCorrect;
    if (word == "INCORRECT") return EvalVerdict::kIncorrect;
    return EvalVerdict::kInvalid;
  }
  return EvalVerdict::kInvalid;
}

EvalVerdict freshqa_strict_eval(const FactQAItem& item, std::string_view response, ModelGateway& judge,
                                CostMeter& meter) {
  const std::string prompt = prompts::render(prompts::get(prompts::kFreshQaJudge),
                                             {{"question", item.question},
                                              {"reference", item.gold_answer.value_or("(none provided)")},
                                              {"response", std::string(response)}});
  return parse_judge_reply(judge.chat(prompt, {}, meter).text);
}

FreshQaMetrics freshqa_metrics(const std::vector<EvalResult>& results) {
  FreshQaMetrics m;
  for (const auto& result : results) {
    if (result.family != Family::kFreshQa) continue;
    switch (result.verdict) {
      case EvalVerdict::kCorrect: ++m.correct; break;
      case EvalVerdict::kIncorrect: ++m.incorrect; break;
      case EvalVerdict::kInvalid: ++m.invalid; break;
    }
  }
  const std::size_t valid = m.correct + m.incorrect;
  const std::size_t all = valid + m.invalid;
  m.accuracy = valid == 0 ? 0.0 : static_cast<double>(m.correct) / static_cast<double>(valid);
  m.perc_valid = all == 0 ? 0.0 : static_cast<double>(valid) / static_cast<double>(all);
  return m;
}

namespace {

FreeformResponse run_one(const FreeformTask& task, const PipelineConfig& config, const SolverRegistry& registry,
                         const Services& services) {
  FreeformResponse out;
  out.question_id = task.question_id;
  CostMeter meter(services.pricing());
  try {
    FactCheckState state = FactCheckState::for_document(task.response);
    if (!task.question.empty()) state.question = task.question;
    state = run_pipeline(std::move(state), config, registry, services, meter);
    out.success = state.success;
    if (state.success) {
      for (const auto& [id, verdict] : state.verdicts) {
        switch (verdict.label) {
          case Label::kTrue: ++out.true_claims; break;
          case Label::kFalse: ++out.false_claims; break;
          default: ++out.unknown_claims; break;
        }
      }
      if (state.document_verdict) out.document_verdict = state.document_verdict->label;
    } else if (!state.trace.empty() && state.trace.back().note) {
      out.note = *state.trace.back().note;
    }
    out.state = to_json(state);
  } catch (const std::exception& e) {
    out.note = e.what();
  }
  out.cost = meter.total();
  return out;
}

}  // namespace

FreeformStats freeform_eval(const std::vector<FreeformTask>& tasks, const PipelineConfig& config,
                            const SolverRegistry& registry, const Services& services, std::size_t threads) {
  if (auto error = validate_chain(config, registry)) throw ChainValidationError(*error);
  FreeformStats stats;
  stats.responses.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < tasks.size();) {
      stats.responses[i] = run_one(tasks[i], config, registry, services);
    }
  };
  const std::size_t count = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(1, tasks.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < count; ++t) pool.emplace_back(worker);
  worker();
  for (auto& thread : pool) thread.join();

  for (const auto& r : stats.responses) {
    stats.percent_true.numerator += r.true_claims;
    stats.percent_false.numerator += r.false_claims;
    stats.percent_unknown.numerator += r.unknown_claims;
    stats.est_cost += r.cost;
  }
  stats.verified_claims = stats.percent_true.numerator + stats.percent_false.numerator + stats.percent_unknown.numerator;
  stats.percent_true.denominator = stats.percent_false.denominator = stats.percent_unknown.denominator =
      stats.verified_claims;
  stats.num_false_claims = stats.percent_false.numerator;
  return stats;
}

EvalResult to_eval_result(const FreeformResponse& response) {
  EvalResult result;
  result.question_id = response.question_id;
  result.family = Family::kFreeform;
  if (!response.success || !response.document_verdict) {
    result.verdict = EvalVerdict::kInvalid;
  } else {
    result.verdict = *response.document_verdict == Label::kTrue ? EvalVerdict::kCorrect : EvalVerdict::kIncorrect;
  }
  result.detail = {{"true_claims", response.true_claims},
                   {"false_claims", response.false_claims},
                   {"unknown_claims", response.unknown_claims},
                   {"cost_usd", response.cost.to_string()},
                   {"document_verdict",
                    response.document_verdict ? json(std::string(to_string(*response.document_verdict))) : json(nullptr)}};
  if (!response.note.empty()) result.detail["note"] = response.note;
  return result;
}

std::string_view advice_template(ErrorType type) {
  switch (type) {
    case ErrorType::kType1:
      return "Knowledge errors: the model states inaccurate facts where it lacks or has internalized wrong "
             "knowledge. Augment generation with retrieved external knowledge at inference time, curate the "
             "corpora used for pre-training, fine-tuning and alignment, calibrate the model to recognize what it "
             "does not know, and tune decoding settings (sampling, beam search, temperature) toward accuracy.";
    case ErrorType::kType2:
      return "Over-commitment errors: the model follows false premises or its own earlier wrong statements. "
             "Instruct the model explicitly to check the prompt for false premises before answering, and ask the "
             "same question in a different form, for example asking for the factors of a number step by step "
             "instead of an immediate yes/no primality answer.";
    case ErrorType::kType3:
      return "Disability errors: the model cannot supply up-to-date answers to questions whose answers change "
             "over time. Retrieve current external information and place it in the context before answering.";
  }
  return "";
}

FactualityReport build_report(std::string model_name, const std::vector<FactQAItem>& items,
                              const std::vector<EvalResult>& results, const std::optional<FreeformStats>& freeform) {
  if (results.empty()) throw Error(ErrorCode::kNoResults, "no evaluation results to report");
  std::map<std::string, const FactQAItem*> by_id;
  for (const auto& item : items) by_id.emplace(item.id, &item);

  std::vector<EvalResult> sorted = results;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.question_id < b.question_id; });

  FactualityReport report;
  report.model_name = std::move(model_name);
  report.total_questions = sorted.size();
  std::map<std::string, FactualityReport::DomainRow> domains;
  for (const auto& result : sorted) {
    auto it = by_id.find(result.question_id);
    if (it == by_id.end()) throw Error(ErrorCode::kUnresolvedId, "no question '" + result.question_id + "'");
    const FactQAItem& item = *it->second;
    report.families.insert(result.family);

    const std::string domain = trim(item.domain).empty() ? "(untagged)" : item.domain;
    auto& row = domains[domain];
    row.domain = domain;
    ++row.total;
    switch (result.verdict) {
      case EvalVerdict::kCorrect: ++row.correct; break;
      case EvalVerdict::kIncorrect: ++row.incorrect; break;
      case EvalVerdict::kInvalid: ++row.invalid; break;
    }
    if (result.verdict == EvalVerdict::kInvalid) continue;
    Tally one{result.verdict == EvalVerdict::kCorrect ? 1u : 0u, 1};
    report.overall += one;
    for (ErrorType type : item.error_type) report.per_error_type[type] += one;
  }
  for (auto& [name, row] : domains) report.per_domain.push_back(row);

  if (report.families.contains(Family::kSnowball)) report.snowball = snowball_eval(sorted, by_id);
  if (report.families.contains(Family::kSelfAware)) report.selfaware = selfaware_eval(sorted);
  if (report.families.contains(Family::kFreshQa)) report.freshqa = freshqa_metrics(sorted);
  if (report.families.contains(Family::kFreeform) && freeform) report.freeform = freeform;

  for (const auto& [type, tally] : report.per_error_type) {
    if (tally.total > 0 && tally.accuracy() < kAdviceThreshold) {
      report.advice.push_back({type, tally.accuracy(), std::string(advice_template(type))});
    }
  }
  std::stable_sort(report.advice.begin(), report.advice.end(),
                   [](const auto& a, const auto& b) { return a.accuracy < b.accuracy; });
  return report;
}

namespace {

json tally_json(const Tally& t) { return {{"correct", t.correct}, {"total", t.total}, {"accuracy", t.accuracy()}}; }

json ratio_json(const Ratio& r) {
  return {{"numerator", r.numerator}, {"denominator", r.denominator}, {"percent", r.percent()}};
}

std::string fixed(double value, int digits) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(digits);
  out << value;
  return out.str();
}

}  // namespace

json to_json(const FactualityReport& report) {
  json families = json::object();
  if (report.snowball) {
    json subsets = json::object();
    for (const auto& [name, tally] : report.snowball->subsets) subsets[name] = tally_json(tally);
    families["snowball"] = {{"metric", "accuracy"}, {"subsets", subsets}, {"full_set", tally_json(report.snowball->full_set)}};
  }
  if (report.selfaware) {
    const auto& m = *report.selfaware;
    families["selfaware"] = {{"positive_label", "unanswerable"}, {"tp", m.tp}, {"fp", m.fp}, {"fn", m.fn},
                             {"tn", m.tn}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
                             {"accuracy", m.accuracy}};
  }
  if (report.freshqa) {
    const auto& m = *report.freshqa;
    families["freshqa"] = {{"correct", m.correct}, {"incorrect", m.incorrect}, {"invalid", m.invalid},
                           {"accuracy", m.accuracy}, {"perc_valid", m.perc_valid}};
  }
  if (report.freeform) {
    const auto& s = *report.freeform;
    families["freeform"] = {{"responses", s.responses.size()},
                            {"verified_claims", s.verified_claims},
                            {"percent_true_claims", ratio_json(s.percent_true)},
                            {"percent_false_claims", ratio_json(s.percent_false)},
                            {"percent_unknown_claims", ratio_json(s.percent_unknown)},
                            {"num_false_claims", s.num_false_claims},
                            {"est_cost_usd", s.est_cost.to_string()},
                            {"cost_is_estimated", true}};
  }
  auto domains = json::array();
  for (const auto& row : report.per_domain) {
    const std::size_t valid = row.correct + row.incorrect;
    domains.push_back({{"domain", row.domain}, {"total", row.total}, {"correct", row.correct},
                       {"incorrect", row.incorrect}, {"invalid", row.invalid},
                       {"accuracy", valid == 0 ? 0.0 : static_cast<double>(row.correct) / static_cast<double>(valid)}});
  }
  json error_types = json::object();
  for (const auto& [type, tally] : report.per_error_type) error_types[std::string(to_string(type))] = tally_json(tally);
  auto advice = json::array();
  for (const auto& a : report.advice) {
    advice.push_back({{"error_type", std::string(to_string(a.error_type))}, {"accuracy", a.accuracy}, {"text", a.text}});
  }
  return {{"schema_version", 1},
          {"model_name", report.model_name},
          {"total_questions", report.total_questions},
          {"overall", tally_json(report.overall)},
          {"families", families},
          {"per_domain", domains},
          {"per_error_type", error_types},
          {"advice", advice}};
}

std::string to_markdown(const FactualityReport& report) {
  std::ostringstream md;
  md << "# Factuality report: " << report.model_name << "\n\n";
  md << "Questions evaluated: " << report.total_questions << ". Overall accuracy over valid assessments: "
     << fixed(100.0 * report.overall.accuracy(), 1) << "% (" << report.overall.correct << "/" << report.overall.total
     << ").\n\n";
  if (report.snowball) {
    md << "## Snowball (accuracy)\n\n| Subset | Correct | Total | Accuracy |\n|---|---|---|---|\n";
    for (const auto& [name, t] : report.snowball->subsets) {
      md << "| " << name << " | " << t.correct << " | " << t.total << " | " << fixed(t.accuracy(), 3) << " |\n";
    }
    const auto& f = report.snowball->full_set;
    md << "| full set | " << f.correct << " | " << f.total << " | " << fixed(f.accuracy(), 3) << " |\n\n";
  }
  if (report.selfaware) {
    const auto& m = *report.selfaware;
    md << "## SelfAware (positive label = unanswerable)\n\n| Precision | Recall | F1 | Accuracy |\n|---|---|---|---|\n"
       << "| " << fixed(m.precision, 3) << " | " << fixed(m.recall, 3) << " | " << fixed(m.f1, 3) << " | "
       << fixed(m.accuracy, 3) << " |\n\n";
  }
  if (report.freshqa) {
    const auto& m = *report.freshqa;
    md << "## FreshQA (strict)\n\n| Accuracy | Valid assessments |\n|---|---|\n| " << fixed(m.accuracy, 3) << " | "
       << fixed(100.0 * m.perc_valid, 1) << "% |\n\n";
  }
  if (report.freeform) {
    const auto& s = *report.freeform;
    md << "## Free-form responses\n\n"
       << "Verified claims: " << s.verified_claims << ". True: " << fixed(s.percent_true.percent(), 2)
       << "%. False: " << fixed(s.percent_false.percent(), 2) << "% (" << s.num_false_claims
       << " claims). Unknown: " << fixed(s.percent_unknown.percent(), 2) << "%.\n\n"
       << "Checking cost (estimated token counts): " << "$" << s.est_cost.to_cents() << " (exact $" << s.est_cost.to_string() << ").\n\n";
  }
  md << "## Accuracy by domain\n\n| Domain | Questions | Correct | Incorrect | Invalid |\n|---|---|---|---|---|\n";
  for (const auto& row : report.per_domain) {
    md << "| " << row.domain << " | " << row.total << " | " << row.correct << " | " << row.incorrect << " | "
       << row.invalid << " |\n";
  }
  md << "\n## Accuracy by error type\n\n| Error type | Correct | Total | Accuracy |\n|---|---|---|---|\n";
  for (const auto& [type, t] : report.per_error_type) {
    md << "| " << to_string(type) << " | " << t.correct << " | " << t.total << " | " << fixed(t.accuracy(), 3) << " |\n";
  }
  md << "\n## Advice\n\n";
  if (report.advice.empty()) md << "No error type falls below " << fixed(100.0 * kAdviceThreshold, 0) << "% accuracy.\n";
  for (const auto& a : report.advice) {
    md << "- **" << to_string(a.error_type) << "** (" << fixed(100.0 * a.accuracy, 1) << "%): " << a.text << "\n";
  }
  return md.str();
}

LlmEvalOutcome run_llm_eval(const std::vector<FactQAItem>& questions, const ResponseSubmission& submission,
                            const LlmEvalOptions& options) {
  std::map<std::string, const FactQAItem*> by_id;
  for (const auto& q : questions) by_id.emplace(q.id, &q);

  LlmEvalOutcome outcome;
  std::vector<FreeformTask> freeform_tasks;
  std::optional<CostMeter> judge_meter;
  if (options.judge) judge_meter.emplace(options.judge->config().pricing);

  for (const auto& answer : submission.items) {
    auto it = by_id.find(answer.question_id);
    if (it == by_id.end()) throw Error(ErrorCode::kUnresolvedId, "unknown question id '" + answer.question_id + "'");
    const FactQAItem& item = *it->second;
    const Family family = family_of(item.source);
    if (!options.families.contains(family)) continue;

    EvalResult result;
    result.question_id = item.id;
    result.family = family;
    switch (family) {
      case Family::kSnowball: {
        const bool ok = exact_match_eval(answer.response_text, item.gold_answer.value_or(""));
        result.verdict = ok ? EvalVerdict::kCorrect : EvalVerdict::kIncorrect;
        result.detail = {{"parsed", leading_yes_no(answer.response_text)}, {"gold", item.gold_answer.value_or("")}};
        break;
      }
      case Family::kSelfAware: {
        const bool abstained = detect_abstention(answer.response_text, options.abstention_phrases);
        const bool answerable = item.answerable.value_or(true);
        result.verdict = abstained == !answerable ? EvalVerdict::kCorrect : EvalVerdict::kIncorrect;
        result.detail = {{"abstained", abstained}, {"answerable", answerable}, {"detector", "phrase_list"}};
        break;
      }
      case Family::kFreshQa: {
        if (!options.judge) {
          outcome.skipped.push_back(item.id);
          continue;
        }
        try {
          result.verdict = freshqa_strict_eval(item, answer.response_text, *options.judge, *judge_meter);
        } catch (const Error& e) {
          if (!is_backend_error(e.code())) throw;
          result.verdict = EvalVerdict::kInvalid;
          result.detail["error"] = std::string(to_string(e.code())) + ": " + e.what();
        }
        break;
      }
      case Family::kFreeform:
        if (!options.pipeline || !options.registry || !options.services) {
          outcome.skipped.push_back(item.id);
        } else {
          freeform_tasks.push_back({item.id, item.question, answer.response_text});
        }
        continue;
    }
    outcome.results.push_back(std::move(result));
  }
  if (!outcome.skipped.empty()) {
    outcome.notes.push_back(std::to_string(outcome.skipped.size()) +
                            " question(s) skipped: FreshQA needs a judge gateway, free-form needs a pipeline");
  }

  std::optional<FreeformStats> freeform;
  if (!freeform_tasks.empty()) {
    freeform = freeform_eval(freeform_tasks, *options.pipeline, *options.registry, *options.services, options.threads);
    for (const auto& response : freeform->responses) outcome.results.push_back(to_eval_result(response));
  }
  std::sort(outcome.results.begin(), outcome.results.end(),
            [](const auto& a, const auto& b) { return a.question_id < b.question_id; });
  if (judge_meter) outcome.judge_cost = judge_meter->total();
  outcome.report = build_report(submission.model_name.empty() ? "unnamed-model" : submission.model_name, questions,
                                outcome.results, freeform);
  return outcome;
}

void write_report_files(const std::filesystem::path& dir, const LlmEvalOutcome& outcome) {
  std::filesystem::create_directories(dir);
  json report = to_json(outcome.report);
  report["judge_cost_usd"] = outcome.judge_cost.to_string();
  report["skipped"] = outcome.skipped;
  report["notes"] = outcome.notes;
  write_file_atomic(dir / "report.json", report.dump(2) + "\n");
  write_file_atomic(dir / "report.md", to_markdown(outcome.report));
  std::string lines;
  for (const auto& result : outcome.results) lines += to_json(result).dump() + "\n";
  write_file_atomic(dir / "results.jsonl", lines);
}

}  // namespace ofc
