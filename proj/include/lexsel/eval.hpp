#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "lexsel/chat.hpp"
#include "lexsel/dataset.hpp"
#include "lexsel/error.hpp"
#include "lexsel/jsonl.hpp"
#include "lexsel/log.hpp"
#include "lexsel/parallel.hpp"
#include "lexsel/random.hpp"
#include "lexsel/rules.hpp"
#include "lexsel/text.hpp"

namespace lexsel {

// ---------------------------------------------------------------------------
// Fuzzy matching

/// ((|a|+|b|) - D) / (|a|+|b|) with D the edit distance under insert/delete
/// cost 1 and substitution cost 2, over case-folded code points.
inline double levenshtein_ratio(std::string_view a, std::string_view b) {
  const auto x = text::case_fold(text::decode_utf8(a));
  const auto y = text::case_fold(text::decode_utf8(b));
  const std::size_t total = x.size() + y.size();
  if (total == 0) return 1.0;
  std::vector<std::size_t> prev(y.size() + 1), cur(y.size() + 1);
  for (std::size_t j = 0; j <= y.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= x.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= y.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (x[i - 1] == y[j - 1] ? 0 : 2);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  const auto d = prev[y.size()];
  return static_cast<double>(total - d) / static_cast<double>(total);
}

enum class MatchKind { substring, ratio };

struct FuzzyMatch {
  std::string candidate;
  MatchKind kind = MatchKind::substring;
  double score = 1.0;
};

/// Substring matching first (longest case-folded candidate contained in the
/// text wins), then the best token/candidate Levenshtein ratio if it is
/// strictly above `threshold`. Ties go to the lexicographically first
/// candidate.
inline std::optional<FuzzyMatch> fuzzy_select(std::string_view text_in,
                                              std::vector<std::string> candidates,
                                              double threshold = 0.7,
                                              text::Tokenizer tokenizer = text::Tokenizer::punct) {
  require(!candidates.empty(), "fuzzy_select: no candidates");
  std::sort(candidates.begin(), candidates.end());
  const auto folded = text::case_fold(text_in);

  std::optional<FuzzyMatch> best;
  std::size_t best_len = 0;
  for (const auto& c : candidates) {
    const auto fc = text::case_fold(c);
    if (fc.empty() || folded.find(fc) == std::string::npos) continue;
    const auto len = text::length_utf8(fc);
    if (!best || len > best_len) {
      best = FuzzyMatch{c, MatchKind::substring, 1.0};
      best_len = len;
    }
  }
  if (best) return best;

  double best_ratio = -1.0;
  std::string best_candidate;
  for (const auto& token : text::tokenize(text_in, tokenizer)) {
    for (const auto& c : candidates) {
      const double r = levenshtein_ratio(token, c);
      if (r > best_ratio || (r == best_ratio && c < best_candidate)) {
        best_ratio = r;
        best_candidate = c;
      }
    }
  }
  if (best_ratio > threshold) return FuzzyMatch{best_candidate, MatchKind::ratio, best_ratio};
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Settings and prompts

enum class Setting { no_rules, self_rules, external_rules, nmt, frequency_baseline };

inline const char* to_string(Setting s) {
  switch (s) {
    case Setting::no_rules: return "no_rules";
    case Setting::self_rules: return "self_rules";
    case Setting::external_rules: return "external_rules";
    case Setting::nmt: return "nmt";
    case Setting::frequency_baseline: return "frequency_baseline";
  }
  return "no_rules";
}

inline Setting parse_setting(const std::string& s) {
  if (s == "no_rules") return Setting::no_rules;
  if (s == "self_rules") return Setting::self_rules;
  if (s == "external_rules") return Setting::external_rules;
  if (s == "nmt") return Setting::nmt;
  if (s == "baseline" || s == "frequency_baseline") return Setting::frequency_baseline;
  fail(ErrorKind::usage, "unknown setting '" + s + "'");
}

inline bool uses_rules(Setting s) { return s == Setting::self_rules || s == Setting::external_rules; }

inline bool is_chat_setting(Setting s) {
  return s == Setting::no_rules || s == Setting::self_rules || s == Setting::external_rules;
}

inline constexpr const char* retry_sentence =
    "Please enclose your selected translation from <Translations> with 3 back ticks.";

struct SelectionPrompt {
  std::string system;
  std::string user;
  std::vector<std::string> presented_order;
};

/// Candidate order shown to the model for `item` under `order_seed`.
inline std::vector<std::string> presented_order(const SelectionItem& item, std::uint64_t order_seed) {
  return permuted(item.candidates, derive_seed(order_seed, item.id));
}

namespace detail {

inline std::string concept_word(const SelectionItem& item) {
  if (item.concept_index && *item.concept_index < item.source_tokens.size())
    return item.source_tokens[*item.concept_index];
  return item.concept_key.lemma;
}

inline std::string selection_request(const SelectionItem& item, const std::string& translations) {
  return "select the best translation of \"" + concept_word(item) + "\" in \"" + item.source_text() +
         "\" from the following list: " + translations +
         ".\nCarefully explain your reasoning first and then enclose your final answer like this "
         "```answer```.";
}

}  // namespace detail

inline SelectionPrompt build_selection_prompt(const SelectionItem& item, Setting setting,
                                              const RuleSet* rules, std::uint64_t order_seed,
                                              const std::string& target_language) {
  require(is_chat_setting(setting),
          std::string("build_selection_prompt: setting ") + to_string(setting) + " takes no prompt");
  require(uses_rules(setting) == (rules != nullptr),
          std::string("build_selection_prompt: rules must be given iff the setting uses them (") +
              to_string(setting) + ")");
  SelectionPrompt p;
  p.presented_order = presented_order(item, order_seed);
  const auto translations = text::join(p.presented_order, ", ");
  if (!rules) {
    p.user = "Please " + detail::selection_request(item, translations);
    return p;
  }
  std::string rendered;
  for (const auto& c : p.presented_order) {
    auto it = rules->rules.find(c);
    if (it == rules->rules.end())
      fail(ErrorKind::precondition, "rules for " + item.concept_key.str() + " lack variation '" + c + "'");
    rendered += "\n" + c + ": " + it->second;
  }
  p.system = "Here are rules for how to translate \"" + item.concept_key.lemma + "\" in " +
             target_language + ":" + rendered;
  p.user = "Based on the provided rules, please " + detail::selection_request(item, translations);
  return p;
}

inline std::string retry_prompt(const std::string& user, const std::vector<std::string>& order) {
  std::string sentence = retry_sentence;
  const std::string slot = "<Translations>";
  sentence.replace(sentence.find(slot), slot.size(), text::join(order, ", "));
  return user + "\n" + sentence;
}

// ---------------------------------------------------------------------------
// Answer parsing

enum class ParseStatus { exact, fuzzy, retry_exact, retry_fuzzy, failed };

inline const char* to_string(ParseStatus s) {
  switch (s) {
    case ParseStatus::exact: return "exact";
    case ParseStatus::fuzzy: return "fuzzy";
    case ParseStatus::retry_exact: return "retry_exact";
    case ParseStatus::retry_fuzzy: return "retry_fuzzy";
    case ParseStatus::failed: return "failed";
  }
  return "failed";
}

inline ParseStatus parse_parse_status(const std::string& s) {
  for (auto v : {ParseStatus::exact, ParseStatus::fuzzy, ParseStatus::retry_exact,
                 ParseStatus::retry_fuzzy, ParseStatus::failed})
    if (s == to_string(v)) return v;
  fail(ErrorKind::format, "unknown parse status '" + s + "'");
}

struct ParsedAnswer {
  std::optional<std::string> prediction;
  ParseStatus status = ParseStatus::failed;
};

/// Contents of the last complete ```...``` span, if any. Fences pair up left
/// to right.
inline std::optional<std::string> last_backtick_span(std::string_view raw) {
  std::vector<std::size_t> fences;
  for (auto pos = raw.find("```"); pos != std::string_view::npos; pos = raw.find("```", pos + 3))
    fences.push_back(pos);
  if (fences.size() < 2) return std::nullopt;
  const auto pair = fences.size() / 2 - 1;
  const auto open = fences[2 * pair] + 3;
  return std::string(raw.substr(open, fences[2 * pair + 1] - open));
}

/// Reads a model answer. `exact` means the span holds a candidate verbatim;
/// anything else that fuzzy_select resolves is `fuzzy`. A missing span or an
/// unresolvable one yields `failed` (the caller decides whether to retry).
inline ParsedAnswer parse_answer(std::string_view raw, const std::vector<std::string>& candidates,
                                 double threshold = 0.7,
                                 text::Tokenizer tokenizer = text::Tokenizer::punct) {
  auto span = last_backtick_span(raw);
  if (!span) return {};
  const std::string body(text::trim(*span));
  if (std::find(candidates.begin(), candidates.end(), body) != candidates.end())
    return {body, ParseStatus::exact};
  if (auto m = fuzzy_select(body, candidates, threshold, tokenizer))
    return {m->candidate, ParseStatus::fuzzy};
  return {};
}

/// Reads a translation-system output: substring hits are exact, ratio hits
/// fuzzy.
inline ParsedAnswer parse_translation(std::string_view translation,
                                      const std::vector<std::string>& candidates,
                                      double threshold = 0.7,
                                      text::Tokenizer tokenizer = text::Tokenizer::punct) {
  auto m = fuzzy_select(translation, candidates, threshold, tokenizer);
  if (!m) return {};
  return {m->candidate, m->kind == MatchKind::substring ? ParseStatus::exact : ParseStatus::fuzzy};
}

// ---------------------------------------------------------------------------
// Records

struct EvalRecord {
  std::string item_id;
  LexemeKey concept_key;
  Setting setting = Setting::no_rules;
  std::string model;
  std::uint64_t seed = 0;
  std::vector<std::string> presented_order;
  std::string raw_output;
  std::optional<std::string> parsed_prediction;
  ParseStatus parse_status = ParseStatus::failed;
  bool correct = false;
  std::string gold;
  std::size_t attempts = 0;
  std::optional<std::string> error;

  friend bool operator==(const EvalRecord&, const EvalRecord&) = default;
};

inline nlohmann::json to_json(const EvalRecord& r) {
  return {{"item_id", r.item_id},
          {"concept", {{"lemma", r.concept_key.lemma}, {"pos", r.concept_key.pos}}},
          {"setting", to_string(r.setting)},
          {"model", r.model},
          {"seed", r.seed},
          {"presented_order", r.presented_order},
          {"raw_output", r.raw_output},
          {"parsed_prediction", r.parsed_prediction ? nlohmann::json(*r.parsed_prediction) : nlohmann::json()},
          {"parse_status", to_string(r.parse_status)},
          {"correct", r.correct},
          {"gold", r.gold},
          {"attempts", r.attempts},
          {"error", r.error ? nlohmann::json(*r.error) : nlohmann::json()}};
}

inline EvalRecord record_from_json(const nlohmann::json& o) {
  EvalRecord r;
  r.item_id = o.at("item_id").get<std::string>();
  r.concept_key = {o.at("concept").at("lemma").get<std::string>(),
                   o.at("concept").at("pos").get<std::string>()};
  r.setting = parse_setting(o.at("setting").get<std::string>());
  r.model = o.value("model", "");
  r.seed = o.value("seed", std::uint64_t{0});
  r.presented_order = o.value("presented_order", std::vector<std::string>{});
  r.raw_output = o.value("raw_output", "");
  if (o.contains("parsed_prediction") && o["parsed_prediction"].is_string())
    r.parsed_prediction = o["parsed_prediction"].get<std::string>();
  r.parse_status = parse_parse_status(o.at("parse_status").get<std::string>());
  r.correct = o.at("correct").get<bool>();
  r.gold = o.value("gold", "");
  r.attempts = o.value("attempts", std::size_t{0});
  if (o.contains("error") && o["error"].is_string()) r.error = o["error"].get<std::string>();
  return r;
}

inline void write_records(const std::filesystem::path& path, const std::vector<EvalRecord>& records) {
  std::vector<nlohmann::json> rows;
  for (const auto& r : records) rows.push_back(to_json(r));
  jsonl::write(path, rows);
}

inline std::vector<EvalRecord> read_records(const std::filesystem::path& path) {
  std::vector<EvalRecord> out;
  jsonl::for_each(path, [&](const nlohmann::json& o, std::size_t) { out.push_back(record_from_json(o)); });
  return out;
}

// ---------------------------------------------------------------------------
// Reports

struct RunReport {
  Setting setting = Setting::no_rules;
  std::string model;
  std::size_t n_items = 0;
  std::vector<std::uint64_t> seeds;
  std::map<std::uint64_t, double> per_seed;
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;
  std::map<std::string, double> per_concept;  // pooled over seeds
  std::map<std::size_t, std::vector<double>> position_bias;
  std::map<std::string, std::size_t> parse_status_counts;
  std::string records_ref;
};

inline nlohmann::json to_json(const RunReport& r) {
  nlohmann::json per_seed = nlohmann::json::object();
  for (const auto& [s, a] : r.per_seed) per_seed[std::to_string(s)] = a;
  nlohmann::json bias = nlohmann::json::object();
  for (const auto& [k, h] : r.position_bias) bias[std::to_string(k)] = h;
  return {{"setting", to_string(r.setting)},
          {"model", r.model},
          {"n_items", r.n_items},
          {"seeds", r.seeds},
          {"per_seed", per_seed},
          {"accuracy_mean", r.accuracy_mean},
          {"accuracy_std", r.accuracy_std},
          {"per_concept", r.per_concept},
          {"position_bias", bias},
          {"parse_status_counts", r.parse_status_counts},
          {"records_ref", r.records_ref}};
}

/// Aggregates records into a report. Accuracy per seed is over all records
/// of that seed (failures count as wrong); the spread is the population
/// standard deviation of the per-seed accuracies. Position histograms pool
/// every record with a prediction, grouped by candidate count.
inline RunReport make_report(const std::vector<EvalRecord>& records, Setting setting,
                             const std::string& model, std::string records_ref = {}) {
  RunReport rep;
  rep.setting = setting;
  rep.model = model;
  rep.records_ref = std::move(records_ref);

  std::map<std::uint64_t, std::pair<std::size_t, std::size_t>> by_seed;  // correct, total
  std::map<std::string, std::pair<std::size_t, std::size_t>> by_concept;
  std::map<std::size_t, std::vector<std::size_t>> positions;
  std::set<std::string> items;
  for (const auto& r : records) {
    items.insert(r.item_id);
    auto& s = by_seed[r.seed];
    auto& c = by_concept[r.concept_key.str()];
    s.second++;
    c.second++;
    if (r.correct) {
      s.first++;
      c.first++;
    }
    rep.parse_status_counts[to_string(r.parse_status)]++;
    if (r.parsed_prediction) {
      auto it = std::find(r.presented_order.begin(), r.presented_order.end(), *r.parsed_prediction);
      if (it != r.presented_order.end()) {
        auto& h = positions[r.presented_order.size()];
        h.resize(r.presented_order.size());
        h[static_cast<std::size_t>(it - r.presented_order.begin())]++;
      }
    }
  }
  rep.n_items = items.size();
  for (const auto& [seed, ct] : by_seed) {
    rep.seeds.push_back(seed);
    rep.per_seed[seed] = static_cast<double>(ct.first) / static_cast<double>(ct.second);
  }
  if (!rep.per_seed.empty()) {
    double sum = 0;
    for (const auto& [_, a] : rep.per_seed) sum += a;
    rep.accuracy_mean = sum / static_cast<double>(rep.per_seed.size());
    double var = 0;
    for (const auto& [_, a] : rep.per_seed) var += (a - rep.accuracy_mean) * (a - rep.accuracy_mean);
    rep.accuracy_std = std::sqrt(var / static_cast<double>(rep.per_seed.size()));
  }
  for (const auto& [key, ct] : by_concept)
    rep.per_concept[key] = static_cast<double>(ct.first) / static_cast<double>(ct.second);
  for (const auto& [k, counts] : positions) {
    double total = 0;
    for (auto n : counts) total += static_cast<double>(n);
    std::vector<double> h;
    for (auto n : counts) h.push_back(static_cast<double>(n) / total);
    rep.position_bias[k] = std::move(h);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Evaluation

struct EvalOptions {
  std::vector<std::uint64_t> seeds{1, 2, 3};
  double threshold = 0.7;
  text::Tokenizer tokenizer = text::Tokenizer::punct;
  std::size_t max_in_flight = 4;
  std::string target_language = "the target language";
  double temperature = 0.0;
};

struct EvalRun {
  std::vector<EvalRecord> records;  // sorted by (seed, item_id)
  RunReport report;
};

namespace detail {

inline void sort_records(std::vector<EvalRecord>& records) {
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.seed, a.item_id) < std::tie(b.seed, b.item_id);
  });
}

inline EvalRecord base_record(const SelectionItem& item, Setting setting, const std::string& model,
                              std::uint64_t seed) {
  EvalRecord r;
  r.item_id = item.id;
  r.concept_key = item.concept_key;
  r.setting = setting;
  r.model = model;
  r.seed = seed;
  r.gold = item.gold;
  return r;
}

inline void settle(EvalRecord& r, ParsedAnswer answer) {
  r.parsed_prediction = std::move(answer.prediction);
  r.parse_status = answer.status;
  r.correct = r.parsed_prediction && *r.parsed_prediction == r.gold;
}

}  // namespace detail

/// Chat-model lexical selection, one pass per seed. A response without a
/// resolvable answer triggers exactly one retry with the enclosure reminder
/// appended; transport failures become `failed` records carrying the error.
/// `rules` maps concept to rule set and is required for rule settings.
inline EvalRun evaluate(const std::vector<SelectionItem>& items, ChatModel& model, Setting setting,
                        const std::map<LexemeKey, RuleSet>* rules, const EvalOptions& opts) {
  require(is_chat_setting(setting), std::string("evaluate: setting ") + to_string(setting) +
                                        " does not use a chat model");
  require(!uses_rules(setting) || rules, "evaluate: rule setting without rules");
  require(!opts.seeds.empty(), "evaluate: no seeds");
  const auto model_name = model.name();

  std::vector<EvalRecord> records(items.size() * opts.seeds.size());
  parallel_for(records.size(), opts.max_in_flight, [&](std::size_t n) {
    const auto seed = opts.seeds[n / items.size()];
    const auto& item = items[n % items.size()];
    auto& rec = records[n];
    rec = detail::base_record(item, setting, model_name, seed);

    const RuleSet* rs = nullptr;
    if (uses_rules(setting)) {
      auto it = rules->find(item.concept_key);
      if (it == rules->end())
        fail(ErrorKind::precondition, "no rules for concept " + item.concept_key.str());
      rs = &it->second;
    }
    const auto prompt = build_selection_prompt(item, setting, rs, seed, opts.target_language);
    rec.presented_order = prompt.presented_order;

    auto ask = [&](const std::string& user) {
      ++rec.attempts;
      ChatRequest req{model_name, make_messages(prompt.system, user, model.accepts_system_role()),
                      opts.temperature};
      rec.raw_output = model.complete(req);
      return parse_answer(rec.raw_output, item.candidates, opts.threshold, opts.tokenizer);
    };
    try {
      auto answer = ask(prompt.user);
      if (!answer.prediction) {
        answer = ask(retry_prompt(prompt.user, prompt.presented_order));
        if (answer.status == ParseStatus::exact) answer.status = ParseStatus::retry_exact;
        if (answer.status == ParseStatus::fuzzy) answer.status = ParseStatus::retry_fuzzy;
      }
      detail::settle(rec, std::move(answer));
    } catch (const TransportError& e) {
      rec.error = e.what();
      detail::settle(rec, {});
      log::warn("eval_transport_failure", {{"item", item.id}, {"seed", seed}, {"error", e.what()}});
    }
  });
  detail::sort_records(records);
  auto report = make_report(records, setting, model_name);
  return {std::move(records), std::move(report)};
}

/// Translation-system outputs keyed by item id. Items without a translation
/// are recorded as failures.
inline EvalRun evaluate_translations(const std::vector<SelectionItem>& items,
                                     const std::map<std::string, std::string>& translations,
                                     const std::string& system_name, const EvalOptions& opts) {
  require(!opts.seeds.empty(), "evaluate: no seeds");
  std::vector<EvalRecord> records;
  for (auto seed : opts.seeds) {
    for (const auto& item : items) {
      auto rec = detail::base_record(item, Setting::nmt, system_name, seed);
      rec.presented_order = item.candidates;
      auto it = translations.find(item.id);
      if (it == translations.end()) {
        rec.error = "no translation for item";
        detail::settle(rec, {});
      } else {
        rec.attempts = 1;
        rec.raw_output = it->second;
        detail::settle(rec, parse_translation(it->second, item.candidates, opts.threshold, opts.tokenizer));
      }
      records.push_back(std::move(rec));
    }
  }
  detail::sort_records(records);
  auto report = make_report(records, Setting::nmt, system_name);
  return {std::move(records), std::move(report)};
}

/// Predicts, per concept, the variation that is gold most often among the
/// given items (ties to the lexicographically first).
inline std::map<LexemeKey, std::string> majority_variations(const std::vector<SelectionItem>& items) {
  std::map<LexemeKey, std::map<std::string, std::size_t>> counts;
  for (const auto& i : items) counts[i.concept_key][i.gold]++;
  std::map<LexemeKey, std::string> out;
  for (const auto& [key, hist] : counts) {
    auto best = hist.begin();
    for (auto it = hist.begin(); it != hist.end(); ++it)
      if (it->second > best->second) best = it;
    out[key] = best->first;
  }
  return out;
}

inline EvalRun frequency_baseline(const std::vector<SelectionItem>& items, const EvalOptions& opts = {}) {
  const auto predictions = majority_variations(items);
  std::vector<EvalRecord> records;
  for (auto seed : opts.seeds) {
    for (const auto& item : items) {
      auto rec = detail::base_record(item, Setting::frequency_baseline, "frequency", seed);
      rec.presented_order = item.candidates;
      detail::settle(rec, {predictions.at(item.concept_key), ParseStatus::exact});
      records.push_back(std::move(rec));
    }
  }
  detail::sort_records(records);
  auto report = make_report(records, Setting::frequency_baseline, "frequency");
  return {std::move(records), std::move(report)};
}

inline std::map<std::string, std::string> read_translations(const std::filesystem::path& path) {
  std::map<std::string, std::string> out;
  jsonl::for_each(path, [&](const nlohmann::json& o, std::size_t line) {
    auto id = o.at("item_id").get<std::string>();
    if (!out.emplace(id, o.at("translation_text").get<std::string>()).second)
      fail(ErrorKind::format, path.string() + ":" + std::to_string(line) + ": duplicate item_id '" + id + "'");
  });
  return out;
}

}  // namespace lexsel
