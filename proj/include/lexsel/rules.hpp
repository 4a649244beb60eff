#pragma once

#include <algorithm>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "lexsel/chat.hpp"
#include "lexsel/corpus.hpp"
#include "lexsel/annotate.hpp"
#include "lexsel/error.hpp"
#include "lexsel/hash.hpp"
#include "lexsel/jsonl.hpp"
#include "lexsel/log.hpp"
#include "lexsel/mine.hpp"
#include "lexsel/parallel.hpp"

namespace lexsel {

// ---------------------------------------------------------------------------
// Context sentences

struct ContextSentence {
  std::string pair_id;
  std::string text;
  std::size_t n_tokens = 0;

  friend bool operator==(const ContextSentence&, const ContextSentence&) = default;
};

/// variation lemma -> selected source sentences
using ContextMap = std::map<std::string, std::vector<ContextSentence>>;

struct ContextOptions {
  std::size_t per_variation = 50;
  std::size_t max_tokens = 50;  // strict: keep sentences with fewer tokens
};

/// For each variation, the longest source sentences shorter than
/// `max_tokens` whitespace tokens whose translation contains the variation;
/// ties broken by pair id. A variation with no qualifying sentence gets an
/// empty list and a warning.
inline ContextMap select_context_sentences(const Concept& c, const CorpusIndex& index,
                                           const ContextOptions& opts = {}) {
  ContextMap out;
  for (const auto& v : c.variations) {
    auto& list = out[v.lemma];
    auto refs_it = c.example_refs.find(v.lemma);
    if (refs_it != c.example_refs.end()) {
      std::set<std::string> ids(refs_it->second.begin(), refs_it->second.end());
      for (const auto& id : ids) {
        const auto& p = index.at(id);
        const bool present = std::any_of(
            p.target_tokens.begin(), p.target_tokens.end(), [&](const AnnotatedToken& t) {
              return t.lemma == v.lemma || text::case_fold(t.surface) == text::case_fold(v.lemma);
            });
        if (!present) continue;
        auto sentence = p.source_text();
        const auto n = text::split_whitespace(sentence).size();
        if (n >= opts.max_tokens) continue;
        list.push_back({id, std::move(sentence), n});
      }
    }
    std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) {
      if (a.n_tokens != b.n_tokens) return a.n_tokens > b.n_tokens;
      return a.pair_id < b.pair_id;
    });
    if (list.size() > opts.per_variation) list.resize(opts.per_variation);
    if (list.empty())
      log::warn("no_context_sentences", {{"concept", c.key().str()}, {"variation", v.lemma}});
  }
  return out;
}

inline ContextMap select_context_sentences(const Concept& c, const Corpus& corpus,
                                           const ContextOptions& opts = {}) {
  return select_context_sentences(c, CorpusIndex(corpus), opts);
}

// ---------------------------------------------------------------------------
// Prompt

struct RulePrompt {
  std::string system;
  std::string user;
  std::vector<std::string> variations;  // lexicographic
};

namespace detail {

inline std::string rule_format_requirement(const std::string& translations,
                                           const std::string& target_language) {
  return "Please only return a json with the following keys " + translations +
         " and no other text.\n"
         "For each key the value should be a string in English explaining how the meaning and "
         "usage of that " +
         target_language +
         " word is different from the others.\n"
         "The string should also include a brief example in " +
         target_language +
         " of the word being used with an English translation.\n"
         "Please include the transliteration from " +
         target_language + " to Latin characters if necessary.";
}

}  // namespace detail

/// Rule-generation prompt: the system turn fixes the JSON answer format keyed
/// by the variation lemmas; the user turn asks how the variations differ and
/// lists each variation's context sentences.
inline RulePrompt build_rule_prompt(const Concept& c, const ContextMap& context,
                                    const std::string& target_language,
                                    const std::string& source_language = "English") {
  require(!context.empty(), "build_rule_prompt: empty context");
  RulePrompt p;
  p.variations = c.variation_lemmas();
  std::sort(p.variations.begin(), p.variations.end());
  const auto translations = text::join(p.variations, ", ");
  p.system = detail::rule_format_requirement(translations, target_language);

  std::string sentences;
  for (const auto& v : p.variations) {
    sentences += "\n\n" + v + ":";
    auto it = context.find(v);
    if (it == context.end() || it->second.empty()) {
      sentences += "\n(no examples)";
      continue;
    }
    for (const auto& s : it->second) sentences += "\n- " + s.text;
  }
  p.user = "When translating the concept \"" + c.lemma + "\" from " + source_language + " to " +
           target_language + ", what is the difference in meaning between " + translations +
           " and in which contexts should they be used?\n"
           "Here are sentences where each word is used in-context to help you:" +
           sentences;
  return p;
}

// ---------------------------------------------------------------------------
// Response parsing

/// Pulls one JSON object out of a model response. Accepted shapes: a bare
/// object, exactly one fenced code block holding an object, or one object
/// with prose before/after it. Anything else yields nullopt.
inline std::optional<nlohmann::json> extract_json_object(const std::string& response) {
  std::string body = response;
  const auto fence = body.find("```");
  if (fence != std::string::npos) {
    const auto close = body.find("```", fence + 3);
    if (close == std::string::npos) return std::nullopt;
    if (body.find("```", close + 3) != std::string::npos) return std::nullopt;  // several blocks
    body = body.substr(fence + 3, close - fence - 3);
    const auto nl = body.find('\n');
    if (nl != std::string::npos && text::trim(body.substr(0, nl)).find('{') == std::string_view::npos)
      body = body.substr(nl + 1);  // language tag such as "json"
  }
  const auto open = body.find('{');
  const auto last = body.rfind('}');
  if (open == std::string::npos || last == std::string::npos || last < open) return std::nullopt;
  try {
    auto j = nlohmann::json::parse(body.substr(open, last - open + 1));
    if (!j.is_object()) return std::nullopt;
    return j;
  } catch (const nlohmann::json::parse_error&) {
    return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// Rule sets

enum class RuleLabel { correct, incorrect, unlabeled };

inline const char* to_string(RuleLabel l) {
  switch (l) {
    case RuleLabel::correct: return "correct";
    case RuleLabel::incorrect: return "incorrect";
    case RuleLabel::unlabeled: return "unlabeled";
  }
  return "unlabeled";
}

inline RuleLabel parse_rule_label(const std::string& s) {
  if (s == "correct") return RuleLabel::correct;
  if (s == "incorrect") return RuleLabel::incorrect;
  if (s == "unlabeled") return RuleLabel::unlabeled;
  fail(ErrorKind::format, "unknown rule label '" + s + "'");
}

struct RuleSet {
  LexemeKey concept_key;
  std::map<std::string, std::string> rules;  // variation -> description
  std::string generator;
  std::string raw_response_ref;
  std::optional<std::map<std::string, RuleLabel>> verified;

  friend bool operator==(const RuleSet&, const RuleSet&) = default;
};

inline nlohmann::json to_json(const RuleSet& r) {
  nlohmann::json verified;
  if (r.verified) {
    verified = nlohmann::json::object();
    for (const auto& [v, l] : *r.verified) verified[v] = to_string(l);
  }
  return {{"concept", {{"lemma", r.concept_key.lemma}, {"pos", r.concept_key.pos}}},
          {"generator", r.generator},
          {"rules", r.rules},
          {"raw_response_ref", r.raw_response_ref},
          {"verified", verified}};
}

inline RuleSet ruleset_from_json(const nlohmann::json& o) {
  RuleSet r;
  r.concept_key = {o.at("concept").at("lemma").get<std::string>(),
                   o.at("concept").at("pos").get<std::string>()};
  r.rules = o.at("rules").get<std::map<std::string, std::string>>();
  r.generator = o.value("generator", "");
  r.raw_response_ref = o.value("raw_response_ref", "");
  if (o.contains("verified") && o["verified"].is_object()) {
    std::map<std::string, RuleLabel> v;
    for (const auto& [k, l] : o["verified"].items()) v[k] = parse_rule_label(l.get<std::string>());
    r.verified = std::move(v);
  }
  return r;
}

inline void write_rules(const std::filesystem::path& path, const std::vector<RuleSet>& rules) {
  std::vector<nlohmann::json> rows;
  for (const auto& r : rules) rows.push_back(to_json(r));
  jsonl::write(path, rows);
}

inline std::map<LexemeKey, RuleSet> read_rules(const std::filesystem::path& path) {
  std::map<LexemeKey, RuleSet> out;
  jsonl::for_each(path, [&](const nlohmann::json& o, std::size_t) {
    auto r = ruleset_from_json(o);
    out[r.concept_key] = std::move(r);
  });
  return out;
}

/// Raised when the model fails the JSON contract twice; carries both raw
/// responses.
class GenerationError : public Error {
 public:
  GenerationError(const std::string& message, std::vector<std::string> raw)
      : Error(ErrorKind::generation, message), raw_responses_(std::move(raw)) {}

  const std::vector<std::string>& raw_responses() const { return raw_responses_; }

 private:
  std::vector<std::string> raw_responses_;
};

// ---------------------------------------------------------------------------
// Cache

/// Content-addressed store of generation records keyed by
/// sha256(model, concept, prompt hash). Concurrent requests for the same key
/// share one computation; distinct keys proceed independently. With a
/// directory, records persist as <dir>/<key>.json.
class RuleCache {
 public:
  RuleCache() = default;
  explicit RuleCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(*dir_);
  }

  static std::string key_for(const std::string& model, const LexemeKey& concept_key,
                             const std::string& prompt_hash) {
    return sha256_hex(model + "\n" + concept_key.str() + "\n" + prompt_hash);
  }

  std::optional<std::filesystem::path> path_for(const std::string& key) const {
    if (!dir_) return std::nullopt;
    return *dir_ / (key + ".json");
  }

  template <typename Compute>
  nlohmann::json get_or_compute(const std::string& key, Compute&& compute) {
    std::shared_future<nlohmann::json> fut;
    std::promise<nlohmann::json> promise;
    bool owner = false;
    {
      std::lock_guard lock(mutex_);
      auto it = entries_.find(key);
      if (it != entries_.end()) {
        fut = it->second;
      } else if (auto p = path_for(key); p && std::filesystem::exists(*p)) {
        std::promise<nlohmann::json> ready;
        ready.set_value(jsonl::read_json(*p));
        fut = ready.get_future().share();
        entries_.emplace(key, fut);
      } else {
        fut = promise.get_future().share();
        entries_.emplace(key, fut);
        owner = true;
      }
    }
    if (!owner) return fut.get();
    try {
      auto record = compute();
      if (auto p = path_for(key)) jsonl::write_json(*p, record);
      promise.set_value(record);
    } catch (...) {
      {
        std::lock_guard lock(mutex_);
        entries_.erase(key);
      }
      promise.set_exception(std::current_exception());
    }
    return fut.get();
  }

 private:
  std::optional<std::filesystem::path> dir_;
  std::mutex mutex_;
  std::map<std::string, std::shared_future<nlohmann::json>> entries_;
};

// ---------------------------------------------------------------------------
// Generation

struct RuleOptions {
  std::string target_language = "the target language";
  std::string source_language = "English";
  ContextOptions context;
  double temperature = 0.0;
};

namespace detail {

inline std::optional<std::map<std::string, std::string>> parse_rules(
    const std::string& raw, const std::vector<std::string>& variations) {
  auto obj = extract_json_object(raw);
  if (!obj) return std::nullopt;
  if (obj->size() != variations.size()) return std::nullopt;
  std::map<std::string, std::string> rules;
  for (const auto& v : variations) {
    auto it = obj->find(v);
    if (it == obj->end() || !it->is_string()) return std::nullopt;
    rules[v] = it->get<std::string>();
  }
  return rules;
}

}  // namespace detail

/// One prompt per concept; on a parse or key-set failure the request is sent
/// once more with the format requirement restated. Successful generations
/// are cached, so a cached (model, concept, prompt) never reaches the model.
inline RuleSet generate_rules(ChatModel& model, const Concept& c, const CorpusIndex& index,
                              const RuleOptions& opts, RuleCache& cache) {
  const auto context = select_context_sentences(c, index, opts.context);
  const auto prompt = build_rule_prompt(c, context, opts.target_language, opts.source_language);
  const auto prompt_hash = sha256_hex(prompt.system + '\0' + prompt.user);
  const auto key = RuleCache::key_for(model.name(), c.key(), prompt_hash);

  auto record = cache.get_or_compute(key, [&] {
    ChatRequest req{model.name(), make_messages(prompt.system, prompt.user, model.accepts_system_role()),
                    opts.temperature};
    std::vector<std::string> raws{model.complete(req)};
    auto rules = detail::parse_rules(raws.back(), prompt.variations);
    if (!rules) {
      const auto retry_user =
          prompt.user + "\n\nPlease only return a json with the following keys " +
          text::join(prompt.variations, ", ") + " and no other text.";
      req.messages = make_messages(prompt.system, retry_user, model.accepts_system_role());
      raws.push_back(model.complete(req));
      rules = detail::parse_rules(raws.back(), prompt.variations);
    }
    if (!rules)
      throw GenerationError("rule generation for " + c.key().str() +
                                " failed: response is not a JSON object keyed by the variations",
                            raws);
    return nlohmann::json{{"model", model.name()},
                          {"concept", {{"lemma", c.lemma}, {"pos", c.pos}}},
                          {"prompt_hash", prompt_hash},
                          {"raw_responses", raws},
                          {"rules", *rules}};
  });

  RuleSet rs;
  rs.concept_key = c.key();
  rs.rules = record.at("rules").get<std::map<std::string, std::string>>();
  rs.generator = record.at("model").get<std::string>();
  auto p = cache.path_for(key);
  rs.raw_response_ref = p ? p->string() : key;
  return rs;
}

inline RuleSet generate_rules(ChatModel& model, const Concept& c, const Corpus& corpus,
                              const RuleOptions& opts, RuleCache& cache) {
  return generate_rules(model, c, CorpusIndex(corpus), opts, cache);
}

struct RuleBatch {
  std::vector<RuleSet> rules;  // input concept order, failures omitted
  std::vector<std::pair<LexemeKey, std::string>> failures;
};

/// Generates rules for many concepts with at most `max_in_flight` concurrent
/// model calls. Per-concept failures are collected, not thrown.
inline RuleBatch generate_rules_batch(ChatModel& model, const std::vector<Concept>& concepts,
                                      const Corpus& corpus, const RuleOptions& opts, RuleCache& cache,
                                      std::size_t max_in_flight = 4) {
  const CorpusIndex index(corpus);
  std::vector<std::optional<RuleSet>> results(concepts.size());
  std::vector<std::string> errors(concepts.size());
  parallel_for(concepts.size(), max_in_flight, [&](std::size_t i) {
    try {
      results[i] = generate_rules(model, concepts[i], index, opts, cache);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });
  RuleBatch batch;
  for (std::size_t i = 0; i < concepts.size(); ++i) {
    if (results[i]) {
      batch.rules.push_back(std::move(*results[i]));
    } else {
      log::warn("rule_generation_failed", {{"concept", concepts[i].key().str()}, {"error", errors[i]}});
      batch.failures.emplace_back(concepts[i].key(), errors[i]);
    }
  }
  return batch;
}

/// Turns rule sets into verification items for annotators.
inline std::vector<RuleToVerify> rules_to_verify(const std::vector<RuleSet>& sets) {
  std::vector<RuleToVerify> out;
  for (const auto& s : sets)
    for (const auto& [variation, rule] : s.rules) out.push_back({s.concept_key, variation, rule});
  return out;
}

}  // namespace lexsel
