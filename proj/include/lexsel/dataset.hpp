#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "lexsel/corpus.hpp"
#include "lexsel/error.hpp"
#include "lexsel/jsonl.hpp"
#include "lexsel/mine.hpp"
#include "lexsel/random.hpp"

namespace lexsel {

enum class ItemStatus { candidate, accepted, rejected };

inline const char* to_string(ItemStatus s) {
  switch (s) {
    case ItemStatus::candidate: return "candidate";
    case ItemStatus::accepted: return "accepted";
    case ItemStatus::rejected: return "rejected";
  }
  return "candidate";
}

inline ItemStatus parse_item_status(const std::string& s) {
  if (s == "candidate") return ItemStatus::candidate;
  if (s == "accepted") return ItemStatus::accepted;
  if (s == "rejected") return ItemStatus::rejected;
  fail(ErrorKind::format, "unknown item status '" + s + "'");
}

/// Judgment value an annotator records when the sentence does not determine
/// a single variation. Always counts as a non-gold vote.
inline constexpr const char* cannot_determine = "<cannot-determine>";

/// One lexical-selection instance. Candidates are stored in lexicographic
/// order; presentation order is decided by whoever shows the item.
struct SelectionItem {
  std::string id;
  LexemeKey concept_key;
  std::vector<std::string> source_tokens;
  std::optional<std::size_t> concept_index;
  std::vector<std::string> candidates;
  std::string gold;
  std::string pair_ref;
  ItemStatus status = ItemStatus::candidate;

  std::string source_text() const { return text::join(source_tokens, " "); }

  friend bool operator==(const SelectionItem&, const SelectionItem&) = default;
};

struct DatasetSplit {
  LanguagePair language_pair;
  std::vector<SelectionItem> items;
  std::string acceptance_rule;

  std::size_t accepted_count() const {
    return static_cast<std::size_t>(std::count_if(items.begin(), items.end(), [](const auto& i) {
      return i.status == ItemStatus::accepted;
    }));
  }

  double acceptance_fraction() const {
    return items.empty() ? 0.0
                         : static_cast<double>(accepted_count()) / static_cast<double>(items.size());
  }

  std::vector<SelectionItem> accepted() const {
    std::vector<SelectionItem> out;
    for (const auto& i : items)
      if (i.status == ItemStatus::accepted) out.push_back(i);
    return out;
  }
};

// ---------------------------------------------------------------------------

/// Keeps concepts whose every variation lies within `max_deviation` (absolute
/// probability) of the uniform 1/k. A deviation of exactly `max_deviation` is kept.
inline std::vector<Concept> uniformity_filter(const std::vector<Concept>& concepts,
                                              double max_deviation = 0.20) {
  constexpr double slack = 1e-12;  // binary representation of e.g. 0.7 - 0.5
  std::vector<Concept> out;
  for (const auto& c : concepts) {
    if (c.variations.size() < 2) continue;
    const double uniform = 1.0 / static_cast<double>(c.variations.size());
    const bool even = std::all_of(c.variations.begin(), c.variations.end(), [&](const Variation& v) {
      return std::abs(v.probability - uniform) <= max_deviation + slack;
    });
    if (even) out.push_back(c);
  }
  return out;
}

struct SampleOptions {
  std::size_t max_concepts = 20;
  std::size_t per_concept = 10;
  std::uint64_t seed = 0;
};

namespace detail {

struct Usable {
  std::string pair_id;
  std::string variation;
  std::size_t concept_index;
};

/// Pairs where the concept token is aligned to exactly one of its variations.
/// Pairs that exhibit two different variations are ambiguous and dropped.
inline std::vector<Usable> usable_sentences(const Concept& c, const CorpusIndex& index) {
  const std::set<std::string> vars = [&] {
    std::set<std::string> s;
    for (const auto& v : c.variations) s.insert(v.lemma);
    return s;
  }();
  std::set<std::string> ids;
  for (const auto& [var, refs] : c.example_refs)
    if (vars.count(var)) ids.insert(refs.begin(), refs.end());

  std::vector<Usable> out;
  for (const auto& id : ids) {
    const auto* p = index.find(id);
    if (!p) continue;
    std::set<std::string> seen;
    std::optional<std::size_t> first_idx;
    for (const auto& [i, j] : p->alignment) {
      const auto& s = p->source_tokens[i];
      if (s.lemma != c.lemma || s.pos != c.pos) continue;
      const auto& t = p->target_tokens[j].lemma;
      if (!vars.count(t)) continue;
      seen.insert(t);
      if (!first_idx) first_idx = i;
    }
    if (seen.size() == 1) out.push_back({id, *seen.begin(), *first_idx});
  }
  return out;
}

inline SelectionItem make_item(const Concept& c, const Usable& u, const CorpusIndex& index) {
  const auto& p = index.at(u.pair_id);
  SelectionItem item;
  item.id = c.lemma + "/" + c.pos + "/" + u.pair_id;
  item.concept_key = c.key();
  for (const auto& t : p.source_tokens) item.source_tokens.push_back(t.surface);
  item.concept_index = u.concept_index;
  item.candidates = c.variation_lemmas();
  std::sort(item.candidates.begin(), item.candidates.end());
  item.gold = u.variation;
  item.pair_ref = u.pair_id;
  return item;
}

}  // namespace detail

/// Samples up to `max_concepts` concepts and, for each, `per_concept` sentence
/// pairs with every variation represented as gold at least once. Coverage
/// wins over `per_concept` when a concept has more variations than slots.
inline std::vector<SelectionItem> sample_task(const std::vector<Concept>& concepts,
                                              const Corpus& corpus, const SampleOptions& opts) {
  const CorpusIndex index(corpus);
  std::vector<std::size_t> all(concepts.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  auto picked = Rng(derive_seed(opts.seed, "concepts")).sample(all, opts.max_concepts);
  std::sort(picked.begin(), picked.end());

  std::vector<SelectionItem> items;
  for (auto ci : picked) {
    const auto& c = concepts[ci];
    const auto usable = detail::usable_sentences(c, index);
    std::map<std::string, std::vector<std::size_t>> by_var;
    for (std::size_t u = 0; u < usable.size(); ++u) by_var[usable[u].variation].push_back(u);

    Rng rng(derive_seed(opts.seed, "items", c.lemma, c.pos));
    std::set<std::size_t> chosen;
    auto vars = c.variation_lemmas();
    std::sort(vars.begin(), vars.end());
    for (const auto& v : vars) {
      auto it = by_var.find(v);
      if (it == by_var.end() || it->second.empty())
        fail(ErrorKind::precondition, "concept '" + c.lemma + "/" + c.pos + "': variation '" + v +
                                          "' has no usable sentence pairs");
      chosen.insert(it->second[rng.below(it->second.size())]);
    }
    std::vector<std::size_t> rest;
    for (std::size_t u = 0; u < usable.size(); ++u)
      if (!chosen.count(u)) rest.push_back(u);
    const auto remaining = opts.per_concept > chosen.size() ? opts.per_concept - chosen.size() : 0;
    for (auto u : rng.sample(rest, remaining)) chosen.insert(u);

    std::vector<SelectionItem> concept_items;
    for (auto u : chosen) concept_items.push_back(detail::make_item(c, usable[u], index));
    std::sort(concept_items.begin(), concept_items.end(),
              [](const auto& a, const auto& b) { return a.id < b.id; });
    items.insert(items.end(), concept_items.begin(), concept_items.end());
  }
  return items;
}

struct BuildOptions {
  SampleOptions sample;
  double max_deviation = 0.20;
};

/// Uniformity filter (only when there are more concepts than can be sampled)
/// followed by sample_task.
inline std::vector<SelectionItem> build_dataset(const std::vector<Concept>& concepts,
                                                const Corpus& corpus, const BuildOptions& opts) {
  if (concepts.size() > opts.sample.max_concepts)
    return sample_task(uniformity_filter(concepts, opts.max_deviation), corpus, opts.sample);
  return sample_task(concepts, corpus, opts.sample);
}

/// True when the pair's target side contains the gold lemma.
inline bool gold_in_target(const SelectionItem& item, const CorpusIndex& index) {
  const auto* p = index.find(item.pair_ref);
  if (!p) return false;
  return std::any_of(p->target_tokens.begin(), p->target_tokens.end(),
                     [&](const AnnotatedToken& t) { return t.lemma == item.gold; });
}

struct FinalizeOptions {
  std::size_t min_annotators = 3;
};

/// Accepts an item iff strictly more than half of its judgments equal gold.
inline DatasetSplit finalize(std::vector<SelectionItem> items,
                             const std::map<std::string, std::vector<std::string>>& judgments,
                             const FinalizeOptions& opts = {}) {
  DatasetSplit split;
  split.acceptance_rule = "accepted iff strictly more than k/2 of k annotator judgments equal gold";
  for (auto& item : items) {
    auto it = judgments.find(item.id);
    if (it == judgments.end() || it->second.empty())
      fail(ErrorKind::precondition, "item '" + item.id + "' has no judgments");
    const auto& votes = it->second;
    if (votes.size() < opts.min_annotators)
      fail(ErrorKind::precondition, "item '" + item.id + "' has " + std::to_string(votes.size()) +
                                        " judgments; at least " +
                                        std::to_string(opts.min_annotators) + " required");
    const auto gold_votes = static_cast<std::size_t>(std::count(votes.begin(), votes.end(), item.gold));
    item.status = 2 * gold_votes > votes.size() ? ItemStatus::accepted : ItemStatus::rejected;
    split.items.push_back(std::move(item));
  }
  return split;
}

// ---------------------------------------------------------------------------
// JSONL

inline nlohmann::json to_json(const SelectionItem& i) {
  return {{"id", i.id},
          {"concept", {{"lemma", i.concept_key.lemma}, {"pos", i.concept_key.pos}}},
          {"source_text", i.source_text()},
          {"source_tokens", i.source_tokens},
          {"concept_index", i.concept_index ? nlohmann::json(*i.concept_index) : nlohmann::json()},
          {"candidates", i.candidates},
          {"gold", i.gold},
          {"pair_ref", i.pair_ref},
          {"status", to_string(i.status)}};
}

inline SelectionItem item_from_json(const nlohmann::json& o) {
  SelectionItem i;
  i.id = o.at("id").get<std::string>();
  i.concept_key = {o.at("concept").at("lemma").get<std::string>(),
                   o.at("concept").at("pos").get<std::string>()};
  if (o.contains("source_tokens"))
    i.source_tokens = o["source_tokens"].get<std::vector<std::string>>();
  else
    i.source_tokens = text::split_whitespace(o.at("source_text").get<std::string>());
  if (o.contains("concept_index") && o["concept_index"].is_number_unsigned())
    i.concept_index = o["concept_index"].get<std::size_t>();
  i.candidates = o.at("candidates").get<std::vector<std::string>>();
  std::sort(i.candidates.begin(), i.candidates.end());
  i.gold = o.at("gold").get<std::string>();
  i.pair_ref = o.value("pair_ref", "");
  i.status = parse_item_status(o.value("status", "candidate"));
  if (i.candidates.size() < 2)
    fail(ErrorKind::format, "item '" + i.id + "' has fewer than 2 candidates");
  if (std::find(i.candidates.begin(), i.candidates.end(), i.gold) == i.candidates.end())
    fail(ErrorKind::format, "item '" + i.id + "': gold '" + i.gold + "' not among candidates");
  return i;
}

inline void write_items(const std::filesystem::path& path, const std::vector<SelectionItem>& items) {
  std::vector<nlohmann::json> rows;
  for (const auto& i : items) rows.push_back(to_json(i));
  jsonl::write(path, rows);
}

inline std::vector<SelectionItem> read_items(const std::filesystem::path& path) {
  std::vector<SelectionItem> out;
  jsonl::for_each(path, [&](const nlohmann::json& o, std::size_t) { out.push_back(item_from_json(o)); });
  return out;
}

}  // namespace lexsel
