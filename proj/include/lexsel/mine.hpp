#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lexsel/corpus.hpp"
#include "lexsel/error.hpp"
#include "lexsel/jsonl.hpp"
#include "lexsel/log.hpp"

namespace lexsel {

/// Source lexeme key <lemma, POS>.
struct LexemeKey {
  std::string lemma;
  std::string pos;

  std::string str() const { return lemma + "/" + pos; }

  friend auto operator<=>(const LexemeKey&, const LexemeKey&) = default;
};

/// Occurrence statistics of one target lemma aligned to a source lexeme.
struct VariationStats {
  std::uint64_t count = 0;
  /// Source sense id -> occurrences; occurrences without a sense use "".
  std::map<std::string, std::uint64_t> senses;
  /// Pair ids, one entry per pair (repeat links within a pair collapse).
  std::vector<std::string> pair_ids;
};

using LexemeMap = std::map<LexemeKey, std::map<std::string, VariationStats>>;

struct Variation {
  std::string lemma;
  std::uint64_t count = 0;
  double probability = 0.0;
  double majority_sense_fraction = 1.0;

  friend bool operator==(const Variation&, const Variation&) = default;
};

struct Concept {
  std::string lemma;
  std::string pos;
  std::vector<Variation> variations;  // lemma order
  double entropy = 0.0;               // nats
  std::optional<std::string> majority_sense;
  /// variation lemma -> pair ids in which it is aligned to the concept.
  std::map<std::string, std::vector<std::string>> example_refs;

  LexemeKey key() const { return {lemma, pos}; }

  std::vector<std::string> variation_lemmas() const {
    std::vector<std::string> out;
    for (const auto& v : variations) out.push_back(v.lemma);
    return out;
  }

  friend bool operator==(const Concept&, const Concept&) = default;
};

/// Counts, for every alignment link (i, j), source <lemma_i, pos_i> mapping
/// to target lemma_j.
inline LexemeMap build_lexeme_map(const Corpus& corpus) {
  if (corpus.link_count() == 0)
    fail(ErrorKind::precondition,
         "corpus has no alignment links; run `lexsel align` or attach Pharaoh alignments first");
  LexemeMap map;
  for (const auto& p : corpus.pairs) {
    for (const auto& [i, j] : p.alignment) {
      const auto& s = p.source_tokens.at(i);
      const auto& t = p.target_tokens.at(j);
      auto& stats = map[{s.lemma, s.pos}][t.lemma];
      ++stats.count;
      ++stats.senses[s.sense_id.value_or("")];
      if (stats.pair_ids.empty() || stats.pair_ids.back() != p.id) stats.pair_ids.push_back(p.id);
    }
  }
  return map;
}

/// counts[i] / sum(counts).
inline double variation_probability(std::span<const std::uint64_t> counts, std::size_t i) {
  require(i < counts.size(), "variation_probability: index out of range");
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  require(total > 0, "variation_probability: counts sum to zero");
  return static_cast<double>(counts[i]) / static_cast<double>(total);
}

/// Shannon entropy in nats of the distribution given by positive counts.
inline double concept_entropy(std::span<const std::uint64_t> counts) {
  require(!counts.empty(), "concept_entropy: empty counts");
  double h = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    require(counts[i] > 0, "concept_entropy: counts must be positive");
    const double p = variation_probability(counts, i);
    h -= p * std::log(p);
  }
  return h;
}

struct MineOptions {
  std::uint64_t min_count = 50;
  std::size_t min_variations = 2;
  double entropy_threshold = 0.69;  // keep if H >= threshold
  bool sense_filter = true;
  /// A variation survives the sense filter when at least this fraction of its
  /// occurrences carry the concept's majority sense.
  double sense_keep_fraction = 0.5;
};

namespace detail {

using VariationSet = std::map<std::string, const VariationStats*>;

inline std::vector<std::uint64_t> counts_of(const VariationSet& vs) {
  std::vector<std::uint64_t> c;
  for (const auto& [_, s] : vs) c.push_back(s->count);
  return c;
}

/// Count filter then entropy filter; returns false when the tuple is dropped.
inline bool count_and_entropy(VariationSet& vs, const MineOptions& opts, double& entropy) {
  std::erase_if(vs, [&](const auto& kv) { return kv.second->count < opts.min_count; });
  if (vs.size() < opts.min_variations || vs.empty()) return false;
  entropy = concept_entropy(counts_of(vs));
  return entropy >= opts.entropy_threshold;
}

inline std::optional<std::string> majority_sense(const VariationSet& vs) {
  std::map<std::string, std::uint64_t> hist;
  for (const auto& [_, s] : vs)
    for (const auto& [sense, n] : s->senses)
      if (!sense.empty()) hist[sense] += n;
  std::optional<std::string> best;
  std::uint64_t best_n = 0;
  for (const auto& [sense, n] : hist) {
    if (n > best_n) {
      best = sense;
      best_n = n;
    }
  }
  return best;
}

inline double sense_fraction(const VariationStats& s, const std::string& sense) {
  auto it = s.senses.find(sense);
  const auto n = it == s.senses.end() ? 0 : it->second;
  return static_cast<double>(n) / static_cast<double>(s.count);
}

}  // namespace detail

/// Concepts whose source lexeme maps to several frequent, evenly used target
/// lemmas. Filters run in order: per-variation count, entropy on the
/// renormalized survivors, then (optionally) the polysemy filter followed by
/// a second count/entropy pass. Output is sorted by entropy descending, then
/// lemma and POS.
inline std::vector<Concept> extract_concepts(const Corpus& corpus, const MineOptions& opts = {}) {
  const auto map = build_lexeme_map(corpus);

  bool sense_filter = opts.sense_filter;
  if (sense_filter) {
    bool any_sense = false;
    for (const auto& p : corpus.pairs)
      for (const auto& t : p.source_tokens)
        if (t.sense_id) {
          any_sense = true;
          break;
        }
    if (!any_sense) {
      log::warn("sense_filter_skipped", {{"reason", "no source token carries a sense id"}});
      sense_filter = false;
    }
  }

  std::vector<Concept> out;
  for (const auto& [key, targets] : map) {
    detail::VariationSet vs;
    for (const auto& [lemma, stats] : targets) vs.emplace(lemma, &stats);

    double entropy = 0.0;
    if (!detail::count_and_entropy(vs, opts, entropy)) continue;

    std::optional<std::string> sense;
    std::map<std::string, double> fractions;
    if (sense_filter) {
      sense = detail::majority_sense(vs);
      if (sense) {
        for (const auto& [lemma, s] : vs) fractions[lemma] = detail::sense_fraction(*s, *sense);
        std::erase_if(vs, [&](const auto& kv) {
          return fractions[kv.first] < opts.sense_keep_fraction;
        });
        if (!detail::count_and_entropy(vs, opts, entropy)) continue;
      }
    }

    Concept c;
    c.lemma = key.lemma;
    c.pos = key.pos;
    c.entropy = entropy;
    c.majority_sense = sense;
    const auto counts = detail::counts_of(vs);
    std::size_t i = 0;
    for (const auto& [lemma, s] : vs) {
      Variation v;
      v.lemma = lemma;
      v.count = s->count;
      v.probability = variation_probability(counts, i++);
      v.majority_sense_fraction = sense ? fractions[lemma] : 1.0;
      c.variations.push_back(std::move(v));
      c.example_refs[lemma] = s->pair_ids;
    }
    out.push_back(std::move(c));
  }

  std::sort(out.begin(), out.end(), [](const Concept& a, const Concept& b) {
    if (a.entropy != b.entropy) return a.entropy > b.entropy;
    if (a.lemma != b.lemma) return a.lemma < b.lemma;
    return a.pos < b.pos;
  });
  return out;
}

// ---------------------------------------------------------------------------
// JSONL

inline nlohmann::json to_json(const Concept& c) {
  nlohmann::json vars = nlohmann::json::array();
  for (const auto& v : c.variations)
    vars.push_back({{"lemma", v.lemma},
                    {"count", v.count},
                    {"probability", v.probability},
                    {"majority_sense_fraction", v.majority_sense_fraction}});
  return {{"lemma", c.lemma},
          {"pos", c.pos},
          {"entropy", c.entropy},
          {"variations", vars},
          {"majority_sense", c.majority_sense ? nlohmann::json(*c.majority_sense) : nlohmann::json()},
          {"example_refs", c.example_refs}};
}

inline Concept concept_from_json(const nlohmann::json& o) {
  Concept c;
  c.lemma = o.at("lemma").get<std::string>();
  c.pos = o.at("pos").get<std::string>();
  c.entropy = o.value("entropy", 0.0);
  for (const auto& v : o.at("variations")) {
    Variation var;
    var.lemma = v.at("lemma").get<std::string>();
    var.count = v.value("count", std::uint64_t{0});
    var.probability = v.value("probability", 0.0);
    var.majority_sense_fraction = v.value("majority_sense_fraction", 1.0);
    c.variations.push_back(std::move(var));
  }
  if (o.contains("majority_sense") && o["majority_sense"].is_string())
    c.majority_sense = o["majority_sense"].get<std::string>();
  if (o.contains("example_refs"))
    c.example_refs = o["example_refs"].get<std::map<std::string, std::vector<std::string>>>();
  return c;
}

inline void write_concepts(const std::filesystem::path& path, const std::vector<Concept>& concepts) {
  std::vector<nlohmann::json> rows;
  for (const auto& c : concepts) rows.push_back(to_json(c));
  jsonl::write(path, rows);
}

inline std::vector<Concept> read_concepts(const std::filesystem::path& path) {
  std::vector<Concept> out;
  jsonl::for_each(path, [&](const nlohmann::json& o, std::size_t) {
    out.push_back(concept_from_json(o));
  });
  return out;
}

}  // namespace lexsel
