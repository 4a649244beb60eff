#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "lexsel/corpus.hpp"
#include "lexsel/error.hpp"
#include "lexsel/jsonl.hpp"

namespace lexsel {

/// Lexical translation table p(target_lemma | source_lemma) with a NULL
/// source row. Ordered maps keep serialization deterministic.
struct TranslationTable {
  static constexpr const char* null_token = "<NULL>";
  static constexpr double floor_probability = 1e-12;

  std::map<std::string, std::map<std::string, double>> probs;

  /// Probability with the unknown-pair floor applied.
  double prob(const std::string& source, const std::string& target) const {
    auto row = probs.find(source);
    if (row == probs.end()) return floor_probability;
    auto cell = row->second.find(target);
    if (cell == row->second.end() || cell->second < floor_probability) return floor_probability;
    return cell->second;
  }

  friend bool operator==(const TranslationTable&, const TranslationTable&) = default;
};

/// Observer called after each EM iteration with the 1-based iteration number,
/// the re-estimated table, and the corpus log-likelihood under that table.
using Model1Observer = std::function<void(int, const TranslationTable&, double)>;

namespace detail {

/// Interned corpus view for EM: lemma ids per sentence, NULL is source id 0.
struct Model1Data {
  std::vector<std::string> source_vocab{TranslationTable::null_token};
  std::vector<std::string> target_vocab;
  std::vector<std::vector<std::uint32_t>> source;  // without NULL
  std::vector<std::vector<std::uint32_t>> target;
};

inline Model1Data intern(const Corpus& corpus) {
  Model1Data d;
  std::unordered_map<std::string, std::uint32_t> s_ids{{TranslationTable::null_token, 0}};
  std::unordered_map<std::string, std::uint32_t> t_ids;
  auto id_of = [](auto& ids, auto& vocab, const std::string& w) {
    auto [it, inserted] = ids.emplace(w, static_cast<std::uint32_t>(vocab.size()));
    if (inserted) vocab.push_back(w);
    return it->second;
  };
  for (const auto& p : corpus.pairs) {
    std::vector<std::uint32_t> s, t;
    for (const auto& tok : p.source_tokens) s.push_back(id_of(s_ids, d.source_vocab, tok.lemma));
    for (const auto& tok : p.target_tokens) t.push_back(id_of(t_ids, d.target_vocab, tok.lemma));
    d.source.push_back(std::move(s));
    d.target.push_back(std::move(t));
  }
  return d;
}

using SparseRows = std::vector<std::unordered_map<std::uint32_t, double>>;

inline double log_likelihood(const Model1Data& d, const SparseRows& t) {
  double ll = 0.0;
  for (std::size_t k = 0; k < d.source.size(); ++k) {
    const auto& src = d.source[k];
    for (auto f : d.target[k]) {
      double s = t[0].at(f);
      for (auto e : src) s += t[e].at(f);
      ll += std::log(s / static_cast<double>(src.size() + 1));
    }
  }
  return ll;
}

inline TranslationTable to_table(const Model1Data& d, const SparseRows& t) {
  TranslationTable table;
  for (std::size_t e = 0; e < t.size(); ++e) {
    auto& row = table.probs[d.source_vocab[e]];
    for (const auto& [f, p] : t[e]) row[d.target_vocab[f]] = p;
  }
  return table;
}

}  // namespace detail

/// IBM Model 1 trained by EM on lemmas. A NULL token is prepended to every
/// source sentence; each source row starts uniform over the target lemmas it
/// co-occurs with.
inline TranslationTable train_model1(const Corpus& corpus, int iterations,
                                     const Model1Observer& observer = {}) {
  require(iterations >= 1, "train_model1: iterations must be >= 1");
  require(!corpus.pairs.empty(), "train_model1: corpus is empty");
  const auto d = detail::intern(corpus);

  detail::SparseRows t(d.source_vocab.size());
  for (std::size_t k = 0; k < d.source.size(); ++k) {
    for (auto f : d.target[k]) {
      t[0][f] = 0.0;
      for (auto e : d.source[k]) t[e][f] = 0.0;
    }
  }
  for (auto& row : t) {
    const double u = row.empty() ? 0.0 : 1.0 / static_cast<double>(row.size());
    for (auto& [f, p] : row) p = u;
  }

  for (int it = 1; it <= iterations; ++it) {
    detail::SparseRows counts(t.size());
    std::vector<double> totals(t.size(), 0.0);
    for (std::size_t k = 0; k < d.source.size(); ++k) {
      const auto& src = d.source[k];
      for (auto f : d.target[k]) {
        double denom = t[0][f];
        for (auto e : src) denom += t[e][f];
        auto credit = [&](std::uint32_t e) {
          const double c = t[e][f] / denom;
          counts[e][f] += c;
          totals[e] += c;
        };
        credit(0);
        for (auto e : src) credit(e);
      }
    }
    for (std::size_t e = 0; e < t.size(); ++e) {
      if (totals[e] <= 0.0) continue;
      for (auto& [f, p] : t[e]) {
        auto c = counts[e].find(f);
        p = c == counts[e].end() ? 0.0 : c->second / totals[e];
      }
    }
    if (observer) observer(it, detail::to_table(d, t), detail::log_likelihood(d, t));
  }
  return detail::to_table(d, t);
}

/// Log-likelihood of a corpus under a table, with the uniform 1/(l+1)
/// alignment prior of Model 1.
inline double model1_log_likelihood(const TranslationTable& table, const Corpus& corpus) {
  double ll = 0.0;
  for (const auto& p : corpus.pairs) {
    const double l1 = static_cast<double>(p.source_tokens.size() + 1);
    for (const auto& f : p.target_tokens) {
      double s = table.prob(TranslationTable::null_token, f.lemma);
      for (const auto& e : p.source_tokens) s += table.prob(e.lemma, f.lemma);
      ll += std::log(s / l1);
    }
  }
  return ll;
}

/// One link per target token to its most probable source token. NULL takes
/// part in the argmax at the lowest position, so a NULL win (including ties
/// with NULL) leaves the target token unaligned; remaining ties go to the
/// smallest source index.
inline Alignment align_pair(const TranslationTable& table, const SentencePair& pair) {
  Alignment links;
  for (std::size_t j = 0; j < pair.target_tokens.size(); ++j) {
    const auto& f = pair.target_tokens[j].lemma;
    double best = table.prob(TranslationTable::null_token, f);
    std::optional<std::size_t> best_i;
    for (std::size_t i = 0; i < pair.source_tokens.size(); ++i) {
      const double p = table.prob(pair.source_tokens[i].lemma, f);
      if (p > best) {
        best = p;
        best_i = i;
      }
    }
    if (best_i) links.emplace(*best_i, j);
  }
  return links;
}

inline Corpus align_corpus(const TranslationTable& table, Corpus corpus) {
  for (auto& p : corpus.pairs) p.alignment = align_pair(table, p);
  return corpus;
}

// ---------------------------------------------------------------------------
// Serialization: {source, target, prob} triples, prob >= 1e-6 only.

inline constexpr double ttable_min_serialized_prob = 1e-6;

inline void write_ttable(const std::filesystem::path& path, const TranslationTable& table) {
  std::vector<nlohmann::json> rows;
  for (const auto& [s, row] : table.probs)
    for (const auto& [t, p] : row)
      if (p >= ttable_min_serialized_prob) rows.push_back({{"source", s}, {"target", t}, {"prob", p}});
  jsonl::write(path, rows);
}

inline TranslationTable read_ttable(const std::filesystem::path& path) {
  TranslationTable table;
  jsonl::for_each(path, [&](const nlohmann::json& o, std::size_t) {
    table.probs[o.at("source").get<std::string>()][o.at("target").get<std::string>()] =
        o.at("prob").get<double>();
  });
  return table;
}

}  // namespace lexsel
