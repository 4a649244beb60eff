#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "lexsel/corpus.hpp"
#include "lexsel/mine.hpp"
#include "lexsel/random.hpp"

namespace lexsel::synth {

/// Generates parallel corpora with known concept variations and exact
/// alignments, for recovery tests of the miner.
struct Options {
  std::uint64_t seed = 7;
  std::size_t concepts = 12;        ///< planted concepts, 2-4 variations each
  std::size_t min_pairs = 5000;     ///< padded with filler-only pairs
  std::uint64_t min_occurrences = 60;
  std::uint64_t max_occurrences = 90;
  std::size_t filler_vocab = 400;
  std::string source_lang = "en";
  std::string target_lang = "xx";
};

struct PlantedConcept {
  LexemeKey key;
  /// Variations the miner is expected to emit, with their exact counts.
  std::map<std::string, std::uint64_t> counts;
};

/// Lexemes that look like concepts at some stage but must be filtered out.
struct Distractor {
  LexemeKey key;
  std::string reason;  // "count", "entropy", "polysemy", "single"
};

struct SynthCorpus {
  Corpus corpus;
  std::vector<PlantedConcept> planted;
  std::vector<Distractor> distractors;
};

namespace detail {

class WordMaker {
 public:
  explicit WordMaker(Rng& rng) : rng_(rng) {}

  std::string make(std::size_t syllables) {
    static const char* onsets[] = {"b", "d", "f", "g", "h", "k", "l", "m", "n", "p",
                                   "r", "s", "t", "v", "z", "kh", "sh", "ch", "th", "dr"};
    static const char* nuclei[] = {"a", "e", "i", "o", "u", "ai", "ou", "ei"};
    while (true) {
      std::string w;
      for (std::size_t i = 0; i < syllables; ++i) {
        w += onsets[rng_.below(std::size(onsets))];
        w += nuclei[rng_.below(std::size(nuclei))];
      }
      if (used_.insert(w).second) return w;
    }
  }

 private:
  Rng& rng_;
  std::set<std::string> used_;
};

struct Occurrence {
  LexemeKey source;
  std::string target;
  std::optional<std::string> sense;
};

}  // namespace detail

inline SynthCorpus generate(const Options& opts = {}) {
  Rng rng(opts.seed);
  detail::WordMaker words(rng);
  SynthCorpus out;
  out.corpus.language_pair = {opts.source_lang, opts.target_lang};

  std::vector<std::pair<std::string, std::string>> fillers;  // source, target
  for (std::size_t i = 0; i < opts.filler_vocab; ++i) fillers.emplace_back(words.make(2), words.make(2));

  std::vector<detail::Occurrence> occurrences;
  auto emit = [&](const LexemeKey& key, const std::string& target, std::uint64_t n,
                  const std::optional<std::string>& sense) {
    for (std::uint64_t k = 0; k < n; ++k) occurrences.push_back({key, target, sense});
  };
  auto draw_count = [&] {
    return opts.min_occurrences + rng.below(opts.max_occurrences - opts.min_occurrences + 1);
  };

  static const char* pos_cycle[] = {"NOUN", "VERB", "ADJ"};
  for (std::size_t c = 0; c < opts.concepts; ++c) {
    PlantedConcept pc;
    pc.key = {words.make(3), pos_cycle[c % 3]};
    const std::string sense = pc.key.lemma + "%1:00::";
    const std::size_t k = 2 + c % 3;
    const auto base = draw_count();
    for (std::size_t v = 0; v < k; ++v) {
      // Two-way concepts stay near uniform so they clear the entropy bar.
      const auto n = k == 2 ? base + rng.below(3) : draw_count();
      const auto target = words.make(3);
      pc.counts[target] = n;
      emit(pc.key, target, n, sense);
    }
    out.planted.push_back(pc);
  }

  // Polysemous lexeme whose minority-sense translation is removed, leaving a
  // valid two-way concept.
  {
    PlantedConcept pc;
    pc.key = {words.make(3), "NOUN"};
    const auto a = words.make(3), b = words.make(3), other = words.make(3);
    pc.counts[a] = 80;
    pc.counts[b] = 80;
    emit(pc.key, a, 80, pc.key.lemma + "%1:06::");
    emit(pc.key, b, 80, pc.key.lemma + "%1:06::");
    emit(pc.key, other, 75, pc.key.lemma + "%1:25::");
    out.planted.push_back(pc);
  }

  // Distractors.
  {
    LexemeKey key{words.make(3), "NOUN"};  // two senses, one translation each
    emit(key, words.make(3), 110, key.lemma + "%1:06::");
    emit(key, words.make(3), 100, key.lemma + "%1:25::");
    out.distractors.push_back({key, "polysemy"});
  }
  {
    LexemeKey key{words.make(3), "NOUN"};
    emit(key, words.make(3), 200, key.lemma + "%1:00::");
    emit(key, words.make(3), 40, key.lemma + "%1:00::");
    out.distractors.push_back({key, "count"});
  }
  {
    LexemeKey key{words.make(3), "VERB"};
    emit(key, words.make(3), 450, key.lemma + "%2:00::");
    emit(key, words.make(3), 50, key.lemma + "%2:00::");
    out.distractors.push_back({key, "entropy"});
  }
  {
    // Same lemma as the first planted concept under another POS.
    LexemeKey key{out.planted.front().key.lemma, "ADV"};
    emit(key, words.make(3), 120, key.lemma + "%4:00::");
    out.distractors.push_back({key, "single"});
  }

  rng.shuffle(occurrences);

  auto make_pair = [&](std::size_t id, const detail::Occurrence* occ) {
    const std::size_t n_fill = 3 + rng.below(8);
    std::vector<std::size_t> fill_idx;
    for (std::size_t i = 0; i < n_fill; ++i) fill_idx.push_back(rng.below(fillers.size()));

    SentencePair p;
    p.id = "synth:" + std::to_string(id);
    p.provenance = "synth";
    std::vector<std::string> tgt_words;
    std::vector<std::size_t> src_of_tgt;  // target position -> source position
    const std::size_t concept_pos = occ ? rng.below(n_fill + 1) : n_fill + 1;
    for (std::size_t i = 0, f = 0; i < n_fill + (occ ? 1 : 0); ++i) {
      AnnotatedToken t;
      t.index = i;
      if (occ && i == concept_pos) {
        t.surface = t.lemma = occ->source.lemma;
        t.pos = occ->source.pos;
        t.sense_id = occ->sense;
        tgt_words.push_back(occ->target);
      } else {
        const auto& [s, tr] = fillers[fill_idx[f++]];
        t.surface = t.lemma = s;
        t.pos = "X";
        tgt_words.push_back(tr);
      }
      src_of_tgt.push_back(i);
      p.source_tokens.push_back(std::move(t));
    }
    auto order = permutation(tgt_words.size(), rng.next());
    for (std::size_t j = 0; j < order.size(); ++j) {
      AnnotatedToken t;
      t.surface = t.lemma = tgt_words[order[j]];
      t.index = j;
      p.target_tokens.push_back(std::move(t));
      p.alignment.emplace(src_of_tgt[order[j]], j);
    }
    return p;
  };

  std::size_t id = 0;
  for (const auto& occ : occurrences) out.corpus.pairs.push_back(make_pair(id++, &occ));
  while (out.corpus.pairs.size() < opts.min_pairs) out.corpus.pairs.push_back(make_pair(id++, nullptr));
  return out;
}

inline nlohmann::json planted_to_json(const SynthCorpus& s) {
  nlohmann::json planted = nlohmann::json::array();
  for (const auto& p : s.planted)
    planted.push_back({{"lemma", p.key.lemma}, {"pos", p.key.pos}, {"counts", p.counts}});
  nlohmann::json distractors = nlohmann::json::array();
  for (const auto& d : s.distractors)
    distractors.push_back({{"lemma", d.key.lemma}, {"pos", d.key.pos}, {"reason", d.reason}});
  return {{"planted", planted}, {"distractors", distractors}};
}

}  // namespace lexsel::synth
