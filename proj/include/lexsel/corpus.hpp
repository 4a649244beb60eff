#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lexsel/error.hpp"
#include "lexsel/jsonl.hpp"
#include "lexsel/text.hpp"

namespace lexsel {

struct AnnotatedToken {
  std::string surface;
  std::string lemma;
  std::string pos = "X";  // UPOS
  std::optional<std::string> sense_id;
  std::size_t index = 0;

  friend bool operator==(const AnnotatedToken&, const AnnotatedToken&) = default;
};

/// (source_index, target_index), both 0-based.
using Link = std::pair<std::size_t, std::size_t>;
using Alignment = std::set<Link>;

struct SentencePair {
  std::string id;
  std::vector<AnnotatedToken> source_tokens;
  std::vector<AnnotatedToken> target_tokens;
  Alignment alignment;
  std::string provenance;

  std::string source_text() const { return surface_text(source_tokens); }
  std::string target_text() const { return surface_text(target_tokens); }

  friend bool operator==(const SentencePair&, const SentencePair&) = default;

 private:
  static std::string surface_text(const std::vector<AnnotatedToken>& tokens) {
    std::string out;
    for (const auto& t : tokens) {
      if (!out.empty()) out += ' ';
      out += t.surface;
    }
    return out;
  }
};

struct LanguagePair {
  std::string source = "en";
  std::string target = "und";

  friend bool operator==(const LanguagePair&, const LanguagePair&) = default;
};

struct Corpus {
  LanguagePair language_pair;
  std::vector<SentencePair> pairs;

  std::size_t link_count() const {
    std::size_t n = 0;
    for (const auto& p : pairs) n += p.alignment.size();
    return n;
  }

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

enum class Side { source, target };

enum class ParallelFormat { moses, tsv };

inline ParallelFormat parse_parallel_format(std::string_view name) {
  if (name == "moses" || name == "moses-two-file") return ParallelFormat::moses;
  if (name == "tsv") return ParallelFormat::tsv;
  fail(ErrorKind::usage, "unknown parallel format '" + std::string(name) + "'");
}

struct LoadOptions {
  text::Tokenizer tokenizer = text::Tokenizer::punct;
  /// Corpus name used in pair ids; defaults to the source file stem.
  std::string provenance;
  LanguagePair language_pair;
};

/// Id -> position lookup over a corpus. Holds a reference; the corpus must
/// outlive the index.
class CorpusIndex {
 public:
  explicit CorpusIndex(const Corpus& corpus) : corpus_(&corpus) {
    by_id_.reserve(corpus.pairs.size());
    for (std::size_t i = 0; i < corpus.pairs.size(); ++i) by_id_.emplace(corpus.pairs[i].id, i);
  }

  const SentencePair* find(const std::string& id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &corpus_->pairs[it->second];
  }

  const SentencePair& at(const std::string& id) const {
    if (const auto* p = find(id)) return *p;
    fail(ErrorKind::precondition, "sentence pair '" + id + "' not found in corpus");
  }

 private:
  const Corpus* corpus_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

inline std::vector<AnnotatedToken> make_tokens(const std::vector<std::string>& surfaces) {
  std::vector<AnnotatedToken> out;
  out.reserve(surfaces.size());
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    AnnotatedToken t;
    t.surface = surfaces[i];
    t.lemma = text::case_fold(surfaces[i]);
    t.index = i;
    out.push_back(std::move(t));
  }
  return out;
}

namespace detail {

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    text::strip_cr(line);
    lines.push_back(std::move(line));
  }
  return lines;
}

inline SentencePair make_pair(const std::string& provenance, std::size_t line_no,
                              std::string_view source, std::string_view target,
                              text::Tokenizer tok) {
  SentencePair p;
  p.id = provenance + ":" + std::to_string(line_no);
  p.provenance = provenance;
  p.source_tokens = make_tokens(text::tokenize(source, tok));
  p.target_tokens = make_tokens(text::tokenize(target, tok));
  return p;
}

inline std::string default_provenance(const LoadOptions& opts, const std::filesystem::path& path) {
  return opts.provenance.empty() ? path.stem().string() : opts.provenance;
}

}  // namespace detail

/// Moses two-file format: line i of `source_path` translates to line i of
/// `target_path`.
inline Corpus load_moses(const std::filesystem::path& source_path,
                         const std::filesystem::path& target_path, const LoadOptions& opts = {}) {
  auto src = detail::read_lines(source_path);
  auto tgt = detail::read_lines(target_path);
  if (src.size() != tgt.size()) throw CountMismatchError("line", src.size(), tgt.size());
  Corpus corpus;
  corpus.language_pair = opts.language_pair;
  const auto prov = detail::default_provenance(opts, source_path);
  corpus.pairs.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i)
    corpus.pairs.push_back(detail::make_pair(prov, i, src[i], tgt[i], opts.tokenizer));
  return corpus;
}

/// Tab-separated [source, target] rows, no header. Extra columns are ignored.
inline Corpus load_tsv(const std::filesystem::path& path, const LoadOptions& opts = {}) {
  auto rows = detail::read_lines(path);
  Corpus corpus;
  corpus.language_pair = opts.language_pair;
  const auto prov = detail::default_provenance(opts, path);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto cols = text::split(rows[i], '\t');
    if (cols.size() < 2)
      fail(ErrorKind::format, path.string() + ": malformed tsv row " + std::to_string(i + 1) +
                                  " (expected 2 tab-separated columns)");
    corpus.pairs.push_back(detail::make_pair(prov, i, cols[0], cols[1], opts.tokenizer));
  }
  return corpus;
}

/// `target_path` is ignored for the tsv format.
inline Corpus load_parallel(const std::filesystem::path& source_path,
                            const std::filesystem::path& target_path, ParallelFormat format,
                            const LoadOptions& opts = {}) {
  return format == ParallelFormat::moses ? load_moses(source_path, target_path, opts)
                                         : load_tsv(source_path, opts);
}

// ---------------------------------------------------------------------------
// CoNLL-U

struct ConlluRow {
  std::string form;
  std::string lemma;
  std::string upos;
  std::optional<std::string> sense;
};

struct ConlluSentence {
  std::string sent_id;
  std::vector<ConlluRow> rows;
};

/// Parses CoNLL-U blocks. Comments are skipped (a `# sent_id` comment is
/// kept for error messages); multiword ranges ("2-3") and empty nodes
/// ("4.1") are skipped so rows line up with syntactic words.
inline std::vector<ConlluSentence> read_conllu(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::vector<ConlluSentence> out;
  ConlluSentence cur;
  bool open = false;
  std::string line;
  std::size_t line_no = 0;
  auto close = [&] {
    if (open) out.push_back(std::move(cur));
    cur = {};
    open = false;
  };
  while (std::getline(in, line)) {
    ++line_no;
    text::strip_cr(line);
    if (text::trim(line).empty()) {
      close();
      continue;
    }
    open = true;
    if (line[0] == '#') {
      auto body = text::trim(std::string_view(line).substr(1));
      if (body.starts_with("sent_id")) {
        auto eq = body.find('=');
        if (eq != std::string_view::npos) cur.sent_id = std::string(text::trim(body.substr(eq + 1)));
      }
      continue;
    }
    auto cols = text::split(line, '\t');
    if (cols.size() != 10)
      fail(ErrorKind::format, path.string() + ":" + std::to_string(line_no) +
                                  ": expected 10 columns, found " + std::to_string(cols.size()));
    if (cols[0].find_first_of("-.") != std::string::npos) continue;
    ConlluRow row;
    row.form = cols[1];
    row.lemma = cols[2];
    row.upos = cols[3];
    for (const auto& kv : text::split(cols[9], '|')) {
      if (kv.starts_with("Sense=")) row.sense = kv.substr(6);
    }
    cur.rows.push_back(std::move(row));
  }
  close();
  return out;
}

struct ConlluOptions {
  /// When set, a token-count disagreement is tolerated: annotations are applied
  /// positionally to the common prefix and the corpus tokenization is kept.
  bool allow_token_count_mismatch = false;
};

/// Replaces lemma/UPOS (and sense, from MISC `Sense=`) on one side of every pair.
/// A "_" lemma falls back to the lowercased surface.
inline Corpus attach_conllu(Corpus corpus, Side side, const std::filesystem::path& path,
                            const ConlluOptions& opts = {}) {
  auto blocks = read_conllu(path);
  if (blocks.size() != corpus.pairs.size())
    throw CountMismatchError("CoNLL-U block", corpus.pairs.size(), blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    auto& pair = corpus.pairs[b];
    auto& tokens = side == Side::source ? pair.source_tokens : pair.target_tokens;
    const auto& rows = blocks[b].rows;
    if (rows.size() != tokens.size() && !opts.allow_token_count_mismatch) {
      const auto& name = blocks[b].sent_id.empty() ? pair.id : blocks[b].sent_id;
      throw Error(ErrorKind::mismatch, "token count mismatch in sentence '" + name + "': corpus " +
                                           std::to_string(tokens.size()) + " vs CoNLL-U " +
                                           std::to_string(rows.size()));
    }
    const auto n = std::min(rows.size(), tokens.size());
    for (std::size_t i = 0; i < n; ++i) {
      auto& t = tokens[i];
      const auto& r = rows[i];
      t.lemma = (r.lemma.empty() || r.lemma == "_") ? text::case_fold(t.surface) : r.lemma;
      if (!r.upos.empty() && r.upos != "_") t.pos = r.upos;
      t.sense_id = r.sense;
    }
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// Pharaoh alignments

/// Parses one Pharaoh line ("0-0 1-2"); `line_no` is 1-based and only used
/// in messages. Duplicate links collapse.
inline Alignment parse_pharaoh(std::string_view line, std::size_t line_no, std::size_t n_source,
                               std::size_t n_target) {
  Alignment links;
  for (const auto& tok : text::split_whitespace(line)) {
    auto dash = tok.find('-');
    auto bad = [&] {
      fail(ErrorKind::format,
           "alignment line " + std::to_string(line_no) + ": malformed link '" + tok + "'");
    };
    if (dash == std::string::npos || dash == 0 || dash + 1 == tok.size()) bad();
    auto digits = [](std::string_view s) {
      return !s.empty() && s.find_first_not_of("0123456789") == std::string_view::npos;
    };
    auto a = std::string_view(tok).substr(0, dash);
    auto b = std::string_view(tok).substr(dash + 1);
    if (!digits(a) || !digits(b)) bad();
    std::size_t i = std::stoul(std::string(a));
    std::size_t j = std::stoul(std::string(b));
    if (i >= n_source || j >= n_target)
      fail(ErrorKind::precondition, "alignment line " + std::to_string(line_no) + ": link '" +
                                        tok + "' out of range for " + std::to_string(n_source) +
                                        "x" + std::to_string(n_target) + " sentence pair");
    links.emplace(i, j);
  }
  return links;
}

inline std::string format_pharaoh(const Alignment& links) {
  std::string out;
  for (const auto& [i, j] : links) {
    if (!out.empty()) out += ' ';
    out += std::to_string(i) + "-" + std::to_string(j);
  }
  return out;
}

inline Corpus attach_alignments(Corpus corpus, const std::filesystem::path& path) {
  auto lines = detail::read_lines(path);
  if (lines.size() != corpus.pairs.size())
    throw CountMismatchError("alignment line", corpus.pairs.size(), lines.size());
  for (std::size_t k = 0; k < lines.size(); ++k) {
    auto& p = corpus.pairs[k];
    p.alignment = parse_pharaoh(lines[k], k + 1, p.source_tokens.size(), p.target_tokens.size());
  }
  return corpus;
}

inline void write_pharaoh(const std::filesystem::path& path, const Corpus& corpus) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  for (const auto& p : corpus.pairs) out << format_pharaoh(p.alignment) << '\n';
}

// ---------------------------------------------------------------------------
// Validation

/// Checks the structural invariants: unique ids, token indices equal to
/// positions, non-empty surfaces/lemmas, links in range.
inline void validate(const Corpus& corpus) {
  std::unordered_map<std::string, std::size_t> seen;
  for (const auto& p : corpus.pairs) {
    if (!seen.emplace(p.id, 0).second)
      fail(ErrorKind::precondition, "duplicate sentence pair id '" + p.id + "'");
    for (const auto* side : {&p.source_tokens, &p.target_tokens}) {
      for (std::size_t i = 0; i < side->size(); ++i) {
        const auto& t = (*side)[i];
        if (t.index != i)
          fail(ErrorKind::precondition, p.id + ": token index " + std::to_string(t.index) +
                                            " at position " + std::to_string(i));
        if (t.surface.empty() || t.lemma.empty())
          fail(ErrorKind::precondition, p.id + ": empty surface or lemma at " + std::to_string(i));
      }
    }
    for (const auto& [i, j] : p.alignment) {
      if (i >= p.source_tokens.size() || j >= p.target_tokens.size())
        fail(ErrorKind::precondition, p.id + ": link " + std::to_string(i) + "-" +
                                          std::to_string(j) + " out of range");
    }
  }
}

// ---------------------------------------------------------------------------
// JSONL

inline nlohmann::json to_json(const AnnotatedToken& t) {
  return {{"surface", t.surface},
          {"lemma", t.lemma},
          {"pos", t.pos},
          {"sense", t.sense_id ? nlohmann::json(*t.sense_id) : nlohmann::json(nullptr)}};
}

inline nlohmann::json to_json(const SentencePair& p, const LanguagePair& lp) {
  nlohmann::json src = nlohmann::json::array();
  nlohmann::json tgt = nlohmann::json::array();
  for (const auto& t : p.source_tokens) src.push_back(to_json(t));
  for (const auto& t : p.target_tokens) tgt.push_back(to_json(t));
  nlohmann::json links = nlohmann::json::array();
  for (const auto& [i, j] : p.alignment) links.push_back({i, j});
  return {{"id", p.id},           {"source", src},
          {"target", tgt},        {"alignment", links},
          {"provenance", p.provenance}, {"source_lang", lp.source},
          {"target_lang", lp.target}};
}

inline std::vector<AnnotatedToken> tokens_from_json(const nlohmann::json& arr) {
  std::vector<AnnotatedToken> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& o = arr[i];
    AnnotatedToken t;
    t.surface = o.at("surface").get<std::string>();
    t.lemma = o.value("lemma", "");
    if (t.lemma.empty()) t.lemma = text::case_fold(t.surface);
    t.pos = o.value("pos", "X");
    if (o.contains("sense") && o["sense"].is_string()) t.sense_id = o["sense"].get<std::string>();
    t.index = i;
    out.push_back(std::move(t));
  }
  return out;
}

inline SentencePair pair_from_json(const nlohmann::json& o) {
  SentencePair p;
  p.id = o.at("id").get<std::string>();
  p.source_tokens = tokens_from_json(o.at("source"));
  p.target_tokens = tokens_from_json(o.at("target"));
  for (const auto& l : o.value("alignment", nlohmann::json::array()))
    p.alignment.emplace(l.at(0).get<std::size_t>(), l.at(1).get<std::size_t>());
  p.provenance = o.value("provenance", "");
  return p;
}

inline void write_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  std::vector<nlohmann::json> rows;
  rows.reserve(corpus.pairs.size());
  for (const auto& p : corpus.pairs) rows.push_back(to_json(p, corpus.language_pair));
  jsonl::write(path, rows);
}

inline Corpus read_corpus(const std::filesystem::path& path) {
  Corpus corpus;
  bool first = true;
  jsonl::for_each(path, [&](const nlohmann::json& o, std::size_t line_no) {
    LanguagePair lp{o.value("source_lang", "en"), o.value("target_lang", "und")};
    if (first) {
      corpus.language_pair = lp;
      first = false;
    } else if (!(lp == corpus.language_pair)) {
      fail(ErrorKind::format, path.string() + ":" + std::to_string(line_no) +
                                  ": language pair differs from the first record");
    }
    corpus.pairs.push_back(pair_from_json(o));
  });
  validate(corpus);
  return corpus;
}

}  // namespace lexsel
