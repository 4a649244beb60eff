#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lexsel/dataset.hpp"
#include "lexsel/error.hpp"
#include "lexsel/jsonl.hpp"
#include "lexsel/mine.hpp"
#include "lexsel/random.hpp"

namespace lexsel {

enum class TaskKind { lexical_selection, rule_verification, variation_precision, variation_recall };

inline const char* to_string(TaskKind k) {
  switch (k) {
    case TaskKind::lexical_selection: return "lexical_selection";
    case TaskKind::rule_verification: return "rule_verification";
    case TaskKind::variation_precision: return "variation_precision";
    case TaskKind::variation_recall: return "variation_recall";
  }
  return "lexical_selection";
}

inline TaskKind parse_task_kind(const std::string& s) {
  if (s == "lexical_selection") return TaskKind::lexical_selection;
  if (s == "rule_verification") return TaskKind::rule_verification;
  if (s == "variation_precision") return TaskKind::variation_precision;
  if (s == "variation_recall") return TaskKind::variation_recall;
  fail(ErrorKind::format, "unknown task kind '" + s + "'");
}

struct AnnotationTask {
  std::string id;
  TaskKind kind = TaskKind::lexical_selection;
  nlohmann::json payload;  // never contains gold
  std::string annotator_id;
  std::uint64_t presentation_seed = 0;
  std::string item_ref;
  std::size_t position = 0;  // index in this annotator's presentation order
};

inline nlohmann::json to_json(const AnnotationTask& t) {
  return {{"id", t.id},
          {"kind", to_string(t.kind)},
          {"payload", t.payload},
          {"annotator_id", t.annotator_id},
          {"presentation_seed", t.presentation_seed},
          {"item_ref", t.item_ref},
          {"position", t.position}};
}

/// A GPT-style rule to be checked by annotators.
struct RuleToVerify {
  LexemeKey concept_key;
  std::string variation;
  std::string rule;
};

/// Input to create_session: one entry per item; the payload builder receives
/// the per-(annotator, task) presentation seed.
struct TaskSource {
  std::string item_ref;
  TaskKind kind;
  std::function<nlohmann::json(std::uint64_t)> payload;
};

namespace detail {

inline nlohmann::json concept_json(const LexemeKey& k) {
  return {{"lemma", k.lemma}, {"pos", k.pos}};
}

}  // namespace detail

inline std::vector<TaskSource> task_sources(const std::vector<SelectionItem>& items) {
  std::vector<TaskSource> out;
  for (const auto& item : items) {
    out.push_back({item.id, TaskKind::lexical_selection, [item](std::uint64_t seed) {
                     return nlohmann::json{
                         {"concept", detail::concept_json(item.concept_key)},
                         {"source_text", item.source_text()},
                         {"source_tokens", item.source_tokens},
                         {"concept_index", item.concept_index ? nlohmann::json(*item.concept_index)
                                                              : nlohmann::json()},
                         {"candidates", permuted(item.candidates, seed)}};
                   }});
  }
  return out;
}

inline std::vector<TaskSource> task_sources(const std::vector<RuleToVerify>& rules) {
  std::vector<TaskSource> out;
  for (const auto& r : rules) {
    out.push_back({"rule:" + r.concept_key.str() + ":" + r.variation, TaskKind::rule_verification,
                   [r](std::uint64_t) {
                     return nlohmann::json{{"concept", detail::concept_json(r.concept_key)},
                                           {"variation", r.variation},
                                           {"rule", r.rule}};
                   }});
  }
  return out;
}

/// Precision tasks ask, per variation, whether it matches the English
/// concept; recall tasks ask whether a key variation is missing.
inline std::vector<TaskSource> task_sources(const std::vector<Concept>& concepts, TaskKind kind) {
  require(kind == TaskKind::variation_precision || kind == TaskKind::variation_recall,
          "concept tasks must be variation_precision or variation_recall");
  const std::string prefix = kind == TaskKind::variation_precision ? "precision:" : "recall:";
  std::vector<TaskSource> out;
  for (const auto& c : concepts) {
    auto vars = c.variation_lemmas();
    std::sort(vars.begin(), vars.end());
    out.push_back({prefix + c.key().str(), kind, [key = c.key(), vars](std::uint64_t seed) {
                     return nlohmann::json{{"concept", detail::concept_json(key)},
                                           {"variations", permuted(vars, seed)}};
                   }});
  }
  return out;
}

inline std::string task_id_for(const std::string& item_ref, const std::string& annotator) {
  return item_ref + "#" + annotator;
}

/// Every annotator receives every item. Presentation order and candidate
/// order derive from (seed, annotator, task id) only.
inline std::vector<AnnotationTask> create_session(const std::vector<TaskSource>& sources,
                                                  const std::vector<std::string>& annotators,
                                                  std::uint64_t seed) {
  require(!annotators.empty(), "create_session: at least one annotator required");
  std::set<std::string> unique(annotators.begin(), annotators.end());
  if (unique.size() != annotators.size())
    fail(ErrorKind::precondition, "create_session: duplicate annotator ids");
  for (const auto& a : annotators)
    require(!a.empty() && a.find('#') == std::string::npos,
            "create_session: annotator ids must be non-empty and must not contain '#'");

  std::vector<AnnotationTask> tasks;
  tasks.reserve(sources.size() * annotators.size());
  for (const auto& a : annotators) {
    const auto order = permutation(sources.size(), derive_seed(seed, "order", a));
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const auto& src = sources[order[pos]];
      AnnotationTask t;
      t.id = task_id_for(src.item_ref, a);
      t.kind = src.kind;
      t.annotator_id = a;
      t.item_ref = src.item_ref;
      t.position = pos;
      t.presentation_seed = derive_seed(seed, a, t.id);
      t.payload = src.payload(t.presentation_seed);
      tasks.push_back(std::move(t));
    }
  }
  return tasks;
}

// ---------------------------------------------------------------------------
// Judgments

struct Judgment {
  std::string task_id;
  std::string annotator_id;
  std::string item_ref;
  TaskKind kind = TaskKind::lexical_selection;
  nlohmann::json value;
  std::string timestamp;  // ISO-8601 UTC
};

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()) % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S") << '.' << std::setw(3) << std::setfill('0')
     << ms.count() << 'Z';
  return os.str();
}

inline nlohmann::json to_json(const Judgment& j) {
  return {{"task_id", j.task_id},     {"annotator_id", j.annotator_id}, {"item_ref", j.item_ref},
          {"kind", to_string(j.kind)}, {"value", j.value},               {"timestamp", j.timestamp}};
}

inline Judgment judgment_from_json(const nlohmann::json& o) {
  Judgment j;
  j.task_id = o.value("task_id", "");
  j.annotator_id = o.at("annotator_id").get<std::string>();
  j.item_ref = o.value("item_ref", "");
  if (j.item_ref.empty() && !j.task_id.empty()) j.item_ref = j.task_id.substr(0, j.task_id.rfind('#'));
  if (j.task_id.empty()) j.task_id = task_id_for(j.item_ref, j.annotator_id);
  require(!j.item_ref.empty(), "judgment needs a task_id or item_ref");
  j.kind = parse_task_kind(o.value("kind", "lexical_selection"));
  j.value = o.at("value");
  j.timestamp = o.value("timestamp", "");
  return j;
}

/// Latest-wins view of a journal: one judgment per (task, annotator),
/// in journal order of first submission.
inline std::vector<Judgment> latest_judgments(const std::vector<Judgment>& journal) {
  std::map<std::pair<std::string, std::string>, std::size_t> slot;
  std::vector<Judgment> out;
  for (const auto& j : journal) {
    auto key = std::make_pair(j.task_id, j.annotator_id);
    auto it = slot.find(key);
    if (it == slot.end()) {
      slot.emplace(key, out.size());
      out.push_back(j);
    } else {
      out[it->second] = j;
    }
  }
  return out;
}

inline std::vector<Judgment> read_judgments(const std::filesystem::path& path) {
  std::vector<Judgment> journal;
  jsonl::for_each(path, [&](const nlohmann::json& o, std::size_t) {
    journal.push_back(judgment_from_json(o));
  });
  return latest_judgments(journal);
}

/// Append-only judgment journal with a latest-wins materialized view.
/// Thread-safe; every accepted submission is flushed to the journal file (if
/// any) before it becomes visible.
class JudgmentStore {
 public:
  JudgmentStore() = default;

  explicit JudgmentStore(std::optional<std::filesystem::path> journal) : path_(std::move(journal)) {
    if (!path_) return;
    if (std::filesystem::exists(*path_)) {
      jsonl::for_each(*path_, [&](const nlohmann::json& o, std::size_t) {
        apply(judgment_from_json(o));
      });
    } else if (path_->has_parent_path()) {
      std::filesystem::create_directories(path_->parent_path());
    }
  }

  /// Returns true when an earlier judgment for the same task was replaced.
  bool submit(Judgment j) {
    std::unique_lock lock(mutex_);
    if (j.timestamp.empty()) j.timestamp = utc_timestamp();
    if (path_) {
      std::ofstream out(*path_, std::ios::app);
      if (!out) fail(ErrorKind::io, "cannot append to journal " + path_->string());
      out << to_json(j).dump() << '\n';
      out.flush();
    }
    return apply(std::move(j));
  }

  std::optional<Judgment> find(const std::string& task_id) const {
    std::shared_lock lock(mutex_);
    auto it = latest_.find(task_id);
    if (it == latest_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<Judgment> snapshot() const {
    std::shared_lock lock(mutex_);
    std::vector<Judgment> out;
    out.reserve(latest_.size());
    for (const auto& [_, j] : latest_) out.push_back(j);
    return out;
  }

  std::size_t journal_size() const {
    std::shared_lock lock(mutex_);
    return journal_entries_;
  }

 private:
  bool apply(Judgment j) {
    ++journal_entries_;
    auto [it, inserted] = latest_.insert_or_assign(j.task_id, std::move(j));
    return !inserted;
  }

  mutable std::shared_mutex mutex_;
  std::optional<std::filesystem::path> path_;
  std::map<std::string, Judgment> latest_;
  std::size_t journal_entries_ = 0;
};

// ---------------------------------------------------------------------------
// Agreement

struct AgreementReport {
  std::size_t n_items = 0;
  std::size_t n_annotators = 0;
  double total_agreement = 0.0;
  std::optional<double> fleiss_kappa;  // undefined when expected agreement is 1
  double pabak = 0.0;
};

inline nlohmann::json to_json(const AgreementReport& r) {
  return {{"n_items", r.n_items},
          {"n_annotators", r.n_annotators},
          {"total_agreement", r.total_agreement},
          {"fleiss_kappa", r.fleiss_kappa ? nlohmann::json(*r.fleiss_kappa) : nlohmann::json()},
          {"pabak", r.pabak}};
}

/// Agreement over an items x annotators label matrix.
///
/// total agreement: share of items on which all k labels coincide.
/// Fleiss' kappa: (P - Pe) / (1 - Pe), P the mean per-item pairwise agreement
/// sum_j n_ij (n_ij - 1) / (k (k - 1)), Pe the sum of squared global category
/// shares. Pe = 1 exactly when a single category is observed; kappa is then
/// undefined.
/// PABAK: 2 * total_agreement - 1.
inline AgreementReport agreement(const std::vector<std::vector<std::string>>& matrix) {
  require(!matrix.empty(), "agreement: empty judgment matrix");
  const std::size_t k = matrix.front().size();
  require(k >= 2, "agreement: at least two annotators required");
  for (std::size_t i = 0; i < matrix.size(); ++i)
    if (matrix[i].size() != k)
      fail(ErrorKind::precondition, "agreement: ragged matrix at row " + std::to_string(i) + " (" +
                                        std::to_string(matrix[i].size()) + " labels, expected " +
                                        std::to_string(k) + ")");

  const double n = static_cast<double>(matrix.size());
  const double kd = static_cast<double>(k);
  std::map<std::string, double> category_totals;
  std::size_t unanimous = 0;
  double p_sum = 0.0;
  for (const auto& row : matrix) {
    std::map<std::string, double> counts;
    for (const auto& label : row) counts[label] += 1.0;
    if (counts.size() == 1) ++unanimous;
    double agree = 0.0;
    for (const auto& [label, c] : counts) {
      agree += c * (c - 1.0);
      category_totals[label] += c;
    }
    p_sum += agree / (kd * (kd - 1.0));
  }

  AgreementReport r;
  r.n_items = matrix.size();
  r.n_annotators = k;
  r.total_agreement = static_cast<double>(unanimous) / n;
  r.pabak = 2.0 * r.total_agreement - 1.0;
  if (category_totals.size() > 1) {
    const double p_bar = p_sum / n;
    double p_e = 0.0;
    for (const auto& [_, c] : category_totals) {
      const double p = c / (n * kd);
      p_e += p * p;
    }
    r.fleiss_kappa = (p_bar - p_e) / (1.0 - p_e);
  }
  return r;
}

/// Turns judgments of one kind into an agreement matrix: one row per
/// question answered by every annotator in `annotators` (sorted order), or by
/// every annotator seen in the judgments when `annotators` is empty.
/// Precision judgments expand into one question per variation.
inline std::vector<std::vector<std::string>> agreement_matrix(const std::vector<Judgment>& judgments,
                                                              TaskKind kind,
                                                              std::vector<std::string> annotators = {}) {
  std::map<std::string, std::map<std::string, std::string>> questions;  // question -> annotator -> label
  std::set<std::string> seen;
  for (const auto& j : judgments) {
    if (j.kind != kind) continue;
    seen.insert(j.annotator_id);
    switch (kind) {
      case TaskKind::lexical_selection:
      case TaskKind::rule_verification:
        questions[j.item_ref][j.annotator_id] =
            j.value.is_string() ? j.value.get<std::string>() : j.value.dump();
        break;
      case TaskKind::variation_precision:
        for (const auto& [var, flag] : j.value.items())
          questions[j.item_ref + "|" + var][j.annotator_id] = flag.get<bool>() ? "match" : "no-match";
        break;
      case TaskKind::variation_recall:
        questions[j.item_ref][j.annotator_id] =
            j.value.at("missing").get<bool>() ? "missing" : "complete";
        break;
    }
  }
  if (annotators.empty()) annotators.assign(seen.begin(), seen.end());
  std::sort(annotators.begin(), annotators.end());
  std::vector<std::vector<std::string>> matrix;
  for (const auto& [q, labels] : questions) {
    std::vector<std::string> row;
    for (const auto& a : annotators) {
      auto it = labels.find(a);
      if (it == labels.end()) break;
      row.push_back(it->second);
    }
    if (row.size() == annotators.size()) matrix.push_back(std::move(row));
  }
  return matrix;
}

// ---------------------------------------------------------------------------
// Pipeline precision / recall

/// Per-concept feedback: for each variation, one match flag per annotator;
/// one "a key variation is missing" flag per annotator.
struct ConceptFeedback {
  LexemeKey concept_key;
  std::map<std::string, std::vector<bool>> variation_matches;
  std::vector<bool> missing;
};

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  std::size_t n_variations = 0;
  std::size_t n_accurate = 0;
  std::size_t n_concepts = 0;
  std::size_t n_complete = 0;
  std::string aggregation = "strict majority of annotators per variation / per concept";
};

inline nlohmann::json to_json(const PrecisionRecall& pr) {
  return {{"precision", pr.precision},   {"recall", pr.recall},
          {"n_variations", pr.n_variations}, {"n_accurate", pr.n_accurate},
          {"n_concepts", pr.n_concepts}, {"n_complete", pr.n_complete},
          {"aggregation", pr.aggregation}};
}

namespace detail {

inline bool strict_majority(const std::vector<bool>& flags, bool value) {
  const auto n = static_cast<std::size_t>(std::count(flags.begin(), flags.end(), value));
  return 2 * n > flags.size();
}

}  // namespace detail

/// Precision: share of variations a strict majority marks as matching.
/// Recall: share of concepts a strict majority marks as having no missing
/// key variation.
inline PrecisionRecall precision_recall(const std::vector<Concept>& concepts,
                                        const std::vector<ConceptFeedback>& feedback) {
  require(!concepts.empty(), "precision_recall: no concepts");
  std::map<LexemeKey, const ConceptFeedback*> by_key;
  for (const auto& f : feedback) by_key[f.concept_key] = &f;

  PrecisionRecall pr;
  std::optional<std::size_t> k;
  auto check_k = [&](std::size_t n, const std::string& what) {
    if (n == 0) fail(ErrorKind::precondition, "precision_recall: missing flags for " + what);
    if (!k) k = n;
    if (*k != n)
      fail(ErrorKind::precondition, "precision_recall: " + what + " has " + std::to_string(n) +
                                        " flags, expected " + std::to_string(*k));
  };
  for (const auto& c : concepts) {
    auto it = by_key.find(c.key());
    if (it == by_key.end())
      fail(ErrorKind::precondition, "precision_recall: no feedback for concept " + c.key().str());
    const auto& f = *it->second;
    for (const auto& v : c.variations) {
      auto vit = f.variation_matches.find(v.lemma);
      const std::string what = "variation " + c.key().str() + ":" + v.lemma;
      check_k(vit == f.variation_matches.end() ? 0 : vit->second.size(), what);
      ++pr.n_variations;
      if (detail::strict_majority(vit->second, true)) ++pr.n_accurate;
    }
    check_k(f.missing.size(), "concept " + c.key().str());
    ++pr.n_concepts;
    if (detail::strict_majority(f.missing, false)) ++pr.n_complete;
  }
  pr.precision = static_cast<double>(pr.n_accurate) / static_cast<double>(pr.n_variations);
  pr.recall = static_cast<double>(pr.n_complete) / static_cast<double>(pr.n_concepts);
  return pr;
}

/// Builds ConceptFeedback from precision/recall judgments (annotators in
/// sorted order).
inline std::vector<ConceptFeedback> feedback_from_judgments(const std::vector<Judgment>& judgments) {
  std::map<std::string, ConceptFeedback> by_concept;
  auto key_of = [](const std::string& ref) {
    auto colon = ref.find(':');
    auto body = ref.substr(colon + 1);
    auto slash = body.rfind('/');
    return LexemeKey{body.substr(0, slash), body.substr(slash + 1)};
  };
  std::vector<Judgment> sorted = judgments;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.annotator_id < b.annotator_id; });
  for (const auto& j : sorted) {
    if (j.kind != TaskKind::variation_precision && j.kind != TaskKind::variation_recall) continue;
    const auto key = key_of(j.item_ref);
    auto& f = by_concept[key.str()];
    f.concept_key = key;
    if (j.kind == TaskKind::variation_precision) {
      for (const auto& [var, flag] : j.value.items()) f.variation_matches[var].push_back(flag.get<bool>());
    } else {
      f.missing.push_back(j.value.at("missing").get<bool>());
    }
  }
  std::vector<ConceptFeedback> out;
  for (auto& [_, f] : by_concept) out.push_back(std::move(f));
  return out;
}

/// Mean over rules of "a strict majority of annotators labeled it correct".
inline double rule_correctness(const std::map<std::string, std::vector<bool>>& labels_by_rule) {
  require(!labels_by_rule.empty(), "rule_correctness: no labeled rules");
  std::size_t correct = 0;
  for (const auto& [rule, labels] : labels_by_rule) {
    if (labels.empty()) fail(ErrorKind::precondition, "rule_correctness: rule '" + rule + "' has no labels");
    if (detail::strict_majority(labels, true)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels_by_rule.size());
}

inline std::map<std::string, std::vector<bool>> rule_labels_from_judgments(
    const std::vector<Judgment>& judgments) {
  std::map<std::string, std::vector<bool>> out;
  for (const auto& j : judgments)
    if (j.kind == TaskKind::rule_verification)
      out[j.item_ref].push_back(j.value.is_string() && j.value.get<std::string>() == "correct");
  return out;
}

// ---------------------------------------------------------------------------
// Session

/// Validates a submitted value against the task kind and payload.
inline void validate_value(const AnnotationTask& task, const nlohmann::json& value) {
  auto bad = [&](const std::string& why) {
    fail(ErrorKind::precondition, "invalid value for task '" + task.id + "': " + why);
  };
  switch (task.kind) {
    case TaskKind::lexical_selection: {
      if (!value.is_string()) bad("expected a candidate string");
      const auto v = value.get<std::string>();
      if (v == cannot_determine) return;
      const auto& cands = task.payload.at("candidates");
      if (std::find(cands.begin(), cands.end(), v) == cands.end()) bad("'" + v + "' is not a candidate");
      return;
    }
    case TaskKind::rule_verification:
      if (!value.is_string() || (value != "correct" && value != "incorrect"))
        bad("expected \"correct\" or \"incorrect\"");
      return;
    case TaskKind::variation_precision: {
      if (!value.is_object()) bad("expected an object of variation -> bool");
      const auto& vars = task.payload.at("variations");
      if (value.size() != vars.size()) bad("expected one flag per variation");
      for (const auto& v : vars) {
        auto it = value.find(v.get<std::string>());
        if (it == value.end() || !it->is_boolean()) bad("missing flag for '" + v.get<std::string>() + "'");
      }
      return;
    }
    case TaskKind::variation_recall:
      if (!value.is_object() || !value.contains("missing") || !value["missing"].is_boolean())
        bad("expected {\"missing\": bool, \"text\": string}");
      if (value.contains("text") && !value["text"].is_string()) bad("text must be a string");
      return;
  }
}

struct Progress {
  std::size_t done = 0;
  std::size_t total = 0;
};

class AnnotationSession {
 public:
  AnnotationSession(std::string id, std::vector<AnnotationTask> tasks,
                    std::optional<std::filesystem::path> journal = std::nullopt)
      : id_(std::move(id)),
        tasks_(std::move(tasks)),
        store_(std::move(journal)) {
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
      by_id_.emplace(tasks_[i].id, i);
      by_annotator_[tasks_[i].annotator_id].push_back(i);
    }
    for (auto& [_, idx] : by_annotator_)
      std::sort(idx.begin(), idx.end(),
                [&](auto a, auto b) { return tasks_[a].position < tasks_[b].position; });
  }

  const std::string& id() const { return id_; }
  const std::vector<AnnotationTask>& tasks() const { return tasks_; }
  const JudgmentStore& store() const { return store_; }

  bool has_annotator(const std::string& a) const { return by_annotator_.count(a) > 0; }

  std::vector<std::string> annotators() const {
    std::vector<std::string> out;
    for (const auto& [a, _] : by_annotator_) out.push_back(a);
    return out;
  }

  std::optional<AnnotationTask> next_task(const std::string& annotator) const {
    auto it = by_annotator_.find(annotator);
    if (it == by_annotator_.end()) return std::nullopt;
    for (auto i : it->second)
      if (!store_.find(tasks_[i].id)) return tasks_[i];
    return std::nullopt;
  }

  Progress progress(const std::string& annotator) const {
    Progress p;
    auto it = by_annotator_.find(annotator);
    if (it == by_annotator_.end()) return p;
    p.total = it->second.size();
    for (auto i : it->second)
      if (store_.find(tasks_[i].id)) ++p.done;
    return p;
  }

  const AnnotationTask* find_task(const std::string& task_id) const {
    auto it = by_id_.find(task_id);
    return it == by_id_.end() ? nullptr : &tasks_[it->second];
  }

  /// Validates and records a judgment. Returns true when it replaced an
  /// earlier one (the journal keeps both).
  bool submit(const std::string& task_id, const std::string& annotator_id, const nlohmann::json& value) {
    const auto* task = find_task(task_id);
    if (!task) fail(ErrorKind::precondition, "unknown task '" + task_id + "'");
    if (task->annotator_id != annotator_id)
      fail(ErrorKind::precondition, "task '" + task_id + "' belongs to another annotator");
    validate_value(*task, value);
    return store_.submit({task_id, annotator_id, task->item_ref, task->kind, value, ""});
  }

  /// Agreement per task kind present in the session, over questions every
  /// session annotator has answered.
  std::map<std::string, std::optional<AgreementReport>> agreement_reports() const {
    std::set<TaskKind> kinds;
    for (const auto& t : tasks_) kinds.insert(t.kind);
    const auto snap = store_.snapshot();
    std::map<std::string, std::optional<AgreementReport>> out;
    for (auto kind : kinds) {
      auto m = agreement_matrix(snap, kind, annotators());
      if (m.empty() || m.front().size() < 2)
        out[to_string(kind)] = std::nullopt;
      else
        out[to_string(kind)] = agreement(m);
    }
    return out;
  }

 private:
  std::string id_;
  std::vector<AnnotationTask> tasks_;
  JudgmentStore store_;
  std::map<std::string, std::size_t> by_id_;
  std::map<std::string, std::vector<std::size_t>> by_annotator_;
};

}  // namespace lexsel
