#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "oracles/fleiss.hpp"
#include "published.hpp"
#include "support.hpp"

using namespace lexsel;
using testing_support::item_of;

namespace {

std::vector<SelectionItem> ten_items() {
  std::vector<SelectionItem> items;
  for (int i = 0; i < 10; ++i)
    items.push_back(item_of("it" + std::to_string(i), "date", {"khorma", "rotab", "kharak"}, "khorma"));
  return items;
}

}  // namespace

TEST(Session, EveryAnnotatorGetsEveryItem) {
  const std::vector<std::string> annotators{"a1", "a2", "a3"};
  const auto tasks = create_session(task_sources(ten_items()), annotators, 7);
  ASSERT_EQ(tasks.size(), 30u);
  std::map<std::string, std::set<std::string>> seen;
  for (const auto& t : tasks) {
    seen[t.annotator_id].insert(t.item_ref);
    EXPECT_FALSE(t.payload.contains("gold"));
    auto cands = t.payload.at("candidates").get<std::vector<std::string>>();
    std::sort(cands.begin(), cands.end());
    EXPECT_EQ(cands, (std::vector<std::string>{"kharak", "khorma", "rotab"}));
  }
  for (const auto& a : annotators) EXPECT_EQ(seen[a].size(), 10u);
}

TEST(Session, DeterministicPresentation) {
  const auto a = create_session(task_sources(ten_items()), {"a1", "a2"}, 7);
  const auto b = create_session(task_sources(ten_items()), {"a1", "a2"}, 7);
  const auto c = create_session(task_sources(ten_items()), {"a1", "a2"}, 8);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(to_json(a[i]), to_json(b[i]));
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs |= to_json(a[i]) != to_json(c[i]);
  EXPECT_TRUE(differs);
}

TEST(Session, RejectsBadAnnotators) {
  EXPECT_THROW(create_session(task_sources(ten_items()), {}, 1), Error);
  EXPECT_THROW(create_session(task_sources(ten_items()), {"a", "a"}, 1), Error);
  EXPECT_THROW(create_session(task_sources(ten_items()), {"a#b"}, 1), Error);
}

TEST(Agreement, PublishedRowsSatisfyPabakIdentity) {
  for (const auto& row : published::agreement_rows()) {
    const auto r = agreement(published::matrix_for(row.total_agreement));
    EXPECT_NEAR(r.total_agreement, row.total_agreement, 5e-4) << row.language;
    EXPECT_NEAR(r.pabak, row.pabak, published::pabak_tolerance) << row.language;
    EXPECT_NEAR(2 * row.total_agreement - 1, row.pabak, published::pabak_tolerance) << row.language;
  }
}

TEST(Agreement, ParadoxMatrix) {
  const auto m = published::paradox_matrix();
  const auto r = agreement(m);
  const auto o = oracle::fleiss(m);
  EXPECT_DOUBLE_EQ(r.total_agreement, 0.9);
  EXPECT_NEAR(r.pabak, 0.8, 1e-12);
  ASSERT_TRUE(r.fleiss_kappa && o.kappa);
  EXPECT_NEAR(*r.fleiss_kappa, *o.kappa, 1e-12);
  EXPECT_NEAR(*r.fleiss_kappa, -0.034, 0.002);
  EXPECT_NEAR(*r.fleiss_kappa, -1.0 / 29.0, 1e-12);
}

TEST(Agreement, UnanimousKappaUndefined) {
  const std::vector<std::vector<std::string>> m(12, {"correct", "correct", "correct"});
  const auto r = agreement(m);
  EXPECT_FALSE(r.fleiss_kappa);
  EXPECT_DOUBLE_EQ(r.pabak, 1.0);
  EXPECT_TRUE(to_json(r)["fleiss_kappa"].is_null());
  EXPECT_TRUE(std::isnan(published::agreement_rows()[6].kappa));
}

TEST(Agreement, MatchesOracleAndIsPermutationInvariant) {
  Rng rng(3);
  const std::vector<std::string> labels{"a", "b", "c"};
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(20), k = 2 + rng.below(4);
    std::vector<std::vector<std::string>> m(n);
    for (auto& row : m)
      for (std::size_t j = 0; j < k; ++j) row.push_back(labels[rng.below(2 + trial % 2)]);
    const auto r = agreement(m);
    const auto o = oracle::fleiss(m);
    EXPECT_NEAR(r.total_agreement, o.total_agreement, 1e-12);
    ASSERT_EQ(r.fleiss_kappa.has_value(), o.kappa.has_value());
    if (o.kappa) EXPECT_NEAR(*r.fleiss_kappa, *o.kappa, 1e-9);

    auto shuffled = permuted(m, 100 + trial);
    for (auto& row : shuffled) row = permuted(row, 200 + trial);
    const auto s = agreement(shuffled);
    EXPECT_NEAR(s.total_agreement, r.total_agreement, 1e-12);
    if (r.fleiss_kappa) EXPECT_NEAR(*s.fleiss_kappa, *r.fleiss_kappa, 1e-9);
  }
}

TEST(Agreement, RejectsDegenerateMatrices) {
  EXPECT_THROW(agreement({}), Error);
  EXPECT_THROW(agreement({{"a"}}), Error);
  try {
    agreement({{"a", "b"}, {"a"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos);
  }
}

TEST(PrecisionRecall, SeventeenConceptsFourteenComplete) {
  std::vector<Concept> concepts;
  std::vector<ConceptFeedback> feedback;
  for (int i = 0; i < 17; ++i) {
    auto c = testing_support::concept_of("w" + std::to_string(i), "NOUN", {{"x", 60}, {"y", 60}});
    ConceptFeedback f;
    f.concept_key = c.key();
    f.variation_matches["x"] = {true, true, true};
    f.variation_matches["y"] = i == 0 ? std::vector<bool>{true, false, false} : std::vector<bool>{true, true, false};
    f.missing = i < 14 ? std::vector<bool>{false, false, true} : std::vector<bool>{true, true, false};
    concepts.push_back(c);
    feedback.push_back(f);
  }
  const auto pr = precision_recall(concepts, feedback);
  EXPECT_EQ(pr.n_complete, 14u);
  EXPECT_NEAR(pr.recall * 100, 82.4, 0.05);
  EXPECT_EQ(pr.n_variations, 34u);
  EXPECT_EQ(pr.n_accurate, 33u);

  feedback[3].missing = {true, false};
  EXPECT_THROW(precision_recall(concepts, feedback), Error);
  feedback.pop_back();
  EXPECT_THROW(precision_recall(concepts, feedback), Error);
}

TEST(PrecisionRecall, FromJudgments) {
  std::vector<Judgment> js;
  for (const std::string a : {"a1", "a2", "a3"}) {
    js.push_back({"", a, "precision:date/NOUN", TaskKind::variation_precision,
                  {{"khorma", true}, {"rotab", a != "a3"}}, ""});
    js.push_back({"", a, "recall:date/NOUN", TaskKind::variation_recall, {{"missing", a == "a1"}}, ""});
  }
  const auto fb = feedback_from_judgments(js);
  ASSERT_EQ(fb.size(), 1u);
  EXPECT_EQ(fb[0].concept_key, (LexemeKey{"date", "NOUN"}));
  auto c = testing_support::concept_of("date", "NOUN", {{"khorma", 60}, {"rotab", 60}});
  const auto pr = precision_recall({c}, fb);
  EXPECT_DOUBLE_EQ(pr.precision, 1.0);
  EXPECT_DOUBLE_EQ(pr.recall, 1.0);
  const auto m = agreement_matrix(js, TaskKind::variation_precision);
  EXPECT_EQ(m.size(), 2u);
}

TEST(RuleCorrectness, AllRulesCorrect) {
  std::map<std::string, std::vector<bool>> labels;
  for (int i = 0; i < 23; ++i) labels["rule" + std::to_string(i)] = {true, true, i % 2 == 0};
  EXPECT_NEAR(rule_correctness(labels) * 100, 100.0, 0.05);
  labels["bad"] = {true, false, false};
  EXPECT_NEAR(rule_correctness(labels), 23.0 / 24.0, 1e-12);
  labels["empty"] = {};
  EXPECT_THROW(rule_correctness(labels), Error);
}

TEST(JudgmentStore, LatestWinsAndJournalKeepsAll) {
  testing_support::TempDir dir;
  const auto journal = dir / "j.jsonl";
  AnnotationSession s("s1", create_session(task_sources(ten_items()), {"a1", "a2"}, 1), journal);
  auto t = *s.next_task("a1");
  EXPECT_EQ(t.position, 0u);
  EXPECT_FALSE(s.submit(t.id, "a1", "rotab"));
  EXPECT_TRUE(s.submit(t.id, "a1", "khorma"));
  EXPECT_EQ(s.store().find(t.id)->value, "khorma");
  EXPECT_EQ(s.store().journal_size(), 2u);
  EXPECT_EQ(s.progress("a1").done, 1u);
  EXPECT_EQ(s.next_task("a1")->position, 1u);

  EXPECT_THROW(s.submit(t.id, "a2", "khorma"), Error);
  EXPECT_THROW(s.submit(t.id, "a1", "banana"), Error);
  EXPECT_THROW(s.submit("nope", "a1", "khorma"), Error);
  EXPECT_NO_THROW(s.submit(t.id, "a1", cannot_determine));

  AnnotationSession reloaded("s1", create_session(task_sources(ten_items()), {"a1", "a2"}, 1), journal);
  EXPECT_EQ(reloaded.store().journal_size(), 3u);
  EXPECT_EQ(reloaded.store().find(t.id)->value, cannot_determine);
  EXPECT_EQ(read_judgments(journal).size(), 1u);
}

TEST(JudgmentStore, ConcurrentSubmissionsAllLand) {
  testing_support::TempDir dir;
  std::vector<SelectionItem> items;
  for (int i = 0; i < 200; ++i) items.push_back(item_of("i" + std::to_string(i), "d", {"p", "q"}, "p"));
  AnnotationSession s("s", create_session(task_sources(items), {"a"}, 1), dir / "j.jsonl");
  parallel_for(s.tasks().size(), 8, [&](std::size_t i) { s.submit(s.tasks()[i].id, "a", "p"); });
  EXPECT_EQ(s.progress("a").done, 200u);
  EXPECT_EQ(read_judgments(dir / "j.jsonl").size(), 200u);
  EXPECT_FALSE(s.next_task("a"));
}

TEST(Session, AgreementReportsPerKind) {
  AnnotationSession s("s", create_session(task_sources(ten_items()), {"a1", "a2", "a3"}, 1));
  EXPECT_FALSE(s.agreement_reports().at("lexical_selection"));
  for (const auto& t : s.tasks())
    s.submit(t.id, t.annotator_id, t.item_ref == "it0" && t.annotator_id == "a3" ? "rotab" : "khorma");
  const auto r = s.agreement_reports().at("lexical_selection");
  ASSERT_TRUE(r);
  EXPECT_DOUBLE_EQ(r->total_agreement, 0.9);
  EXPECT_NEAR(*r->fleiss_kappa, -1.0 / 29.0, 1e-12);
}

TEST(Session, ValidatesValuesPerKind) {
  std::vector<RuleToVerify> rules{{{"date", "NOUN"}, "khorma", "dried dates"}};
  AnnotationSession s("s", create_session(task_sources(rules), {"a"}, 1));
  const auto id = s.tasks()[0].id;
  EXPECT_THROW(s.submit(id, "a", "maybe"), Error);
  EXPECT_FALSE(s.submit(id, "a", "correct"));

  auto c = testing_support::concept_of("date", "NOUN", {{"khorma", 60}, {"rotab", 60}});
  AnnotationSession p("p", create_session(task_sources({c}, TaskKind::variation_precision), {"a"}, 1));
  const auto pid = p.tasks()[0].id;
  EXPECT_THROW(p.submit(pid, "a", {{"khorma", true}}), Error);
  EXPECT_NO_THROW(p.submit(pid, "a", {{"khorma", true}, {"rotab", false}}));

  AnnotationSession r("r", create_session(task_sources({c}, TaskKind::variation_recall), {"a"}, 1));
  EXPECT_THROW(r.submit(r.tasks()[0].id, "a", {{"text", "x"}}), Error);
  EXPECT_NO_THROW(r.submit(r.tasks()[0].id, "a", {{"missing", true}, {"text", "tamr"}}));
}
