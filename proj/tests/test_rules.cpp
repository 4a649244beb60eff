#include <gtest/gtest.h>

#include <chrono>
#include <thread>

#include "support.hpp"

using namespace lexsel;
using nlohmann::json;
using testing_support::MockEndpoint;

namespace {

// Concept "date" whose variations appear in pairs with the given source
// sentence lengths (in whitespace tokens).
struct Fixture {
  Corpus corpus;
  Concept concept_;
};

Fixture fixture(const std::map<std::string, std::vector<std::size_t>>& lengths) {
  Fixture f;
  f.concept_.lemma = "date";
  f.concept_.pos = "NOUN";
  std::size_t n = 0;
  for (const auto& [var, lens] : lengths) {
    f.concept_.variations.push_back({var, lens.size(), 0.0, 1.0});
    for (auto len : lens) {
      std::string src = "date";
      for (std::size_t k = 1; k < len; ++k) src += " w" + std::to_string(k);
      const auto id = "c:" + std::to_string(n++);
      f.corpus.pairs.push_back(testing_support::pair_of(id, src, "wir " + var, {{0, 1}}));
      f.concept_.example_refs[var].push_back(id);
    }
  }
  return f;
}

std::vector<std::size_t> token_counts(const std::vector<ContextSentence>& s) {
  std::vector<std::size_t> out;
  for (const auto& c : s) out.push_back(c.n_tokens);
  return out;
}

ModelEndpoint endpoint_for(const MockEndpoint& m) {
  ModelEndpoint ep;
  ep.base_url = m.url();
  ep.model_name = "mock";
  ep.max_retries = 0;
  ep.timeout_seconds = 5;
  return ep;
}

std::string fenced_rules() {
  return "Sure!\n```json\n{\"khorma\": \"dried date\", \"rotab\": \"fresh date\"}\n```";
}

}  // namespace

TEST(Context, LengthLimitIsStrict) {
  auto f = fixture({{"khorma", {60, 49, 48, 10, 50}}});
  const auto ctx = select_context_sentences(f.concept_, f.corpus);
  EXPECT_EQ(token_counts(ctx.at("khorma")), (std::vector<std::size_t>{49, 48, 10}));
}

TEST(Context, KeepsFiftyLongest) {
  std::vector<std::size_t> lens;
  for (std::size_t i = 0; i < 120; ++i) lens.push_back(1 + i % 49);
  auto f = fixture({{"khorma", lens}});
  const auto got = token_counts(select_context_sentences(f.concept_, f.corpus).at("khorma"));
  ASSERT_EQ(got.size(), 50u);
  auto sorted = lens;
  std::sort(sorted.rbegin(), sorted.rend());
  sorted.resize(50);
  EXPECT_EQ(got, sorted);
}

TEST(Context, TiesBreakByPairIdAndDuplicatesCollapse) {
  auto f = fixture({{"khorma", {5, 5, 5}}});
  f.concept_.example_refs["khorma"].push_back("c:1");
  const auto ctx = select_context_sentences(f.concept_, f.corpus).at("khorma");
  ASSERT_EQ(ctx.size(), 3u);
  EXPECT_EQ(ctx[0].pair_id, "c:0");
  EXPECT_EQ(ctx[2].pair_id, "c:2");
}

TEST(Context, EmptyVariationWarns) {
  auto f = fixture({{"khorma", {5}}, {"rotab", {70}}});
  log::Capture cap;
  const auto ctx = select_context_sentences(f.concept_, f.corpus);
  EXPECT_TRUE(ctx.at("rotab").empty());
  EXPECT_TRUE(cap.saw("no_context_sentences"));
}

TEST(Context, VariationMustAppearInTarget) {
  auto f = fixture({{"khorma", {5}}});
  f.corpus.pairs[0].target_tokens[1].lemma = "other";
  f.corpus.pairs[0].target_tokens[1].surface = "other";
  EXPECT_TRUE(select_context_sentences(f.concept_, f.corpus).at("khorma").empty());
}

TEST(RulePrompt, Contents) {
  auto f = fixture({{"rotab", {4}}, {"khorma", {3}}});
  const auto p = build_rule_prompt(f.concept_, select_context_sentences(f.concept_, f.corpus), "Farsi");
  EXPECT_EQ(p.variations, (std::vector<std::string>{"khorma", "rotab"}));
  EXPECT_EQ(p.system.rfind("Please only return a json with the following keys khorma, rotab and no other text.", 0), 0u);
  EXPECT_NE(p.system.find("usage of that Farsi word"), std::string::npos);
  EXPECT_NE(p.system.find("from Farsi to Latin characters"), std::string::npos);
  EXPECT_EQ(p.user.rfind("When translating the concept \"date\" from English to Farsi, what is the difference "
                         "in meaning between khorma, rotab",
                         0),
            0u);
  EXPECT_NE(p.user.find("\n\nkhorma:\n- date w1 w2\n\nrotab:\n- date w1 w2 w3"), std::string::npos);
  EXPECT_THROW(build_rule_prompt(f.concept_, {}, "Farsi"), Error);
}

TEST(ExtractJson, Shapes) {
  EXPECT_EQ(*extract_json_object(R"({"a": "b"})"), (json{{"a", "b"}}));
  EXPECT_EQ(*extract_json_object("```json\n{\"a\": \"b\"}\n```"), (json{{"a", "b"}}));
  EXPECT_EQ(*extract_json_object("```\n{\"a\": \"b\"}```"), (json{{"a", "b"}}));
  EXPECT_EQ(*extract_json_object("Here you go: {\"a\": \"b\"} hope it helps"), (json{{"a", "b"}}));
  EXPECT_FALSE(extract_json_object("no json here"));
  EXPECT_FALSE(extract_json_object("```{\"a\":1}``` and ```{\"b\":2}```"));
  EXPECT_FALSE(extract_json_object("```json\n{\"a\": 1}"));
  EXPECT_FALSE(extract_json_object("{broken"));
  EXPECT_FALSE(extract_json_object("[1, 2]"));
}

TEST(GenerateRules, FencedJsonParsesAndCaches) {
  auto f = fixture({{"khorma", {5}}, {"rotab", {6}}});
  MockEndpoint mock([](const json&) { return fenced_rules(); });
  HttpChatModel model(endpoint_for(mock));
  testing_support::TempDir dir;
  RuleOptions opts;
  opts.target_language = "Farsi";
  {
    RuleCache cache(dir / "cache");
    const auto rs = generate_rules(model, f.concept_, f.corpus, opts, cache);
    EXPECT_EQ(rs.rules.at("khorma"), "dried date");
    EXPECT_EQ(rs.rules.at("rotab"), "fresh date");
    EXPECT_EQ(rs.generator, "mock");
    EXPECT_TRUE(std::filesystem::exists(rs.raw_response_ref));
    EXPECT_EQ(mock.requests(), 1u);
    generate_rules(model, f.concept_, f.corpus, opts, cache);
    EXPECT_EQ(mock.requests(), 1u);
  }
  RuleCache reopened(dir / "cache");
  const auto again = generate_rules(model, f.concept_, f.corpus, opts, reopened);
  EXPECT_EQ(mock.requests(), 1u);
  EXPECT_EQ(again.rules.at("rotab"), "fresh date");

  const auto record = jsonl::read_json(again.raw_response_ref);
  EXPECT_EQ(record["raw_responses"].size(), 1u);
  EXPECT_EQ(record["concept"]["lemma"], "date");

  const auto body = mock.bodies().front();
  EXPECT_EQ(body["messages"][0]["role"], "system");
  EXPECT_EQ(body["temperature"], 0.0);
}

TEST(GenerateRules, RetriesOnceWithRestatedFormat) {
  auto f = fixture({{"khorma", {5}}, {"rotab", {6}}});
  int n = 0;
  CallbackChatModel model("scripted", [&](const ChatRequest& r) -> std::string {
    if (n++ == 0) return "Khorma is dried, rotab is fresh.";
    EXPECT_NE(testing_support::user_text(r).find(
                  "\n\nPlease only return a json with the following keys khorma, rotab and no other text."),
              std::string::npos);
    return R"({"khorma": "dried", "rotab": "fresh"})";
  });
  RuleCache cache;
  const auto rs = generate_rules(model, f.concept_, f.corpus, {}, cache);
  EXPECT_EQ(model.calls(), 2u);
  EXPECT_EQ(rs.rules.size(), 2u);
}

TEST(GenerateRules, TwoFailuresRaiseWithBothResponses) {
  auto f = fixture({{"khorma", {5}}, {"rotab", {6}}});
  int n = 0;
  CallbackChatModel model("scripted", [&](const ChatRequest&) {
    return n++ == 0 ? std::string("nope") : std::string(R"({"khorma": "dried"})");
  });
  RuleCache cache;
  try {
    generate_rules(model, f.concept_, f.corpus, {}, cache);
    FAIL();
  } catch (const GenerationError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::generation);
    EXPECT_EQ(e.raw_responses(), (std::vector<std::string>{"nope", R"({"khorma": "dried"})"}));
  }
  EXPECT_THROW(generate_rules(model, f.concept_, f.corpus, {}, cache), GenerationError);
  EXPECT_EQ(model.calls(), 4u);
}

TEST(GenerateRules, ConcurrentRequestsCoalesce) {
  auto f = fixture({{"khorma", {5}}, {"rotab", {6}}});
  CallbackChatModel model("slow", [](const ChatRequest&) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    return std::string(R"({"khorma": "dried", "rotab": "fresh"})");
  });
  RuleCache cache;
  const CorpusIndex index(f.corpus);
  parallel_for(8, 8, [&](std::size_t) { generate_rules(model, f.concept_, index, {}, cache); });
  EXPECT_EQ(model.calls(), 1u);
}

TEST(GenerateRules, BatchCollectsFailures) {
  auto good = fixture({{"khorma", {5}}, {"rotab", {6}}});
  auto bad = good.concept_;
  bad.lemma = "fig";
  CallbackChatModel model("m", [](const ChatRequest& r) {
    return testing_support::user_text(r).find("\"fig\"") != std::string::npos
               ? std::string("no")
               : std::string(R"({"khorma": "dried", "rotab": "fresh"})");
  });
  RuleCache cache;
  log::Capture cap;
  const auto batch = generate_rules_batch(model, {good.concept_, bad}, good.corpus, {}, cache, 2);
  ASSERT_EQ(batch.rules.size(), 1u);
  ASSERT_EQ(batch.failures.size(), 1u);
  EXPECT_EQ(batch.failures[0].first.lemma, "fig");
  EXPECT_TRUE(cap.saw("rule_generation_failed"));
  EXPECT_EQ(rules_to_verify(batch.rules).size(), 2u);
}

TEST(GenerateRules, TransportFailureSurfaces) {
  auto f = fixture({{"khorma", {5}}, {"rotab", {6}}});
  MockEndpoint mock([](const json&) { return fenced_rules(); });
  mock.fail_next(5);
  HttpChatModel model(endpoint_for(mock));
  RuleCache cache;
  EXPECT_THROW(generate_rules(model, f.concept_, f.corpus, {}, cache), TransportError);
}

TEST(RuleSets, JsonlRoundTrip) {
  testing_support::TempDir dir;
  RuleSet a{{"date", "NOUN"}, {{"khorma", "dried"}, {"rotab", "fresh"}}, "m", "ref", std::nullopt};
  RuleSet b = a;
  b.concept_key.lemma = "fig";
  b.verified = std::map<std::string, RuleLabel>{{"khorma", RuleLabel::correct}, {"rotab", RuleLabel::unlabeled}};
  write_rules(dir / "r.jsonl", {a, b});
  const auto back = read_rules(dir / "r.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.at(a.concept_key).rules, a.rules);
  EXPECT_FALSE(back.at(a.concept_key).verified);
  EXPECT_EQ(back.at(b.concept_key).verified->at("khorma"), RuleLabel::correct);
  EXPECT_THROW(parse_rule_label("maybe"), Error);
}
