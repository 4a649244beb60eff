#include <gtest/gtest.h>

#include "support.hpp"

using namespace lexsel;
using testing_support::TempDir;
using testing_support::write_file;

TEST(Text, Utf8RoundTrip) {
  const std::string s = "Ծառ дерево 木 ḱ";
  EXPECT_EQ(text::encode_utf8(text::decode_utf8(s)), s);
  EXPECT_EQ(text::length_utf8("Ծառ"), 3u);
}

TEST(Text, CaseFoldAcrossScripts) {
  EXPECT_EQ(text::case_fold("KHORMA"), "khorma");
  EXPECT_EQ(text::case_fold("ÄÖÜ"), "äöü");
  EXPECT_EQ(text::case_fold("ДЕРЕВО"), "дерево");
  EXPECT_EQ(text::case_fold("ԾԱՌ"), "ծառ");
  EXPECT_EQ(text::case_fold("ΣΟΦΊΑ"), "σοφία");
}

TEST(Text, PunctTokenizerPeelsEdges) {
  EXPECT_EQ(text::tokenize("Hello, world!"), (std::vector<std::string>{"Hello", ",", "world", "!"}));
  EXPECT_EQ(text::tokenize("\"khorma.\""), (std::vector<std::string>{"\"", "khorma", ".", "\""}));
  EXPECT_EQ(text::tokenize("don't"), (std::vector<std::string>{"don't"}));
  EXPECT_EQ(text::tokenize("«дерево»"), (std::vector<std::string>{"«", "дерево", "»"}));
  EXPECT_EQ(text::tokenize("Hello, world!", text::Tokenizer::whitespace),
            (std::vector<std::string>{"Hello,", "world!"}));
}

TEST(Corpus, MosesThreeLinesGivesSequentialIds) {
  TempDir dir;
  auto src = write_file(dir / "tiny.en", "a b\nc\nd e f\n");
  auto tgt = write_file(dir / "tiny.fa", "x\ny z\nw\n");
  auto c = load_parallel(src, tgt, ParallelFormat::moses);
  ASSERT_EQ(c.pairs.size(), 3u);
  EXPECT_EQ(c.pairs[0].id, "tiny:0");
  EXPECT_EQ(c.pairs[2].id, "tiny:2");
  EXPECT_EQ(c.pairs[2].source_tokens.size(), 3u);
  EXPECT_EQ(c.pairs[1].target_tokens[1].lemma, "z");
  EXPECT_EQ(c.pairs[1].target_tokens[1].pos, "X");
  EXPECT_FALSE(c.pairs[0].source_tokens[0].sense_id);
  EXPECT_TRUE(c.pairs[0].alignment.empty());
  EXPECT_EQ(load_parallel(src, tgt, ParallelFormat::moses), c);
}

TEST(Corpus, MosesLineCountMismatchNamesBothCounts) {
  TempDir dir;
  auto src = write_file(dir / "a.en", "1\n2\n3\n4\n");
  auto tgt = write_file(dir / "a.fa", "1\n2\n3\n");
  try {
    load_moses(src, tgt);
    FAIL() << "expected mismatch";
  } catch (const CountMismatchError& e) {
    EXPECT_EQ(e.expected(), 4u);
    EXPECT_EQ(e.actual(), 3u);
    EXPECT_NE(std::string(e.what()).find("4 vs 3"), std::string::npos);
  }
}

TEST(Corpus, TsvRowsAndMalformedRow) {
  TempDir dir;
  auto good = write_file(dir / "g.tsv", "hello world\tbonjour monde\n");
  auto c = load_tsv(good);
  ASSERT_EQ(c.pairs.size(), 1u);
  EXPECT_EQ(c.pairs[0].source_tokens.size(), 2u);
  EXPECT_EQ(c.pairs[0].target_tokens.size(), 2u);

  auto bad = write_file(dir / "b.tsv", "a\tb\nno tab here\n");
  try {
    load_tsv(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::format);
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos);
  }
}

namespace {

std::string conllu_row(int id, const std::string& form, const std::string& lemma, const std::string& upos,
                       const std::string& misc = "_") {
  return std::to_string(id) + "\t" + form + "\t" + lemma + "\t" + upos + "\t_\t_\t_\t_\t_\t" + misc + "\n";
}

}  // namespace

TEST(Corpus, ConlluColumnsMapToTokens) {
  TempDir dir;
  auto c = testing_support::corpus_of({{"we eat dates", "x y z"}});
  auto file = write_file(dir / "s.conllu", "# sent_id = s1\n# text = we eat dates\n" + conllu_row(1, "we", "we", "PRON") +
                                               "1-2\twe-eat\t_\t_\t_\t_\t_\t_\t_\t_\n" +
                                               conllu_row(2, "eat", "eat", "VERB") +
                                               conllu_row(3, "dates", "date", "NOUN", "Sense=date%1:13:00::") + "\n");
  auto out = attach_conllu(c, Side::source, file);
  const auto& t = out.pairs[0].source_tokens[2];
  EXPECT_EQ(t.lemma, "date");
  EXPECT_EQ(t.pos, "NOUN");
  EXPECT_EQ(t.sense_id, std::optional<std::string>("date%1:13:00::"));
  EXPECT_EQ(out.pairs[0].source_tokens.size(), 3u);
  EXPECT_EQ(out.pairs[0].target_tokens, c.pairs[0].target_tokens);
}

TEST(Corpus, ConlluUnderscoreLemmaFallsBack) {
  TempDir dir;
  auto c = testing_support::corpus_of({{"Dates", "x"}});
  auto file = write_file(dir / "s.conllu", conllu_row(1, "Dates", "_", "NOUN") + "\n");
  EXPECT_EQ(attach_conllu(c, Side::source, file).pairs[0].source_tokens[0].lemma, "dates");
}

TEST(Corpus, ConlluBlockCountMismatch) {
  TempDir dir;
  auto c = testing_support::corpus_of({{"a", "x"}, {"b", "y"}});
  auto file = write_file(dir / "s.conllu", conllu_row(1, "a", "a", "X") + "\n");
  try {
    attach_conllu(c, Side::source, file);
    FAIL();
  } catch (const CountMismatchError& e) {
    EXPECT_EQ(e.expected(), 2u);
    EXPECT_EQ(e.actual(), 1u);
  }
}

TEST(Corpus, ConlluTokenMismatchNamesSentenceUnlessOverridden) {
  TempDir dir;
  auto c = testing_support::corpus_of({{"a b c", "x"}});
  auto file = write_file(dir / "s.conllu", "# sent_id = doc7\n" + conllu_row(1, "a", "A1", "DET") +
                                               conllu_row(2, "b", "B1", "NOUN") + "\n");
  try {
    attach_conllu(c, Side::source, file);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::mismatch);
    EXPECT_NE(std::string(e.what()).find("doc7"), std::string::npos);
  }
  auto out = attach_conllu(c, Side::source, file, {.allow_token_count_mismatch = true});
  ASSERT_EQ(out.pairs[0].source_tokens.size(), 3u);
  EXPECT_EQ(out.pairs[0].source_tokens[1].lemma, "B1");
  EXPECT_EQ(out.pairs[0].source_tokens[2].lemma, "c");
}

TEST(Corpus, PharaohParsing) {
  EXPECT_EQ(parse_pharaoh("0-0 1-2", 1, 2, 3), (Alignment{{0, 0}, {1, 2}}));
  EXPECT_EQ(parse_pharaoh("0-0 0-0", 1, 1, 1), (Alignment{{0, 0}}));
  EXPECT_TRUE(parse_pharaoh("", 1, 1, 1).empty());
  try {
    parse_pharaoh("5-0", 4, 3, 3);
    FAIL();
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("line 4"), std::string::npos);
    EXPECT_NE(msg.find("5-0"), std::string::npos);
  }
  for (const char* bad : {"0_1", "a-1", "1-", "-1", "1-2-3"}) {
    try {
      parse_pharaoh(bad, 9, 5, 5);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::format) << bad;
      EXPECT_NE(std::string(e.what()).find("line 9"), std::string::npos);
    }
  }
}

TEST(Corpus, AttachAlignmentsKeepsShape) {
  TempDir dir;
  auto c = testing_support::corpus_of({{"a b", "x y z"}, {"c", "w"}});
  auto file = write_file(dir / "a.pharaoh", "0-0 1-2\n0-0\n");
  auto out = attach_alignments(c, file);
  EXPECT_EQ(out.pairs[0].alignment, (Alignment{{0, 0}, {1, 2}}));
  EXPECT_EQ(out.pairs.size(), c.pairs.size());
  EXPECT_EQ(out.pairs[0].target_tokens.size(), 3u);
  EXPECT_THROW(attach_alignments(c, write_file(dir / "short.pharaoh", "0-0\n")), CountMismatchError);
}

TEST(Corpus, JsonlRoundTripIsFieldForField) {
  TempDir dir;
  auto c = testing_support::corpus_of({{"the dates", "die Datteln"}, {"a tree", "ein Baum"}});
  c.language_pair = {"en", "de"};
  c.pairs[0].source_tokens[1].sense_id = "date%1:13:00::";
  c.pairs[0].source_tokens[1].pos = "NOUN";
  c.pairs[0].source_tokens[1].lemma = "date";
  c.pairs[0].alignment = {{0, 0}, {1, 1}};
  write_corpus(dir / "c.jsonl", c);
  EXPECT_EQ(read_corpus(dir / "c.jsonl"), c);
}

TEST(Corpus, ValidateRejectsDuplicateIdsAndBadLinks) {
  auto c = testing_support::corpus_of({{"a", "x"}, {"b", "y"}});
  c.pairs[1].id = c.pairs[0].id;
  EXPECT_THROW(validate(c), Error);
  auto d = testing_support::corpus_of({{"a", "x"}});
  d.pairs[0].alignment = {{0, 3}};
  EXPECT_THROW(validate(d), Error);
}
