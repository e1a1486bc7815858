#include "rlp/corpus/batch.hpp"
#include "rlp/corpus/demonstration.hpp"
#include "rlp/corpus/synthetic.hpp"
#include "rlp/corpus/vocabulary.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>

namespace rlp::corpus {
namespace {

const Vocabulary& desk() {
  static const Vocabulary v = Vocabulary::desk();
  return v;
}

TEST(Vocabulary, EmptyRoundTrip) {
  const auto ids = desk().tokenize("");
  EXPECT_TRUE(ids.empty());
  EXPECT_EQ(desk().detokenize(ids), "");
}

TEST(Vocabulary, TwoCharacterRoundTrip) {
  const auto ids = desk().tokenize("ab");
  ASSERT_EQ(ids.size(), 2u);
  EXPECT_EQ(ids[0], desk().id('a'));
  EXPECT_EQ(ids[1], desk().id('b'));
  EXPECT_EQ(desk().detokenize(ids), "ab");
}

TEST(Vocabulary, RoundTripOverWholeCharset) {
  std::string text = desk().charset();
  std::reverse(text.begin(), text.end());
  text += text;
  EXPECT_EQ(desk().detokenize(desk().tokenize(text)), text);
}

TEST(Vocabulary, BijectiveAndNeverReserved) {
  EXPECT_EQ(desk().size(), 64u);
  std::set<TokenId> seen;
  for (char c : desk().charset()) {
    const TokenId id = desk().id(c);
    EXPECT_FALSE(desk().is_reserved(id));
    EXPECT_TRUE(seen.insert(id).second);
    EXPECT_EQ(desk().character(id), c);
  }
}

TEST(Vocabulary, ReservedCharacterRejectedWithOffset) {
  const std::string text = std::string("ab") + '\x02' + "c";
  try {
    desk().tokenize(text);
    FAIL() << "expected TokenizeError";
  } catch (const TokenizeError& e) {
    EXPECT_EQ(e.character(), '\x02');
    EXPECT_EQ(e.offset(), 2u);
    EXPECT_NE(std::string(e.what()).find("offset 2"), std::string::npos);
  }
}

TEST(Vocabulary, UnsupportedCharacterNamed) {
  try {
    desk().tokenize("abcZ");
    FAIL() << "expected TokenizeError";
  } catch (const TokenizeError& e) {
    EXPECT_EQ(e.character(), 'Z');
    EXPECT_EQ(e.offset(), 3u);
    EXPECT_NE(std::string(e.what()).find("'Z'"), std::string::npos);
  }
}

TEST(Vocabulary, DuplicateCharsetRejected) { EXPECT_THROW(Vocabulary("aba"), std::invalid_argument); }

TEST(Synthetic, LookupDeterministicFromSeed) {
  SyntheticOptions opt;
  opt.keys = 2;
  const auto a = make_synthetic_corpus(desk(), Task::Lookup, 5, 42, opt);
  const auto b = make_synthetic_corpus(desk(), Task::Lookup, 5, 42, opt);
  ASSERT_EQ(a.size(), 5u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].tokens, b[i].tokens);
  const auto c = make_synthetic_corpus(desk(), Task::Lookup, 5, 43, opt);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs |= a[i].tokens != c[i].tokens;
  EXPECT_TRUE(differs);
}

// Parses "k1=v1;...;kn=vn?k:v" independently of the generator.
bool table_reader_agrees(const std::string& text, int keys) {
  const auto q = text.find('?');
  if (q == std::string::npos || text.size() != q + 4 || text[q + 2] != ':') return false;
  std::map<char, char> table;
  std::size_t entries = 0;
  for (std::size_t i = 0; i < q; i += 4) {
    if (text[i + 1] != '=') return false;
    if (i + 3 < q && text[i + 3] != ';') return false;
    if (!table.emplace(text[i], text[i + 2]).second) return false;
    ++entries;
  }
  if (entries != static_cast<std::size_t>(keys)) return false;
  const auto it = table.find(text[q + 1]);
  return it != table.end() && it->second == text[q + 3];
}

TEST(Synthetic, LookupTableReaderPredictsEveryAnswer) {
  SyntheticOptions opt;
  opt.keys = 5;
  const auto docs = make_synthetic_corpus(desk(), Task::Lookup, 500, 7, opt);
  for (const auto& d : docs) {
    const std::string text = desk().detokenize(d.tokens);
    EXPECT_TRUE(table_reader_agrees(text, opt.keys)) << text;
    ASSERT_EQ(d.answer_positions.size(), 1u);
    EXPECT_EQ(d.answer_positions[0], d.tokens.size() - 1);
    EXPECT_EQ(d.source, "lookup");
  }
}

TEST(Synthetic, CopyRepeatsFirstHalf) {
  const auto docs = make_synthetic_corpus(desk(), Task::Copy, 50, 3);
  for (const auto& d : docs) {
    const std::string text = desk().detokenize(d.tokens);
    const auto h = text.find('#');
    ASSERT_NE(h, std::string::npos);
    EXPECT_EQ(text.substr(0, h), text.substr(h + 1));
    EXPECT_EQ(d.answer_positions.size(), h);
  }
}

TEST(Synthetic, NoiseUsesValueAlphabetOnly) {
  const auto docs = make_synthetic_corpus(desk(), Task::UniformNoise, 200, 9);
  std::map<char, int> counts;
  for (const auto& d : docs) {
    for (char c : desk().detokenize(d.tokens)) ++counts[c];
  }
  EXPECT_EQ(counts.size(), kValueAlphabet.size());
  for (const auto& [c, n] : counts) EXPECT_NE(kValueAlphabet.find(c), std::string_view::npos);
}

TEST(Synthetic, DocumentsHaveNoReservedIdsAndLengthAtLeastTwo) {
  for (Task task : {Task::Lookup, Task::Copy, Task::UniformNoise}) {
    for (const auto& d : make_synthetic_corpus(desk(), task, 100, 11)) {
      EXPECT_GE(d.tokens.size(), 2u);
      for (TokenId t : d.tokens) EXPECT_FALSE(desk().is_reserved(t));
    }
  }
}

TEST(Synthetic, UnknownTaskRejected) {
  EXPECT_THROW(parse_task("poetry"), std::invalid_argument);
  EXPECT_EQ(parse_task("uniform-noise"), Task::UniformNoise);
  EXPECT_EQ(task_name(Task::Copy), "copy");
}

TEST(Synthetic, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "rlp_corpus_roundtrip.txt";
  const auto docs = make_synthetic_corpus(desk(), Task::Lookup, 20, 1);
  write_documents(path, docs, desk());
  const auto back = load_documents(path, desk());
  ASSERT_EQ(back.size(), docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) EXPECT_EQ(back[i].tokens, docs[i].tokens);
  std::filesystem::remove(path);
}

TEST(Batch, ForcedSingleTwoTokenDocument) {
  const std::vector<Document> corpus{{desk().tokenize("xy"), "t", {}}};
  BatchSpec spec;
  spec.batch_size = 1;
  const auto batch = sample_batch(corpus, spec);
  ASSERT_EQ(batch.size(), 1u);
  EXPECT_EQ(batch[0].prefix, std::vector<TokenId>{desk().id('x')});
  EXPECT_EQ(batch[0].target, desk().id('y'));
  EXPECT_EQ(batch[0].position, 1u);
}

TEST(Batch, DeterministicFromSeed) {
  const auto corpus = make_synthetic_corpus(desk(), Task::Copy, 30, 5);
  BatchSpec spec;
  spec.batch_size = 16;
  spec.seed = 77;
  const auto a = sample_batch(corpus, spec);
  const auto b = sample_batch(corpus, spec);
  ASSERT_EQ(a.size(), 16u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].prefix, b[i].prefix);
    EXPECT_EQ(a[i].target, b[i].target);
  }
}

TEST(Batch, AnswerPositionsTargetTheQueriedValue) {
  const auto corpus = make_synthetic_corpus(desk(), Task::Lookup, 100, 13);
  BatchSpec spec;
  spec.batch_size = 64;
  spec.policy = PositionPolicy::AnswerPositions;
  spec.seed = 3;
  for (const auto& ctx : sample_batch(corpus, spec)) {
    const auto& doc = corpus[ctx.document];
    EXPECT_EQ(ctx.position, doc.tokens.size() - 1);
    EXPECT_NE(kValueAlphabet.find(desk().character(ctx.target)), std::string_view::npos);
    EXPECT_EQ(ctx.prefix.back(), desk().id(':'));
  }
}

TEST(Batch, ShortDocumentsSkippedAndEmptyResultRejected) {
  const std::vector<Document> tiny{{desk().tokenize("x"), "t", {}}};
  EXPECT_THROW(sample_batch(tiny, BatchSpec{}), std::invalid_argument);
  EXPECT_THROW(sample_batch(std::vector<Document>{}, BatchSpec{}), std::invalid_argument);
  BatchSpec zero;
  zero.batch_size = 0;
  EXPECT_THROW(sample_batch(tiny, zero), std::invalid_argument);

  std::vector<Document> mixed = tiny;
  mixed.push_back({desk().tokenize("ab"), "t", {}});
  const auto batch = sample_batch(mixed, BatchSpec{});
  for (const auto& ctx : batch) EXPECT_EQ(ctx.document, 1u);
}

TEST(Batch, MaxPrefixKeepsTrailingWindow) {
  const std::vector<Document> corpus{{desk().tokenize("abcdefgh"), "t", {}}};
  const auto ctx = make_context(corpus[0], 0, 6, 3);
  EXPECT_EQ(desk().detokenize(ctx.prefix), "def");
  EXPECT_EQ(ctx.target, desk().id('g'));
}

TEST(Batch, StreamPolicyUniformOverEligiblePositions) {
  // Unequal document lengths so a per-document draw would be visibly biased.
  std::vector<Document> corpus;
  for (const char* s : {"ab", "abcde", "abcdefghij", "abc"}) corpus.push_back({desk().tokenize(s), "t", {}});
  const std::size_t cells = 1 + 4 + 9 + 2;
  std::map<std::pair<std::size_t, std::size_t>, int> counts;
  const int per_batch = 1000;
  const int batches = 100;
  for (int s = 0; s < batches; ++s) {
    BatchSpec spec;
    spec.batch_size = per_batch;
    spec.seed = 1000 + static_cast<std::uint64_t>(s);
    for (const auto& ctx : sample_batch(corpus, spec)) ++counts[{ctx.document, ctx.position}];
  }
  ASSERT_EQ(counts.size(), cells);
  const double expected = static_cast<double>(per_batch) * batches / static_cast<double>(cells);
  double chi2 = 0.0;
  for (const auto& [key, n] : counts) chi2 += (n - expected) * (n - expected) / expected;
  const boost::math::chi_squared dist(static_cast<double>(cells - 1));
  EXPECT_GT(boost::math::cdf(boost::math::complement(dist, chi2)), 0.01) << "chi2 = " << chi2;
}

TEST(Batch, AllPositionsEnumeratesInOrder) {
  const auto corpus = make_synthetic_corpus(desk(), Task::Copy, 3, 2);
  const auto all = all_positions(corpus, PositionPolicy::AnswerPositions);
  std::size_t expected = 0;
  for (const auto& d : corpus) expected += d.answer_positions.size();
  ASSERT_EQ(all.size(), expected);
  EXPECT_EQ(all.front().document, 0u);
  EXPECT_EQ(all.back().document, 2u);
}

TEST(Demonstration, LookupTraces) {
  const Document doc{desk().tokenize("a=1;b=2;c=3?b:2"), "lookup", {14}};
  Rng rng(0);
  EXPECT_EQ(desk().detokenize(worked_trace(doc, 14, TraceKind::Answer, desk(), rng)), "2");
  EXPECT_EQ(desk().detokenize(worked_trace(doc, 14, TraceKind::Binding, desk(), rng)), "b=2");
  EXPECT_EQ(desk().detokenize(worked_trace(doc, 14, TraceKind::Scan, desk(), rng)), "a=1;b=2");
  EXPECT_THROW(worked_trace(doc, 10, TraceKind::Scan, desk(), rng), std::invalid_argument);
}

TEST(Demonstration, CopyTraces) {
  const Document doc{desk().tokenize("xyz#xyz"), "copy", {4, 5, 6}};
  Rng rng(0);
  EXPECT_EQ(desk().detokenize(worked_trace(doc, 5, TraceKind::Answer, desk(), rng)), "y");
  EXPECT_EQ(desk().detokenize(worked_trace(doc, 5, TraceKind::Scan, desk(), rng)), "xy");
}

TEST(Demonstration, NoiseTraceIsShortDigits) {
  const auto docs = make_synthetic_corpus(desk(), Task::UniformNoise, 1, 4);
  Rng rng(8);
  for (int i = 0; i < 50; ++i) {
    const auto trace = worked_trace(docs[0], 3, TraceKind::Scan, desk(), rng);
    ASSERT_GE(trace.size(), 1u);
    ASSERT_LE(trace.size(), 3u);
    for (TokenId t : trace) EXPECT_NE(kValueAlphabet.find(desk().character(t)), std::string_view::npos);
  }
}

TEST(Demonstration, SpliceBracketsTrace) {
  const Document doc{desk().tokenize("ab:c"), "t", {}};
  const auto trace = desk().tokenize("q");
  const auto out = splice_thought(doc, 3, trace);
  const std::vector<TokenId> expected{desk().id('a'), desk().id('b'), desk().id(':'), kThinkOpen,
                                      desk().id('q'), kThinkClose,    desk().id('c')};
  EXPECT_EQ(out, expected);
  EXPECT_THROW(splice_thought(doc, 0, trace), std::out_of_range);
}

}  // namespace
}  // namespace rlp::corpus
