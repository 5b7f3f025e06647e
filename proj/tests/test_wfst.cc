#include "asrdec/wfst.h"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <vector>

#include "asrdec/util.h"

namespace asrdec {
namespace {

const std::string kM = TokenInventory::kWordMarker;

// Inventory with single-character units: ids 4,5,6 = marked a,b,c.
TokenInventory CharInventory() { return TokenInventory::Train({"a b c"}, 7); }

NGramModel WordLm(const std::vector<std::vector<std::string>>& sents,
                  int order) {
  return EstimateKneserNey(CountNgrams(sents, order));
}

PosteriorMatrix RandomLogits(int T, int V, int seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g(0.0, 1.5);
  PosteriorMatrix m;
  m.frames = T;
  m.vocab = V;
  m.kind = PosteriorKind::kRawLogit;
  m.values.resize(static_cast<size_t>(T) * V);
  for (auto& v : m.values) v = static_cast<float>(g(rng));
  return m;
}

std::vector<int> Collapse(const std::vector<int>& path, int blank) {
  std::vector<int> out;
  for (size_t i = 0; i < path.size(); ++i) {
    if (i > 0 && path[i] == path[i - 1]) continue;
    if (path[i] != blank) out.push_back(path[i]);
  }
  return out;
}

std::map<std::vector<int>, double> BruteCollapsedDist(
    const PosteriorMatrix& logits, int blank) {
  PosteriorMatrix post = logits.Normalized();
  const int T = post.frames, V = post.vocab;
  std::map<std::vector<int>, double> dist;
  long long num = 1;
  for (int t = 0; t < T; ++t) num *= V;
  std::vector<int> path(T);
  for (long long code = 0; code < num; ++code) {
    long long c = code;
    for (int t = 0; t < T; ++t) {
      path[t] = static_cast<int>(c % V);
      c /= V;
    }
    double lp = 0.0;
    for (int t = 0; t < T; ++t) lp += post.at(t, path[t]);
    dist[Collapse(path, blank)] += std::exp(lp);
  }
  return dist;
}

TEST(LexiconFst, AcceptsExactlyThePronunciations) {
  auto inv = CharInventory();
  auto lex = ParseLexicon("ab\t" + kM + "a " + kM + "b\n"
                          "a\t" + kM + "a\n",
                          inv);
  auto L = BuildLexiconFst(lex, inv.vocab_size());
  int a = inv.id_of(kM + "a"), b = inv.id_of(kM + "b"), c = inv.id_of(kM + "c");
  EXPECT_EQ(StringWeight(L, {a, b}), 0.0);
  EXPECT_EQ(StringWeight(L, {a}), 0.0);
  EXPECT_EQ(StringWeight(L, {a, b, a}), 0.0);  // loop back to start
  EXPECT_EQ(StringWeight(L, {b}), kInfWeight);
  EXPECT_EQ(StringWeight(L, {a, c}), kInfWeight);
  EXPECT_EQ(StringWeight(L, {}), kInfWeight);  // start state is not final
}

TEST(LexiconFst, HomophonesGetAuxiliarySymbols) {
  auto inv = CharInventory();
  auto lex = ParseLexicon("one\t" + kM + "a\ntwo\t" + kM + "a\n", inv);
  auto L = BuildLexiconFst(lex, inv.vocab_size());
  int a = inv.id_of(kM + "a");
  // second copy requires the auxiliary symbol, so without treating it as
  // free the plain unit string only matches the first word
  EXPECT_EQ(StringWeight(L, {a}, /*aux_base=*/inv.vocab_size()), 0.0);
  int aux = inv.vocab_size();
  EXPECT_EQ(StringWeight(L, {a, aux}), 0.0);  // explicit aux traversal
}

TEST(Lexicon, ParseRejectsBadLines) {
  auto inv = CharInventory();
  EXPECT_THROW(ParseLexicon("", inv), std::runtime_error);
  EXPECT_THROW(ParseLexicon("w\t\n", inv), std::runtime_error);
  EXPECT_THROW(ParseLexicon("w\tzz\n", inv), std::runtime_error);  // bad unit
}

TEST(Compose, HandComputedWeights) {
  // a: one arc 1:2/0.5 ; b: 2:3/0.25 -> composed 1:3/0.75
  Wfst a;
  a.start = a.AddState();
  int a1 = a.AddState();
  a.AddArc(a.start, 1, 2, 0.5, a1);
  a.finals[a1] = 0.125;
  Wfst b;
  b.start = b.AddState();
  int b1 = b.AddState();
  b.AddArc(b.start, 2, 3, 0.25, b1);
  b.finals[b1] = 0.0625;
  auto c = Compose(a, b);
  EXPECT_NEAR(StringWeight(c, {1}), 0.5 + 0.25 + 0.125 + 0.0625, 1e-12);
  EXPECT_EQ(StringWeight(c, {2}), kInfWeight);
}

TEST(Compose, RejectsAlphabetMismatch) {
  Wfst a;
  a.start = a.AddState();
  a.num_olabels = 3;
  Wfst b;
  b.start = b.AddState();
  b.num_ilabels = 4;
  EXPECT_THROW(Compose(a, b), std::invalid_argument);
}

TEST(Compose, EpsilonPathsAreNotDoubleCounted) {
  // a has an output-epsilon arc, b has an input-epsilon arc; the sequencing
  // filter must admit exactly one interleaving of the two.
  Wfst a;
  a.start = a.AddState();
  int a1 = a.AddState(), a2 = a.AddState();
  a.AddArc(a.start, 1, kEpsilon, 0.0, a1);
  a.AddArc(a1, 2, 5, 0.0, a2);
  a.finals[a2] = 0.0;
  Wfst b;
  b.start = b.AddState();
  int b1 = b.AddState(), b2 = b.AddState();
  b.AddArc(b.start, kEpsilon, 7, 0.0, b1);
  b.AddArc(b1, 5, 9, 0.0, b2);
  b.finals[b2] = 0.0;
  auto c = Compose(a, b);
  int accepting = 0;
  for (const auto& [s, w] : c.finals) accepting += 1;
  EXPECT_EQ(StringWeight(c, {1, 2}), 0.0);
  EXPECT_EQ(accepting, 1);
}

// Grammar shortest path must reproduce the LM sequence score exactly: with
// interpolated smoothing the stored-probability route never loses to its
// own backoff route.
TEST(GrammarFst, ShortestPathEqualsLmScore) {
  std::vector<std::vector<std::string>> sents = {
      {"a", "b"}, {"a", "b"}, {"b", "c"}, {"a", "b", "c"}, {"c"}};
  auto lm = WordLm(sents, 2);
  auto inv = CharInventory();
  auto lex = ParseLexicon("a\t" + kM + "a\nb\t" + kM + "b\nc\t" + kM + "c\n",
                          inv);
  auto G = ArpaToGrammarFstForLexicon(lm, lex);
  std::vector<std::string> words = {"a", "b", "c"};
  // every word sequence up to length 3, seen or not
  std::vector<std::vector<int>> seqs = {{}};
  for (int len = 1; len <= 3; ++len) {
    std::vector<std::vector<int>> next;
    for (const auto& s : seqs) {
      if (static_cast<int>(s.size()) + 1 != len) continue;
      for (int w = 0; w < 3; ++w) {
        auto e = s;
        e.push_back(w);
        next.push_back(e);
      }
    }
    seqs.insert(seqs.end(), next.begin(), next.end());
  }
  for (const auto& s : seqs) {
    Ngram lm_ids;
    std::vector<int> labels;
    for (int w : s) {
      lm_ids.push_back(lm.WordId(words[w]));
      labels.push_back(lex.label_of(w));
    }
    double want = -kLn10 * lm.SequenceLogProb(lm_ids);
    EXPECT_NEAR(StringWeight(G, labels), want, 1e-9)
        << "sequence size " << s.size();
  }
}

TEST(GrammarFst, ComposedLgScoresUnitStrings) {
  std::vector<std::vector<std::string>> sents = {
      {"ab", "c"}, {"ab"}, {"c", "ab"}, {"cb", "c"}};
  auto lm = WordLm(sents, 2);
  auto inv = CharInventory();
  auto lex = ParseLexicon("ab\t" + kM + "a " + kM + "b\n"
                          "c\t" + kM + "c\n"
                          "cb\t" + kM + "c " + kM + "b\n",
                          inv);
  auto L = BuildLexiconFst(lex, inv.vocab_size());
  auto G = ArpaToGrammarFstForLexicon(lm, lex);
  auto LG = Compose(L, G);
  int a = inv.id_of(kM + "a"), b = inv.id_of(kM + "b"), c = inv.id_of(kM + "c");
  auto lm_cost = [&](const std::vector<std::string>& ws) {
    Ngram ids;
    for (const auto& w : ws) ids.push_back(lm.WordId(w));
    return -kLn10 * lm.SequenceLogProb(ids);
  };
  int aux = inv.vocab_size();
  EXPECT_NEAR(StringWeight(LG, {a, b}, aux), lm_cost({"ab"}), 1e-9);
  EXPECT_NEAR(StringWeight(LG, {a, b, c}, aux), lm_cost({"ab", "c"}), 1e-9);
  EXPECT_NEAR(StringWeight(LG, {c, b, c}, aux), lm_cost({"cb", "c"}), 1e-9);
  // {c, b} parses only as the word "cb"
  EXPECT_NEAR(StringWeight(LG, {c, b}, aux), lm_cost({"cb"}), 1e-9);
  // no parse at all
  EXPECT_EQ(StringWeight(LG, {b}, aux), kInfWeight);
}

TEST(TlgDecode, MatchesBruteForceOracle) {
  // one-unit words so every unit string over {a,b,c} parses
  std::vector<std::vector<std::string>> sents = {
      {"a", "b"}, {"b", "c"}, {"a"}, {"c", "c"}, {"b"}};
  auto lm = WordLm(sents, 2);
  auto inv = CharInventory();
  auto lex = ParseLexicon("a\t" + kM + "a\nb\t" + kM + "b\nc\t" + kM + "c\n",
                          inv);
  auto LG = Compose(BuildLexiconFst(lex, inv.vocab_size()),
                    ArpaToGrammarFstForLexicon(lm, lex));
  int aux = inv.vocab_size();
  FusionConfig cfg;
  cfg.beam = 5000;
  cfg.lm_weight = 0.4;
  for (int trial = 0; trial < 20; ++trial) {
    int T = 1 + trial % 4;
    auto logits = RandomLogits(T, inv.vocab_size(), 900 + trial);
    auto dist = BruteCollapsedDist(logits, inv.blank_id());
    // oracle: ln(mass) - lambda * best accepting graph cost
    double best = -kInfWeight;
    std::vector<int> best_seq;
    for (const auto& [seq, mass] : dist) {
      double g = StringWeight(LG, seq, aux);
      if (g == kInfWeight) continue;
      double s = std::log(mass) - cfg.lm_weight * g;
      if (s > best) {
        best = s;
        best_seq = seq;
      }
    }
    auto res = TlgDecode(logits, LG, inv.blank_id(), cfg, aux);
    ASSERT_TRUE(res.complete) << "trial " << trial;
    EXPECT_EQ(res.unit_ids, best_seq) << "trial " << trial;
    EXPECT_NEAR(res.score, best, 1e-9) << "trial " << trial;
    EXPECT_EQ(res.word_labels.size(), res.unit_ids.size());
  }
}

TEST(TlgDecode, ReportsIncompleteWhenNothingParses) {
  // single two-unit word but only one frame: no hypothesis can finish
  std::vector<std::vector<std::string>> sents = {{"ab"}};
  auto lm = WordLm(sents, 2);
  auto inv = CharInventory();
  auto lex = ParseLexicon("ab\t" + kM + "a " + kM + "b\n", inv);
  auto LG = Compose(BuildLexiconFst(lex, inv.vocab_size()),
                    ArpaToGrammarFstForLexicon(lm, lex));
  FusionConfig cfg;
  cfg.beam = 64;
  auto logits = RandomLogits(1, inv.vocab_size(), 5);
  auto res = TlgDecode(logits, LG, inv.blank_id(), cfg, inv.vocab_size());
  EXPECT_FALSE(res.complete);
}

TEST(TlgGraphIo, SaveLoadRoundTrip) {
  std::vector<std::vector<std::string>> sents = {{"a", "b"}, {"b"}};
  auto lm = WordLm(sents, 2);
  auto inv = CharInventory();
  auto lex = ParseLexicon("a\t" + kM + "a\nb\t" + kM + "b\n", inv);
  auto LG = Compose(BuildLexiconFst(lex, inv.vocab_size()),
                    ArpaToGrammarFstForLexicon(lm, lex));
  std::string path = ::testing::TempDir() + "/tlg_roundtrip.txt";
  SaveTlgGraph(LG, lex.words, inv.vocab_size(), inv.vocab_size(), path);
  auto back = LoadTlgGraph(path);
  EXPECT_EQ(back.num_units, inv.vocab_size());
  EXPECT_EQ(back.aux_base, inv.vocab_size());
  ASSERT_EQ(back.words.size(), 3u);
  EXPECT_EQ(back.words[1], "a");
  EXPECT_EQ(back.fst.Dump(), LG.Dump());
  std::remove(path.c_str());
}

TEST(TlgGraphIo, LoadRejectsMalformedFile) {
  std::string path = ::testing::TempDir() + "/tlg_bad.txt";
  {
    std::FILE* f = std::fopen(path.c_str(), "w");
    std::fputs("TLG v2\n", f);
    std::fclose(f);
  }
  EXPECT_THROW(LoadTlgGraph(path), std::runtime_error);
  std::remove(path.c_str());
}

}  // namespace
}  // namespace asrdec
