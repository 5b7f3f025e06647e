#include "asrdec/decoder.h"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "asrdec/util.h"

namespace asrdec {
namespace {

PosteriorMatrix Logits(int T, int V, std::vector<double> vals) {
  PosteriorMatrix m;
  m.frames = T;
  m.vocab = V;
  m.kind = PosteriorKind::kRawLogit;
  for (double x : vals) m.values.push_back(static_cast<float>(x));
  return m;
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

// Exact posterior over collapsed sequences by enumerating all V^T paths.
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

TEST(CtcGreedy, CollapsesRepeatsAndBlanks) {
  // argmax labels per frame: 1 1 0 1 2 2 -> collapse -> 1 1 2
  auto m = Logits(6, 3, {0, 9, 0,  0, 9, 0,  9, 0, 0,
                         0, 9, 0,  0, 0, 9,  0, 0, 9});
  EXPECT_EQ(CtcGreedyDecode(m, 0), (std::vector<int>{1, 1, 2}));
}

TEST(CtcPrefixBeam, ExactAgainstEnumerationNoLm) {
  std::mt19937 rng(4);
  for (int trial = 0; trial < 40; ++trial) {
    int T = 1 + static_cast<int>(rng() % 4);
    int V = 2 + static_cast<int>(rng() % 3);
    auto logits = RandomLogits(T, V, 500 + trial);
    auto dist = BruteCollapsedDist(logits, 0);
    std::vector<int> best_seq;
    double best_p = -1.0;
    for (const auto& [seq, p] : dist) {
      if (p > best_p) {  // map order = lexicographic tie-break, first wins
        best_p = p;
        best_seq = seq;
      }
    }
    FusionConfig cfg;
    cfg.beam = 500;  // exceeds the number of distinct prefixes: exact search
    cfg.lm_weight = 0.0;
    cfg.nbest = 1;
    auto hyps = CtcPrefixBeamSearch(logits, nullptr, cfg, 0);
    ASSERT_EQ(hyps.size(), 1u);
    EXPECT_EQ(hyps[0].ids, best_seq) << "trial " << trial;
    EXPECT_NEAR(std::exp(hyps[0].acoustic), best_p, 1e-9);
  }
}

TEST(CtcPrefixBeam, NbestIsSortedAndScoresRecompute) {
  auto logits = RandomLogits(4, 4, 77);
  FusionConfig cfg;
  cfg.beam = 16;
  cfg.nbest = 8;
  cfg.length_bonus = 0.1;
  auto hyps = CtcPrefixBeamSearch(logits, nullptr, cfg, 0);
  ASSERT_GT(hyps.size(), 1u);
  for (size_t i = 0; i < hyps.size(); ++i) {
    if (i) EXPECT_GE(hyps[i - 1].combined, hyps[i].combined);
    EXPECT_NEAR(hyps[i].combined,
                hyps[i].acoustic + cfg.lm_weight * hyps[i].lm +
                    cfg.length_bonus * hyps[i].ids.size(),
                1e-12);
  }
}

TEST(CtcPrefixBeam, RejectsBadBeam) {
  auto logits = RandomLogits(2, 3, 1);
  FusionConfig cfg;
  cfg.beam = 0;
  EXPECT_THROW(CtcPrefixBeamSearch(logits, nullptr, cfg, 0),
               std::invalid_argument);
}

// Shared fixture for fusion tests: one-frame decision between units
// "a" (acoustically favored) and "b" (LM favored).
struct FusionWorld {
  TokenInventory inv;
  NGramModel lm;
  int id_a, id_b;
  double lm_a, lm_b;  // natural-log LM sequence scores

  FusionWorld()
      : inv(TokenInventory::Train({"a b"}, 6)),
        lm(TrainUnitLm({"b", "b", "b", "b", "a"}, inv, 2)) {
    id_a = inv.Encode("a")[0];
    id_b = inv.Encode("b")[0];
    lm_a = kLn10 * lm.InvSequenceLogProb({id_a});
    lm_b = kLn10 * lm.InvSequenceLogProb({id_b});
  }
};

TEST(Seq2SeqBeam, FusionCrossoverAtPredictedLambda) {
  FusionWorld w;
  ASSERT_GT(w.lm_b, w.lm_a);
  // acoustics: P(a)=0.6, P(b)=0.4 at the only step
  PosteriorMatrix step = Logits(1, 6, {-40, -40, -40, -40,
                                       std::log(0.6), std::log(0.4)});
  PosteriorStepScorer scorer(step, w.inv.eos_id());
  double cross = (std::log(0.6) - std::log(0.4)) / (w.lm_b - w.lm_a);
  FusionConfig cfg;
  cfg.beam = 8;
  cfg.max_len = 4;
  for (double off : {-0.05, 0.05}) {
    cfg.lm_weight = cross + off;
    auto hyps = Seq2SeqBeamSearch(scorer, &w.lm, cfg, w.inv.eos_id());
    ASSERT_FALSE(hyps.empty());
    EXPECT_EQ(hyps[0].ids, std::vector<int>{off < 0 ? w.id_a : w.id_b})
        << "lambda " << cfg.lm_weight;
    EXPECT_NEAR(hyps[0].combined,
                hyps[0].acoustic + cfg.lm_weight * hyps[0].lm, 1e-12);
  }
}

TEST(CtcPrefixBeam, FusionFlipsWinner) {
  FusionWorld w;
  // two frames: unit then blank, acoustics prefer "a" mildly
  PosteriorMatrix logits = Logits(
      2, 6, {-40, -40, -40, -40, std::log(0.6), std::log(0.4),
             40, -40, -40, -40, -40, -40});
  FusionConfig cfg;
  cfg.beam = 32;
  cfg.lm_weight = 0.0;
  auto plain = CtcPrefixBeamSearch(logits, &w.lm, cfg, w.inv.blank_id());
  EXPECT_EQ(plain[0].ids, std::vector<int>{w.id_a});
  cfg.lm_weight = 5.0;
  auto fused = CtcPrefixBeamSearch(logits, &w.lm, cfg, w.inv.blank_id());
  EXPECT_EQ(fused[0].ids, std::vector<int>{w.id_b});
  // reported lm score is the model's own sequence prefix score
  EXPECT_NEAR(fused[0].lm, kLn10 * w.lm.InvLogProb({}, w.id_b), 1e-12);
}

TEST(Seq2SeqBeam, ExactAgainstEnumerationNoLm) {
  // All hypotheses terminate within frames+1 steps (eos forced after the
  // last row), so a huge beam enumerates every terminated sequence.
  auto logits = RandomLogits(3, 4, 321);
  PosteriorStepScorer scorer(logits, 0);  // eos id 0
  PosteriorMatrix post = logits.Normalized();
  std::vector<int> best_seq;
  double best_lp = kLogZero;
  // sequences of non-eos tokens of length k, then eos at step k
  std::vector<std::pair<std::vector<int>, double>> frontier{{{}, 0.0}};
  for (int k = 0; k <= post.frames; ++k) {
    std::vector<std::pair<std::vector<int>, double>> nxt;
    for (const auto& [seq, lp] : frontier) {
      double done = lp + (k < post.frames ? post.at(k, 0) : 0.0);
      if (done > best_lp) {
        best_lp = done;
        best_seq = seq;
      }
      if (k == post.frames) continue;
      for (int v = 1; v < post.vocab; ++v) {
        auto ext = seq;
        ext.push_back(v);
        nxt.emplace_back(std::move(ext), lp + post.at(k, v));
      }
    }
    frontier = std::move(nxt);
  }
  FusionConfig cfg;
  cfg.beam = 4096;
  cfg.max_len = 10;
  cfg.lm_weight = 0.0;
  auto hyps = Seq2SeqBeamSearch(scorer, nullptr, cfg, 0);
  ASSERT_FALSE(hyps.empty());
  EXPECT_TRUE(hyps[0].terminal);
  EXPECT_EQ(hyps[0].ids, best_seq);
  EXPECT_NEAR(hyps[0].acoustic, best_lp, 1e-9);
}

TEST(Seq2SeqBeam, RejectsUnnormalizedScorer) {
  class Bad : public StepScorer {
   public:
    int vocab_size() const override { return 3; }
    std::vector<double> Score(const std::vector<int>&) const override {
      return {-0.1, -0.1, -0.1};
    }
  } bad;
  FusionConfig cfg;
  EXPECT_THROW(Seq2SeqBeamSearch(bad, nullptr, cfg, 0), std::runtime_error);
}

TEST(Seq2SeqBeam, MaxLenStopsSearch) {
  // scorer that never emits eos: uniform over two non-eos tokens
  class NoEos : public StepScorer {
   public:
    int vocab_size() const override { return 3; }
    std::vector<double> Score(const std::vector<int>&) const override {
      return {kLogZero, std::log(0.5), std::log(0.5)};
    }
  } scorer;
  FusionConfig cfg;
  cfg.beam = 2;
  cfg.max_len = 5;
  auto hyps = Seq2SeqBeamSearch(scorer, nullptr, cfg, 0);
  ASSERT_FALSE(hyps.empty());
  EXPECT_FALSE(hyps[0].terminal);
  EXPECT_EQ(hyps[0].ids.size(), 5u);
}

}  // namespace
}  // namespace asrdec
