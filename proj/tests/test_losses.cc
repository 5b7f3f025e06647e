#include "asrdec/losses.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "asrdec/util.h"

namespace asrdec {
namespace {

PosteriorMatrix RandomPosterior(int T, int V, int seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g(0.0, 1.5);
  PosteriorMatrix m;
  m.frames = T;
  m.vocab = V;
  m.kind = PosteriorKind::kRawLogit;
  m.values.resize(static_cast<size_t>(T) * V);
  for (auto& v : m.values) v = static_cast<float>(g(rng));
  return m.Normalized();
}

// Removes repeats, then blanks.
std::vector<int> Collapse(const std::vector<int>& path, int blank) {
  std::vector<int> out;
  for (size_t i = 0; i < path.size(); ++i) {
    if (i > 0 && path[i] == path[i - 1]) continue;
    if (path[i] != blank) out.push_back(path[i]);
  }
  return out;
}

// Total probability of the target by exhaustive enumeration of all V^T paths.
double BruteForceCtcProb(const PosteriorMatrix& post,
                         const std::vector<int>& target, int blank) {
  const int T = post.frames, V = post.vocab;
  double total = 0.0;
  std::vector<int> path(T, 0);
  long long num = 1;
  for (int t = 0; t < T; ++t) num *= V;
  for (long long code = 0; code < num; ++code) {
    long long c = code;
    for (int t = 0; t < T; ++t) {
      path[t] = static_cast<int>(c % V);
      c /= V;
    }
    if (Collapse(path, blank) != target) continue;
    double lp = 0.0;
    for (int t = 0; t < T; ++t) lp += post.at(t, path[t]);
    total += std::exp(lp);
  }
  return total;
}

TEST(CtcLoss, HandComputedUniformCase) {
  // T=2, V=2, uniform posteriors, target {1}: paths (0,1),(1,0),(1,1)
  // collapse to {1}, so P = 3/4.
  PosteriorMatrix m;
  m.frames = 2;
  m.vocab = 2;
  m.values.assign(4, static_cast<float>(std::log(0.5)));
  auto res = CtcLoss(m, {1}, 0);
  EXPECT_NEAR(res.loss, -std::log(0.75), 1e-7);
}

TEST(CtcLoss, MatchesBruteForceEnumeration) {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    int T = 1 + static_cast<int>(rng() % 4);
    int V = 2 + static_cast<int>(rng() % 3);
    std::vector<int> target;
    int len = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < len; ++i) {
      target.push_back(1 + static_cast<int>(rng() % (V - 1)));
    }
    if (T < CtcMinFrames(target)) continue;
    auto post = RandomPosterior(T, V, 1000 + trial);
    auto res = CtcLoss(post, target, 0);
    double brute = BruteForceCtcProb(post, target, 0);
    EXPECT_NEAR(std::exp(-res.loss), brute, 1e-9)
        << "T=" << T << " V=" << V << " trial=" << trial;
  }
}

TEST(CtcLoss, GradientMatchesFiniteDifference) {
  auto post = RandomPosterior(6, 4, 99);
  std::vector<int> target = {1, 2, 2, 3};
  auto res = CtcLoss(post, target, 0);
  for (int t = 0; t < post.frames; ++t) {
    for (int v = 0; v < post.vocab; ++v) {
      const double h = 1e-3;
      PosteriorMatrix up = post, dn = post;
      up.set(t, v, post.at(t, v) + h);
      dn.set(t, v, post.at(t, v) - h);
      // the entries live in float32, so divide by the realized step
      double realized = up.at(t, v) - dn.at(t, v);
      double fd = (CtcLoss(up, target, 0).loss - CtcLoss(dn, target, 0).loss) /
                  realized;
      double ref = res.grad[t][v];
      double denom = std::max(std::abs(ref), 1e-6);
      EXPECT_LT(std::abs(fd - ref) / denom, 1e-4)
          << "t=" << t << " v=" << v << " fd=" << fd << " grad=" << ref;
    }
  }
}

TEST(CtcLoss, GradientRowsSumToMinusOne) {
  // occupancy over labels is a distribution per frame
  auto post = RandomPosterior(8, 5, 17);
  auto res = CtcLoss(post, {2, 4, 1}, 0);
  for (int t = 0; t < post.frames; ++t) {
    double s = 0.0;
    for (int v = 0; v < post.vocab; ++v) s += res.grad[t][v];
    EXPECT_NEAR(s, -1.0, 1e-9);
  }
}

TEST(CtcMinFramesCheck, CountsAdjacentDuplicates) {
  EXPECT_EQ(CtcMinFrames({1, 2, 3}), 3);
  EXPECT_EQ(CtcMinFrames({1, 1, 2}), 4);
  EXPECT_EQ(CtcMinFrames({1, 1, 1}), 5);
  EXPECT_EQ(CtcMinFrames({}), 0);
}

TEST(CtcLoss, RejectsBadTargets) {
  auto post = RandomPosterior(3, 4, 5);
  EXPECT_THROW(CtcLoss(post, {}, 0), std::invalid_argument);
  EXPECT_THROW(CtcLoss(post, {0, 1}, 0), std::invalid_argument);  // blank
  EXPECT_THROW(CtcLoss(post, {4}, 0), std::invalid_argument);     // range
  EXPECT_THROW(CtcLoss(post, {1, 1, 2}, 0), std::invalid_argument);  // T<min
}

TEST(AttentionCe, HandComputedWithoutSmoothing) {
  std::vector<std::vector<double>> rows = {
      {std::log(0.2), std::log(0.5), std::log(0.3)},
      {std::log(0.1), std::log(0.2), std::log(0.7)}};
  // gold sequence is {1} then eos=2
  double want = -(std::log(0.5) + std::log(0.7)) / 2.0;
  EXPECT_NEAR(AttentionCeLoss(rows, {1}, 2, 0.0), want, 1e-12);
}

TEST(AttentionCe, HandComputedWithSmoothing) {
  std::vector<std::vector<double>> rows = {
      {std::log(0.2), std::log(0.5), std::log(0.3)},
      {std::log(0.1), std::log(0.2), std::log(0.7)}};
  // eps=0.3, V=3: q = 0.1 everywhere plus 0.7 on gold
  double s0 = -(0.1 * std::log(0.2) + 0.8 * std::log(0.5) + 0.1 * std::log(0.3));
  double s1 = -(0.1 * std::log(0.1) + 0.1 * std::log(0.2) + 0.8 * std::log(0.7));
  EXPECT_NEAR(AttentionCeLoss(rows, {1}, 2, 0.3), (s0 + s1) / 2.0, 1e-12);
}

TEST(AttentionCe, ZeroCoefficientSkipsMinusInfinity) {
  std::vector<std::vector<double>> rows = {{kLogZero, 0.0}};
  // eps=0: only the gold column is read, the -inf never multiplies in
  EXPECT_NEAR(AttentionCeLoss(rows, {}, 1, 0.0), 0.0, 1e-12);
}

TEST(AttentionCe, RejectsShapeMismatch) {
  std::vector<std::vector<double>> rows = {{-1.0, -1.0}};
  EXPECT_THROW(AttentionCeLoss(rows, {1}, 1, 0.0), std::invalid_argument);
  EXPECT_THROW(AttentionCeLoss(rows, {}, 5, 0.0), std::invalid_argument);
}

TEST(Joint, CombinesWeightedParts) {
  auto post = RandomPosterior(6, 4, 3);
  std::vector<int> target = {1, 3};
  std::vector<std::vector<double>> rows(3, {std::log(0.25), std::log(0.25),
                                            std::log(0.25), std::log(0.25)});
  JointLossConfig cfg;
  cfg.ctc_weight = 0.3;
  double ctc = CtcLoss(post, target, 0).loss;
  double att = AttentionCeLoss(rows, target, 2, 0.0);
  EXPECT_NEAR(JointLoss(post, rows, target, 2, cfg), 0.3 * ctc + 0.7 * att,
              1e-12);
  cfg.ctc_weight = 1.5;
  EXPECT_THROW(JointLoss(post, rows, target, 2, cfg), std::invalid_argument);
}

}  // namespace
}  // namespace asrdec
