#include "asrdec/losses.h"

#include <cmath>
#include <stdexcept>

#include "asrdec/util.h"

namespace asrdec {

int CtcMinFrames(const std::vector<int>& target) {
  int dup = 0;
  for (size_t i = 1; i < target.size(); ++i) {
    if (target[i] == target[i - 1]) ++dup;
  }
  return static_cast<int>(target.size()) + dup;
}

CtcLossResult CtcLoss(const PosteriorMatrix& post,
                      const std::vector<int>& target, int blank) {
  if (target.empty()) throw std::invalid_argument("empty target");
  for (int t : target) {
    if (t == blank) throw std::invalid_argument("blank appears in target");
    if (t < 0 || t >= post.vocab) {
      throw std::invalid_argument("target token out of range");
    }
  }
  const int T = post.frames;
  const int V = post.vocab;
  if (T < CtcMinFrames(target)) {
    throw std::invalid_argument("target unalignable: need at least " +
                                std::to_string(CtcMinFrames(target)) +
                                " frames, have " + std::to_string(T));
  }

  // Blank-interleaved label sequence.
  const int S = 2 * static_cast<int>(target.size()) + 1;
  std::vector<int> lab(S, blank);
  for (size_t i = 0; i < target.size(); ++i) lab[2 * i + 1] = target[i];

  auto logp = [&](int t, int s) { return post.at(t, lab[s]); };
  const double kZ = kLogZero;

  std::vector<std::vector<double>> alpha(T, std::vector<double>(S, kZ));
  alpha[0][0] = logp(0, 0);
  if (S > 1) alpha[0][1] = logp(0, 1);
  for (int t = 1; t < T; ++t) {
    for (int s = 0; s < S; ++s) {
      double a = alpha[t - 1][s];
      if (s >= 1) a = LogAdd(a, alpha[t - 1][s - 1]);
      if (s >= 2 && lab[s] != blank && lab[s] != lab[s - 2]) {
        a = LogAdd(a, alpha[t - 1][s - 2]);
      }
      alpha[t][s] = a == kZ ? kZ : a + logp(t, s);
    }
  }
  double log_total = alpha[T - 1][S - 1];
  if (S > 1) log_total = LogAdd(log_total, alpha[T - 1][S - 2]);
  if (log_total == kZ) {
    throw std::runtime_error("CTC total probability underflowed to zero");
  }

  std::vector<std::vector<double>> beta(T, std::vector<double>(S, kZ));
  beta[T - 1][S - 1] = logp(T - 1, S - 1);
  if (S > 1) beta[T - 1][S - 2] = logp(T - 1, S - 2);
  for (int t = T - 2; t >= 0; --t) {
    for (int s = S - 1; s >= 0; --s) {
      double b = beta[t + 1][s];
      if (s + 1 < S) b = LogAdd(b, beta[t + 1][s + 1]);
      if (s + 2 < S && lab[s + 2] != blank && lab[s + 2] != lab[s]) {
        b = LogAdd(b, beta[t + 1][s + 2]);
      }
      beta[t][s] = b == kZ ? kZ : b + logp(t, s);
    }
  }

  CtcLossResult res;
  res.loss = -log_total;
  res.grad.assign(T, std::vector<double>(V, 0.0));
  for (int t = 0; t < T; ++t) {
    std::vector<double> occ(V, kZ);  // log mass of paths with label v at t
    for (int s = 0; s < S; ++s) {
      if (alpha[t][s] == kZ || beta[t][s] == kZ) continue;
      double through = alpha[t][s] + beta[t][s] - logp(t, s);
      occ[lab[s]] = LogAdd(occ[lab[s]], through);
    }
    for (int v = 0; v < V; ++v) {
      if (occ[v] != kZ) res.grad[t][v] = -std::exp(occ[v] - log_total);
    }
  }
  return res;
}

double AttentionCeLoss(const std::vector<std::vector<double>>& step_logprobs,
                       const std::vector<int>& target, int eos_id,
                       double epsilon) {
  const size_t L = target.size() + 1;
  if (step_logprobs.size() != L) {
    throw std::invalid_argument(
        "step_logprobs rows must equal target length + 1 (eos appended)");
  }
  double total = 0.0;
  for (size_t i = 0; i < L; ++i) {
    const auto& row = step_logprobs[i];
    const int V = static_cast<int>(row.size());
    int gold = i < target.size() ? target[i] : eos_id;
    if (gold < 0 || gold >= V) {
      throw std::invalid_argument("target token out of range");
    }
    // Target distribution (1 - eps) one-hot + eps / V uniform; terms with a
    // zero coefficient are skipped so -inf log-probs stay harmless.
    double step = 0.0;
    if (epsilon > 0.0) {
      for (int v = 0; v < V; ++v) {
        double q = epsilon / V + (v == gold ? 1.0 - epsilon : 0.0);
        step -= q * row[v];
      }
    } else {
      step = -row[gold];
    }
    total += step;
  }
  return total / static_cast<double>(L);
}

double JointLoss(const PosteriorMatrix& post,
                 const std::vector<std::vector<double>>& step_logprobs,
                 const std::vector<int>& target, int eos_id,
                 const JointLossConfig& cfg) {
  if (cfg.ctc_weight < 0.0 || cfg.ctc_weight > 1.0) {
    throw std::invalid_argument("ctc_weight must be in [0,1]");
  }
  double ctc = CtcLoss(post, target, cfg.blank_id).loss;
  double att =
      AttentionCeLoss(step_logprobs, target, eos_id, cfg.label_smoothing);
  return cfg.ctc_weight * ctc + (1.0 - cfg.ctc_weight) * att;
}

}  // namespace asrdec
