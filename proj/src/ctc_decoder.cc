#include <algorithm>
#include <map>
#include <stdexcept>

#include "asrdec/decoder.h"
#include "asrdec/util.h"

namespace asrdec {

std::vector<int> CtcGreedyDecode(const PosteriorMatrix& post, int blank) {
  std::vector<int> out;
  int prev = blank;
  for (int t = 0; t < post.frames; ++t) {
    int best = 0;
    for (int v = 1; v < post.vocab; ++v) {
      if (post.at(t, v) > post.at(t, best)) best = v;
    }
    if (best != blank && best != prev) out.push_back(best);
    prev = best;
  }
  return out;
}

namespace {

// Probability state of one collapsed prefix: mass ending in blank, mass
// ending in the last non-blank token, and the accumulated LM score (log10).
struct PrefixState {
  double pb = kLogZero;
  double pnb = kLogZero;
  double lm = 0.0;
  double total() const { return LogAdd(pb, pnb); }
};

}  // namespace

std::vector<Hypothesis> CtcPrefixBeamSearch(const PosteriorMatrix& post,
                                            const NGramModel* lm,
                                            const FusionConfig& cfg,
                                            int blank) {
  if (cfg.beam < 1) throw std::invalid_argument("beam size must be >= 1");
  PosteriorMatrix norm = post.Normalized();
  norm.Validate();
  if (lm && !lm->attached()) {
    throw std::invalid_argument("LM not attached to a token inventory");
  }

  // std::map keys give lexicographic iteration order, which doubles as the
  // deterministic tie-break.
  std::map<std::vector<int>, PrefixState> beam;
  beam[{}].pb = 0.0;
  beam[{}].pnb = kLogZero;

  auto combined = [&](const std::vector<int>& pfx, const PrefixState& st) {
    return st.total() + cfg.lm_weight * kLn10 * st.lm +
           cfg.length_bonus * static_cast<double>(pfx.size());
  };

  for (int t = 0; t < norm.frames; ++t) {
    std::map<std::vector<int>, PrefixState> next;
    for (const auto& [pfx, st] : beam) {
      for (int v = 0; v < norm.vocab; ++v) {
        double p = norm.at(t, v);
        if (v == blank) {
          auto& ns = next[pfx];
          ns.lm = st.lm;
          ns.pb = LogAdd(ns.pb, st.total() + p);
        } else if (!pfx.empty() && v == pfx.back()) {
          // Repeat without a separating blank extends the same token.
          auto& ns = next[pfx];
          ns.lm = st.lm;
          ns.pnb = LogAdd(ns.pnb, st.pnb + p);
          // A blank in between starts a new copy of the token.
          std::vector<int> ext = pfx;
          ext.push_back(v);
          auto& es = next[ext];
          if (es.pb == kLogZero && es.pnb == kLogZero) {
            es.lm = lm ? st.lm + lm->InvLogProb(pfx, v) : 0.0;
          }
          es.pnb = LogAdd(es.pnb, st.pb + p);
        } else {
          std::vector<int> ext = pfx;
          ext.push_back(v);
          auto& es = next[ext];
          if (es.pb == kLogZero && es.pnb == kLogZero) {
            es.lm = lm ? st.lm + lm->InvLogProb(pfx, v) : 0.0;
          }
          es.pnb = LogAdd(es.pnb, st.total() + p);
        }
      }
    }
    // Prune to the beam size by combined score; map order breaks ties.
    if (static_cast<int>(next.size()) > cfg.beam) {
      std::vector<std::pair<double, const std::vector<int>*>> ranked;
      ranked.reserve(next.size());
      for (const auto& [pfx, st] : next) ranked.emplace_back(combined(pfx, st), &pfx);
      std::stable_sort(ranked.begin(), ranked.end(),
                       [](const auto& a, const auto& b) { return a.first > b.first; });
      std::map<std::vector<int>, PrefixState> kept;
      for (int i = 0; i < cfg.beam; ++i) kept.emplace(*ranked[i].second, next.at(*ranked[i].second));
      next = std::move(kept);
    }
    beam = std::move(next);
  }

  std::vector<Hypothesis> out;
  out.reserve(beam.size());
  for (const auto& [pfx, st] : beam) {
    Hypothesis h;
    h.ids = pfx;
    h.acoustic = st.total();
    h.lm = kLn10 * st.lm;
    h.combined = h.acoustic + cfg.lm_weight * h.lm +
                 cfg.length_bonus * static_cast<double>(pfx.size());
    h.terminal = true;
    out.push_back(std::move(h));
  }
  std::stable_sort(out.begin(), out.end(), [](const Hypothesis& a, const Hypothesis& b) {
    return a.combined > b.combined;
  });
  int keep = std::min<int>(cfg.nbest, static_cast<int>(out.size()));
  out.resize(keep);
  return out;
}

}  // namespace asrdec
