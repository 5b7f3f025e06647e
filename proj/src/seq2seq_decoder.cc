#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "asrdec/decoder.h"
#include "asrdec/util.h"

namespace asrdec {

PosteriorStepScorer::PosteriorStepScorer(const PosteriorMatrix& post,
                                         int eos_id)
    : post_(post.Normalized()), eos_id_(eos_id) {
  post_.Validate();
}

std::vector<double> PosteriorStepScorer::Score(
    const std::vector<int>& prefix) const {
  int step = static_cast<int>(prefix.size());
  std::vector<double> row(post_.vocab, kLogZero);
  if (step >= post_.frames) {
    // Out of frames: force eos with probability one.
    row[eos_id_] = 0.0;
    return row;
  }
  for (int v = 0; v < post_.vocab; ++v) row[v] = post_.at(step, v);
  return row;
}

namespace {

struct Beam {
  std::vector<Hypothesis> hyps;  // lm field kept in log10 until finalized
};

bool HypLess(const Hypothesis& a, const Hypothesis& b) {
  if (a.combined != b.combined) return a.combined > b.combined;
  return a.ids < b.ids;
}

}  // namespace

std::vector<Hypothesis> Seq2SeqBeamSearch(const StepScorer& scorer,
                                          const NGramModel* lm,
                                          const FusionConfig& cfg,
                                          int eos_id) {
  if (cfg.beam < 1) throw std::invalid_argument("beam size must be >= 1");
  if (cfg.max_len < 1) throw std::invalid_argument("max_len must be >= 1");
  if (lm && !lm->attached()) {
    throw std::invalid_argument("LM not attached to a token inventory");
  }
  const int V = scorer.vocab_size();

  auto rescore = [&](Hypothesis* h) {
    h->combined = h->acoustic + cfg.lm_weight * h->lm +
                  cfg.length_bonus * static_cast<double>(h->ids.size());
  };

  std::vector<Hypothesis> beam(1);
  rescore(&beam[0]);

  for (int step = 0; step < cfg.max_len; ++step) {
    bool all_terminal = true;
    std::vector<Hypothesis> next;
    for (const auto& h : beam) {
      if (h.terminal) {
        next.push_back(h);
        continue;
      }
      all_terminal = false;
      std::vector<double> dist = scorer.Score(h.ids);
      if (static_cast<int>(dist.size()) != V) {
        throw std::runtime_error("scorer returned wrong vocabulary size");
      }
      double lse = LogSumExp(dist);
      if (std::abs(lse) > 1e-5) throw std::runtime_error("scorer not normalized");
      for (int v = 0; v < V; ++v) {
        if (dist[v] == kLogZero) continue;
        Hypothesis ext = h;
        ext.acoustic += dist[v];
        if (v == eos_id) {
          ext.terminal = true;
          if (lm) ext.lm += kLn10 * lm->InvEosLogProb(h.ids);
        } else {
          ext.ids.push_back(v);
          if (lm) ext.lm += kLn10 * lm->InvLogProb(h.ids, v);
        }
        rescore(&ext);
        next.push_back(std::move(ext));
      }
    }
    if (all_terminal) break;
    std::sort(next.begin(), next.end(), HypLess);
    if (static_cast<int>(next.size()) > cfg.beam) next.resize(cfg.beam);
    beam = std::move(next);
  }

  std::sort(beam.begin(), beam.end(), HypLess);
  int keep = std::min<int>(cfg.nbest, static_cast<int>(beam.size()));
  beam.resize(keep);
  return beam;
}

}  // namespace asrdec
