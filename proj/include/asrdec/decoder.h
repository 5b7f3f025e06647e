#ifndef ASRDEC_DECODER_H_
#define ASRDEC_DECODER_H_

#include <memory>
#include <string>
#include <vector>

#include "asrdec/ngram_lm.h"
#include "asrdec/posterior.h"

namespace asrdec {

struct FusionConfig {
  int beam = 8;
  double lm_weight = 0.3;   // lambda
  double length_bonus = 0.0;  // beta
  int max_len = 200;
  int nbest = 1;
};

// A decoded candidate. Scores are natural log; combined is recomputable as
// acoustic + lm_weight * lm + length_bonus * |ids|.
struct Hypothesis {
  std::vector<int> ids;
  double acoustic = 0.0;
  double lm = 0.0;
  double combined = 0.0;
  bool terminal = false;
};

// Contract for an abstract autoregressive acoustic decoder: given a prefix,
// produce natural-log next-token probabilities normalized to 1.
class StepScorer {
 public:
  virtual ~StepScorer() = default;
  virtual int vocab_size() const = 0;
  virtual std::vector<double> Score(const std::vector<int>& prefix) const = 0;
};

// Step scorer backed by a posterior matrix: row i is the distribution for
// output position i. Useful for file-driven attention-style decoding.
class PosteriorStepScorer : public StepScorer {
 public:
  explicit PosteriorStepScorer(const PosteriorMatrix& post, int eos_id);
  int vocab_size() const override { return post_.vocab; }
  std::vector<double> Score(const std::vector<int>& prefix) const override;

 private:
  PosteriorMatrix post_;
  int eos_id_;
};

// Per-frame argmax, collapse repeats, drop blanks.
std::vector<int> CtcGreedyDecode(const PosteriorMatrix& post, int blank);

// CTC prefix beam search with optional shallow fusion of an n-gram LM over
// the collapsed prefix. lm may be null. Ties break lexicographically on the
// token-id sequence.
std::vector<Hypothesis> CtcPrefixBeamSearch(const PosteriorMatrix& post,
                                            const NGramModel* lm,
                                            const FusionConfig& cfg,
                                            int blank);

// Beam search over a step scorer with shallow fusion; hypotheses finalize
// on eos (LM eos term applied then) and keep occupying beam slots.
std::vector<Hypothesis> Seq2SeqBeamSearch(const StepScorer& scorer,
                                          const NGramModel* lm,
                                          const FusionConfig& cfg, int eos_id);

}  // namespace asrdec

#endif  // ASRDEC_DECODER_H_
