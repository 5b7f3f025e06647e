#ifndef ASRDEC_LOSSES_H_
#define ASRDEC_LOSSES_H_

#include <vector>

#include "asrdec/posterior.h"

namespace asrdec {

struct JointLossConfig {
  double ctc_weight = 0.3;      // alpha
  int blank_id = 0;
  double label_smoothing = 0.0;  // epsilon
};

struct CtcLossResult {
  double loss = 0.0;                       // -ln total alignment mass
  std::vector<std::vector<double>> grad;   // d loss / d logpost[t][v]
};

// CTC loss by forward-backward over the blank-interleaved label sequence,
// all in log space. The gradient is taken w.r.t. the log-posterior entries
// treated as free variables.
CtcLossResult CtcLoss(const PosteriorMatrix& post,
                      const std::vector<int>& target, int blank);

// Exact CTC feasibility bound: |target| plus adjacent duplicate pairs.
int CtcMinFrames(const std::vector<int>& target);

// Mean label-smoothed negative log-likelihood of target plus eos.
// step_logprobs has |target|+1 rows of natural-log probabilities.
double AttentionCeLoss(const std::vector<std::vector<double>>& step_logprobs,
                       const std::vector<int>& target, int eos_id,
                       double epsilon);

double JointLoss(const PosteriorMatrix& post,
                 const std::vector<std::vector<double>>& step_logprobs,
                 const std::vector<int>& target, int eos_id,
                 const JointLossConfig& cfg);

}  // namespace asrdec

#endif  // ASRDEC_LOSSES_H_
