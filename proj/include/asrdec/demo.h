#ifndef ASRDEC_DEMO_H_
#define ASRDEC_DEMO_H_

#include <cstdint>
#include <string>
#include <vector>

#include "asrdec/eval.h"

namespace asrdec {

// Synthetic end-to-end pipeline: build a closed-vocabulary corpus, train
// BPE units and an n-gram LM, synthesize noisy posteriors for dev/test,
// tune the fusion weight on dev, and compare test WER at lambda=0 vs the
// tuned lambda.
struct DemoConfig {
  uint64_t seed = 7;
  std::string out_dir = "demo_out";
  int num_words = 12;
  int train_sentences = 300;
  int dev_utterances = 40;
  int test_utterances = 60;
  int lm_order = 3;
  int extra_merges = 20;
  int beam = 8;
  double sub_noise = 0.28;   // per-frame confusion probability
  std::vector<double> lambda_grid = {0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5};
  std::vector<double> beta_grid = {0.0};
};

struct DemoReport {
  double tuned_lambda = 0.0;
  double tuned_beta = 0.0;
  double dev_wer_tuned = 0.0;
  double test_wer_untuned = 0.0;  // lambda = 0
  double test_wer_tuned = 0.0;
  TuningResult tuning;
  std::string Render() const;
  std::string Json() const;
};

DemoReport RunDemo(const DemoConfig& cfg);

}  // namespace asrdec

#endif  // ASRDEC_DEMO_H_
