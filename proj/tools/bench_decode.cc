// Benchmark: serial vs OpenMP manifest decoding on a synthetic workload,
// verifying that both paths produce identical transcripts.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>

#include "asrdec/demo.h"
#include "asrdec/manifest.h"
#include "asrdec/ngram_lm.h"
#include "asrdec/tokenizer.h"

using namespace asrdec;

int main(int argc, char** argv) {
  int utterances = argc > 1 ? std::atoi(argv[1]) : 80;
  std::string dir = "bench_out";

  DemoConfig cfg;
  cfg.seed = 11;
  cfg.out_dir = dir;
  cfg.dev_utterances = 1;
  cfg.test_utterances = utterances;
  cfg.lambda_grid = {0.0};
  RunDemo(cfg);

  auto inv = TokenInventory::Load(dir + "/bpe.model");
  auto lm = ArpaLoad(dir + "/lm.arpa");
  lm.AttachInventory(inv);
  auto entries = LoadManifest(dir + "/test.jsonl");
  FusionConfig fc;
  fc.beam = 8;
  fc.lm_weight = 0.5;

  auto run = [&](int threads) {
    auto t0 = std::chrono::steady_clock::now();
    auto rows = DecodeManifest(entries, inv, DecoderChoice::kCtcPrefix, &lm,
                               fc, threads);
    auto t1 = std::chrono::steady_clock::now();
    double secs = std::chrono::duration<double>(t1 - t0).count();
    return std::make_pair(secs, rows);
  };

  auto [serial_s, serial_rows] = run(1);
  auto [parallel_s, parallel_rows] = run(0);

  bool identical = serial_rows.size() == parallel_rows.size();
  for (size_t i = 0; identical && i < serial_rows.size(); ++i) {
    identical = serial_rows[i].utt_id == parallel_rows[i].utt_id &&
                serial_rows[i].text == parallel_rows[i].text &&
                serial_rows[i].combined == parallel_rows[i].combined;
  }

  std::printf("utterances:        %d\n", utterances);
  std::printf("serial decode:     %.3f s\n", serial_s);
  std::printf("parallel decode:   %.3f s (%d workers)\n", parallel_s,
              EffectiveThreads(0));
  std::printf("speedup:           %.2fx\n", serial_s / parallel_s);
  std::printf("outputs identical: %s\n", identical ? "yes" : "NO");
  return identical ? 0 : 1;
}
