#include "asrdec/demo.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "asrdec/decoder.h"
#include "asrdec/manifest.h"
#include "asrdec/ngram_lm.h"
#include "asrdec/posterior.h"
#include "asrdec/tokenizer.h"

namespace asrdec {

namespace {

namespace fs = std::filesystem;

// Closed synthetic world: a word list over a small character alphabet and a
// sparse Markov chain over words, so the LM carries real signal.
struct World {
  std::vector<std::string> words;
  std::vector<std::vector<int>> successors;  // per word, allowed next words
};

World MakeWorld(std::mt19937& rng, int num_words) {
  static const char alphabet[] = "abcde";
  World w;
  std::uniform_int_distribution<int> len_dist(2, 4);
  std::uniform_int_distribution<int> ch_dist(0, 4);
  std::set<std::string> seen;
  while (static_cast<int>(w.words.size()) < num_words) {
    int len = len_dist(rng);
    std::string word;
    for (int i = 0; i < len; ++i) word += alphabet[ch_dist(rng)];
    if (seen.insert(word).second) w.words.push_back(word);
  }
  std::uniform_int_distribution<int> word_dist(0, num_words - 1);
  w.successors.resize(num_words);
  for (int i = 0; i < num_words; ++i) {
    while (static_cast<int>(w.successors[i].size()) < 2) {
      int s = word_dist(rng);
      if (std::find(w.successors[i].begin(), w.successors[i].end(), s) ==
          w.successors[i].end()) {
        w.successors[i].push_back(s);
      }
    }
  }
  return w;
}

std::string SampleSentence(const World& w, std::mt19937& rng) {
  std::uniform_int_distribution<int> start_dist(
      0, static_cast<int>(w.words.size()) - 1);
  std::uniform_int_distribution<int> len_dist(3, 6);
  std::uniform_int_distribution<int> branch(0, 1);
  int len = len_dist(rng);
  int cur = start_dist(rng);
  std::string out = w.words[cur];
  for (int i = 1; i < len; ++i) {
    cur = w.successors[cur][branch(rng)];
    out += " " + w.words[cur];
  }
  return out;
}

// One-hot unit alignment with confusion noise: each unit takes 1-2 frames,
// blanks are sprinkled between units, and a noisy frame boosts a random
// wrong unit slightly above the right one.
PosteriorMatrix SynthesizePosterior(const std::vector<int>& units, int vocab,
                                    int blank, double sub_noise,
                                    std::mt19937& rng) {
  std::uniform_int_distribution<int> repeat_dist(1, 2);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> unit_dist(4, vocab - 1);  // text units

  std::vector<std::pair<int, bool>> frames;  // (dominant unit, noisy)
  for (int u : units) {
    int reps = repeat_dist(rng);
    for (int r = 0; r < reps; ++r) {
      bool noisy = unif(rng) < sub_noise;
      frames.emplace_back(u, noisy);
    }
    if (unif(rng) < 0.5) frames.emplace_back(blank, false);
  }
  PosteriorMatrix m;
  m.frames = static_cast<int>(frames.size());
  m.vocab = vocab;
  m.kind = PosteriorKind::kRawLogit;
  m.values.assign(static_cast<size_t>(m.frames) * vocab, 0.0f);
  for (int t = 0; t < m.frames; ++t) {
    auto [u, noisy] = frames[t];
    m.set(t, u, 4.0);
    if (noisy && u != blank) {
      int wrong = unit_dist(rng);
      if (wrong == u) wrong = wrong == 4 ? 5 : wrong - 1;
      m.set(t, wrong, 4.9);  // acoustics slightly prefer the wrong unit
    }
  }
  return m.Normalized();
}

}  // namespace

std::string DemoReport::Render() const {
  std::ostringstream os;
  char buf[256];
  os << "synthetic LM-fusion demo\n";
  std::snprintf(buf, sizeof(buf), "tuned lambda (dev): %.2f  beta: %.2f\n",
                tuned_lambda, tuned_beta);
  os << buf;
  std::snprintf(buf, sizeof(buf), "dev WER at tuned lambda: %.4f\n",
                dev_wer_tuned);
  os << buf;
  std::snprintf(buf, sizeof(buf), "test WER lambda=0: %.4f\n",
                test_wer_untuned);
  os << buf;
  std::snprintf(buf, sizeof(buf), "test WER tuned:    %.4f\n",
                test_wer_tuned);
  os << buf;
  std::snprintf(buf, sizeof(buf), "absolute reduction: %.4f\n",
                test_wer_untuned - test_wer_tuned);
  os << buf;
  return os.str();
}

std::string DemoReport::Json() const {
  std::ostringstream os;
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "{\"tuned_lambda\": %.2f, \"tuned_beta\": %.2f, "
                "\"dev_wer_tuned\": %.6f, \"test_wer_untuned\": %.6f, "
                "\"test_wer_tuned\": %.6f, \"reduction\": %.6f}\n",
                tuned_lambda, tuned_beta, dev_wer_tuned, test_wer_untuned,
                test_wer_tuned, test_wer_untuned - test_wer_tuned);
  os << buf;
  return os.str();
}

DemoReport RunDemo(const DemoConfig& cfg) {
  std::mt19937 rng(static_cast<uint32_t>(cfg.seed));
  fs::create_directories(cfg.out_dir);
  fs::create_directories(cfg.out_dir + "/posteriors");

  World world = MakeWorld(rng, cfg.num_words);
  std::vector<std::string> train;
  train.reserve(cfg.train_sentences);
  for (int i = 0; i < cfg.train_sentences; ++i) {
    train.push_back(SampleSentence(world, rng));
  }

  // Minimum vocabulary plus some learned merges.
  TokenInventory probe = TokenInventory::Train(train, 1 << 20);
  int min_vocab = probe.vocab_size() - static_cast<int>(probe.merges().size());
  TokenInventory inv =
      TokenInventory::Train(train, min_vocab + cfg.extra_merges);
  inv.Save(cfg.out_dir + "/bpe.model");

  NGramModel lm = TrainUnitLm(train, inv, cfg.lm_order);
  ArpaSave(lm, cfg.out_dir + "/lm.arpa");

  auto make_split = [&](const std::string& name, int count) {
    std::vector<ManifestEntry> entries;
    for (int i = 0; i < count; ++i) {
      ManifestEntry e;
      char id[32];
      std::snprintf(id, sizeof(id), "%s-%03d", name.c_str(), i);
      e.utt_id = id;
      e.text = SampleSentence(world, rng);
      e.posterior_path = cfg.out_dir + "/posteriors/" + e.utt_id + ".asrp";
      PosteriorMatrix m =
          SynthesizePosterior(inv.Encode(e.text), inv.vocab_size(),
                              inv.blank_id(), cfg.sub_noise, rng);
      SavePosterior(m, e.posterior_path);
      entries.push_back(std::move(e));
    }
    SaveManifest(entries, cfg.out_dir + "/" + name + ".jsonl");
    return entries;
  };
  auto dev = make_split("dev", cfg.dev_utterances);
  auto test = make_split("test", cfg.test_utterances);

  auto refs_of = [](const std::vector<ManifestEntry>& entries) {
    std::map<std::string, std::string> refs;
    for (const auto& e : entries) refs[e.utt_id] = e.text;
    return refs;
  };

  auto decode_split = [&](const std::vector<ManifestEntry>& entries,
                          double lambda, double beta) {
    FusionConfig fc;
    fc.beam = cfg.beam;
    fc.lm_weight = lambda;
    fc.length_bonus = beta;
    fc.nbest = 1;
    auto rows = DecodeManifest(entries, inv, DecoderChoice::kCtcPrefix,
                               lambda == 0.0 ? nullptr : &lm, fc);
    std::map<std::string, std::string> hyps;
    for (const auto& r : rows) {
      if (!r.ok()) throw std::runtime_error(r.utt_id + ": " + r.error);
      hyps[r.utt_id] = r.text;
    }
    return hyps;
  };

  DemoReport rep;
  rep.tuning = TuneLmWeight(refs_of(dev), cfg.lambda_grid, cfg.beta_grid,
                            [&](double lam, double beta) {
                              return decode_split(dev, lam, beta);
                            });
  rep.tuned_lambda = rep.tuning.chosen_lm_weight;
  rep.tuned_beta = rep.tuning.chosen_length_bonus;
  rep.dev_wer_tuned = rep.tuning.chosen_wer;

  auto test_refs = refs_of(test);
  rep.test_wer_untuned =
      ScoreCorpus(test_refs, decode_split(test, 0.0, 0.0), ScoreUnit::kWord)
          .error_rate();
  rep.test_wer_tuned =
      ScoreCorpus(test_refs,
                  decode_split(test, rep.tuned_lambda, rep.tuned_beta),
                  ScoreUnit::kWord)
          .error_rate();
  if (rep.test_wer_tuned > rep.test_wer_untuned) {
    throw std::runtime_error("demo: tuned lambda regressed test WER (" +
                             rep.Json() + ")");
  }

  std::ofstream(cfg.out_dir + "/report.txt") << rep.Render();
  std::ofstream(cfg.out_dir + "/report.json") << rep.Json();
  return rep;
}

}  // namespace asrdec
