// asrdec: decoding-side ASR toolkit — BPE units, n-gram LM with ARPA
// interchange, LM-fused beam search decoders, TLG graph decoding, and
// WER/CER evaluation over posterior-file manifests.

#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "asrdec/decoder.h"
#include "asrdec/demo.h"
#include "asrdec/eval.h"
#include "asrdec/losses.h"
#include "asrdec/manifest.h"
#include "asrdec/ngram_lm.h"
#include "asrdec/posterior.h"
#include "asrdec/tokenizer.h"
#include "asrdec/util.h"
#include "asrdec/wfst.h"

namespace {

using namespace asrdec;

std::vector<std::string> ReadLines(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

// "0:1:0.1" (start:stop:step, stop inclusive) or a comma list "0,0.3,0.5".
std::vector<double> ParseGrid(const std::string& spec) {
  std::vector<double> out;
  if (spec.find(':') != std::string::npos) {
    double start, stop, step;
    char c1, c2;
    std::istringstream is(spec);
    if (!(is >> start >> c1 >> stop >> c2 >> step) || c1 != ':' ||
        c2 != ':' || step <= 0) {
      throw std::runtime_error("bad grid spec: " + spec);
    }
    for (double v = start; v <= stop + 1e-9; v += step) out.push_back(v);
  } else {
    std::istringstream is(spec);
    std::string tok;
    while (std::getline(is, tok, ',')) out.push_back(std::stod(tok));
  }
  if (out.empty()) throw std::runtime_error("empty grid: " + spec);
  return out;
}

int RunBpeTrain(const std::string& corpus, int vocab, const std::string& out) {
  auto inv = TokenInventory::Train(ReadLines(corpus), vocab);
  inv.Save(out);
  std::cout << "trained BPE inventory: " << inv.vocab_size() << " tokens, "
            << inv.merges().size() << " merges -> " << out << "\n";
  return 0;
}

int RunLmTrain(const std::string& corpus, const std::string& bpe, int order,
               int64_t prune, const std::string& out) {
  auto inv = TokenInventory::Load(bpe);
  auto lm = TrainUnitLm(ReadLines(corpus), inv, order, prune);
  ArpaSave(lm, out);
  std::cout << "trained order-" << order << " LM";
  for (int n = 1; n <= order; ++n) {
    std::cout << (n == 1 ? ": " : ", ") << lm.NgramCount(n) << " " << n
              << "-grams";
  }
  std::cout << " -> " << out << "\n";
  std::cerr << lm.build_report().Summary();
  return 0;
}

int RunLmScore(const std::string& arpa, const std::string& bpe,
               const std::string& text) {
  auto inv = TokenInventory::Load(bpe);
  auto lm = ArpaLoad(arpa);
  lm.AttachInventory(inv);
  double lp = lm.InvSequenceLogProb(inv.Encode(text));
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", lp);
  std::cout << "log10 P = " << buf << "\n";
  return 0;
}

int RunLossCheck(uint64_t seed, int trials) {
  // Reproduces the finite-difference gradient check table.
  std::mt19937 rng(static_cast<uint32_t>(seed));
  std::uniform_int_distribution<int> t_dist(2, 5), v_dist(2, 4);
  double worst = 0.0;
  for (int k = 0; k < trials; ++k) {
    int T = t_dist(rng), V = v_dist(rng);
    std::uniform_int_distribution<int> tok(1, V - 1);
    std::vector<int> target{tok(rng)};
    if (T >= 2 && k % 2 == 0) target.push_back(tok(rng));
    if (CtcMinFrames(target) > T) target.resize(1);
    PosteriorMatrix post;
    post.frames = T;
    post.vocab = V;
    post.kind = PosteriorKind::kRawLogit;
    std::normal_distribution<double> gauss(0.0, 1.0);
    post.values.resize(static_cast<size_t>(T) * V);
    for (auto& v : post.values) v = static_cast<float>(gauss(rng));
    post = post.Normalized();
    auto res = CtcLoss(post, target, 0);
    const double h = 1e-3;
    for (int t = 0; t < T; ++t) {
      for (int v = 0; v < V; ++v) {
        PosteriorMatrix p1 = post, p2 = post;
        p1.set(t, v, post.at(t, v) + h);
        p2.set(t, v, post.at(t, v) - h);
        p1.kind = p2.kind = PosteriorKind::kRawLogit;  // skip row check
        // The entries are float32, so use the realized step, not 2h.
        double fd = (CtcLoss(p1, target, 0).loss -
                     CtcLoss(p2, target, 0).loss) /
                    (p1.at(t, v) - p2.at(t, v));
        double err = std::abs(fd - res.grad[t][v]) /
                     std::max({1e-3, std::abs(fd), std::abs(res.grad[t][v])});
        worst = std::max(worst, err);
      }
    }
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3e", worst);
  std::cout << trials << " instances checked, worst relative gradient error "
            << buf << "\n";
  return worst < 1e-4 ? 0 : 1;
}

int RunDecode(const std::string& manifest_path, const std::string& bpe,
              const std::string& arpa, double lambda, double beta, int beam,
              int nbest, DecoderChoice choice, const std::string& out) {
  auto inv = TokenInventory::Load(bpe);
  auto entries = LoadManifest(manifest_path);
  NGramModel lm;
  bool have_lm = !arpa.empty();
  if (have_lm) {
    lm = ArpaLoad(arpa);
    lm.AttachInventory(inv);
  }
  FusionConfig fc;
  fc.beam = beam;
  fc.lm_weight = lambda;
  fc.length_bonus = beta;
  fc.nbest = nbest;
  auto rows = DecodeManifest(entries, inv, choice,
                             have_lm ? &lm : nullptr, fc);
  std::string tsv = TranscriptTsv(rows);
  if (out.empty()) {
    std::cout << tsv;
  } else {
    std::ofstream(out) << tsv;
  }
  int failures = 0;
  for (const auto& r : rows) {
    if (!r.ok()) {
      ++failures;
      std::cerr << r.utt_id << ": ERROR " << r.error << "\n";
    }
  }
  return failures == static_cast<int>(rows.size()) && !rows.empty() ? 1 : 0;
}

int RunTlgBuild(const std::string& lexicon_path, const std::string& arpa,
                const std::string& bpe, const std::string& out,
                const std::string& dump) {
  auto inv = TokenInventory::Load(bpe);
  auto lex = LoadLexicon(lexicon_path, inv);
  auto lm = ArpaLoad(arpa);
  Wfst l = BuildLexiconFst(lex, inv.vocab_size());
  Wfst g = ArpaToGrammarFstForLexicon(lm, lex);
  Wfst lg = Compose(l, g);
  SaveTlgGraph(lg, lex.words, inv.vocab_size(), inv.vocab_size(), out);
  if (!dump.empty()) std::ofstream(dump) << lg.Dump();
  std::cout << "TLG graph: " << lg.num_states() << " states, "
            << lg.finals.size() << " final -> " << out << "\n";
  return 0;
}

int RunDecodeTlg(const std::string& manifest_path, const std::string& graph,
                 double lambda, int beam, const std::string& out) {
  TlgGraph tlg = LoadTlgGraph(graph);
  auto entries = LoadManifest(manifest_path);
  FusionConfig fc;
  fc.beam = beam;
  fc.lm_weight = lambda;
  std::ostringstream os;
  int failures = 0;
  for (const auto& e : entries) {
    try {
      PosteriorMatrix post = LoadPosterior(e.posterior_path);
      TlgResult res = TlgDecode(post, tlg.fst, 0, fc, tlg.aux_base);
      if (!res.complete) {
        throw std::runtime_error("no surviving path");
      }
      std::string text;
      for (size_t i = 0; i < res.word_labels.size(); ++i) {
        if (i) text += ' ';
        text += tlg.words.at(res.word_labels[i]);
      }
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.6f", res.score);
      os << e.utt_id << "\t" << text << "\t" << buf << "\n";
    } catch (const std::exception& ex) {
      ++failures;
      std::cerr << e.utt_id << ": ERROR " << ex.what() << "\n";
    }
  }
  if (out.empty()) {
    std::cout << os.str();
  } else {
    std::ofstream(out) << os.str();
  }
  return failures == static_cast<int>(entries.size()) && !entries.empty() ? 1
                                                                          : 0;
}

int RunEval(const std::string& ref, const std::string& hyp, bool cer,
            bool json) {
  auto report = ScoreCorpus(LoadTsv(ref), LoadTsv(hyp),
                            cer ? ScoreUnit::kChar : ScoreUnit::kWord);
  std::cout << (json ? report.Json() : report.Table());
  return 0;
}

int RunTune(const std::string& manifest_path, const std::string& arpa,
            const std::string& bpe, const std::string& lambda_grid,
            const std::string& beta_grid, int beam) {
  auto inv = TokenInventory::Load(bpe);
  auto entries = LoadManifest(manifest_path);
  auto lm = ArpaLoad(arpa);
  lm.AttachInventory(inv);
  std::map<std::string, std::string> refs;
  for (const auto& e : entries) refs[e.utt_id] = e.text;
  auto result = TuneLmWeight(
      refs, ParseGrid(lambda_grid), ParseGrid(beta_grid),
      [&](double lam, double beta) {
        FusionConfig fc;
        fc.beam = beam;
        fc.lm_weight = lam;
        fc.length_bonus = beta;
        auto rows = DecodeManifest(entries, inv, DecoderChoice::kCtcPrefix,
                                   lam == 0.0 ? nullptr : &lm, fc);
        std::map<std::string, std::string> hyps;
        for (const auto& r : rows) {
          if (!r.ok()) throw std::runtime_error(r.utt_id + ": " + r.error);
          hyps[r.utt_id] = r.text;
        }
        return hyps;
      });
  for (const auto& p : result.grid) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "lambda=%.3f beta=%.3f WER=%.4f\n",
                  p.lm_weight, p.length_bonus, p.wer);
    std::cout << buf;
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "chosen: lambda=%.3f beta=%.3f WER=%.4f\n",
                result.chosen_lm_weight, result.chosen_length_bonus,
                result.chosen_wer);
  std::cout << buf;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"asrdec: BPE + n-gram LM decoding toolkit for ASR posteriors"};
  app.require_subcommand(1);

  std::string corpus, bpe, out, arpa, manifest, text, lexicon, graph, dump;
  std::string ref_path, hyp_path, lambda_grid = "0:1:0.1",
                                  beta_grid = "0:1:0.5";
  int vocab = 0, order = 20, beam = 8, nbest = 1, trials = 20;
  int64_t prune = 0;
  double lambda = 0.3, beta = 0.0;
  uint64_t seed = 7;
  bool cer = false, json = false;

  auto* bpe_train = app.add_subcommand("bpe-train", "train BPE units");
  bpe_train->add_option("--corpus", corpus, "text corpus, one sentence per line")
      ->required();
  bpe_train->add_option("--vocab-size", vocab)->required();
  bpe_train->add_option("--out", out, "inventory output path")->required();

  auto* lm_train = app.add_subcommand("lm-train", "train a Kneser-Ney LM");
  lm_train->add_option("--corpus", corpus)->required();
  lm_train->add_option("--bpe", bpe)->required();
  lm_train->add_option("--order", order, "n-gram order (default 20)");
  lm_train->add_option("--prune", prune, "minimum count kept (0 = no pruning)");
  lm_train->add_option("--arpa-out", out)->required();

  auto* lm_score = app.add_subcommand("lm-score", "score text with an ARPA LM");
  lm_score->add_option("--arpa", arpa)->required();
  lm_score->add_option("--bpe", bpe)->required();
  lm_score->add_option("--text", text)->required();

  auto* loss_check =
      app.add_subcommand("loss-check", "CTC gradient finite-difference check");
  loss_check->add_option("--seed", seed);
  loss_check->add_option("--trials", trials);

  auto* dec_ctc = app.add_subcommand("decode-ctc", "CTC prefix beam search");
  auto* dec_attn =
      app.add_subcommand("decode-attn", "seq2seq beam search over posteriors");
  for (auto* cmd : {dec_ctc, dec_attn}) {
    cmd->add_option("--manifest", manifest)->required();
    cmd->add_option("--bpe", bpe)->required();
    cmd->add_option("--arpa", arpa, "optional fusion LM");
    cmd->add_option("--lm-weight", lambda);
    cmd->add_option("--len-bonus", beta);
    cmd->add_option("--beam", beam);
    cmd->add_option("--nbest", nbest);
    cmd->add_option("--out", out, "transcript TSV (default stdout)");
  }

  auto* tlg_build = app.add_subcommand("tlg-build", "compose L and G graphs");
  tlg_build->add_option("--lexicon", lexicon)->required();
  tlg_build->add_option("--arpa", arpa, "word-level ARPA LM")->required();
  tlg_build->add_option("--bpe", bpe)->required();
  tlg_build->add_option("--out", out)->required();
  tlg_build->add_option("--dump", dump, "optional FST text dump");

  auto* dec_tlg = app.add_subcommand("decode-tlg", "TLG beam decoding");
  dec_tlg->add_option("--manifest", manifest)->required();
  dec_tlg->add_option("--graph", graph)->required();
  dec_tlg->add_option("--lm-weight", lambda);
  dec_tlg->add_option("--beam", beam);
  dec_tlg->add_option("--out", out);

  auto* eval_cmd = app.add_subcommand("eval", "WER/CER scoring");
  eval_cmd->add_option("--ref", ref_path)->required();
  eval_cmd->add_option("--hyp", hyp_path)->required();
  eval_cmd->add_flag("--cer", cer, "score characters instead of words");
  eval_cmd->add_flag("--json", json, "emit the JSON report");

  auto* tune = app.add_subcommand("tune", "grid-tune fusion weights on dev");
  tune->add_option("--manifest", manifest)->required();
  tune->add_option("--arpa", arpa)->required();
  tune->add_option("--bpe", bpe)->required();
  tune->add_option("--lambda-grid", lambda_grid, "start:stop:step or list");
  tune->add_option("--beta-grid", beta_grid, "start:stop:step or list");
  tune->add_option("--beam", beam);

  std::string demo_out = "demo_out";
  double demo_noise = -1.0;
  auto* demo = app.add_subcommand(
      "demo", "synthetic train -> fuse LM -> tune -> report pipeline");
  demo->add_option("--seed", seed);
  demo->add_option("--out", demo_out);
  demo->add_option("--noise", demo_noise, "confusion probability override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (bpe_train->parsed()) return RunBpeTrain(corpus, vocab, out);
    if (lm_train->parsed()) return RunLmTrain(corpus, bpe, order, prune, out);
    if (lm_score->parsed()) return RunLmScore(arpa, bpe, text);
    if (loss_check->parsed()) return RunLossCheck(seed, trials);
    if (dec_ctc->parsed()) {
      return RunDecode(manifest, bpe, arpa, arpa.empty() ? 0.0 : lambda, beta,
                       beam, nbest, DecoderChoice::kCtcPrefix, out);
    }
    if (dec_attn->parsed()) {
      return RunDecode(manifest, bpe, arpa, arpa.empty() ? 0.0 : lambda, beta,
                       beam, nbest, DecoderChoice::kAttention, out);
    }
    if (tlg_build->parsed()) return RunTlgBuild(lexicon, arpa, bpe, out, dump);
    if (dec_tlg->parsed()) return RunDecodeTlg(manifest, graph, lambda, beam, out);
    if (eval_cmd->parsed()) return RunEval(ref_path, hyp_path, cer, json);
    if (tune->parsed()) {
      return RunTune(manifest, arpa, bpe, lambda_grid, beta_grid, beam);
    }
    if (demo->parsed()) {
      DemoConfig cfg;
      cfg.seed = seed;
      cfg.out_dir = demo_out;
      if (demo_noise >= 0.0) cfg.sub_noise = demo_noise;
      DemoReport rep = RunDemo(cfg);
      std::cout << rep.Render();
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
