#ifndef ASRDEC_WFST_H_
#define ASRDEC_WFST_H_

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "asrdec/decoder.h"
#include "asrdec/ngram_lm.h"
#include "asrdec/posterior.h"
#include "asrdec/tokenizer.h"

namespace asrdec {

constexpr int kEpsilon = 0;
constexpr double kInfWeight = std::numeric_limits<double>::infinity();

// Tropical-weight transducer. Weights are -ln probabilities; label id 0 is
// epsilon on both tapes.
struct Wfst {
  struct Arc {
    int ilabel = 0;
    int olabel = 0;
    double weight = 0.0;
    int next = 0;
  };

  int start = 0;
  std::vector<std::vector<Arc>> arcs;        // per state
  std::map<int, double> finals;              // state -> final weight
  int num_ilabels = 0;  // 0 when the input alphabet is untracked
  int num_olabels = 0;

  int AddState();
  void AddArc(int src, int ilabel, int olabel, double weight, int next);
  int num_states() const { return static_cast<int>(arcs.size()); }
  bool IsFinal(int s) const { return finals.count(s) > 0; }
  double FinalWeight(int s) const;

  // Text dump: "src<TAB>dst<TAB>ilabel<TAB>olabel<TAB>weight" arc lines and
  // "state<TAB>weight" final lines, start state first.
  std::string Dump() const;
};

// word -> unit-id pronunciations over a TokenInventory.
struct Lexicon {
  std::vector<std::string> words;                 // word id - 1 indexes this
  std::vector<std::vector<int>> pronunciations;   // unit ids, parallel list

  int num_words() const { return static_cast<int>(words.size()); }
  // Word label for list position i (labels are 1-based; 0 is epsilon).
  int label_of(int i) const { return i + 1; }
};

Lexicon LoadLexicon(const std::string& path, const TokenInventory& inv);
Lexicon ParseLexicon(const std::string& text, const TokenInventory& inv);

// Unit-sequence -> word transducer: one linear path per pronunciation, word
// label on the first arc, closed with an epsilon loop back to the start.
// Duplicate pronunciations get an auxiliary input symbol appended so word
// identity stays recoverable; auxiliary ids start at aux_base
// (= inventory vocab size).
Wfst BuildLexiconFst(const Lexicon& lex, int num_units);

// Backoff-as-epsilon grammar acceptor: a state per stored LM context, word
// arcs weighted -ln P, epsilon backoff arcs, final weights from eos.
// Labels are LM-internal word ids shifted so 0 stays epsilon, via
// the word_label hook below.
struct GrammarFst {
  Wfst fst;
  std::vector<std::string> labels;  // label id -> word string; [0] = <eps>
  int LabelOf(const std::string& w) const;
};
GrammarFst ArpaToGrammarFst(const NGramModel& model);

// Grammar over lexicon words so that L and G share the word alphabet.
Wfst ArpaToGrammarFstForLexicon(const NGramModel& model, const Lexicon& lex);

Wfst Compose(const Wfst& a, const Wfst& b);

// Minimum path weight accepting `ilabels` on the input tape (epsilon and
// auxiliary labels >= aux_base traverse freely), including final weight.
// Returns kInfWeight when no accepting path exists.
double StringWeight(const Wfst& fst, const std::vector<int>& ilabels,
                    int aux_base = -1);

struct TlgResult {
  std::vector<int> word_labels;
  std::vector<int> unit_ids;
  double score = 0.0;  // acoustic - see TlgDecode
  bool complete = true;
};

// CTC-topology token passing over a composed L*G graph: blanks and repeats
// consume frames in place, distinct units advance along arcs. Prefix
// probability mass is accumulated per (graph state, collapsed prefix), and
// graph weights enter the ranking scaled by cfg.lm_weight. When no
// hypothesis can reach a final state the best partial is returned with
// complete = false.
TlgResult TlgDecode(const PosteriorMatrix& post, const Wfst& lg, int blank,
                    const FusionConfig& cfg, int aux_base = -1);

void SaveTlgGraph(const Wfst& lg, const std::vector<std::string>& words,
                  int num_units, int aux_base, const std::string& path);
struct TlgGraph {
  Wfst fst;
  std::vector<std::string> words;  // word label -> string, [0] unused
  int num_units = 0;
  int aux_base = -1;
};
TlgGraph LoadTlgGraph(const std::string& path);

}  // namespace asrdec

#endif  // ASRDEC_WFST_H_
