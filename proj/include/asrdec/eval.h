#ifndef ASRDEC_EVAL_H_
#define ASRDEC_EVAL_H_

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace asrdec {

enum class EditOp { kMatch, kSub, kDel, kIns };

struct EditAlignment {
  int substitutions = 0;
  int deletions = 0;
  int insertions = 0;
  // One optimal trace; ties resolved substitution > deletion > insertion.
  std::vector<EditOp> ops;
  int distance() const { return substitutions + deletions + insertions; }
};

EditAlignment EditDistance(const std::vector<std::string>& ref,
                           const std::vector<std::string>& hyp);

enum class ScoreUnit { kWord, kChar };

struct UtteranceScore {
  int substitutions = 0, deletions = 0, insertions = 0, ref_len = 0;
  std::vector<EditOp> ops;
};

struct EvalReport {
  ScoreUnit unit = ScoreUnit::kWord;
  std::map<std::string, UtteranceScore> utterances;
  int substitutions = 0, deletions = 0, insertions = 0, ref_len = 0;
  double error_rate() const;  // (S+D+I)/N
  std::string Table() const;
  std::string Json() const;
};

// refs/hyps map utterance id -> text. Normalization is whitespace collapse
// and trim only. Empty references contribute N=0 and count their
// hypothesis tokens as insertions. In char mode spaces count as characters.
EvalReport ScoreCorpus(const std::map<std::string, std::string>& refs,
                       const std::map<std::string, std::string>& hyps,
                       ScoreUnit unit);

struct TuningResult {
  struct GridPoint {
    double lm_weight = 0.0;
    double length_bonus = 0.0;
    double wer = 0.0;
  };
  std::vector<GridPoint> grid;
  double chosen_lm_weight = 0.0;
  double chosen_length_bonus = 0.0;
  double chosen_wer = 0.0;
};

// Decodes the dev set at every (lambda, beta) grid point via the supplied
// callback (which returns hypothesis texts keyed by utterance id), scores
// WER against refs, and picks the minimum; ties prefer smaller lambda then
// smaller beta.
TuningResult TuneLmWeight(
    const std::map<std::string, std::string>& refs,
    const std::vector<double>& lambda_grid, const std::vector<double>& beta_grid,
    const std::function<std::map<std::string, std::string>(double, double)>&
        decode);

// Argmin by dev WER, ties toward the earliest candidate.
std::string SelectBestCheckpoint(
    const std::vector<std::pair<std::string, double>>& candidates);

// TSV "utt_id<TAB>text" files.
std::map<std::string, std::string> LoadTsv(const std::string& path);
void SaveTsv(const std::map<std::string, std::string>& rows,
             const std::string& path);

std::string NormalizeText(const std::string& s);

}  // namespace asrdec

#endif  // ASRDEC_EVAL_H_
