#include "asrdec/eval.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "asrdec/util.h"

namespace asrdec {

std::string NormalizeText(const std::string& s) {
  auto words = SplitWhitespace(s);
  std::string out;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

EditAlignment EditDistance(const std::vector<std::string>& ref,
                           const std::vector<std::string>& hyp) {
  const size_t R = ref.size(), H = hyp.size();
  std::vector<std::vector<int>> d(R + 1, std::vector<int>(H + 1, 0));
  // backtrack op: 0 match, 1 sub, 2 del, 3 ins
  std::vector<std::vector<unsigned char>> bt(R + 1,
                                             std::vector<unsigned char>(H + 1));
  for (size_t i = 1; i <= R; ++i) {
    d[i][0] = static_cast<int>(i);
    bt[i][0] = 2;
  }
  for (size_t j = 1; j <= H; ++j) {
    d[0][j] = static_cast<int>(j);
    bt[0][j] = 3;
  }
  for (size_t i = 1; i <= R; ++i) {
    for (size_t j = 1; j <= H; ++j) {
      if (ref[i - 1] == hyp[j - 1]) {
        d[i][j] = d[i - 1][j - 1];
        bt[i][j] = 0;
        continue;
      }
      // Tie-break preference: substitution > deletion > insertion.
      int sub = d[i - 1][j - 1] + 1;
      int del = d[i - 1][j] + 1;
      int ins = d[i][j - 1] + 1;
      int best = std::min({sub, del, ins});
      d[i][j] = best;
      bt[i][j] = best == sub ? 1 : (best == del ? 2 : 3);
    }
  }
  EditAlignment a;
  size_t i = R, j = H;
  while (i > 0 || j > 0) {
    switch (bt[i][j]) {
      case 0:
        a.ops.push_back(EditOp::kMatch);
        --i;
        --j;
        break;
      case 1:
        a.ops.push_back(EditOp::kSub);
        ++a.substitutions;
        --i;
        --j;
        break;
      case 2:
        a.ops.push_back(EditOp::kDel);
        ++a.deletions;
        --i;
        break;
      default:
        a.ops.push_back(EditOp::kIns);
        ++a.insertions;
        --j;
        break;
    }
  }
  std::reverse(a.ops.begin(), a.ops.end());
  return a;
}

double EvalReport::error_rate() const {
  if (ref_len == 0) {
    throw std::runtime_error("empty reference corpus: error rate undefined");
  }
  return static_cast<double>(substitutions + deletions + insertions) /
         static_cast<double>(ref_len);
}

std::string EvalReport::Table() const {
  std::ostringstream os;
  const char* label = unit == ScoreUnit::kWord ? "WER" : "CER";
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%s %.4f  (S=%d D=%d I=%d N=%d, %zu utterances)\n", label,
                error_rate(), substitutions, deletions, insertions, ref_len,
                utterances.size());
  os << buf;
  return os.str();
}

std::string EvalReport::Json() const {
  std::ostringstream os;
  char buf[128];
  os << "{\n  \"unit\": \""
     << (unit == ScoreUnit::kWord ? "word" : "char") << "\",\n";
  std::snprintf(buf, sizeof(buf), "  \"error_rate\": %.6f,\n", error_rate());
  os << buf << "  \"substitutions\": " << substitutions
     << ",\n  \"deletions\": " << deletions
     << ",\n  \"insertions\": " << insertions
     << ",\n  \"ref_len\": " << ref_len << ",\n  \"utterances\": {";
  bool first = true;
  for (const auto& [id, u] : utterances) {
    if (!first) os << ",";
    first = false;
    os << "\n    \"" << id << "\": {\"S\": " << u.substitutions
       << ", \"D\": " << u.deletions << ", \"I\": " << u.insertions
       << ", \"N\": " << u.ref_len << "}";
  }
  os << "\n  }\n}\n";
  return os.str();
}

namespace {

std::vector<std::string> Tokenize(const std::string& text, ScoreUnit unit) {
  std::string norm = NormalizeText(text);
  if (unit == ScoreUnit::kWord) return SplitWhitespace(norm);
  return Utf8Chars(norm);  // spaces count as characters
}

}  // namespace

EvalReport ScoreCorpus(const std::map<std::string, std::string>& refs,
                       const std::map<std::string, std::string>& hyps,
                       ScoreUnit unit) {
  std::vector<std::string> missing;
  for (const auto& [id, _] : refs) {
    if (!hyps.count(id)) missing.push_back("hyp:" + id);
  }
  for (const auto& [id, _] : hyps) {
    if (!refs.count(id)) missing.push_back("ref:" + id);
  }
  if (!missing.empty()) {
    std::string msg = "utterance id mismatch, missing:";
    for (const auto& m : missing) msg += " " + m;
    throw std::runtime_error(msg);
  }

  EvalReport rep;
  rep.unit = unit;
  std::vector<std::pair<std::string, std::string>> items(refs.begin(),
                                                         refs.end());
  std::vector<UtteranceScore> scores(items.size());
#pragma omp parallel for schedule(dynamic)
  for (long k = 0; k < static_cast<long>(items.size()); ++k) {
    const auto& [id, ref_text] = items[k];
    auto r = Tokenize(ref_text, unit);
    auto h = Tokenize(hyps.at(id), unit);
    UtteranceScore u;
    u.ref_len = static_cast<int>(r.size());
    if (r.empty()) {
      // Empty reference: every hypothesis token is an insertion.
      u.insertions = static_cast<int>(h.size());
      u.ops.assign(h.size(), EditOp::kIns);
    } else {
      auto a = EditDistance(r, h);
      u.substitutions = a.substitutions;
      u.deletions = a.deletions;
      u.insertions = a.insertions;
      u.ops = std::move(a.ops);
    }
    scores[k] = std::move(u);
  }
  for (size_t k = 0; k < items.size(); ++k) {
    rep.substitutions += scores[k].substitutions;
    rep.deletions += scores[k].deletions;
    rep.insertions += scores[k].insertions;
    rep.ref_len += scores[k].ref_len;
    rep.utterances[items[k].first] = std::move(scores[k]);
  }
  return rep;
}

TuningResult TuneLmWeight(
    const std::map<std::string, std::string>& refs,
    const std::vector<double>& lambda_grid,
    const std::vector<double>& beta_grid,
    const std::function<std::map<std::string, std::string>(double, double)>&
        decode) {
  if (lambda_grid.empty() || beta_grid.empty()) {
    throw std::invalid_argument("tuning grids must be non-empty");
  }
  TuningResult res;
  bool have = false;
  for (double lam : lambda_grid) {
    for (double beta : beta_grid) {
      auto hyps = decode(lam, beta);
      double wer = ScoreCorpus(refs, hyps, ScoreUnit::kWord).error_rate();
      res.grid.push_back({lam, beta, wer});
      if (!have || wer < res.chosen_wer) {
        have = true;
        res.chosen_lm_weight = lam;
        res.chosen_length_bonus = beta;
        res.chosen_wer = wer;
      }
      // Grid iterates smaller lambda then smaller beta first, so strict
      // improvement implements the tie-break.
    }
  }
  return res;
}

std::string SelectBestCheckpoint(
    const std::vector<std::pair<std::string, double>>& candidates) {
  if (candidates.empty()) throw std::invalid_argument("no checkpoints");
  size_t best = 0;
  for (size_t i = 1; i < candidates.size(); ++i) {
    if (candidates[i].second < candidates[best].second) best = i;
  }
  return candidates[best].first;
}

std::map<std::string, std::string> LoadTsv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::map<std::string, std::string> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error(path + " line " + std::to_string(line_no) +
                               ": expected utt_id<TAB>text");
    }
    rows[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return rows;
}

void SaveTsv(const std::map<std::string, std::string>& rows,
             const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  for (const auto& [id, text] : rows) os << id << "\t" << text << "\n";
}

}  // namespace asrdec
