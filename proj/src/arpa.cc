#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "asrdec/ngram_lm.h"

namespace asrdec {

namespace {

std::string FormatLog10(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

[[noreturn]] void ParseFail(int line_no, const std::string& msg) {
  throw std::runtime_error("ARPA parse error at line " +
                           std::to_string(line_no) + ": " + msg);
}

}  // namespace

std::string ArpaWrite(const NGramModel& model) {
  const int order = model.order();
  // Collect entries per order, sorted by id sequence.
  std::vector<std::map<Ngram, std::pair<double, double>>> grams(order);
  std::vector<std::vector<bool>> has_bo(order);
  for (const auto& ctx : model.StoredContexts()) {
    for (const auto& [tok, logp] : model.StoredPredictions(ctx)) {
      Ngram g = ctx;
      g.push_back(tok);
      int n = static_cast<int>(g.size());
      double bo = n < order ? model.BackoffWeight(g) : 0.0;
      grams[n - 1][g] = {logp, bo};
    }
  }

  std::ostringstream os;
  os << "\\data\\\n";
  for (int n = 1; n <= order; ++n) {
    os << "ngram " << n << "=" << grams[n - 1].size() << "\n";
  }
  for (int n = 1; n <= order; ++n) {
    os << "\n\\" << n << "-grams:\n";
    for (const auto& [g, pb] : grams[n - 1]) {
      os << FormatLog10(pb.first) << "\t";
      for (size_t i = 0; i < g.size(); ++i) {
        if (i) os << " ";
        os << model.vocab()[g[i]];
      }
      if (n < order) os << "\t" << FormatLog10(pb.second);
      os << "\n";
    }
  }
  os << "\n\\end\\\n";
  return os.str();
}

NGramModel ArpaParse(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  auto next_line = [&](bool required) {
    while (std::getline(is, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    if (required) ParseFail(line_no, "unexpected end of file");
    return false;
  };

  next_line(true);
  if (line != "\\data\\") ParseFail(line_no, "expected \\data\\ header");

  std::vector<int64_t> declared;
  while (next_line(true)) {
    if (line.rfind("ngram ", 0) != 0) break;
    auto eq = line.find('=');
    if (eq == std::string::npos) ParseFail(line_no, "malformed ngram line");
    int n = std::stoi(line.substr(6, eq - 6));
    int64_t count = std::stoll(line.substr(eq + 1));
    if (n != static_cast<int>(declared.size()) + 1) {
      ParseFail(line_no, "ngram orders out of sequence");
    }
    declared.push_back(count);
  }
  if (declared.empty()) ParseFail(line_no, "no ngram counts declared");
  const int order = static_cast<int>(declared.size());

  NGramModel model;
  model.order_ = order;
  model.nodes_.assign(1, {});

  struct RawEntry {
    double logp;
    std::vector<std::string> words;
    double bo;
    bool has_bo;
  };

  for (int n = 1; n <= order; ++n) {
    std::string expect = "\\" + std::to_string(n) + "-grams:";
    if (line != expect) ParseFail(line_no, "expected section " + expect);
    int64_t rows = 0;
    bool more = false;
    while ((more = next_line(false))) {
      if (!line.empty() && line[0] == '\\') break;
      std::istringstream ls(line);
      RawEntry e;
      e.has_bo = false;
      std::vector<std::string> fields;
      std::string f;
      while (ls >> f) fields.push_back(f);
      if (fields.size() == static_cast<size_t>(n) + 2) {
        e.has_bo = true;
      } else if (fields.size() != static_cast<size_t>(n) + 1) {
        ParseFail(line_no, "expected " + std::to_string(n + 1) + " or " +
                               std::to_string(n + 2) + " fields");
      }
      size_t pos = 0;
      try {
        e.logp = std::stod(fields[0], &pos);
      } catch (const std::exception&) {
        ParseFail(line_no, "bad log probability field");
      }
      e.words.assign(fields.begin() + 1, fields.begin() + 1 + n);
      e.bo = 0.0;
      if (e.has_bo) {
        try {
          e.bo = std::stod(fields.back());
        } catch (const std::exception&) {
          ParseFail(line_no, "bad backoff field");
        }
      }
      ++rows;

      if (n == 1) {
        const std::string& w = e.words[0];
        if (!model.word_to_id_.count(w)) {
          model.word_to_id_[w] = static_cast<int>(model.vocab_.size());
          model.vocab_.push_back(w);
        }
      }
      Ngram g;
      for (const auto& w : e.words) {
        auto it = model.word_to_id_.find(w);
        if (it == model.word_to_id_.end()) {
          ParseFail(line_no, "word '" + w + "' missing from 1-grams");
        }
        g.push_back(it->second);
      }
      model.SetProb(g, e.logp);
      if (e.has_bo && e.bo != 0.0) model.SetBackoff(g, e.bo);
    }
    if (rows != declared[n - 1]) {
      ParseFail(line_no, "section " + std::to_string(n) + "-grams has " +
                             std::to_string(rows) + " entries, header says " +
                             std::to_string(declared[n - 1]));
    }
    if (!more && n < order) ParseFail(line_no, "missing section");
    if (!more) ParseFail(line_no, "missing \\end\\ marker");
  }
  if (line != "\\end\\") ParseFail(line_no, "expected \\end\\, got: " + line);

  auto require = [&](const char* w) {
    auto it = model.word_to_id_.find(w);
    if (it == model.word_to_id_.end()) {
      throw std::runtime_error(std::string("ARPA model lacks ") + w);
    }
    return it->second;
  };
  model.bos_ = require(TokenInventory::kBos);
  model.eos_ = require(TokenInventory::kEos);
  if (!model.word_to_id_.count(TokenInventory::kUnk)) {
    model.word_to_id_[TokenInventory::kUnk] =
        static_cast<int>(model.vocab_.size());
    model.vocab_.push_back(TokenInventory::kUnk);
    model.SetProb({static_cast<int32_t>(model.word_to_id_
                       [TokenInventory::kUnk])},
                  -99.0);
  }
  model.unk_ = model.word_to_id_[TokenInventory::kUnk];
  return model;
}

NGramModel ArpaLoad(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ArpaParse(ss.str());
}

void ArpaSave(const NGramModel& model, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << ArpaWrite(model);
}

}  // namespace asrdec
