#include "asrdec/tokenizer.h"

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "asrdec/util.h"

namespace asrdec {

int TokenInventory::id_of(const std::string& tok) const {
  auto it = token_to_id_.find(tok);
  return it == token_to_id_.end() ? unk_id() : it->second;
}

void TokenInventory::RebuildIndex() {
  token_to_id_.clear();
  for (size_t i = 0; i < tokens_.size(); ++i) {
    token_to_id_[tokens_[i]] = static_cast<int>(i);
  }
}

std::vector<std::string> TokenInventory::SymbolizeWord(
    const std::string& word) const {
  std::vector<std::string> syms = Utf8Chars(word);
  if (!syms.empty()) syms[0] = std::string(kWordMarker) + syms[0];
  return syms;
}

namespace {

// Applies one merge rule left to right, merging every adjacent occurrence.
void ApplyMerge(std::vector<std::string>* syms, const std::string& left,
                const std::string& right) {
  std::vector<std::string> out;
  out.reserve(syms->size());
  size_t i = 0;
  while (i < syms->size()) {
    if (i + 1 < syms->size() && (*syms)[i] == left && (*syms)[i + 1] == right) {
      out.push_back(left + right);
      i += 2;
    } else {
      out.push_back((*syms)[i]);
      ++i;
    }
  }
  *syms = std::move(out);
}

}  // namespace

TokenInventory TokenInventory::Train(const std::vector<std::string>& corpus,
                                     int vocab_size) {
  if (corpus.empty()) throw std::invalid_argument("empty corpus");

  TokenInventory inv;
  // Word frequency table; each word is a symbol sequence with a marked
  // initial character.
  std::map<std::string, long long> word_freq;
  for (const auto& line : corpus) {
    for (const auto& w : SplitWhitespace(line)) ++word_freq[w];
  }
  if (word_freq.empty()) throw std::invalid_argument("empty corpus");

  std::map<std::string, std::vector<std::string>> word_syms;
  std::set<std::string> alphabet;
  for (const auto& [w, f] : word_freq) {
    auto syms = inv.SymbolizeWord(w);
    for (const auto& s : syms) alphabet.insert(s);
    word_syms[w] = std::move(syms);
  }

  const int num_specials = 4;
  const int min_vocab = num_specials + static_cast<int>(alphabet.size());
  if (vocab_size < min_vocab) {
    throw std::invalid_argument("vocab_size " + std::to_string(vocab_size) +
                                " too small; minimum is " +
                                std::to_string(min_vocab));
  }

  inv.tokens_ = {kBlank, kBos, kEos, kUnk};
  inv.tokens_.insert(inv.tokens_.end(), alphabet.begin(), alphabet.end());

  while (static_cast<int>(inv.tokens_.size()) < vocab_size) {
    // Pair frequencies over the current segmentation, weighted by word count.
    std::map<std::pair<std::string, std::string>, long long> pair_freq;
    for (const auto& [w, syms] : word_syms) {
      long long f = word_freq[w];
      for (size_t i = 0; i + 1 < syms.size(); ++i) {
        pair_freq[{syms[i], syms[i + 1]}] += f;
      }
    }
    if (pair_freq.empty()) break;
    std::pair<std::string, std::string> best;
    long long best_freq = -1;
    for (const auto& [p, f] : pair_freq) {
      if (f > best_freq) {  // map iteration is lexicographic, first wins ties
        best = p;
        best_freq = f;
      }
    }
    inv.merges_.push_back(best);
    inv.tokens_.push_back(best.first + best.second);
    for (auto& [w, syms] : word_syms) ApplyMerge(&syms, best.first, best.second);
  }

  inv.RebuildIndex();
  return inv;
}

std::vector<int> TokenInventory::Encode(const std::string& text) const {
  std::vector<int> ids;
  for (const auto& w : SplitWhitespace(text)) {
    auto syms = SymbolizeWord(w);
    for (const auto& [l, r] : merges_) ApplyMerge(&syms, l, r);
    for (const auto& s : syms) ids.push_back(id_of(s));
  }
  return ids;
}

std::string TokenInventory::Decode(const std::vector<int>& ids) const {
  std::string out;
  const std::string marker = kWordMarker;
  for (size_t pos = 0; pos < ids.size(); ++pos) {
    int id = ids[pos];
    if (id < 0 || id >= vocab_size()) {
      throw std::out_of_range("token id " + std::to_string(id) +
                              " out of range at position " +
                              std::to_string(pos));
    }
    if (id == blank_id() || id == bos_id() || id == eos_id()) continue;
    std::string tok = tokens_[id];
    if (tok.rfind(marker, 0) == 0) {
      if (!out.empty()) out += ' ';
      out += tok.substr(marker.size());
    } else {
      out += tok;
    }
  }
  return out;
}

std::string TokenInventory::Serialize() const {
  std::ostringstream os;
  os << "BPE v1 " << vocab_size() << "\n";
  for (const auto& t : tokens_) os << t << "\n";
  os << "#merges\n";
  for (const auto& [l, r] : merges_) os << l << " " << r << "\n";
  return os.str();
}

void TokenInventory::Save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << Serialize();
}

TokenInventory TokenInventory::Parse(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty BPE file");
  std::istringstream hdr(line);
  std::string magic, version;
  int vocab = 0;
  hdr >> magic >> version >> vocab;
  if (magic != "BPE" || version != "v1" || vocab <= 0) {
    throw std::runtime_error("bad BPE header: " + line);
  }
  TokenInventory inv;
  for (int i = 0; i < vocab; ++i) {
    if (!std::getline(is, line)) {
      throw std::runtime_error("BPE file truncated in token list");
    }
    inv.tokens_.push_back(line);
  }
  if (!std::getline(is, line) || line != "#merges") {
    throw std::runtime_error("BPE file missing #merges section");
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto parts = SplitWhitespace(line);
    if (parts.size() != 2) {
      throw std::runtime_error("bad merge line: " + line);
    }
    inv.merges_.emplace_back(parts[0], parts[1]);
  }
  inv.RebuildIndex();
  return inv;
}

TokenInventory TokenInventory::Load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return Parse(ss.str());
}

}  // namespace asrdec
