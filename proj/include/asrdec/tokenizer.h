#ifndef ASRDEC_TOKENIZER_H_
#define ASRDEC_TOKENIZER_H_

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace asrdec {

// BPE unit inventory shared by the LM, the decoders and the FSTs.
// Word-initial units carry the marker prefix kWordMarker so that decode
// is unambiguous. Ids are dense; the four special ids come first.
class TokenInventory {
 public:
  static constexpr const char* kBlank = "<blank>";
  static constexpr const char* kBos = "<s>";
  static constexpr const char* kEos = "</s>";
  static constexpr const char* kUnk = "<unk>";
  static constexpr const char* kWordMarker = "\xe2\x96\x81";  // U+2581

  int blank_id() const { return 0; }
  int bos_id() const { return 1; }
  int eos_id() const { return 2; }
  int unk_id() const { return 3; }
  int vocab_size() const { return static_cast<int>(tokens_.size()); }

  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::vector<std::pair<std::string, std::string>>& merges() const {
    return merges_;
  }
  const std::string& token(int id) const { return tokens_.at(id); }
  // Returns the id of a token string, or unk_id() if unknown.
  int id_of(const std::string& tok) const;

  std::vector<int> Encode(const std::string& text) const;
  std::string Decode(const std::vector<int>& ids) const;

  std::string Serialize() const;
  void Save(const std::string& path) const;
  static TokenInventory Parse(const std::string& text);
  static TokenInventory Load(const std::string& path);

  // Trains merges greedily by highest pair frequency, ties broken
  // lexicographically on the pair. vocab_size must cover the specials plus
  // every distinct marked character.
  static TokenInventory Train(const std::vector<std::string>& corpus,
                              int vocab_size);

 private:
  std::vector<std::string> SymbolizeWord(const std::string& word) const;
  void RebuildIndex();

  std::vector<std::string> tokens_;
  std::vector<std::pair<std::string, std::string>> merges_;
  std::unordered_map<std::string, int> token_to_id_;
};

}  // namespace asrdec

#endif  // ASRDEC_TOKENIZER_H_
