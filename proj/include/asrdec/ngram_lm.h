#ifndef ASRDEC_NGRAM_LM_H_
#define ASRDEC_NGRAM_LM_H_

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "asrdec/tokenizer.h"
#include "asrdec/util.h"

namespace asrdec {

using Ngram = std::vector<int32_t>;
using NgramCountMap = std::unordered_map<Ngram, int64_t, VecHash>;

// Raw occurrence counts at every order plus Kneser-Ney continuation counts
// for the lower orders. Continuation counts of <s>-initial n-grams stay raw
// since nothing can precede <s>.
struct CountTable {
  int order = 0;
  std::vector<std::string> vocab;  // id -> token string, specials first
  std::vector<NgramCountMap> raw;       // raw[n-1] holds the n-gram counts
  std::vector<NgramCountMap> adjusted;  // counts actually used per order

  const NgramCountMap& counts_for_order(int n) const {
    return adjusted[n - 1];
  }
};

struct LmBuildReport {
  struct OrderDiscounts {
    double d1 = 0, d2 = 0, d3 = 0;
    bool fallback = false;  // degenerate counts-of-counts, fixed 0.5 used
  };
  std::vector<OrderDiscounts> discounts;  // per order, 1-based index - 1
  std::string Summary() const;
};

// Backoff n-gram model over BPE unit strings. Probabilities and backoff
// weights are log10 to keep ARPA interchange bit-exact; natural-log
// conversion happens at the fusion boundary.
class NGramModel {
 public:
  int order() const { return order_; }
  const std::vector<std::string>& vocab() const { return vocab_; }
  int bos() const { return bos_; }
  int eos() const { return eos_; }
  int unk() const { return unk_; }
  const LmBuildReport& build_report() const { return report_; }

  // Internal LM id for a token string; unknown strings map to <unk>.
  int WordId(const std::string& w) const;

  // log10 P(token | context), standard backoff recursion. Ids are internal
  // LM ids; at most order-1 trailing context tokens are used.
  double LogProb(const Ngram& context, int32_t token) const;

  // log10 probability of a full sentence with <s> context and </s> term.
  double SequenceLogProb(const Ngram& ids) const;

  // Number of stored n-grams at order n.
  int64_t NgramCount(int n) const;

  // Enumerates stored contexts (as id sequences, empty included) that have
  // at least one stored prediction.
  std::vector<Ngram> StoredContexts() const;
  // Stored predictions (token, log10 prob) for one context; empty if none.
  std::vector<std::pair<int32_t, double>> StoredPredictions(
      const Ngram& context) const;
  // log10 backoff weight of a context (0 if absent).
  double BackoffWeight(const Ngram& context) const;

  // Maps token-inventory ids onto this model's vocabulary. Must be called
  // before the Inv* scoring entry points. Inv* contexts are sentence
  // prefixes: <s> is prepended internally, so summing InvLogProb over the
  // prefixes plus InvEosLogProb reproduces InvSequenceLogProb.
  void AttachInventory(const TokenInventory& inv);
  bool attached() const { return !inv_to_lm_.empty(); }
  double InvLogProb(const std::vector<int>& inv_context, int inv_token) const;
  double InvEosLogProb(const std::vector<int>& inv_context) const;
  double InvSequenceLogProb(const std::vector<int>& inv_ids) const;

  friend NGramModel EstimateKneserNey(const CountTable&, int64_t);
  friend NGramModel ArpaParse(const std::string& text);

 private:
  struct TrieNode {
    int depth = 0;         // context length at this node
    double backoff = 0.0;  // log10
    std::unordered_map<int32_t, double> probs;  // token -> log10 prob
    std::unordered_map<int32_t, int32_t> children;  // context token -> node
  };

  int32_t FindContextNode(const Ngram& context) const;  // -1 if absent
  int32_t GetOrCreateContextNode(const Ngram& context);
  void SetProb(const Ngram& ngram, double logp);
  void SetBackoff(const Ngram& context, double log_bo);

  int order_ = 0;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> word_to_id_;
  int bos_ = -1, eos_ = -1, unk_ = -1;
  std::vector<TrieNode> nodes_;  // nodes_[0] is the empty context
  std::vector<int32_t> inv_to_lm_;
  LmBuildReport report_;
};

// Counts n-grams of orders 1..order over sentences of token strings.
// Sentences are wrapped with <s>/</s> internally.
CountTable CountNgrams(const std::vector<std::vector<std::string>>& sentences,
                       int order);

// Interpolated modified Kneser-Ney estimation with Chen-Goodman discounts.
// prune_min_count drops n-grams (order >= 2) whose adjusted count is below
// the threshold, except contexts still needed by surviving higher orders.
NGramModel EstimateKneserNey(const CountTable& counts,
                             int64_t prune_min_count = 0);

// Convenience: BPE-encode a text corpus and train an LM over unit strings.
NGramModel TrainUnitLm(const std::vector<std::string>& corpus,
                       const TokenInventory& inv, int order,
                       int64_t prune_min_count = 0);

std::string ArpaWrite(const NGramModel& model);
NGramModel ArpaParse(const std::string& text);
NGramModel ArpaLoad(const std::string& path);
void ArpaSave(const NGramModel& model, const std::string& path);

}  // namespace asrdec

#endif  // ASRDEC_NGRAM_LM_H_
