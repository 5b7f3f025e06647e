#include "asrdec/ngram_lm.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace asrdec {

namespace {
constexpr double kBosLogProb = -99.0;
constexpr int kLmBos = 0;
constexpr int kLmEos = 1;
constexpr int kLmUnk = 2;
}  // namespace

std::string LmBuildReport::Summary() const {
  std::ostringstream os;
  for (size_t i = 0; i < discounts.size(); ++i) {
    const auto& d = discounts[i];
    os << "order " << (i + 1) << ": D1=" << d.d1 << " D2=" << d.d2
       << " D3+=" << d.d3 << (d.fallback ? " (fixed-discount fallback)" : "")
       << "\n";
  }
  return os.str();
}

CountTable CountNgrams(const std::vector<std::vector<std::string>>& sentences,
                       int order) {
  if (order < 1) throw std::invalid_argument("order must be >= 1");
  CountTable table;
  table.order = order;
  table.vocab = {TokenInventory::kBos, TokenInventory::kEos,
                 TokenInventory::kUnk};
  std::set<std::string> seen;
  for (const auto& s : sentences) {
    for (const auto& w : s) {
      if (w != TokenInventory::kBos && w != TokenInventory::kEos &&
          w != TokenInventory::kUnk) {
        seen.insert(w);
      }
    }
  }
  table.vocab.insert(table.vocab.end(), seen.begin(), seen.end());
  std::unordered_map<std::string, int32_t> ids;
  for (size_t i = 0; i < table.vocab.size(); ++i) {
    ids[table.vocab[i]] = static_cast<int32_t>(i);
  }

  table.raw.assign(order, {});
  for (const auto& s : sentences) {
    Ngram padded;
    padded.push_back(kLmBos);
    for (const auto& w : s) padded.push_back(ids.at(w));
    padded.push_back(kLmEos);
    for (int n = 1; n <= order; ++n) {
      for (size_t i = 0; i + n <= padded.size(); ++i) {
        Ngram g(padded.begin() + i, padded.begin() + i + n);
        ++table.raw[n - 1][g];
      }
    }
  }

  // Continuation counts: distinct left extensions, except <s>-initial
  // n-grams which keep their raw counts.
  table.adjusted.assign(order, {});
  table.adjusted[order - 1] = table.raw[order - 1];
  for (int n = order - 1; n >= 1; --n) {
    auto& adj = table.adjusted[n - 1];
    for (const auto& [g, c] : table.raw[n]) {
      Ngram suffix(g.begin() + 1, g.end());
      ++adj[suffix];
    }
    for (const auto& [g, c] : table.raw[n - 1]) {
      if (g[0] == kLmBos) adj[g] = c;
    }
  }
  return table;
}

int NGramModel::WordId(const std::string& w) const {
  auto it = word_to_id_.find(w);
  return it == word_to_id_.end() ? unk_ : it->second;
}

int32_t NGramModel::FindContextNode(const Ngram& context) const {
  int32_t node = 0;
  for (auto it = context.rbegin(); it != context.rend(); ++it) {
    auto ch = nodes_[node].children.find(*it);
    if (ch == nodes_[node].children.end()) return -1;
    node = ch->second;
  }
  return node;
}

int32_t NGramModel::GetOrCreateContextNode(const Ngram& context) {
  int32_t node = 0;
  for (auto it = context.rbegin(); it != context.rend(); ++it) {
    auto ch = nodes_[node].children.find(*it);
    if (ch == nodes_[node].children.end()) {
      nodes_.push_back(TrieNode{});
      nodes_.back().depth = nodes_[node].depth + 1;
      int32_t id = static_cast<int32_t>(nodes_.size()) - 1;
      nodes_[node].children.emplace(*it, id);
      node = id;
    } else {
      node = ch->second;
    }
  }
  return node;
}

void NGramModel::SetProb(const Ngram& ngram, double logp) {
  Ngram ctx(ngram.begin(), ngram.end() - 1);
  nodes_[GetOrCreateContextNode(ctx)].probs[ngram.back()] = logp;
}

void NGramModel::SetBackoff(const Ngram& context, double log_bo) {
  nodes_[GetOrCreateContextNode(context)].backoff = log_bo;
}

double NGramModel::LogProb(const Ngram& context, int32_t token) const {
  int use = std::min<int>(order_ - 1, static_cast<int>(context.size()));
  // Node per context suffix length, walked most-recent-token first.
  std::vector<int32_t> node_for_len(use + 1, -1);
  node_for_len[0] = 0;
  int32_t node = 0;
  for (int k = 1; k <= use; ++k) {
    int32_t tok = context[context.size() - k];
    auto ch = nodes_[node].children.find(tok);
    if (ch == nodes_[node].children.end()) break;
    node = ch->second;
    node_for_len[k] = node;
  }
  double acc = 0.0;
  for (int k = use; k >= 0; --k) {
    int32_t nd = node_for_len[k];
    if (nd < 0) continue;
    auto it = nodes_[nd].probs.find(token);
    if (it != nodes_[nd].probs.end()) return it->second + acc;
    acc += nodes_[nd].backoff;
  }
  // Unreachable when every vocab token has a unigram entry; keep a floor.
  return kBosLogProb;
}

double NGramModel::SequenceLogProb(const Ngram& ids) const {
  Ngram ctx{static_cast<int32_t>(bos_)};
  double total = 0.0;
  for (int32_t id : ids) {
    total += LogProb(ctx, id);
    ctx.push_back(id);
  }
  total += LogProb(ctx, eos_);
  return total;
}

int64_t NGramModel::NgramCount(int n) const {
  int64_t count = 0;
  for (const auto& node : nodes_) {
    if (node.depth == n - 1) count += static_cast<int64_t>(node.probs.size());
  }
  return count;
}

std::vector<Ngram> NGramModel::StoredContexts() const {
  std::vector<Ngram> out;
  // DFS; path from root holds the context most-recent-token first.
  std::vector<std::pair<int32_t, Ngram>> stack{{0, {}}};
  while (!stack.empty()) {
    auto [node, rpath] = stack.back();
    stack.pop_back();
    if (!nodes_[node].probs.empty()) {
      Ngram ctx(rpath.rbegin(), rpath.rend());
      out.push_back(std::move(ctx));
    }
    for (const auto& [tok, child] : nodes_[node].children) {
      Ngram next = rpath;
      next.push_back(tok);
      stack.emplace_back(child, std::move(next));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::pair<int32_t, double>> NGramModel::StoredPredictions(
    const Ngram& context) const {
  std::vector<std::pair<int32_t, double>> out;
  int32_t node = FindContextNode(context);
  if (node < 0) return out;
  out.assign(nodes_[node].probs.begin(), nodes_[node].probs.end());
  std::sort(out.begin(), out.end());
  return out;
}

double NGramModel::BackoffWeight(const Ngram& context) const {
  int32_t node = FindContextNode(context);
  return node < 0 ? 0.0 : nodes_[node].backoff;
}

void NGramModel::AttachInventory(const TokenInventory& inv) {
  inv_to_lm_.assign(inv.vocab_size(), unk_);
  for (int i = 0; i < inv.vocab_size(); ++i) {
    inv_to_lm_[i] = WordId(inv.token(i));
  }
}

double NGramModel::InvLogProb(const std::vector<int>& inv_context,
                              int inv_token) const {
  Ngram ctx{static_cast<int32_t>(bos_)};
  ctx.reserve(inv_context.size() + 1);
  for (int id : inv_context) ctx.push_back(inv_to_lm_.at(id));
  return LogProb(ctx, inv_to_lm_.at(inv_token));
}

double NGramModel::InvEosLogProb(const std::vector<int>& inv_context) const {
  Ngram ctx{static_cast<int32_t>(bos_)};
  ctx.reserve(inv_context.size() + 1);
  for (int id : inv_context) ctx.push_back(inv_to_lm_.at(id));
  return LogProb(ctx, eos_);
}

double NGramModel::InvSequenceLogProb(const std::vector<int>& inv_ids) const {
  Ngram ids;
  ids.reserve(inv_ids.size());
  for (int id : inv_ids) ids.push_back(inv_to_lm_.at(id));
  return SequenceLogProb(ids);
}

namespace {

struct Discounts {
  double d[4] = {0, 0, 0, 0};  // d[1], d[2], d[3] for count 1, 2, >=3
  bool fallback = false;
  double of(int64_t count) const {
    return count >= 3 ? d[3] : d[count];
  }
};

Discounts ComputeDiscounts(const NgramCountMap& counts, bool skip_bos) {
  int64_t n1 = 0, n2 = 0, n3 = 0, n4 = 0;
  for (const auto& [g, c] : counts) {
    if (skip_bos && g.size() == 1 && g[0] == kLmBos) continue;
    if (c == 1) ++n1;
    else if (c == 2) ++n2;
    else if (c == 3) ++n3;
    else if (c == 4) ++n4;
  }
  Discounts d;
  if (n1 == 0 || n2 == 0 || n3 == 0 || n4 == 0) {
    d.d[1] = d.d[2] = d.d[3] = 0.5;
    d.fallback = true;
    return d;
  }
  double y = static_cast<double>(n1) / (n1 + 2.0 * n2);
  d.d[1] = 1.0 - 2.0 * y * n2 / n1;
  d.d[2] = 2.0 - 3.0 * y * n3 / n2;
  d.d[3] = 3.0 - 4.0 * y * n4 / n3;
  if (d.d[1] < 0 || d.d[2] < 0 || d.d[3] < 0) {
    d.d[1] = d.d[2] = d.d[3] = 0.5;
    d.fallback = true;
  }
  return d;
}

// Linear-space conditional probabilities per order, keyed by full n-gram.
using ProbMap = std::unordered_map<Ngram, double, VecHash>;

}  // namespace

NGramModel EstimateKneserNey(const CountTable& counts,
                             int64_t prune_min_count) {
  const int order = counts.order;
  if (order < 1 || counts.adjusted.empty()) {
    throw std::invalid_argument("empty count table");
  }
  NGramModel model;
  model.order_ = order;
  model.vocab_ = counts.vocab;
  model.bos_ = kLmBos;
  model.eos_ = kLmEos;
  model.unk_ = kLmUnk;
  for (size_t i = 0; i < model.vocab_.size(); ++i) {
    model.word_to_id_[model.vocab_[i]] = static_cast<int>(i);
  }
  model.nodes_.assign(1, {});

  // Working copies with optional pruning; contexts of surviving higher-order
  // n-grams are restored so backoff chains stay intact.
  std::vector<NgramCountMap> work = counts.adjusted;
  if (prune_min_count > 1) {
    for (int n = 2; n <= order; ++n) {
      auto& m = work[n - 1];
      for (auto it = m.begin(); it != m.end();) {
        it = it->second < prune_min_count ? m.erase(it) : std::next(it);
      }
    }
    for (int n = order; n >= 3; --n) {
      for (const auto& [g, c] : work[n - 1]) {
        Ngram ctx(g.begin(), g.end() - 1);
        auto& lower = work[n - 2];
        if (!lower.count(ctx)) lower[ctx] = counts.adjusted[n - 2].at(ctx);
      }
    }
  }

  const int vocab_size = static_cast<int>(model.vocab_.size());
  const double uniform = 1.0 / (vocab_size - 1);  // <s> never predicted

  std::vector<ProbMap> probs(order);
  std::vector<std::unordered_map<Ngram, double, VecHash>> backoffs(order);

  // Backoff-aware lower-order lookup over the partially built tables.
  auto lower_prob = [&](int n, const Ngram& ctx, int32_t w) {
    // conditional P(w | ctx) at order n (|ctx| == n-1)
    Ngram c = ctx;
    int level = n;
    double scale = 1.0;
    while (level >= 1) {
      Ngram g = c;
      g.push_back(w);
      auto it = probs[level - 1].find(g);
      if (it != probs[level - 1].end()) return scale * it->second;
      if (level >= 2) {
        auto bo = backoffs[level - 2].find(c);
        if (bo != backoffs[level - 2].end()) scale *= bo->second;
        c.erase(c.begin());
      }
      --level;
    }
    return scale * uniform;
  };

  model.report_.discounts.resize(order);

  // Order 1: every vocab token except <s> gets a stored probability; the
  // interpolation floor keeps <unk> and unseen specials scoreable.
  {
    const auto& cmap = work[0];
    Discounts disc = ComputeDiscounts(cmap, /*skip_bos=*/true);
    model.report_.discounts[0] = {disc.d[1], disc.d[2], disc.d[3],
                                  disc.fallback};
    double total = 0.0;
    int64_t g1 = 0, g2 = 0, g3 = 0;
    for (const auto& [g, c] : cmap) {
      if (g[0] == kLmBos) continue;
      total += static_cast<double>(c);
      if (c == 1) ++g1;
      else if (c == 2) ++g2;
      else ++g3;
    }
    if (total <= 0) throw std::invalid_argument("empty corpus");
    double gamma =
        (disc.d[1] * g1 + disc.d[2] * g2 + disc.d[3] * g3) / total;
    for (int32_t w = 0; w < vocab_size; ++w) {
      if (w == kLmBos) continue;
      auto it = cmap.find({w});
      double a = it == cmap.end() ? 0.0 : static_cast<double>(it->second);
      double p = gamma * uniform;
      if (a > 0) p += std::max(a - disc.of(static_cast<int64_t>(a)), 0.0) / total;
      probs[0][{w}] = p;
      model.SetProb({w}, std::log10(p));
    }
    model.SetProb({kLmBos}, kBosLogProb);
  }

  for (int n = 2; n <= order; ++n) {
    const auto& cmap = work[n - 1];
    Discounts disc = ComputeDiscounts(cmap, false);
    model.report_.discounts[n - 1] = {disc.d[1], disc.d[2], disc.d[3],
                                      disc.fallback};
    // Group by context.
    std::unordered_map<Ngram, std::vector<std::pair<int32_t, int64_t>>,
                       VecHash>
        by_ctx;
    for (const auto& [g, c] : cmap) {
      Ngram ctx(g.begin(), g.end() - 1);
      by_ctx[ctx].emplace_back(g.back(), c);
    }
    for (auto& [ctx, preds] : by_ctx) {
      double denom = 0.0;
      int64_t g1 = 0, g2 = 0, g3 = 0;
      for (const auto& [w, a] : preds) {
        denom += static_cast<double>(a);
        if (a == 1) ++g1;
        else if (a == 2) ++g2;
        else ++g3;
      }
      double gamma =
          (disc.d[1] * g1 + disc.d[2] * g2 + disc.d[3] * g3) / denom;
      Ngram shorter(ctx.begin() + 1, ctx.end());
      double stored_sum = 0.0, lower_sum = 0.0;
      for (const auto& [w, a] : preds) {
        double pl = lower_prob(n - 1, shorter, w);
        double p = std::max(static_cast<double>(a) - disc.of(a), 0.0) / denom +
                   gamma * pl;
        Ngram g = ctx;
        g.push_back(w);
        probs[n - 1][g] = p;
        model.SetProb(g, std::log10(p));
        stored_sum += p;
        lower_sum += pl;
      }
      // ARPA backoff weight: leftover mass ratio. For interpolated KN this
      // equals gamma up to rounding; the ratio keeps normalization exact.
      double num = std::max(1.0 - stored_sum, 1e-15);
      double den = 1.0 - lower_sum;
      double bo = den < 1e-12 ? 1.0 : num / den;
      backoffs[n - 2][ctx] = bo;
      model.SetBackoff(ctx, std::log10(bo));
    }
  }

  return model;
}

NGramModel TrainUnitLm(const std::vector<std::string>& corpus,
                       const TokenInventory& inv, int order,
                       int64_t prune_min_count) {
  std::vector<std::vector<std::string>> sentences;
  sentences.reserve(corpus.size());
  for (const auto& line : corpus) {
    std::vector<std::string> sent;
    for (int id : inv.Encode(line)) sent.push_back(inv.token(id));
    sentences.push_back(std::move(sent));
  }
  NGramModel model =
      EstimateKneserNey(CountNgrams(sentences, order), prune_min_count);
  model.AttachInventory(inv);
  return model;
}

}  // namespace asrdec
