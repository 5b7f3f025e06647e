#include "asrdec/wfst.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "asrdec/util.h"

namespace asrdec {

int Wfst::AddState() {
  arcs.emplace_back();
  return num_states() - 1;
}

void Wfst::AddArc(int src, int ilabel, int olabel, double weight, int next) {
  arcs.at(src).push_back(Arc{ilabel, olabel, weight, next});
}

double Wfst::FinalWeight(int s) const {
  auto it = finals.find(s);
  return it == finals.end() ? kInfWeight : it->second;
}

std::string Wfst::Dump() const {
  std::ostringstream os;
  auto emit_state = [&](int s) {
    for (const auto& a : arcs[s]) {
      os << s << "\t" << a.next << "\t" << a.ilabel << "\t" << a.olabel << "\t"
         << a.weight << "\n";
    }
  };
  emit_state(start);
  for (int s = 0; s < num_states(); ++s) {
    if (s != start) emit_state(s);
  }
  for (const auto& [s, w] : finals) os << s << "\t" << w << "\n";
  return os.str();
}

Lexicon ParseLexicon(const std::string& text, const TokenInventory& inv) {
  Lexicon lex;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    std::string word = tab == std::string::npos ? line : line.substr(0, tab);
    std::string units = tab == std::string::npos ? "" : line.substr(tab + 1);
    auto unit_strs = SplitWhitespace(units);
    if (word.empty() || unit_strs.empty()) {
      throw std::runtime_error("lexicon line " + std::to_string(line_no) +
                               ": empty pronunciation for word '" + word + "'");
    }
    std::vector<int> ids;
    for (const auto& u : unit_strs) {
      int id = inv.id_of(u);
      if (id == inv.unk_id() && u != TokenInventory::kUnk) {
        throw std::runtime_error("lexicon line " + std::to_string(line_no) +
                                 ": unit '" + u + "' not in inventory");
      }
      ids.push_back(id);
    }
    lex.words.push_back(word);
    lex.pronunciations.push_back(std::move(ids));
  }
  if (lex.words.empty()) throw std::runtime_error("empty lexicon");
  return lex;
}

Lexicon LoadLexicon(const std::string& path, const TokenInventory& inv) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ParseLexicon(ss.str(), inv);
}

Wfst BuildLexiconFst(const Lexicon& lex, int num_units) {
  Wfst fst;
  fst.num_ilabels = num_units;  // auxiliary labels live above this range
  fst.num_olabels = lex.num_words() + 1;
  fst.start = fst.AddState();

  std::map<std::vector<int>, int> seen_prons;
  int aux_used = 0;
  for (int i = 0; i < lex.num_words(); ++i) {
    const auto& pron = lex.pronunciations[i];
    if (pron.empty()) {
      throw std::runtime_error("empty pronunciation for word '" +
                               lex.words[i] + "'");
    }
    int cur = fst.start;
    for (size_t j = 0; j < pron.size(); ++j) {
      int nxt = fst.AddState();
      fst.AddArc(cur, pron[j], j == 0 ? lex.label_of(i) : kEpsilon, 0.0, nxt);
      cur = nxt;
    }
    // Homophone disambiguation: duplicate pronunciations take an extra
    // auxiliary input arc so the paths stay distinct.
    auto [it, inserted] = seen_prons.emplace(pron, i);
    if (!inserted) {
      int nxt = fst.AddState();
      fst.AddArc(cur, num_units + aux_used, kEpsilon, 0.0, nxt);
      ++aux_used;
      cur = nxt;
    }
    fst.finals[cur] = 0.0;
    fst.AddArc(cur, kEpsilon, kEpsilon, 0.0, fst.start);
  }
  return fst;
}

namespace {

// Maps an LM context to its grammar state, falling back to the longest
// stored suffix.
int SuffixState(const std::map<Ngram, int>& states, Ngram ctx, int max_len) {
  if (static_cast<int>(ctx.size()) > max_len) {
    ctx.erase(ctx.begin(), ctx.end() - max_len);
  }
  while (true) {
    auto it = states.find(ctx);
    if (it != states.end()) return it->second;
    ctx.erase(ctx.begin());
  }
}

Wfst BuildGrammar(const NGramModel& model,
                  const std::function<int(int32_t)>& label_of) {
  Wfst g;
  auto contexts = model.StoredContexts();
  std::map<Ngram, int> states;
  for (const auto& c : contexts) states[c] = g.AddState();
  if (!states.count({})) states[{}] = g.AddState();

  Ngram bos_ctx{static_cast<int32_t>(model.bos())};
  auto bos_it = states.find(bos_ctx);
  g.start = bos_it == states.end() ? states.at({}) : bos_it->second;

  const int max_ctx = model.order() - 1;
  for (const auto& c : contexts) {
    int src = states.at(c);
    for (const auto& [w, logp] : model.StoredPredictions(c)) {
      if (w == model.bos()) continue;
      double weight = -kLn10 * logp;
      if (w == model.eos()) {
        g.finals[src] = weight;
        continue;
      }
      int label = label_of(w);
      if (label <= 0) continue;  // word outside the target alphabet
      Ngram next = c;
      next.push_back(w);
      g.AddArc(src, label, label, weight, SuffixState(states, next, max_ctx));
    }
    if (!c.empty()) {
      Ngram shorter(c.begin() + 1, c.end());
      double bo = -kLn10 * model.BackoffWeight(c);
      g.AddArc(src, kEpsilon, kEpsilon, bo,
               SuffixState(states, shorter, max_ctx));
    }
  }
  return g;
}

}  // namespace

int GrammarFst::LabelOf(const std::string& w) const {
  for (size_t i = 1; i < labels.size(); ++i) {
    if (labels[i] == w) return static_cast<int>(i);
  }
  return -1;
}

GrammarFst ArpaToGrammarFst(const NGramModel& model) {
  GrammarFst out;
  out.labels.push_back("<eps>");
  std::vector<int> lm_to_label(model.vocab().size(), -1);
  for (size_t i = 0; i < model.vocab().size(); ++i) {
    const auto& w = model.vocab()[i];
    if (w == TokenInventory::kBos || w == TokenInventory::kEos) continue;
    lm_to_label[i] = static_cast<int>(out.labels.size());
    out.labels.push_back(w);
  }
  out.fst = BuildGrammar(model, [&](int32_t w) { return lm_to_label[w]; });
  out.fst.num_ilabels = out.fst.num_olabels =
      static_cast<int>(out.labels.size());
  return out;
}

Wfst ArpaToGrammarFstForLexicon(const NGramModel& model, const Lexicon& lex) {
  std::vector<int> lm_to_label(model.vocab().size(), -1);
  for (int i = 0; i < lex.num_words(); ++i) {
    int lm_id = model.WordId(lex.words[i]);
    if (model.vocab()[lm_id] == lex.words[i]) {
      lm_to_label[lm_id] = lex.label_of(i);
    }
  }
  Wfst g = BuildGrammar(model, [&](int32_t w) { return lm_to_label[w]; });
  g.num_ilabels = g.num_olabels = lex.num_words() + 1;
  return g;
}

Wfst Compose(const Wfst& a, const Wfst& b) {
  if (a.num_olabels > 0 && b.num_ilabels > 0 &&
      a.num_olabels != b.num_ilabels) {
    throw std::invalid_argument(
        "compose: output alphabet of a (" + std::to_string(a.num_olabels) +
        ") does not match input alphabet of b (" +
        std::to_string(b.num_ilabels) + ")");
  }
  Wfst out;
  out.num_ilabels = a.num_ilabels;
  out.num_olabels = b.num_olabels;

  // Pair states with an epsilon-sequencing filter flag: 0 after a match,
  // 1 after an a-side epsilon move, 2 after a b-side epsilon move.
  std::map<std::tuple<int, int, int>, int> ids;
  std::vector<std::tuple<int, int, int>> queue;
  auto state_of = [&](int sa, int sb, int f) {
    auto key = std::make_tuple(sa, sb, f);
    auto it = ids.find(key);
    if (it != ids.end()) return it->second;
    int id = out.AddState();
    ids[key] = id;
    queue.push_back(key);
    return id;
  };
  out.start = state_of(a.start, b.start, 0);

  for (size_t qi = 0; qi < queue.size(); ++qi) {
    auto [sa, sb, f] = queue[qi];
    int src = ids.at({sa, sb, f});
    for (const auto& arc_a : a.arcs[sa]) {
      if (arc_a.olabel == kEpsilon) {
        if (f != 2) {
          out.AddArc(src, arc_a.ilabel, kEpsilon, arc_a.weight,
                     state_of(arc_a.next, sb, 1));
        }
        continue;
      }
      for (const auto& arc_b : b.arcs[sb]) {
        if (arc_b.ilabel != arc_a.olabel) continue;
        out.AddArc(src, arc_a.ilabel, arc_b.olabel,
                   arc_a.weight + arc_b.weight,
                   state_of(arc_a.next, arc_b.next, 0));
      }
    }
    // b-side epsilons are allowed from any filter state; a-side epsilons are
    // blocked after one (f == 2), so every interleaving collapses to the
    // canonical a-side-first order exactly once.
    for (const auto& arc_b : b.arcs[sb]) {
      if (arc_b.ilabel != kEpsilon) continue;
      out.AddArc(src, kEpsilon, arc_b.olabel, arc_b.weight,
                 state_of(sa, arc_b.next, 2));
    }
    if (a.IsFinal(sa) && b.IsFinal(sb)) {
      out.finals[src] = a.FinalWeight(sa) + b.FinalWeight(sb);
    }
  }
  return out;
}

namespace {

inline bool FreeLabel(int ilabel, int aux_base) {
  return ilabel == kEpsilon || (aux_base > 0 && ilabel >= aux_base);
}

}  // namespace

double StringWeight(const Wfst& fst, const std::vector<int>& ilabels,
                    int aux_base) {
  const size_t L = ilabels.size();
  using Key = std::pair<int, size_t>;  // (state, consumed)
  std::map<Key, double> dist;
  using QItem = std::pair<double, Key>;
  std::priority_queue<QItem, std::vector<QItem>, std::greater<>> pq;
  auto relax = [&](int s, size_t pos, double d) {
    Key k{s, pos};
    auto it = dist.find(k);
    if (it == dist.end() || d < it->second) {
      dist[k] = d;
      pq.emplace(d, k);
    }
  };
  relax(fst.start, 0, 0.0);
  double best = kInfWeight;
  while (!pq.empty()) {
    auto [d, k] = pq.top();
    pq.pop();
    if (d > dist.at(k)) continue;
    auto [s, pos] = k;
    if (pos == L) best = std::min(best, d + fst.FinalWeight(s));
    for (const auto& arc : fst.arcs[s]) {
      if (FreeLabel(arc.ilabel, aux_base)) {
        relax(arc.next, pos, d + arc.weight);
      } else if (pos < L && arc.ilabel == ilabels[pos]) {
        relax(arc.next, pos + 1, d + arc.weight);
      }
    }
  }
  return best;
}

namespace {

// Epsilon/auxiliary closure from a state: reachable states with minimal
// cost and the word outputs collected on the way.
struct ClosureEntry {
  double cost;
  std::vector<int> words;
};

std::map<int, ClosureEntry> EpsClosure(const Wfst& fst, int state,
                                       int aux_base) {
  std::map<int, ClosureEntry> out;
  using QItem = std::pair<double, int>;
  std::priority_queue<QItem, std::vector<QItem>, std::greater<>> pq;
  out[state] = {0.0, {}};
  pq.emplace(0.0, state);
  while (!pq.empty()) {
    auto [d, s] = pq.top();
    pq.pop();
    if (d > out.at(s).cost) continue;
    for (const auto& arc : fst.arcs[s]) {
      if (!FreeLabel(arc.ilabel, aux_base)) continue;
      double nd = d + arc.weight;
      auto it = out.find(arc.next);
      if (it == out.end() || nd < it->second.cost) {
        ClosureEntry e = out.at(s);
        e.cost = nd;
        if (arc.olabel != kEpsilon) e.words.push_back(arc.olabel);
        out[arc.next] = std::move(e);
        pq.emplace(nd, arc.next);
      }
    }
  }
  return out;
}

// Best graph path reaching one graph state: tropical cost plus the word
// outputs collected along it.
struct TlgPath {
  double cost = kInfWeight;
  std::vector<int> words;
};

// One collapsed prefix. The acoustic mass is a property of the prefix
// alone; every graph state the prefix can sit in shares it, so the states
// live in a side map instead of the hypothesis key.
struct TlgHyp {
  double pb = kLogZero;   // acoustic mass ending in blank
  double pnb = kLogZero;  // acoustic mass ending in the last unit
  std::map<int, TlgPath> states;  // graph state -> best path to it
  double total() const { return LogAdd(pb, pnb); }
  double best_cost() const {
    double c = kInfWeight;
    for (const auto& [s, p] : states) c = std::min(c, p.cost);
    return c;
  }
};

void MergePath(std::map<int, TlgPath>* states, int s, double cost,
               const std::vector<int>& words) {
  auto& p = (*states)[s];
  if (cost < p.cost || (cost == p.cost && words < p.words)) {
    p.cost = cost;
    p.words = words;
  }
}

void MergeStates(std::map<int, TlgPath>* dst,
                 const std::map<int, TlgPath>& src) {
  for (const auto& [s, p] : src) MergePath(dst, s, p.cost, p.words);
}

}  // namespace

TlgResult TlgDecode(const PosteriorMatrix& post, const Wfst& lg, int blank,
                    const FusionConfig& cfg, int aux_base) {
  if (cfg.beam < 1) throw std::invalid_argument("beam size must be >= 1");
  PosteriorMatrix norm = post.Normalized();
  norm.Validate();
  std::map<std::vector<int>, TlgHyp> beam;
  {
    TlgHyp h;
    h.pb = 0.0;
    h.states[lg.start] = TlgPath{0.0, {}};
    beam[{}] = h;
  }

  auto score_of = [&](const std::vector<int>& pfx, const TlgHyp& h) {
    return h.total() - cfg.lm_weight * h.best_cost() +
           cfg.length_bonus * static_cast<double>(pfx.size());
  };

  std::map<int, std::map<int, ClosureEntry>> closure_cache;
  auto closure = [&](int s) -> const std::map<int, ClosureEntry>& {
    auto it = closure_cache.find(s);
    if (it == closure_cache.end()) {
      it = closure_cache.emplace(s, EpsClosure(lg, s, aux_base)).first;
    }
    return it->second;
  };

  for (int t = 0; t < norm.frames; ++t) {
    std::map<std::vector<int>, TlgHyp> next;
    for (const auto& [pfx, h] : beam) {
      // Blank and a no-blank repeat both keep prefix and graph position.
      {
        auto& ns = next[pfx];
        ns.pb = LogAdd(ns.pb, h.total() + norm.at(t, blank));
        if (!pfx.empty() && h.pnb != kLogZero) {
          ns.pnb = LogAdd(ns.pnb, h.pnb + norm.at(t, pfx.back()));
        }
        MergeStates(&ns.states, h.states);
      }
      // Advance along matching arcs over the epsilon closure. Group the
      // destinations per unit first: the acoustic mass of the extended
      // prefix is added once per unit, however many graph routes exist.
      std::map<int, std::map<int, TlgPath>> ext_states;  // unit -> states
      for (const auto& [gs, path] : h.states) {
        for (const auto& [cs, centry] : closure(gs)) {
          for (const auto& arc : lg.arcs[cs]) {
            if (FreeLabel(arc.ilabel, aux_base)) continue;
            int u = arc.ilabel;
            if (u == blank || u >= norm.vocab) continue;
            double cost = path.cost + centry.cost + arc.weight;
            std::vector<int> words = path.words;
            words.insert(words.end(), centry.words.begin(),
                         centry.words.end());
            if (arc.olabel != kEpsilon) words.push_back(arc.olabel);
            MergePath(&ext_states[u], arc.next, cost, words);
          }
        }
      }
      for (auto& [u, states] : ext_states) {
        double mass = (!pfx.empty() && u == pfx.back()) ? h.pb : h.total();
        if (mass == kLogZero) continue;
        std::vector<int> ext = pfx;
        ext.push_back(u);
        auto& ns = next[ext];
        ns.pnb = LogAdd(ns.pnb, mass + norm.at(t, u));
        MergeStates(&ns.states, states);
      }
    }
    // Beam pruning.
    if (static_cast<int>(next.size()) > cfg.beam) {
      std::vector<std::pair<double, const std::vector<int>*>> ranked;
      ranked.reserve(next.size());
      for (const auto& [k, h] : next) ranked.emplace_back(score_of(k, h), &k);
      std::stable_sort(
          ranked.begin(), ranked.end(),
          [](const auto& a, const auto& b) { return a.first > b.first; });
      std::map<std::vector<int>, TlgHyp> kept;
      for (int i = 0; i < cfg.beam; ++i) {
        kept.emplace(*ranked[i].second, next.at(*ranked[i].second));
      }
      next = std::move(kept);
    }
    beam = std::move(next);
  }

  TlgResult best;
  bool have_complete = false;
  double best_score = -kInfWeight;
  TlgResult partial;
  double partial_score = -kInfWeight;
  for (const auto& [pfx, h] : beam) {
    // Finish through the epsilon closure to a final state, from any of the
    // prefix's graph states.
    double fin_cost = kInfWeight;
    std::vector<int> fin_words;
    for (const auto& [gs, path] : h.states) {
      for (const auto& [cs, centry] : closure(gs)) {
        double fw = lg.FinalWeight(cs);
        if (fw == kInfWeight) continue;
        double c = path.cost + centry.cost + fw;
        std::vector<int> words = path.words;
        words.insert(words.end(), centry.words.begin(), centry.words.end());
        if (c < fin_cost || (c == fin_cost && words < fin_words)) {
          fin_cost = c;
          fin_words = words;
        }
      }
    }
    if (fin_cost != kInfWeight) {
      double s = h.total() - cfg.lm_weight * fin_cost +
                 cfg.length_bonus * static_cast<double>(pfx.size());
      if (s > best_score) {
        best_score = s;
        best.word_labels = fin_words;
        best.unit_ids = pfx;
        best.score = s;
        best.complete = true;
        have_complete = true;
      }
    }
    double base = score_of(pfx, h);
    if (base > partial_score) {
      partial_score = base;
      double c = kInfWeight;
      partial.word_labels.clear();
      for (const auto& [gs, path] : h.states) {
        if (path.cost < c) {
          c = path.cost;
          partial.word_labels = path.words;
        }
      }
      partial.unit_ids = pfx;
      partial.score = base;
      partial.complete = false;
    }
  }
  return have_complete ? best : partial;
}

void SaveTlgGraph(const Wfst& lg, const std::vector<std::string>& words,
                  int num_units, int aux_base, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "TLG v1\n";
  os << "units " << num_units << "\n";
  os << "aux_base " << aux_base << "\n";
  os << "words " << words.size() << "\n";
  for (const auto& w : words) os << w << "\n";
  os << "start " << lg.start << "\n";
  size_t arc_count = 0;
  for (const auto& st : lg.arcs) arc_count += st.size();
  os << "states " << lg.num_states() << "\n";
  os << "arcs " << arc_count << "\n";
  for (int s = 0; s < lg.num_states(); ++s) {
    for (const auto& a : lg.arcs[s]) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "%d\t%d\t%d\t%d\t%.9g\n", s, a.next,
                    a.ilabel, a.olabel, a.weight);
      os << buf;
    }
  }
  os << "finals " << lg.finals.size() << "\n";
  for (const auto& [s, w] : lg.finals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%d\t%.9g\n", s, w);
    os << buf;
  }
}

TlgGraph LoadTlgGraph(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::string line;
  auto expect = [&](const std::string& key) {
    if (!std::getline(is, line) || line.rfind(key, 0) != 0) {
      throw std::runtime_error(path + ": expected '" + key + "' line");
    }
    return line.size() > key.size() + 1 ? line.substr(key.size() + 1)
                                        : std::string();
  };
  if (!std::getline(is, line) || line != "TLG v1") {
    throw std::runtime_error(path + ": bad TLG header");
  }
  TlgGraph g;
  g.num_units = std::stoi(expect("units"));
  g.aux_base = std::stoi(expect("aux_base"));
  int nwords = std::stoi(expect("words"));
  g.words.push_back("<eps>");
  for (int i = 0; i < nwords; ++i) {
    if (!std::getline(is, line)) {
      throw std::runtime_error(path + ": truncated word table");
    }
    g.words.push_back(line);
  }
  g.fst.start = std::stoi(expect("start"));
  int nstates = std::stoi(expect("states"));
  for (int i = 0; i < nstates; ++i) g.fst.AddState();
  long narcs = std::stol(expect("arcs"));
  for (long i = 0; i < narcs; ++i) {
    if (!std::getline(is, line)) {
      throw std::runtime_error(path + ": truncated arc table");
    }
    std::istringstream ls(line);
    int s, nxt, il, ol;
    double w;
    if (!(ls >> s >> nxt >> il >> ol >> w)) {
      throw std::runtime_error(path + ": bad arc line: " + line);
    }
    g.fst.AddArc(s, il, ol, w, nxt);
  }
  int nfinals = std::stoi(expect("finals"));
  for (int i = 0; i < nfinals; ++i) {
    if (!std::getline(is, line)) {
      throw std::runtime_error(path + ": truncated final table");
    }
    std::istringstream ls(line);
    int s;
    double w;
    if (!(ls >> s >> w)) {
      throw std::runtime_error(path + ": bad final line: " + line);
    }
    g.fst.finals[s] = w;
  }
  g.fst.num_ilabels = g.num_units;
  g.fst.num_olabels = nwords + 1;
  return g;
}

}  // namespace asrdec
