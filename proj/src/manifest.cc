#include "asrdec/manifest.h"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "asrdec/posterior.h"
#include "json.hpp"

namespace asrdec {

std::vector<ManifestEntry> LoadManifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::vector<ManifestEntry> out;
  std::string line;
  int line_no = 0;
  std::set<std::string> ids;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + " line " + std::to_string(line_no) +
                               ": " + e.what());
    }
    ManifestEntry e;
    e.utt_id = j.at("utt_id").get<std::string>();
    e.posterior_path = j.value("posterior_path", "");
    e.text = j.value("text", "");
    if (!ids.insert(e.utt_id).second) {
      throw std::runtime_error(path + " line " + std::to_string(line_no) +
                               ": duplicate utt_id " + e.utt_id);
    }
    out.push_back(std::move(e));
  }
  return out;
}

void SaveManifest(const std::vector<ManifestEntry>& entries,
                  const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  for (const auto& e : entries) {
    nlohmann::json j;
    j["utt_id"] = e.utt_id;
    j["posterior_path"] = e.posterior_path;
    j["text"] = e.text;
    os << j.dump() << "\n";
  }
}

int EffectiveThreads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("ASRDEC_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace {

TranscriptRow DecodeOne(const ManifestEntry& e, const TokenInventory& inv,
                        DecoderChoice decoder, const NGramModel* lm,
                        const FusionConfig& cfg) {
  TranscriptRow row;
  row.utt_id = e.utt_id;
  try {
    PosteriorMatrix post = LoadPosterior(e.posterior_path);
    std::vector<Hypothesis> nbest;
    if (decoder == DecoderChoice::kCtcPrefix) {
      nbest = CtcPrefixBeamSearch(post, lm, cfg, inv.blank_id());
    } else {
      PosteriorStepScorer scorer(post, inv.eos_id());
      nbest = Seq2SeqBeamSearch(scorer, lm, cfg, inv.eos_id());
    }
    if (nbest.empty()) throw std::runtime_error("decoder returned no output");
    row.text = inv.Decode(nbest[0].ids);
    row.combined = nbest[0].combined;
  } catch (const std::exception& ex) {
    row.error = ex.what();
  }
  return row;
}

}  // namespace

std::vector<TranscriptRow> DecodeManifest(
    const std::vector<ManifestEntry>& entries, const TokenInventory& inv,
    DecoderChoice decoder, const NGramModel* lm, const FusionConfig& cfg,
    int threads) {
  std::vector<TranscriptRow> rows(entries.size());
  const int workers = EffectiveThreads(threads);
  if (workers == 1) {
    for (size_t i = 0; i < entries.size(); ++i) {
      rows[i] = DecodeOne(entries[i], inv, decoder, lm, cfg);
    }
  } else {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(workers)
#endif
    for (long i = 0; i < static_cast<long>(entries.size()); ++i) {
      rows[i] = DecodeOne(entries[i], inv, decoder, lm, cfg);
    }
  }
  std::sort(rows.begin(), rows.end(),
            [](const TranscriptRow& a, const TranscriptRow& b) {
              return a.utt_id < b.utt_id;
            });
  return rows;
}

std::string TranscriptTsv(const std::vector<TranscriptRow>& rows) {
  std::ostringstream os;
  for (const auto& r : rows) {
    if (!r.ok()) continue;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", r.combined);
    os << r.utt_id << "\t" << r.text << "\t" << buf << "\n";
  }
  return os.str();
}

}  // namespace asrdec
