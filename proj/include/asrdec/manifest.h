#ifndef ASRDEC_MANIFEST_H_
#define ASRDEC_MANIFEST_H_

#include <optional>
#include <string>
#include <vector>

#include "asrdec/decoder.h"
#include "asrdec/tokenizer.h"

namespace asrdec {

struct ManifestEntry {
  std::string utt_id;
  std::string posterior_path;
  std::string text;  // reference transcript, may be empty
};

// JSON-lines manifest: one {"utt_id":..., "posterior_path":..., "text":...}
// record per line.
std::vector<ManifestEntry> LoadManifest(const std::string& path);
void SaveManifest(const std::vector<ManifestEntry>& entries,
                  const std::string& path);

enum class DecoderChoice { kCtcPrefix, kAttention };

struct TranscriptRow {
  std::string utt_id;
  std::string text;
  double combined = 0.0;
  std::string error;  // non-empty when this utterance failed
  bool ok() const { return error.empty(); }
};

// Decodes every manifest entry; corrupt or missing posteriors are recorded
// per utterance and the run continues. Rows come back sorted by utterance
// id. Utterances run in parallel unless threads == 1; ASRDEC_THREADS, when
// set, caps the worker count.
std::vector<TranscriptRow> DecodeManifest(
    const std::vector<ManifestEntry>& entries, const TokenInventory& inv,
    DecoderChoice decoder, const NGramModel* lm, const FusionConfig& cfg,
    int threads = 0);

std::string TranscriptTsv(const std::vector<TranscriptRow>& rows);

// Effective worker count: explicit argument, else ASRDEC_THREADS, else all.
int EffectiveThreads(int requested);

}  // namespace asrdec

#endif  // ASRDEC_MANIFEST_H_
