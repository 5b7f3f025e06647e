#ifndef ASRDEC_POSTERIOR_H_
#define ASRDEC_POSTERIOR_H_

#include <string>
#include <vector>

namespace asrdec {

enum class PosteriorKind { kLogPosterior = 0, kRawLogit = 1 };

// Per-utterance T x V frame scores in log domain, the acoustic-model
// stand-in. Row-major.
struct PosteriorMatrix {
  int frames = 0;
  int vocab = 0;
  PosteriorKind kind = PosteriorKind::kLogPosterior;
  std::vector<float> values;

  double at(int t, int v) const {
    return values[static_cast<size_t>(t) * vocab + v];
  }
  void set(int t, int v, double x) {
    values[static_cast<size_t>(t) * vocab + v] = static_cast<float>(x);
  }

  // Row log-sum-exp must be within 1e-5 of zero for log-posteriors.
  void Validate() const;
  // Returns a log-posterior matrix; raw logits get a row log-softmax.
  PosteriorMatrix Normalized() const;
};

// Binary file format: magic "ASRP", u32 version=1, u32 T, u32 V, u8 kind,
// then T*V little-endian float32 row-major.
void SavePosterior(const PosteriorMatrix& m, const std::string& path);
PosteriorMatrix LoadPosterior(const std::string& path);

}  // namespace asrdec

#endif  // ASRDEC_POSTERIOR_H_
