#include "asrdec/posterior.h"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "asrdec/util.h"

namespace asrdec {

void PosteriorMatrix::Validate() const {
  if (frames < 0 || vocab <= 0 ||
      values.size() != static_cast<size_t>(frames) * vocab) {
    throw std::invalid_argument("posterior matrix shape mismatch");
  }
  for (float v : values) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("posterior matrix has non-finite entries");
    }
  }
  if (kind != PosteriorKind::kLogPosterior) return;
  for (int t = 0; t < frames; ++t) {
    double m = kLogZero;
    for (int v = 0; v < vocab; ++v) m = std::max(m, at(t, v));
    double s = 0.0;
    for (int v = 0; v < vocab; ++v) s += std::exp(at(t, v) - m);
    double lse = m + std::log(s);
    if (std::abs(lse) > 1e-5) {
      throw std::invalid_argument("posterior row " + std::to_string(t) +
                                  " not normalized (log-sum-exp " +
                                  std::to_string(lse) + ")");
    }
  }
}

PosteriorMatrix PosteriorMatrix::Normalized() const {
  if (kind == PosteriorKind::kLogPosterior) return *this;
  PosteriorMatrix out = *this;
  out.kind = PosteriorKind::kLogPosterior;
  for (int t = 0; t < frames; ++t) {
    double m = kLogZero;
    for (int v = 0; v < vocab; ++v) m = std::max(m, at(t, v));
    double s = 0.0;
    for (int v = 0; v < vocab; ++v) s += std::exp(at(t, v) - m);
    double lse = m + std::log(s);
    for (int v = 0; v < vocab; ++v) out.set(t, v, at(t, v) - lse);
  }
  return out;
}

namespace {
constexpr char kMagic[4] = {'A', 'S', 'R', 'P'};

void WriteU32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<char*>(b), 4);
}

uint32_t ReadU32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}
}  // namespace

void SavePosterior(const PosteriorMatrix& m, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.write(kMagic, 4);
  WriteU32(os, 1);
  WriteU32(os, static_cast<uint32_t>(m.frames));
  WriteU32(os, static_cast<uint32_t>(m.vocab));
  char kind = static_cast<char>(m.kind);
  os.write(&kind, 1);
  // float32 little-endian; this build targets little-endian hosts
  os.write(reinterpret_cast<const char*>(m.values.data()),
           static_cast<std::streamsize>(m.values.size() * sizeof(float)));
  if (!os) throw std::runtime_error("short write to " + path);
}

PosteriorMatrix LoadPosterior(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error(path + ": bad posterior magic");
  }
  uint32_t version = ReadU32(is);
  if (version != 1) {
    throw std::runtime_error(path + ": unsupported posterior version " +
                             std::to_string(version));
  }
  PosteriorMatrix m;
  m.frames = static_cast<int>(ReadU32(is));
  m.vocab = static_cast<int>(ReadU32(is));
  char kind = 0;
  is.read(&kind, 1);
  if (kind != 0 && kind != 1) {
    throw std::runtime_error(path + ": bad posterior kind byte");
  }
  m.kind = static_cast<PosteriorKind>(kind);
  if (m.frames < 0 || m.vocab <= 0) {
    throw std::runtime_error(path + ": bad posterior dimensions");
  }
  m.values.resize(static_cast<size_t>(m.frames) * m.vocab);
  is.read(reinterpret_cast<char*>(m.values.data()),
          static_cast<std::streamsize>(m.values.size() * sizeof(float)));
  if (!is) throw std::runtime_error(path + ": truncated posterior payload");
  return m;
}

}  // namespace asrdec
