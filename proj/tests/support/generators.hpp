#pragma once

// Hand-rolled random generators for property tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "au2vec/cooccur.hpp"
#include "au2vec/ingest.hpp"
#include "au2vec/tokenize.hpp"

namespace gen {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline std::size_t index(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline au2vec::AuVector au_point(Rng& rng) {
  au2vec::AuVector v{};
  for (double& x : v) x = uniform(rng, 0.0, 5.0);
  return v;
}

inline std::vector<au2vec::AuVector> au_points(Rng& rng, std::size_t n) {
  std::vector<au2vec::AuVector> pts(n);
  for (auto& p : pts) p = au_point(rng);
  return pts;
}

/// Points drawn around `blobs` well-separated centers.
inline std::vector<au2vec::AuVector> blob_points(Rng& rng, const std::vector<au2vec::AuVector>& centers,
                                                 std::size_t per_blob, double sigma) {
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<au2vec::AuVector> pts;
  for (const auto& c : centers) {
    for (std::size_t i = 0; i < per_blob; ++i) {
      au2vec::AuVector p = c;
      for (double& x : p) x += noise(rng);
      pts.push_back(p);
    }
  }
  return pts;
}

inline au2vec::AuSequence sequence(Rng& rng, std::string id, std::size_t frames, double fps = 5.0) {
  au2vec::AuSequence s;
  s.video_id = std::move(id);
  s.source_fps = fps;
  for (std::size_t t = 0; t < frames; ++t) {
    au2vec::AuFrame f;
    f.timestamp = static_cast<double>(t) / fps;
    f.confidence = uniform(rng, 0.0, 1.0);
    f.au = au_point(rng);
    s.frames.push_back(f);
  }
  return s;
}

inline au2vec::FrameCorpus corpus(Rng& rng, std::size_t sequences, std::size_t max_frames) {
  au2vec::FrameCorpus c;
  for (std::size_t i = 0; i < sequences; ++i) {
    c.sequences.push_back(sequence(rng, "v" + std::to_string(i), index(rng, 0, max_frames)));
  }
  return c;
}

inline std::vector<std::uint32_t> tokens(Rng& rng, std::size_t len, std::uint32_t vocab) {
  std::vector<std::uint32_t> t(len);
  for (auto& x : t) x = static_cast<std::uint32_t>(index(rng, 0, vocab - 1));
  return t;
}

struct Planted {
  au2vec::CooccurrenceTable table;
  std::vector<std::size_t> state;  // latent group per token
};

/// Dense symmetric table X_ij = exp(u_i . u_j + a_i + a_j) from planted
/// vectors. With `states` > 0 the u_i cluster around one center per state.
inline Planted planted_table(Rng& rng, std::uint32_t vocab, std::size_t dim, std::size_t states = 0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> centers(std::max<std::size_t>(states, 1), std::vector<double>(dim, 0.0));
  if (states > 0) {
    for (auto& c : centers) {
      for (double& x : c) x = 0.6 * normal(rng);
    }
  }
  Planted out{au2vec::CooccurrenceTable(vocab, 10, au2vec::Weighting::kInverseDistance), {}};
  std::vector<std::vector<double>> u(vocab, std::vector<double>(dim));
  std::vector<double> a(vocab);
  for (std::uint32_t i = 0; i < vocab; ++i) {
    const std::size_t s = states > 0 ? i % states : 0;
    out.state.push_back(s);
    for (std::size_t d = 0; d < dim; ++d) u[i][d] = centers[s][d] + (states > 0 ? 0.1 : 0.35) * normal(rng);
    a[i] = uniform(rng, -0.75, 0.75);
  }
  for (std::uint32_t i = 0; i < vocab; ++i) {
    for (std::uint32_t j = i; j < vocab; ++j) {
      double dot = 0.0;
      for (std::size_t d = 0; d < dim; ++d) dot += u[i][d] * u[j][d];
      out.table.add(i, j, std::exp(dot + a[i] + a[j]));
    }
  }
  return out;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("au2vec_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// OpenFace-style CSV with the columns the parser needs plus a few it ignores.
inline std::string openface_csv(const std::vector<au2vec::AuFrame>& frames, const std::vector<int>& success = {},
                                bool leading_spaces = true) {
  const std::string sep = leading_spaces ? ", " : ",";
  std::string out = "frame" + sep + "face_id" + sep + "timestamp" + sep + "confidence" + sep + "success";
  for (auto name : au2vec::kAuNames) out += sep + std::string(name) + "_r";
  out += sep + "AU01_c\n";
  for (std::size_t r = 0; r < frames.size(); ++r) {
    const auto& f = frames[r];
    out += std::to_string(r + 1) + sep + "0" + sep + std::to_string(f.timestamp) + sep + std::to_string(f.confidence) +
           sep + std::to_string(success.empty() ? 1 : success[r]);
    for (double v : f.au) out += sep + std::to_string(v);
    out += sep + "1\n";
  }
  return out;
}

}  // namespace gen
