#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "au2vec/ingest.hpp"

namespace au2vec {

/// k centroids in AU space. `inertia` is the MEAN (unsquared) Euclidean
/// distance of each training point to its nearest centroid.
struct Codebook {
  std::vector<AuVector> centroids;
  std::uint64_t seed = 0;
  double inertia = 0.0;
  std::size_t iterations_run = 0;

  std::size_t k() const { return centroids.size(); }
};

struct Assignment {
  std::size_t cluster = 0;
  double distance = 0.0;
};

double squared_distance(const AuVector& a, const AuVector& b);

/// Nearest centroid by Euclidean distance; ties go to the lowest index.
Assignment assign(const AuVector& point, std::span<const AuVector> centroids);
inline Assignment assign(const AuVector& point, const Codebook& codebook) {
  return assign(point, codebook.centroids);
}

/// k-means++ D^2 seeding. Throws ArgumentError when there are fewer than k
/// distinct points.
std::vector<AuVector> kmeans_pp_init(std::span<const AuVector> points, std::size_t k,
                                     std::uint64_t seed);

enum class MergeOrder {
  kShardOrder,  // partial sums reduced in shard index order; reproducible
  kCompletion,  // reduced as shards finish; fastest, order may vary
};

struct LloydStep {
  std::vector<AuVector> centroids;
  /// Mean distance to the INPUT centroids.
  double inertia = 0.0;
};

/// One assignment + update pass. Empty clusters are re-seeded with the points
/// farthest from their assigned centroid.
LloydStep lloyd_step(std::span<const AuVector> points, std::span<const AuVector> centroids,
                     unsigned workers = 1, MergeOrder order = MergeOrder::kShardOrder);

/// Mean distance from each point to its nearest centroid.
double mean_distance(std::span<const AuVector> points, std::span<const AuVector> centroids,
                     unsigned workers = 1);

struct KMeansOptions {
  std::uint64_t seed = 0;
  std::size_t max_iter = 300;
  double tol = 1e-6;
  unsigned workers = 1;
  MergeOrder order = MergeOrder::kShardOrder;
};

/// k-means++ followed by Lloyd iterations until the largest centroid
/// movement drops below tol or max_iter steps have run.
Codebook fit_kmeans(std::span<const AuVector> points, std::size_t k, const KMeansOptions& options);
Codebook fit_kmeans(const FrameCorpus& corpus, std::size_t k, const KMeansOptions& options);

struct ElbowPoint {
  std::size_t k = 0;
  double inertia = 0.0;
  std::size_t iterations = 0;
  /// Inertia rose relative to the previous (smaller) k.
  bool non_monotone = false;
};

struct ElbowCurve {
  std::vector<ElbowPoint> points;
};

ElbowCurve elbow_sweep(std::span<const AuVector> points, std::span<const std::size_t> ks,
                       const KMeansOptions& options);

struct ElbowChoice {
  std::size_t k = 0;
  double score = 0.0;
  /// No interior point has a positive normalized second difference, or the
  /// maximum is shared by several points.
  bool weak_knee = false;
};

/// Picks the interior k with the largest second difference of inertia, each
/// first difference normalized by the step in ln(k). Ties go to the smaller k.
ElbowChoice select_elbow(const ElbowCurve& curve);

std::string encode_codebook(const Codebook& codebook);
Codebook decode_codebook(std::string_view bytes, const std::string& what = "codebook");
void write_codebook(const Codebook& codebook, const std::filesystem::path& path);
Codebook read_codebook(const std::filesystem::path& path);

}  // namespace au2vec
