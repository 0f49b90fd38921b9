#include "au2vec/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>

#include "au2vec/binio.hpp"
#include "au2vec/error.hpp"
#include "au2vec/parallel.hpp"

namespace au2vec {
namespace {

constexpr std::string_view kCodebookMagic = "AUKM";
constexpr std::uint32_t kCodebookVersion = 1;

struct PartialSums {
  std::vector<AuVector> sums;
  std::vector<std::size_t> counts;
  double distance_sum = 0.0;

  explicit PartialSums(std::size_t k) : sums(k, AuVector{}), counts(k, 0) {}

  void add(const PartialSums& o) {
    for (std::size_t c = 0; c < sums.size(); ++c) {
      for (std::size_t d = 0; d < kNumAus; ++d) sums[c][d] += o.sums[c][d];
      counts[c] += o.counts[c];
    }
    distance_sum += o.distance_sum;
  }
};

unsigned resolve(unsigned workers) { return workers ? workers : default_workers(); }

}  // namespace

double squared_distance(const AuVector& a, const AuVector& b) {
  double s = 0.0;
  for (std::size_t d = 0; d < kNumAus; ++d) {
    const double diff = a[d] - b[d];
    s += diff * diff;
  }
  return s;
}

Assignment assign(const AuVector& point, std::span<const AuVector> centroids) {
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d2 = squared_distance(point, centroids[c]);
    if (d2 < best_d2) {
      best_d2 = d2;
      best = c;
    }
  }
  return {best, std::sqrt(best_d2)};
}

std::vector<AuVector> kmeans_pp_init(std::span<const AuVector> points, std::size_t k,
                                     std::uint64_t seed) {
  if (k == 0) throw ArgumentError("k must be at least 1");
  {
    std::vector<AuVector> distinct(points.begin(), points.end());
    std::sort(distinct.begin(), distinct.end());
    const auto n_distinct =
        static_cast<std::size_t>(std::unique(distinct.begin(), distinct.end()) - distinct.begin());
    if (n_distinct < k) {
      throw ArgumentError("k-means++ needs at least k = " + std::to_string(k) +
                          " distinct points, found " + std::to_string(n_distinct));
    }
  }

  std::mt19937_64 rng(seed);
  const std::size_t n = points.size();
  std::vector<AuVector> centroids;
  centroids.reserve(k);
  centroids.push_back(points[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points[i], centroids[0]);

  while (centroids.size() < k) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    const double target = std::uniform_real_distribution<double>(0.0, total)(rng);
    std::size_t pick = n;
    double running = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      running += d2[i];
      if (d2[i] > 0.0 && running > target) {
        pick = i;
        break;
      }
    }
    if (pick == n) {
      // Rounding pushed the target past the running sum.
      for (std::size_t i = n; i-- > 0;) {
        if (d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    }
    centroids.push_back(points[pick]);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(points[i], centroids.back()));
    }
  }
  return centroids;
}

LloydStep lloyd_step(std::span<const AuVector> points, std::span<const AuVector> centroids,
                     unsigned workers, MergeOrder order) {
  const std::size_t k = centroids.size();
  if (k == 0) throw ArgumentError("lloyd_step needs at least one centroid");
  const std::size_t n = points.size();
  workers = resolve(workers);

  std::vector<double> point_d2(n);
  const std::size_t shards = std::max<std::size_t>(1, std::min<std::size_t>(workers, n));
  std::vector<PartialSums> partials;
  PartialSums total(k);
  std::mutex mu;
  if (order == MergeOrder::kShardOrder) partials.assign(shards, PartialSums(k));

  parallel_shards(n, workers, [&](std::size_t s, std::size_t begin, std::size_t end) {
    PartialSums local(k);
    for (std::size_t i = begin; i < end; ++i) {
      std::size_t best = 0;
      double best_d2 = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d2 = squared_distance(points[i], centroids[c]);
        if (d2 < best_d2) {
          best_d2 = d2;
          best = c;
        }
      }
      point_d2[i] = best_d2;
      local.distance_sum += std::sqrt(best_d2);
      ++local.counts[best];
      for (std::size_t d = 0; d < kNumAus; ++d) local.sums[best][d] += points[i][d];
    }
    if (order == MergeOrder::kShardOrder) {
      partials[s] = std::move(local);
    } else {
      std::lock_guard lock(mu);
      total.add(local);
    }
  });
  if (order == MergeOrder::kShardOrder) {
    for (const auto& p : partials) total.add(p);
  }

  LloydStep out;
  out.inertia = n ? total.distance_sum / static_cast<double>(n) : 0.0;
  out.centroids.assign(centroids.begin(), centroids.end());

  std::vector<std::size_t> farthest;
  std::size_t next_far = 0;
  for (std::size_t c = 0; c < k; ++c) {
    if (total.counts[c] > 0) {
      const double inv = 1.0 / static_cast<double>(total.counts[c]);
      for (std::size_t d = 0; d < kNumAus; ++d) out.centroids[c][d] = total.sums[c][d] * inv;
      continue;
    }
    if (n == 0) continue;
    if (farthest.empty()) {
      farthest.resize(n);
      std::iota(farthest.begin(), farthest.end(), std::size_t{0});
      std::stable_sort(farthest.begin(), farthest.end(),
                       [&](std::size_t a, std::size_t b) { return point_d2[a] > point_d2[b]; });
    }
    out.centroids[c] = points[farthest[next_far % n]];
    ++next_far;
  }
  return out;
}

double mean_distance(std::span<const AuVector> points, std::span<const AuVector> centroids,
                     unsigned workers) {
  if (points.empty()) return 0.0;
  workers = resolve(workers);
  const std::size_t shards = std::max<std::size_t>(1, std::min<std::size_t>(workers, points.size()));
  std::vector<double> sums(shards, 0.0);
  parallel_shards(points.size(), workers, [&](std::size_t s, std::size_t begin, std::size_t end) {
    double acc = 0.0;
    for (std::size_t i = begin; i < end; ++i) acc += assign(points[i], centroids).distance;
    sums[s] = acc;
  });
  return std::accumulate(sums.begin(), sums.end(), 0.0) / static_cast<double>(points.size());
}

Codebook fit_kmeans(std::span<const AuVector> points, std::size_t k, const KMeansOptions& options) {
  if (k == 0) throw ArgumentError("k must be at least 1");
  if (points.size() < k) {
    throw ArgumentError("k = " + std::to_string(k) + " exceeds the number of frames (" +
                        std::to_string(points.size()) + ")");
  }
  Codebook cb;
  cb.seed = options.seed;
  cb.centroids = kmeans_pp_init(points, k, options.seed);
  while (cb.iterations_run < options.max_iter) {
    auto step = lloyd_step(points, cb.centroids, options.workers, options.order);
    ++cb.iterations_run;
    double movement = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      movement = std::max(movement, squared_distance(cb.centroids[c], step.centroids[c]));
    }
    cb.centroids = std::move(step.centroids);
    if (std::sqrt(movement) < options.tol) break;
  }
  cb.inertia = mean_distance(points, cb.centroids, options.workers);
  return cb;
}

Codebook fit_kmeans(const FrameCorpus& corpus, std::size_t k, const KMeansOptions& options) {
  const auto points = corpus.pooled();
  return fit_kmeans(points, k, options);
}

ElbowCurve elbow_sweep(std::span<const AuVector> points, std::span<const std::size_t> ks,
                       const KMeansOptions& options) {
  for (std::size_t i = 1; i < ks.size(); ++i) {
    if (ks[i] <= ks[i - 1]) throw ArgumentError("elbow ks must be strictly increasing");
  }
  ElbowCurve curve;
  for (std::size_t k : ks) {
    const auto cb = fit_kmeans(points, k, options);
    ElbowPoint p{k, cb.inertia, cb.iterations_run, false};
    if (!curve.points.empty() && p.inertia > curve.points.back().inertia) p.non_monotone = true;
    curve.points.push_back(p);
  }
  return curve;
}

ElbowChoice select_elbow(const ElbowCurve& curve) {
  const auto& pts = curve.points;
  if (pts.size() < 3) throw ArgumentError("elbow selection needs at least 3 curve points");
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].k <= pts[i - 1].k || pts[i - 1].k == 0) {
      throw ArgumentError("elbow curve k values must be positive and strictly increasing");
    }
  }
  auto slope = [&](std::size_t i) {  // normalized drop between points i and i+1
    const double dlog = std::log(static_cast<double>(pts[i + 1].k)) - std::log(static_cast<double>(pts[i].k));
    return (pts[i].inertia - pts[i + 1].inertia) / dlog;
  };

  std::vector<double> scores;
  double scale = 0.0;
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    const double a = slope(i - 1), b = slope(i);
    scale = std::max({scale, std::abs(a), std::abs(b)});
    scores.push_back(a - b);
  }
  const double eps = 1e-9 * std::max(scale, 1e-300);

  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best] + eps) best = i;
  }
  std::size_t ties = 0;
  for (double s : scores) {
    if (std::abs(s - scores[best]) <= eps) ++ties;
  }
  return {pts[best + 1].k, scores[best], scores[best] <= eps || ties > 1};
}

std::string encode_codebook(const Codebook& codebook) {
  if (codebook.centroids.empty()) throw ArgumentError("codebook has no centroids");
  ByteWriter w;
  w.magic(kCodebookMagic);
  w.u32(kCodebookVersion);
  w.u32(static_cast<std::uint32_t>(codebook.k()));
  w.u32(static_cast<std::uint32_t>(kNumAus));
  w.u64(codebook.seed);
  w.f64(codebook.inertia);
  for (const auto& c : codebook.centroids) {
    for (double v : c) w.f64(v);
  }
  return std::move(w).bytes();
}

Codebook decode_codebook(std::string_view bytes, const std::string& what) {
  ByteReader r(bytes, what);
  r.expect_header(kCodebookMagic, kCodebookVersion);
  const std::uint32_t k = r.u32();
  const std::uint32_t dim = r.u32();
  if (dim != kNumAus) throw FormatError(what + ": codebook dimension " + std::to_string(dim) + " != 17");
  if (k == 0) throw FormatError(what + ": codebook with k = 0");
  Codebook cb;
  cb.seed = r.u64();
  cb.inertia = r.f64();
  r.require(k, 8 * kNumAus);
  cb.centroids.resize(k);
  for (auto& c : cb.centroids) {
    for (double& v : c) {
      v = r.f64();
      if (!std::isfinite(v)) throw FormatError(what + ": non-finite centroid value");
    }
  }
  r.expect_end();
  return cb;
}

void write_codebook(const Codebook& codebook, const std::filesystem::path& path) {
  write_file(path, encode_codebook(codebook));
}

Codebook read_codebook(const std::filesystem::path& path) {
  return decode_codebook(read_file(path), path.string());
}

}  // namespace au2vec
