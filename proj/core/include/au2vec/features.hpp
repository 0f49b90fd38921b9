#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "au2vec/glove.hpp"
#include "au2vec/ingest.hpp"
#include "au2vec/tokenize.hpp"

namespace au2vec {

enum class FeatureKind { kStatic, kDynamic, kPooledEmbedding };

std::string_view to_string(FeatureKind kind);
FeatureKind parse_feature_kind(std::string_view name);

struct FeatureVector {
  std::string video_id;
  FeatureKind kind = FeatureKind::kStatic;
  std::vector<double> values;
};

inline constexpr std::size_t kStaticFeatureCount = 3 * kNumAus;
inline constexpr std::size_t kDynamicFeatureCount = 5 * kNumAus;
inline constexpr std::size_t kDefaultActivityLevels = 4;

/// Per AU: mean, mean forward difference, population std. Laid out as all
/// 17 means, then all derivative means, then all stds.
FeatureVector static_features(const AuSequence& seq);

/// One channel quantized into activity levels. Level 0 is the inactive level,
/// anchored at intensity 0; the remaining centers are fit by 1-D k-means.
struct Quantization {
  std::vector<double> centers;       // ascending, centers[0] == 0
  std::vector<std::size_t> levels;   // per frame
};

Quantization quantize_channel(std::span<const double> signal, std::size_t levels);

/// Per AU: activation ratio, activation level, mean active run length,
/// change ratio, fast change ratio (level jump >= 2). Laid out AU by AU.
FeatureVector tron_dynamic_features(const AuSequence& seq, std::size_t levels = kDefaultActivityLevels);

/// Mean combined (W + W~) vector over all tokens except START and END.
FeatureVector pooled_embedding_features(const TokenSequence& tokens, const EmbeddingModel& model);

/// Column names matching a FeatureVector of the given kind.
std::vector<std::string> feature_names(FeatureKind kind, std::size_t dim = 0);

struct FeatureTable {
  std::vector<std::string> columns;
  std::vector<FeatureVector> rows;
};

/// TSV: header `video_id` + column names, one row per video.
std::string format_feature_table(const FeatureTable& table);
FeatureTable parse_feature_table(std::string_view text, const std::string& what = "features");
void write_feature_table(const FeatureTable& table, const std::filesystem::path& path);
FeatureTable read_feature_table(const std::filesystem::path& path);

}  // namespace au2vec
