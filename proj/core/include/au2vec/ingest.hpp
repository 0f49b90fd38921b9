#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace au2vec {

inline constexpr std::size_t kNumAus = 17;

/// OpenFace intensity columns, in the fixed order used everywhere in this
/// library (feature layouts, centroid rows, binary stores).
inline constexpr std::array<std::string_view, kNumAus> kAuNames = {
    "AU01", "AU02", "AU04", "AU05", "AU06", "AU07", "AU09", "AU10", "AU12",
    "AU14", "AU15", "AU17", "AU20", "AU23", "AU25", "AU26", "AU45"};

inline constexpr double kMinIntensity = 0.0;
inline constexpr double kMaxIntensity = 5.0;

/// One point in AU intensity space.
using AuVector = std::array<double, kNumAus>;

struct AuFrame {
  double timestamp = 0.0;   // seconds
  double confidence = 0.0;  // [0, 1]
  AuVector au{};

  bool operator==(const AuFrame&) const = default;
};

/// One video's frames, timestamps strictly increasing.
struct AuSequence {
  std::string video_id;
  double source_fps = 0.0;
  std::vector<AuFrame> frames;

  bool operator==(const AuSequence&) const = default;
};

struct FrameCorpus {
  std::vector<AuSequence> sequences;

  std::size_t total_frames() const;
  /// Every frame of every sequence, in corpus order.
  std::vector<AuVector> pooled() const;

  bool operator==(const FrameCorpus&) const = default;
};

struct ParseReport {
  std::size_t rows = 0;           // data rows seen
  std::size_t dropped_failed = 0; // rows with success == 0
  std::size_t clamped = 0;        // AU cells clamped into [0, 5]
};

struct ParseOptions {
  /// Frame rate of the source video. When unset it is estimated from the
  /// median timestamp step (falling back to 30 fps, OpenFace's default, for
  /// fewer than two frames).
  std::optional<double> source_fps;
};

/// Parses OpenFace per-frame CSV output. Header names are whitespace-trimmed
/// and matched case-sensitively; rows with success == 0 are dropped.
AuSequence parse_openface_csv(std::string_view bytes, std::string video_id,
                              const ParseOptions& options = {}, ParseReport* report = nullptr);

/// Keeps frames with confidence >= min_confidence.
AuSequence filter_confidence(const AuSequence& seq, double min_confidence = 0.90);

/// Index decimation with stride round(source_fps / target_fps).
AuSequence downsample(const AuSequence& seq, double target_fps = 5.0);

/// Throws FormatError when a corpus invariant is broken (empty or duplicate
/// video id, non-positive fps, non-increasing timestamps, out-of-range values).
void validate_corpus(const FrameCorpus& corpus);

std::string encode_corpus(const FrameCorpus& corpus);
FrameCorpus decode_corpus(std::string_view bytes, const std::string& what = "corpus");
void write_corpus(const FrameCorpus& corpus, const std::filesystem::path& path);
FrameCorpus read_corpus(const std::filesystem::path& path);

struct IngestOptions {
  double min_confidence = 0.90;
  double target_fps = 5.0;
  ParseOptions parse;
  unsigned workers = 1;
};

struct IngestSummary {
  std::size_t files = 0;
  std::size_t rows = 0;
  std::size_t clamped = 0;
  std::size_t kept_frames = 0;
};

/// Parses one CSV file or every `*.csv` in a directory (sorted by name; the
/// video id is the file stem), then filters and downsamples each sequence.
FrameCorpus ingest_path(const std::filesystem::path& input, const IngestOptions& options,
                        IngestSummary* summary = nullptr);

}  // namespace au2vec
