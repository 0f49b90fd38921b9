#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "au2vec/ingest.hpp"

namespace au2vec {

struct SynthConfig {
  std::size_t n_states = 20;
  std::size_t n_videos = 200;
  std::size_t frames_per_video = 300;
  double fps = 5.0;
  double noise_sigma = 0.1;
  double transition_stay_prob = 0.99;
  std::uint64_t seed = 0;
};

void validate(const SynthConfig& config);

/// Label scale: occupancy of state 0 mapped onto [0, kSynthLabelMax].
inline constexpr double kSynthLabelMax = 24.0;

struct SynthData {
  FrameCorpus corpus;
  std::vector<AuVector> prototypes;
  /// Latent state per frame, per video.
  std::vector<std::vector<std::uint32_t>> state_paths;
  /// One label per video, aligned with corpus.sequences.
  std::vector<double> labels;

  std::map<std::string, double> label_map() const;
};

/// Corpus of HMM state paths over prototype expressions plus Gaussian noise.
/// Each video draws from its own seed derived from (seed, video index).
SynthData generate(const SynthConfig& config);

/// `video_id<TAB>frame<TAB>state` per frame.
std::string format_truth(const SynthData& data);

}  // namespace au2vec
