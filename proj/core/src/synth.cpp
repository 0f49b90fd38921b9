#include "au2vec/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

#include "au2vec/error.hpp"

namespace au2vec {
namespace {

constexpr double kPrototypeLow = 0.5;
constexpr double kPrototypeHigh = 4.5;
constexpr double kSynthConfidence = 0.98;

std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

void validate(const SynthConfig& c) {
  if (c.n_states < 1) throw ArgumentError("n_states must be at least 1");
  if (!(c.transition_stay_prob >= 0.0 && c.transition_stay_prob <= 1.0)) {
    throw ArgumentError("transition_stay_prob must lie in [0, 1]");
  }
  if (!(c.noise_sigma >= 0.0)) throw ArgumentError("noise_sigma must be non-negative");
  if (!(c.fps > 0.0)) throw ArgumentError("fps must be positive");
}

std::map<std::string, double> SynthData::label_map() const {
  std::map<std::string, double> out;
  for (std::size_t v = 0; v < corpus.sequences.size(); ++v) out[corpus.sequences[v].video_id] = labels[v];
  return out;
}

SynthData generate(const SynthConfig& config) {
  validate(config);
  SynthData data;

  auto proto_rng = derived_rng(config.seed, 0);
  std::uniform_real_distribution<double> proto_dist(kPrototypeLow, kPrototypeHigh);
  data.prototypes.resize(config.n_states);
  for (auto& p : data.prototypes) {
    for (double& v : p) v = proto_dist(proto_rng);
  }

  const int id_width = std::max(4, static_cast<int>(std::to_string(config.n_videos).size()));
  data.corpus.sequences.resize(config.n_videos);
  data.state_paths.resize(config.n_videos);
  data.labels.resize(config.n_videos);
  for (std::size_t v = 0; v < config.n_videos; ++v) {
    auto rng = derived_rng(config.seed, v + 1);
    std::uniform_int_distribution<std::uint32_t> any_state(0, static_cast<std::uint32_t>(config.n_states - 1));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);

    char id[32];
    std::snprintf(id, sizeof id, "vid%0*zu", id_width, v);
    auto& seq = data.corpus.sequences[v];
    seq.video_id = id;
    seq.source_fps = config.fps;
    seq.frames.resize(config.frames_per_video);
    auto& path = data.state_paths[v];
    path.resize(config.frames_per_video);

    std::uint32_t state = any_state(rng);
    std::size_t in_zero = 0;
    for (std::size_t t = 0; t < config.frames_per_video; ++t) {
      if (t > 0 && unit(rng) >= config.transition_stay_prob) state = any_state(rng);
      path[t] = state;
      in_zero += state == 0;
      auto& f = seq.frames[t];
      f.timestamp = static_cast<double>(t) / config.fps;
      f.confidence = kSynthConfidence;
      for (std::size_t a = 0; a < kNumAus; ++a) {
        const double x = data.prototypes[state][a] + config.noise_sigma * noise(rng);
        f.au[a] = std::clamp(x, kMinIntensity, kMaxIntensity);
      }
    }
    data.labels[v] = config.frames_per_video
                         ? kSynthLabelMax * static_cast<double>(in_zero) / static_cast<double>(config.frames_per_video)
                         : 0.0;
  }
  return data;
}

std::string format_truth(const SynthData& data) {
  std::string out = "video_id\tframe\tstate\n";
  for (std::size_t v = 0; v < data.state_paths.size(); ++v) {
    const auto& id = data.corpus.sequences[v].video_id;
    for (std::size_t t = 0; t < data.state_paths[v].size(); ++t) {
      out += id + '\t' + std::to_string(t) + '\t' + std::to_string(data.state_paths[v][t]) + '\n';
    }
  }
  return out;
}

}  // namespace au2vec
