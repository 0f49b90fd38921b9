#include <doctest.h>

#include "au2vec/error.hpp"
#include "au2vec/synth.hpp"
#include "oracles.hpp"

using namespace au2vec;

TEST_CASE("one state without noise gives identical frames and labels") {
  SynthConfig c;
  c.n_states = 1;
  c.noise_sigma = 0.0;
  c.n_videos = 5;
  c.frames_per_video = 20;
  const auto d = generate(c);
  const auto& first = d.corpus.sequences[0].frames[0].au;
  for (const auto& s : d.corpus.sequences) {
    for (const auto& f : s.frames) CHECK(f.au == first);
  }
  for (double l : d.labels) CHECK(l == kSynthLabelMax);
}

TEST_CASE("stay probability 1 keeps each video in its first state") {
  SynthConfig c;
  c.transition_stay_prob = 1.0;
  c.n_videos = 30;
  c.frames_per_video = 50;
  const auto d = generate(c);
  for (std::size_t v = 0; v < d.state_paths.size(); ++v) {
    const auto& p = d.state_paths[v];
    CHECK(std::all_of(p.begin(), p.end(), [&](auto s) { return s == p[0]; }));
    CHECK(d.labels[v] == (p[0] == 0 ? kSynthLabelMax : 0.0));
  }
}

TEST_CASE("default config: nearest prototype recovers the state") {
  SynthConfig c;
  c.seed = 7;
  const auto d = generate(c);
  std::size_t hit = 0, total = 0;
  for (std::size_t v = 0; v < d.corpus.sequences.size(); ++v) {
    const auto& frames = d.corpus.sequences[v].frames;
    for (std::size_t t = 0; t < frames.size(); ++t) {
      hit += oracle::nearest(frames[t].au, d.prototypes).first == d.state_paths[v][t];
      ++total;
    }
  }
  CHECK(total == 60000);
  CHECK(static_cast<double>(hit) >= 0.99 * static_cast<double>(total));
}

TEST_CASE("generated corpora are valid and seed-deterministic") {
  SynthConfig c;
  c.n_videos = 12;
  c.frames_per_video = 40;
  c.noise_sigma = 1.5;
  c.seed = 3;
  const auto a = generate(c);
  CHECK_NOTHROW(validate_corpus(a.corpus));
  for (const auto& s : a.corpus.sequences) {
    for (std::size_t t = 0; t < s.frames.size(); ++t) {
      CHECK(s.frames[t].timestamp == doctest::Approx(static_cast<double>(t) / c.fps));
      for (double v : s.frames[t].au) {
        CHECK(v >= 0.0);
        CHECK(v <= 5.0);
      }
    }
  }
  CHECK(encode_corpus(generate(c).corpus) == encode_corpus(a.corpus));
  c.seed = 4;
  CHECK(encode_corpus(generate(c).corpus) != encode_corpus(a.corpus));
  CHECK(format_truth(a).rfind("video_id\tframe\tstate\n", 0) == 0);
  CHECK(a.label_map().size() == 12);
}

TEST_CASE("invalid configs are rejected") {
  SynthConfig c;
  c.n_states = 0;
  CHECK_THROWS_AS(generate(c), ArgumentError);
  c = {};
  c.transition_stay_prob = 1.5;
  CHECK_THROWS_AS(generate(c), ArgumentError);
  c = {};
  c.noise_sigma = -1.0;
  CHECK_THROWS_AS(generate(c), ArgumentError);
}
