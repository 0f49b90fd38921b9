#include <doctest.h>

#include <cmath>

#include "au2vec/error.hpp"
#include "au2vec/features.hpp"
#include "generators.hpp"

using namespace au2vec;

namespace {

AuSequence channel_seq(const std::vector<double>& values, std::size_t au = 0) {
  AuSequence s{"v", 5.0, {}};
  for (std::size_t t = 0; t < values.size(); ++t) {
    AuFrame f{static_cast<double>(t) / 5.0, 0.99, {}};
    f.au[au] = values[t];
    s.frames.push_back(f);
  }
  return s;
}

std::vector<double> dyn(const FeatureVector& f, std::size_t au) {
  return {f.values.begin() + 5 * au, f.values.begin() + 5 * au + 5};
}

}  // namespace

TEST_CASE("static_features") {
  SUBCASE("constant channel") {
    const auto f = static_features(channel_seq({2, 2, 2, 2}, 4));
    CHECK(f.values.size() == kStaticFeatureCount);
    CHECK(f.values[4] == 2.0);
    CHECK(f.values[17 + 4] == 0.0);
    CHECK(f.values[34 + 4] == 0.0);
  }
  SUBCASE("ramp") {
    const auto f = static_features(channel_seq({0, 1, 2, 3}));
    CHECK(f.values[0] == 1.5);
    CHECK(f.values[17] == 1.0);
    CHECK(f.values[34] == doctest::Approx(std::sqrt(1.25)).epsilon(1e-15));
  }
  SUBCASE("all zero") {
    for (double v : static_features(channel_seq({0, 0, 0})).values) CHECK(v == 0.0);
  }
  SUBCASE("too short") { CHECK_THROWS_AS(static_features(channel_seq({1})), ArgumentError); }
  SUBCASE("reversal flips only the derivative mean") {
    gen::Rng rng(1);
    for (int trial = 0; trial < 20; ++trial) {
      auto s = gen::sequence(rng, "r", gen::index(rng, 2, 40));
      auto r = s;
      std::reverse(r.frames.begin(), r.frames.end());
      const auto a = static_features(s).values, b = static_features(r).values;
      for (std::size_t k = 0; k < kNumAus; ++k) {
        CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-12));
        CHECK(a[17 + k] == doctest::Approx(-b[17 + k]).epsilon(1e-12).scale(1e-12));
        CHECK(a[34 + k] == doctest::Approx(b[34 + k]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("tron_dynamic_features") {
  SUBCASE("all zero") {
    const auto f = tron_dynamic_features(channel_seq(std::vector<double>(10, 0.0)));
    CHECK(f.values.size() == kDynamicFeatureCount);
    for (double v : f.values) CHECK(v == 0.0);
  }
  SUBCASE("alternating 0 and 5 with two levels") {
    std::vector<double> v;
    for (int t = 0; t < 20; ++t) v.push_back(t % 2 ? 5.0 : 0.0);
    CHECK(dyn(tron_dynamic_features(channel_seq(v), 2), 0) == std::vector<double>{0.5, 5.0, 1.0, 1.0, 0.0});
  }
  SUBCASE("constant active channel") {
    const auto f = tron_dynamic_features(channel_seq(std::vector<double>(12, 4.0), 3));
    CHECK(dyn(f, 3) == std::vector<double>{1.0, 4.0, 12.0, 0.0, 0.0});
  }
  SUBCASE("fast changes skip a level") {
    std::vector<double> v;
    for (int t = 0; t < 12; ++t) v.push_back(t % 3 == 0 ? 0.0 : (t % 3 == 1 ? 2.0 : 4.0));
    const auto d = dyn(tron_dynamic_features(channel_seq(v), 3), 0);
    CHECK(d[3] == 1.0);
    CHECK(d[4] == doctest::Approx(3.0 / 11.0));
  }
  SUBCASE("ratios stay in range on random input") {
    gen::Rng rng(2);
    for (int trial = 0; trial < 30; ++trial) {
      const auto s = gen::sequence(rng, "r", gen::index(rng, 2, 60));
      const auto f = tron_dynamic_features(s, gen::index(rng, 1, 6));
      for (std::size_t a = 0; a < kNumAus; ++a) {
        const auto d = dyn(f, a);
        for (double x : d) CHECK(std::isfinite(x));
        CHECK(d[0] >= 0.0);
        CHECK(d[0] <= 1.0);
        CHECK(d[3] <= 1.0);
        CHECK(d[4] >= 0.0);
        CHECK(d[4] <= d[3]);
      }
    }
  }
  SUBCASE("too short") { CHECK_THROWS_AS(tron_dynamic_features(channel_seq({3})), ArgumentError); }
}

TEST_CASE("quantize_channel anchors the inactive level at zero") {
  const std::vector<double> v{0.0, 0.1, 2.0, 2.1, 4.0, 4.2};
  const auto q = quantize_channel(v, 3);
  REQUIRE(q.centers.size() == 3);
  CHECK(q.centers[0] == 0.0);
  CHECK(q.levels == std::vector<std::size_t>{0, 0, 1, 1, 2, 2});
}

TEST_CASE("pooled_embedding_features") {
  EmbeddingModel m(5, 2);
  m.main = {9, 9, 9, 9, 1, 2, 3, 4, -3, -4};
  m.context = {9, 9, 9, 9, 0, 0, 0, 0, 0, 0};
  SUBCASE("identical interior tokens") {
    const auto f = pooled_embedding_features({"v", {0, 3, 3, 3, 1}}, m);
    CHECK(f.values == std::vector<double>{3, 4});
  }
  SUBCASE("opposite vectors cancel") {
    const auto f = pooled_embedding_features({"v", {0, 3, 4, 1}}, m);
    CHECK(f.values == std::vector<double>{0, 0});
  }
  SUBCASE("matches a scalar loop") {
    gen::Rng rng(3);
    EmbeddingModel r(12, 7);
    for (double& x : r.main) x = gen::uniform(rng, -2, 2);
    for (double& x : r.context) x = gen::uniform(rng, -2, 2);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<TokenId> toks{kStartToken};
      for (std::size_t i = 0, n = gen::index(rng, 1, 30); i < n; ++i) toks.push_back(static_cast<TokenId>(gen::index(rng, 2, 11)));
      toks.push_back(kEndToken);
      const auto f = pooled_embedding_features({"v", toks}, r);
      for (std::size_t d = 0; d < 7; ++d) {
        double s = 0.0;
        for (std::size_t i = 1; i + 1 < toks.size(); ++i) s += r.main[toks[i] * 7 + d] + r.context[toks[i] * 7 + d];
        CHECK(std::abs(f.values[d] - s / static_cast<double>(toks.size() - 2)) <= 1e-12);
      }
    }
  }
  SUBCASE("empty interior") { CHECK_THROWS_AS(pooled_embedding_features({"v", {0, 1}}, m), ArgumentError); }
}

TEST_CASE("feature names and table I/O") {
  CHECK(feature_names(FeatureKind::kStatic).front() == "AU01_mean");
  CHECK(feature_names(FeatureKind::kStatic).back() == "AU45_std");
  CHECK(feature_names(FeatureKind::kDynamic).front() == "AU01_act_ratio");
  CHECK(feature_names(FeatureKind::kDynamic).size() == kDynamicFeatureCount);
  CHECK(feature_names(FeatureKind::kPooledEmbedding, 3) == std::vector<std::string>{"emb_0", "emb_1", "emb_2"});
  CHECK(parse_feature_kind("pooled") == FeatureKind::kPooledEmbedding);
  CHECK_THROWS_AS(parse_feature_kind("lstm"), ArgumentError);

  gen::Rng rng(4);
  FeatureTable t{feature_names(FeatureKind::kStatic), {}};
  for (int i = 0; i < 3; ++i) t.rows.push_back(static_features(gen::sequence(rng, "vid" + std::to_string(i), 10)));
  const auto text = format_feature_table(t);
  CHECK(text.rfind("video_id\tAU01_mean\t", 0) == 0);
  const auto back = parse_feature_table(text);
  CHECK(back.columns == t.columns);
  REQUIRE(back.rows.size() == 3);
  CHECK(back.rows[1].video_id == "vid1");
  CHECK(back.rows[1].kind == FeatureKind::kStatic);
  CHECK(back.rows[1].values == t.rows[1].values);
  CHECK_THROWS_AS(parse_feature_table("video_id\tAU01_mean\nx\tnope\n"), FormatError);
}
