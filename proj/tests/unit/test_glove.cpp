#include <doctest.h>

#include <cmath>

#include "au2vec/error.hpp"
#include "au2vec/glove.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace au2vec;

namespace {

EmbeddingModel random_model(gen::Rng& rng, std::size_t vocab, std::size_t dim, double scale = 1.0) {
  EmbeddingModel m(vocab, dim);
  for (auto* block : {&m.main, &m.context, &m.main_bias, &m.context_bias}) {
    for (double& v : *block) v = gen::uniform(rng, -scale, scale);
  }
  return m;
}

std::vector<DirectedCell> random_cells(gen::Rng& rng, std::uint32_t vocab, std::size_t n) {
  std::vector<DirectedCell> cells;
  for (std::size_t c = 0; c < n; ++c) {
    cells.push_back({static_cast<TokenId>(gen::index(rng, 0, vocab - 1)), static_cast<TokenId>(gen::index(rng, 0, vocab - 1)),
                     gen::uniform(rng, 0.1, 150.0)});
  }
  return cells;
}

double planted_correlation(const gen::Planted& p, const EmbeddingModel& m) {
  std::vector<double> learned, target;
  for (const auto& c : directed_cells(p.table)) {
    learned.push_back(m.score(c.i, c.j));
    target.push_back(std::log(c.x));
  }
  return oracle::pearson(learned, target);
}

Vocabulary specials_plus(std::size_t clusters) {
  const std::vector<std::uint64_t> counts(clusters, 1);
  return build_vocabulary(counts, 0);
}

}  // namespace

TEST_CASE("weight_fn") {
  CHECK(weight_fn(100.0, 100.0) == 1.0);
  CHECK(weight_fn(200.0, 100.0) == 1.0);
  CHECK(weight_fn(50.0, 100.0, 0.75) == doctest::Approx(std::pow(0.5, 0.75)).epsilon(1e-15));
  CHECK(weight_fn(50.0, 100.0, 0.75) == doctest::Approx(0.594603).epsilon(1e-6));
  CHECK_THROWS_AS(weight_fn(0.0), ArgumentError);
  CHECK_THROWS_AS(weight_fn(-1.0), ArgumentError);
  gen::Rng rng(1);
  for (int i = 0; i < 500; ++i) {
    const double a = gen::uniform(rng, 1e-6, 300.0), b = gen::uniform(rng, 1e-6, 300.0);
    const double alpha = gen::uniform(rng, 0.01, 1.0);
    const double fa = weight_fn(a, 100.0, alpha), fb = weight_fn(b, 100.0, alpha);
    CHECK(fa > 0.0);
    CHECK(fa <= 1.0);
    if (a <= b) CHECK(fa <= fb);
  }
}

TEST_CASE("loss_and_grad") {
  gen::Rng rng(2);
  SUBCASE("planted exact model has zero loss and gradient") {
    auto m = random_model(rng, 4, 3);
    std::vector<DirectedCell> cells;
    for (TokenId i = 0; i < 4; ++i) {
      for (TokenId j = 0; j < 4; ++j) cells.push_back({i, j, std::exp(m.score(i, j))});
    }
    const auto lg = loss_and_grad(m, cells);
    CHECK(lg.loss < 1e-24);
    for (double g : lg.grad.main) CHECK(std::abs(g) < 1e-12);
    for (double g : lg.grad.context_bias) CHECK(std::abs(g) < 1e-12);
  }
  SUBCASE("single cell, dim 2, hand-set parameters") {
    EmbeddingModel m(2, 2);
    m.main = {0.3, -0.2, 0.1, 0.4};
    m.context = {-0.5, 0.25, 0.2, 0.7};
    m.main_bias = {0.1, -0.3};
    m.context_bias = {0.05, 0.2};
    const std::vector<DirectedCell> cells{{0, 1, 7.5}};
    CHECK(oracle::max_gradient_error(m, cells, 100.0, 0.75) < 1e-5);
    const auto lg = loss_and_grad(m, cells);
    const double r = (0.3 * 0.2 - 0.2 * 0.7) + 0.1 + 0.2 - std::log(7.5);
    const double f = std::pow(0.075, 0.75);
    CHECK(lg.loss == doctest::Approx(f * r * r).epsilon(1e-14));
    CHECK(lg.grad.main_bias[0] == doctest::Approx(2 * f * r).epsilon(1e-14));
    CHECK(lg.grad.main[0] == doctest::Approx(2 * f * r * 0.2).epsilon(1e-14));
    CHECK(lg.grad.context[3] == doctest::Approx(2 * f * r * -0.2).epsilon(1e-14));
    CHECK(lg.grad.main_bias[1] == 0.0);
  }
  SUBCASE("doubling f doubles loss and gradients") {
    const auto m = random_model(rng, 3, 2);
    const std::vector<DirectedCell> cells{{0, 1, 25.0}, {2, 2, 25.0}};
    const auto half = loss_and_grad(m, cells, 100.0, 1.0);  // f = 0.25
    const auto full = loss_and_grad(m, cells, 100.0, 0.5);  // f = 0.5
    CHECK(full.loss == doctest::Approx(2 * half.loss).epsilon(1e-14));
    for (std::size_t p = 0; p < full.grad.main.size(); ++p) {
      CHECK(full.grad.main[p] == doctest::Approx(2 * half.grad.main[p]).epsilon(1e-14));
    }
  }
  SUBCASE("random small models pass the finite-difference check") {
    for (int trial = 0; trial < 30; ++trial) {
      const std::uint32_t vocab = static_cast<std::uint32_t>(gen::index(rng, 1, 10));
      const auto m = random_model(rng, vocab, gen::index(rng, 1, 5));
      const auto cells = random_cells(rng, vocab, gen::index(rng, 1, 20));
      CHECK(oracle::max_gradient_error(m, cells, 100.0, 0.75) < 1e-5);
    }
  }
  SUBCASE("swapping main and context leaves the loss unchanged on a symmetric table") {
    CooccurrenceTable t(6, 10, Weighting::kInverseDistance);
    for (int c = 0; c < 12; ++c) {
      t.add(static_cast<TokenId>(gen::index(rng, 0, 5)), static_cast<TokenId>(gen::index(rng, 0, 5)),
            gen::uniform(rng, 0.5, 20.0));
    }
    const auto cells = directed_cells(t);
    auto m = random_model(rng, 6, 3);
    const double before = loss_and_grad(m, cells).loss;
    std::swap(m.main, m.context);
    std::swap(m.main_bias, m.context_bias);
    CHECK(loss_and_grad(m, cells).loss == doctest::Approx(before).epsilon(1e-13));
  }
}

TEST_CASE("directed_cells expands off-diagonal cells both ways") {
  CooccurrenceTable t(4, 10, Weighting::kInverseDistance);
  t.add(0, 2, 1.5);
  t.add(3, 3, 2.0);
  const auto cells = directed_cells(t);
  CHECK(cells.size() == 3);
}

TEST_CASE("init_model") {
  const auto m = init_model(7, 4, 3);
  for (double v : m.main) CHECK(std::abs(v) <= 0.5 / 4);
  for (double v : m.context) CHECK(std::abs(v) <= 0.5 / 4);
  for (double v : m.main_bias) CHECK(v == 0.0);
  CHECK(m.same_parameters(init_model(7, 4, 3)));
  CHECK_FALSE(m.same_parameters(init_model(7, 4, 4)));
}

TEST_CASE("train") {
  gen::Rng rng(3);
  SUBCASE("empty table keeps the initialization") {
    GloveConfig cfg;
    cfg.dim = 4;
    cfg.seed = 5;
    const auto r = train(CooccurrenceTable(6, 10, Weighting::kInverseDistance), cfg);
    CHECK(r.epoch_loss.empty());
    CHECK(r.model.same_parameters(init_model(6, 4, 5)));
  }
  SUBCASE("deterministic mode is bit-reproducible and loss falls") {
    const auto p = gen::planted_table(rng, 20, 4);
    GloveConfig cfg;
    cfg.dim = 8;
    cfg.epochs = 5;
    cfg.seed = 11;
    const auto a = train(p.table, cfg);
    const auto b = train(p.table, cfg);
    CHECK(encode_model(a.model) == encode_model(b.model));
    CHECK(a.epoch_loss == b.epoch_loss);
    CHECK(a.epoch_loss[4] < a.epoch_loss[0]);
  }
  SUBCASE("planted vectors are recovered") {
    const auto p = gen::planted_table(rng, 30, 5);
    GloveConfig cfg;
    cfg.dim = 5;
    cfg.epochs = 200;
    cfg.seed = 1;
    CHECK(planted_correlation(p, train(p.table, cfg).model) >= 0.99);
    cfg.deterministic = false;
    cfg.workers = 3;
    CHECK(planted_correlation(p, train(p.table, cfg).model) >= 0.99);
  }
  SUBCASE("divergence is reported") {
    const auto p = gen::planted_table(rng, 10, 3);
    GloveConfig cfg;
    cfg.dim = 3;
    cfg.learning_rate = 1e300;
    CHECK_THROWS_AS(train(p.table, cfg), NumericError);
  }
  SUBCASE("size mismatch and bad config") {
    const auto p = gen::planted_table(rng, 10, 3);
    CHECK_THROWS_AS(train(p.table, specials_plus(3), GloveConfig{}), ArgumentError);
    GloveConfig cfg;
    cfg.dim = 0;
    CHECK_THROWS_AS(train(p.table, cfg), ArgumentError);
    cfg.dim = 2;
    cfg.alpha = 1.5;
    CHECK_THROWS_AS(train(p.table, cfg), ArgumentError);
  }
}

TEST_CASE("embedding export and neighbors") {
  gen::Rng rng(4);
  const auto vocab = specials_plus(0);
  SUBCASE("specials only") {
    auto m = random_model(rng, 3, 2);
    const auto text = format_embeddings(make_embedding_table(m, vocab));
    const auto back = parse_embeddings(text);
    REQUIRE(back.names.size() == 3);
    CHECK(back.names[2] == "<UNK>");
    for (const auto& v : back.vectors) CHECK(v.size() == 2);
  }
  SUBCASE("main equals sum when the context block is zero") {
    auto m = random_model(rng, 3, 4);
    std::fill(m.context.begin(), m.context.end(), 0.0);
    CHECK(format_embeddings(make_embedding_table(m, vocab, Combine::kMain)) ==
          format_embeddings(make_embedding_table(m, vocab, Combine::kSum)));
  }
  SUBCASE("re-parsed values agree to 6 significant digits") {
    const auto v = specials_plus(5);
    const auto m = random_model(rng, 8, 6, 3.0);
    const auto table = make_embedding_table(m, v);
    const auto back = parse_embeddings(format_embeddings(table));
    CHECK(back.names == table.names);
    for (std::size_t i = 0; i < table.vectors.size(); ++i) {
      for (std::size_t d = 0; d < 6; ++d) {
        CHECK(std::abs(back.vectors[i][d] - table.vectors[i][d]) <= 5e-6 * std::abs(table.vectors[i][d]));
        CHECK(table.vectors[i][d] == doctest::Approx(m.main[i * 6 + d] + m.context[i * 6 + d]).epsilon(1e-15));
      }
    }
  }
  SUBCASE("duplicates and orthogonal vectors") {
    EmbeddingTable t{{"a", "b", "c", "d"}, {{1, 2}, {3, 0}, {1, 2}, {-2, 1}}};
    const auto nn = nearest_neighbors(t, "a", 3);
    CHECK(nn[0].name == "c");
    CHECK(nn[0].similarity == doctest::Approx(1.0));
    CHECK(nn[2].name == "d");
    CHECK(nn[2].similarity == doctest::Approx(0.0).scale(1e-15));
    CHECK_THROWS_AS(nearest_neighbors(t, "zz", 1), LookupError);
    CHECK_THROWS_AS(nearest_neighbors(t, "a", 4), ArgumentError);
    EmbeddingTable tie{{"q", "x", "y"}, {{1, 0}, {0, 1}, {0, 2}}};
    const auto tn = nearest_neighbors(tie, "q", 2);
    CHECK(tn[0].name == "x");
  }
  SUBCASE("planted states rank their own tokens first") {
    const auto p = gen::planted_table(rng, 50, 10, 5);
    GloveConfig cfg;
    cfg.dim = 10;
    cfg.epochs = 200;
    cfg.seed = 2;
    const auto m = train(p.table, cfg).model;
    const auto v = specials_plus(47);
    const auto table = make_embedding_table(m, v);
    int hits = 0;
    for (TokenId q = 0; q < 50; ++q) {
      const auto nn = nearest_neighbors(table, table.names[q], 1);
      hits += p.state[nn[0].index] == p.state[q];
    }
    CHECK(hits >= 45);
  }
}

TEST_CASE("model store") {
  gen::Rng rng(5);
  const auto m = random_model(rng, 6, 3);
  const auto bytes = encode_model(m);
  const auto back = decode_model(bytes);
  CHECK(back.same_parameters(m));
  CHECK(encode_model(back) == bytes);
  CHECK(bytes.substr(0, 4) == "AUGV");
  CHECK_THROWS_AS(decode_model("AUGX" + bytes.substr(4)), FormatError);
  CHECK_THROWS_AS(decode_model(bytes.substr(0, bytes.size() - 8)), FormatError);
}
