#include "au2vec/glove.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "au2vec/binio.hpp"
#include "au2vec/error.hpp"
#include "au2vec/parallel.hpp"

namespace au2vec {
namespace {

constexpr std::string_view kModelMagic = "AUGV";
constexpr std::uint32_t kModelVersion = 1;
constexpr double kAdaGradEps = 1e-8;

/// Parameter access for the training kernel. The shared variant goes through
/// relaxed atomic_ref so concurrent workers may overwrite each other's
/// updates without a data race.
template <bool Shared>
struct Access {
  static double load(double& v) {
    if constexpr (Shared) return std::atomic_ref<double>(v).load(std::memory_order_relaxed);
    else return v;
  }
  static void store(double& v, double x) {
    if constexpr (Shared) std::atomic_ref<double>(v).store(x, std::memory_order_relaxed);
    else v = x;
  }
};

template <bool Shared>
double update_cell(EmbeddingModel& m, const DirectedCell& cell, const GloveConfig& cfg,
                   std::vector<double>& wi_old, std::size_t epoch, std::size_t index) {
  using A = Access<Shared>;
  const std::size_t dim = m.dim;
  double* wi = m.main.data() + cell.i * dim;
  double* wj = m.context.data() + cell.j * dim;
  double* sqi = m.main_sq.data() + cell.i * dim;
  double* sqj = m.context_sq.data() + cell.j * dim;

  double r = A::load(m.main_bias[cell.i]) + A::load(m.context_bias[cell.j]) - std::log(cell.x);
  for (std::size_t d = 0; d < dim; ++d) {
    wi_old[d] = A::load(wi[d]);
    r += wi_old[d] * A::load(wj[d]);
  }
  if (!std::isfinite(r)) {
    throw NumericError("non-finite residual at epoch " + std::to_string(epoch) + ", cell " +
                       std::to_string(index) + " (" + std::to_string(cell.i) + ", " +
                       std::to_string(cell.j) + ")");
  }
  const double f = weight_fn(cell.x, cfg.x_max, cfg.alpha);
  const double g = 2.0 * f * r;
  const double lr = cfg.learning_rate;

  for (std::size_t d = 0; d < dim; ++d) {
    const double gi = g * A::load(wj[d]);
    const double gj = g * wi_old[d];
    const double si = A::load(sqi[d]) + gi * gi;
    const double sj = A::load(sqj[d]) + gj * gj;
    A::store(sqi[d], si);
    A::store(sqj[d], sj);
    A::store(wi[d], wi_old[d] - lr * gi / std::sqrt(si + kAdaGradEps));
    A::store(wj[d], A::load(wj[d]) - lr * gj / std::sqrt(sj + kAdaGradEps));
  }
  const double sbi = A::load(m.main_bias_sq[cell.i]) + g * g;
  const double sbj = A::load(m.context_bias_sq[cell.j]) + g * g;
  A::store(m.main_bias_sq[cell.i], sbi);
  A::store(m.context_bias_sq[cell.j], sbj);
  A::store(m.main_bias[cell.i], A::load(m.main_bias[cell.i]) - lr * g / std::sqrt(sbi + kAdaGradEps));
  A::store(m.context_bias[cell.j], A::load(m.context_bias[cell.j]) - lr * g / std::sqrt(sbj + kAdaGradEps));
  return f * r * r;
}

void check_finite(const EmbeddingModel& m, std::size_t epoch) {
  for (const auto* block : {&m.main, &m.context, &m.main_bias, &m.context_bias}) {
    for (double v : *block) {
      if (!std::isfinite(v)) throw NumericError("non-finite parameter after epoch " + std::to_string(epoch));
    }
  }
}

std::string format_g6(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.6g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

}  // namespace

void validate(const GloveConfig& c) {
  if (c.dim < 1) throw ArgumentError("embedding dim must be at least 1");
  if (!(c.x_max > 0.0)) throw ArgumentError("x_max must be positive");
  if (!(c.alpha > 0.0 && c.alpha <= 1.0)) throw ArgumentError("alpha must lie in (0, 1]");
  if (!(c.learning_rate > 0.0)) throw ArgumentError("learning rate must be positive");
}

double weight_fn(double x, double x_max, double alpha) {
  if (!(x > 0.0)) throw ArgumentError("weight_fn requires x > 0");
  return x < x_max ? std::pow(x / x_max, alpha) : 1.0;
}

EmbeddingModel::EmbeddingModel(std::size_t v, std::size_t d)
    : vocab_size(v),
      dim(d),
      main(v * d, 0.0),
      context(v * d, 0.0),
      main_bias(v, 0.0),
      context_bias(v, 0.0),
      main_sq(v * d, 0.0),
      context_sq(v * d, 0.0),
      main_bias_sq(v, 0.0),
      context_bias_sq(v, 0.0) {}

double EmbeddingModel::score(TokenId i, TokenId j) const {
  const auto wi = main_row(i);
  const auto wj = context_row(j);
  return std::inner_product(wi.begin(), wi.end(), wj.begin(), 0.0) + main_bias[i] + context_bias[j];
}

bool EmbeddingModel::same_parameters(const EmbeddingModel& o) const {
  return vocab_size == o.vocab_size && dim == o.dim && main == o.main && context == o.context &&
         main_bias == o.main_bias && context_bias == o.context_bias;
}

EmbeddingModel init_model(std::size_t vocab_size, std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw ArgumentError("embedding dim must be at least 1");
  EmbeddingModel m(vocab_size, dim);
  std::mt19937_64 rng(seed);
  const double half = 0.5 / static_cast<double>(dim);
  std::uniform_real_distribution<double> u(-half, half);
  for (double& v : m.main) v = u(rng);
  for (double& v : m.context) v = u(rng);
  return m;
}

std::vector<DirectedCell> directed_cells(const CooccurrenceTable& table) {
  std::vector<DirectedCell> out;
  out.reserve(2 * table.cell_count());
  for (const auto& c : table.sorted_cells()) {
    out.push_back({c.i, c.j, c.weight});
    if (c.i != c.j) out.push_back({c.j, c.i, c.weight});
  }
  return out;
}

LossAndGrad loss_and_grad(const EmbeddingModel& m, std::span<const DirectedCell> cells, double x_max,
                          double alpha) {
  LossAndGrad out;
  out.grad.main.assign(m.main.size(), 0.0);
  out.grad.context.assign(m.context.size(), 0.0);
  out.grad.main_bias.assign(m.vocab_size, 0.0);
  out.grad.context_bias.assign(m.vocab_size, 0.0);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto& cell = cells[c];
    if (cell.i >= m.vocab_size || cell.j >= m.vocab_size) throw ArgumentError("cell index out of range");
    const double r = m.score(cell.i, cell.j) - std::log(cell.x);
    if (!std::isfinite(r)) throw NumericError("non-finite residual at cell " + std::to_string(c));
    const double f = weight_fn(cell.x, x_max, alpha);
    out.loss += f * r * r;
    const double g = 2.0 * f * r;
    const auto wi = m.main_row(cell.i);
    const auto wj = m.context_row(cell.j);
    for (std::size_t d = 0; d < m.dim; ++d) {
      out.grad.main[cell.i * m.dim + d] += g * wj[d];
      out.grad.context[cell.j * m.dim + d] += g * wi[d];
    }
    out.grad.main_bias[cell.i] += g;
    out.grad.context_bias[cell.j] += g;
  }
  return out;
}

TrainResult train(const CooccurrenceTable& table, const GloveConfig& config) {
  validate(config);
  TrainResult out{init_model(table.vocab_size(), config.dim, config.seed), {}};
  auto cells = directed_cells(table);
  if (cells.empty()) return out;

  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  const unsigned workers =
      config.deterministic ? 1u : (config.workers ? config.workers : default_workers());
  const std::size_t shards = std::max<std::size_t>(1, std::min<std::size_t>(workers, cells.size()));

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(cells.begin(), cells.end(), rng);
    std::vector<double> loss(shards, 0.0);
    parallel_shards(cells.size(), workers, [&](std::size_t s, std::size_t begin, std::size_t end) {
      std::vector<double> scratch(config.dim);
      double acc = 0.0;
      for (std::size_t c = begin; c < end; ++c) {
        acc += shards == 1 ? update_cell<false>(out.model, cells[c], config, scratch, epoch, c)
                           : update_cell<true>(out.model, cells[c], config, scratch, epoch, c);
      }
      loss[s] = acc;
    });
    check_finite(out.model, epoch);
    out.epoch_loss.push_back(std::accumulate(loss.begin(), loss.end(), 0.0) /
                             static_cast<double>(cells.size()));
  }
  return out;
}

TrainResult train(const CooccurrenceTable& table, const Vocabulary& vocab, const GloveConfig& config) {
  if (table.vocab_size() != vocab.size()) {
    throw ArgumentError("co-occurrence table V = " + std::to_string(table.vocab_size()) +
                        " does not match vocabulary size " + std::to_string(vocab.size()));
  }
  return train(table, config);
}

std::size_t EmbeddingTable::index_of(std::string_view name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw LookupError("unknown token '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - names.begin());
}

EmbeddingTable make_embedding_table(const EmbeddingModel& model, const Vocabulary& vocab, Combine combine) {
  if (model.vocab_size != vocab.size()) throw ArgumentError("model and vocabulary sizes differ");
  EmbeddingTable t;
  for (TokenId i = 0; i < model.vocab_size; ++i) {
    t.names.push_back(vocab.name(i));
    const auto w = model.main_row(i);
    std::vector<double> v(w.begin(), w.end());
    if (combine == Combine::kSum) {
      const auto c = model.context_row(i);
      for (std::size_t d = 0; d < v.size(); ++d) v[d] += c[d];
    }
    t.vectors.push_back(std::move(v));
  }
  return t;
}

std::string format_embeddings(const EmbeddingTable& table) {
  std::string out;
  for (std::size_t i = 0; i < table.names.size(); ++i) {
    out += table.names[i];
    for (double v : table.vectors[i]) {
      out += ' ';
      out += format_g6(v);
    }
    out += '\n';
  }
  return out;
}

EmbeddingTable parse_embeddings(std::string_view text) {
  EmbeddingTable t;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::size_t s = 0;
    while (s < line.size()) {
      auto sp = line.find(' ', s);
      if (sp == std::string_view::npos) sp = line.size();
      if (sp > s) fields.push_back(line.substr(s, sp - s));
      s = sp + 1;
    }
    if (fields.size() < 2) throw FormatError("embedding line " + std::to_string(line_no) + " has no values");
    std::vector<double> v;
    for (std::size_t f = 1; f < fields.size(); ++f) {
      double x = 0.0;
      const auto* end = fields[f].data() + fields[f].size();
      const auto [ptr, ec] = std::from_chars(fields[f].data(), end, x);
      if (ec != std::errc() || ptr != end) {
        throw FormatError("bad embedding value on line " + std::to_string(line_no));
      }
      v.push_back(x);
    }
    if (!t.vectors.empty() && v.size() != t.vectors.front().size()) {
      throw FormatError("inconsistent embedding dimension on line " + std::to_string(line_no));
    }
    t.names.emplace_back(fields[0]);
    t.vectors.push_back(std::move(v));
  }
  return t;
}

void export_embeddings(const EmbeddingModel& model, const Vocabulary& vocab, const std::filesystem::path& path,
                       Combine combine) {
  write_file(path, format_embeddings(make_embedding_table(model, vocab, combine)));
}

EmbeddingTable read_embeddings(const std::filesystem::path& path) {
  try {
    return parse_embeddings(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    dot += a[d] * b[d];
    na += a[d] * a[d];
    nb += b[d] * b[d];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<Neighbor> nearest_neighbors(const EmbeddingTable& table, std::string_view token, std::size_t n) {
  const std::size_t q = table.index_of(token);
  if (n >= table.names.size()) {
    throw ArgumentError("n = " + std::to_string(n) + " must be smaller than V = " +
                        std::to_string(table.names.size()));
  }
  std::vector<Neighbor> all;
  for (std::size_t i = 0; i < table.names.size(); ++i) {
    if (i == q) continue;
    all.push_back({i, table.names[i], cosine_similarity(table.vectors[q], table.vectors[i])});
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const Neighbor& a, const Neighbor& b) { return a.similarity > b.similarity; });
  all.resize(n);
  return all;
}

std::string encode_model(const EmbeddingModel& m) {
  ByteWriter w;
  w.magic(kModelMagic);
  w.u32(kModelVersion);
  w.u32(static_cast<std::uint32_t>(m.vocab_size));
  w.u32(static_cast<std::uint32_t>(m.dim));
  for (const auto* block : {&m.main, &m.context, &m.main_bias, &m.context_bias}) {
    for (double v : *block) w.f64(v);
  }
  return std::move(w).bytes();
}

EmbeddingModel decode_model(std::string_view bytes, const std::string& what) {
  ByteReader r(bytes, what);
  r.expect_header(kModelMagic, kModelVersion);
  const std::uint32_t v = r.u32();
  const std::uint32_t dim = r.u32();
  if (dim == 0) throw FormatError(what + ": model dim is 0");
  r.require(static_cast<std::uint64_t>(v) * (2 * dim + 2), 8);
  EmbeddingModel m(v, dim);
  for (auto* block : {&m.main, &m.context, &m.main_bias, &m.context_bias}) {
    for (double& x : *block) x = r.f64();
  }
  r.expect_end();
  return m;
}

void write_model(const EmbeddingModel& model, const std::filesystem::path& path) {
  write_file(path, encode_model(model));
}

EmbeddingModel read_model(const std::filesystem::path& path) {
  return decode_model(read_file(path), path.string());
}

}  // namespace au2vec
