#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "au2vec/cooccur.hpp"
#include "au2vec/tokenize.hpp"

namespace au2vec {

struct GloveConfig {
  std::size_t dim = 100;
  double x_max = 100.0;
  double alpha = 0.75;
  double learning_rate = 0.05;
  std::size_t epochs = 50;
  std::uint64_t seed = 0;
  /// Used only when `deterministic` is false.
  unsigned workers = 1;
  /// Single-worker, bit-reproducible training.
  bool deterministic = true;
};

void validate(const GloveConfig& config);

/// (x / x_max)^alpha below x_max, 1 at and above it. Throws for x <= 0.
double weight_fn(double x, double x_max = 100.0, double alpha = 0.75);

/// Main vectors W, context vectors W~, their biases, and the AdaGrad
/// squared-gradient accumulators for each block. Matrices are row-major
/// vocab_size x dim.
struct EmbeddingModel {
  std::size_t vocab_size = 0;
  std::size_t dim = 0;
  std::vector<double> main, context, main_bias, context_bias;
  std::vector<double> main_sq, context_sq, main_bias_sq, context_bias_sq;

  EmbeddingModel() = default;
  EmbeddingModel(std::size_t vocab_size, std::size_t dim);

  std::span<double> main_row(TokenId t) { return {main.data() + t * dim, dim}; }
  std::span<const double> main_row(TokenId t) const { return {main.data() + t * dim, dim}; }
  std::span<double> context_row(TokenId t) { return {context.data() + t * dim, dim}; }
  std::span<const double> context_row(TokenId t) const { return {context.data() + t * dim, dim}; }

  /// W_i . W~_j + b_i + b~_j
  double score(TokenId i, TokenId j) const;

  /// Parameters only; accumulators are ignored.
  bool same_parameters(const EmbeddingModel& other) const;
};

/// Uniform in [-0.5/dim, 0.5/dim] for both vector blocks, zero biases.
EmbeddingModel init_model(std::size_t vocab_size, std::size_t dim, std::uint64_t seed);

/// One ordered training cell. An off-diagonal table cell yields (i, j) and
/// (j, i); a diagonal cell yields one.
struct DirectedCell {
  TokenId i = 0;
  TokenId j = 0;
  double x = 0.0;
};

std::vector<DirectedCell> directed_cells(const CooccurrenceTable& table);

/// Gradient blocks laid out like the model parameters.
struct Gradients {
  std::vector<double> main, context, main_bias, context_bias;
};

struct LossAndGrad {
  double loss = 0.0;
  Gradients grad;
};

/// Weighted least-squares loss sum_cells f(x) r^2 with
/// r = W_i . W~_j + b_i + b~_j - ln x, and its gradient summed over `cells`.
LossAndGrad loss_and_grad(const EmbeddingModel& model, std::span<const DirectedCell> cells,
                          double x_max = 100.0, double alpha = 0.75);

struct TrainResult {
  EmbeddingModel model;
  /// Mean weighted loss per epoch, measured during the pass.
  std::vector<double> epoch_loss;
};

/// AdaGrad over directed cells, visited in a freshly shuffled order every
/// epoch. Throws NumericError naming the epoch and cell on non-finite values.
TrainResult train(const CooccurrenceTable& table, const GloveConfig& config);
TrainResult train(const CooccurrenceTable& table, const Vocabulary& vocab, const GloveConfig& config);

enum class Combine { kSum, kMain };

/// Exported view of a model: one name and one vector per token.
struct EmbeddingTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> vectors;

  std::size_t index_of(std::string_view name) const;
};

EmbeddingTable make_embedding_table(const EmbeddingModel& model, const Vocabulary& vocab,
                                    Combine combine = Combine::kSum);

/// `<name> <v1> ... <vdim>` per line, values with 6 significant digits.
std::string format_embeddings(const EmbeddingTable& table);
EmbeddingTable parse_embeddings(std::string_view text);
void export_embeddings(const EmbeddingModel& model, const Vocabulary& vocab, const std::filesystem::path& path,
                       Combine combine = Combine::kSum);
EmbeddingTable read_embeddings(const std::filesystem::path& path);

struct Neighbor {
  std::size_t index = 0;
  std::string name;
  double similarity = 0.0;
};

double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Top-n by cosine similarity, query excluded, ties to the lower index.
std::vector<Neighbor> nearest_neighbors(const EmbeddingTable& table, std::string_view token, std::size_t n);

std::string encode_model(const EmbeddingModel& model);
EmbeddingModel decode_model(std::string_view bytes, const std::string& what = "model");
void write_model(const EmbeddingModel& model, const std::filesystem::path& path);
EmbeddingModel read_model(const std::filesystem::path& path);

}  // namespace au2vec
