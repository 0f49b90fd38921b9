#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "au2vec/tokenize.hpp"

namespace au2vec {

enum class Weighting : std::uint8_t {
  kInverseDistance = 0,  // 1 / (q - p)
  kUniform = 1,
};

inline constexpr std::uint32_t kDefaultWindow = 10;

struct Cell {
  TokenId i = 0;
  TokenId j = 0;
  double weight = 0.0;

  bool operator==(const Cell&) const = default;
};

/// Sparse symmetric co-occurrence weights. Each unordered pair is stored
/// once under (min, max); lookups mirror.
class CooccurrenceTable {
 public:
  CooccurrenceTable() = default;
  CooccurrenceTable(std::uint32_t vocab_size, std::uint32_t window, Weighting weighting);

  std::uint32_t vocab_size() const { return vocab_size_; }
  std::uint32_t window() const { return window_; }
  Weighting weighting() const { return weighting_; }

  std::size_t cell_count() const { return cells_.size(); }
  bool empty() const { return cells_.empty(); }

  /// 0 when the pair never co-occurred.
  double get(TokenId i, TokenId j) const;
  /// Adds w > 0 to the unordered pair {i, j}.
  void add(TokenId i, TokenId j, double w);

  /// Cells with i <= j, sorted by (i, j).
  std::vector<Cell> sorted_cells() const;

  /// Sum of all stored weights, added in (i, j) order.
  double total_weight() const;

  bool same_shape(const CooccurrenceTable& other) const {
    return vocab_size_ == other.vocab_size_ && window_ == other.window_ && weighting_ == other.weighting_;
  }

  /// Cell-for-cell equality (exact).
  bool operator==(const CooccurrenceTable& other) const;

 private:
  static std::uint64_t key(TokenId i, TokenId j);

  std::uint32_t vocab_size_ = 0;
  std::uint32_t window_ = kDefaultWindow;
  Weighting weighting_ = Weighting::kInverseDistance;
  std::unordered_map<std::uint64_t, double> cells_;
};

/// Adds every in-window position pair (p, q), 1 <= q - p <= window, of one
/// sequence. Windows never cross sequence boundaries.
void accumulate(const TokenSequence& seq, CooccurrenceTable& table);

/// Cell-wise sum. In deterministic mode each cell's contributions are sorted
/// before summing, so the result does not depend on table order.
CooccurrenceTable merge(std::span<const CooccurrenceTable> tables, bool deterministic = true);

/// Shards sequences across workers into private tables, then merges them.
CooccurrenceTable build_cooccurrence(const TokenCorpus& corpus, std::uint32_t vocab_size,
                                     std::uint32_t window = kDefaultWindow,
                                     Weighting weighting = Weighting::kInverseDistance, unsigned workers = 1);

std::string encode_cooccurrence(const CooccurrenceTable& table);
CooccurrenceTable decode_cooccurrence(std::string_view bytes, const std::string& what = "cooccurrence");
void write_cooccurrence(const CooccurrenceTable& table, const std::filesystem::path& path);
CooccurrenceTable read_cooccurrence(const std::filesystem::path& path);

}  // namespace au2vec
