#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "au2vec/cluster.hpp"
#include "au2vec/ingest.hpp"

namespace au2vec {

using TokenId = std::uint32_t;

inline constexpr TokenId kStartToken = 0;
inline constexpr TokenId kEndToken = 1;
inline constexpr TokenId kUnkToken = 2;
inline constexpr TokenId kNumSpecialTokens = 3;

inline constexpr std::uint32_t kDefaultMinCount = 500;
inline constexpr double kDefaultDistThreshold = 1.75;

struct VocabEntry {
  TokenId token = 0;
  /// Source cluster, or -1 / -2 / -3 for START / END / UNK.
  std::int64_t cluster = 0;
  std::uint64_t count = 0;

  bool operator==(const VocabEntry&) const = default;
};

/// Token alphabet: the three specials followed by every cluster whose raw
/// assignment count reached min_count, in ascending cluster order.
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<VocabEntry> entries, std::uint32_t min_count, double dist_threshold);

  std::size_t size() const { return entries_.size(); }
  const std::vector<VocabEntry>& entries() const { return entries_; }
  std::uint32_t min_count() const { return min_count_; }
  double dist_threshold() const { return dist_threshold_; }

  /// Token for a retained cluster; nullopt when the cluster was dropped.
  std::optional<TokenId> token_for_cluster(std::size_t cluster) const;

  /// `<START>`, `<END>`, `<UNK>` or `c<cluster_id>`.
  std::string name(TokenId token) const;
  /// Inverse of name(); throws LookupError for unknown names.
  TokenId token_for_name(std::string_view name) const;

  bool operator==(const Vocabulary&) const = default;

 private:
  std::vector<VocabEntry> entries_;
  std::vector<std::int64_t> cluster_to_token_;  // -1 when dropped
  std::uint32_t min_count_ = kDefaultMinCount;
  double dist_threshold_ = kDefaultDistThreshold;
};

struct TokenSequence {
  std::string video_id;
  std::vector<TokenId> tokens;

  bool operator==(const TokenSequence&) const = default;
};

using TokenCorpus = std::vector<TokenSequence>;

/// Raw nearest-centroid counts over every frame of the corpus.
std::vector<std::uint64_t> count_cluster_frequencies(const FrameCorpus& corpus,
                                                     const Codebook& codebook, unsigned workers = 1);

Vocabulary build_vocabulary(std::span<const std::uint64_t> counts,
                            std::uint32_t min_count = kDefaultMinCount,
                            double dist_threshold = kDefaultDistThreshold);

/// START, one token per frame, END. A frame becomes UNK when its cluster was
/// dropped from the vocabulary or it lies farther than dist_threshold from
/// its centroid.
TokenSequence tokenize_sequence(const AuSequence& seq, const Codebook& codebook, const Vocabulary& vocab);

struct TokenizeSummary {
  std::size_t sequences = 0;
  std::size_t skipped_empty = 0;
  std::size_t frames = 0;
  std::size_t unk_frames = 0;
};

/// Tokenizes every nonempty sequence; empty sequences are skipped.
TokenCorpus tokenize_corpus(const FrameCorpus& corpus, const Codebook& codebook, const Vocabulary& vocab,
                            unsigned workers = 1, TokenizeSummary* summary = nullptr);

std::string encode_vocabulary(const Vocabulary& vocab);
Vocabulary decode_vocabulary(std::string_view bytes, const std::string& what = "vocabulary");
void write_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path);
Vocabulary read_vocabulary(const std::filesystem::path& path);

std::string encode_tokens(const TokenCorpus& tokens);
TokenCorpus decode_tokens(std::string_view bytes, const std::string& what = "tokens");
void write_tokens(const TokenCorpus& tokens, const std::filesystem::path& path);
TokenCorpus read_tokens(const std::filesystem::path& path);

}  // namespace au2vec
