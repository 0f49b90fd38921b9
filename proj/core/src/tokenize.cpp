#include "au2vec/tokenize.hpp"

#include <charconv>

#include "au2vec/binio.hpp"
#include "au2vec/error.hpp"
#include "au2vec/parallel.hpp"

namespace au2vec {
namespace {

constexpr std::string_view kVocabMagic = "AUVB";
constexpr std::string_view kTokensMagic = "AUTK";
constexpr std::uint32_t kVocabVersion = 1;
constexpr std::uint32_t kTokensVersion = 1;

constexpr std::int64_t kSpecialCluster[kNumSpecialTokens] = {-1, -2, -3};
constexpr std::string_view kSpecialName[kNumSpecialTokens] = {"<START>", "<END>", "<UNK>"};

}  // namespace

Vocabulary::Vocabulary(std::vector<VocabEntry> entries, std::uint32_t min_count, double dist_threshold)
    : entries_(std::move(entries)), min_count_(min_count), dist_threshold_(dist_threshold) {
  if (!(dist_threshold_ >= 0.0)) throw ArgumentError("dist_threshold must be non-negative");
  if (entries_.size() < kNumSpecialTokens) throw ArgumentError("vocabulary is missing special tokens");
  std::int64_t prev_cluster = -1;
  for (std::size_t t = 0; t < entries_.size(); ++t) {
    const auto& e = entries_[t];
    if (e.token != t) throw ArgumentError("vocabulary token ids are not contiguous");
    if (t < kNumSpecialTokens) {
      if (e.cluster != kSpecialCluster[t]) throw ArgumentError("special token has wrong cluster tag");
      continue;
    }
    if (e.cluster <= prev_cluster) throw ArgumentError("vocabulary clusters not in ascending order");
    if (e.count < min_count_) {
      throw ArgumentError("cluster " + std::to_string(e.cluster) + " retained below min_count");
    }
    prev_cluster = e.cluster;
  }
  cluster_to_token_.assign(static_cast<std::size_t>(prev_cluster + 1), -1);
  for (std::size_t t = kNumSpecialTokens; t < entries_.size(); ++t) {
    cluster_to_token_[static_cast<std::size_t>(entries_[t].cluster)] = static_cast<std::int64_t>(t);
  }
}

std::optional<TokenId> Vocabulary::token_for_cluster(std::size_t cluster) const {
  if (cluster >= cluster_to_token_.size() || cluster_to_token_[cluster] < 0) return std::nullopt;
  return static_cast<TokenId>(cluster_to_token_[cluster]);
}

std::string Vocabulary::name(TokenId token) const {
  if (token >= entries_.size()) throw LookupError("token id " + std::to_string(token) + " out of range");
  if (token < kNumSpecialTokens) return std::string(kSpecialName[token]);
  return "c" + std::to_string(entries_[token].cluster);
}

TokenId Vocabulary::token_for_name(std::string_view name) const {
  for (TokenId t = 0; t < kNumSpecialTokens; ++t) {
    if (name == kSpecialName[t]) return t;
  }
  if (name.size() > 1 && name[0] == 'c') {
    std::size_t cluster = 0;
    const auto* end = name.data() + name.size();
    const auto [ptr, ec] = std::from_chars(name.data() + 1, end, cluster);
    if (ec == std::errc() && ptr == end) {
      if (auto t = token_for_cluster(cluster)) return *t;
    }
  }
  throw LookupError("unknown token '" + std::string(name) + "'");
}

std::vector<std::uint64_t> count_cluster_frequencies(const FrameCorpus& corpus, const Codebook& codebook,
                                                     unsigned workers) {
  const auto points = corpus.pooled();
  workers = workers ? workers : default_workers();
  const std::size_t shards = std::max<std::size_t>(1, std::min<std::size_t>(workers, points.size()));
  std::vector<std::vector<std::uint64_t>> partial(shards, std::vector<std::uint64_t>(codebook.k(), 0));
  parallel_shards(points.size(), workers, [&](std::size_t s, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) ++partial[s][assign(points[i], codebook).cluster];
  });
  std::vector<std::uint64_t> counts(codebook.k(), 0);
  for (const auto& p : partial) {
    for (std::size_t c = 0; c < counts.size(); ++c) counts[c] += p[c];
  }
  return counts;
}

Vocabulary build_vocabulary(std::span<const std::uint64_t> counts, std::uint32_t min_count,
                            double dist_threshold) {
  std::vector<VocabEntry> entries;
  std::uint64_t dropped = 0;
  for (TokenId t = 0; t < kNumSpecialTokens; ++t) entries.push_back({t, kSpecialCluster[t], 0});
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] >= min_count) {
      entries.push_back({static_cast<TokenId>(entries.size()), static_cast<std::int64_t>(c), counts[c]});
    } else {
      dropped += counts[c];
    }
  }
  entries[kUnkToken].count = dropped;
  return Vocabulary(std::move(entries), min_count, dist_threshold);
}

TokenSequence tokenize_sequence(const AuSequence& seq, const Codebook& codebook, const Vocabulary& vocab) {
  if (seq.frames.empty()) throw ArgumentError("cannot tokenize empty sequence '" + seq.video_id + "'");
  TokenSequence out{seq.video_id, {}};
  out.tokens.reserve(seq.frames.size() + 2);
  out.tokens.push_back(kStartToken);
  for (const auto& frame : seq.frames) {
    const auto [cluster, distance] = assign(frame.au, codebook);
    const auto token = vocab.token_for_cluster(cluster);
    out.tokens.push_back(token && distance <= vocab.dist_threshold() ? *token : kUnkToken);
  }
  out.tokens.push_back(kEndToken);
  return out;
}

TokenCorpus tokenize_corpus(const FrameCorpus& corpus, const Codebook& codebook, const Vocabulary& vocab,
                            unsigned workers, TokenizeSummary* summary) {
  std::vector<const AuSequence*> nonempty;
  for (const auto& s : corpus.sequences) {
    if (!s.frames.empty()) nonempty.push_back(&s);
  }
  TokenCorpus out(nonempty.size());
  parallel_shards(nonempty.size(), workers ? workers : default_workers(),
                  [&](std::size_t, std::size_t begin, std::size_t end) {
                    for (std::size_t i = begin; i < end; ++i) {
                      out[i] = tokenize_sequence(*nonempty[i], codebook, vocab);
                    }
                  });
  if (summary) {
    *summary = {};
    summary->sequences = out.size();
    summary->skipped_empty = corpus.sequences.size() - out.size();
    for (const auto& seq : out) {
      summary->frames += seq.tokens.size() - 2;
      for (TokenId t : seq.tokens) summary->unk_frames += t == kUnkToken;
    }
  }
  return out;
}

std::string encode_vocabulary(const Vocabulary& vocab) {
  ByteWriter w;
  w.magic(kVocabMagic);
  w.u32(kVocabVersion);
  w.u32(static_cast<std::uint32_t>(vocab.size()));
  w.u32(vocab.min_count());
  w.f64(vocab.dist_threshold());
  for (const auto& e : vocab.entries()) {
    w.u32(e.token);
    w.i64(e.cluster);
    w.u64(e.count);
  }
  return std::move(w).bytes();
}

Vocabulary decode_vocabulary(std::string_view bytes, const std::string& what) {
  ByteReader r(bytes, what);
  r.expect_header(kVocabMagic, kVocabVersion);
  const std::uint32_t v = r.u32();
  const std::uint32_t min_count = r.u32();
  const double threshold = r.f64();
  r.require(v, 4 + 8 + 8);
  std::vector<VocabEntry> entries(v);
  for (auto& e : entries) {
    e.token = r.u32();
    e.cluster = r.i64();
    e.count = r.u64();
  }
  r.expect_end();
  try {
    return Vocabulary(std::move(entries), min_count, threshold);
  } catch (const ArgumentError& e) {
    throw FormatError(what + ": " + e.what());
  }
}

void write_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path) {
  write_file(path, encode_vocabulary(vocab));
}

Vocabulary read_vocabulary(const std::filesystem::path& path) {
  return decode_vocabulary(read_file(path), path.string());
}

std::string encode_tokens(const TokenCorpus& tokens) {
  ByteWriter w;
  w.magic(kTokensMagic);
  w.u32(kTokensVersion);
  w.u64(tokens.size());
  for (const auto& seq : tokens) {
    w.str(seq.video_id);
    w.u64(seq.tokens.size());
    for (TokenId t : seq.tokens) w.u32(t);
  }
  return std::move(w).bytes();
}

TokenCorpus decode_tokens(std::string_view bytes, const std::string& what) {
  ByteReader r(bytes, what);
  r.expect_header(kTokensMagic, kTokensVersion);
  const std::uint64_t n = r.u64();
  r.require(n, 4 + 8);
  TokenCorpus out(n);
  for (auto& seq : out) {
    seq.video_id = r.str();
    const std::uint64_t len = r.u64();
    r.require(len, 4);
    seq.tokens.resize(len);
    for (TokenId& t : seq.tokens) t = r.u32();
  }
  r.expect_end();
  return out;
}

void write_tokens(const TokenCorpus& tokens, const std::filesystem::path& path) {
  write_file(path, encode_tokens(tokens));
}

TokenCorpus read_tokens(const std::filesystem::path& path) {
  return decode_tokens(read_file(path), path.string());
}

}  // namespace au2vec
