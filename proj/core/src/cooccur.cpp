#include "au2vec/cooccur.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "au2vec/binio.hpp"
#include "au2vec/error.hpp"
#include "au2vec/parallel.hpp"

namespace au2vec {
namespace {

constexpr std::string_view kCoocMagic = "AUCO";
constexpr std::uint32_t kCoocVersion = 1;

}  // namespace

CooccurrenceTable::CooccurrenceTable(std::uint32_t vocab_size, std::uint32_t window, Weighting weighting)
    : vocab_size_(vocab_size), window_(window), weighting_(weighting) {}

std::uint64_t CooccurrenceTable::key(TokenId i, TokenId j) {
  if (i > j) std::swap(i, j);
  return (static_cast<std::uint64_t>(i) << 32) | j;
}

double CooccurrenceTable::get(TokenId i, TokenId j) const {
  const auto it = cells_.find(key(i, j));
  return it == cells_.end() ? 0.0 : it->second;
}

void CooccurrenceTable::add(TokenId i, TokenId j, double w) {
  if (i >= vocab_size_ || j >= vocab_size_) {
    throw ArgumentError("token " + std::to_string(std::max(i, j)) + " out of range for V = " +
                        std::to_string(vocab_size_));
  }
  if (!(w > 0.0) || !std::isfinite(w)) throw ArgumentError("co-occurrence weights must be finite and positive");
  cells_[key(i, j)] += w;
}

std::vector<Cell> CooccurrenceTable::sorted_cells() const {
  std::vector<std::pair<std::uint64_t, double>> kv(cells_.begin(), cells_.end());
  std::sort(kv.begin(), kv.end());
  std::vector<Cell> out;
  out.reserve(kv.size());
  for (const auto& [k, w] : kv) out.push_back({static_cast<TokenId>(k >> 32), static_cast<TokenId>(k), w});
  return out;
}

double CooccurrenceTable::total_weight() const {
  double s = 0.0;
  for (const auto& c : sorted_cells()) s += c.weight;
  return s;
}

bool CooccurrenceTable::operator==(const CooccurrenceTable& other) const {
  return same_shape(other) && cells_ == other.cells_;
}

void accumulate(const TokenSequence& seq, CooccurrenceTable& table) {
  const auto& t = seq.tokens;
  for (TokenId tok : t) {
    if (tok >= table.vocab_size()) {
      throw ArgumentError("token " + std::to_string(tok) + " in '" + seq.video_id +
                          "' out of range for V = " + std::to_string(table.vocab_size()));
    }
  }
  const std::size_t window = table.window();
  const bool uniform = table.weighting() == Weighting::kUniform;
  for (std::size_t p = 0; p < t.size(); ++p) {
    const std::size_t last = std::min(t.size() - 1, p + window);
    for (std::size_t q = p + 1; q <= last; ++q) {
      table.add(t[p], t[q], uniform ? 1.0 : 1.0 / static_cast<double>(q - p));
    }
  }
}

CooccurrenceTable merge(std::span<const CooccurrenceTable> tables, bool deterministic) {
  if (tables.empty()) return {};
  CooccurrenceTable out(tables[0].vocab_size(), tables[0].window(), tables[0].weighting());
  for (const auto& t : tables) {
    if (!t.same_shape(out)) throw ArgumentError("cannot merge tables with different V, window or weighting");
  }
  if (!deterministic) {
    for (const auto& t : tables) {
      for (const auto& c : t.sorted_cells()) out.add(c.i, c.j, c.weight);
    }
    return out;
  }
  std::map<std::pair<TokenId, TokenId>, std::vector<double>> parts;
  for (const auto& t : tables) {
    for (const auto& c : t.sorted_cells()) parts[{c.i, c.j}].push_back(c.weight);
  }
  for (auto& [ij, ws] : parts) {
    std::sort(ws.begin(), ws.end());
    double s = 0.0;
    for (double w : ws) s += w;
    out.add(ij.first, ij.second, s);
  }
  return out;
}

CooccurrenceTable build_cooccurrence(const TokenCorpus& corpus, std::uint32_t vocab_size, std::uint32_t window,
                                     Weighting weighting, unsigned workers) {
  workers = workers ? workers : default_workers();
  const std::size_t shards = std::max<std::size_t>(1, std::min<std::size_t>(workers, corpus.size()));
  std::vector<CooccurrenceTable> partial(shards, CooccurrenceTable(vocab_size, window, weighting));
  parallel_shards(corpus.size(), workers, [&](std::size_t s, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) accumulate(corpus[i], partial[s]);
  });
  if (partial.size() == 1) return std::move(partial[0]);
  return merge(partial, true);
}

std::string encode_cooccurrence(const CooccurrenceTable& table) {
  ByteWriter w;
  w.magic(kCoocMagic);
  w.u32(kCoocVersion);
  w.u32(table.vocab_size());
  w.u32(table.window());
  w.u8(static_cast<std::uint8_t>(table.weighting()));
  const auto cells = table.sorted_cells();
  w.u64(cells.size());
  for (const auto& c : cells) {
    w.u32(c.i);
    w.u32(c.j);
    w.f64(c.weight);
  }
  return std::move(w).bytes();
}

CooccurrenceTable decode_cooccurrence(std::string_view bytes, const std::string& what) {
  ByteReader r(bytes, what);
  r.expect_header(kCoocMagic, kCoocVersion);
  const std::uint32_t v = r.u32();
  const std::uint32_t window = r.u32();
  const std::uint8_t weighting = r.u8();
  if (weighting > 1) throw FormatError(what + ": unknown weighting code " + std::to_string(weighting));
  CooccurrenceTable table(v, window, static_cast<Weighting>(weighting));
  const std::uint64_t n = r.u64();
  r.require(n, 16);
  std::uint64_t prev = 0;
  for (std::uint64_t c = 0; c < n; ++c) {
    const TokenId i = r.u32();
    const TokenId j = r.u32();
    const double w = r.f64();
    const std::uint64_t k = (static_cast<std::uint64_t>(i) << 32) | j;
    if (i > j || j >= v || (c > 0 && k <= prev) || !(w > 0.0) || !std::isfinite(w)) {
      throw FormatError(what + ": invalid or unsorted cell at index " + std::to_string(c));
    }
    prev = k;
    table.add(i, j, w);
  }
  r.expect_end();
  return table;
}

void write_cooccurrence(const CooccurrenceTable& table, const std::filesystem::path& path) {
  write_file(path, encode_cooccurrence(table));
}

CooccurrenceTable read_cooccurrence(const std::filesystem::path& path) {
  return decode_cooccurrence(read_file(path), path.string());
}

}  // namespace au2vec
