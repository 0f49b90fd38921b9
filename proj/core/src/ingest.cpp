#include "au2vec/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "au2vec/binio.hpp"
#include "au2vec/error.hpp"
#include "au2vec/parallel.hpp"

namespace au2vec {
namespace {

constexpr std::string_view kCorpusMagic = "AUFC";
constexpr std::uint32_t kCorpusVersion = 1;
constexpr double kFallbackFps = 30.0;

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_cell(std::string_view cell, std::size_t row, std::string_view column) {
  double v = 0.0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (cell.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw FormatError("unparseable numeric cell '" + std::string(cell) + "' in column " +
                      std::string(column) + " at data row " + std::to_string(row));
  }
  return v;
}

double estimate_fps(const std::vector<AuFrame>& frames) {
  if (frames.size() < 2) return kFallbackFps;
  std::vector<double> steps;
  steps.reserve(frames.size() - 1);
  for (std::size_t i = 1; i < frames.size(); ++i) {
    steps.push_back(frames[i].timestamp - frames[i - 1].timestamp);
  }
  auto mid = steps.begin() + static_cast<std::ptrdiff_t>(steps.size() / 2);
  std::nth_element(steps.begin(), mid, steps.end());
  return std::max(1.0, std::round(1.0 / *mid));
}

}  // namespace

std::size_t FrameCorpus::total_frames() const {
  std::size_t n = 0;
  for (const auto& s : sequences) n += s.frames.size();
  return n;
}

std::vector<AuVector> FrameCorpus::pooled() const {
  std::vector<AuVector> out;
  out.reserve(total_frames());
  for (const auto& s : sequences) {
    for (const auto& f : s.frames) out.push_back(f.au);
  }
  return out;
}

AuSequence parse_openface_csv(std::string_view bytes, std::string video_id,
                              const ParseOptions& options, ParseReport* report) {
  if (trim(bytes).empty()) throw FormatError("empty CSV for video '" + video_id + "'");

  std::size_t pos = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= bytes.size()) return false;
    auto nl = bytes.find('\n', pos);
    if (nl == std::string_view::npos) nl = bytes.size();
    line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    return true;
  };

  std::string_view line;
  next_line(line);
  const auto header = split_commas(line);
  auto column = [&](std::string_view name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw FormatError("missing required column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
  };

  const std::size_t ts_col = column("timestamp");
  const std::size_t conf_col = column("confidence");
  const std::size_t ok_col = column("success");
  std::array<std::size_t, kNumAus> au_cols{};
  std::array<std::string, kNumAus> au_headers;
  for (std::size_t a = 0; a < kNumAus; ++a) {
    au_headers[a] = std::string(kAuNames[a]) + "_r";
    au_cols[a] = column(au_headers[a]);
  }

  AuSequence seq;
  seq.video_id = std::move(video_id);
  ParseReport local;
  std::size_t row = 0;
  while (next_line(line)) {
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() < header.size()) {
      throw FormatError("data row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                        " cells, header has " + std::to_string(header.size()));
    }
    ++local.rows;
    const double success = parse_cell(cells[ok_col], row, "success");
    AuFrame frame;
    frame.timestamp = parse_cell(cells[ts_col], row, "timestamp");
    frame.confidence = std::clamp(parse_cell(cells[conf_col], row, "confidence"), 0.0, 1.0);
    for (std::size_t a = 0; a < kNumAus; ++a) {
      const double v = parse_cell(cells[au_cols[a]], row, au_headers[a]);
      const double c = std::clamp(v, kMinIntensity, kMaxIntensity);
      if (c != v) ++local.clamped;
      frame.au[a] = c;
    }
    ++row;
    if (success == 0.0) {
      ++local.dropped_failed;
      continue;
    }
    if (!seq.frames.empty() && frame.timestamp <= seq.frames.back().timestamp) {
      throw FormatError("timestamps not strictly increasing at data row " + std::to_string(row - 1));
    }
    seq.frames.push_back(frame);
  }

  seq.source_fps = options.source_fps ? *options.source_fps : estimate_fps(seq.frames);
  if (!(seq.source_fps > 0.0)) throw ArgumentError("source fps must be positive");
  if (report) *report = local;
  return seq;
}

AuSequence filter_confidence(const AuSequence& seq, double min_confidence) {
  if (!(min_confidence >= 0.0 && min_confidence <= 1.0)) {
    throw ArgumentError("min_confidence must lie in [0, 1]");
  }
  AuSequence out{seq.video_id, seq.source_fps, {}};
  std::copy_if(seq.frames.begin(), seq.frames.end(), std::back_inserter(out.frames),
               [&](const AuFrame& f) { return f.confidence >= min_confidence; });
  return out;
}

AuSequence downsample(const AuSequence& seq, double target_fps) {
  if (!(target_fps > 0.0)) throw ArgumentError("target_fps must be positive");
  if (target_fps > seq.source_fps) {
    throw ArgumentError("target_fps " + std::to_string(target_fps) + " exceeds source fps " +
                        std::to_string(seq.source_fps) + " for '" + seq.video_id + "'");
  }
  const auto stride = static_cast<std::size_t>(std::max(1.0, std::round(seq.source_fps / target_fps)));
  AuSequence out{seq.video_id, seq.source_fps / static_cast<double>(stride), {}};
  out.frames.reserve(seq.frames.size() / stride + 1);
  for (std::size_t i = 0; i < seq.frames.size(); i += stride) out.frames.push_back(seq.frames[i]);
  return out;
}

void validate_corpus(const FrameCorpus& corpus) {
  std::set<std::string_view> ids;
  for (const auto& s : corpus.sequences) {
    if (s.video_id.empty()) throw FormatError("empty video id in corpus");
    if (!ids.insert(s.video_id).second) throw FormatError("duplicate video id '" + s.video_id + "'");
    if (!(s.source_fps > 0.0)) throw FormatError("non-positive fps for '" + s.video_id + "'");
    for (std::size_t i = 0; i < s.frames.size(); ++i) {
      const auto& f = s.frames[i];
      if (i > 0 && !(f.timestamp > s.frames[i - 1].timestamp)) {
        throw FormatError("timestamps not strictly increasing in '" + s.video_id + "'");
      }
      if (!(f.confidence >= 0.0 && f.confidence <= 1.0)) {
        throw FormatError("confidence out of range in '" + s.video_id + "'");
      }
      for (double v : f.au) {
        if (!(v >= kMinIntensity && v <= kMaxIntensity)) {
          throw FormatError("AU intensity out of range in '" + s.video_id + "'");
        }
      }
    }
  }
}

std::string encode_corpus(const FrameCorpus& corpus) {
  validate_corpus(corpus);
  ByteWriter w;
  w.magic(kCorpusMagic);
  w.u32(kCorpusVersion);
  w.u64(corpus.sequences.size());
  for (const auto& s : corpus.sequences) {
    w.str(s.video_id);
    w.f64(s.source_fps);
    w.u64(s.frames.size());
    for (const auto& f : s.frames) {
      w.f64(f.timestamp);
      w.f64(f.confidence);
      for (double v : f.au) w.f64(v);
    }
  }
  return std::move(w).bytes();
}

FrameCorpus decode_corpus(std::string_view bytes, const std::string& what) {
  ByteReader r(bytes, what);
  r.expect_header(kCorpusMagic, kCorpusVersion);
  const std::uint64_t n_seq = r.u64();
  r.require(n_seq, 4 + 8 + 8);
  FrameCorpus corpus;
  corpus.sequences.resize(n_seq);
  for (auto& s : corpus.sequences) {
    s.video_id = r.str();
    s.source_fps = r.f64();
    const std::uint64_t n = r.u64();
    r.require(n, 8 * (2 + kNumAus));
    s.frames.resize(n);
    for (auto& f : s.frames) {
      f.timestamp = r.f64();
      f.confidence = r.f64();
      for (double& v : f.au) v = r.f64();
    }
  }
  r.expect_end();
  try {
    validate_corpus(corpus);
  } catch (const FormatError& e) {
    throw FormatError(what + ": " + e.what());
  }
  return corpus;
}

void write_corpus(const FrameCorpus& corpus, const std::filesystem::path& path) {
  write_file(path, encode_corpus(corpus));
}

FrameCorpus read_corpus(const std::filesystem::path& path) {
  return decode_corpus(read_file(path), path.string());
}

FrameCorpus ingest_path(const std::filesystem::path& input, const IngestOptions& options,
                        IngestSummary* summary) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  if (fs::is_directory(input)) {
    for (const auto& entry : fs::directory_iterator(input)) {
      if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  } else if (fs::is_regular_file(input)) {
    files.push_back(input);
  } else {
    throw IoError("input not found: " + input.string());
  }

  FrameCorpus corpus;
  corpus.sequences.resize(files.size());
  std::vector<ParseReport> reports(files.size());
  parallel_shards(files.size(), options.workers ? options.workers : default_workers(),
                  [&](std::size_t, std::size_t begin, std::size_t end) {
                    for (std::size_t i = begin; i < end; ++i) {
                      const auto& path = files[i];
                      AuSequence seq;
                      try {
                        seq = parse_openface_csv(read_file(path), path.stem().string(),
                                                 options.parse, &reports[i]);
                      } catch (const FormatError& e) {
                        throw FormatError(path.string() + ": " + e.what());
                      }
                      corpus.sequences[i] =
                          downsample(filter_confidence(seq, options.min_confidence), options.target_fps);
                    }
                  });

  validate_corpus(corpus);
  if (summary) {
    *summary = {};
    summary->files = files.size();
    for (const auto& r : reports) {
      summary->rows += r.rows;
      summary->clamped += r.clamped;
    }
    summary->kept_frames = corpus.total_frames();
  }
  return corpus;
}

}  // namespace au2vec
