#include "au2vec/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <random>

#include "au2vec/binio.hpp"
#include "au2vec/error.hpp"

namespace au2vec {
namespace {

constexpr std::size_t kMaxQuantizeIterations = 100;

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

std::size_t nearest_center(double x, const std::vector<double>& centers) {
  std::size_t best = 0;
  double best_d = std::abs(x - centers[0]);
  for (std::size_t c = 1; c < centers.size(); ++c) {
    const double d = std::abs(x - centers[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

void require_two_frames(const AuSequence& seq) {
  if (seq.frames.size() < 2) {
    throw ArgumentError("'" + seq.video_id + "' needs at least 2 frames for temporal features");
  }
}

}  // namespace

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kStatic: return "static";
    case FeatureKind::kDynamic: return "dynamic";
    case FeatureKind::kPooledEmbedding: return "pooled";
  }
  return "?";
}

FeatureKind parse_feature_kind(std::string_view name) {
  if (name == "static") return FeatureKind::kStatic;
  if (name == "dynamic") return FeatureKind::kDynamic;
  if (name == "pooled") return FeatureKind::kPooledEmbedding;
  throw ArgumentError("unknown feature kind '" + std::string(name) + "'");
}

FeatureVector static_features(const AuSequence& seq) {
  require_two_frames(seq);
  const auto n = static_cast<double>(seq.frames.size());
  FeatureVector out{seq.video_id, FeatureKind::kStatic, std::vector<double>(kStaticFeatureCount, 0.0)};
  for (std::size_t a = 0; a < kNumAus; ++a) {
    double sum = 0.0, dsum = 0.0;
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
      sum += seq.frames[t].au[a];
      if (t + 1 < seq.frames.size()) dsum += seq.frames[t + 1].au[a] - seq.frames[t].au[a];
    }
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& f : seq.frames) ss += (f.au[a] - mean) * (f.au[a] - mean);
    out.values[a] = mean;
    out.values[kNumAus + a] = dsum / (n - 1.0);
    out.values[2 * kNumAus + a] = std::sqrt(ss / n);
  }
  return out;
}

Quantization quantize_channel(std::span<const double> signal, std::size_t levels) {
  if (levels < 1) throw ArgumentError("quantization needs at least one level");
  Quantization q;
  q.centers = {0.0};

  // k-means++ seeding of the free centers around the pinned zero center.
  std::mt19937_64 rng(0);
  std::vector<double> d2(signal.size());
  for (std::size_t i = 0; i < signal.size(); ++i) d2[i] = signal[i] * signal[i];
  while (q.centers.size() < levels) {
    double total = 0.0;
    for (double v : d2) total += v;
    if (total <= 0.0) break;
    const double target = std::uniform_real_distribution<double>(0.0, total)(rng);
    std::size_t pick = signal.size();
    double running = 0.0;
    for (std::size_t i = 0; i < signal.size(); ++i) {
      running += d2[i];
      if (d2[i] > 0.0 && running > target) {
        pick = i;
        break;
      }
    }
    if (pick == signal.size()) {
      for (std::size_t i = signal.size(); i-- > 0;) {
        if (d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    }
    const double c = signal[pick];
    q.centers.push_back(c);
    for (std::size_t i = 0; i < signal.size(); ++i) d2[i] = std::min(d2[i], (signal[i] - c) * (signal[i] - c));
  }
  std::sort(q.centers.begin() + 1, q.centers.end());

  q.levels.assign(signal.size(), 0);
  for (std::size_t it = 0; it < kMaxQuantizeIterations; ++it) {
    bool changed = it == 0;
    for (std::size_t i = 0; i < signal.size(); ++i) {
      const std::size_t l = nearest_center(signal[i], q.centers);
      changed |= l != q.levels[i];
      q.levels[i] = l;
    }
    if (!changed) break;

    std::vector<double> sum(q.centers.size(), 0.0);
    std::vector<std::size_t> count(q.centers.size(), 0);
    for (std::size_t i = 0; i < signal.size(); ++i) {
      sum[q.levels[i]] += signal[i];
      ++count[q.levels[i]];
    }
    std::vector<double> next = {0.0};
    for (std::size_t c = 1; c < q.centers.size(); ++c) {
      if (count[c] > 0) next.push_back(sum[c] / static_cast<double>(count[c]));
    }
    std::sort(next.begin() + 1, next.end());
    q.centers = std::move(next);
  }
  // Final assignment against the final centers.
  for (std::size_t i = 0; i < signal.size(); ++i) q.levels[i] = nearest_center(signal[i], q.centers);
  return q;
}

FeatureVector tron_dynamic_features(const AuSequence& seq, std::size_t levels) {
  require_two_frames(seq);
  const std::size_t n = seq.frames.size();
  FeatureVector out{seq.video_id, FeatureKind::kDynamic, std::vector<double>(kDynamicFeatureCount, 0.0)};
  std::vector<double> signal(n);
  for (std::size_t a = 0; a < kNumAus; ++a) {
    for (std::size_t t = 0; t < n; ++t) signal[t] = seq.frames[t].au[a];
    const auto q = quantize_channel(signal, levels);

    std::size_t active = 0, runs = 0, changes = 0, fast = 0;
    double active_sum = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      if (q.levels[t] > 0) {
        ++active;
        active_sum += signal[t];
        if (t == 0 || q.levels[t - 1] == 0) ++runs;
      }
      if (t + 1 < n) {
        const auto cur = static_cast<long>(q.levels[t]), nxt = static_cast<long>(q.levels[t + 1]);
        changes += cur != nxt;
        fast += std::abs(nxt - cur) >= 2;
      }
    }
    double* f = out.values.data() + 5 * a;
    f[0] = static_cast<double>(active) / static_cast<double>(n);
    f[1] = active ? active_sum / static_cast<double>(active) : 0.0;
    f[2] = runs ? static_cast<double>(active) / static_cast<double>(runs) : 0.0;
    f[3] = static_cast<double>(changes) / static_cast<double>(n - 1);
    f[4] = static_cast<double>(fast) / static_cast<double>(n - 1);
  }
  return out;
}

FeatureVector pooled_embedding_features(const TokenSequence& tokens, const EmbeddingModel& model) {
  FeatureVector out{tokens.video_id, FeatureKind::kPooledEmbedding, std::vector<double>(model.dim, 0.0)};
  std::size_t n = 0;
  for (TokenId t : tokens.tokens) {
    if (t >= model.vocab_size) {
      throw ArgumentError("token " + std::to_string(t) + " out of range for model V = " +
                          std::to_string(model.vocab_size));
    }
    if (t == kStartToken || t == kEndToken) continue;
    const auto w = model.main_row(t);
    const auto c = model.context_row(t);
    for (std::size_t d = 0; d < model.dim; ++d) out.values[d] += w[d] + c[d];
    ++n;
  }
  if (n == 0) throw ArgumentError("'" + tokens.video_id + "' has no tokens between START and END");
  for (double& v : out.values) v /= static_cast<double>(n);
  return out;
}

std::vector<std::string> feature_names(FeatureKind kind, std::size_t dim) {
  std::vector<std::string> names;
  switch (kind) {
    case FeatureKind::kStatic:
      for (const char* stat : {"_mean", "_deriv_mean", "_std"}) {
        for (auto au : kAuNames) names.push_back(std::string(au) + stat);
      }
      break;
    case FeatureKind::kDynamic:
      for (auto au : kAuNames) {
        for (const char* stat : {"_act_ratio", "_act_level", "_act_length", "_change_ratio", "_fast_change_ratio"}) {
          names.push_back(std::string(au) + stat);
        }
      }
      break;
    case FeatureKind::kPooledEmbedding:
      for (std::size_t d = 0; d < dim; ++d) names.push_back("emb_" + std::to_string(d));
      break;
  }
  return names;
}

std::string format_feature_table(const FeatureTable& table) {
  std::string out = "video_id";
  for (const auto& c : table.columns) out += '\t' + c;
  out += '\n';
  char buf[32];
  for (const auto& row : table.rows) {
    if (row.values.size() != table.columns.size()) throw ArgumentError("feature row width mismatch");
    out += row.video_id;
    for (double v : row.values) {
      const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
      out += '\t';
      out.append(buf, static_cast<std::size_t>(n));
    }
    out += '\n';
  }
  return out;
}

FeatureTable parse_feature_table(std::string_view text, const std::string& what) {
  FeatureTable table;
  std::size_t pos = 0, line_no = 0;
  bool header = true;
  FeatureKind kind = FeatureKind::kStatic;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (header) {
      if (fields[0] != "video_id") throw FormatError(what + ": first column must be video_id");
      for (std::size_t f = 1; f < fields.size(); ++f) table.columns.emplace_back(fields[f]);
      if (!table.columns.empty()) {
        const auto& first = table.columns.front();
        if (first.rfind("emb_", 0) == 0) kind = FeatureKind::kPooledEmbedding;
        else if (first.find("_act_ratio") != std::string::npos) kind = FeatureKind::kDynamic;
      }
      header = false;
      continue;
    }
    if (fields.size() != table.columns.size() + 1) {
      throw FormatError(what + ": line " + std::to_string(line_no) + " has wrong number of fields");
    }
    FeatureVector row{std::string(fields[0]), kind, {}};
    for (std::size_t f = 1; f < fields.size(); ++f) {
      double v = 0.0;
      const auto* end = fields[f].data() + fields[f].size();
      const auto [ptr, ec] = std::from_chars(fields[f].data(), end, v);
      if (fields[f].empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
        throw FormatError(what + ": bad value on line " + std::to_string(line_no));
      }
      row.values.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  if (header) throw FormatError(what + ": empty feature file");
  return table;
}

void write_feature_table(const FeatureTable& table, const std::filesystem::path& path) {
  write_file(path, format_feature_table(table));
}

FeatureTable read_feature_table(const std::filesystem::path& path) {
  return parse_feature_table(read_file(path), path.string());
}

}  // namespace au2vec
