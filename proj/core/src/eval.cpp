#include "au2vec/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <limits>

#include <json.hpp>

#include "au2vec/binio.hpp"
#include "au2vec/error.hpp"
#include "au2vec/parallel.hpp"

namespace au2vec {
namespace {

struct Moments {
  double mean_x = 0.0, mean_y = 0.0, var_x = 0.0, var_y = 0.0, cov = 0.0;
};

Moments moments(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  Moments m;
  m.mean_x = std::accumulate(x.begin(), x.end(), 0.0) / n;
  m.mean_y = std::accumulate(y.begin(), y.end(), 0.0) / n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - m.mean_x, dy = y[i] - m.mean_y;
    m.var_x += dx * dx;
    m.var_y += dy * dy;
    m.cov += dx * dy;
  }
  m.var_x /= n;
  m.var_y /= n;
  m.cov /= n;
  return m;
}

void check_pair(std::span<const double> a, std::span<const double> b, std::size_t min_n, const char* metric) {
  if (a.size() != b.size()) throw ArgumentError(std::string(metric) + ": length mismatch");
  if (a.size() < min_n) {
    throw ArgumentError(std::string(metric) + ": needs at least " + std::to_string(min_n) + " samples");
  }
}

bool is_constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; });
}

template <class Fn>
std::optional<double> defined(Fn&& fn) {
  try {
    return fn();
  } catch (const DegenerateMetricError&) {
    return std::nullopt;
  } catch (const ArgumentError&) {
    return std::nullopt;
  }
}

std::string fmt(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.6f", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "nan"; }

}  // namespace

double pcc(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, 2, "pcc");
  if (is_constant(x) || is_constant(y)) throw DegenerateMetricError("pcc undefined for constant input");
  const auto m = moments(x, y);
  if (m.var_x <= 0.0 || m.var_y <= 0.0) throw DegenerateMetricError("pcc undefined for constant input");
  return m.cov / std::sqrt(m.var_x * m.var_y);
}

double rmse(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth, 1, "rmse");
  double ss = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) ss += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  return std::sqrt(ss / static_cast<double>(pred.size()));
}

double ccc(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth, 2, "ccc");
  if (is_constant(pred) || is_constant(truth)) throw DegenerateMetricError("ccc undefined for constant input");
  const auto m = moments(pred, truth);
  const double shift = m.mean_x - m.mean_y;
  return 2.0 * m.cov / (m.var_x + m.var_y + shift * shift);
}

Eigen::VectorXd RidgeModel::predict(const Eigen::MatrixXd& x) const {
  return (x * weights).array() + intercept;
}

RidgeModel ridge_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda) {
  const Eigen::Index n = x.rows(), p = x.cols();
  if (n < 2) throw ArgumentError("ridge_fit needs at least 2 samples");
  if (y.size() != n) throw ArgumentError("ridge_fit: feature and target row counts differ");
  if (!(lambda >= 0.0)) throw ArgumentError("ridge lambda must be non-negative");

  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::RowVectorXd sd = ((x.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(n)).sqrt();
  std::vector<Eigen::Index> active;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (sd[j] > 1e-12 * std::max(1.0, std::abs(mean[j]))) active.push_back(j);
  }

  const double y_mean = y.mean();
  RidgeModel model;
  model.weights = Eigen::VectorXd::Zero(p);
  model.intercept = y_mean;
  if (active.empty()) return model;

  const auto q = static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd z(n, q);
  for (Eigen::Index c = 0; c < q; ++c) z.col(c) = (x.col(active[c]).array() - mean[active[c]]) / sd[active[c]];
  Eigen::MatrixXd a = z.transpose() * z;
  a.diagonal().array() += lambda;
  const Eigen::VectorXd b = z.transpose() * (y.array() - y_mean).matrix();

  if (lambda == 0.0 && Eigen::FullPivLU<Eigen::MatrixXd>(a).rank() < q) {
    throw NumericError("singular least-squares system; use lambda > 0");
  }
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success) throw NumericError("ridge system could not be factorized; use lambda > 0");
  const Eigen::VectorXd beta = ldlt.solve(b);
  if (!beta.allFinite()) throw NumericError("non-finite ridge solution; use lambda > 0");

  for (Eigen::Index c = 0; c < q; ++c) {
    model.weights[active[c]] = beta[c] / sd[active[c]];
    model.intercept -= model.weights[active[c]] * mean[active[c]];
  }
  return model;
}

std::vector<std::size_t> assign_folds(std::span<const std::string> keys, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw ArgumentError("need at least 2 folds");
  std::vector<std::string> distinct(keys.begin(), keys.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < folds) {
    throw ArgumentError("cannot split " + std::to_string(distinct.size()) + " groups into " +
                        std::to_string(folds) + " folds");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(distinct.begin(), distinct.end(), rng);
  std::map<std::string_view, std::size_t> fold_of_key;
  for (std::size_t pos = 0; pos < distinct.size(); ++pos) fold_of_key[distinct[pos]] = pos % folds;
  std::vector<std::size_t> out;
  out.reserve(keys.size());
  for (const auto& k : keys) out.push_back(fold_of_key.at(k));
  return out;
}

EvalReport kfold_cv(std::span<const FeatureVector> features, const std::map<std::string, double>& labels,
                    const CvOptions& options) {
  std::vector<const FeatureVector*> rows;
  for (const auto& f : features) rows.push_back(&f);
  std::sort(rows.begin(), rows.end(),
            [](const FeatureVector* a, const FeatureVector* b) { return a->video_id < b->video_id; });
  const std::size_t n = rows.size();
  if (n < options.folds) {
    throw ArgumentError("n = " + std::to_string(n) + " samples is fewer than " + std::to_string(options.folds) +
                        " folds");
  }
  if (options.lambdas.empty()) throw ArgumentError("lambda grid is empty");
  const std::size_t p = n ? rows[0]->values.size() : 0;

  EvalReport report;
  report.target_name = options.target_name;
  report.n_samples = n;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  std::vector<std::string> keys;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = *rows[i];
    if (i > 0 && r.video_id == rows[i - 1]->video_id) throw FormatError("duplicate feature row '" + r.video_id + "'");
    if (r.values.size() != p) throw FormatError("feature row '" + r.video_id + "' has inconsistent width");
    const auto lab = labels.find(r.video_id);
    if (lab == labels.end()) throw FormatError("no label for video '" + r.video_id + "'");
    for (std::size_t j = 0; j < p; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r.values[j];
    y[static_cast<Eigen::Index>(i)] = lab->second;
    report.video_ids.push_back(r.video_id);
    report.truth.push_back(lab->second);
    const auto g = options.groups.find(r.video_id);
    keys.push_back(g == options.groups.end() ? r.video_id : g->second);
  }

  const auto fold_of = assign_folds(keys, options.folds, options.seed);
  report.fold_of = fold_of;
  report.predictions.assign(n, 0.0);
  report.per_fold.resize(options.folds);

  auto subset = [&](const std::vector<std::size_t>& idx) {
    Eigen::MatrixXd xs(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(p));
    Eigen::VectorXd ys(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r) {
      xs.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(idx[r]));
      ys[static_cast<Eigen::Index>(r)] = y[static_cast<Eigen::Index>(idx[r])];
    }
    return std::pair{xs, ys};
  };

  auto run_fold = [&](std::size_t fold) {
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < n; ++i) (fold_of[i] == fold ? test : train).push_back(i);

    double lambda = options.lambdas.front();
    if (options.lambdas.size() > 1) {
      std::vector<std::size_t> shuffled = train;
      std::mt19937_64 rng(options.seed + 1 + fold);
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      const auto n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.2 * static_cast<double>(shuffled.size()))));
      if (shuffled.size() >= n_val + 2) {
        const std::vector<std::size_t> inner_val(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_val));
        const std::vector<std::size_t> inner_train(shuffled.begin() + static_cast<std::ptrdiff_t>(n_val), shuffled.end());
        const auto [xt, yt] = subset(inner_train);
        const auto [xv, yv] = subset(inner_val);
        double best = std::numeric_limits<double>::infinity();
        for (double lam : options.lambdas) {
          try {
            const Eigen::VectorXd pv = ridge_fit(xt, yt, lam).predict(xv);
            const double err = rmse(std::span(pv.data(), static_cast<std::size_t>(pv.size())),
                                    std::span(yv.data(), static_cast<std::size_t>(yv.size())));
            if (err < best) {
              best = err;
              lambda = lam;
            }
          } catch (const NumericError&) {
          }
        }
      }
    }

    const auto [xt, yt] = subset(train);
    const auto model = ridge_fit(xt, yt, lambda);
    std::vector<double> fp, ft;
    for (std::size_t i : test) {
      const double pred = model.predict_row(x.row(static_cast<Eigen::Index>(i)));
      report.predictions[i] = pred;
      fp.push_back(pred);
      ft.push_back(report.truth[i]);
    }
    auto& fm = report.per_fold[fold];
    fm.fold = fold;
    fm.n = test.size();
    fm.lambda = lambda;
    fm.rmse = rmse(fp, ft);
    fm.pcc = defined([&] { return pcc(fp, ft); });
    fm.ccc = defined([&] { return ccc(fp, ft); });
  };

  parallel_shards(options.folds, options.workers ? options.workers : default_workers(), [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t f = begin; f < end; ++f) run_fold(f);
  });

  report.pcc = pcc(report.predictions, report.truth);
  report.rmse = rmse(report.predictions, report.truth);
  report.ccc = ccc(report.predictions, report.truth);
  return report;
}

BaselineReport random_baseline(std::span<const double> train_labels, std::span<const double> truth,
                               std::uint64_t seed, std::size_t repeats) {
  if (train_labels.empty()) throw ArgumentError("random baseline needs training labels");
  if (truth.empty()) throw ArgumentError("random baseline needs test targets");
  if (repeats == 0) throw ArgumentError("random baseline needs at least one repeat");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, train_labels.size() - 1);
  BaselineReport out;
  out.repeats = repeats;
  double rmse_sum = 0.0, pcc_sum = 0.0, ccc_sum = 0.0;
  std::size_t pcc_n = 0, ccc_n = 0;
  std::vector<double> pred(truth.size());
  for (std::size_t r = 0; r < repeats; ++r) {
    for (double& p : pred) p = train_labels[pick(rng)];
    rmse_sum += rmse(pred, truth);
    if (auto v = defined([&] { return pcc(pred, truth); })) pcc_sum += *v, ++pcc_n;
    if (auto v = defined([&] { return ccc(pred, truth); })) ccc_sum += *v, ++ccc_n;
  }
  out.rmse = rmse_sum / static_cast<double>(repeats);
  if (pcc_n) out.pcc = pcc_sum / static_cast<double>(pcc_n);
  if (ccc_n) out.ccc = ccc_sum / static_cast<double>(ccc_n);
  return out;
}

BaselineReport random_baseline_cv(std::span<const double> labels, std::span<const std::size_t> fold_of,
                                  std::size_t folds, std::uint64_t seed, std::size_t repeats) {
  if (labels.size() != fold_of.size()) throw ArgumentError("labels and fold assignment differ in length");
  if (repeats == 0) throw ArgumentError("random baseline needs at least one repeat");
  std::vector<std::vector<double>> train_of(folds);
  for (std::size_t f = 0; f < folds; ++f) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (fold_of[i] != f) train_of[f].push_back(labels[i]);
    }
    if (train_of[f].empty()) throw ArgumentError("fold " + std::to_string(f) + " has no training labels");
  }
  std::mt19937_64 rng(seed);
  BaselineReport out;
  out.repeats = repeats;
  double rmse_sum = 0.0, pcc_sum = 0.0, ccc_sum = 0.0;
  std::size_t pcc_n = 0, ccc_n = 0;
  std::vector<double> pred(labels.size());
  for (std::size_t r = 0; r < repeats; ++r) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto& pool = train_of[fold_of[i]];
      pred[i] = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
    }
    rmse_sum += rmse(pred, labels);
    if (auto v = defined([&] { return pcc(pred, labels); })) pcc_sum += *v, ++pcc_n;
    if (auto v = defined([&] { return ccc(pred, labels); })) ccc_sum += *v, ++ccc_n;
  }
  out.rmse = rmse_sum / static_cast<double>(repeats);
  if (pcc_n) out.pcc = pcc_sum / static_cast<double>(pcc_n);
  if (ccc_n) out.ccc = ccc_sum / static_cast<double>(ccc_n);
  return out;
}

std::map<std::string, double> parse_labels(std::string_view text, const std::string& what) {
  std::map<std::string, double> out;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw FormatError(what + ": line " + std::to_string(line_no) + " has no tab");
    const auto id = line.substr(0, tab);
    const auto cell = line.substr(tab + 1);
    double v = 0.0;
    const auto* end = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
    if (cell.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
      if (line_no == 1) continue;  // header
      throw FormatError(what + ": bad label on line " + std::to_string(line_no));
    }
    if (!out.emplace(std::string(id), v).second) {
      throw FormatError(what + ": duplicate label for '" + std::string(id) + "'");
    }
  }
  return out;
}

std::map<std::string, double> read_labels(const std::filesystem::path& path) {
  return parse_labels(read_file(path), path.string());
}

std::string format_labels(const std::map<std::string, double>& labels) {
  std::string out = "video_id\tlabel\n";
  char buf[32];
  for (const auto& [id, v] : labels) {
    const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
    out += id + '\t' + std::string(buf, static_cast<std::size_t>(n)) + '\n';
  }
  return out;
}

std::string format_report_tsv(const EvalReport& report, const std::optional<BaselineReport>& baseline) {
  std::string out = "scope\tfold\tn\tlambda\tpcc\trmse\tccc\n";
  out += "pooled\t-\t" + std::to_string(report.n_samples) + "\t-\t" + fmt(report.pcc) + '\t' + fmt(report.rmse) +
         '\t' + fmt(report.ccc) + '\n';
  for (const auto& f : report.per_fold) {
    out += "fold\t" + std::to_string(f.fold) + '\t' + std::to_string(f.n) + '\t' + fmt(f.lambda) + '\t' +
           fmt(f.pcc) + '\t' + fmt(f.rmse) + '\t' + fmt(f.ccc) + '\n';
  }
  if (baseline) {
    out += "random\t-\t" + std::to_string(report.n_samples) + "\t-\t" + fmt(baseline->pcc) + '\t' +
           fmt(baseline->rmse) + '\t' + fmt(baseline->ccc) + '\n';
  }
  return out;
}

std::string format_report_json(const EvalReport& report, const std::optional<BaselineReport>& baseline) {
  using nlohmann::json;
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json j;
  j["target"] = report.target_name;
  j["n_samples"] = report.n_samples;
  j["pooled"] = {{"pcc", report.pcc}, {"rmse", report.rmse}, {"ccc", report.ccc}};
  j["folds"] = json::array();
  for (const auto& f : report.per_fold) {
    j["folds"].push_back({{"fold", f.fold}, {"n", f.n}, {"lambda", f.lambda}, {"pcc", opt(f.pcc)},
                          {"rmse", f.rmse}, {"ccc", opt(f.ccc)}});
  }
  if (baseline) {
    j["random_baseline"] = {{"repeats", baseline->repeats}, {"pcc", opt(baseline->pcc)},
                            {"rmse", baseline->rmse}, {"ccc", opt(baseline->ccc)}};
  }
  return j.dump(2) + "\n";
}

}  // namespace au2vec
