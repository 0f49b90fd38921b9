#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "au2vec/features.hpp"

namespace au2vec {

/// Pearson correlation. Throws DegenerateMetricError for constant input.
double pcc(std::span<const double> x, std::span<const double> y);
double rmse(std::span<const double> pred, std::span<const double> truth);
/// Lin's concordance correlation with population moments.
double ccc(std::span<const double> pred, std::span<const double> truth);

struct RidgeModel {
  Eigen::VectorXd weights;  // in the original (unstandardized) feature units
  double intercept = 0.0;

  double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const { return row.dot(weights) + intercept; }
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

/// Ridge regression on internally standardized columns (constant columns get
/// weight 0); the intercept is not penalized. lambda = 0 is ordinary least
/// squares and throws NumericError when the system is singular.
RidgeModel ridge_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda);

/// Fold index per sample. Distinct keys are sorted, shuffled under `seed` and
/// dealt round-robin to folds, so fold sizes (in keys) differ by at most one.
std::vector<std::size_t> assign_folds(std::span<const std::string> keys, std::size_t folds, std::uint64_t seed);

struct FoldMetrics {
  std::size_t fold = 0;
  std::size_t n = 0;
  double lambda = 0.0;
  double rmse = 0.0;
  std::optional<double> pcc;  // unset when the fold is degenerate
  std::optional<double> ccc;
};

struct EvalReport {
  std::string target_name;
  double pcc = 0.0;
  double rmse = 0.0;
  double ccc = 0.0;
  std::vector<FoldMetrics> per_fold;
  std::size_t n_samples = 0;

  /// Out-of-fold predictions, aligned with video_ids (sorted by id).
  std::vector<std::string> video_ids;
  std::vector<double> truth;
  std::vector<double> predictions;
  std::vector<std::size_t> fold_of;
};

struct CvOptions {
  std::size_t folds = 10;
  std::vector<double> lambdas = {0.01, 0.1, 1.0, 10.0};
  std::uint64_t seed = 0;
  /// Optional video_id -> group key; samples sharing a key share a fold.
  std::map<std::string, std::string> groups;
  std::string target_name = "label";
  /// Folds are independent and may run concurrently.
  unsigned workers = 1;
};

/// k-fold cross-validated ridge. Per fold, lambda is picked on a seeded 80/20
/// split of the training portion, then refit on the whole training portion.
EvalReport kfold_cv(std::span<const FeatureVector> features, const std::map<std::string, double>& labels,
                    const CvOptions& options);

struct BaselineReport {
  double rmse = 0.0;
  std::optional<double> pcc;  // averaged over repeats where defined
  std::optional<double> ccc;
  std::size_t repeats = 0;
};

/// Predictions drawn i.i.d. from the empirical training-label distribution,
/// metrics averaged over `repeats` draws.
BaselineReport random_baseline(std::span<const double> train_labels, std::span<const double> truth,
                               std::uint64_t seed, std::size_t repeats = 100);

/// The same baseline inside a fold partition: each fold's test predictions are
/// drawn from that fold's training labels; pooled metrics averaged over repeats.
BaselineReport random_baseline_cv(std::span<const double> labels, std::span<const std::size_t> fold_of,
                                  std::size_t folds, std::uint64_t seed, std::size_t repeats = 100);

/// `video_id<TAB>label` lines; a non-numeric first line is treated as a header.
std::map<std::string, double> parse_labels(std::string_view text, const std::string& what = "labels");
std::map<std::string, double> read_labels(const std::filesystem::path& path);
std::string format_labels(const std::map<std::string, double>& labels);

std::string format_report_tsv(const EvalReport& report, const std::optional<BaselineReport>& baseline);
std::string format_report_json(const EvalReport& report, const std::optional<BaselineReport>& baseline);

}  // namespace au2vec
