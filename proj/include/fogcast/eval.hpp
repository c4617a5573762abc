#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fogcast/common.hpp"
#include "fogcast/features.hpp"

// Imbalance-aware metrics, reference baselines and threshold calibration.
namespace fogcast::eval {

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  bool operator==(const Confusion&) const = default;
};

struct ThresholdMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double mcc = 0.0;
};

// Zero denominators give 0 for every metric.
ThresholdMetrics metrics_from(const Confusion& c);

// Positive prediction iff score >= threshold.
Confusion confusion_at(std::span<const double> scores, std::span<const std::uint8_t> labels,
                       double threshold);

using Curve = std::vector<std::pair<double, double>>;

// One point per distinct score, thresholds descending. ROC points are
// (fpr, tpr) and start at (0, 0); PR points are (recall, precision) and start
// at the top-scored block.
Curve roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels);
Curve pr_curve(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Mann-Whitney: fraction of (positive, negative) pairs ranked correctly,
// ties counting one half. Throws kSingleClass.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Step sum of delta-recall times precision over descending tie blocks.
// Throws kNoPositives.
double average_precision(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct EvalReport {
  std::optional<double> auc;    // absent with a single class
  std::optional<double> auprc;  // absent without positives
  double threshold = 0.5;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double mcc = 0.0;
  Confusion confusion;
  Curve roc_points;
  Curve pr_points;
  double base_rate = 0.0;

  std::string to_json() const;
};

inline constexpr double kDefaultThreshold = 0.5;

// Throws kEmptyDataset on empty input.
EvalReport classification_report(std::span<const double> scores,
                                 std::span<const std::uint8_t> labels,
                                 double threshold = kDefaultThreshold);

struct Objective {
  enum class Kind { kMaxF1, kMinRecall };
  Kind kind = Kind::kMaxF1;
  double min_recall = 0.0;

  static Objective max_f1() { return {}; }
  static Objective recall_at_least(double r) { return {Kind::kMinRecall, r}; }
};

struct Calibration {
  double threshold = kDefaultThreshold;
  EvalReport report;
};

// Candidates are the distinct scores. kMaxF1 ties go to the higher threshold;
// kMinRecall returns the highest threshold with recall >= r.
// Throws kSingleClass, kUnachievableRecall.
Calibration calibrate_threshold(std::span<const double> scores,
                                std::span<const std::uint8_t> labels, Objective objective);

struct PersistenceScores {
  std::vector<double> binary;      // 1 iff current visibility < 1 km
  std::vector<double> continuous;  // -visibility
};

// Throws kSchemaMismatch on a standardized dataset.
PersistenceScores persistence_baseline(const features::FeatureDataset& ds);

struct ClimatologyTable {
  // rates[month - 1][hour]; cells without training rows hold global_rate.
  std::array<std::array<double, 24>, 12> rates{};
  std::array<std::array<std::size_t, 24>, 12> counts{};
  double global_rate = 0.0;

  double score(Timestamp ts) const;
};

// Keyed on the UTC month and hour of the issue time. Throws kEmptyTraining.
ClimatologyTable fit_climatology(const features::FeatureDataset& train);
std::vector<double> climatology_baseline(const features::FeatureDataset& train,
                                         const features::FeatureDataset& test);

inline constexpr std::array<std::size_t, 5> kLogisticFeatures = {
    features::kTemperatura2m, features::kDepresionPuntoRocio, features::kVelocidadViento10m,
    features::kHumedadRelativa, features::kVisibilidadActual};

struct LogisticConfig {
  double learning_rate = 0.5;
  int iterations = 1000;
  bool class_weighting = true;
  // Unset means #negatives / #positives, as for the boosted model.
  std::optional<double> scale_pos_weight;
};

struct LinearModel {
  std::vector<std::size_t> features;  // columns of the full row
  std::vector<double> weights;
  double bias = 0.0;

  double margin(std::span<const double> row) const;
  double score(std::span<const double> row) const { return sigmoid(margin(row)); }
  std::vector<double> scores(const Matrix& x) const;
};

// Class-weighted mean logistic loss of a linear model; params holds the
// weights followed by the bias, x holds only the model's columns.
double logistic_loss(const Matrix& x, std::span<const std::uint8_t> y,
                     std::span<const double> sample_weight, std::span<const double> params);
void logistic_gradient(const Matrix& x, std::span<const std::uint8_t> y,
                       std::span<const double> sample_weight, std::span<const double> params,
                       std::span<double> grad);

// Per-row weights: scale_pos_weight for positives, 1 otherwise.
std::vector<double> logistic_sample_weights(std::span<const std::uint8_t> y,
                                            const LogisticConfig& config);

// Full-batch gradient descent from zero. `x` holds exactly the model columns.
// Throws kDegenerateLabels.
LinearModel fit_logistic(const Matrix& x, std::span<const std::uint8_t> y,
                         const LogisticConfig& config, std::vector<std::size_t> features);

// Fits on the five reference columns of a (scaled) dataset.
LinearModel train_logistic(const features::FeatureDataset& train, const LogisticConfig& config);

// Writes roc.csv (fpr,tpr) and pr.csv (recall,precision). Throws kIoError.
void emit_curves(const EvalReport& report, const std::filesystem::path& dir);

}  // namespace fogcast::eval
