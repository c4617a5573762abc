#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fogcast/common.hpp"
#include "fogcast/features.hpp"

// Second-order gradient boosted regression trees on the weighted binary
// logistic loss, with exact greedy (sorted scan) split finding.
namespace fogcast::gbdt {

struct Hyperparams {
  int n_estimators = 1000;
  double learning_rate = 0.05;
  int max_depth = 5;
  double subsample = 0.8;
  double colsample_bytree = 0.8;
  // Unset means #negatives / #positives of the training labels.
  std::optional<double> scale_pos_weight;
  double reg_lambda = 1.0;
  double gamma = 0.0;
  double min_child_weight = 1.0;
  std::uint64_t seed = 42;

  void validate() const;  // throws kInvalidHyperparams
};

// Flat node. Internal nodes route x to `left` iff x[feature] < threshold.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double leaf_value = 0.0;  // learning rate already applied
  double cover = 0.0;       // sum of training hessians routed here

  bool is_leaf() const { return left < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const;
  int leaf_index(std::span<const double> x) const;
  int depth() const;
};

struct ModelMetadata {
  std::string trained_on;
  std::string label_definition = "visibility_km < 1.0 at t + horizon_h";
  int horizon_h = features::kDefaultHorizonHours;
};

struct GbdtModel {
  double base_margin = 0.0;
  std::vector<Tree> trees;
  std::vector<std::string> feature_names;
  Hyperparams hyperparams;
  ModelMetadata metadata;

  std::size_t num_features() const { return feature_names.size(); }
};

// Throws kDegenerateLabels unless both classes are present.
double compute_scale_pos_weight(std::span<const std::uint8_t> y);

struct SplitCandidate {
  double threshold = 0.0;
  double gain = 0.0;
};

struct SplitParams {
  double reg_lambda = 1.0;
  double gamma = 0.0;
  double min_child_weight = 1.0;
};

// 0.5 * [GL^2/(HL+l) + GR^2/(HR+l) - (GL+GR)^2/(HL+HR+l)] - gamma
double split_gain(double g_left, double h_left, double g_total, double h_total,
                  const SplitParams& params);

// Best midpoint split of one feature. Candidates lie between consecutive
// distinct sorted values; both children need hessian sum >= min_child_weight
// and the gain must be strictly positive. Equal gains keep the smaller
// threshold. Sums use a fixed order: the node total in input order, the left
// prefix in (value, input position) order.
std::optional<SplitCandidate> find_best_split(std::span<const double> feature_values,
                                              std::span<const double> g,
                                              std::span<const double> h,
                                              const SplitParams& params);

struct FeatureSplit {
  std::size_t feature = 0;
  SplitCandidate split;
};

// Best split across the columns of x; equal gains keep the lower column.
std::optional<FeatureSplit> find_best_split(const Matrix& x, std::span<const double> g,
                                            std::span<const double> h, const SplitParams& params);

// Per-row first and second derivatives of the weighted logistic loss at the
// given margins: w = scale_pos_weight for positives else 1,
// g = w (p - y), h = w p (1 - p).
void logistic_gradients(std::span<const double> margins, std::span<const std::uint8_t> y,
                        double scale_pos_weight, std::span<double> g, std::span<double> h);

double weighted_logloss(std::span<const double> margins, std::span<const std::uint8_t> y,
                        double scale_pos_weight);

// Optional per-round diagnostics.
struct TrainingTrace {
  double scale_pos_weight = 1.0;
  std::vector<double> loss;  // loss[k] = weighted mean loss after k trees
};

// Deterministic given (data, hyperparams). Throws kDegenerateLabels,
// kInvalidHyperparams, kEmptyDataset.
GbdtModel train_gbdt(const Matrix& x, std::span<const std::uint8_t> y, const Hyperparams& hp,
                     std::vector<std::string> feature_names, TrainingTrace* trace = nullptr);

GbdtModel train_gbdt(const features::FeatureDataset& train, const Hyperparams& hp,
                     TrainingTrace* trace = nullptr);

// Throws kSchemaMismatch on wrong width or NaN input.
double predict_margin(const GbdtModel& model, std::span<const double> x);
double predict_proba(const GbdtModel& model, std::span<const double> x);
std::vector<double> predict_proba(const GbdtModel& model, const Matrix& x);

inline constexpr int kModelFormatVersion = 1;

std::string persist_model(const GbdtModel& model);
// Throws kCorruptModelFile or kVersionMismatch.
GbdtModel restore_model(std::string_view bytes);

// Uniform integer in [0, n) from raw generator output by rejection, so the
// stream of draws does not depend on the standard library's distributions.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n);

}  // namespace fogcast::gbdt
