#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fogcast/features.hpp"
#include "fogcast/gbdt.hpp"

// Path-dependent TreeSHAP attributions in margin (log-odds) space.
namespace fogcast::explain {

struct ShapExplanation {
  double base_value = 0.0;     // expected margin under the node-cover distribution
  std::vector<double> values;  // one per model feature
  double margin = 0.0;
};

// Exact polynomial-time TreeSHAP for one tree, accumulated into `phi`.
// Conditional expectations descend by child-cover fractions.
// Throws Error(kZeroCoverNode) when an internal node has non-positive cover.
void tree_shap(const gbdt::Tree& tree, std::span<const double> x, std::span<double> phi);

// Cover-weighted mean leaf value of one tree.
double expected_value(const gbdt::Tree& tree);

ShapExplanation shap_values(const gbdt::GbdtModel& model, std::span<const double> x);

inline constexpr std::size_t kMaxBruteForceFeatures = 20;

// Classic Shapley values by enumerating every coalition of the features the
// tree uses. The coalition value fixes features in S to x and marginalizes
// the rest by child-cover fractions. Test oracle; exponential in the number
// of distinct split features. Throws kTooManyFeatures above 20.
std::vector<double> brute_force_shap(const gbdt::Tree& tree, std::span<const double> x,
                                     std::size_t num_features);

struct FeatureImportance {
  std::string feature;
  std::size_t index = 0;
  double mean_abs_shap = 0.0;
};

// Sorted by mean |SHAP| descending; ties keep schema order.
using ImportanceRanking = std::vector<FeatureImportance>;

// Throws kEmptyDataset.
ImportanceRanking global_importance(const gbdt::GbdtModel& model, const features::FeatureDataset& ds);

// 1-based rank of `feature` in the ranking; 0 when absent.
std::size_t rank_of(const ImportanceRanking& ranking, std::string_view feature);

void write_importance_csv(std::ostream& out, const ImportanceRanking& ranking);
void write_explanations_csv(std::ostream& out, const gbdt::GbdtModel& model,
                            const features::FeatureDataset& ds);

}  // namespace fogcast::explain
