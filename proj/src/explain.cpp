#include "fogcast/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <ostream>
#include <set>

#include "csv.hpp"

namespace fogcast::explain {

namespace {

// One element of the unique decision path: the fraction of "zero" paths
// (feature not in the coalition, follow covers) and "one" paths (feature in
// the coalition, follow x) flowing through, and the permutation weight.
struct PathElement {
  int feature = -1;
  double zero_fraction = 0.0;
  double one_fraction = 0.0;
  double pweight = 0.0;
};

void extend_path(PathElement* path, int depth, double zero_fraction, double one_fraction,
                 int feature) {
  path[depth] = {feature, zero_fraction, one_fraction, depth == 0 ? 1.0 : 0.0};
  for (int i = depth - 1; i >= 0; --i) {
    path[i + 1].pweight += one_fraction * path[i].pweight * (i + 1) / double(depth + 1);
    path[i].pweight = zero_fraction * path[i].pweight * (depth - i) / double(depth + 1);
  }
}

void unwind_path(PathElement* path, int depth, int index) {
  const double one_fraction = path[index].one_fraction;
  const double zero_fraction = path[index].zero_fraction;
  double next_one_portion = path[depth].pweight;
  for (int i = depth - 1; i >= 0; --i) {
    if (one_fraction != 0.0) {
      const double tmp = path[i].pweight;
      path[i].pweight = next_one_portion * (depth + 1) / ((i + 1) * one_fraction);
      next_one_portion = tmp - path[i].pweight * zero_fraction * (depth - i) / double(depth + 1);
    } else {
      path[i].pweight = path[i].pweight * (depth + 1) / (zero_fraction * (depth - i));
    }
  }
  for (int i = index; i < depth; ++i) {
    path[i].feature = path[i + 1].feature;
    path[i].zero_fraction = path[i + 1].zero_fraction;
    path[i].one_fraction = path[i + 1].one_fraction;
  }
}

// Total permutation weight of the path with element `index` removed.
double unwound_path_sum(const PathElement* path, int depth, int index) {
  const double one_fraction = path[index].one_fraction;
  const double zero_fraction = path[index].zero_fraction;
  double next_one_portion = path[depth].pweight;
  double total = 0.0;
  if (one_fraction != 0.0) {
    for (int i = depth - 1; i >= 0; --i) {
      const double tmp = next_one_portion / ((i + 1) * one_fraction);
      total += tmp;
      next_one_portion = path[i].pweight - tmp * zero_fraction * (depth - i);
    }
  } else {
    for (int i = depth - 1; i >= 0; --i) total += path[i].pweight / (zero_fraction * (depth - i));
  }
  return total * (depth + 1);
}

struct ShapRecursion {
  const gbdt::Tree& tree;
  std::span<const double> x;
  std::span<double> phi;
  std::vector<PathElement> storage;

  // `path` points at the parent's path; this call writes its own copy right
  // after it, so storage needs (max_depth + 2)^2 elements in total.
  void run(int node_index, int depth, PathElement* parent_path, double parent_zero,
           double parent_one, int parent_feature) {
    PathElement* path = parent_path + depth + 1;
    std::copy(parent_path, parent_path + depth + 1, path);
    extend_path(path, depth, parent_zero, parent_one, parent_feature);

    const gbdt::TreeNode& node = tree.nodes[std::size_t(node_index)];
    if (node.is_leaf()) {
      for (int i = 1; i <= depth; ++i) {
        const double w = unwound_path_sum(path, depth, i);
        const PathElement& el = path[i];
        phi[std::size_t(el.feature)] += w * (el.one_fraction - el.zero_fraction) * node.leaf_value;
      }
      return;
    }

    const int hot = x[std::size_t(node.feature)] < node.threshold ? node.left : node.right;
    const int cold = hot == node.left ? node.right : node.left;
    const double hot_zero = tree.nodes[std::size_t(hot)].cover / node.cover;
    const double cold_zero = tree.nodes[std::size_t(cold)].cover / node.cover;
    double incoming_zero = 1.0;
    double incoming_one = 1.0;

    // A feature already on the path is undone and redone at this node.
    int k = 0;
    for (; k <= depth; ++k) {
      if (path[k].feature == node.feature) break;
    }
    if (k != depth + 1) {
      incoming_zero = path[k].zero_fraction;
      incoming_one = path[k].one_fraction;
      unwind_path(path, depth, k);
      depth -= 1;
    }
    run(hot, depth + 1, path, hot_zero * incoming_zero, incoming_one, node.feature);
    run(cold, depth + 1, path, cold_zero * incoming_zero, 0.0, node.feature);
  }
};

void check_covers(const gbdt::Tree& tree) {
  if (tree.nodes.size() <= 1) return;
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    if (!(tree.nodes[i].cover > 0.0)) {
      throw Error(ErrorCode::kZeroCoverNode, "node " + std::to_string(i) + " has cover " +
                                                 std::to_string(tree.nodes[i].cover));
    }
  }
}

double expected_from(const gbdt::Tree& tree, int index) {
  const gbdt::TreeNode& n = tree.nodes[std::size_t(index)];
  if (n.is_leaf()) return n.leaf_value;
  const double wl = tree.nodes[std::size_t(n.left)].cover / n.cover;
  const double wr = tree.nodes[std::size_t(n.right)].cover / n.cover;
  return wl * expected_from(tree, n.left) + wr * expected_from(tree, n.right);
}

}  // namespace

void tree_shap(const gbdt::Tree& tree, std::span<const double> x, std::span<double> phi) {
  check_covers(tree);
  const int max_depth = tree.depth();
  ShapRecursion rec{tree, x, phi, {}};
  rec.storage.resize(std::size_t((max_depth + 2) * (max_depth + 3)));
  rec.run(0, 0, rec.storage.data(), 1.0, 1.0, -1);
}

double expected_value(const gbdt::Tree& tree) {
  check_covers(tree);
  return expected_from(tree, 0);
}

ShapExplanation shap_values(const gbdt::GbdtModel& model, std::span<const double> x) {
  ShapExplanation out;
  out.margin = gbdt::predict_margin(model, x);  // validates x
  out.values.assign(model.num_features(), 0.0);
  out.base_value = model.base_margin;
  for (const auto& tree : model.trees) {
    tree_shap(tree, x, out.values);
    out.base_value += expected_from(tree, 0);
  }
  return out;
}

namespace {

// Coalition value: features whose bit is set follow x, the rest are averaged
// over both children by cover fraction.
double coalition_value(const gbdt::Tree& tree, int index, std::span<const double> x,
                       const std::vector<int>& slot_of_feature, std::uint32_t mask) {
  const gbdt::TreeNode& n = tree.nodes[std::size_t(index)];
  if (n.is_leaf()) return n.leaf_value;
  const int slot = slot_of_feature[std::size_t(n.feature)];
  if (mask & (1u << slot)) {
    const int next = x[std::size_t(n.feature)] < n.threshold ? n.left : n.right;
    return coalition_value(tree, next, x, slot_of_feature, mask);
  }
  const double wl = tree.nodes[std::size_t(n.left)].cover / n.cover;
  const double wr = tree.nodes[std::size_t(n.right)].cover / n.cover;
  return wl * coalition_value(tree, n.left, x, slot_of_feature, mask) +
         wr * coalition_value(tree, n.right, x, slot_of_feature, mask);
}

}  // namespace

std::vector<double> brute_force_shap(const gbdt::Tree& tree, std::span<const double> x,
                                     std::size_t num_features) {
  check_covers(tree);
  std::set<int> used;
  for (const auto& n : tree.nodes) {
    if (!n.is_leaf()) used.insert(n.feature);
  }
  if (used.size() > kMaxBruteForceFeatures) {
    throw Error(ErrorCode::kTooManyFeatures, std::to_string(used.size()) + " distinct features");
  }
  const std::vector<int> features(used.begin(), used.end());
  const auto m = features.size();
  std::vector<int> slot_of_feature(num_features, -1);
  for (std::size_t s = 0; s < m; ++s) slot_of_feature[std::size_t(features[s])] = int(s);

  std::vector<double> phi(num_features, 0.0);
  if (m == 0) return phi;

  const std::uint32_t n_masks = 1u << m;
  std::vector<double> value(n_masks);
  for (std::uint32_t mask = 0; mask < n_masks; ++mask) {
    value[mask] = coalition_value(tree, 0, x, slot_of_feature, mask);
  }
  // weight[s] = s! (m - s - 1)! / m!
  std::vector<double> weight(m);
  for (std::size_t s = 0; s < m; ++s) {
    double w = 1.0 / double(m);
    // 1 / C(m-1, s)
    for (std::size_t k = 1; k <= s; ++k) w *= double(k) / double(m - 1 - s + k);
    weight[s] = w;
  }
  for (std::size_t i = 0; i < m; ++i) {
    const std::uint32_t bit = 1u << i;
    double total = 0.0;
    for (std::uint32_t mask = 0; mask < n_masks; ++mask) {
      if (mask & bit) continue;
      total += weight[std::size_t(std::popcount(mask))] * (value[mask | bit] - value[mask]);
    }
    phi[std::size_t(features[i])] = total;
  }
  return phi;
}

ImportanceRanking global_importance(const gbdt::GbdtModel& model, const features::FeatureDataset& ds) {
  if (ds.empty()) throw Error(ErrorCode::kEmptyDataset, "importance needs at least one row");
  const std::size_t nf = model.num_features();
  std::vector<double> sum_abs(nf, 0.0);
  for (std::size_t r = 0; r < ds.size(); ++r) {
    const auto e = shap_values(model, ds.x.row(r));
    for (std::size_t f = 0; f < nf; ++f) sum_abs[f] += std::abs(e.values[f]);
  }
  ImportanceRanking ranking(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    ranking[f] = {model.feature_names[f], f, sum_abs[f] / double(ds.size())};
  }
  std::stable_sort(ranking.begin(), ranking.end(), [](const auto& a, const auto& b) {
    return a.mean_abs_shap > b.mean_abs_shap;
  });
  return ranking;
}

std::size_t rank_of(const ImportanceRanking& ranking, std::string_view feature) {
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    if (ranking[i].feature == feature) return i + 1;
  }
  return 0;
}

void write_importance_csv(std::ostream& out, const ImportanceRanking& ranking) {
  out << "rank,feature,mean_abs_shap\n";
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    out << i + 1 << ',' << ranking[i].feature << ',' << csv::fmt(ranking[i].mean_abs_shap) << '\n';
  }
}

void write_explanations_csv(std::ostream& out, const gbdt::GbdtModel& model,
                            const features::FeatureDataset& ds) {
  out << "timestamp,base_value";
  for (const auto& name : model.feature_names) out << ',' << name;
  out << ",margin\n";
  for (std::size_t r = 0; r < ds.size(); ++r) {
    const auto e = shap_values(model, ds.x.row(r));
    out << format_timestamp(ds.timestamps[r]) << ',' << csv::fmt(e.base_value);
    for (double v : e.values) out << ',' << csv::fmt(v);
    out << ',' << csv::fmt(e.margin) << '\n';
  }
}

}  // namespace fogcast::explain
