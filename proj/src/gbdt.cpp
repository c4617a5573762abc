#include "fogcast/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

namespace fogcast::gbdt {

void Hyperparams::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidHyperparams, what); };
  if (n_estimators < 0) fail("n_estimators must be >= 0");
  if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (max_depth < 0) fail("max_depth must be >= 0");
  if (!(subsample > 0.0 && subsample <= 1.0)) fail("subsample must lie in (0, 1]");
  if (!(colsample_bytree > 0.0 && colsample_bytree <= 1.0)) fail("colsample_bytree must lie in (0, 1]");
  if (scale_pos_weight && !(*scale_pos_weight > 0.0)) fail("scale_pos_weight must be > 0");
  if (!(reg_lambda >= 0.0)) fail("reg_lambda must be >= 0");
  if (!(gamma >= 0.0)) fail("gamma must be >= 0");
  if (!(min_child_weight >= 0.0)) fail("min_child_weight must be >= 0");
}

int Tree::leaf_index(std::span<const double> x) const {
  int i = 0;
  while (!nodes[std::size_t(i)].is_leaf()) {
    const TreeNode& n = nodes[std::size_t(i)];
    i = x[std::size_t(n.feature)] < n.threshold ? n.left : n.right;
  }
  return i;
}

double Tree::predict(std::span<const double> x) const {
  return nodes[std::size_t(leaf_index(x))].leaf_value;
}

int Tree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (!nodes[i].is_leaf()) {
      d[std::size_t(nodes[i].left)] = d[i] + 1;
      d[std::size_t(nodes[i].right)] = d[i] + 1;
    }
  }
  return deepest;
}

double compute_scale_pos_weight(std::span<const std::uint8_t> y) {
  std::size_t pos = 0;
  for (auto v : y) pos += v ? 1 : 0;
  const std::size_t neg = y.size() - pos;
  if (pos == 0 || neg == 0) {
    throw Error(ErrorCode::kDegenerateLabels, std::to_string(pos) + " positives, " +
                                                  std::to_string(neg) + " negatives");
  }
  return double(neg) / double(pos);
}

double split_gain(double g_left, double h_left, double g_total, double h_total,
                  const SplitParams& params) {
  const double g_right = g_total - g_left;
  const double h_right = h_total - h_left;
  const double dl = h_left + params.reg_lambda;
  const double dr = h_right + params.reg_lambda;
  const double dp = h_total + params.reg_lambda;
  if (!(dl > 0.0) || !(dr > 0.0) || !(dp > 0.0)) return -std::numeric_limits<double>::infinity();
  return 0.5 * (g_left * g_left / dl + g_right * g_right / dr - g_total * g_total / dp) -
         params.gamma;
}

namespace {

double midpoint(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  // Adjacent doubles: the midpoint may round onto lo, which would send lo right.
  return mid > lo ? mid : hi;
}

// Accumulates one node's rows for one feature in ascending value order and
// keeps the best boundary seen.
class SplitScanner {
 public:
  SplitScanner(double g_total, double h_total, const SplitParams& params)
      : g_total_(g_total), h_total_(h_total), params_(&params) {}

  void push(double value, double g, double h) {
    if (seen_ && value != prev_) consider(midpoint(prev_, value));
    g_left_ += g;
    h_left_ += h;
    prev_ = value;
    seen_ = true;
  }

  const std::optional<SplitCandidate>& best() const { return best_; }

 private:
  void consider(double threshold) {
    const double h_right = h_total_ - h_left_;
    if (h_left_ < params_->min_child_weight || h_right < params_->min_child_weight) return;
    const double gain = split_gain(g_left_, h_left_, g_total_, h_total_, *params_);
    if (!(gain > 0.0)) return;
    if (!best_ || gain > best_->gain) best_ = SplitCandidate{threshold, gain};
  }

  double g_total_;
  double h_total_;
  const SplitParams* params_;
  double g_left_ = 0.0;
  double h_left_ = 0.0;
  double prev_ = 0.0;
  bool seen_ = false;
  std::optional<SplitCandidate> best_;
};

}  // namespace

std::optional<SplitCandidate> find_best_split(std::span<const double> feature_values,
                                              std::span<const double> g,
                                              std::span<const double> h,
                                              const SplitParams& params) {
  const std::size_t n = feature_values.size();
  if (g.size() != n || h.size() != n) {
    throw Error(ErrorCode::kSchemaMismatch, "feature, gradient and hessian lengths differ");
  }
  double g_total = 0.0, h_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    g_total += g[i];
    h_total += h[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return feature_values[a] < feature_values[b];
  });
  SplitScanner scanner(g_total, h_total, params);
  for (std::size_t i : order) scanner.push(feature_values[i], g[i], h[i]);
  return scanner.best();
}

std::optional<FeatureSplit> find_best_split(const Matrix& x, std::span<const double> g,
                                            std::span<const double> h, const SplitParams& params) {
  std::optional<FeatureSplit> best;
  std::vector<double> column(x.rows());
  for (std::size_t f = 0; f < x.cols(); ++f) {
    for (std::size_t r = 0; r < x.rows(); ++r) column[r] = x(r, f);
    auto cand = find_best_split(column, g, h, params);
    if (cand && (!best || cand->gain > best->split.gain)) best = FeatureSplit{f, *cand};
  }
  return best;
}

void logistic_gradients(std::span<const double> margins, std::span<const std::uint8_t> y,
                        double scale_pos_weight, std::span<double> g, std::span<double> h) {
  for (std::size_t i = 0; i < margins.size(); ++i) {
    const double p = sigmoid(margins[i]);
    const double w = y[i] ? scale_pos_weight : 1.0;
    g[i] = w * (p - double(y[i]));
    h[i] = w * p * (1.0 - p);
  }
}

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

}  // namespace

double weighted_logloss(std::span<const double> margins, std::span<const std::uint8_t> y,
                        double scale_pos_weight) {
  double total = 0.0, weight = 0.0;
  for (std::size_t i = 0; i < margins.size(); ++i) {
    const double w = y[i] ? scale_pos_weight : 1.0;
    total += w * (y[i] ? softplus(-margins[i]) : softplus(margins[i]));
    weight += w;
  }
  return weight > 0.0 ? total / weight : 0.0;
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  // Largest multiple of n representable; draws at or above it are rejected.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

namespace {

std::vector<std::size_t> sample_without_replacement(std::mt19937_64& rng, std::size_t n,
                                                    std::size_t k) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + std::size_t(uniform_below(rng, n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

struct NodeState {
  int node_id = -1;
  double g = 0.0;
  double h = 0.0;
  std::optional<FeatureSplit> best;
};

// Grows one tree level by level. Every level makes a single pass over each
// sampled feature's presorted row order, feeding each row into the scanner
// of the node it currently sits in.
Tree grow_tree(const Matrix& x, const std::vector<std::vector<std::uint32_t>>& sorted,
               std::span<const double> g, std::span<const double> h,
               const std::vector<std::size_t>& rows, const std::vector<std::size_t>& columns,
               const Hyperparams& hp) {
  const SplitParams params{hp.reg_lambda, hp.gamma, hp.min_child_weight};
  const std::size_t n = x.rows();
  Tree tree;
  tree.nodes.emplace_back();

  // slot_of[r] indexes `level` for rows in play, -1 otherwise.
  std::vector<int> slot_of(n, -1);
  std::vector<NodeState> level(1);
  level[0].node_id = 0;
  for (std::size_t r : rows) {
    slot_of[r] = 0;
    level[0].g += g[r];
    level[0].h += h[r];
  }

  auto finish_leaf = [&](const NodeState& s) {
    TreeNode& node = tree.nodes[std::size_t(s.node_id)];
    node.cover = s.h;
    const double denom = s.h + hp.reg_lambda;
    node.leaf_value = denom > 0.0 ? -s.g / denom * hp.learning_rate : 0.0;
  };

  for (int depth = 0; depth < hp.max_depth && !level.empty(); ++depth) {
    for (std::size_t f : columns) {
      std::vector<SplitScanner> scanners;
      scanners.reserve(level.size());
      for (const auto& s : level) scanners.emplace_back(s.g, s.h, params);
      for (std::uint32_t r : sorted[f]) {
        const int slot = slot_of[r];
        if (slot >= 0) scanners[std::size_t(slot)].push(x(r, f), g[r], h[r]);
      }
      for (std::size_t s = 0; s < level.size(); ++s) {
        const auto& cand = scanners[s].best();
        if (cand && (!level[s].best || cand->gain > level[s].best->split.gain)) {
          level[s].best = FeatureSplit{f, *cand};
        }
      }
    }

    std::vector<NodeState> next;
    std::vector<int> child_slot(level.size() * 2, -1);
    for (std::size_t s = 0; s < level.size(); ++s) {
      const NodeState& st = level[s];
      if (!st.best) {
        finish_leaf(st);
        continue;
      }
      const int left = int(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      TreeNode& node = tree.nodes[std::size_t(st.node_id)];
      node.feature = int(st.best->feature);
      node.threshold = st.best->split.threshold;
      node.left = left;
      node.right = left + 1;
      node.cover = st.h;
      child_slot[2 * s] = int(next.size());
      next.push_back(NodeState{left, 0.0, 0.0, std::nullopt});
      child_slot[2 * s + 1] = int(next.size());
      next.push_back(NodeState{left + 1, 0.0, 0.0, std::nullopt});
    }
    for (std::size_t r = 0; r < n; ++r) {
      const int slot = slot_of[r];
      if (slot < 0) continue;
      const NodeState& st = level[std::size_t(slot)];
      if (!st.best) {
        slot_of[r] = -1;
        continue;
      }
      const bool go_left = x(r, st.best->feature) < st.best->split.threshold;
      const int ns = child_slot[2 * std::size_t(slot) + (go_left ? 0 : 1)];
      slot_of[r] = ns;
      next[std::size_t(ns)].g += g[r];
      next[std::size_t(ns)].h += h[r];
    }
    level = std::move(next);
  }
  for (const auto& st : level) finish_leaf(st);
  return tree;
}

}  // namespace

GbdtModel train_gbdt(const Matrix& x, std::span<const std::uint8_t> y, const Hyperparams& hp,
                     std::vector<std::string> feature_names, TrainingTrace* trace) {
  hp.validate();
  const std::size_t n = x.rows();
  const std::size_t n_features = x.cols();
  if (n == 0) throw Error(ErrorCode::kEmptyDataset, "no training rows");
  if (y.size() != n || feature_names.size() != n_features) {
    throw Error(ErrorCode::kSchemaMismatch, "labels or feature names do not match the matrix");
  }
  for (double v : x.data()) {
    if (std::isnan(v)) throw Error(ErrorCode::kSchemaMismatch, "training matrix contains NaN");
  }
  // Both classes are required even when the weight is given explicitly.
  const double computed_spw = compute_scale_pos_weight(y);
  const double spw = hp.scale_pos_weight.value_or(computed_spw);

  GbdtModel model;
  model.base_margin = 0.0;
  model.feature_names = std::move(feature_names);
  model.hyperparams = hp;
  model.hyperparams.scale_pos_weight = spw;

  // Presort once: (value, row index) per feature.
  std::vector<std::vector<std::uint32_t>> sorted(n_features, std::vector<std::uint32_t>(n));
  for (std::size_t f = 0; f < n_features; ++f) {
    auto& order = sorted[f];
    std::iota(order.begin(), order.end(), std::uint32_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return x(a, f) < x(b, f); });
  }

  std::mt19937_64 rng(hp.seed);
  const auto n_rows_sampled =
      std::max<std::size_t>(1, std::size_t(std::llround(hp.subsample * double(n))));
  const auto n_cols_sampled = std::max<std::size_t>(
      1, std::size_t(std::ceil(hp.colsample_bytree * double(n_features) - 1e-9)));

  std::vector<double> margins(n, model.base_margin);
  std::vector<double> g(n), h(n);
  std::vector<std::size_t> all_rows(n), all_cols(n_features);
  std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});
  std::iota(all_cols.begin(), all_cols.end(), std::size_t{0});

  if (trace) {
    trace->scale_pos_weight = spw;
    trace->loss.assign(1, weighted_logloss(margins, y, spw));
  }
  model.trees.reserve(std::size_t(hp.n_estimators));
  for (int round = 0; round < hp.n_estimators; ++round) {
    logistic_gradients(margins, y, spw, g, h);
    const auto rows = n_rows_sampled < n ? sample_without_replacement(rng, n, n_rows_sampled) : all_rows;
    const auto cols = n_cols_sampled < n_features
                          ? sample_without_replacement(rng, n_features, n_cols_sampled)
                          : all_cols;
    Tree tree = grow_tree(x, sorted, g, h, rows, cols, hp);
    for (std::size_t r = 0; r < n; ++r) margins[r] += tree.predict(x.row(r));
    model.trees.push_back(std::move(tree));
    if (trace) trace->loss.push_back(weighted_logloss(margins, y, spw));
  }
  return model;
}

GbdtModel train_gbdt(const features::FeatureDataset& train, const Hyperparams& hp,
                     TrainingTrace* trace) {
  GbdtModel model = train_gbdt(train.x, train.y, hp, features::schema_names(), trace);
  model.metadata.horizon_h = train.horizon_h;
  model.metadata.trained_on = train.site;
  if (!train.empty()) {
    model.metadata.trained_on += " " + format_timestamp(train.timestamps.front()) + "/" +
                                 format_timestamp(train.timestamps.back());
  }
  return model;
}

double predict_margin(const GbdtModel& model, std::span<const double> x) {
  if (x.size() != model.num_features()) {
    throw Error(ErrorCode::kSchemaMismatch, "input has " + std::to_string(x.size()) +
                                                " values, model expects " +
                                                std::to_string(model.num_features()));
  }
  for (double v : x) {
    if (std::isnan(v)) throw Error(ErrorCode::kSchemaMismatch, "missing value in input");
  }
  double margin = model.base_margin;
  for (const auto& tree : model.trees) margin += tree.predict(x);
  return margin;
}

double predict_proba(const GbdtModel& model, std::span<const double> x) {
  return sigmoid(predict_margin(model, x));
}

std::vector<double> predict_proba(const GbdtModel& model, const Matrix& x) {
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = predict_proba(model, x.row(r));
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

using json = nlohmann::ordered_json;

json hyperparams_json(const Hyperparams& hp) {
  json j;
  j["n_estimators"] = hp.n_estimators;
  j["learning_rate"] = hp.learning_rate;
  j["max_depth"] = hp.max_depth;
  j["subsample"] = hp.subsample;
  j["colsample_bytree"] = hp.colsample_bytree;
  j["scale_pos_weight"] = hp.scale_pos_weight ? json(*hp.scale_pos_weight) : json(nullptr);
  j["reg_lambda"] = hp.reg_lambda;
  j["gamma"] = hp.gamma;
  j["min_child_weight"] = hp.min_child_weight;
  j["seed"] = hp.seed;
  return j;
}

}  // namespace

std::string persist_model(const GbdtModel& model) {
  json j;
  j["format"] = "fogcast-gbdt";
  j["version"] = kModelFormatVersion;
  j["objective"] = "binary:logistic";
  j["base_margin"] = model.base_margin;
  j["schema"] = model.feature_names;
  j["hyperparams"] = hyperparams_json(model.hyperparams);
  j["metadata"] = {{"trained_on", model.metadata.trained_on},
                   {"label_definition", model.metadata.label_definition},
                   {"horizon_h", model.metadata.horizon_h}};
  json trees = json::array();
  for (const auto& tree : model.trees) {
    std::vector<int> parent(tree.nodes.size(), -1);
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      if (!tree.nodes[i].is_leaf()) {
        parent[std::size_t(tree.nodes[i].left)] = int(i);
        parent[std::size_t(tree.nodes[i].right)] = int(i);
      }
    }
    json nodes = json::array();
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      const TreeNode& n = tree.nodes[i];
      nodes.push_back({{"id", i},
                       {"parent", parent[i]},
                       {"left", n.left},
                       {"right", n.right},
                       {"feature", n.feature},
                       {"threshold", n.threshold},
                       {"leaf_value", n.leaf_value},
                       {"cover", n.cover}});
    }
    trees.push_back({{"nodes", std::move(nodes)}});
  }
  j["trees"] = std::move(trees);
  return j.dump(1) + "\n";
}

GbdtModel restore_model(std::string_view bytes) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptModelFile, e.what());
  }
  try {
    if (!j.is_object() || j.value("format", "") != "fogcast-gbdt") {
      throw Error(ErrorCode::kCorruptModelFile, "not a fogcast model file");
    }
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw Error(ErrorCode::kVersionMismatch, "model version " + std::to_string(version) +
                                                   ", this build reads " +
                                                   std::to_string(kModelFormatVersion));
    }
    GbdtModel m;
    m.base_margin = j.at("base_margin").get<double>();
    m.feature_names = j.at("schema").get<std::vector<std::string>>();
    const auto& hp = j.at("hyperparams");
    m.hyperparams.n_estimators = hp.at("n_estimators").get<int>();
    m.hyperparams.learning_rate = hp.at("learning_rate").get<double>();
    m.hyperparams.max_depth = hp.at("max_depth").get<int>();
    m.hyperparams.subsample = hp.at("subsample").get<double>();
    m.hyperparams.colsample_bytree = hp.at("colsample_bytree").get<double>();
    if (!hp.at("scale_pos_weight").is_null()) {
      m.hyperparams.scale_pos_weight = hp.at("scale_pos_weight").get<double>();
    }
    m.hyperparams.reg_lambda = hp.at("reg_lambda").get<double>();
    m.hyperparams.gamma = hp.at("gamma").get<double>();
    m.hyperparams.min_child_weight = hp.at("min_child_weight").get<double>();
    m.hyperparams.seed = hp.at("seed").get<std::uint64_t>();
    const auto& md = j.at("metadata");
    m.metadata.trained_on = md.at("trained_on").get<std::string>();
    m.metadata.label_definition = md.at("label_definition").get<std::string>();
    m.metadata.horizon_h = md.at("horizon_h").get<int>();

    const auto n_features = int(m.feature_names.size());
    for (const auto& jt : j.at("trees")) {
      Tree tree;
      const auto& nodes = jt.at("nodes");
      if (nodes.empty()) throw Error(ErrorCode::kCorruptModelFile, "tree without nodes");
      const int count = int(nodes.size());
      for (int i = 0; i < count; ++i) {
        const auto& jn = nodes[std::size_t(i)];
        TreeNode n;
        n.left = jn.at("left").get<int>();
        n.right = jn.at("right").get<int>();
        n.feature = jn.at("feature").get<int>();
        n.threshold = jn.at("threshold").get<double>();
        n.leaf_value = jn.at("leaf_value").get<double>();
        n.cover = jn.at("cover").get<double>();
        const bool leaf = n.left < 0 && n.right < 0;
        // Children always follow their parent, which rules out cycles.
        const bool internal_ok = n.left > i && n.left < count && n.right > i && n.right < count &&
                                 n.feature >= 0 && n.feature < n_features;
        if (!leaf && !internal_ok) {
          throw Error(ErrorCode::kCorruptModelFile, "invalid node " + std::to_string(i));
        }
        tree.nodes.push_back(n);
      }
      m.trees.push_back(std::move(tree));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptModelFile, e.what());
  }
}

}  // namespace fogcast::gbdt
