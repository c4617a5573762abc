#include "fogcast/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "csv.hpp"
#include "fogcast/gbdt.hpp"

namespace fogcast::eval {

namespace {

void check_sizes(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::kSchemaMismatch, "scores and labels differ in length");
  }
}

struct Block {
  double score;
  std::size_t pos;
  std::size_t neg;
};

// Equal-score groups in descending score order.
std::vector<Block> descending_blocks(std::span<const double> scores,
                                     std::span<const std::uint8_t> labels) {
  check_sizes(scores, labels);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<Block> blocks;
  for (std::size_t i : order) {
    if (blocks.empty() || scores[i] != blocks.back().score) blocks.push_back({scores[i], 0, 0});
    (labels[i] ? blocks.back().pos : blocks.back().neg) += 1;
  }
  return blocks;
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : double(num) / double(den);
}

}  // namespace

ThresholdMetrics metrics_from(const Confusion& c) {
  ThresholdMetrics m;
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  const double pr = m.precision + m.recall;
  m.f1 = pr > 0.0 ? 2.0 * m.precision * m.recall / pr : 0.0;
  const double a = double(c.tp + c.fp);
  const double b = double(c.tp + c.fn);
  const double d = double(c.tn + c.fp);
  const double e = double(c.tn + c.fn);
  if (a > 0 && b > 0 && d > 0 && e > 0) {
    m.mcc = (double(c.tp) * double(c.tn) - double(c.fp) * double(c.fn)) / std::sqrt(a * b * d * e);
  }
  return m;
}

Confusion confusion_at(std::span<const double> scores, std::span<const std::uint8_t> labels,
                       double threshold) {
  check_sizes(scores, labels);
  Confusion c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i]) (predicted ? c.tp : c.fn) += 1;
    else (predicted ? c.fp : c.tn) += 1;
  }
  return c;
}

Curve roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const auto blocks = descending_blocks(scores, labels);
  std::size_t p = 0, n = 0;
  for (const auto& b : blocks) {
    p += b.pos;
    n += b.neg;
  }
  Curve curve{{0.0, 0.0}};
  std::size_t tp = 0, fp = 0;
  for (const auto& b : blocks) {
    tp += b.pos;
    fp += b.neg;
    curve.emplace_back(ratio(fp, n), ratio(tp, p));
  }
  return curve;
}

Curve pr_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const auto blocks = descending_blocks(scores, labels);
  std::size_t p = 0;
  for (const auto& b : blocks) p += b.pos;
  Curve curve;
  std::size_t tp = 0, fp = 0;
  for (const auto& b : blocks) {
    tp += b.pos;
    fp += b.neg;
    curve.emplace_back(ratio(tp, p), ratio(tp, tp + fp));
  }
  return curve;
}

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const auto blocks = descending_blocks(scores, labels);
  // Walking from the top, every negative seen so far outranks the current
  // block's positives. Counts stay integral (halves for ties) and exact.
  double wrong = 0.0;
  std::size_t neg_above = 0, p = 0;
  for (const auto& b : blocks) {
    wrong += double(b.pos) * double(neg_above) + 0.5 * double(b.pos) * double(b.neg);
    neg_above += b.neg;
    p += b.pos;
  }
  if (p == 0 || neg_above == 0) {
    throw Error(ErrorCode::kSingleClass, "AUC needs both classes");
  }
  const double pairs = double(p) * double(neg_above);
  return (pairs - wrong) / pairs;
}

double average_precision(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const auto blocks = descending_blocks(scores, labels);
  std::size_t p = 0;
  for (const auto& b : blocks) p += b.pos;
  if (p == 0) throw Error(ErrorCode::kNoPositives, "average precision needs a positive");
  double ap = 0.0;
  std::size_t tp = 0, fp = 0;
  for (const auto& b : blocks) {
    tp += b.pos;
    fp += b.neg;
    ap += double(b.pos) / double(p) * double(tp) / double(tp + fp);
  }
  return ap;
}

EvalReport classification_report(std::span<const double> scores,
                                 std::span<const std::uint8_t> labels, double threshold) {
  check_sizes(scores, labels);
  if (scores.empty()) throw Error(ErrorCode::kEmptyDataset, "report needs at least one sample");
  EvalReport r;
  r.threshold = threshold;
  r.confusion = confusion_at(scores, labels, threshold);
  const auto m = metrics_from(r.confusion);
  r.precision = m.precision;
  r.recall = m.recall;
  r.f1 = m.f1;
  r.mcc = m.mcc;
  const std::size_t p = r.confusion.tp + r.confusion.fn;
  r.base_rate = double(p) / double(scores.size());
  if (p > 0 && p < scores.size()) r.auc = roc_auc(scores, labels);
  if (p > 0) r.auprc = average_precision(scores, labels);
  r.roc_points = roc_curve(scores, labels);
  r.pr_points = pr_curve(scores, labels);
  return r;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["auc"] = auc ? nlohmann::ordered_json(*auc) : nullptr;
  j["auprc"] = auprc ? nlohmann::ordered_json(*auprc) : nullptr;
  j["threshold"] = threshold;
  j["precision"] = precision;
  j["recall"] = recall;
  j["f1"] = f1;
  j["mcc"] = mcc;
  j["confusion"] = {{"tp", confusion.tp}, {"fp", confusion.fp}, {"tn", confusion.tn}, {"fn", confusion.fn}};
  j["base_rate"] = base_rate;
  auto points = [](const Curve& c) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& [x, y] : c) arr.push_back({x, y});
    return arr;
  };
  j["roc_points"] = points(roc_points);
  j["pr_points"] = points(pr_points);
  return j.dump(2) + "\n";
}

Calibration calibrate_threshold(std::span<const double> scores,
                                std::span<const std::uint8_t> labels, Objective objective) {
  const auto blocks = descending_blocks(scores, labels);
  std::size_t p = 0, n = 0;
  for (const auto& b : blocks) {
    p += b.pos;
    n += b.neg;
  }
  if (p == 0 || n == 0) throw Error(ErrorCode::kSingleClass, "calibration needs both classes");

  std::optional<double> chosen;
  double best_f1 = -1.0;
  Confusion c{0, 0, n, p};
  for (const auto& b : blocks) {
    c.tp += b.pos;
    c.fn -= b.pos;
    c.fp += b.neg;
    c.tn -= b.neg;
    const auto m = metrics_from(c);
    if (objective.kind == Objective::Kind::kMaxF1) {
      // Descending scan: only a strict improvement moves to a lower threshold.
      if (m.f1 > best_f1) {
        best_f1 = m.f1;
        chosen = b.score;
      }
    } else if (m.recall >= objective.min_recall) {
      chosen = b.score;
      break;
    }
  }
  if (!chosen) {
    throw Error(ErrorCode::kUnachievableRecall,
                "no threshold reaches recall " + csv::fmt(objective.min_recall));
  }
  return {*chosen, classification_report(scores, labels, *chosen)};
}

PersistenceScores persistence_baseline(const features::FeatureDataset& ds) {
  if (ds.standardized) {
    throw Error(ErrorCode::kSchemaMismatch, "persistence needs unscaled visibility");
  }
  PersistenceScores s;
  s.binary.reserve(ds.size());
  s.continuous.reserve(ds.size());
  for (std::size_t r = 0; r < ds.size(); ++r) {
    const double vis = ds.x(r, features::kVisibilidadActual);
    s.binary.push_back(vis < features::kFogVisibilityKm ? 1.0 : 0.0);
    s.continuous.push_back(-vis);
  }
  return s;
}

double ClimatologyTable::score(Timestamp ts) const {
  return rates[std::size_t(utc_month(ts) - 1)][std::size_t(utc_hour(ts))];
}

ClimatologyTable fit_climatology(const features::FeatureDataset& train) {
  if (train.empty()) throw Error(ErrorCode::kEmptyTraining, "climatology needs training rows");
  ClimatologyTable t;
  std::array<std::array<std::size_t, 24>, 12> fog{};
  std::size_t fog_total = 0;
  for (std::size_t r = 0; r < train.size(); ++r) {
    const auto m = std::size_t(utc_month(train.timestamps[r]) - 1);
    const auto h = std::size_t(utc_hour(train.timestamps[r]));
    t.counts[m][h] += 1;
    fog[m][h] += train.y[r];
    fog_total += train.y[r];
  }
  t.global_rate = double(fog_total) / double(train.size());
  for (std::size_t m = 0; m < 12; ++m) {
    for (std::size_t h = 0; h < 24; ++h) {
      t.rates[m][h] = t.counts[m][h] ? double(fog[m][h]) / double(t.counts[m][h]) : t.global_rate;
    }
  }
  return t;
}

std::vector<double> climatology_baseline(const features::FeatureDataset& train,
                                         const features::FeatureDataset& test) {
  const auto table = fit_climatology(train);
  std::vector<double> scores;
  scores.reserve(test.size());
  for (auto ts : test.timestamps) scores.push_back(table.score(ts));
  return scores;
}

double LinearModel::margin(std::span<const double> row) const {
  double z = bias;
  for (std::size_t j = 0; j < features.size(); ++j) z += weights[j] * row[features[j]];
  return z;
}

std::vector<double> LinearModel::scores(const Matrix& x) const {
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = score(x.row(r));
  return out;
}

namespace {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double linear_margin(const Matrix& x, std::size_t r, std::span<const double> params) {
  const std::size_t k = x.cols();
  double z = params[k];
  for (std::size_t j = 0; j < k; ++j) z += params[j] * x(r, j);
  return z;
}

void check_problem(const Matrix& x, std::span<const std::uint8_t> y,
                   std::span<const double> sample_weight, std::span<const double> params) {
  if (y.size() != x.rows() || sample_weight.size() != x.rows() || params.size() != x.cols() + 1) {
    throw Error(ErrorCode::kSchemaMismatch, "logistic problem shapes disagree");
  }
}

}  // namespace

double logistic_loss(const Matrix& x, std::span<const std::uint8_t> y,
                     std::span<const double> sample_weight, std::span<const double> params) {
  check_problem(x, y, sample_weight, params);
  double loss = 0.0, wsum = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double z = linear_margin(x, r, params);
    loss += sample_weight[r] * (softplus(z) - (y[r] ? z : 0.0));
    wsum += sample_weight[r];
  }
  return loss / wsum;
}

void logistic_gradient(const Matrix& x, std::span<const std::uint8_t> y,
                       std::span<const double> sample_weight, std::span<const double> params,
                       std::span<double> grad) {
  check_problem(x, y, sample_weight, params);
  const std::size_t k = x.cols();
  std::fill(grad.begin(), grad.end(), 0.0);
  double wsum = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double resid = sample_weight[r] * (sigmoid(linear_margin(x, r, params)) - y[r]);
    for (std::size_t j = 0; j < k; ++j) grad[j] += resid * x(r, j);
    grad[k] += resid;
    wsum += sample_weight[r];
  }
  for (double& g : grad) g /= wsum;
}

std::vector<double> logistic_sample_weights(std::span<const std::uint8_t> y,
                                            const LogisticConfig& config) {
  double spw = 1.0;
  if (config.class_weighting) {
    spw = config.scale_pos_weight.value_or(gbdt::compute_scale_pos_weight(y));
  }
  std::vector<double> w(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) w[i] = y[i] ? spw : 1.0;
  return w;
}

LinearModel fit_logistic(const Matrix& x, std::span<const std::uint8_t> y,
                         const LogisticConfig& config, std::vector<std::size_t> features) {
  if (features.size() != x.cols()) {
    throw Error(ErrorCode::kSchemaMismatch, "feature list does not match matrix width");
  }
  // Validates both classes even when class weighting is off.
  (void)gbdt::compute_scale_pos_weight(y);
  const auto w = logistic_sample_weights(y, config);
  std::vector<double> params(x.cols() + 1, 0.0), grad(params.size());
  for (int it = 0; it < config.iterations; ++it) {
    logistic_gradient(x, y, w, params, grad);
    for (std::size_t j = 0; j < params.size(); ++j) params[j] -= config.learning_rate * grad[j];
  }
  LinearModel model;
  model.features = std::move(features);
  model.weights.assign(params.begin(), params.end() - 1);
  model.bias = params.back();
  return model;
}

LinearModel train_logistic(const features::FeatureDataset& train, const LogisticConfig& config) {
  Matrix sub(train.size(), kLogisticFeatures.size());
  for (std::size_t r = 0; r < train.size(); ++r) {
    for (std::size_t j = 0; j < kLogisticFeatures.size(); ++j) sub(r, j) = train.x(r, kLogisticFeatures[j]);
  }
  LinearModel m = fit_logistic(sub, train.y, config, {kLogisticFeatures.begin(), kLogisticFeatures.end()});
  return m;
}

void emit_curves(const EvalReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  auto write = [&](const std::filesystem::path& file, const char* header, const Curve& curve) {
    std::ofstream out(file);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + file.string());
    out << header << '\n';
    for (const auto& [a, b] : curve) out << csv::fmt(a) << ',' << csv::fmt(b) << '\n';
    if (!out) throw Error(ErrorCode::kIoError, "write failed for " + file.string());
  };
  write(dir / "roc.csv", "fpr,tpr", report.roc_points);
  write(dir / "pr.csv", "recall,precision", report.pr_points);
}

}  // namespace fogcast::eval
