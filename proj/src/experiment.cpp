#include "fogcast/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "csv.hpp"

namespace fogcast::experiment {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string_view to_string(Role r) { return r == Role::kTrain ? "train" : "transfer"; }

void ExperimentConfig::validate() const {
  const auto n_train = std::count_if(sites.begin(), sites.end(),
                                     [](const SiteSource& s) { return s.role == Role::kTrain; });
  if (n_train != 1) {
    throw Error(ErrorCode::kConfigError,
                "exactly one site must have role train, found " + std::to_string(n_train));
  }
  std::set<std::string> names;
  for (const auto& s : sites) {
    if (s.meta.icao.empty()) throw Error(ErrorCode::kConfigError, "site without icao");
    if (!names.insert(s.meta.icao).second) {
      throw Error(ErrorCode::kConfigError, "duplicate site " + s.meta.icao);
    }
    const int kinds = int(s.synthetic.has_value()) + int(!s.series_path.empty()) +
                      int(!s.metar_path.empty() || !s.era5_path.empty());
    if (kinds != 1) {
      throw Error(ErrorCode::kConfigError,
                  "site " + s.meta.icao + " needs exactly one of synthetic, series_path or metar_path+era5_path");
    }
    if (!s.metar_path.empty() != !s.era5_path.empty()) {
      throw Error(ErrorCode::kConfigError, "site " + s.meta.icao + " needs both metar_path and era5_path");
    }
    if (s.synthetic) s.synthetic->validate();
  }
  if (train_range.empty() || test_range.empty()) {
    throw Error(ErrorCode::kConfigError, "train_range and test_range must be non-empty");
  }
  if (train_range.overlaps(test_range)) {
    throw Error(ErrorCode::kOverlappingRanges, "train_range and test_range overlap");
  }
  if (horizon_h < 1) throw Error(ErrorCode::kConfigError, "horizon_h must be >= 1");
  if (!std::isfinite(threshold)) throw Error(ErrorCode::kConfigError, "threshold must be finite");
  hyperparams.validate();
}

const SiteSource& ExperimentConfig::train_site() const {
  for (const auto& s : sites) {
    if (s.role == Role::kTrain) return s;
  }
  throw Error(ErrorCode::kConfigError, "no train site");
}

// ---------------------------------------------------------------------------
// Config document

namespace {

void reject_unknown(const json& obj, std::initializer_list<std::string_view> known, const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw Error(ErrorCode::kConfigError, "unknown key '" + key + "' in " + where);
    }
  }
}

TimeRange parse_range(const json& j, const std::string& name) {
  if (j.contains("years")) {
    const auto years = j.at("years").get<std::vector<int>>();
    if (years.size() != 2) throw Error(ErrorCode::kConfigError, name + ".years needs [first, last]");
    return TimeRange::years(years[0], years[1]);
  }
  // Half-open [from, to).
  return {parse_timestamp(j.at("from").get<std::string>()), parse_timestamp(j.at("to").get<std::string>())};
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

synth::SyntheticSiteSpec parse_synthetic(const json& j, const std::string& icao) {
  reject_unknown(j, {"lat", "lon", "elevation", "n_days", "seed", "fog_propensity", "regime", "start_year"},
                 "synthetic");
  synth::SyntheticSiteSpec s;
  s.icao = icao;
  s.lat_deg = j.at("lat").get<double>();
  s.lon_deg = j.at("lon").get<double>();
  s.elevation_m = j.value("elevation", s.elevation_m);
  s.n_days = j.value("n_days", s.n_days);
  s.seed = j.value("seed", s.seed);
  s.fog_propensity = j.value("fog_propensity", s.fog_propensity);
  s.regime = synth::parse_regime(j.value("regime", std::string("radiative")));
  s.start_year = j.value("start_year", s.start_year);
  return s;
}

SiteSource parse_site(const json& j, const fs::path& base) {
  reject_unknown(j, {"icao", "role", "lat", "lon", "elevation", "synthetic", "series_path", "metar_path",
                     "era5_path", "report_month"},
                 "site");
  SiteSource s;
  s.meta.icao = j.at("icao").get<std::string>();
  const auto role = j.at("role").get<std::string>();
  if (role == "train") s.role = Role::kTrain;
  else if (role == "transfer") s.role = Role::kTransfer;
  else throw Error(ErrorCode::kConfigError, "site role must be train or transfer, got '" + role + "'");

  if (j.contains("synthetic")) {
    s.synthetic = parse_synthetic(j.at("synthetic"), s.meta.icao);
    s.meta.lat_deg = s.synthetic->lat_deg;
    s.meta.lon_deg = s.synthetic->lon_deg;
    s.meta.elevation_m = s.synthetic->elevation_m;
  } else {
    s.meta.lat_deg = j.at("lat").get<double>();
    s.meta.lon_deg = j.at("lon").get<double>();
    s.meta.elevation_m = j.value("elevation", 0.0);
  }
  if (j.contains("series_path")) s.series_path = resolve(base, j.at("series_path").get<std::string>());
  if (j.contains("metar_path")) s.metar_path = resolve(base, j.at("metar_path").get<std::string>());
  if (j.contains("era5_path")) s.era5_path = resolve(base, j.at("era5_path").get<std::string>());
  if (j.contains("report_month")) {
    // "YYYY-MM"
    const auto text = j.at("report_month").get<std::string>();
    const Timestamp ts = parse_timestamp(text + "-01 00:00");
    s.report_month = {utc_year(ts), unsigned(utc_month(ts))};
  }
  return s;
}

gbdt::Hyperparams parse_hyperparams(const json& j) {
  reject_unknown(j, {"n_estimators", "learning_rate", "max_depth", "subsample", "colsample_bytree",
                     "scale_pos_weight", "reg_lambda", "gamma", "min_child_weight"},
                 "hyperparams");
  gbdt::Hyperparams hp;
  hp.n_estimators = j.value("n_estimators", hp.n_estimators);
  hp.learning_rate = j.value("learning_rate", hp.learning_rate);
  hp.max_depth = j.value("max_depth", hp.max_depth);
  hp.subsample = j.value("subsample", hp.subsample);
  hp.colsample_bytree = j.value("colsample_bytree", hp.colsample_bytree);
  if (j.contains("scale_pos_weight") && !j.at("scale_pos_weight").is_null()) {
    hp.scale_pos_weight = j.at("scale_pos_weight").get<double>();
  }
  hp.reg_lambda = j.value("reg_lambda", hp.reg_lambda);
  hp.gamma = j.value("gamma", hp.gamma);
  hp.min_child_weight = j.value("min_child_weight", hp.min_child_weight);
  return hp;
}

eval::LogisticConfig parse_logistic(const json& j) {
  reject_unknown(j, {"learning_rate", "iterations", "class_weighting"}, "logistic");
  eval::LogisticConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.iterations = j.value("iterations", c.iterations);
  c.class_weighting = j.value("class_weighting", c.class_weighting);
  return c;
}

}  // namespace

ExperimentConfig parse_config(std::string_view json_text, const fs::path& base_dir) {
  ExperimentConfig c;
  try {
    const json j = json::parse(json_text.begin(), json_text.end());
    reject_unknown(j, {"sites", "train_range", "test_range", "horizon_h", "hyperparams", "threshold",
                       "output_dir", "seed", "logistic", "importance_max_rows"},
                   "config");
    for (const auto& s : j.at("sites")) c.sites.push_back(parse_site(s, base_dir));
    c.train_range = parse_range(j.at("train_range"), "train_range");
    c.test_range = parse_range(j.at("test_range"), "test_range");
    c.horizon_h = j.value("horizon_h", c.horizon_h);
    if (j.contains("hyperparams")) c.hyperparams = parse_hyperparams(j.at("hyperparams"));
    c.threshold = j.value("threshold", c.threshold);
    if (j.contains("output_dir")) c.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
    c.seed = j.value("seed", c.seed);
    if (j.contains("logistic")) c.logistic = parse_logistic(j.at("logistic"));
    c.importance_max_rows = j.value("importance_max_rows", c.importance_max_rows);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("config: ") + e.what());
  } catch (const Error& e) {
    if (exit_code_for(e.code()) == kExitConfig) throw;
    throw Error(ErrorCode::kConfigError, std::string("config: ") + e.what());
  }
  c.hyperparams.seed = c.seed;
  return c;
}

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kConfigError, "cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

// ---------------------------------------------------------------------------
// Site loading

ingest::Era5LoadResult load_era5_for_site(std::istream& in, const ingest::SiteMeta& meta) {
  std::string header_line;
  if (!std::getline(in, header_line)) return ingest::load_era5_csv(in);
  const csv::Header header(header_line);
  const auto c_lat = header.find("lat");
  const auto c_lon = header.find("lon");
  if (!c_lat || !c_lon) {
    std::istringstream rest(header_line + "\n" + std::string(std::istreambuf_iterator<char>(in), {}));
    return ingest::load_era5_csv(rest);
  }

  std::map<std::pair<double, double>, std::string> by_point;
  std::string line;
  while (std::getline(in, line)) {
    if (csv::trim(line).empty()) continue;
    const auto cells = csv::split(line);
    if (cells.size() <= std::max(*c_lat, *c_lon)) continue;
    const auto lat = csv::to_double(cells[*c_lat]);
    const auto lon = csv::to_double(cells[*c_lon]);
    if (!lat || !lon) continue;
    by_point[{*lat, *lon}] += line + "\n";
  }
  std::vector<ingest::GridPoint> grid;
  for (const auto& [key, _] : by_point) grid.push_back({key.first, key.second});
  const auto nearest = ingest::nearest_grid_point(meta.lat_deg, meta.lon_deg, grid);
  std::istringstream chosen(header_line + "\n" + by_point[{nearest.lat_deg, nearest.lon_deg}]);
  return ingest::load_era5_csv(chosen);
}

ingest::SiteSeries load_site(const SiteSource& source) {
  if (source.synthetic) {
    auto spec = *source.synthetic;
    spec.icao = source.meta.icao;
    auto series = synth::synthesize_site(spec);
    series.meta = source.meta;
    return series;
  }
  if (!source.series_path.empty()) {
    std::ifstream in(source.series_path);
    if (!in) throw Error(ErrorCode::kIoError, "cannot read " + source.series_path.string());
    return ingest::read_series_csv(in, source.meta);
  }
  std::ifstream metar(source.metar_path);
  if (!metar) throw Error(ErrorCode::kIoError, "cannot read " + source.metar_path.string());
  std::vector<ingest::MetarRecord> records;
  if (source.metar_path.extension() == ".csv") {
    records = ingest::load_asos_csv(metar).records;
  } else {
    records = ingest::parse_metar_lines(metar, source.report_month).records;
  }
  std::ifstream era5(source.era5_path);
  if (!era5) throw Error(ErrorCode::kIoError, "cannot read " + source.era5_path.string());
  const auto reanalysis = load_era5_for_site(era5, source.meta);
  return ingest::build_hourly_series(records, reanalysis.records, source.meta);
}

// ---------------------------------------------------------------------------
// Hashing

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kInvariantViolation, "SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

// ---------------------------------------------------------------------------
// Experiment

namespace {

features::FeatureDataset importance_rows(const features::FeatureDataset& ds, std::size_t max_rows) {
  if (max_rows == 0 || ds.size() <= max_rows) return ds;
  std::vector<std::size_t> rows(max_rows);
  for (std::size_t i = 0; i < max_rows; ++i) rows[i] = i * ds.size() / max_rows;
  return features::select_rows(ds, rows);
}

std::vector<double> logistic_scores(const eval::LinearModel& m, const features::FeatureDataset& ds) {
  return m.scores(ds.x);
}

struct FittedPipeline {
  features::ScalerStats scaler;
  gbdt::GbdtModel model;
};

struct TrainSplit {
  features::FeatureDataset train;  // unscaled
  features::FeatureDataset test;   // unscaled
};

TrainSplit split_train_site(const ingest::SiteSeries& series, const ExperimentConfig& cfg, int horizon) {
  const auto all = features::assemble_features(series, horizon);
  auto split = features::split_by_period(all, cfg.train_range, cfg.test_range);
  if (split.train.empty()) throw Error(ErrorCode::kEmptyDataset, "no training rows inside train_range");
  if (split.test.empty()) throw Error(ErrorCode::kEmptyDataset, "no holdout rows inside test_range");
  return {std::move(split.train), std::move(split.test)};
}

FittedPipeline fit_pipeline(const features::FeatureDataset& train, const ExperimentConfig& cfg) {
  FittedPipeline p;
  p.scaler = features::fit_scaler(train);
  gbdt::Hyperparams hp = cfg.hyperparams;
  hp.seed = cfg.seed;
  p.model = gbdt::train_gbdt(features::apply_scaler(p.scaler, train), hp);
  return p;
}

ojson report_value(const eval::EvalReport& r) { return ojson::parse(r.to_json()); }

std::string opt(const std::optional<double>& v) { return v ? csv::fmt(*v) : ""; }

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  make_dirs(cfg.output_dir);

  const SiteSource& train_src = cfg.train_site();
  const auto split = split_train_site(load_site(train_src), cfg, cfg.horizon_h);
  const auto fitted = fit_pipeline(split.train, cfg);
  const auto train_scaled = features::apply_scaler(fitted.scaler, split.train);
  const auto logistic = eval::train_logistic(train_scaled, cfg.logistic);
  const auto climatology = eval::fit_climatology(split.train);

  const fs::path model_path = cfg.output_dir / "model.json";
  const fs::path scaler_path = cfg.output_dir / "scaler.json";
  write_file(model_path, gbdt::persist_model(fitted.model));
  write_file(scaler_path, features::scaler_json(fitted.scaler));

  ExperimentResult result;
  result.model_sha256_before = sha256_file(model_path);
  result.scaler_sha256_before = sha256_file(scaler_path);

  // Every site, the holdout included, is scored from the files on disk.
  result.model = gbdt::restore_model(read_file(model_path));
  {
    std::ifstream in(scaler_path);
    result.scaler = features::parse_scaler_json(in);
  }
  const gbdt::GbdtModel& model = result.model;
  const features::ScalerStats& scaler = result.scaler;

  auto evaluate_site = [&](const std::string& icao, Role role, const features::FeatureDataset& raw) {
    SiteOutcome o;
    o.icao = icao;
    o.role = role;
    o.data = features::apply_scaler(scaler, raw);
    o.scores = gbdt::predict_proba(model, o.data.x);
    o.report = eval::classification_report(o.scores, o.data.y, cfg.threshold);

    const auto persistence = eval::persistence_baseline(raw);
    o.baselines.persistence = eval::classification_report(persistence.binary, raw.y, 0.5);
    // -vis >= next(-1) exactly when vis < 1.
    o.baselines.persistence_continuous = eval::classification_report(
        persistence.continuous, raw.y, std::nextafter(-features::kFogVisibilityKm, 0.0));
    std::vector<double> clim;
    clim.reserve(raw.size());
    for (auto ts : raw.timestamps) clim.push_back(climatology.score(ts));
    o.baselines.climatology = eval::classification_report(clim, raw.y, cfg.threshold);
    o.baselines.logistic =
        eval::classification_report(logistic_scores(logistic, o.data), raw.y, cfg.threshold);

    o.importance = explain::global_importance(model, importance_rows(o.data, cfg.importance_max_rows));
    return o;
  };

  result.sites.push_back(evaluate_site(train_src.meta.icao, Role::kTrain, split.test));
  for (const auto& src : cfg.sites) {
    if (src.role != Role::kTransfer) continue;
    const auto raw = features::assemble_features(load_site(src), cfg.horizon_h);
    if (raw.empty()) throw Error(ErrorCode::kEmptyDataset, "site " + src.meta.icao + " has no usable rows");
    result.sites.push_back(evaluate_site(src.meta.icao, Role::kTransfer, raw));
  }

  result.model_sha256_after = sha256_file(model_path);
  result.scaler_sha256_after = sha256_file(scaler_path);
  if (result.model_sha256_after != result.model_sha256_before ||
      result.scaler_sha256_after != result.scaler_sha256_before) {
    throw Error(ErrorCode::kInvariantViolation, "model or scaler file changed during transfer evaluation");
  }

  std::ostringstream summary;
  summary << "site,role,rows,base_rate,auc,auprc,precision,recall,f1,mcc,persistence_auc,"
             "persistence_continuous_auc,climatology_auc,logistic_auc\n";
  ojson sites = ojson::array();
  for (const auto& o : result.sites) {
    const fs::path dir = cfg.output_dir / "sites" / o.icao;
    make_dirs(dir);
    write_file(dir / "report.json", o.report.to_json());
    ojson baselines;
    baselines["persistence"] = report_value(o.baselines.persistence);
    baselines["persistence_continuous"] = report_value(o.baselines.persistence_continuous);
    baselines["climatology"] = report_value(o.baselines.climatology);
    baselines["logistic"] = report_value(o.baselines.logistic);
    write_file(dir / "baselines.json", baselines.dump(2) + "\n");
    eval::emit_curves(o.report, dir);
    {
      std::ostringstream imp;
      explain::write_importance_csv(imp, o.importance);
      write_file(dir / "importance.csv", imp.str());
    }
    const auto& r = o.report;
    summary << o.icao << ',' << to_string(o.role) << ',' << o.data.size() << ',' << csv::fmt(r.base_rate)
            << ',' << opt(r.auc) << ',' << opt(r.auprc) << ',' << csv::fmt(r.precision) << ','
            << csv::fmt(r.recall) << ',' << csv::fmt(r.f1) << ',' << csv::fmt(r.mcc) << ','
            << opt(o.baselines.persistence.auc) << ',' << opt(o.baselines.persistence_continuous.auc)
            << ',' << opt(o.baselines.climatology.auc) << ',' << opt(o.baselines.logistic.auc) << '\n';
    ojson s;
    s["icao"] = o.icao;
    s["role"] = to_string(o.role);
    s["rows"] = o.data.size();
    s["auc"] = r.auc ? ojson(*r.auc) : ojson(nullptr);
    s["top_feature"] = o.importance.empty() ? "" : o.importance.front().feature;
    sites.push_back(s);
  }
  write_file(cfg.output_dir / "summary.csv", summary.str());

  ojson manifest;
  manifest["train_site"] = train_src.meta.icao;
  manifest["horizon_h"] = cfg.horizon_h;
  manifest["threshold"] = cfg.threshold;
  manifest["seed"] = cfg.seed;
  manifest["train_rows"] = split.train.size();
  manifest["model_file"] = "model.json";
  manifest["model_sha256"] = result.model_sha256_before;
  manifest["scaler_file"] = "scaler.json";
  manifest["scaler_sha256"] = result.scaler_sha256_before;
  manifest["artifacts_unchanged_after_transfer"] = true;
  manifest["sites"] = sites;
  write_file(cfg.output_dir / "experiment.json", manifest.dump(2) + "\n");
  return result;
}

std::vector<SweepRow> horizon_sweep(const ExperimentConfig& cfg, const std::vector<int>& horizons) {
  if (horizons.empty()) throw Error(ErrorCode::kConfigError, "horizon list is empty");
  for (int h : horizons) {
    if (h < 1) throw Error(ErrorCode::kConfigError, "horizons must be >= 1");
  }
  cfg.validate();
  make_dirs(cfg.output_dir / "sweep");

  const auto series = load_site(cfg.train_site());
  std::vector<SweepRow> rows;
  std::ostringstream table;
  table << "horizon_h,auc,auprc,mcc,f1\n";
  for (int h : horizons) {
    const auto split = split_train_site(series, cfg, h);
    const auto fitted = fit_pipeline(split.train, cfg);
    const auto test = features::apply_scaler(fitted.scaler, split.test);
    SweepRow row;
    row.horizon_h = h;
    row.report = eval::classification_report(gbdt::predict_proba(fitted.model, test.x), test.y, cfg.threshold);
    row.importance = explain::global_importance(fitted.model, importance_rows(test, cfg.importance_max_rows));
    table << h << ',' << opt(row.report.auc) << ',' << opt(row.report.auprc) << ','
          << csv::fmt(row.report.mcc) << ',' << csv::fmt(row.report.f1) << '\n';
    std::ostringstream imp;
    explain::write_importance_csv(imp, row.importance);
    write_file(cfg.output_dir / "sweep" / ("importance_h" + std::to_string(h) + ".csv"), imp.str());
    rows.push_back(std::move(row));
  }
  write_file(cfg.output_dir / "sweep.csv", table.str());
  return rows;
}

}  // namespace fogcast::experiment
