// fogcast command-line tool. Every subcommand accepts the common flags
// --config, --seed, --out, --horizon and --threshold; flags win over config.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fogcast/common.hpp"
#include "fogcast/eval.hpp"
#include "fogcast/experiment.hpp"
#include "fogcast/explain.hpp"
#include "fogcast/features.hpp"
#include "fogcast/gbdt.hpp"
#include "fogcast/ingest.hpp"
#include "fogcast/synth.hpp"

namespace fs = std::filesystem;
using namespace fogcast;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> horizon;
  std::optional<double> threshold;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Experiment config JSON");
  cmd->add_option("--seed", c.seed, "Random seed");
  cmd->add_option("--out", c.out, "Output path or directory");
  cmd->add_option("--horizon", c.horizon, "Forecast horizon in hours")->check(CLI::PositiveNumber);
  cmd->add_option("--threshold", c.threshold, "Decision threshold on the fog probability");
}

std::optional<experiment::ExperimentConfig> maybe_config(const Common& c) {
  if (c.config.empty()) return std::nullopt;
  return experiment::load_config(c.config);
}

experiment::ExperimentConfig require_config(const Common& c) {
  if (c.config.empty()) throw Error(ErrorCode::kConfigError, "--config is required");
  auto cfg = experiment::load_config(c.config);
  if (c.seed) cfg.seed = cfg.hyperparams.seed = *c.seed;
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (c.horizon) cfg.horizon_h = *c.horizon;
  if (c.threshold) cfg.threshold = *c.threshold;
  return cfg;
}

fs::path require_out(const Common& c) {
  if (c.out.empty()) throw Error(ErrorCode::kConfigError, "--out is required");
  return c.out;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + p.string());
  return in;
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + p.string());
  return out;
}

std::string slurp(const fs::path& p) {
  auto in = open_in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ingest::SiteMeta read_site(const fs::path& p) {
  auto in = open_in(p);
  return ingest::load_site_meta(in);
}

fs::path sidecar_path(const fs::path& features) { return fs::path(features.string() + ".meta.json"); }

features::FeatureDataset read_features(const fs::path& p) {
  auto in = open_in(p);
  auto ds = features::read_dataset_csv(in);
  if (fs::exists(sidecar_path(p))) {
    auto side = open_in(sidecar_path(p));
    features::apply_sidecar_json(side, ds);
  } else {
    ds.site = p.stem().string();
  }
  return ds;
}

struct Frozen {
  gbdt::GbdtModel model;
  features::ScalerStats scaler;
};

Frozen read_frozen(const fs::path& dir) {
  Frozen f;
  f.model = gbdt::restore_model(slurp(dir / "model.json"));
  auto in = open_in(dir / "scaler.json");
  f.scaler = features::parse_scaler_json(in);
  return f;
}

features::FeatureDataset standardized(const Frozen& f, const features::FeatureDataset& ds) {
  return ds.standardized ? ds : features::apply_scaler(f.scaler, ds);
}

std::vector<ingest::MetarRecord> read_observations(const fs::path& p, int year, unsigned month,
                                                   std::size_t& rejected) {
  auto in = open_in(p);
  if (p.extension() == ".csv") {
    auto r = ingest::load_asos_csv(in);
    rejected = r.row_errors.size();
    return std::move(r.records);
  }
  auto r = ingest::parse_metar_lines(in, {year, month});
  rejected = r.rejections.size();
  for (const auto& issue : r.rejections) {
    std::cerr << "line " << issue.line << ": " << issue.message << '\n';
  }
  return std::move(r.records);
}

std::string cell(const std::optional<double>& v, double scale = 1.0, double offset = 0.0) {
  if (!v) return "M";
  std::ostringstream s;
  s.precision(10);
  s << *v * scale + offset;
  return s.str();
}

void write_report(const eval::EvalReport& r, const fs::path& dir) {
  fs::create_directories(dir);
  auto out = open_out(dir / "report.json");
  out << r.to_json();
  eval::emit_curves(r, dir);
}

void print_report(const std::string& site, const eval::EvalReport& r) {
  std::printf("%s rows=%zu base_rate=%.5f auc=%s auprc=%s f1=%.4f mcc=%.4f\n", site.c_str(),
              r.confusion.total(), r.base_rate, r.auc ? std::to_string(*r.auc).c_str() : "n/a",
              r.auprc ? std::to_string(*r.auprc).c_str() : "n/a", r.f1, r.mcc);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Airport fog nowcasting: ingestion, boosting, attribution and evaluation"};
  app.require_subcommand(1);

  Common common;

  // ingest-metar
  auto* ingest_metar = app.add_subcommand("ingest-metar", "Decode METAR text or an ASOS CSV into ASOS CSV");
  add_common(ingest_metar, common);
  std::string metar_input;
  int metar_year = 2000;
  unsigned metar_month = 1;
  ingest_metar->add_option("--input", metar_input, "Raw METAR lines, or an ASOS .csv")->required();
  ingest_metar->add_option("--year", metar_year, "Year of the reports (raw METAR only)");
  ingest_metar->add_option("--month", metar_month, "Month of the reports (raw METAR only)")
      ->check(CLI::Range(1, 12));

  // ingest-era5
  auto* ingest_era5 = app.add_subcommand("ingest-era5", "Merge observations and reanalysis into an hourly series");
  add_common(ingest_era5, common);
  std::string merge_metar, merge_era5, merge_site;
  ingest_era5->add_option("--metar", merge_metar, "Observations (ASOS .csv or raw METAR)")->required();
  ingest_era5->add_option("--era5", merge_era5, "Reanalysis CSV, optionally with lat/lon columns")->required();
  ingest_era5->add_option("--site", merge_site, "Site metadata JSON")->required();
  ingest_era5->add_option("--year", metar_year, "Year of raw METAR reports");
  ingest_era5->add_option("--month", metar_month, "Month of raw METAR reports")->check(CLI::Range(1, 12));

  // featurize
  auto* featurize = app.add_subcommand("featurize", "Build the 19-feature dataset from an hourly series");
  add_common(featurize, common);
  std::string feat_series, feat_site;
  featurize->add_option("--series", feat_series, "Hourly series CSV")->required();
  featurize->add_option("--site", feat_site, "Site metadata JSON")->required();

  // train
  auto* train = app.add_subcommand("train", "Fit scaler and boosted model; writes model.json and scaler.json");
  add_common(train, common);
  std::string train_features;
  std::optional<int> train_trees;
  train->add_option("--features", train_features, "Feature CSV (unscaled)")->required();
  train->add_option("--trees", train_trees, "Number of boosting rounds")->check(CLI::PositiveNumber);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score a feature file and write report.json, roc.csv, pr.csv");
  add_common(evaluate, common);
  std::string eval_features, model_dir;
  evaluate->add_option("--features", eval_features, "Feature CSV")->required();
  evaluate->add_option("--model-dir", model_dir, "Directory holding model.json and scaler.json")->required();

  // transfer
  auto* transfer = app.add_subcommand("transfer", "Zero-shot evaluation of frozen artifacts on other sites");
  add_common(transfer, common);
  std::vector<std::string> transfer_features;
  transfer->add_option("--features", transfer_features, "One feature CSV per site")->required();
  transfer->add_option("--model-dir", model_dir, "Directory holding model.json and scaler.json")->required();

  // explain
  auto* explain_cmd = app.add_subcommand("explain", "TreeSHAP attributions and global importance");
  add_common(explain_cmd, common);
  std::string explain_features;
  std::size_t explain_rows = 0;
  explain_cmd->add_option("--features", explain_features, "Feature CSV")->required();
  explain_cmd->add_option("--model-dir", model_dir, "Directory holding model.json and scaler.json")->required();
  explain_cmd->add_option("--max-rows", explain_rows, "Per-row explanations written for at most this many rows (0 = all)");

  // calibrate
  auto* calibrate = app.add_subcommand("calibrate", "Pick a decision threshold from the precision-recall trade-off");
  add_common(calibrate, common);
  std::string cal_features, cal_objective = "max_f1";
  double cal_recall = 0.5;
  calibrate->add_option("--features", cal_features, "Feature CSV")->required();
  calibrate->add_option("--model-dir", model_dir, "Directory holding model.json and scaler.json")->required();
  calibrate->add_option("--objective", cal_objective, "max_f1 or min_recall")
      ->check(CLI::IsMember({"max_f1", "min_recall"}));
  calibrate->add_option("--min-recall", cal_recall, "Recall floor for min_recall")->check(CLI::Range(0.0, 1.0));

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Retrain and evaluate the train site at several horizons");
  add_common(sweep, common);
  std::vector<int> sweep_horizons{2, 3, 6};
  sweep->add_option("--horizons", sweep_horizons, "Horizons in hours")->delimiter(',');

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic site as ASOS/ERA5 inputs and a series");
  add_common(synth_cmd, common);
  synth::SyntheticSiteSpec spec;
  std::string regime = "radiative";
  synth_cmd->add_option("--icao", spec.icao, "Site identifier");
  synth_cmd->add_option("--lat", spec.lat_deg, "Latitude, degrees");
  synth_cmd->add_option("--lon", spec.lon_deg, "Longitude, degrees");
  synth_cmd->add_option("--days", spec.n_days, "Number of days");
  synth_cmd->add_option("--propensity", spec.fog_propensity, "Hourly fog trigger probability");
  synth_cmd->add_option("--regime", regime, "radiative or rare_event");
  synth_cmd->add_option("--start-year", spec.start_year, "First calendar year");

  // run
  auto* run = app.add_subcommand("run", "Full experiment: train, holdout, zero-shot transfer, attribution");
  add_common(run, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and --version exit 0; every usage error is a configuration error.
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (ingest_metar->parsed()) {
      std::size_t rejected = 0;
      const auto records = read_observations(metar_input, metar_year, metar_month, rejected);
      auto out = open_out(require_out(common));
      out << "station,valid,vsby,tmpf,dwpf,sknt,mslp\n";
      for (const auto& r : records) {
        const std::string stamp = format_timestamp(r.timestamp);
        out << r.station << ',' << stamp.substr(0, 10) << ' ' << stamp.substr(11, 5) << ','
            << cell(r.visibility_km, 1.0 / ingest::kKmPerStatuteMile) << ','
            << cell(r.temp_c, 9.0 / 5.0, 32.0) << ',' << cell(r.dewpoint_c, 9.0 / 5.0, 32.0) << ','
            << cell(r.wind_speed_mps, 1.0 / ingest::kMpsPerKnot) << ',' << cell(r.pressure_hpa) << '\n';
      }
      std::printf("decoded %zu reports, rejected %zu\n", records.size(), rejected);
    } else if (ingest_era5->parsed()) {
      const auto meta = read_site(merge_site);
      std::size_t rejected = 0;
      const auto records = read_observations(merge_metar, metar_year, metar_month, rejected);
      auto era5_in = open_in(merge_era5);
      const auto era5 = experiment::load_era5_for_site(era5_in, meta);
      const auto series = ingest::build_hourly_series(records, era5.records, meta);
      auto out = open_out(require_out(common));
      ingest::write_series_csv(out, series);
      std::printf("%zu hourly rows (%zu observation rows rejected, %zu reanalysis rows rejected)\n",
                  series.rows.size(), rejected, era5.row_errors.size());
    } else if (featurize->parsed()) {
      const auto cfg = maybe_config(common);
      const int horizon = common.horizon.value_or(cfg ? cfg->horizon_h : features::kDefaultHorizonHours);
      auto in = open_in(feat_series);
      const auto series = ingest::read_series_csv(in, read_site(feat_site));
      const auto ds = features::assemble_features(series, horizon);
      const fs::path out_path = require_out(common);
      auto out = open_out(out_path);
      features::write_dataset_csv(out, ds);
      auto side = open_out(sidecar_path(out_path));
      side << features::dataset_sidecar_json(ds);
      std::printf("%zu rows, %zu positive\n", ds.size(),
                  std::size_t(std::count(ds.y.begin(), ds.y.end(), 1)));
    } else if (train->parsed()) {
      const auto cfg = maybe_config(common);
      auto ds = read_features(train_features);
      if (cfg) ds = features::split_by_period(ds, cfg->train_range, cfg->test_range).train;
      gbdt::Hyperparams hp = cfg ? cfg->hyperparams : gbdt::Hyperparams{};
      if (common.seed) hp.seed = *common.seed;
      if (train_trees) hp.n_estimators = *train_trees;
      const auto scaler = features::fit_scaler(ds);
      const auto model = gbdt::train_gbdt(features::apply_scaler(scaler, ds), hp);
      const fs::path dir = require_out(common);
      fs::create_directories(dir);
      open_out(dir / "model.json") << gbdt::persist_model(model);
      open_out(dir / "scaler.json") << features::scaler_json(scaler);
      std::printf("trained %zu trees on %zu rows (scale_pos_weight %.4f)\n", model.trees.size(),
                  ds.size(), *model.hyperparams.scale_pos_weight);
    } else if (evaluate->parsed()) {
      const auto cfg = maybe_config(common);
      const double threshold = common.threshold.value_or(cfg ? cfg->threshold : eval::kDefaultThreshold);
      const auto frozen = read_frozen(model_dir);
      auto ds = read_features(eval_features);
      if (cfg) ds = features::split_by_period(ds, cfg->train_range, cfg->test_range).test;
      const auto x = standardized(frozen, ds);
      const auto report = eval::classification_report(gbdt::predict_proba(frozen.model, x.x), x.y, threshold);
      write_report(report, require_out(common));
      print_report(ds.site, report);
    } else if (transfer->parsed()) {
      const auto cfg = maybe_config(common);
      const double threshold = common.threshold.value_or(cfg ? cfg->threshold : eval::kDefaultThreshold);
      const fs::path dir(model_dir);
      const auto model_hash = experiment::sha256_file(dir / "model.json");
      const auto scaler_hash = experiment::sha256_file(dir / "scaler.json");
      const auto frozen = read_frozen(dir);
      const fs::path out = require_out(common);
      for (const auto& f : transfer_features) {
        const auto ds = read_features(f);
        const auto x = standardized(frozen, ds);
        const auto report = eval::classification_report(gbdt::predict_proba(frozen.model, x.x), x.y, threshold);
        write_report(report, out / ds.site);
        print_report(ds.site, report);
      }
      if (experiment::sha256_file(dir / "model.json") != model_hash ||
          experiment::sha256_file(dir / "scaler.json") != scaler_hash) {
        throw Error(ErrorCode::kInvariantViolation, "model or scaler changed during transfer");
      }
      std::printf("model sha256 %s unchanged\n", model_hash.c_str());
    } else if (explain_cmd->parsed()) {
      const auto frozen = read_frozen(model_dir);
      const auto x = standardized(frozen, read_features(explain_features));
      const fs::path out = require_out(common);
      fs::create_directories(out);
      const auto ranking = explain::global_importance(frozen.model, x);
      auto imp = open_out(out / "importance.csv");
      explain::write_importance_csv(imp, ranking);
      std::vector<std::size_t> rows;
      const std::size_t n = explain_rows == 0 ? x.size() : std::min(explain_rows, x.size());
      for (std::size_t i = 0; i < n; ++i) rows.push_back(i);
      auto per_row = open_out(out / "explanations.csv");
      explain::write_explanations_csv(per_row, frozen.model, features::select_rows(x, rows));
      for (std::size_t i = 0; i < std::min<std::size_t>(5, ranking.size()); ++i) {
        std::printf("%zu %s %.6f\n", i + 1, ranking[i].feature.c_str(), ranking[i].mean_abs_shap);
      }
    } else if (calibrate->parsed()) {
      const auto frozen = read_frozen(model_dir);
      const auto x = standardized(frozen, read_features(cal_features));
      const auto scores = gbdt::predict_proba(frozen.model, x.x);
      const auto objective = cal_objective == "max_f1" ? eval::Objective::max_f1()
                                                       : eval::Objective::recall_at_least(cal_recall);
      const auto cal = eval::calibrate_threshold(scores, x.y, objective);
      write_report(cal.report, require_out(common));
      std::printf("threshold %.6g precision %.4f recall %.4f f1 %.4f\n", cal.threshold,
                  cal.report.precision, cal.report.recall, cal.report.f1);
    } else if (sweep->parsed()) {
      const auto cfg = require_config(common);
      for (const auto& row : experiment::horizon_sweep(cfg, sweep_horizons)) {
        std::printf("h=%d auc=%s top=%s\n", row.horizon_h,
                    row.report.auc ? std::to_string(*row.report.auc).c_str() : "n/a",
                    row.importance.front().feature.c_str());
      }
    } else if (synth_cmd->parsed()) {
      if (common.seed) spec.seed = *common.seed;
      spec.regime = synth::parse_regime(regime);
      const auto series = synth::synthesize_site(spec);
      const fs::path out = require_out(common);
      synth::write_synthetic_inputs(series, out);
      auto s = open_out(out / "series.csv");
      ingest::write_series_csv(s, series);
      std::size_t fog = 0;
      for (const auto& r : series.rows) fog += r.visibility_km < features::kFogVisibilityKm;
      std::printf("%zu hours, fog rate %.5f\n", series.rows.size(), double(fog) / double(series.rows.size()));
    } else if (run->parsed()) {
      const auto cfg = require_config(common);
      const auto result = experiment::run_experiment(cfg);
      for (const auto& site : result.sites) print_report(site.icao + " (" + std::string(experiment::to_string(site.role)) + ")", site.report);
      std::printf("artifacts in %s, model sha256 %s\n", cfg.output_dir.string().c_str(),
                  result.model_sha256_after.c_str());
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: IoError: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitOk;
}
