#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fogcast/eval.hpp"
#include "fogcast/explain.hpp"
#include "fogcast/features.hpp"
#include "fogcast/gbdt.hpp"
#include "fogcast/ingest.hpp"
#include "fogcast/synth.hpp"

// Train-once, apply-everywhere protocol: one site trains, every other site is
// scored by the frozen scaler and model.
namespace fogcast::experiment {

enum class Role { kTrain, kTransfer };

std::string_view to_string(Role r);

// Exactly one of `synthetic`, `series_path` or the (metar_path, era5_path)
// pair supplies the data.
struct SiteSource {
  ingest::SiteMeta meta;
  Role role = Role::kTransfer;
  std::optional<synth::SyntheticSiteSpec> synthetic;
  std::filesystem::path series_path;
  std::filesystem::path metar_path;  // ASOS CSV (.csv), otherwise raw METAR lines
  std::filesystem::path era5_path;
  ingest::ReportMonth report_month;  // dates raw METAR lines
};

struct ExperimentConfig {
  std::vector<SiteSource> sites;
  TimeRange train_range;
  TimeRange test_range;
  int horizon_h = features::kDefaultHorizonHours;
  gbdt::Hyperparams hyperparams;
  double threshold = eval::kDefaultThreshold;
  std::filesystem::path output_dir = "fogcast_out";
  std::uint64_t seed = 42;  // drives the boosting row and column samples
  eval::LogisticConfig logistic;
  // Importance is averaged over an evenly strided subset when a site has more
  // rows than this; 0 keeps every row.
  std::size_t importance_max_rows = 0;

  // Throws kConfigError (site roles, horizon, threshold), kOverlappingRanges,
  // kInvalidHyperparams.
  void validate() const;
  const SiteSource& train_site() const;
};

// Relative paths inside the document resolve against base_dir.
// Throws kConfigError on malformed documents.
ExperimentConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);  // unreadable file: kConfigError

ingest::SiteSeries load_site(const SiteSource& source);

// Reads a reanalysis export that may hold several grid points (lat, lon
// columns) and keeps the one nearest the site.
ingest::Era5LoadResult load_era5_for_site(std::istream& in, const ingest::SiteMeta& meta);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);  // throws kIoError

struct BaselineReports {
  eval::EvalReport persistence;             // binary score
  eval::EvalReport persistence_continuous;  // -visibility
  eval::EvalReport climatology;             // train-site month/hour table
  eval::EvalReport logistic;
};

struct SiteOutcome {
  std::string icao;
  Role role = Role::kTransfer;
  features::FeatureDataset data;  // standardized rows that were scored
  std::vector<double> scores;
  eval::EvalReport report;
  BaselineReports baselines;
  explain::ImportanceRanking importance;
};

struct ExperimentResult {
  gbdt::GbdtModel model;
  features::ScalerStats scaler;
  std::vector<SiteOutcome> sites;  // train-site holdout first, then config order
  std::string model_sha256_before;
  std::string model_sha256_after;
  std::string scaler_sha256_before;
  std::string scaler_sha256_after;
};

// Writes under output_dir: model.json, scaler.json, experiment.json,
// summary.csv and sites/<ICAO>/{report.json, baselines.json, roc.csv, pr.csv,
// importance.csv}. Throws kInvariantViolation when the model or scaler file
// changes during transfer evaluation.
ExperimentResult run_experiment(const ExperimentConfig& config);

struct SweepRow {
  int horizon_h = 0;
  eval::EvalReport report;
  explain::ImportanceRanking importance;
};

// Retrains on the train site at each horizon. Writes sweep.csv and
// sweep/importance_h<H>.csv. Throws kConfigError on an empty or invalid list.
std::vector<SweepRow> horizon_sweep(const ExperimentConfig& config, const std::vector<int>& horizons);

}  // namespace fogcast::experiment
