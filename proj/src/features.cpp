#include "fogcast/features.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "csv.hpp"
#include "fogcast/solar.hpp"

namespace fogcast::features {

std::vector<std::string> schema_names() {
  return {kFeatureNames.begin(), kFeatureNames.end()};
}

double relative_humidity(double temp_c, double dewpoint_c) {
  const double rh = 100.0 * std::exp(kMagnusA * dewpoint_c / (kMagnusB + dewpoint_c) -
                                     kMagnusA * temp_c / (kMagnusB + temp_c));
  return std::clamp(rh, 0.0, 100.0);
}

FeatureDataset assemble_features(const ingest::SiteSeries& series, int horizon_h) {
  if (horizon_h < 1) throw Error(ErrorCode::kConfigError, "horizon must be >= 1 hour");
  const auto& rows = series.rows;
  const std::size_t n = rows.size();
  const auto horizon = std::size_t(horizon_h);
  if (n < horizon + kMaxLagHours + 1) {
    throw Error(ErrorCode::kSeriesTooShort, std::to_string(n) + " rows, need " +
                                                std::to_string(horizon + kMaxLagHours + 1));
  }

  FeatureDataset ds;
  ds.site = series.meta.icao;
  ds.horizon_h = horizon_h;
  ds.x.reserve_rows(n - horizon - kMaxLagHours);

  auto depression = [&](std::size_t i) { return rows[i].t2m_c - rows[i].d2m_c; };

  std::array<double, kNumFeatures> f{};
  for (std::size_t t = kMaxLagHours; t + horizon < n; ++t) {
    const auto& now = rows[t];
    f[kVisibilidadActual] = now.visibility_km;
    f[kVisibilidadLag1h] = rows[t - 1].visibility_km;
    f[kVisibilidadLag3h] = rows[t - 3].visibility_km;
    f[kVisibilidadLag6h] = rows[t - 6].visibility_km;
    f[kTemperatura2m] = now.t2m_c;
    f[kDepresionPuntoRocio] = depression(t);
    f[kHumedadRelativa] = relative_humidity(now.t2m_c, now.d2m_c);
    f[kVelocidadViento10m] = now.ws10_mps;
    f[kPresionSuperficie] = now.sp_hpa;
    f[kGradienteTermico950Sfc] = now.t950_c - now.t2m_c;
    f[kCoberturaNubesBajas] = now.lcc_frac;
    f[kTendenciaDepresionRocio3h] = depression(t) - depression(t - 3);
    f[kTendenciaDepresionRocio6h] = depression(t) - depression(t - 6);
    f[kTasaEnfriamiento3h] = (rows[t - 3].t2m_c - now.t2m_c) / 3.0;
    f[kTasaEnfriamiento6h] = (rows[t - 6].t2m_c - now.t2m_c) / 6.0;
    f[kTendenciaPresion3h] = now.sp_hpa - rows[t - 3].sp_hpa;
    f[kAnguloSolar] = solar::solar_elevation(series.meta.lat_deg, series.meta.lon_deg, now.timestamp);
    f[kDiaDelAno] = day_of_year(now.timestamp);
    f[kIsNight] = f[kAnguloSolar] < 0.0 ? 1.0 : 0.0;

    const auto& target = rows[t + horizon];
    if (std::isnan(target.visibility_km)) continue;
    if (std::any_of(f.begin(), f.end(), [](double v) { return std::isnan(v); })) continue;

    ds.timestamps.push_back(now.timestamp);
    ds.x.append_row(f);
    // Unreported hours were filled, not observed; they never count as fog.
    ds.y.push_back(target.metar_reported && target.visibility_km < kFogVisibilityKm ? 1 : 0);
  }
  return ds;
}

ScalerStats fit_scaler(const FeatureDataset& train) {
  if (train.empty()) throw Error(ErrorCode::kEmptyDataset, "cannot fit scaler on zero rows");
  if (train.x.cols() != kNumFeatures) {
    throw Error(ErrorCode::kSchemaMismatch, "expected 19 feature columns");
  }
  ScalerStats s;
  const double n = double(train.size());
  for (std::size_t c = 0; c < kNumFeatures; ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < train.size(); ++r) sum += train.x(r, c);
    const double mean = sum / n;
    double ss = 0.0;
    for (std::size_t r = 0; r < train.size(); ++r) {
      const double d = train.x(r, c) - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / n);
    s.mean[c] = mean;
    s.std[c] = sd < 1e-12 ? 1.0 : sd;
  }
  s.fitted_on = train.site;
  if (!train.timestamps.empty()) {
    s.fitted_on += " " + format_timestamp(train.timestamps.front()) + "/" +
                   format_timestamp(train.timestamps.back());
  }
  return s;
}

namespace {

void check_schema(const FeatureDataset& ds) {
  if (ds.x.cols() != kNumFeatures || ds.x.rows() != ds.size() || ds.y.size() != ds.size()) {
    throw Error(ErrorCode::kSchemaMismatch, "dataset is not a 19-column feature matrix");
  }
}

}  // namespace

FeatureDataset apply_scaler(const ScalerStats& stats, const FeatureDataset& ds) {
  check_schema(ds);
  if (ds.standardized) throw Error(ErrorCode::kSchemaMismatch, "dataset already standardized");
  FeatureDataset out = ds;
  out.standardized = true;
  for (std::size_t r = 0; r < out.size(); ++r) {
    auto row = out.x.row(r);
    for (std::size_t c = 0; c < kNumFeatures; ++c) row[c] = (row[c] - stats.mean[c]) / stats.std[c];
  }
  return out;
}

FeatureDataset invert_scaler(const ScalerStats& stats, const FeatureDataset& ds) {
  check_schema(ds);
  if (!ds.standardized) throw Error(ErrorCode::kSchemaMismatch, "dataset is not standardized");
  FeatureDataset out = ds;
  out.standardized = false;
  for (std::size_t r = 0; r < out.size(); ++r) {
    auto row = out.x.row(r);
    for (std::size_t c = 0; c < kNumFeatures; ++c) row[c] = row[c] * stats.std[c] + stats.mean[c];
  }
  return out;
}

FeatureDataset select_rows(const FeatureDataset& ds, const std::vector<std::size_t>& rows) {
  FeatureDataset out;
  out.site = ds.site;
  out.horizon_h = ds.horizon_h;
  out.standardized = ds.standardized;
  out.x = Matrix(0, ds.x.cols());
  out.x.reserve_rows(rows.size());
  for (std::size_t r : rows) {
    out.timestamps.push_back(ds.timestamps[r]);
    out.x.append_row(ds.x.row(r));
    out.y.push_back(ds.y[r]);
  }
  return out;
}

Split split_by_period(const FeatureDataset& ds, const TimeRange& train_range,
                      const TimeRange& test_range) {
  if (train_range.overlaps(test_range)) {
    throw Error(ErrorCode::kOverlappingRanges, "train and test periods overlap");
  }
  std::vector<std::size_t> train_rows, test_rows;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    if (train_range.contains(ds.timestamps[r])) train_rows.push_back(r);
    else if (test_range.contains(ds.timestamps[r])) test_rows.push_back(r);
  }
  return {select_rows(ds, train_rows), select_rows(ds, test_rows)};
}

void write_dataset_csv(std::ostream& out, const FeatureDataset& ds) {
  out << "timestamp";
  for (auto name : kFeatureNames) out << ',' << name;
  out << ",label\n";
  for (std::size_t r = 0; r < ds.size(); ++r) {
    out << format_timestamp(ds.timestamps[r]);
    for (double v : ds.x.row(r)) out << ',' << csv::fmt(v);
    out << ',' << int(ds.y[r]) << '\n';
  }
}

FeatureDataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kEmptyDataset, "empty feature file");
  const csv::Header header(line);
  const std::size_t c_ts = header.require("timestamp");
  const std::size_t c_label = header.require("label");
  std::array<std::size_t, kNumFeatures> cols{};
  for (std::size_t c = 0; c < kNumFeatures; ++c) cols[c] = header.require(std::string(kFeatureNames[c]));

  FeatureDataset ds;
  std::array<double, kNumFeatures> f{};
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::trim(line).empty()) continue;
    const auto cells = csv::split(line);
    if (cells.size() < kNumFeatures + 2) {
      throw Error(ErrorCode::kRowError, "feature file line " + std::to_string(lineno));
    }
    ds.timestamps.push_back(parse_timestamp(cells[c_ts]));
    for (std::size_t c = 0; c < kNumFeatures; ++c) {
      auto v = csv::to_double(cells[cols[c]]);
      if (!v || std::isnan(*v)) {
        throw Error(ErrorCode::kRowError, "missing feature value at line " + std::to_string(lineno));
      }
      f[c] = *v;
    }
    ds.x.append_row(f);
    ds.y.push_back(cells[c_label] == "1" ? 1 : 0);
  }
  return ds;
}

std::string dataset_sidecar_json(const FeatureDataset& ds) {
  nlohmann::ordered_json j;
  j["site"] = ds.site;
  j["horizon_h"] = ds.horizon_h;
  j["schema_version"] = kSchemaVersion;
  j["standardized"] = ds.standardized;
  return j.dump(2) + "\n";
}

void apply_sidecar_json(std::istream& in, FeatureDataset& ds) {
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.at("schema_version").get<int>() != kSchemaVersion) {
      throw Error(ErrorCode::kSchemaMismatch, "unsupported feature schema version");
    }
    ds.site = j.at("site").get<std::string>();
    ds.horizon_h = j.at("horizon_h").get<int>();
    ds.standardized = j.value("standardized", false);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch, std::string("feature sidecar: ") + e.what());
  }
}

std::string scaler_json(const ScalerStats& stats) {
  nlohmann::ordered_json j;
  j["schema"] = schema_names();
  j["means"] = stats.mean;
  j["stds"] = stats.std;
  j["fitted_on"] = stats.fitted_on;
  return j.dump(2) + "\n";
}

ScalerStats parse_scaler_json(std::istream& in) {
  try {
    const auto j = nlohmann::json::parse(in);
    const auto means = j.at("means").get<std::vector<double>>();
    const auto stds = j.at("stds").get<std::vector<double>>();
    if (means.size() != kNumFeatures || stds.size() != kNumFeatures) {
      throw Error(ErrorCode::kSchemaMismatch, "scaler file must hold 19 means and 19 stds");
    }
    ScalerStats s;
    std::copy(means.begin(), means.end(), s.mean.begin());
    std::copy(stds.begin(), stds.end(), s.std.begin());
    s.fitted_on = j.value("fitted_on", "");
    if (std::any_of(s.std.begin(), s.std.end(), [](double v) { return !(v > 0.0); })) {
      throw Error(ErrorCode::kSchemaMismatch, "scaler std entries must be positive");
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch, std::string("scaler file: ") + e.what());
  }
}

}  // namespace fogcast::features
