#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "fogcast/common.hpp"
#include "fogcast/ingest.hpp"

namespace fogcast::features {

inline constexpr std::size_t kNumFeatures = 19;
inline constexpr int kSchemaVersion = 1;

// Column order is part of the model file format. Do not reorder.
enum Feature : std::size_t {
  kVisibilidadActual = 0,
  kVisibilidadLag1h,
  kVisibilidadLag3h,
  kVisibilidadLag6h,
  kTemperatura2m,
  kDepresionPuntoRocio,
  kHumedadRelativa,
  kVelocidadViento10m,
  kPresionSuperficie,
  kGradienteTermico950Sfc,
  kCoberturaNubesBajas,
  kTendenciaDepresionRocio3h,
  kTendenciaDepresionRocio6h,
  kTasaEnfriamiento3h,
  kTasaEnfriamiento6h,
  kTendenciaPresion3h,
  kAnguloSolar,
  kDiaDelAno,
  kIsNight,
};

inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "visibilidad_actual",
    "visibilidad_lag_1h",
    "visibilidad_lag_3h",
    "visibilidad_lag_6h",
    "temperatura_2m",
    "depresion_punto_rocio",
    "humedad_relativa",
    "velocidad_viento_10m",
    "presion_superficie",
    "gradiente_termico_950_sfc",
    "cobertura_nubes_bajas",
    "tendencia_depresion_rocio_3h",
    "tendencia_depresion_rocio_6h",
    "tasa_enfriamiento_3h",
    "tasa_enfriamiento_6h",
    "tendencia_presion_3h",
    "angulo_solar",
    "dia_del_ano",
    "is_night",
};

std::vector<std::string> schema_names();

// Fog means visibility strictly below this threshold.
inline constexpr double kFogVisibilityKm = 1.0;

inline constexpr int kDefaultHorizonHours = 2;
inline constexpr std::size_t kMaxLagHours = 6;

// Magnus coefficients (Alduchov & Eskridge).
inline constexpr double kMagnusA = 17.625;
inline constexpr double kMagnusB = 243.04;

// Relative humidity in percent from temperature and dew point, clamped to [0, 100].
double relative_humidity(double temp_c, double dewpoint_c);

struct FeatureDataset {
  std::string site;
  int horizon_h = kDefaultHorizonHours;
  bool standardized = false;
  std::vector<Timestamp> timestamps;
  Matrix x{0, kNumFeatures};
  std::vector<std::uint8_t> y;

  std::size_t size() const { return timestamps.size(); }
  bool empty() const { return timestamps.empty(); }
};

// Builds the feature matrix and the label "visibility < 1 km at t + horizon"
// (hours without a report are labelled 0). Rows lacking a lag, a label or any
// predictor are dropped. Throws kSeriesTooShort when the series has fewer
// than horizon_h + 7 rows.
FeatureDataset assemble_features(const ingest::SiteSeries& series, int horizon_h = kDefaultHorizonHours);

struct ScalerStats {
  std::array<double, kNumFeatures> mean{};
  std::array<double, kNumFeatures> std{};
  std::string fitted_on;

  bool operator==(const ScalerStats&) const = default;
};

// Population mean/std per column; std below 1e-12 is stored as 1.0.
// Throws kEmptyDataset.
ScalerStats fit_scaler(const FeatureDataset& train);

// (x - mean) / std. Throws kSchemaMismatch when the dataset is not 19 wide or
// already standardized.
FeatureDataset apply_scaler(const ScalerStats& stats, const FeatureDataset& ds);

FeatureDataset invert_scaler(const ScalerStats& stats, const FeatureDataset& ds);

struct Split {
  FeatureDataset train;
  FeatureDataset test;
};

// Throws kOverlappingRanges.
Split split_by_period(const FeatureDataset& ds, const TimeRange& train_range,
                      const TimeRange& test_range);

FeatureDataset select_rows(const FeatureDataset& ds, const std::vector<std::size_t>& rows);

// CSV with header timestamp, the 19 schema names, label.
void write_dataset_csv(std::ostream& out, const FeatureDataset& ds);
FeatureDataset read_dataset_csv(std::istream& in);

// {"site", "horizon_h", "schema_version", "standardized"}
std::string dataset_sidecar_json(const FeatureDataset& ds);
void apply_sidecar_json(std::istream& in, FeatureDataset& ds);

std::string scaler_json(const ScalerStats& stats);
ScalerStats parse_scaler_json(std::istream& in);

}  // namespace fogcast::features
