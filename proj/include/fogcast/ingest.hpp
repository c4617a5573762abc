#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fogcast/common.hpp"

namespace fogcast::ingest {

// Unit constants. Canonical units everywhere downstream: degC, hPa, m/s, km.
inline constexpr double kKmPerStatuteMile = 1.609344;
inline constexpr double kMpsPerKnot = 0.514444;
inline constexpr double kMpsPerKmh = 1.0 / 3.6;
inline constexpr double kHpaPerInHg = 33.8638866667;

inline double fahrenheit_to_celsius(double f) { return (f - 32.0) * 5.0 / 9.0; }

struct MetarRecord {
  std::string station;
  Timestamp timestamp;
  std::optional<double> visibility_km;
  std::optional<double> temp_c;
  std::optional<double> dewpoint_c;
  std::optional<double> wind_speed_mps;
  std::optional<double> pressure_hpa;
  std::string raw;
};

// METAR day/hour/minute groups carry no year or month; the caller supplies them.
struct ReportMonth {
  int year = 2000;
  unsigned month = 1;
};

// Decodes station, time, wind, prevailing visibility, temperature/dew point
// and pressure groups. Unknown or corrupt groups are skipped. Parsing stops at
// RMK and at trend groups (TEMPO, BECMG, NOSIG, ...).
// Throws Error(kMalformedReport) when the station or time group is missing.
MetarRecord parse_metar(std::string_view text, ReportMonth month = {});

struct RowIssue {
  std::size_t line = 0;  // 1-based line number in the input
  std::string message;
};

struct MetarCorpusResult {
  std::vector<MetarRecord> records;
  std::vector<RowIssue> rejections;
};

// One report per line; blank lines and '#' comments are ignored.
MetarCorpusResult parse_metar_lines(std::istream& in, ReportMonth month = {});

struct AsosLoadResult {
  std::vector<MetarRecord> records;
  std::vector<RowIssue> row_errors;
};

// Iowa State ASOS archive CSV: required station, valid, vsby; optional tmpf,
// dwpf, sknt, mslp. "M" cells are missing. Throws Error(kMissingColumn).
// Rows with a negative visibility are reported as row errors and dropped.
AsosLoadResult load_asos_csv(std::istream& in);

struct Era5Record {
  Timestamp timestamp;
  double t2m_c = 0.0;
  double d2m_c = 0.0;
  double ws10_mps = 0.0;
  double sp_hpa = 0.0;
  double lcc_frac = 0.0;
  double t950_c = 0.0;
};

struct Era5LoadResult {
  std::vector<Era5Record> records;
  std::vector<RowIssue> row_errors;
};

// Reanalysis export: time, t2m_c, d2m_c, sp_hpa, lcc_frac, t950_c and either
// ws10_mps or the u10_mps/v10_mps pair. Throws kMissingColumn, and
// kNonMonotonicTime when accepted rows are not strictly increasing in time.
Era5LoadResult load_era5_csv(std::istream& in);

void write_era5_csv(std::ostream& out, const std::vector<Era5Record>& records);

struct GridPoint {
  double lat_deg = 0.0;
  double lon_deg = 0.0;

  bool operator==(const GridPoint&) const = default;
};

inline constexpr double kEarthRadiusKm = 6371.0;

double haversine_km(double lat1_deg, double lon1_deg, double lat2_deg, double lon2_deg);

// Great-circle nearest node; equal distances resolve to the smallest
// (lat, lon). Throws Error(kEmptyGrid).
GridPoint nearest_grid_point(double site_lat, double site_lon, const std::vector<GridPoint>& grid);

struct SiteMeta {
  std::string icao;
  double lat_deg = 0.0;
  double lon_deg = 0.0;
  double elevation_m = 0.0;
};

SiteMeta load_site_meta(std::istream& in);
std::string site_meta_json(const SiteMeta& meta);

struct HourlyRow {
  Timestamp timestamp;
  double visibility_km = kNaN;
  double t2m_c = kNaN;
  double d2m_c = kNaN;
  double ws10_mps = kNaN;
  double sp_hpa = kNaN;
  double lcc_frac = kNaN;
  double t950_c = kNaN;
  bool metar_reported = false;

  bool operator==(const HourlyRow& o) const;
};

// Contiguous hourly grid for one airport.
struct SiteSeries {
  SiteMeta meta;
  std::vector<HourlyRow> rows;
};

// Merges reports and reanalysis onto the hourly grid spanning their overlap:
// negative-visibility reports are discarded, the first report in each hour
// wins, visibility is forward-filled and leading gaps back-filled. Hours
// without reanalysis keep NaN predictors. Throws Error(kNoOverlap).
SiteSeries build_hourly_series(const std::vector<MetarRecord>& metars,
                               const std::vector<Era5Record>& era5, const SiteMeta& meta);

void write_series_csv(std::ostream& out, const SiteSeries& series);
SiteSeries read_series_csv(std::istream& in, const SiteMeta& meta);

}  // namespace fogcast::ingest
