#include "fogcast/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "csv.hpp"

namespace fogcast::ingest {

namespace {

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

int digits_value(std::string_view s) {
  int v = 0;
  for (char c : s) v = v * 10 + (c - '0');
  return v;
}

bool is_station(std::string_view s) {
  return s.size() == 4 && std::isupper(static_cast<unsigned char>(s[0])) &&
         std::all_of(s.begin() + 1, s.end(), [](char c) {
           return std::isupper(static_cast<unsigned char>(c)) || (c >= '0' && c <= '9');
         });
}

bool is_trend_marker(std::string_view s) {
  return s == "RMK" || s == "TEMPO" || s == "BECMG" || s == "NOSIG" || s == "INTER" ||
         s == "PROB30" || s == "PROB40" || (s.starts_with("FM") && s.size() == 8 && all_digits(s.substr(2)));
}

// "dddffKT", "dddffGggKT", "VRBffKT", with KT, MPS or KMH units.
std::optional<std::optional<double>> match_wind(std::string_view tok) {
  double factor = 0.0;
  std::string_view body;
  if (tok.ends_with("KT")) {
    factor = kMpsPerKnot;
    body = tok.substr(0, tok.size() - 2);
  } else if (tok.ends_with("MPS")) {
    factor = 1.0;
    body = tok.substr(0, tok.size() - 3);
  } else if (tok.ends_with("KMH")) {
    factor = kMpsPerKmh;
    body = tok.substr(0, tok.size() - 3);
  } else {
    return std::nullopt;
  }
  if (body.size() < 5) return std::nullopt;
  const std::string_view dir = body.substr(0, 3);
  if (dir.find_first_not_of('/') == std::string_view::npos) {
    return std::optional<double>{};  // "/////KT": group present, value missing
  }
  if (dir != "VRB" && !all_digits(dir)) return std::nullopt;
  std::string_view rest = body.substr(3);
  const std::size_t gust = rest.find('G');
  const std::string_view speed = rest.substr(0, gust);
  if ((speed.size() != 2 && speed.size() != 3) || !all_digits(speed)) return std::nullopt;
  if (gust != std::string_view::npos) {
    const std::string_view g = rest.substr(gust + 1);
    if ((g.size() != 2 && g.size() != 3) || !all_digits(g)) return std::nullopt;
  }
  return std::optional<double>{digits_value(speed) * factor};
}

// "1/2", "3/4" etc.
std::optional<double> parse_fraction(std::string_view s) {
  const std::size_t slash = s.find('/');
  if (slash == std::string_view::npos) {
    if (!all_digits(s)) return std::nullopt;
    return double(digits_value(s));
  }
  const std::string_view num = s.substr(0, slash);
  const std::string_view den = s.substr(slash + 1);
  if (!all_digits(num) || !all_digits(den) || digits_value(den) == 0) return std::nullopt;
  return double(digits_value(num)) / double(digits_value(den));
}

// Statute-mile visibility in km ("10SM", "1/2SM", "M1/4SM", "P6SM").
std::optional<double> match_sm_visibility(std::string_view tok) {
  if (!tok.ends_with("SM")) return std::nullopt;
  std::string_view body = tok.substr(0, tok.size() - 2);
  if (!body.empty() && (body.front() == 'M' || body.front() == 'P')) body.remove_prefix(1);
  auto miles = parse_fraction(body);
  if (!miles) return std::nullopt;
  return *miles * kKmPerStatuteMile;
}

// Meter visibility "NNNN" optionally followed by NDV or a direction.
std::optional<double> match_metric_visibility(std::string_view tok) {
  if (tok.size() < 4 || !all_digits(tok.substr(0, 4))) return std::nullopt;
  const std::string_view suffix = tok.substr(4);
  static constexpr std::string_view kSuffixes[] = {"", "NDV", "N", "NE", "E", "SE",
                                                   "S", "SW", "W", "NW"};
  if (std::find(std::begin(kSuffixes), std::end(kSuffixes), suffix) == std::end(kSuffixes)) {
    return std::nullopt;
  }
  const int meters = digits_value(tok.substr(0, 4));
  // 9999 encodes "10 km or more".
  return meters == 9999 ? 10.0 : meters / 1000.0;
}

std::optional<double> parse_signed_temp(std::string_view s) {
  bool negative = false;
  if (!s.empty() && s.front() == 'M') {
    negative = true;
    s.remove_prefix(1);
  }
  if ((s.size() != 1 && s.size() != 2) || !all_digits(s)) return std::nullopt;
  const double v = digits_value(s);
  return negative ? -v : v;
}

struct TempGroup {
  std::optional<double> temp;
  std::optional<double> dew;
};

std::optional<TempGroup> match_temperature(std::string_view tok) {
  const std::size_t slash = tok.find('/');
  if (slash == std::string_view::npos || tok.find('/', slash + 1) != std::string_view::npos) {
    // "/////" style fully-missing groups have several slashes.
    if (tok.size() == 5 && tok.find_first_not_of('/') == std::string_view::npos) return TempGroup{};
    return std::nullopt;
  }
  const std::string_view t = tok.substr(0, slash);
  const std::string_view d = tok.substr(slash + 1);
  TempGroup g;
  if (t != "//" && !t.empty()) {
    g.temp = parse_signed_temp(t);
    if (!g.temp) return std::nullopt;
  }
  if (d != "//" && !d.empty()) {
    g.dew = parse_signed_temp(d);
    if (!g.dew) return std::nullopt;
  }
  if (t.empty()) return std::nullopt;
  return g;
}

std::optional<std::optional<double>> match_pressure(std::string_view tok) {
  if (tok.size() != 5 || (tok[0] != 'Q' && tok[0] != 'A')) return std::nullopt;
  const std::string_view digits = tok.substr(1);
  if (digits == "////") return std::optional<double>{};
  if (!all_digits(digits)) return std::nullopt;
  const double v = digits_value(digits);
  return std::optional<double>{tok[0] == 'Q' ? v : v / 100.0 * kHpaPerInHg};
}

std::vector<std::string_view> tokenize(std::string_view text) {
  std::vector<std::string_view> toks;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) toks.push_back(text.substr(i, j - i));
    i = j;
  }
  if (!toks.empty() && toks.back().ends_with('=')) {
    toks.back().remove_suffix(1);
    if (toks.back().empty()) toks.pop_back();
  }
  return toks;
}

}  // namespace

MetarRecord parse_metar(std::string_view text, ReportMonth month) {
  const auto toks = tokenize(text);
  std::size_t i = 0;
  while (i < toks.size() && (toks[i] == "METAR" || toks[i] == "SPECI" || toks[i] == "COR")) ++i;

  if (i >= toks.size() || !is_station(toks[i])) {
    throw Error(ErrorCode::kMalformedReport, "missing station group");
  }
  MetarRecord rec;
  rec.station = std::string(toks[i++]);
  rec.raw = std::string(text);

  if (i >= toks.size()) throw Error(ErrorCode::kMalformedReport, "missing time group");
  const std::string_view tg = toks[i++];
  if (tg.size() != 7 || tg.back() != 'Z' || !all_digits(tg.substr(0, 6))) {
    throw Error(ErrorCode::kMalformedReport, "time group '" + std::string(tg) + "' not DDHHMMZ");
  }
  const int day = digits_value(tg.substr(0, 2));
  const int hour = digits_value(tg.substr(2, 2));
  const int minute = digits_value(tg.substr(4, 2));
  const std::chrono::year_month_day ymd{std::chrono::year{month.year},
                                        std::chrono::month{month.month},
                                        std::chrono::day{unsigned(day)}};
  if (!ymd.ok() || hour > 23 || minute > 59) {
    throw Error(ErrorCode::kMalformedReport, "time group '" + std::string(tg) + "' out of range");
  }
  rec.timestamp = make_timestamp(month.year, month.month, unsigned(day), hour, minute);

  bool have_wind = false, have_vis = false, have_temp = false, have_pres = false;
  for (; i < toks.size(); ++i) {
    const std::string_view tok = toks[i];
    if (is_trend_marker(tok)) break;
    if (tok == "NIL") break;
    if (tok == "AUTO" || tok == "COR") continue;

    if (!have_wind) {
      if (auto w = match_wind(tok)) {
        rec.wind_speed_mps = *w;
        have_wind = true;
        continue;
      }
    }
    if (!have_vis) {
      if (tok == "CAVOK") {
        rec.visibility_km = 10.0;
        have_vis = true;
        continue;
      }
      if (tok == "////") {
        have_vis = true;
        continue;
      }
      // "1 1/2SM": whole miles and a fraction split across two tokens.
      if (tok.size() == 1 && all_digits(tok) && i + 1 < toks.size() &&
          toks[i + 1].find('/') != std::string_view::npos) {
        if (auto frac = match_sm_visibility(toks[i + 1])) {
          rec.visibility_km = digits_value(tok) * kKmPerStatuteMile + *frac;
          have_vis = true;
          ++i;
          continue;
        }
      }
      if (auto v = match_sm_visibility(tok)) {
        rec.visibility_km = v;
        have_vis = true;
        continue;
      }
      if (auto v = match_metric_visibility(tok)) {
        rec.visibility_km = v;
        have_vis = true;
        continue;
      }
    }
    if (!have_temp) {
      if (auto t = match_temperature(tok)) {
        rec.temp_c = t->temp;
        rec.dewpoint_c = t->dew;
        have_temp = true;
        continue;
      }
    }
    if (!have_pres) {
      if (auto p = match_pressure(tok)) {
        rec.pressure_hpa = *p;
        have_pres = true;
        continue;
      }
    }
    // RVR, weather, cloud, wind-variability and corrupt groups are skipped.
  }
  return rec;
}

MetarCorpusResult parse_metar_lines(std::istream& in, ReportMonth month) {
  MetarCorpusResult out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view view = csv::trim(line);
    if (view.empty() || view.front() == '#') continue;
    try {
      out.records.push_back(parse_metar(view, month));
    } catch (const Error& e) {
      out.rejections.push_back({lineno, e.what()});
    }
  }
  return out;
}

AsosLoadResult load_asos_csv(std::istream& in) {
  AsosLoadResult out;
  std::string line;
  std::size_t lineno = 0;
  std::optional<csv::Header> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::trim(line).empty() || line.front() == '#') continue;
    header.emplace(line);
    break;
  }
  if (!header) throw Error(ErrorCode::kMissingColumn, "empty ASOS file (no header)");

  const std::size_t c_station = header->require("station");
  const std::size_t c_valid = header->require("valid");
  const std::size_t c_vsby = header->require("vsby");
  const auto c_tmpf = header->find("tmpf");
  const auto c_dwpf = header->find("dwpf");
  const auto c_sknt = header->find("sknt");
  const auto c_mslp = header->find("mslp");

  while (std::getline(in, line)) {
    ++lineno;
    if (csv::trim(line).empty() || line.front() == '#') continue;
    const auto cells = csv::split(line);
    auto cell = [&](std::optional<std::size_t> idx) -> std::optional<double> {
      if (!idx || *idx >= cells.size()) return std::nullopt;
      return csv::to_double(cells[*idx]);  // "M", "T" and other codes are missing
    };
    const std::size_t needed = std::max({c_station, c_valid, c_vsby}) + 1;
    if (cells.size() < needed) {
      out.row_errors.push_back({lineno, "too few cells"});
      continue;
    }
    MetarRecord rec;
    rec.station = std::string(cells[c_station]);
    rec.raw = line;
    try {
      rec.timestamp = parse_timestamp(cells[c_valid]);
    } catch (const Error& e) {
      out.row_errors.push_back({lineno, e.what()});
      continue;
    }
    if (auto miles = cell(c_vsby)) {
      if (*miles < 0.0) {
        out.row_errors.push_back({lineno, "negative visibility"});
        continue;
      }
      rec.visibility_km = *miles * kKmPerStatuteMile;
    }
    if (auto f = cell(c_tmpf)) rec.temp_c = fahrenheit_to_celsius(*f);
    if (auto f = cell(c_dwpf)) rec.dewpoint_c = fahrenheit_to_celsius(*f);
    if (auto kt = cell(c_sknt)) {
      if (*kt >= 0.0) rec.wind_speed_mps = *kt * kMpsPerKnot;
    }
    if (auto p = cell(c_mslp)) rec.pressure_hpa = *p;
    out.records.push_back(std::move(rec));
  }
  return out;
}

Era5LoadResult load_era5_csv(std::istream& in) {
  Era5LoadResult out;
  std::string line;
  std::size_t lineno = 0;
  std::optional<csv::Header> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::trim(line).empty() || line.front() == '#') continue;
    header.emplace(line);
    break;
  }
  if (!header) throw Error(ErrorCode::kMissingColumn, "empty ERA5 file (no header)");

  const std::size_t c_time = header->require("time");
  const std::size_t c_t2m = header->require("t2m_c");
  const std::size_t c_d2m = header->require("d2m_c");
  const std::size_t c_sp = header->require("sp_hpa");
  const std::size_t c_lcc = header->require("lcc_frac");
  const std::size_t c_t950 = header->require("t950_c");
  const auto c_ws = header->find("ws10_mps");
  const auto c_u = header->find("u10_mps");
  const auto c_v = header->find("v10_mps");
  if (!c_ws && !(c_u && c_v)) {
    throw Error(ErrorCode::kMissingColumn, "need ws10_mps or both u10_mps and v10_mps");
  }

  while (std::getline(in, line)) {
    ++lineno;
    if (csv::trim(line).empty() || line.front() == '#') continue;
    const auto cells = csv::split(line);
    auto num = [&](std::size_t idx, const char* name) {
      std::optional<double> v;
      if (idx < cells.size()) v = csv::to_double(cells[idx]);
      if (!v || !std::isfinite(*v)) {
        throw Error(ErrorCode::kRowError, std::string("bad value in column ") + name);
      }
      return *v;
    };
    Era5Record rec;
    try {
      if (c_time >= cells.size()) throw Error(ErrorCode::kRowError, "too few cells");
      rec.timestamp = parse_timestamp(cells[c_time]);
      rec.t2m_c = num(c_t2m, "t2m_c");
      rec.d2m_c = num(c_d2m, "d2m_c");
      rec.sp_hpa = num(c_sp, "sp_hpa");
      rec.lcc_frac = num(c_lcc, "lcc_frac");
      rec.t950_c = num(c_t950, "t950_c");
      if (c_ws) {
        rec.ws10_mps = num(*c_ws, "ws10_mps");
      } else {
        rec.ws10_mps = std::hypot(num(*c_u, "u10_mps"), num(*c_v, "v10_mps"));
      }
      if (rec.lcc_frac < 0.0 || rec.lcc_frac > 1.0) {
        throw Error(ErrorCode::kRowError, "lcc_frac outside [0, 1]");
      }
      if (rec.ws10_mps < 0.0) throw Error(ErrorCode::kRowError, "negative wind speed");
    } catch (const Error& e) {
      out.row_errors.push_back({lineno, e.what()});
      continue;
    }
    if (!out.records.empty() && rec.timestamp <= out.records.back().timestamp) {
      throw Error(ErrorCode::kNonMonotonicTime,
                  "line " + std::to_string(lineno) + ": " + format_timestamp(rec.timestamp) +
                      " does not follow " + format_timestamp(out.records.back().timestamp));
    }
    out.records.push_back(rec);
  }
  return out;
}

void write_era5_csv(std::ostream& out, const std::vector<Era5Record>& records) {
  out << "time,t2m_c,d2m_c,ws10_mps,sp_hpa,lcc_frac,t950_c\n";
  for (const auto& r : records) {
    out << format_timestamp(r.timestamp) << ',' << csv::fmt(r.t2m_c) << ',' << csv::fmt(r.d2m_c)
        << ',' << csv::fmt(r.ws10_mps) << ',' << csv::fmt(r.sp_hpa) << ','
        << csv::fmt(r.lcc_frac) << ',' << csv::fmt(r.t950_c) << '\n';
  }
}

double haversine_km(double lat1_deg, double lon1_deg, double lat2_deg, double lon2_deg) {
  constexpr double kRad = std::numbers::pi / 180.0;
  const double dlat = (lat2_deg - lat1_deg) * kRad;
  const double dlon = (lon2_deg - lon1_deg) * kRad;
  const double s1 = std::sin(dlat / 2.0);
  const double s2 = std::sin(dlon / 2.0);
  const double a = s1 * s1 + std::cos(lat1_deg * kRad) * std::cos(lat2_deg * kRad) * s2 * s2;
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

GridPoint nearest_grid_point(double site_lat, double site_lon, const std::vector<GridPoint>& grid) {
  if (grid.empty()) throw Error(ErrorCode::kEmptyGrid, "no grid points supplied");
  const GridPoint* best = &grid.front();
  double best_d = haversine_km(site_lat, site_lon, best->lat_deg, best->lon_deg);
  for (const auto& p : grid) {
    const double d = haversine_km(site_lat, site_lon, p.lat_deg, p.lon_deg);
    if (d < best_d || (d == best_d && std::pair(p.lat_deg, p.lon_deg) <
                                          std::pair(best->lat_deg, best->lon_deg))) {
      best = &p;
      best_d = d;
    }
  }
  return *best;
}

SiteMeta load_site_meta(std::istream& in) {
  try {
    const auto j = nlohmann::json::parse(in);
    SiteMeta m;
    m.icao = j.at("icao").get<std::string>();
    m.lat_deg = j.at("lat_deg").get<double>();
    m.lon_deg = j.at("lon_deg").get<double>();
    m.elevation_m = j.value("elevation_m", 0.0);
    if (std::abs(m.lat_deg) > 90.0 || m.lon_deg < -180.0 || m.lon_deg > 180.0) {
      throw Error(ErrorCode::kConfigError, "site coordinates out of range");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("site metadata: ") + e.what());
  }
}

std::string site_meta_json(const SiteMeta& meta) {
  nlohmann::ordered_json j;
  j["icao"] = meta.icao;
  j["lat_deg"] = meta.lat_deg;
  j["lon_deg"] = meta.lon_deg;
  j["elevation_m"] = meta.elevation_m;
  return j.dump(2) + "\n";
}

namespace {

bool same_or_both_nan(double a, double b) {
  return a == b || (std::isnan(a) && std::isnan(b));
}

}  // namespace

bool HourlyRow::operator==(const HourlyRow& o) const {
  return timestamp == o.timestamp && same_or_both_nan(visibility_km, o.visibility_km) &&
         same_or_both_nan(t2m_c, o.t2m_c) && same_or_both_nan(d2m_c, o.d2m_c) &&
         same_or_both_nan(ws10_mps, o.ws10_mps) && same_or_both_nan(sp_hpa, o.sp_hpa) &&
         same_or_both_nan(lcc_frac, o.lcc_frac) && same_or_both_nan(t950_c, o.t950_c) &&
         metar_reported == o.metar_reported;
}

SiteSeries build_hourly_series(const std::vector<MetarRecord>& metars,
                               const std::vector<Era5Record>& era5, const SiteMeta& meta) {
  if (metars.empty() || era5.empty()) {
    throw Error(ErrorCode::kNoOverlap, "observation or reanalysis input is empty");
  }

  // Physically impossible visibilities go before anything else so they can
  // neither win a duplicate-hour contest nor seed a forward fill.
  std::vector<const MetarRecord*> valid;
  valid.reserve(metars.size());
  for (const auto& m : metars) {
    if (m.visibility_km && *m.visibility_km < 0.0) continue;
    valid.push_back(&m);
  }
  std::stable_sort(valid.begin(), valid.end(), [](const MetarRecord* a, const MetarRecord* b) {
    return a->timestamp < b->timestamp;
  });
  std::map<Timestamp, const MetarRecord*> first_per_hour;
  for (const MetarRecord* m : valid) first_per_hour.emplace(floor_to_hour(m->timestamp), m);
  if (first_per_hour.empty()) throw Error(ErrorCode::kNoOverlap, "no usable reports");

  std::map<Timestamp, const Era5Record*> era5_by_hour;
  for (const auto& r : era5) era5_by_hour.emplace(floor_to_hour(r.timestamp), &r);

  const Timestamp begin = std::max(first_per_hour.begin()->first, era5_by_hour.begin()->first);
  const Timestamp end = std::min(first_per_hour.rbegin()->first, era5_by_hour.rbegin()->first);
  if (end < begin) {
    throw Error(ErrorCode::kNoOverlap, "reports end " + format_timestamp(end) +
                                           " before reanalysis begins " + format_timestamp(begin));
  }

  SiteSeries series;
  series.meta = meta;
  const auto n_hours = std::size_t((end - begin).count() / kSecondsPerHour) + 1;
  series.rows.resize(n_hours);
  for (std::size_t i = 0; i < n_hours; ++i) {
    HourlyRow& row = series.rows[i];
    row.timestamp = begin + std::chrono::hours{i};
    if (auto it = first_per_hour.find(row.timestamp); it != first_per_hour.end()) {
      row.metar_reported = true;
      row.visibility_km = it->second->visibility_km.value_or(kNaN);
    }
    if (auto it = era5_by_hour.find(row.timestamp); it != era5_by_hour.end()) {
      const Era5Record& e = *it->second;
      row.t2m_c = e.t2m_c;
      row.d2m_c = e.d2m_c;
      row.ws10_mps = e.ws10_mps;
      row.sp_hpa = e.sp_hpa;
      row.lcc_frac = e.lcc_frac;
      row.t950_c = e.t950_c;
    }
  }

  // ffill, then bfill the leading gap.
  double last = kNaN;
  for (auto& row : series.rows) {
    if (std::isnan(row.visibility_km)) {
      row.visibility_km = last;
    } else {
      last = row.visibility_km;
    }
  }
  const auto first_valid = std::find_if(series.rows.begin(), series.rows.end(),
                                        [](const HourlyRow& r) { return !std::isnan(r.visibility_km); });
  if (first_valid != series.rows.end()) {
    for (auto it = series.rows.begin(); it != first_valid; ++it) it->visibility_km = first_valid->visibility_km;
  }
  return series;
}

void write_series_csv(std::ostream& out, const SiteSeries& series) {
  out << "timestamp,visibility_km,t2m_c,d2m_c,ws10_mps,sp_hpa,lcc_frac,t950_c,metar_reported\n";
  for (const auto& r : series.rows) {
    out << format_timestamp(r.timestamp) << ',' << csv::fmt(r.visibility_km) << ','
        << csv::fmt(r.t2m_c) << ',' << csv::fmt(r.d2m_c) << ',' << csv::fmt(r.ws10_mps) << ','
        << csv::fmt(r.sp_hpa) << ',' << csv::fmt(r.lcc_frac) << ',' << csv::fmt(r.t950_c) << ','
        << (r.metar_reported ? 1 : 0) << '\n';
  }
}

SiteSeries read_series_csv(std::istream& in, const SiteMeta& meta) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kMissingColumn, "empty series file");
  const csv::Header header(line);
  const std::size_t cols[] = {header.require("timestamp"), header.require("visibility_km"),
                              header.require("t2m_c"),     header.require("d2m_c"),
                              header.require("ws10_mps"),  header.require("sp_hpa"),
                              header.require("lcc_frac"),  header.require("t950_c"),
                              header.require("metar_reported")};
  SiteSeries series;
  series.meta = meta;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::trim(line).empty()) continue;
    const auto cells = csv::split(line);
    if (cells.size() < 9) throw Error(ErrorCode::kRowError, "line " + std::to_string(lineno));
    HourlyRow row;
    row.timestamp = parse_timestamp(cells[cols[0]]);
    double* fields[] = {&row.visibility_km, &row.t2m_c,    &row.d2m_c,    &row.ws10_mps,
                        &row.sp_hpa,        &row.lcc_frac, &row.t950_c};
    for (std::size_t k = 0; k < 7; ++k) *fields[k] = csv::to_double(cells[cols[k + 1]]).value_or(kNaN);
    row.metar_reported = cells[cols[8]] == "1";
    if (!series.rows.empty() &&
        row.timestamp != series.rows.back().timestamp + std::chrono::hours{1}) {
      throw Error(ErrorCode::kNonMonotonicTime, "series not on a contiguous hourly grid at line " +
                                                    std::to_string(lineno));
    }
    series.rows.push_back(row);
  }
  return series;
}

}  // namespace fogcast::ingest
