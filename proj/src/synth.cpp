#include "fogcast/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "csv.hpp"
#include "fogcast/solar.hpp"

namespace fogcast::synth {

std::string_view to_string(Regime r) {
  return r == Regime::kRadiative ? "radiative" : "rare_event";
}

Regime parse_regime(std::string_view s) {
  if (s == "radiative") return Regime::kRadiative;
  if (s == "rare_event") return Regime::kRareEvent;
  throw Error(ErrorCode::kInvalidSpec, "unknown regime '" + std::string(s) + "'");
}

void SyntheticSiteSpec::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kInvalidSpec, m); };
  if (n_days < 30) fail("n_days must be at least 30");
  if (!(std::abs(lat_deg) <= 90.0)) fail("latitude outside [-90, 90]");
  if (!(std::abs(lon_deg) <= 180.0)) fail("longitude outside [-180, 180]");
  if (!(fog_propensity >= 0.0 && fog_propensity <= 1.0)) fail("fog_propensity outside [0, 1]");
  if (icao.empty()) fail("empty site identifier");
  if (start_year < 1900 || start_year > 2200) fail("start_year outside [1900, 2200]");
}

namespace {

// Raw-bit uniform and Box-Muller normal so a seed yields the same series on
// every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() { return double(gen_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct Climate {
  double deficit_mean;    // slow dew-point deficit below smoothed temperature, K
  double deficit_sd;
  double wind_median;     // m/s
  bool mist_stage;        // fog thickens out of mist instead of appearing at once
  double trigger_scale;   // multiplies fog_propensity
  double fog_end_night;   // hourly dissipation probability before sunrise
  double fog_end_day;
};

Climate climate_for(Regime r) {
  if (r == Regime::kRadiative) return {5.0, 2.5, 3.0, true, 1.0, 0.08, 0.45};
  return {7.5, 2.5, 4.0, false, 0.04, 0.9, 0.95};
}

enum class Phase { kClear, kMist, kFog };

// Fog needs a dark, near-saturated, calm surface layer.
constexpr double kTriggerDepression = 1.5;
constexpr double kTriggerWind = 3.0;
constexpr double kMistToFog = 0.2;
constexpr int kMinMistHours = 2;
constexpr double kReanalysisErrorSd = 0.7;  // K

}  // namespace

ingest::SiteSeries synthesize_site(const SyntheticSiteSpec& spec) {
  spec.validate();
  const Climate cl = climate_for(spec.regime);
  Rng rng(spec.seed);

  const double abs_lat = std::abs(spec.lat_deg);
  const double hemisphere = spec.lat_deg >= 0.0 ? 1.0 : -1.0;
  const double annual_mean = 24.0 - 0.35 * abs_lat;
  const double seasonal_amp = 0.22 * abs_lat;
  const double diurnal_amp = 5.0;
  const double deg = std::numbers::pi / 180.0;

  ingest::SiteSeries series;
  series.meta = {spec.icao, spec.lat_deg, spec.lon_deg, spec.elevation_m};
  const std::size_t n_hours = std::size_t(spec.n_days) * 24;
  series.rows.reserve(n_hours);

  const Timestamp start = make_timestamp(spec.start_year, 1, 1);
  double temp = annual_mean;
  double temp_smooth = annual_mean;
  double deficit = cl.deficit_mean;
  double cloud = 0.0;
  double wind_anom = 0.0;
  double pressure = 1015.0;
  double inversion = 0.0;
  double vis = 10.0;
  Phase phase = Phase::kClear;
  int mist_hours = 0;
  // Grid-scale reanalysis departs from the site's own surface layer.
  double err_t = 0.0, err_td = 0.0, err_ws = 0.0;

  for (std::size_t i = 0; i < n_hours; ++i) {
    const Timestamp ts = start + std::chrono::hours(i);
    const auto geo = solar::solar_geometry(spec.lat_deg, spec.lon_deg, ts);
    const double elev = geo.elevation_deg;
    const bool night = elev < 0.0;
    const double season = annual_mean + seasonal_amp * hemisphere * geo.declination_deg / 23.44;

    cloud = 0.97 * cloud + 0.25 * rng.normal();
    const double lcc = sigmoid(1.6 * cloud - 0.8);
    const double clear = 1.0 - lcc;

    pressure += 0.5 * rng.normal() - 0.01 * (pressure - 1015.0);
    pressure = std::clamp(pressure, 985.0, 1040.0);

    wind_anom = 0.92 * wind_anom + 0.3 * rng.normal();
    double ws = cl.wind_median *
                std::exp(wind_anom + (night ? -0.2 : 0.25) - 0.04 * (pressure - 1015.0));
    ws = std::min(ws, 25.0);
    const double calm = std::clamp((4.0 - ws) / 4.0, 0.0, 1.0);

    double target = season + diurnal_amp * (0.4 + 0.6 * clear) * std::sin(elev * deg);
    if (night) target -= 3.0 * clear * calm;
    temp += 0.25 * (target - temp) + 0.3 * rng.normal();
    temp_smooth += (temp - temp_smooth) / 48.0;

    const double rho = 0.985;
    deficit = cl.deficit_mean + rho * (deficit - cl.deficit_mean) +
              cl.deficit_sd * std::sqrt(1.0 - rho * rho) * rng.normal();
    deficit = std::max(deficit, 0.0);
    const double dew = std::min(temp, temp_smooth - deficit);

    inversion = 0.85 * inversion + (night ? 1.2 * clear * calm : 0.0);

    const double depression = temp - dew;
    const bool conditions = night && depression < kTriggerDepression && ws < kTriggerWind;
    const double trigger = spec.fog_propensity * cl.trigger_scale;

    switch (phase) {
      case Phase::kClear:
        if (conditions && rng.uniform() < trigger) {
          phase = cl.mist_stage ? Phase::kMist : Phase::kFog;
          mist_hours = 0;
          if (phase == Phase::kFog) vis = 0.6;
        }
        break;
      case Phase::kMist:
        ++mist_hours;
        if (elev > 2.0 || ws > 4.0) {
          if (rng.uniform() < 0.5) phase = Phase::kClear;
        } else if (mist_hours >= kMinMistHours && rng.uniform() < kMistToFog) {
          phase = Phase::kFog;
          vis = 0.9;
        }
        break;
      case Phase::kFog: {
        // Daylight and wind mix the fog layer out.
        double end = elev > 3.0 ? cl.fog_end_day : cl.fog_end_night;
        if (ws > 4.0) end = std::max(end, 0.3);
        if (rng.uniform() < end) phase = Phase::kClear;
        break;
      }
    }

    switch (phase) {
      case Phase::kClear: {
        const double haze = std::clamp(3.5 + 2.0 * depression, 3.5, 10.0);
        vis = std::clamp(0.6 * vis + 0.4 * haze + 0.2 * rng.normal(), 1.5, 10.0);
        break;
      }
      case Phase::kMist:
        vis = std::clamp(0.5 * std::min(vis, 2.5) + 0.5 * 1.6 + 0.2 * rng.normal(), 1.1, 2.8);
        break;
      case Phase::kFog: {
        const double lv = 0.8 * std::log(std::min(vis, 0.95)) + 0.2 * std::log(0.3) + 0.25 * rng.normal();
        vis = std::clamp(std::exp(lv), 0.05, 0.95);
        break;
      }
    }

    const double phi = 0.9, innov = std::sqrt(1.0 - phi * phi);
    err_t = phi * err_t + kReanalysisErrorSd * innov * rng.normal();
    err_td = phi * err_td + kReanalysisErrorSd * innov * rng.normal();
    err_ws = phi * err_ws + 0.2 * innov * rng.normal();
    const double grid_t = temp + err_t;
    const double grid_td = std::min(grid_t, dew + err_td);

    ingest::HourlyRow row;
    row.timestamp = ts;
    row.visibility_km = vis;
    row.t2m_c = grid_t;
    row.d2m_c = grid_td;
    row.ws10_mps = ws * std::exp(err_ws);
    row.sp_hpa = pressure;
    row.lcc_frac = lcc;
    row.t950_c = temp_smooth - 3.0 + inversion + err_t;
    row.metar_reported = true;
    series.rows.push_back(row);
  }
  return series;
}

void write_synthetic_inputs(const ingest::SiteSeries& series, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + (dir / name).string());
    return out;
  };

  auto asos = open("asos.csv");
  asos << "station,valid,vsby,tmpf,dwpf,sknt,mslp\n";
  for (const auto& r : series.rows) {
    // "YYYY-MM-DD HH:MM" as in the archive export
    const std::string stamp = format_timestamp(r.timestamp);
    asos << series.meta.icao << ',' << stamp.substr(0, 10) << ' ' << stamp.substr(11, 5) << ','
         << csv::fmt(r.visibility_km / ingest::kKmPerStatuteMile) << ','
         << csv::fmt(r.t2m_c * 9.0 / 5.0 + 32.0) << ',' << csv::fmt(r.d2m_c * 9.0 / 5.0 + 32.0)
         << ',' << csv::fmt(r.ws10_mps / ingest::kMpsPerKnot) << ',' << csv::fmt(r.sp_hpa) << '\n';
  }

  std::vector<ingest::Era5Record> era5;
  era5.reserve(series.rows.size());
  for (const auto& r : series.rows) {
    era5.push_back({r.timestamp, r.t2m_c, r.d2m_c, r.ws10_mps, r.sp_hpa, r.lcc_frac, r.t950_c});
  }
  auto reanalysis = open("era5.csv");
  ingest::write_era5_csv(reanalysis, era5);

  auto meta = open("site.json");
  meta << ingest::site_meta_json(series.meta);
  if (!asos || !reanalysis || !meta) throw Error(ErrorCode::kIoError, "write failed under " + dir.string());
}

}  // namespace fogcast::synth
