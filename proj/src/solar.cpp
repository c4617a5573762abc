#include "fogcast/solar.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace fogcast::solar {

namespace {

constexpr double kDeg = 180.0 / std::numbers::pi;
constexpr double kRad = std::numbers::pi / 180.0;

void check_day(int day_of_year) {
  if (day_of_year < 1 || day_of_year > 366) {
    throw Error(ErrorCode::kOutOfRangeDay, "day of year " + std::to_string(day_of_year));
  }
}

// Fractional year angle used by both Spencer series.
double day_angle(int day_of_year) {
  return 2.0 * std::numbers::pi * (day_of_year - 1) / 365.0;
}

double wrap_degrees(double deg) {
  double w = std::fmod(deg + 180.0, 360.0);
  if (w < 0.0) w += 360.0;
  return w - 180.0;
}

}  // namespace

double solar_declination(int day_of_year, DeclinationModel model) {
  check_day(day_of_year);
  if (model == DeclinationModel::kSinusoidal) {
    return 23.44 * std::sin(2.0 * std::numbers::pi * (day_of_year - 81) / 365.25);
  }
  const double b = day_angle(day_of_year);
  const double rad = 0.006918 - 0.399912 * std::cos(b) + 0.070257 * std::sin(b) -
                     0.006758 * std::cos(2 * b) + 0.000907 * std::sin(2 * b) -
                     0.002697 * std::cos(3 * b) + 0.00148 * std::sin(3 * b);
  return rad * kDeg;
}

double equation_of_time_minutes(int day_of_year) {
  check_day(day_of_year);
  const double b = day_angle(day_of_year);
  return 229.18 * (0.000075 + 0.001868 * std::cos(b) - 0.032077 * std::sin(b) -
                   0.014615 * std::cos(2 * b) - 0.040849 * std::sin(2 * b));
}

double hour_angle(Timestamp ts, double lon_deg) {
  const double solar_time =
      utc_fractional_hours(ts) + lon_deg / 15.0 + equation_of_time_minutes(day_of_year(ts)) / 60.0;
  return wrap_degrees(15.0 * (solar_time - 12.0));
}

double elevation_from_components(double lat_deg, double declination_deg, double hour_angle_deg) {
  const double phi = lat_deg * kRad;
  const double delta = declination_deg * kRad;
  const double s = std::sin(phi) * std::sin(delta) +
                   std::cos(phi) * std::cos(delta) * std::cos(hour_angle_deg * kRad);
  return std::asin(std::clamp(s, -1.0, 1.0)) * kDeg;
}

SolarGeometry solar_geometry(double lat_deg, double lon_deg, Timestamp ts, DeclinationModel model) {
  if (!(std::abs(lat_deg) <= 90.0)) {
    throw Error(ErrorCode::kOutOfRangeLatitude, "latitude " + std::to_string(lat_deg));
  }
  SolarGeometry g;
  g.latitude_deg = lat_deg;
  g.declination_deg = solar_declination(day_of_year(ts), model);
  g.hour_angle_deg = hour_angle(ts, lon_deg);
  g.elevation_deg = elevation_from_components(lat_deg, g.declination_deg, g.hour_angle_deg);
  return g;
}

double solar_elevation(double lat_deg, double lon_deg, Timestamp ts, DeclinationModel model) {
  return solar_geometry(lat_deg, lon_deg, ts, model).elevation_deg;
}

}  // namespace fogcast::solar
