#pragma once

#include "fogcast/common.hpp"

// Closed-form solar geometry: declination, equation of time, hour angle and
// geometric (refraction-free) elevation.
namespace fogcast::solar {

enum class DeclinationModel {
  // Spencer (1971) Fourier series. Default; keeps elevation within ~0.7 deg
  // of a full solar-position algorithm.
  kSpencer,
  // 23.44 * sin(2*pi*(day - 81)/365.25). Kept for comparison; its error
  // against a full algorithm reaches ~1.4 deg of elevation.
  kSinusoidal,
};

struct SolarGeometry {
  double declination_deg = 0.0;
  double hour_angle_deg = 0.0;
  double elevation_deg = 0.0;
  double latitude_deg = 0.0;
};

// Throws Error(kOutOfRangeDay) outside 1..366.
double solar_declination(int day_of_year, DeclinationModel model = DeclinationModel::kSpencer);

// Spencer (1971) equation of time in minutes.
double equation_of_time_minutes(int day_of_year);

// Degrees in [-180, 180); zero at apparent solar noon, positive afternoon.
double hour_angle(Timestamp ts, double lon_deg);

// asin(sin(lat) sin(decl) + cos(lat) cos(decl) cos(h)), all in degrees.
double elevation_from_components(double lat_deg, double declination_deg, double hour_angle_deg);

// Throws Error(kOutOfRangeLatitude) when |lat| > 90.
SolarGeometry solar_geometry(double lat_deg, double lon_deg, Timestamp ts,
                             DeclinationModel model = DeclinationModel::kSpencer);

double solar_elevation(double lat_deg, double lon_deg, Timestamp ts,
                       DeclinationModel model = DeclinationModel::kSpencer);

}  // namespace fogcast::solar
