#include <cmath>
#include <fstream>
#include <random>
#include <string>

#include "doctest.h"
#include "fogcast/solar.hpp"
#include "test_util.hpp"

#include "../src/csv.hpp"

using namespace fogcast;
using namespace fogcast::solar;

namespace {

Timestamp on_day(int year, int doy, int hour = 0, int minute = 0) {
  return make_timestamp(year, 1, 1, hour, minute) + std::chrono::days(doy - 1);
}

}  // namespace

TEST_CASE("declination: sinusoidal model") {
  constexpr auto kSin = DeclinationModel::kSinusoidal;
  CHECK(solar_declination(81, kSin) == 0.0);
  // Frozen from an independent evaluation of 23.44 sin(2 pi (d - 81) / 365.25).
  CHECK(solar_declination(172, kSin) == doctest::Approx(23.439661307252845).epsilon(1e-13));
  CHECK(solar_declination(355, kSin) == doctest::Approx(-23.439986452258793).epsilon(1e-13));
  int argmax = 0, argmin = 0;
  for (int d = 1; d <= 366; ++d) {
    const double v = solar_declination(d, kSin);
    CHECK(std::abs(v) <= 23.44);
    if (v > solar_declination(argmax ? argmax : 1, kSin)) argmax = d;
    if (v < solar_declination(argmin ? argmin : 1, kSin)) argmin = d;
  }
  CHECK(std::abs(argmax - 172) <= 1);
  CHECK(std::abs(argmin - 355) <= 1);
}

TEST_CASE("declination: Spencer series") {
  // Frozen from an independent evaluation of the Spencer Fourier series.
  CHECK(solar_declination(1) == doctest::Approx(-23.058629169260467).epsilon(1e-12));
  CHECK(solar_declination(172) == doctest::Approx(23.452046074516133).epsilon(1e-12));
  CHECK(solar_declination(355) == doctest::Approx(-23.419890406297718).epsilon(1e-12));
  for (int d = 1; d <= 366; ++d) CHECK(std::abs(solar_declination(d)) <= 23.46);
  CHECK_THROWS_AS(solar_declination(0), Error);
  CHECK_THROWS_AS(solar_declination(367), Error);
}

TEST_CASE("equation of time") {
  CHECK(equation_of_time_minutes(106) == doctest::Approx(0.019576611458480473).epsilon(1e-9));
  CHECK(equation_of_time_minutes(1) == doctest::Approx(-2.90416896).epsilon(1e-9));
  for (int d = 1; d <= 366; ++d) CHECK(std::abs(equation_of_time_minutes(d)) < 17.0);
}

TEST_CASE("hour angle") {
  CHECK(std::abs(hour_angle(on_day(2011, 106, 12), 0.0)) < 0.3);
  CHECK(hour_angle(on_day(2011, 106, 0), 0.0) == doctest::Approx(-180.0).epsilon(1e-4));
  CHECK(std::abs(hour_angle(on_day(2011, 106, 6), 90.0) - hour_angle(on_day(2011, 106, 12), 0.0)) < 1e-9);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> lon(-180.0, 180.0);
  std::uniform_int_distribution<int> minute(0, 24 * 60 * 365 - 1);
  for (int i = 0; i < 1000; ++i) {
    const double h = hour_angle(make_timestamp(2011, 1, 1) + std::chrono::minutes(minute(rng)), lon(rng));
    CHECK(h >= -180.0);
    CHECK(h < 180.0);
  }
}

TEST_CASE("elevation: reference cases") {
  // Equator, equinox, apparent solar noon: zenith sun.
  const double eot = equation_of_time_minutes(81);
  const Timestamp noon = on_day(2011, 81, 12) - std::chrono::seconds(std::lround(eot * 60.0));
  CHECK(solar_elevation(0.0, 0.0, noon, DeclinationModel::kSinusoidal) == doctest::Approx(90.0).epsilon(1e-5));
  CHECK(std::abs(solar_elevation(0.0, 0.0, noon) - 90.0) < 0.5);
  CHECK(elevation_from_components(0.0, 0.0, 0.0) == 90.0);

  // Pole at equinox: the sun sits on the horizon all day.
  for (int hr = 0; hr < 24; ++hr) {
    CHECK(std::abs(solar_elevation(90.0, 0.0, on_day(2011, 81, hr), DeclinationModel::kSinusoidal)) < 1e-9);
  }

  // Santiago, mid-winter local night.
  CHECK(solar_elevation(-33.45, -70.79, make_timestamp(2010, 6, 21, 4)) < 0.0);
  CHECK_THROWS_AS(solar_elevation(90.5, 0.0, noon), Error);
}

TEST_CASE("elevation: stored components are consistent") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> lat(-90.0, 90.0), lon(-180.0, 180.0);
  std::uniform_int_distribution<long> sec(0, 40L * 365 * 86400);
  for (int i = 0; i < 2000; ++i) {
    const auto g = solar_geometry(lat(rng), lon(rng), make_timestamp(1995, 1, 1) + std::chrono::seconds(sec(rng)));
    const double e = elevation_from_components(g.latitude_deg, g.declination_deg, g.hour_angle_deg);
    CHECK(std::abs(g.elevation_deg - e) < 1e-9);
    CHECK(std::abs(g.declination_deg) <= 23.46);
  }
}

TEST_CASE("elevation: hemispheric antisymmetry at noon") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> lat(-90.0, 90.0), dec(-23.44, 23.44);
  for (int i = 0; i < 1000; ++i) {
    const double phi = lat(rng), delta = dec(rng);
    CHECK(std::abs(elevation_from_components(phi, delta, 0.0) -
                   elevation_from_components(-phi, -delta, 0.0)) < 1e-9);
  }
}

TEST_CASE("elevation: continuity over one minute") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> lat(-90.0, 90.0), lon(-180.0, 180.0);
  std::uniform_int_distribution<long> minute(0, 30L * 365 * 1440);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double a = lat(rng), o = lon(rng);
    const Timestamp t = make_timestamp(2000, 1, 1) + std::chrono::minutes(minute(rng));
    worst = std::max(worst, std::abs(solar_elevation(a, o, t) - solar_elevation(a, o, t + std::chrono::minutes(1))));
  }
  CHECK(worst < 0.5);
}

TEST_CASE("elevation: daily maximum sits at apparent solar noon") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> lat(-80.0, 80.0), lon(-150.0, 150.0);
  std::uniform_int_distribution<int> doy(1, 365);
  for (int i = 0; i < 200; ++i) {
    const double a = lat(rng), o = lon(rng);
    const int d = doy(rng);
    const double noon_h = 12.0 - o / 15.0 - equation_of_time_minutes(d) / 60.0;
    const Timestamp day = on_day(2011, d);
    const int noon_min = int(std::lround(noon_h * 60.0));
    int best = -1;
    double best_e = -100.0;
    for (int m = std::max(0, noon_min - 180); m <= std::min(1439, noon_min + 180); ++m) {
      const double e = solar_elevation(a, o, day + std::chrono::minutes(m));
      if (e > best_e) {
        best_e = e;
        best = m;
      }
    }
    INFO("lat " << a << " lon " << o << " day " << d);
    CHECK(std::abs(best - noon_h * 60.0) <= 10.0);
  }
}

TEST_CASE("elevation: bounds on random inputs") {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> lat(-90.0, 90.0), lon(-180.0, 180.0);
  std::uniform_int_distribution<long> sec(0, 60L * 365 * 86400);
  for (int i = 0; i < 100000; ++i) {
    const double e = solar_elevation(lat(rng), lon(rng), make_timestamp(1980, 1, 1) + std::chrono::seconds(sec(rng)));
    REQUIRE(e >= -90.0);
    REQUIRE(e <= 90.0);
  }
}

TEST_CASE("elevation: agreement with the SPA reference table") {
  std::ifstream in(testing::data_dir() / "solar_reference.csv");
  REQUIRE(in);
  std::string line;
  std::getline(in, line);
  std::size_t n = 0;
  double worst = 0.0, worst_sin = 0.0;
  while (std::getline(in, line)) {
    const auto c = csv::split(line);
    const Timestamp ts = parse_timestamp(c[0]);
    const double lat = *csv::to_double(c[1]), lon = *csv::to_double(c[2]), ref = *csv::to_double(c[3]);
    worst = std::max(worst, std::abs(solar_elevation(lat, lon, ts) - ref));
    worst_sin = std::max(worst_sin, std::abs(solar_elevation(lat, lon, ts, DeclinationModel::kSinusoidal) - ref));
    ++n;
  }
  MESSAGE("max |error| vs SPA: spencer " << worst << " deg, sinusoidal " << worst_sin << " deg");
  CHECK(n == 1000);
  CHECK(worst <= 1.0);
}
