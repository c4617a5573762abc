#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "fogcast/features.hpp"
#include "fogcast/solar.hpp"
#include "fogcast/synth.hpp"
#include "test_util.hpp"

using namespace fogcast;
using namespace fogcast::features;

namespace {

// Flat, fully reported series: every predictor constant unless overridden.
ingest::SiteSeries flat_series(std::size_t n, double vis = 10.0) {
  ingest::SiteSeries s;
  s.meta = {"FLAT", 45.0, 5.0, 100.0};
  const Timestamp t0 = make_timestamp(2011, 1, 10);
  for (std::size_t i = 0; i < n; ++i) {
    ingest::HourlyRow r;
    r.timestamp = t0 + std::chrono::hours(i);
    r.visibility_km = vis;
    r.t2m_c = 8.0;
    r.d2m_c = 6.0;
    r.ws10_mps = 2.0;
    r.sp_hpa = 1010.0;
    r.lcc_frac = 0.3;
    r.t950_c = 10.0;
    r.metar_reported = true;
    s.rows.push_back(r);
  }
  return s;
}

ingest::SiteSeries synthetic(int days = 60, std::uint64_t seed = 3) {
  synth::SyntheticSiteSpec spec;
  spec.n_days = days;
  spec.seed = seed;
  return synth::synthesize_site(spec);
}

}  // namespace

TEST_CASE("schema is frozen") {
  CHECK(kFeatureNames.size() == 19);
  CHECK(kFeatureNames[0] == "visibilidad_actual");
  CHECK(kFeatureNames[9] == "gradiente_termico_950_sfc");
  CHECK(kFeatureNames[16] == "angulo_solar");
  CHECK(kFeatureNames[18] == "is_night");
  CHECK(schema_names().size() == 19);
  CHECK(std::set<std::string_view>(kFeatureNames.begin(), kFeatureNames.end()).size() == 19);
}

TEST_CASE("relative humidity (Magnus)") {
  CHECK(relative_humidity(20.0, 10.0) == doctest::Approx(52.54132558106588).epsilon(1e-13));
  CHECK(relative_humidity(0.0, -5.0) == doctest::Approx(69.05886777748835).epsilon(1e-13));
  CHECK(relative_humidity(30.0, 30.0) == 100.0);
  CHECK(relative_humidity(10.0, 12.0) == 100.0);  // supersaturated input clamps
}

TEST_CASE("labels use a strict 1 km threshold at t + horizon") {
  auto s = flat_series(20);
  s.rows[12].visibility_km = 0.5;
  s.rows[14].visibility_km = 1.0;
  const auto ds = assemble_features(s, 2);
  // Rows start at index 6 of the series.
  REQUIRE(ds.size() == 20 - 6 - 2);
  CHECK(ds.timestamps.front() == s.rows[6].timestamp);
  CHECK(ds.timestamps.back() == s.rows[17].timestamp);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const std::size_t t = i + 6;
    CHECK(ds.y[i] == (t + 2 == 12 ? 1 : 0));
  }
}

TEST_CASE("unreported hours never label fog") {
  auto s = flat_series(20);
  s.rows[12].visibility_km = 0.3;
  s.rows[12].metar_reported = false;
  const auto ds = assemble_features(s, 2);
  for (auto v : ds.y) CHECK(v == 0);
}

TEST_CASE("constant series gives zero rates and trends") {
  const auto ds = assemble_features(flat_series(30), 2);
  for (std::size_t r = 0; r < ds.size(); ++r) {
    CHECK(ds.x(r, kTasaEnfriamiento3h) == 0.0);
    CHECK(ds.x(r, kTasaEnfriamiento6h) == 0.0);
    CHECK(ds.x(r, kTendenciaDepresionRocio3h) == 0.0);
    CHECK(ds.x(r, kTendenciaPresion3h) == 0.0);
    CHECK(ds.x(r, kDepresionPuntoRocio) == 2.0);
    CHECK(ds.x(r, kGradienteTermico950Sfc) == 2.0);
  }
}

TEST_CASE("sign conventions for cooling and inversion") {
  auto s = flat_series(20);
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    s.rows[i].t2m_c = 20.0 - double(i);  // cooling at 1 C/h
    s.rows[i].d2m_c = 5.0;
    s.rows[i].sp_hpa = 1000.0 + 0.5 * double(i);
    s.rows[i].t950_c = s.rows[i].t2m_c + (i % 2 ? 1.5 : -1.5);
  }
  const auto ds = assemble_features(s, 1);
  for (std::size_t r = 0; r < ds.size(); ++r) {
    const std::size_t t = r + 6;
    CHECK(ds.x(r, kTasaEnfriamiento3h) == doctest::Approx(1.0));
    CHECK(ds.x(r, kTasaEnfriamiento6h) == doctest::Approx(1.0));
    CHECK(ds.x(r, kTendenciaDepresionRocio3h) == doctest::Approx(-3.0));
    CHECK(ds.x(r, kTendenciaDepresionRocio6h) == doctest::Approx(-6.0));
    CHECK(ds.x(r, kTendenciaPresion3h) == doctest::Approx(1.5));
    CHECK((ds.x(r, kGradienteTermico950Sfc) > 0.0) == (s.rows[t].t950_c > s.rows[t].t2m_c));
  }
}

TEST_CASE("lags, solar columns, and row drops") {
  auto s = flat_series(40);
  for (std::size_t i = 0; i < s.rows.size(); ++i) s.rows[i].visibility_km = 0.1 * double(i + 1);
  s.rows[20].lcc_frac = kNaN;
  const auto ds = assemble_features(s, 2);
  CHECK(ds.size() == 40 - 6 - 2 - 1);
  for (std::size_t r = 0; r < ds.size(); ++r) {
    const double now = ds.x(r, kVisibilidadActual);
    CHECK(ds.x(r, kVisibilidadLag1h) == doctest::Approx(now - 0.1));
    CHECK(ds.x(r, kVisibilidadLag3h) == doctest::Approx(now - 0.3));
    CHECK(ds.x(r, kVisibilidadLag6h) == doctest::Approx(now - 0.6));
    CHECK(ds.x(r, kAnguloSolar) == solar::solar_elevation(45.0, 5.0, ds.timestamps[r]));
    CHECK(ds.x(r, kIsNight) == (ds.x(r, kAnguloSolar) < 0.0 ? 1.0 : 0.0));
    CHECK(ds.x(r, kDiaDelAno) == day_of_year(ds.timestamps[r]));
    CHECK(ds.timestamps[r] != s.rows[20].timestamp);
  }
}

TEST_CASE("too short a series is rejected") {
  CHECK_THROWS_AS(assemble_features(flat_series(8), 2), Error);
  CHECK_NOTHROW(assemble_features(flat_series(9), 2));
}

TEST_CASE("synthetic series: no missing values, domain invariants") {
  const auto ds = assemble_features(synthetic(), 2);
  REQUIRE(!ds.empty());
  for (std::size_t r = 0; r < ds.size(); ++r) {
    for (std::size_t c = 0; c < kNumFeatures; ++c) REQUIRE(std::isfinite(ds.x(r, c)));
    CHECK((ds.x(r, kIsNight) == 0.0 || ds.x(r, kIsNight) == 1.0));
    CHECK(ds.x(r, kCoberturaNubesBajas) >= 0.0);
    CHECK(ds.x(r, kCoberturaNubesBajas) <= 1.0);
    CHECK(ds.x(r, kDiaDelAno) >= 1.0);
    CHECK(ds.x(r, kDiaDelAno) <= 366.0);
  }
}

TEST_CASE("label shift: moving visibility k hours moves labels k rows") {
  const auto base = synthetic(40, 9);
  const auto ds = assemble_features(base, 2);
  for (std::size_t k : {1, 3, 5}) {
    auto shifted = base;
    for (std::size_t i = 0; i + k < base.rows.size(); ++i) {
      shifted.rows[i + k].visibility_km = base.rows[i].visibility_km;
    }
    const auto ds2 = assemble_features(shifted, 2);
    REQUIRE(ds2.size() == ds.size());
    for (std::size_t r = 0; r + k < ds.size(); ++r) CHECK(ds2.y[r + k] == ds.y[r]);
  }
}

TEST_CASE("feature causality: truncating the future changes nothing") {
  const auto base = synthetic(30, 4);
  const auto full = assemble_features(base, 2);
  for (std::size_t cut : {50, 133, 300}) {
    auto head = base;
    head.rows.resize(cut + 1 + 2);  // keep t plus the label hour
    // Anything after t other than the label is scrambled.
    for (std::size_t i = cut + 1; i < head.rows.size(); ++i) {
      head.rows[i].t2m_c = -40.0;
      head.rows[i].sp_hpa = 900.0;
    }
    const auto part = assemble_features(head, 2);
    const std::size_t r = cut - 6;
    REQUIRE(part.size() == r + 1);
    CHECK(part.timestamps[r] == full.timestamps[r]);
    for (std::size_t c = 0; c < kNumFeatures; ++c) CHECK(part.x(r, c) == full.x(r, c));
  }
}

TEST_CASE("scaler: two-point and degenerate columns") {
  FeatureDataset ds;
  ds.site = "S";
  std::array<double, kNumFeatures> a{}, b{};
  a.fill(5.0);
  b.fill(5.0);
  a[0] = 1.0;
  b[0] = 3.0;
  ds.timestamps = {make_timestamp(2011, 1, 1), make_timestamp(2011, 1, 1, 1)};
  ds.x.append_row(a);
  ds.x.append_row(b);
  ds.y = {0, 1};
  const auto st = fit_scaler(ds);
  CHECK(st.mean[0] == 2.0);
  CHECK(st.std[0] == 1.0);
  CHECK(st.mean[1] == 5.0);
  CHECK(st.std[1] == 1.0);
  const auto z = apply_scaler(st, ds);
  CHECK(z.standardized);
  CHECK(z.x(0, 0) == -1.0);
  CHECK(z.x(1, 0) == 1.0);
  CHECK(z.x(0, 1) == 0.0);
  CHECK_THROWS_AS(apply_scaler(st, z), Error);
  CHECK_THROWS_AS(fit_scaler(FeatureDataset{}), Error);
}

TEST_CASE("scaler: standardized train moments, inversion, purity") {
  const auto ds = assemble_features(synthetic(90, 5), 2);
  const auto st = fit_scaler(ds);
  const auto before = scaler_json(st);
  const auto z = apply_scaler(st, ds);
  CHECK(scaler_json(st) == before);
  for (std::size_t c = 0; c < kNumFeatures; ++c) {
    double sum = 0.0, ss = 0.0;
    for (std::size_t r = 0; r < z.size(); ++r) sum += z.x(r, c);
    const double mean = sum / double(z.size());
    for (std::size_t r = 0; r < z.size(); ++r) ss += (z.x(r, c) - mean) * (z.x(r, c) - mean);
    const double sd = std::sqrt(ss / double(z.size()));
    CHECK(std::abs(mean) <= 1e-9);
    if (st.std[c] != 1.0 || sd > 0.0) CHECK(std::abs(sd - 1.0) <= 1e-9);
  }
  const auto back = invert_scaler(st, z);
  for (std::size_t r = 0; r < ds.size(); ++r) {
    for (std::size_t c = 0; c < kNumFeatures; ++c) {
      CHECK(std::abs(back.x(r, c) - ds.x(r, c)) <= 1e-9 * std::max(1.0, std::abs(ds.x(r, c))));
    }
  }
  // Applying at the mean gives zeros.
  FeatureDataset one;
  one.timestamps = {ds.timestamps[0]};
  one.x.append_row(std::span<const double>(st.mean.data(), kNumFeatures));
  one.y = {0};
  const auto zero = apply_scaler(st, one);
  for (std::size_t c = 0; c < kNumFeatures; ++c) CHECK(zero.x(0, c) == 0.0);

  std::istringstream in(scaler_json(st));
  CHECK(parse_scaler_json(in) == st);
}

TEST_CASE("split by period") {
  auto spec = synth::SyntheticSiteSpec{};
  spec.n_days = 365 * 3;
  spec.start_year = 2002;
  const auto ds = assemble_features(synth::synthesize_site(spec), 2);
  const auto sp = split_by_period(ds, TimeRange::years(2002, 2003), TimeRange::years(2004, 2004));
  CHECK(sp.train.size() + sp.test.size() <= ds.size());
  CHECK(!sp.train.empty());
  CHECK(!sp.test.empty());
  CHECK(sp.train.timestamps.back() < sp.test.timestamps.front());
  for (std::size_t i = 1; i < sp.test.size(); ++i) CHECK(sp.test.timestamps[i - 1] < sp.test.timestamps[i]);
  for (auto t : sp.train.timestamps) CHECK(utc_year(t) <= 2003);

  const auto empty_test = split_by_period(ds, TimeRange::years(2002, 2003),
                                          {make_timestamp(2010, 1, 1), make_timestamp(2010, 1, 1)});
  CHECK(empty_test.test.empty());
  CHECK(empty_test.train.size() == sp.train.size());

  try {
    split_by_period(ds, TimeRange::years(2002, 2003), TimeRange::years(2003, 2004));
    FAIL("expected OverlappingRanges");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kOverlappingRanges);
  }
}

TEST_CASE("dataset csv and sidecar round trip") {
  const auto ds = assemble_features(synthetic(35, 6), 3);
  std::stringstream ss;
  write_dataset_csv(ss, ds);
  auto back = read_dataset_csv(ss);
  std::istringstream side(dataset_sidecar_json(ds));
  apply_sidecar_json(side, back);
  CHECK(back.site == ds.site);
  CHECK(back.horizon_h == 3);
  CHECK(back.timestamps == ds.timestamps);
  CHECK(back.y == ds.y);
  CHECK(back.x == ds.x);
}
