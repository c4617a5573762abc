#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "fogcast/common.hpp"
#include "fogcast/ingest.hpp"

// Seeded generator of hourly airport series with radiation-fog physics, used
// as the end-to-end test vehicle when no station archive is at hand.
namespace fogcast::synth {

enum class Regime {
  // Fog forms on clear calm nights through a mist stage and persists for hours.
  kRadiative,
  // Drier, windier climate; fog appears abruptly and clears within an hour or two.
  kRareEvent,
};

std::string_view to_string(Regime r);
Regime parse_regime(std::string_view s);  // throws kInvalidSpec

struct SyntheticSiteSpec {
  std::string icao = "SYNT";
  double lat_deg = 40.0;
  double lon_deg = -3.5;
  double elevation_m = 100.0;
  int n_days = 365;
  std::uint64_t seed = 1;
  double fog_propensity = 0.6;  // hourly trigger probability once conditions hold
  Regime regime = Regime::kRadiative;
  int start_year = 2001;  // series starts at 00:00 UTC on 1 January

  void validate() const;  // throws kInvalidSpec
};

// Every hour carries a report. Same settings, same series.
ingest::SiteSeries synthesize_site(const SyntheticSiteSpec& spec);

// Writes asos.csv, era5.csv and site.json so the series can be replayed
// through the ingestion path. Throws kIoError.
void write_synthetic_inputs(const ingest::SiteSeries& series, const std::filesystem::path& dir);

}  // namespace fogcast::synth
