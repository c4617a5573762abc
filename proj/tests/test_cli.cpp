#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using fogcast::testing::TempDir;
using fogcast::testing::read_file;

namespace {

// Runs the tool inside `dir`; returns its exit status.
int run_cli(const fs::path& dir, const std::string& args) {
  const std::string cmd = "cd '" + dir.string() + "' && '" FOGCAST_CLI_PATH "' " + args + " > cli.log 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::string small_config(int trees) {
  nlohmann::json j = {
      {"sites",
       {{{"icao", "TRN1"},
         {"role", "train"},
         {"synthetic", {{"lat", 41.0}, {"lon", 2.0}, {"n_days", 730}, {"seed", 3}, {"start_year", 2001}}}},
        {{"icao", "XFR1"},
         {"role", "transfer"},
         {"synthetic", {{"lat", -35.0}, {"lon", -58.0}, {"n_days", 365}, {"seed", 4}, {"start_year", 2002}}}}}},
      {"train_range", {{"years", {2001, 2001}}}},
      {"test_range", {{"years", {2002, 2002}}}},
      {"hyperparams", {{"n_estimators", trees}}},
      {"output_dir", "from_config"}};
  return j.dump(2);
}

}  // namespace

TEST_CASE("cli: stage-by-stage pipeline") {
  TempDir dir("cli_chain");
  const auto& d = dir.path();
  REQUIRE(run_cli(d, "synth --icao SYNX --days 200 --seed 5 --out site") == 0);
  for (const char* f : {"asos.csv", "era5.csv", "site.json", "series.csv"}) CHECK(fs::exists(d / "site" / f));
  REQUIRE(run_cli(d, "ingest-metar --input site/asos.csv --out obs.csv") == 0);
  REQUIRE(run_cli(d, "ingest-era5 --metar obs.csv --era5 site/era5.csv --site site/site.json --out series.csv") == 0);
  REQUIRE(run_cli(d, "featurize --series series.csv --site site/site.json --horizon 2 --out feat.csv") == 0);
  CHECK(fs::exists(d / "feat.csv.meta.json"));
  REQUIRE(run_cli(d, "train --features feat.csv --trees 15 --seed 7 --out model") == 0);
  CHECK(fs::exists(d / "model" / "model.json"));
  CHECK(fs::exists(d / "model" / "scaler.json"));
  const auto model_before = read_file(d / "model" / "model.json");

  REQUIRE(run_cli(d, "evaluate --features feat.csv --model-dir model --threshold 0.3 --out eval") == 0);
  const auto report = nlohmann::json::parse(read_file(d / "eval" / "report.json"));
  CHECK(report.at("threshold") == 0.3);
  CHECK(fs::exists(d / "eval" / "roc.csv"));

  REQUIRE(run_cli(d, "transfer --features feat.csv --model-dir model --out transfer") == 0);
  CHECK(fs::exists(d / "transfer" / "SYNX" / "report.json"));
  REQUIRE(run_cli(d, "explain --features feat.csv --model-dir model --max-rows 25 --out explain") == 0);
  CHECK(fs::exists(d / "explain" / "importance.csv"));
  REQUIRE(run_cli(d, "calibrate --features feat.csv --model-dir model --objective min_recall --min-recall 0.8 --out cal") == 0);
  CHECK(fs::exists(d / "cal" / "report.json"));
  CHECK(read_file(d / "model" / "model.json") == model_before);
}

TEST_CASE("cli: raw METAR corpus ingests") {
  TempDir dir("cli_metar");
  const auto corpus = fogcast::testing::data_dir() / "metar_corpus.txt";
  REQUIRE(run_cli(dir.path(), "ingest-metar --input '" + corpus.string() + "' --year 2011 --month 3 --out obs.csv") == 0);
  CHECK(fs::exists(dir.path() / "obs.csv"));
}

TEST_CASE("cli: run and sweep from a config, flags override") {
  TempDir dir("cli_run");
  const auto& d = dir.path();
  write(d / "exp.json", small_config(20));
  REQUIRE(run_cli(d, "run --config exp.json --out flagged --horizon 3 --seed 9") == 0);
  CHECK(!fs::exists(d / "from_config"));
  REQUIRE(fs::exists(d / "flagged" / "experiment.json"));
  const auto model = nlohmann::json::parse(read_file(d / "flagged" / "model.json"));
  CHECK(model.at("metadata").at("horizon_h") == 3);
  CHECK(model.at("hyperparams").at("seed") == 9);
  CHECK(fs::exists(d / "flagged" / "sites" / "XFR1" / "report.json"));

  REQUIRE(run_cli(d, "sweep --config exp.json --horizons 2 3 --out sweep_out") == 0);
  const auto sweep = read_file(d / "sweep_out" / "sweep.csv");
  CHECK(sweep.rfind("horizon_h,auc,auprc,mcc,f1\n", 0) == 0);
}

TEST_CASE("cli: exit codes") {
  TempDir dir("cli_exit");
  const auto& d = dir.path();
  CHECK(run_cli(d, "--help") == 0);
  CHECK(run_cli(d, "") == 2);                       // no subcommand
  CHECK(run_cli(d, "train --no-such-flag") == 2);   // usage
  CHECK(run_cli(d, "run --config missing.json") == 2);
  write(d / "bad.json", R"({"sites": [], "bogus": true})");
  CHECK(run_cli(d, "run --config bad.json") == 2);
  CHECK(run_cli(d, "synth --days 5 --out s") == 2);  // invalid spec
  CHECK(run_cli(d, "featurize --series nope.csv --site nope.json --out f.csv") == 3);

  REQUIRE(run_cli(d, "synth --days 60 --seed 2 --out site") == 0);
  REQUIRE(run_cli(d, "featurize --series site/series.csv --site site/site.json --out feat.csv") == 0);
  REQUIRE(run_cli(d, "train --features feat.csv --trees 3 --out model") == 0);

  write(d / "model" / "model.json.bak", read_file(d / "model" / "model.json"));
  write(d / "model" / "model.json", "{\"format\": ");
  CHECK(run_cli(d, "evaluate --features feat.csv --model-dir model --out e") == 3);

  // A zero-cover internal node is a broken model invariant.
  auto m = nlohmann::json::parse(read_file(d / "model" / "model.json.bak"));
  m["trees"][0]["nodes"][0]["cover"] = 0.0;
  write(d / "model" / "model.json", m.dump());
  CHECK(run_cli(d, "explain --features feat.csv --model-dir model --out x") == 4);
}
