#include <filesystem>
#include <fstream>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "rectspike/commands.hpp"
#include "rectspike/error.hpp"

using namespace rectspike;
using namespace rectspike::cli;
namespace fs = std::filesystem;

namespace {

const fs::path kData = RECTSPIKE_TEST_DATA_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

json tiny_doc() { return json::parse(slurp(kData / "data" / "tiny.json")); }

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("rectspike_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_doc(const fs::path& dir, const json& doc) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << doc.dump(2);
  return p;
}

}  // namespace

TEST_CASE("config: unknown keys are rejected") {
  json doc = tiny_doc();
  CHECK_NOTHROW(parse_experiment(doc));
  doc["trails"] = 3;
  CHECK_THROWS_AS(parse_experiment(doc), ConfigError);
  doc = tiny_doc();
  doc["spikes"]["modle"] = "iid";
  CHECK_THROWS_AS(parse_experiment(doc), ConfigError);
  doc = tiny_doc();
  doc["collect"]["projection"] = true;
  CHECK_THROWS_AS(parse_experiment(doc), ConfigError);
  doc = tiny_doc();
  doc["measure"]["sigma"] = 1.0;
  CHECK_THROWS_AS(parse_experiment(doc), ConfigError);
  try {
    json d = tiny_doc();
    d["trails"] = 3;
    parse_experiment(d);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("trails") != std::string::npos);
  }
}

TEST_CASE("config: defaults and overrides") {
  const ExperimentFile f = parse_experiment(tiny_doc(), Overrides{99, 2, 1});
  CHECK(f.c == 1.0);
  CHECK(f.cfg.seed == 99);
  CHECK(f.cfg.trials == 2);
  CHECK(f.cfg.threads == 1);
  CHECK(f.source.at("seed") == 99);
  CHECK(*f.cfg.bulk_edge == 2.0);
  CHECK(f.tolerances.projection == 0.5);
  CHECK(f.tolerances.master_residual == 1e-6);

  json haar = tiny_doc();
  haar["measure"] = "haar";
  const ExperimentFile h = parse_experiment(haar);
  CHECK(std::holds_alternative<HaarSquare>(h.cfg.noise));
  CHECK(*h.cfg.bulk_edge == 1.0);

  json rect = tiny_doc();
  rect["measure"] = {{"kind", "uniform"}, {"a", 1.0}, {"b", 2.0}};
  rect["m"] = 80;
  CHECK(parse_experiment(rect).c == 0.5);
}

TEST_CASE("config: schema violations") {
  json doc = tiny_doc();
  doc["edge"] = "smallest";
  doc["m"] = 50;
  CHECK_THROWS_AS(parse_experiment(doc), ConfigError);
  doc = tiny_doc();
  doc["spikes"]["thetas"] = json::array({1.0, 2.0});
  CHECK_THROWS_AS(parse_experiment(doc), ConfigError);
  doc = tiny_doc();
  doc["seed"] = -1;
  CHECK_THROWS_AS(parse_experiment(doc), ConfigError);
  doc = tiny_doc();
  doc.erase("n");
  CHECK_THROWS_AS(parse_experiment(doc), ConfigError);
  CHECK_THROWS_AS(parse_measure(json{{"kind", "wishart"}}), ConfigError);
}

TEST_CASE("measure literals") {
  CHECK(parse_measure(json::parse(R"({"kind":"atomic","atoms":[[1,0.5],[2,0.5]]})")).atoms().size() == 2);
  CHECK(parse_measure(json::parse(R"({"kind":"empirical","values":[1,2,3]})")).kind() == MeasureKind::empirical);
  CHECK(parse_measure(json("haar")).bounds().b == 1.0);
  CHECK(parse_measure(json::parse(R"({"kind":"point","sigma":2})")).bounds().a == 2.0);
  CHECK(parse_measure(json::parse(R"({"kind":"semicircle","a":1,"b":2})")).kind() == MeasureKind::density);
}

TEST_CASE("manifest round trip") {
  RunManifest m;
  m.config = tiny_doc();
  m.seed = 17;
  m.version = "1.2.3";
  m.wall_clock_seconds = 0.25;
  m.criteria.push_back({"value_1_mean", true, 2.49, 2.5, 0.02});
  m.criteria.push_back({"weyl_violations", false, 1.0, std::nullopt, 0.0});
  const json j = to_json(m);
  CHECK_FALSE(j.at("all_passed").get<bool>());
  const RunManifest back = manifest_from_json(j);
  CHECK(to_json(back).dump() == j.dump());
  CHECK(back.criteria[0].predicted == 2.5);
  CHECK_FALSE(back.criteria[1].predicted.has_value());

  json bad = j;
  bad["extra"] = 1;
  CHECK_THROWS_AS(manifest_from_json(bad), ConfigError);
}

TEST_CASE("transform subcommand") {
  std::ostringstream out, err;
  TransformArgs a;
  a.measure.measure = "mp";
  a.measure.c = 1.0;
  a.fn = "dinv";
  a.w = {0.25};
  CHECK(cmd_transform(a, out, err) == kExitOk);
  CHECK(out.str() == "fn,input,value\ndinv,0.25,2.5\n");

  out.str("");
  TransformArgs h;
  h.measure.measure = "haar";
  h.fn = "threshold-large";
  CHECK(cmd_transform(h, out, err) == kExitOk);
  CHECK(out.str().find("threshold-large,,0\n") != std::string::npos);

  out.str("");
  TransformArgs q;
  q.measure.measure = "mp";
  q.measure.c = 0.25;
  q.fn = "threshold-large";
  q.format = "json";
  CHECK(cmd_transform(q, out, err) == kExitOk);
  const json j = json::parse(out.str());
  CHECK(std::abs(j.at(0).at("value").get<double>() - 0.70710678118654) < 1e-9);

  std::ostringstream err2;
  TransformArgs bad = a;
  bad.fn = "phi";
  bad.w.clear();
  bad.z = {1.0};
  CHECK(cmd_transform(bad, out, err2) == kExitUsage);
  CHECK(err2.str().find("z = 1") != std::string::npos);
}

TEST_CASE("predict subcommand") {
  std::ostringstream out, err;
  PredictArgs p;
  p.measure.c = 1.0;
  p.thetas = {2.0};
  CHECK(cmd_predict(p, out, err) == kExitOk);
  CHECK(out.str().rfind("theta,supercritical,limit,left_proj_sq,right_proj_sq,fluct_std,delocalization_hypothesis\n", 0) == 0);
  {
    const std::string row = out.str().substr(out.str().find('\n') + 1);
    std::vector<std::string> cells;
    std::stringstream ss(row);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    REQUIRE(cells.size() == 7);
    CHECK(cells[1] == "true");
    CHECK(std::stod(cells[2]) == doctest::Approx(2.5).epsilon(1e-10));
    CHECK(std::stod(cells[3]) == doctest::Approx(0.75).epsilon(1e-10));
    CHECK(std::stod(cells[4]) == doctest::Approx(0.75).epsilon(1e-10));
    CHECK(std::stod(cells[5]) == doctest::Approx(std::sqrt(0.75)).epsilon(1e-9));
  }

  out.str("");
  p.thetas = {0.5};
  CHECK(cmd_predict(p, out, err) == kExitOk);
  CHECK(out.str().find("\n0.5,false,2,0,0,,yes\n") != std::string::npos);

  out.str("");
  PredictArgs h;
  h.measure.measure = "haar";
  h.thetas = {1.0};
  h.edge = "smallest";
  CHECK(cmd_predict(h, out, err) == kExitOk);
  CHECK(out.str().find("\n1,true,0.61803398875,0.27639320225,0.27639320225,") != std::string::npos);

  PredictArgs bad = p;
  bad.thetas = {1.0, 2.0};
  CHECK(cmd_predict(bad, out, err) == kExitUsage);
  bad = p;
  bad.edge = "smallest";
  CHECK(cmd_predict(bad, out, err) == kExitUsage);
}

TEST_CASE("simulate: golden outputs and determinism") {
  const fs::path dir = scratch("golden");
  GlobalOptions g;
  g.out = dir / "run1";
  g.include_wall_clock = false;
  std::ostringstream out, err;
  CHECK(cmd_simulate(kData / "data" / "tiny.json", g, out, err) == kExitOk);
  CHECK(slurp(dir / "run1" / "manifest.json") == slurp(kData / "golden" / "tiny_manifest.json"));
  CHECK(slurp(dir / "run1" / "aggregate.csv") == slurp(kData / "golden" / "tiny_aggregate.csv"));
  CHECK(fs::exists(dir / "run1" / "trials.csv"));
  CHECK_FALSE(fs::exists(dir / "run1" / "histogram.csv"));

  g.out = dir / "run2";
  g.overrides.threads = 1;
  CHECK(cmd_simulate(kData / "data" / "tiny.json", g, out, err) == kExitOk);
  CHECK(slurp(dir / "run2" / "aggregate.csv") == slurp(dir / "run1" / "aggregate.csv"));

  const RunManifest m = manifest_from_json(json::parse(slurp(dir / "run1" / "manifest.json")));
  CHECK(m.all_passed());
  CHECK_FALSE(m.wall_clock_seconds.has_value());
  fs::remove_all(dir);
}

TEST_CASE("simulate: exit codes") {
  const fs::path dir = scratch("exit");
  GlobalOptions g;
  g.out = dir / "out";
  std::ostringstream out, err;

  json square = tiny_doc();
  square["edge"] = "smallest";
  square["m"] = 60;
  CHECK(cmd_simulate(write_doc(dir, square), g, out, err) == kExitUsage);
  CHECK(cmd_simulate(dir / "missing.json", g, out, err) == kExitUsage);

  // A replayed dump smaller than the configured shape fails inside the trial.
  json dump = tiny_doc();
  dump["noise"] = {{"kind", "dump"}, {"path", (dir / "nope.bin").string()}};
  CHECK(cmd_simulate(write_doc(dir, dump), g, out, err) == kExitUsage);

  // Criteria failing (tight tolerance) gives exit 1 and still writes outputs.
  json tight = tiny_doc();
  tight["tolerances"]["value_supercritical"] = 1e-9;
  std::ostringstream report;
  CHECK(cmd_simulate(write_doc(dir, tight), g, report, err) == kExitVerifyFailed);
  CHECK(report.str().find("FAIL value_1_mean") != std::string::npos);
  CHECK(fs::exists(dir / "out" / "manifest.json"));
  fs::remove_all(dir);
}

TEST_CASE("simulate: trial failure removes partial outputs") {
  const fs::path dir = scratch("runtime");
  Rng rng = make_trial_rng(1, 0);
  write_matrix_dump<double>(dir / "x.bin", sample_noise<double>(GaussianRect{}, 40, 40, rng));
  json doc = tiny_doc();
  doc["noise"] = {{"kind", "dump"}, {"path", (dir / "x.bin").string()}};
  doc["n"] = 30;
  doc["m"] = 30;
  GlobalOptions g;
  g.out = dir / "out";
  std::ostringstream out, err;
  CHECK(cmd_simulate(write_doc(dir, doc), g, out, err) == kExitRuntime);
  CHECK_FALSE(fs::exists(dir / "out" / "aggregate.csv"));
  CHECK_FALSE(fs::exists(dir / "out" / "manifest.json"));
  fs::remove_all(dir);
}

TEST_CASE("verify subcommand") {
  std::ostringstream out, err;
  GlobalOptions g;
  CHECK(cmd_verify(kData / "data" / "tiny.json", g, out, err) == kExitOk);
  const std::string text = out.str();
  CHECK(text.find("FAIL") == std::string::npos);
  CHECK(text.find("PASS u_identity") != std::string::npos);
  CHECK(text.find("PASS kernel_sum_residual") != std::string::npos);
  CHECK(text.find("PASS weyl_violations") != std::string::npos);
}

TEST_CASE("examples subcommand") {
  std::ostringstream out, err;
  CHECK(cmd_examples("json", out, err) == kExitOk);
  const json j = json::parse(out.str());
  bool found_gauss = false;
  bool found_haar = false;
  for (const auto& row : j.at("gaussian")) {
    if (row.at("c") == 1.0 && row.at("theta") == 2.0) {
      found_gauss = true;
      CHECK(std::abs(row.at("limit_numeric").get<double>() - 2.5) < 1e-8);
      CHECK(row.at("limit_closed").get<double>() == 2.5);
    }
  }
  for (const auto& row : j.at("haar")) {
    if (row.at("theta") == 1.0) {
      found_haar = true;
      CHECK(std::abs(row.at("largest_numeric").get<double>() - 1.618034) < 1e-6);
      CHECK(std::abs(row.at("smallest_numeric").get<double>() - 0.618034) < 1e-6);
    }
  }
  // At c = 0 the limit reduces to sqrt(1 + theta^2).
  for (const auto& row : j.at("gaussian")) {
    if (row.at("c") == 0.0) {
      const double t = row.at("theta").get<double>();
      CHECK(std::abs(row.at("limit_numeric").get<double>() - std::sqrt(1.0 + t * t)) < 1e-8);
    }
  }
  CHECK(found_gauss);
  CHECK(found_haar);
  std::ostringstream csv;
  CHECK(cmd_examples("csv", csv, err) == kExitOk);
  CHECK(cmd_examples("yaml", csv, err) == kExitUsage);
}
