#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gmf/cli.hpp"
#include "gmf/errors.hpp"
#include "gmf/estimators.hpp"

using namespace gmf;
using namespace gmf::cli;
namespace fs = std::filesystem;

namespace {

Json estimate_config() {
  return Json::parse(R"({
    "estimator": "annealed_naive",
    "model": {"beta2": 0.8, "q": 2},
    "ladder": {"dyadic": {"first": 2, "last": 5}},
    "replicas": 300,
    "seed": 17
  })");
}

int run_args(std::vector<std::string> args) {
  args.insert(args.begin(), "gmf");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("gmf_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const std::string& file(const CommandOutput& out, const std::string& name) {
  for (const auto& [n, text] : out.files)
    if (n == name) return text;
  throw std::runtime_error("missing output " + name);
}

}  // namespace

TEST_CASE("theory table") {
  const auto csv = parse_csv(theory_csv(2.0, 1, {0.0, 2.0 / 3.0, 1.0, 3.0}));
  CHECK(csv.header == kTheoryColumns);
  REQUIRE(csv.rows.size() == 4);
  const auto eta = csv.column("eta_q"), teta = csv.column("teta_q"), reg = csv.column("regime");
  CHECK(std::stod(csv.rows[0][eta]) == 0.0);
  CHECK(std::stod(csv.rows[1][teta]) == doctest::Approx(-2.0 / 3.0));
  CHECK(csv.rows[1][reg] == "Intermediate");
  CHECK(std::stod(csv.rows[3][eta]) == doctest::Approx(-1.0));
  CHECK(beta2_range(0.0, 1.0, 0.25).size() == 5);
}

TEST_CASE("config validation names the offending key") {
  Json c = estimate_config();
  c["model"]["betta2"] = 1.0;
  try {
    cmd_estimate(c, {});
    FAIL("expected a ParameterError");
  } catch (const ParameterError& e) {
    CHECK(std::string(e.what()).find("model.betta2") != std::string::npos);
  }
  Json d = estimate_config();
  d["ladder"] = Json::parse(R"({"eps": [0.5, 0.25, 0.25]})");
  CHECK_THROWS_WITH_AS(cmd_estimate(d, {}), doctest::Contains("duplicates rung 1"), ParameterError);
  Json e = estimate_config();
  e["estimator"] = "bogus";
  CHECK_THROWS_AS(cmd_estimate(e, {}), ParameterError);
}

TEST_CASE("zero temperature estimate fits a zero slope") {
  Json c = estimate_config();
  c["model"]["beta2"] = 0.0;
  auto out = cmd_estimate(c, {});
  const auto fit = parse_csv(file(out, "fit.csv"));
  REQUIRE(fit.rows.size() == 1);
  CHECK(std::abs(std::stod(fit.rows[0][fit.column("slope")])) < 1e-12);
  CHECK(std::abs(std::stod(fit.rows[0][fit.column("abs_error")])) < 1e-12);
}

TEST_CASE("csv round trip refits the same slope") {
  auto out = cmd_estimate(estimate_config(), {});
  const auto series = parse_csv(file(out, "series.csv"));
  CHECK(series.header == kSeriesColumns);
  std::vector<double> eps, y, se;
  for (const auto& row : series.rows) {
    eps.push_back(std::stod(row[series.column("eps")]));
    y.push_back(std::stod(row[series.column("log_estimate")]));
    se.push_back(std::stod(row[series.column("stderr")]));
  }
  const auto refit = estimators::fit_exponent(eps, y, se);
  const auto fit = parse_csv(file(out, "fit.csv"));
  CHECK(fit.header == kFitColumns);
  CHECK(std::abs(refit.slope - std::stod(fit.rows[0][fit.column("slope")])) <= 1e-12);
  CHECK(std::abs(refit.slope - out.manifest["fit"]["slope"].get<double>()) <= 1e-12);
}

TEST_CASE("manifest carries the normalised config") {
  auto out = cmd_estimate(estimate_config(), {});
  const Json& m = out.manifest;
  CHECK(m["command"] == "estimate");
  CHECK(m["schema_version"] == kSchemaVersion);
  CHECK(m["config"]["seed"] == 17);
  CHECK(m["config"]["ladder"]["eps"].size() == 4);
  CHECK(m["rungs"].size() == 4);
  CHECK(unwrap_config(m) == m["config"]);
}

TEST_CASE("seed override") {
  RunOptions o;
  o.seed = 99;
  auto a = cmd_estimate(estimate_config(), o);
  auto b = cmd_estimate(estimate_config(), {});
  CHECK(a.manifest["config"]["seed"] == 99);
  CHECK(file(a, "series.csv") != file(b, "series.csv"));
}

TEST_CASE("sweep in theory mode matches the theory table") {
  Json c = Json::parse(R"({"beta2": [0.0, 0.5, 1.0, 2.5], "model": {"q": 2},
                           "ladder": {"dyadic": {"first": 1, "last": 3}}, "replicas": 0})");
  auto out = cmd_sweep(c, {});
  CHECK(file(out, "sweep.csv") == theory_csv(2.0, 1, {0.0, 0.5, 1.0, 2.5}));
}

TEST_CASE("toolbox command reports no violations") {
  Json c = Json::parse(R"({"instances": 10, "samples": 2000, "seed": 3})");
  auto out = cmd_toolbox("kahane", c, {});
  CHECK(out.manifest["violations"] == 0);
  CHECK_THROWS_AS(cmd_toolbox("nope", c, {}), ParameterError);
}

TEST_CASE("end to end: rerun from manifest is byte-identical") {
  const auto dir = scratch("e2e");
  {
    std::ofstream cfg(dir / "cfg.json");
    cfg << estimate_config().dump();
  }
  const auto a = dir / "a", b = dir / "b";
  REQUIRE(run_args({"estimate", "--config", (dir / "cfg.json").string(), "--out", a.string(),
                    "--deterministic"}) == 0);
  REQUIRE(run_args({"estimate", "--config", (a / "manifest.json").string(), "--out", b.string(),
                    "--deterministic"}) == 0);
  CHECK(slurp(a / "series.csv") == slurp(b / "series.csv"));
  CHECK(slurp(a / "fit.csv") == slurp(b / "fit.csv"));
  CHECK(!slurp(a / "series.csv").empty());
  fs::remove_all(dir);
}

TEST_CASE("exit codes") {
  const auto dir = scratch("codes");
  CHECK(run_args({"estimate", "--config", (dir / "missing.json").string(), "--out",
                  (dir / "o").string()}) != 0);
  {
    std::ofstream cfg(dir / "dup.json");
    cfg << R"({"estimator": "annealed_naive", "model": {"beta2": 1},
              "ladder": {"eps": [0.5, 0.5, 0.25]}, "replicas": 200})";
  }
  CHECK(run_args({"estimate", "--config", (dir / "dup.json").string(), "--out",
                  (dir / "o").string()}) == 2);
  {
    std::ofstream cfg(dir / "big.json");
    cfg << R"({"estimator": "annealed_naive", "model": {"beta2": 1, "d": 2},
              "kernel": {"g_const": 1}, "ladder": {"eps": [0.25, 0.125, 0.015625]},
              "replicas": 200})";
  }
  CHECK(run_args({"estimate", "--config", (dir / "big.json").string(), "--out",
                  (dir / "o").string()}) == 3);
  {
    std::ofstream cfg(dir / "np.json");
    cfg << R"({"estimator": "annealed_naive", "model": {"beta2": 1, "d": 2},
              "ladder": {"eps": [0.5, 0.25, 0.125]}, "replicas": 200})";
  }
  CHECK(run_args({"estimate", "--config", (dir / "np.json").string(), "--out",
                  (dir / "o").string()}) == 4);
  CHECK(run_args({"bogus-command"}) == 2);
  CHECK(run_args({"theory", "--q", "2", "--d", "1", "--beta2-min", "0", "--beta2-max", "1",
                  "--step", "0.5", "--out", (dir / "t").string()}) == 0);
  CHECK(fs::exists(dir / "t" / "theory.csv"));
  fs::remove_all(dir);
}
