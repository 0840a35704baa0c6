#include <doctest.h>

#include "approx.hpp"

#include <filesystem>
#include <fstream>

#include "recoil/digest.hpp"
#include "recoil/grid_io.hpp"
#include "recoil/runner.hpp"

using namespace recoil;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

RunConfig config_in(const std::string& dir) {
  RunConfig c;
  c.out_dir = fs::temp_directory_path() / "recoil_runner_tests" / dir;
  fs::remove_all(c.out_dir);
  c.formats = {"csv", "json", "svg"};
  return c;
}

void check_outputs_valid(const RunOutcome& o) {
  CHECK(validate_output(o.manifest_path).empty());
  for (const auto& f : o.files) {
    const auto problems = validate_output(f);
    CHECK_MESSAGE(problems.empty(), f.string(), ": ", problems.empty() ? "" : problems.front());
  }
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

}  // namespace

TEST_CASE("axis specs") {
  CHECK(AxisSpec{0, 1, 5, true}.values().back() == 1.0);
  CHECK(AxisSpec{0, 1, 4, false}.values().back() == approx(0.75));
  CHECK(AxisSpec{2, 2, 1, true}.values() == std::vector<double>{2});
  CHECK_THROWS_AS((AxisSpec{0, 1, 0, true}.values()), ConfigError);
  CHECK_THROWS_AS((AxisSpec{1, 0, 3, true}.values()), ConfigError);
}

TEST_CASE("run config JSON round trip") {
  RunConfig c = config_in("cfg");
  c.params = symmetric_params(0.03, 0.2, 0.1, 2.0);
  c.r_axis = AxisSpec{-1, 1, 7, true};
  c.dk0 = 0.01;
  c.metric = "K";
  const json j = c;
  const RunConfig back = j.get<RunConfig>();
  CHECK(json(back) == j);
  CHECK(back.params == c.params);
  CHECK(back.dk0 == c.dk0);
}

TEST_CASE("amplitude verb: normalized grid, deterministic digest, manifest") {
  RunConfig c = config_in("amp");
  c.params = symmetric_params(0.05, 0.1);
  c.grid_scale = 0.5;
  const RunOutcome a = cmd_amplitude(c);
  const fs::path grid = c.out_dir / "amplitude.grid";
  std::ifstream in(grid);
  std::string header;
  std::getline(in, header);
  const json h = json::parse(header);
  CHECK(std::abs(h["l2_mass"].get<double>() - 1.0) < 1e-10);
  CHECK(h["schema_version"] == kGridSchemaVersion);
  check_outputs_valid(a);
  const std::string digest = sha256_file(grid);
  const RunOutcome b = cmd_amplitude(c);
  CHECK(sha256_file(grid) == digest);
  CHECK(a.manifest["outputs"][0]["sha256"] == b.manifest["outputs"][0]["sha256"]);
  CHECK(a.manifest["tool_version"] == RECOIL_VERSION);
}

TEST_CASE("amplitude verb: trapped configuration is a degeneracy error") {
  RunConfig c = config_in("trap");
  c.params = symmetric_params(0.0, 0.1);
  CHECK_THROWS_WITH_AS(cmd_amplitude(c), "identically zero amplitude, nothing to normalize", DegeneracyError);
  try {
    cmd_amplitude(c);
  } catch (const Error& e) {
    const json doc = error_document(e);
    CHECK(doc["exit_code"] == 3);
    CHECK(doc["kind"] == "error");
  }
}

TEST_CASE("report verb at the dark state") {
  RunConfig c = config_in("report");
  c.params = symmetric_params(0.05, 0.1);
  const RunOutcome o = cmd_report(c);
  const json r = read_json(c.out_dir / "report.json");
  CHECK(r["R"].get<double>() == approx(100.3).epsilon(0.10));
  CHECK(r["K"].get<double>() == approx(45.5).epsilon(0.15));
  CHECK(r["PE"].get<double>() == approx(1.0).epsilon(0.20));
  CHECK(r["pe_validated"] == true);
  CHECK(r["resolution_adequate"] == true);
  CHECK(r["extrapolated"] == false);
  CHECK(r["var_single"].get<double>() > r["var_coin"].get<double>());
  CHECK(o.headline["R"] == r["R"]);
  check_outputs_valid(o);
}

TEST_CASE("report verb with the separable fixture") {
  RunConfig c = config_in("sep");
  c.fixture = "separable";
  const json r = entanglement_report(c);
  CHECK(r["R"].get<double>() == approx(1.0).epsilon(1e-10));
  CHECK(r["K"].get<double>() == approx(1.0).epsilon(1e-10));
  CHECK(r["PE"].get<double>() == approx(2.2).epsilon(1e-10));
  c.fixture = "unknown";
  CHECK_THROWS_AS(entanglement_report(c), ConfigError);
}

TEST_CASE("invalid parameters give a structured config error") {
  RunConfig c = config_in("bad");
  c.params.eta = -1.0;
  try {
    cmd_report(c);
    FAIL("expected an error");
  } catch (const Error& e) {
    const json doc = error_document(e);
    CHECK(doc["code"] == "config_error");
    CHECK(doc["exit_code"] == 2);
    CHECK(doc["schema_version"] == kOutputSchemaVersion);
    CHECK(doc.contains("message"));
  }
}

TEST_CASE("scan verb writes long-form CSV and a summary") {
  RunConfig c = config_in("scan");
  c.params = symmetric_params(0.05, 0.1);
  c.grid_scale = 0.5;
  c.r_axis = AxisSpec{-3.0, 3.0, 13, true};
  c.theta_axis = AxisSpec{kPi - 2.5, kPi + 2.5, 11, true};
  const RunOutcome o = cmd_scan(c);
  check_outputs_valid(o);
  const json s = read_json(c.out_dir / "scan_summary.json");
  CHECK(s["peak"]["r"].get<double>() == approx(0.0).scale(1e-12));
  CHECK(s["peak"]["theta"].get<double>() == approx(kPi));
  CHECK(s["missing"] == 0);
  CHECK(s["fwhm_r"]["bounded"] == true);
  std::ifstream in(c.out_dir / "scan.csv");
  std::string line;
  int rows = -2;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 13 * 11);
}

TEST_CASE("scan verb rejects an empty axis") {
  RunConfig c = config_in("scan_empty");
  c.r_axis = AxisSpec{0, 1, 0, true};
  CHECK_THROWS_AS(cmd_scan(c), ConfigError);
}

TEST_CASE("modes verb: rank-one fixture emits one mode and clamps with a warning") {
  RunConfig c = config_in("modes_fixture");
  c.fixture = "separable";
  c.n_modes = 3;
  const RunOutcome o = cmd_modes(c);
  check_outputs_valid(o);
  CHECK(o.headline["modes_written"] == 1);
  CHECK(fs::exists(c.out_dir / "mode_1.csv"));
  CHECK_FALSE(fs::exists(c.out_dir / "mode_2.csv"));
  bool warned = false;
  for (const auto& w : o.manifest["warnings"]) warned |= w.get<std::string>().find("only 1 retained") != std::string::npos;
  CHECK(warned);
  const json spec = read_json(c.out_dir / "spectrum.json");
  CHECK(spec["K"].get<double>() == approx(1.0).epsilon(1e-10));
  CHECK(spec["modes"][0]["atomic_peaks"] == 1);
}

TEST_CASE("modes verb at the dark state") {
  RunConfig c = config_in("modes");
  c.params = symmetric_params(0.1, 0.1);
  c.n_modes = 3;
  const RunOutcome o = cmd_modes(c);
  check_outputs_valid(o);
  const json spec = read_json(c.out_dir / "spectrum.json");
  CHECK(spec["modes"].size() == 3);
  CHECK(spec["truncation"]["retained_mass"].get<double>() > 1 - 1e-6);
  const auto ev = spec["eigenvalues"].get<std::vector<double>>();
  for (std::size_t n = 1; n < ev.size(); ++n) CHECK(ev[n] <= ev[n - 1]);
  CHECK(spec["K"].get<double>() == approx(o.headline["K"].get<double>()));
}

TEST_CASE("modes verb over budget instructs a coarser grid") {
  RunConfig c = config_in("modes_budget");
  c.params = symmetric_params(0.05, 0.1);
  c.max_schmidt_entries = 1000;
  CHECK_THROWS_AS(cmd_modes(c), BudgetError);
  try {
    cmd_modes(c);
  } catch (const BudgetError& e) {
    CHECK(std::string(e.what()).find("coarser grid") != std::string::npos);
    CHECK(error_document(e)["exit_code"] == 4);
  }
}

TEST_CASE("manifest round trip reproduces the headline exactly") {
  RunConfig c = config_in("roundtrip");
  c.params = symmetric_params(0.08, 0.1, 0.2, 2.9);
  const RunOutcome first = cmd_report(c);
  const ManifestRun run = read_manifest(first.manifest_path);
  CHECK(run.command == "report");
  const RunOutcome second = cmd_report(run.config);
  CHECK(second.headline == first.headline);
  CHECK(second.headline["K"].dump() == first.headline["K"].dump());
  CHECK(first.manifest["outputs"][0]["sha256"] == second.manifest["outputs"][0]["sha256"]);
}

TEST_CASE("unknown recipes and malformed manifests are config errors") {
  RunConfig c = config_in("recipes");
  CHECK(recipe_names().size() == 5);
  CHECK_THROWS_AS(cmd_reproduce("fig9", c), ConfigError);
  fs::create_directories(c.out_dir);
  std::ofstream(c.out_dir / "junk.json") << "{\"kind\": \"scan_summary\"}";
  CHECK_THROWS_AS(read_manifest(c.out_dir / "junk.json"), ConfigError);
  CHECK_THROWS_AS(read_manifest(c.out_dir / "absent.json"), ConfigError);
}

TEST_CASE("schema check flags malformed outputs") {
  RunConfig c = config_in("schema");
  fs::create_directories(c.out_dir);
  std::ofstream(c.out_dir / "a.json") << "{\"schema_version\": 1, \"kind\": \"entanglement_report\", \"R\": 1}";
  CHECK_FALSE(validate_output(c.out_dir / "a.json").empty());
  std::ofstream(c.out_dir / "b.csv") << "r,theta\n1,2\n";
  CHECK_FALSE(validate_output(c.out_dir / "b.csv").empty());
  std::ofstream(c.out_dir / "c.csv") << "# schema_version=1 kind=scan_long\nr,theta,metric,value,flags\n1,2,R\n";
  CHECK_FALSE(validate_output(c.out_dir / "c.csv").empty());
}
