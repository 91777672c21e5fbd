#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "pilotwave/cli.hpp"
#include "pilotwave/fixtures.hpp"
#include "pilotwave/io.hpp"
#include "support.hpp"

using namespace pilotwave;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> bundled_scenarios() {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(scenario_dir())) {
    if (e.path().extension() == ".scn") names.push_back(e.path().stem().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

std::string write_text(const fs::path& path, const std::string& text) {
  std::ofstream(path) << text;
  return path.string();
}

const char* const kSmallFree = R"(name = small_free
[model]
kind = particle_schrodinger
masses = [1.0]
[initial]
state = gaussian_packet(center = [0.0], width = [1.0], momentum = [0.5])
[domain]
solver = grid
axes = [axis(-20.0, 20.0, 256)]
[time]
dt = 0.01
t_final = 0.2
[ensemble]
samples = 300
seed = 4
recorded = 5
)";

}  // namespace

TEST_CASE("every bundled scenario validates") {
  auto names = bundled_scenarios();
  REQUIRE(names.size() >= 10);
  for (const auto& n : names) {
    std::ostringstream out, err;
    CAPTURE(n);
    CAPTURE(err.str());
    CHECK(cmd_validate(n, {}, out, err) == kExitCertified);
  }
}

TEST_CASE("malformed scenarios exit 1 and name the key") {
  auto dir = testing::scratch_dir("cli");
  std::ostringstream out, err;
  std::string bad = kSmallFree;
  bad += "bogus_key = 3\n";
  CHECK(cmd_validate(write_text(dir / "bad.scn", bad), {}, out, err) == kExitFailure);
  CHECK(err.str().find("ensemble.bogus_key") != std::string::npos);

  std::ostringstream out2, err2;
  CHECK(cmd_validate(write_text(dir / "syntax.scn", "name = x\n[time]\ndt = [0.1,\n"), {}, out2, err2) == kExitFailure);
  CHECK(err2.str().find("time.dt") != std::string::npos);

  std::ostringstream out3, err3;
  CHECK(cmd_validate(write_text(dir / "ok.scn", kSmallFree), {"time.dt=0"}, out3, err3) == kExitFailure);
  CHECK(err3.str().find("INVALID_TIMESTEP") != std::string::npos);

  std::ostringstream out4, err4;
  RunArgs args{write_text(dir / "bad.scn", bad), (dir / "run").string()};
  CHECK(cmd_run(args, out4, err4) == kExitFailure);
  CHECK_FALSE(fs::exists(dir / "run" / "report.json"));
  fs::remove_all(dir);
}

TEST_CASE("validate accepts exactly what run accepts") {
  auto dir = testing::scratch_dir("agree");
  const std::vector<std::vector<std::string>> cases = {
      {},
      {"time.dt=0"},
      {"time.t_final=-1"},
      {"ensemble.samples=0"},
      {"model.masses=[-1.0]"},
      {"domain.axes=[axis(-1.0, 1.0, 256)]"},
      {"time.dt=0.03"},
      {"ensemble.recorded=2"},
  };
  auto path = write_text(dir / "s.scn", kSmallFree);
  for (std::size_t i = 0; i < cases.size(); ++i) {
    std::ostringstream o1, e1, o2, e2;
    int v = cmd_validate(path, cases[i], o1, e1);
    RunArgs args{path, (dir / fmt::format("run{}", i)).string(), cases[i]};
    int r = cmd_run(args, o2, e2);
    CAPTURE(i);
    CAPTURE(e1.str());
    CAPTURE(e2.str());
    CHECK((v == kExitCertified) == (r != kExitFailure));
  }
  fs::remove_all(dir);
}

TEST_CASE("node crossing finishes with diagnostics") {
  auto dir = testing::scratch_dir("node");
  std::ostringstream out, err;
  RunArgs args{"node_crossing", dir.string()};
  CHECK(cmd_run(args, out, err) == kExitDiagnostics);
  auto manifest = nlohmann::json::parse(read_file((dir / "manifest.json").string()));
  CHECK(manifest["certification"]["exit_code"] == 2);
  CHECK(manifest["node_events"].size() > 0);
  for (const auto& e : manifest["node_events"]) {
    CHECK(e.contains("trajectory"));
    CHECK(e.contains("time"));
    CHECK(e.contains("density"));
  }
  fs::remove_all(dir);
}

TEST_CASE("identical runs write identical data files") {
  auto dir = testing::scratch_dir("repro");
  auto path = write_text(dir / "s.scn", kSmallFree);
  std::ostringstream out, err;
  RunArgs a{path, (dir / "a").string()}, b{path, (dir / "b").string()};
  REQUIRE(cmd_run(a, out, err) == kExitCertified);
  REQUIRE(cmd_run(b, out, err) == kExitCertified);
  for (const char* name : {"scenario.scn", "trajectories.csv", "positions.csv", "histograms.csv", "report.json", "psi_final.bin"}) {
    CAPTURE(name);
    CHECK(read_file((dir / "a" / name).string()) == read_file((dir / "b" / name).string()));
  }
  auto ma = nlohmann::json::parse(read_file((dir / "a" / "manifest.json").string()));
  auto mb = nlohmann::json::parse(read_file((dir / "b" / "manifest.json").string()));
  CHECK(ma["files"] == mb["files"]);
  CHECK(ma["scenario_hash"] == mb["scenario_hash"]);

  RunArgs c{path, (dir / "c").string(), {}, 99};
  REQUIRE(cmd_run(c, out, err) == kExitCertified);
  CHECK(read_file((dir / "a" / "positions.csv").string()) != read_file((dir / "c" / "positions.csv").string()));
  fs::remove_all(dir);
}

TEST_CASE("field exports") {
  auto dir = testing::scratch_dir("export");
  std::ostringstream out, err;
  RunArgs args{"vacuum", (dir / "run").string(),
               {"ensemble.samples=200", "time.t_final=0.4", "ensemble.recorded=2"}};
  REQUIRE(cmd_run(args, out, err) == kExitCertified);

  ExportArgs b;
  b.run_dir = (dir / "run").string();
  b.kind = "B";
  b.time = 0.0;
  b.trajectory = 200;  // first pinned trajectory, started at q = 0
  b.output = (dir / "b.json").string();
  b.format = "json";
  std::ostringstream o1, e1;
  REQUIRE(cmd_export(b, o1, e1) == kExitCertified);
  auto j = nlohmann::json::parse(read_file(b.output));
  REQUIRE(j["rows"].size() > 0);
  for (const auto& row : j["rows"]) {
    CHECK(row[3].get<double>() == 0.0);
    CHECK(row[4].get<double>() == 0.0);
    CHECK(row[5].get<double>() == 0.0);
  }

  ExportArgs e = b;
  e.kind = "E_T";
  e.time = 0.4;
  e.output = (dir / "e.csv").string();
  e.format = "csv";
  std::ostringstream o2, e2;
  CHECK(cmd_export(e, o2, e2) == kExitFailure);
  CHECK(e2.str().find("E_T") != std::string::npos);
  CHECK_FALSE(fs::exists(e.output));

  e.time = 0.2;
  e.trajectory = 201;
  std::ostringstream o3, e3;
  CHECK(cmd_export(e, o3, e3) == kExitCertified);
  CHECK(fs::exists(e.output));

  ExportArgs tr = b;
  tr.kind = "trajectory";
  tr.time = 0.4;
  tr.output = (dir / "tr.csv").string();
  std::ostringstream o4, e4;
  CHECK(cmd_export(tr, o4, e4) == kExitCertified);

  ExportArgs late = b;
  late.time = 5.0;
  std::ostringstream o5, e5;
  CHECK(cmd_export(late, o5, e5) == kExitFailure);
  fs::remove_all(dir);
}

TEST_CASE("fixtures reference implemented checkers") {
  const auto& registry = checker_registry();
  auto listed = manifest_checkers((fs::path(scenario_dir()) / "checkers.manifest").string());
  std::set<std::string> from_manifest(listed.begin(), listed.end());
  std::set<std::string> from_registry;
  for (const auto& [id, fn] : registry) from_registry.insert(id);
  CHECK(from_manifest == from_registry);

  for (const auto& name : bundled_scenarios()) {
    bool found = false;
    for (const auto& e : fs::directory_iterator(scenario_dir())) {
      if (e.path().extension() != ".fix") continue;
      Fixture f = load_fixture(e.path().string());
      if (f.scenario == name) found = true;
    }
    CAPTURE(name);
    CHECK(found);
  }

  for (const auto& e : fs::directory_iterator(scenario_dir())) {
    if (e.path().extension() != ".fix") continue;
    Fixture f = load_fixture(e.path().string());
    CHECK(f.name == e.path().stem().string());
    CHECK_FALSE(f.properties.empty());
    for (const auto& p : f.properties) {
      CAPTURE(p.name);
      CHECK(registry.count(p.checker) == 1);
      CHECK(from_manifest.count(p.checker) == 1);
      CHECK(p.tolerance > 0.0);
      CHECK((p.basis == "analytic" || p.basis == "statistical" || p.basis == "numerical" || p.basis == "structural"));
    }
  }
}

TEST_CASE("checking a missing run is a structural error") {
  auto dir = testing::scratch_dir("missing");
  Fixture f = load_fixture("free_gaussian");
  CHECK_THROWS_AS(check_fixture(f, dir.string()), StructuralError);
  fs::remove_all(dir);
}

TEST_CASE("listing names every bundled scenario") {
  std::ostringstream out, err;
  CHECK(cmd_list_scenarios(out, err) == kExitCertified);
  for (const auto& n : bundled_scenarios()) CHECK(out.str().find(n) != std::string::npos);
}
