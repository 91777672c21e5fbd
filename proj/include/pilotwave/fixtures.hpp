#pragma once

// Fixture files sit next to the scenarios and use the same syntax:
//
//   scenario = stern_gerlach_50_50
//   certification = certified        # or diagnostics
//   [properties]
//   born_rule = check(born_rule, tolerance = 3, basis = statistical)
//
// Each property names a checker from the registry below, a tolerance and a
// basis label (analytic, statistical, numerical or structural).

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "pilotwave/model.hpp"
#include "pilotwave/output.hpp"

namespace pilotwave {

struct FixtureProperty {
  std::string name;
  std::string checker;
  double tolerance = 0.0;
  std::string basis;
};

struct Fixture {
  std::string name;
  std::string scenario;
  std::string certification = "certified";
  std::vector<FixtureProperty> properties;
};

struct Verdict {
  std::string property;
  std::string checker;
  double tolerance = 0.0;
  double measured = 0.0;
  bool pass = false;
  std::string detail;
};

/// Everything a checker may look at for one run directory.
class RunOutputs {
 public:
  explicit RunOutputs(std::string dir);

  const std::string& dir() const { return dir_; }
  const nlohmann::json& report() const { return report_; }
  const nlohmann::json& manifest() const { return manifest_; }
  const Scenario& scenario() const { return scenario_; }
  const RecordedTrajectories& trajectories() const;

 private:
  std::string dir_;
  nlohmann::json report_, manifest_;
  Scenario scenario_;
  mutable std::optional<RecordedTrajectories> trajectories_;
};

/// Returns (measured, pass, detail) for a tolerance.
using Checker = std::function<Verdict(const RunOutputs&, double tolerance)>;

const std::map<std::string, Checker>& checker_registry();

/// Directory holding the bundled scenarios and fixtures.
std::string scenario_dir();

/// Accepts a path or a bundled name (with or without extension).
std::string resolve_bundled(const std::string& name_or_path, const std::string& extension);

Fixture load_fixture(const std::string& name_or_path);

/// Verdicts per property plus a final certification verdict. Throws
/// StructuralError when outputs are missing.
std::vector<Verdict> check_fixture(const Fixture& f, const std::string& run_dir);

/// Checker ids listed in the checker manifest.
std::vector<std::string> manifest_checkers(const std::string& path);

}  // namespace pilotwave
