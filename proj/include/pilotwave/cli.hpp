#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pilotwave {

// Exit codes of every command.
inline constexpr int kExitCertified = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitDiagnostics = 2;

struct RunArgs {
  std::string scenario;  // path or bundled name
  std::string output;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
};

int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err);
int cmd_validate(const std::string& scenario, const std::vector<std::string>& overrides, std::ostream& out,
                 std::ostream& err);
int cmd_list_scenarios(std::ostream& out, std::ostream& err);

struct ExportArgs {
  std::string run_dir;
  std::string kind;  // A, B, E_T, trajectory
  double time = 0.0;
  std::string output;  // default: <run_dir>/<kind>_t<time>.<format>
  std::optional<std::size_t> trajectory;  // default: first recorded
  std::size_t lattice = 16;
  std::string format = "csv";
};

int cmd_export(const ExportArgs& args, std::ostream& out, std::ostream& err);

/// Runs the fixture's scenario into `output` and prints one verdict per
/// property. Exit 0 when all pass.
int cmd_check(const std::string& fixture, const std::string& output, std::size_t threads, std::ostream& out,
              std::ostream& err);

}  // namespace pilotwave
