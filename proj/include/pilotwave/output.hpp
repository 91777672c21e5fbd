#pragma once

// Run directory layout
//   scenario.scn       resolved scenario (overrides applied)
//   trajectories.csv   trajectory,t,<coordinates>,node_flag for recorded trajectories
//   positions.csv      trajectory,<initial coordinates>,<final coordinates>,exited
//   histograms.csv     checkpoint,t,coordinate,bin_min,bin_max,empirical,expected
//   report.json        statistics and certification
//   psi_final.bin      final wavefunction (PWGRID1 or PWFOCK1)
//   manifest.json      checksums, timings, certification summary

#include <string>
#include <vector>

#include "json.hpp"
#include "pilotwave/run.hpp"

namespace pilotwave {

inline constexpr const char* kToolVersion = "0.1.0";

nlohmann::json report_json(const RunResult& r);

std::string trajectories_csv(const RunResult& r);
std::string positions_csv(const RunResult& r);
std::string histograms_csv(const RunResult& r);

struct RecordedTrajectories {
  std::vector<std::string> labels;
  std::vector<std::size_t> ids;
  std::vector<Trajectory> trajectories;
};

RecordedTrajectories read_trajectories_csv(const std::string& path);

/// Writes every data file and then the manifest into `dir` (created when
/// missing). psi_final.bin is listed when the run already saved it there.
nlohmann::json write_run(const RunResult& r, const Scenario& s, const std::string& dir);

/// Removes the files a run may have produced.
void remove_run_outputs(const std::string& dir);

}  // namespace pilotwave
