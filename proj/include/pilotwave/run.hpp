#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pilotwave/beables.hpp"
#include "pilotwave/ensemble.hpp"
#include "pilotwave/evolution.hpp"
#include "pilotwave/guidance.hpp"
#include "pilotwave/model.hpp"

namespace pilotwave {

struct RunOptions {
  std::size_t threads = 1;
  bool keep_positions = false;  // store every ensemble configuration at each checkpoint
  std::string final_state_path;  // save the final wavefunction here when set
};

struct BranchReport {
  BranchAnalysis analysis;
  std::vector<std::size_t> counts;
  std::vector<double> frequencies;
  std::size_t unassigned = 0;
};

struct CheckpointReport {
  std::size_t step = 0;
  double time = 0.0;
  std::optional<EquivarianceResult> equivariance;
  double norm2 = 0.0;
  double energy = 0.0;
  double leakage = 0.0;
  double boundary = 0.0;
  std::vector<double> component_weights;
  std::optional<BranchReport> branches;
  std::optional<double> cross_check;  // max |rho_grid - rho_fock| on the grid points
  PointSet positions;                 // only with RunOptions::keep_positions
};

struct TrajectoryEvent {
  std::size_t trajectory = 0;
  double time = 0.0;
  double density = 0.0;
};

struct CollapseReport {
  std::optional<double> onset;  // first checkpoint time with overlap below threshold
  double max_relative_difference = 0.0;
  std::size_t membership_changes = 0;
  std::size_t checked = 0;
};

struct RunResult {
  std::string scenario;
  std::uint64_t seed = 0;
  std::string solver;
  std::string scheme;
  std::vector<std::string> labels;  // coordinate column names
  std::size_t samples = 0;          // ensemble trajectories (pinned ones excluded)
  std::size_t pinned = 0;
  double characteristic_velocity = 0.0;
  double v_max = 0.0;
  SamplingDiagnostics sampling;

  std::vector<CheckpointReport> checkpoints;
  double initial_norm2 = 0.0;
  double initial_energy = 0.0;
  double max_norm_drift = 0.0;  // per half step
  double energy_drift = 0.0;    // relative, over checkpoints
  double max_leakage = 0.0;
  double max_boundary = 0.0;
  CollapseReport collapse;

  std::vector<TrajectoryEvent> node_events;
  std::vector<TrajectoryEvent> exits;
  std::size_t dwell_violations = 0;
  double max_displacement = 0.0;

  PointSet initial_positions;  // ensemble then pinned
  PointSet final_positions;
  std::vector<bool> exited;
  std::vector<std::size_t> recorded_ids;
  std::vector<Trajectory> recorded;

  std::vector<Diagnostic> diagnostics;
  double seconds_evolution = 0.0;
  double seconds_trajectories = 0.0;
  double seconds_statistics = 0.0;

  bool certified() const { return diagnostics.empty(); }
  int exit_code() const { return certified() ? 0 : 2; }
};

/// Coordinate column names of the scenario's configuration space.
std::vector<std::string> coordinate_labels(const Scenario& s);

/// Evolves the wavefunction, transports the ensemble and collects the
/// statistics. Throws on invalid scenarios and on solver or guidance
/// failures; failures inside a trajectory name its index.
RunResult run_ensemble(const Scenario& s, const RunOptions& options = {});

}  // namespace pilotwave
