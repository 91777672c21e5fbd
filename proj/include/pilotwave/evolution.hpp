#pragma once

#include <memory>
#include <span>
#include <string>

#include "pilotwave/grid_solver.hpp"
#include "pilotwave/snapshot.hpp"

namespace pilotwave {

/// A wavefunction advancing in fixed steps tau, handing out immutable
/// snapshots.
class Evolution {
 public:
  virtual ~Evolution() = default;

  virtual void advance() = 0;
  virtual double time() const = 0;
  virtual double tau() const = 0;
  /// Snapshot of the current state, cached until the next advance().
  virtual SnapshotPtr snapshot() = 0;

  virtual double norm2() const = 0;
  virtual double energy() const = 0;
  /// Probability on the Fock truncation shell; 0 for grids.
  virtual double leakage() const { return 0.0; }
  /// Largest |psi| near a grid boundary; 0 for Fock states.
  virtual double boundary_amplitude() const { return 0.0; }
  virtual std::vector<double> component_weights() const = 0;
  /// sqrt(sum_j <(p_j / m_j)^2>).
  virtual double characteristic_velocity() const = 0;
  virtual std::string scheme() const = 0;
  virtual void save(const std::string& path) const = 0;
};

/// Builds the state sum_terms scale * term with the scenario's solver
/// settings. Pass the scale returned by normalization() of the full state
/// so that branch evolutions add up to the full one.
std::unique_ptr<Evolution> make_evolution(const Scenario& s, SolverKind solver, std::span<const ProductTerm> terms,
                                          double scale, double tau);

/// 1 / sqrt(norm^2) of the expanded state in the given representation.
double normalization(const Scenario& s, SolverKind solver, std::span<const ProductTerm> terms);

}  // namespace pilotwave
