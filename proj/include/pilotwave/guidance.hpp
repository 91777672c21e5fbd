#pragma once

#include <functional>
#include <span>
#include <vector>

#include "pilotwave/grid_solver.hpp"
#include "pilotwave/snapshot.hpp"

namespace pilotwave {

/// Constants of the guidance law v_j = (hbar / m_j) Im(sum_f psi_f* d_j psi_f) / rho - (e / m_j c) A_j.
struct GuidanceLaw {
  double hbar = 1.0;
  std::vector<double> masses;
  double charge_over_c = 0.0;
  VectorField vector_potential;

  static GuidanceLaw from(const HamiltonianSpec& spec);
};

struct NodeSettings {
  double density_floor = 1e-12;  // relative to the snapshot's max density
  double v_max = 1e300;
};

struct VelocityResult {
  double density = 0.0;
  bool node = false;
};

/// Velocity from values and gradients already evaluated at x.
VelocityResult velocity_from_values(const GuidanceLaw& law, std::span<const double> x, std::span<const cplx> values,
                                    std::span<const cplx> gradients, std::span<double> v);

/// Velocity at x with the node policy applied: below the density floor the
/// speed is capped at v_max (and v = 0 where rho vanishes).
VelocityResult velocity(const WaveSnapshot& psi, const GuidanceLaw& law, const NodeSettings& node,
                        std::span<const double> x, std::span<double> v);

/// Spin-summed |psi|^2 at x.
double density(const WaveSnapshot& psi, std::span<const double> x);

/// Scalar particle wavefunction: v_k = Im(psi* grad_k psi) / (m_k |psi|^2).
VelocityResult velocity_particles(const WaveSnapshot& psi, const GuidanceLaw& law, const NodeSettings& node,
                                  std::span<const double> x, std::span<double> v);
/// Spinor: v = j / rho with the -(e/mc) A rho term of the current.
VelocityResult velocity_pauli(const WaveSnapshot& psi, const GuidanceLaw& law, const NodeSettings& node,
                              std::span<const double> x, std::span<double> v);
/// Field quadratures: v_j = sum_f Im(Psi_f* d Psi_f / d q_j) / rho.
VelocityResult velocity_field_beables(const WaveSnapshot& psi, const NodeSettings& node, std::span<const double> x,
                                      std::span<double> v);

struct NodeEvent {
  double time = 0.0;
  double density = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> points;
  std::vector<bool> node_flags;
  std::vector<NodeEvent> node_events;
  bool exited = false;
  double exit_time = 0.0;
};

/// Outcome of one RK4 step.
struct StepOutcome {
  bool node = false;       // the policy clamped a stage velocity
  double node_density = 0.0;
  bool exited = false;     // a stage left the domain; position unchanged
};

/// Classic RK4 from t to t + h with stage snapshots at t, t + h/2, t + h.
/// `k1` receives the velocity at the starting point when non-empty.
StepOutcome rk4_step(std::span<double> x, double h, const WaveSnapshot& s0, const WaveSnapshot& half,
                     const WaveSnapshot& s1, const GuidanceLaw& law, const NodeSettings& node,
                     std::span<double> k1 = {});

/// Snapshot of the evolving wavefunction at time t (t on the half-step grid).
using SnapshotSource = std::function<SnapshotPtr(double t)>;

/// Fixed-step RK4 trajectory from q0 over [0, t_final]. Leaving the domain
/// freezes the trajectory and sets `exited`.
Trajectory integrate_trajectory(std::span<const double> q0, const SnapshotSource& source, double t_final, double dt,
                                const GuidanceLaw& law, const NodeSettings& node);

/// L2 norm over the grid of d rho/dt + div J at the middle of three states
/// spaced dt apart, with second-order central differences in time and space.
double continuity_residual(const GridHamiltonian& h, const WavefunctionGrid& before, const WavefunctionGrid& middle,
                           const WavefunctionGrid& after, double dt);

}  // namespace pilotwave
