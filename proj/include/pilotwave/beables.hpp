#pragma once

// Physical-space beables built from mode-space configurations, local
// expectation values and branch analysis.
//
// Field normalization: mode m with canonical wavevector k, polarization e and
// quadratures (a, b) contributes
//   A(x) = (2 pi)^(-3/2) sqrt(2) (a cos(k.x) - b sin(k.x)) e
//   B(x) = -(2 pi)^(-3/2) sqrt(2) (a sin(k.x) + b cos(k.x)) (k x e)
// which is the complex sum over k and -k with q(k) = (a + i b) / sqrt(2).

#include <functional>
#include <string>
#include <vector>

#include "pilotwave/guidance.hpp"
#include "pilotwave/model.hpp"
#include "pilotwave/snapshot.hpp"

namespace pilotwave {

/// Periodic evaluation lattice in 3-space, points at min + i (max - min) / n.
struct Lattice {
  std::vector<Axis> axes;  // exactly three

  std::size_t points() const;
  Vec3 point(std::size_t flat) const;

  /// Lattice of n points per axis whose periods are multiples of every
  /// wavevector component of the basis. Throws LatticeError when the basis
  /// has incommensurate components.
  static Lattice fitted(const ModeBasis& basis, std::size_t n);
};

/// Rejects bases whose wavevectors are not lattice wavenumbers strictly below
/// the Nyquist limit.
void check_lattice(const ModeBasis& basis, const Lattice& lattice);

struct FieldSnapshot {
  std::string kind;  // A, B, E_T
  double time = 0.0;
  Lattice lattice;
  std::vector<Vec3> values;
  std::string basis_hash;

  double max_abs() const;
  void write_csv(const std::string& path) const;
  void write_json(const std::string& path) const;
};

FieldSnapshot reconstruct_A(const ModeBasis& basis, std::span<const double> q, const Lattice& lattice);
FieldSnapshot reconstruct_B(const ModeBasis& basis, std::span<const double> q, const Lattice& lattice);
/// Field built from quadrature velocities dq/dt, -dA/dt.
FieldSnapshot reconstruct_E_T_from_rates(const ModeBasis& basis, std::span<const double> dq, const Lattice& lattice);
/// E^T at time t from the quadratic through the nearest three samples. Throws
/// RangeError unless t lies strictly between the first and last samples.
FieldSnapshot reconstruct_E_T(const ModeBasis& basis, const Trajectory& traj, double t, const Lattice& lattice);

/// Spectral curl and divergence on the periodic lattice.
std::vector<Vec3> spectral_curl(const Lattice& lattice, std::span<const Vec3> field);
std::vector<double> spectral_divergence(const Lattice& lattice, std::span<const Vec3> field);

struct LocalExpectation {
  std::vector<double> values;
  double max_imaginary = 0.0;
  double density = 0.0;
  bool node = false;
};

using OperatorField = std::function<Matrix(const Vec3& x)>;

/// sum_ff' Psi_f*(q) O_ff'(x) Psi_f'(q) / rho(q) at every lattice point.
LocalExpectation local_expectation(const WaveSnapshot& psi, const OperatorField& op, std::span<const double> q,
                                   const std::vector<Vec3>& points, double density_floor = 1e-12);

struct BranchAnalysis {
  std::vector<double> weights;
  std::vector<std::vector<double>> overlaps;  // normalized, 1 on the diagonal
  double max_overlap = 0.0;                   // largest off-diagonal entry
  double residual = 0.0;                      // probability not covered by the branches
};

/// Tabulation grid for branch integrals: the snapshot's support, coarsened so
/// the total point count stays moderate.
std::vector<Axis> branch_grid(const WaveSnapshot& full);

/// Branches given as separately evolved component wavefunctions.
BranchAnalysis analyze_branches(const WaveSnapshot& full, const std::vector<SnapshotPtr>& branches);

/// Index of the branch with the largest density at x (-1 if all vanish).
int branch_membership(const std::vector<SnapshotPtr>& branches, std::span<const double> x);

/// Connected components of {rho >= level * max rho} on a tabulation grid.
class SuperlevelBranches {
 public:
  SuperlevelBranches(const WaveSnapshot& full, double level);

  const BranchAnalysis& analysis() const { return analysis_; }
  std::size_t count() const { return analysis_.weights.size(); }
  /// Component of the tabulation cell holding x, or -1.
  int membership(std::span<const double> x) const;

 private:
  std::vector<Axis> axes_;
  std::vector<int> labels_;
  BranchAnalysis analysis_;
};

}  // namespace pilotwave
