#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pilotwave/config.hpp"
#include "pilotwave/fields.hpp"
#include "pilotwave/state.hpp"
#include "pilotwave/types.hpp"

namespace pilotwave {

using Matrix = Eigen::MatrixXcd;

// ---------------------------------------------------------------------------
// Mode basis

/// Unit transverse polarization vector l in {1, 2} for wavevector k.
/// e1 = normalize(z x k), or x when k is along z; e2 = khat x e1. Both are
/// computed for the canonical member of {k, -k}, so e(k) = e(-k).
Vec3 polarization_vector(const Vec3& k, int l);

/// True when k is the canonical member of {k, -k}: its first nonzero
/// component is positive.
bool is_canonical(const Vec3& k);

struct PolarizedMode {
  Vec3 k{};  // canonical representative of {k, -k}
  int polarization = 1;
  Vec3 epsilon{};
  std::size_t wavevector_index = 0;
};

/// Retained field modes. Each complex pair q_l(k) = q_l(-k)* maps to two real
/// coordinates: mode m owns coordinates 2m (real quadrature) and 2m + 1
/// (imaginary quadrature), q_l(k) = (a + i b) / sqrt(2).
class ModeBasis {
 public:
  ModeBasis() = default;

  /// Keeps one representative per {k, -k} pair. `polarizations` selects the
  /// retained labels (default both).
  static ModeBasis build(std::span<const Vec3> wavevectors, std::vector<int> polarizations = {1, 2});

  const std::vector<Vec3>& wavevectors() const { return wavevectors_; }
  const std::vector<PolarizedMode>& modes() const { return modes_; }
  std::size_t mode_count() const { return modes_.size(); }
  std::size_t quadrature_count() const { return 2 * modes_.size(); }

  /// Frequency |k| of the oscillator behind quadrature j.
  double frequency(std::size_t j) const;
  std::vector<double> frequencies() const;

  /// Column label such as q_k0_l1_re.
  std::string quadrature_label(std::size_t j) const;

  /// Stable fingerprint of wavevectors and polarization labels.
  std::string hash() const;

 private:
  std::vector<Vec3> wavevectors_;
  std::vector<PolarizedMode> modes_;
};

// ---------------------------------------------------------------------------
// Hamiltonians

enum class ModelKind { particle_schrodinger, pauli, field_mode };

std::string to_string(ModelKind kind);

struct HamiltonianSpec {
  ModelKind kind = ModelKind::particle_schrodinger;
  double hbar = 1.0;
  std::vector<double> masses;  // one per beable coordinate
  ScalarField potential;

  // pauli
  double charge = 0.0;
  double moment = 0.0;
  double light_speed = 1.0;
  VectorField vector_potential;
  VectorField magnetic_field;

  // field_mode
  ModeBasis basis;
  std::vector<double> frequencies;  // per quadrature
  std::size_t fermion_dim = 1;
  Matrix fermion_block;             // H_F
  Matrix coulomb_block;             // V_C
  std::vector<Matrix> couplings;    // g_j, one per quadrature
  std::vector<double> quartic;      // lambda_j q_j^4, grid solver only

  std::size_t dimension() const { return masses.size(); }
  std::size_t internal_dim() const;

  /// Constant internal-index matrix added at every point (H_F + V_C, or zero).
  Matrix constant_block() const;

  /// F x F potential matrix at x: V(x) 1 + Zeeman term or field-mode terms.
  Matrix local_block(std::span<const double> x) const;

  /// Quadratic potential part V(x) only (no internal structure).
  double scalar_potential(std::span<const double> x) const;

  /// A(x) in the coordinate frame (zero beyond dimension()).
  Vec3 vector_potential_at(std::span<const double> x) const;
  bool vector_potential_uniform() const;
  bool has_vector_potential() const;
};

/// Parses "sigma_x(g)", "identity(g)", "diag([...])", "zero" or explicit rows.
Matrix parse_matrix(const Value& v, const std::string& key, std::size_t dim);

// ---------------------------------------------------------------------------
// Scenarios

struct Axis {
  double min = 0.0;
  double max = 1.0;
  std::size_t points = 8;

  double spacing() const { return (max - min) / static_cast<double>(points); }
  double at(std::size_t i) const { return min + spacing() * static_cast<double>(i); }
  bool operator==(const Axis&) const = default;
};

enum class SolverKind { grid, fock };

struct InitialDistribution {
  enum class Kind { equilibrium, point, gaussian };
  Kind kind = Kind::equilibrium;
  std::vector<double> center;  // point, gaussian
  std::vector<double> width;   // gaussian
};

struct NodePolicy {
  double v_max = 0.0;         // 0: 10x the characteristic velocity
  double density_floor = 1e-12;
  std::size_t dwell_limit = 50;
};

enum class BranchRule { none, terms, superlevel };

struct Scenario {
  std::string name;
  std::string description;
  HamiltonianSpec model;
  InitialState initial_state;
  SolverKind solver = SolverKind::grid;
  std::string scheme = "auto";
  std::vector<Axis> axes;    // grid solver
  std::vector<int> nmax;     // fock solver, one per quadrature
  std::vector<Axis> tabulation;  // fock solver: sampling grid, empty for automatic

  double dt = 0.01;
  double t_final = 1.0;
  std::vector<double> checkpoints;

  std::size_t samples = 1000;
  std::uint64_t seed = 1;
  InitialDistribution distribution;
  std::vector<std::vector<double>> pinned;  // extra trajectories at fixed starts
  std::size_t recorded = 100;

  NodePolicy node_policy;
  BranchRule branches = BranchRule::none;
  double branch_level = 1e-6;    // superlevel threshold relative to max density
  double overlap_threshold = 1e-6;

  bool cross_check = false;      // also run the other solver and compare densities
  double leakage_threshold = 1e-6;

  ConfigTree source;

  std::size_t dimension() const { return model.dimension(); }
  std::size_t internal_dim() const { return model.internal_dim(); }
  StateContext state_context() const;
  /// Number of trajectory steps of size dt.
  std::size_t step_count() const;
  /// Checkpoint indices in trajectory steps, ascending, last = step_count().
  std::vector<std::size_t> checkpoint_steps() const;

  /// Parses a scenario document. Structural problems raise ParseError; range
  /// problems are left to validate_scenario.
  static Scenario from_config(const ConfigTree& tree);
  static Scenario load(const std::string& path, std::span<const std::string> overrides = {});
};

struct Diagnostic {
  std::string code;
  std::string message;
};

std::vector<Diagnostic> validate_scenario(const Scenario& s);

/// Applies "section.key=value" overrides to a parsed tree.
void apply_overrides(ConfigTree& tree, std::span<const std::string> overrides);

}  // namespace pilotwave
