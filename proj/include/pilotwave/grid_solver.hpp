#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pilotwave/grid.hpp"
#include "pilotwave/model.hpp"

namespace pilotwave {

/// Discrete Hamiltonian on a periodic grid: spectral kinetic term plus a
/// pointwise F x F block W(x) (scalar potential, Zeeman term, fermionic
/// blocks and couplings).
class GridHamiltonian {
 public:
  GridHamiltonian(HamiltonianSpec spec, GridLayout layout);

  const GridLayout& layout() const { return layout_; }
  const HamiltonianSpec& spec() const { return spec_; }
  const Fft& fft() const { return fft_; }

  /// out = H psi. Uses internal scratch space, so one caller at a time.
  void apply(std::span<const cplx> psi, std::span<cplx> out) const;

  /// <psi|H|psi> / <psi|psi>.
  double energy(const WavefunctionGrid& psi) const;

  /// Kinetic multiplier in Fourier space; includes a uniform vector
  /// potential, excludes a position-dependent one.
  const std::vector<double>& kinetic() const { return kinetic_; }
  /// Row-major F x F blocks per point.
  const std::vector<cplx>& blocks() const { return blocks_; }
  bool uniform_vector_potential() const { return uniform_a_; }

  /// Largest spectral radius of W(x) over the grid.
  double max_block_radius() const;

  /// Dense matrix of the operator (small grids only).
  Matrix dense() const;

  /// Lowest eigenvalue by Lanczos with full reorthogonalization.
  double lowest_eigenvalue(std::size_t krylov = 400) const;

 private:
  void apply_vector_potential(std::span<const cplx> psi, std::span<cplx> out) const;

  HamiltonianSpec spec_;
  GridLayout layout_;
  Fft fft_;
  std::vector<double> kinetic_;
  std::vector<cplx> blocks_;
  bool uniform_a_ = true;
  std::vector<std::vector<double>> a_field_;  // per coordinate, per point (non-uniform A)
  mutable std::vector<cplx> work_, work2_, work3_;
};

enum class GridScheme { split_step, split_step4, crank_nicolson, exact };

std::string to_string(GridScheme s);

/// "auto" picks split_step4, or crank_nicolson when A depends on position.
GridScheme resolve_grid_scheme(const std::string& name, const HamiltonianSpec& spec);

/// Largest grid (points x F) accepted by the exact scheme.
inline constexpr std::size_t kExactSchemeLimit = 2048;

/// Advances a wavefunction by a fixed step tau.
class GridPropagator {
 public:
  GridPropagator(const GridHamiltonian& h, GridScheme scheme, double tau);
  ~GridPropagator();
  GridPropagator(const GridPropagator&) = delete;
  GridPropagator& operator=(const GridPropagator&) = delete;

  void step(WavefunctionGrid& psi) const;

  GridScheme scheme() const { return scheme_; }
  double tau() const { return tau_; }
  /// Iterations used by the last Crank-Nicolson solve.
  int last_iterations() const { return last_iterations_; }

 private:
  struct Exponentials;
  void strang(std::span<cplx> psi, const Exponentials& e) const;
  void crank_nicolson(std::span<cplx> psi) const;

  const GridHamiltonian& h_;
  GridScheme scheme_;
  double tau_;
  std::vector<std::unique_ptr<Exponentials>> stages_;
  Matrix eigvecs_;
  Eigen::VectorXd eigvals_;
  mutable int last_iterations_ = 0;
};

}  // namespace pilotwave
