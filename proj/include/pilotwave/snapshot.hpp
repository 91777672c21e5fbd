#pragma once

// Immutable views of a wavefunction at one instant, evaluable with
// gradients at arbitrary configurations. Guidance, sampling and branch
// analysis only see this interface.

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "pilotwave/fock.hpp"
#include "pilotwave/grid.hpp"

namespace pilotwave {

class WaveSnapshot {
 public:
  virtual ~WaveSnapshot() = default;

  virtual std::size_t dim() const = 0;
  virtual std::size_t internal_dim() const = 0;
  virtual double time() const = 0;

  virtual bool contains(std::span<const double> x) const = 0;

  /// values[f] = Psi_f(x); gradients[f * dim + j] = d Psi_f / d x_j
  /// (gradients may be empty). Throws DomainError outside the domain.
  virtual void evaluate(std::span<const double> x, std::span<cplx> values, std::span<cplx> gradients) const = 0;

  double density(std::span<const double> x) const;

  /// Largest density of the state, used to scale the node floor.
  virtual double max_density() const = 0;

  /// Box holding essentially all of the probability, with a resolution
  /// suitable for tabulation.
  virtual std::vector<Axis> support() const = 0;

  /// Density at the points of a tensor grid (last axis fastest).
  virtual std::vector<double> tabulate(const std::vector<Axis>& axes) const;

  /// Marginal density of coordinate j.
  virtual double marginal(std::size_t j, double q) const = 0;
};

using SnapshotPtr = std::shared_ptr<const WaveSnapshot>;

/// Periodic grid snapshot. Off-grid values use tensor-product cubic Hermite
/// interpolation with spectrally computed derivatives; gradients interpolate
/// the spectral derivative arrays the same way.
class GridSnapshot final : public WaveSnapshot {
 public:
  GridSnapshot(const WavefunctionGrid& psi, const Fft& fft);

  std::size_t dim() const override { return layout_.dim(); }
  std::size_t internal_dim() const override { return layout_.internal_dim(); }
  double time() const override { return time_; }
  bool contains(std::span<const double> x) const override;
  void evaluate(std::span<const double> x, std::span<cplx> values, std::span<cplx> gradients) const override;
  double max_density() const override { return max_density_; }
  std::vector<Axis> support() const override { return layout_.axes(); }
  std::vector<double> tabulate(const std::vector<Axis>& axes) const override;
  double marginal(std::size_t j, double q) const override;

  const GridLayout& layout() const { return layout_; }
  /// Grid-point amplitudes (derivative order zero).
  std::span<const cplx> amplitudes() const { return derivs_[0]; }
  /// Spectral first derivative along axis j at grid points.
  std::span<const cplx> derivative(std::size_t j) const;
  std::vector<double> grid_density() const;

 private:
  std::size_t array_index(std::span<const int> orders) const;

  GridLayout layout_;
  double time_;
  double max_density_ = 0.0;
  std::vector<std::vector<int>> orders_;  // derivative multi-index of each array
  std::vector<int> lookup_;               // base-3 code of a multi-index -> array
  std::vector<std::vector<cplx>> derivs_;
  std::vector<std::vector<double>> marginals_;
};

class FockSnapshot final : public WaveSnapshot {
 public:
  explicit FockSnapshot(FockWavefunction psi, std::vector<Axis> tabulation = {});

  std::size_t dim() const override { return psi_.basis().modes(); }
  std::size_t internal_dim() const override { return psi_.basis().internal_dim(); }
  double time() const override { return psi_.time(); }
  bool contains(std::span<const double> x) const override;
  void evaluate(std::span<const double> x, std::span<cplx> values, std::span<cplx> gradients) const override;
  double max_density() const override { return max_density_; }
  std::vector<Axis> support() const override { return support_; }
  double marginal(std::size_t j, double q) const override { return psi_.marginal_density(j, q); }

  const FockWavefunction& wavefunction() const { return psi_; }

 private:
  FockWavefunction psi_;
  std::vector<Axis> support_;
  double max_density_ = 0.0;
};

/// Snapshot defined by a callable, for closed-form states.
class FunctionSnapshot final : public WaveSnapshot {
 public:
  using Evaluator = std::function<void(std::span<const double>, std::span<cplx>, std::span<cplx>)>;

  FunctionSnapshot(std::size_t dim, std::size_t internal_dim, double time, std::vector<Axis> support, Evaluator f);

  std::size_t dim() const override { return dim_; }
  std::size_t internal_dim() const override { return internal_dim_; }
  double time() const override { return time_; }
  bool contains(std::span<const double> x) const override;
  void evaluate(std::span<const double> x, std::span<cplx> values, std::span<cplx> gradients) const override;
  double max_density() const override { return max_density_; }
  std::vector<Axis> support() const override { return support_; }
  double marginal(std::size_t j, double q) const override;

 private:
  std::size_t dim_, internal_dim_;
  double time_;
  std::vector<Axis> support_;
  Evaluator f_;
  double max_density_ = 0.0;
};

/// Tabulation box for a Fock state: mean +- 8 standard deviations per mode.
std::vector<Axis> fock_support(const FockWavefunction& psi);

}  // namespace pilotwave
