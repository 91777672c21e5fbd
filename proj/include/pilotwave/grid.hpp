#pragma once

// Tensor-product grids. Amplitudes are stored point-major with the internal
// index fastest: index = flat_point * F + f, and flat_point runs with the
// last axis fastest. Axes are periodic: point i sits at min + i * (max - min) / n.

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pilotwave/model.hpp"
#include "pilotwave/types.hpp"

namespace pilotwave {

class GridLayout {
 public:
  GridLayout() = default;
  GridLayout(std::vector<Axis> axes, std::size_t internal_dim);

  const std::vector<Axis>& axes() const { return axes_; }
  std::size_t dim() const { return axes_.size(); }
  std::size_t internal_dim() const { return internal_dim_; }
  std::size_t points() const { return points_; }
  std::size_t size() const { return points_ * internal_dim_; }
  double cell_volume() const;

  /// Point stride of axis d.
  std::size_t stride(std::size_t d) const { return strides_[d]; }
  std::size_t index(std::span<const std::size_t> multi) const;
  void multi_index(std::size_t flat, std::span<std::size_t> out) const;
  void coordinates(std::size_t flat, std::span<double> out) const;

  /// Angular wavenumbers of axis d in FFT order; the Nyquist entry is
  /// negative for even point counts.
  std::vector<double> wavenumbers(std::size_t d) const;

  bool operator==(const GridLayout& o) const { return axes_ == o.axes_ && internal_dim_ == o.internal_dim_; }

 private:
  std::vector<Axis> axes_;
  std::size_t internal_dim_ = 1;
  std::size_t points_ = 0;
  std::vector<std::size_t> strides_;
};

/// In-place multidimensional complex FFTs over the point index, applied to
/// every internal component.
class Fft {
 public:
  explicit Fft(const GridLayout& layout);
  ~Fft();
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  void forward(std::span<cplx> data) const;
  /// Unnormalized inverse; callers divide by points().
  void backward(std::span<cplx> data) const;

 private:
  struct Plans;
  std::unique_ptr<Plans> plans_;
  std::size_t size_;
};

class WavefunctionGrid {
 public:
  WavefunctionGrid() = default;
  explicit WavefunctionGrid(GridLayout layout, double time = 0.0);

  static WavefunctionGrid from_terms(const GridLayout& layout, std::span<const ProductTerm> terms);

  const GridLayout& layout() const { return layout_; }
  std::vector<cplx>& amplitudes() { return amps_; }
  const std::vector<cplx>& amplitudes() const { return amps_; }
  cplx& at(std::size_t point, std::size_t f) { return amps_[point * layout_.internal_dim() + f]; }
  cplx at(std::size_t point, std::size_t f) const { return amps_[point * layout_.internal_dim() + f]; }
  double time() const { return time_; }
  void set_time(double t) { time_ = t; }

  /// Sum over indices of |psi|^2 times the cell volume.
  double norm2() const;
  void normalize();
  /// Integrated |psi_f|^2 of each internal component.
  std::vector<double> component_weights() const;
  /// Spin-summed density at every grid point.
  std::vector<double> density() const;
  /// Largest |psi| at points within `fraction` of any boundary.
  double boundary_amplitude(double fraction = 0.05) const;

  /// Binary snapshot: "PWGRID1\n", a one-line JSON header, then
  /// little-endian float64 (re, im) pairs in storage order.
  void save(const std::string& path) const;
  static WavefunctionGrid load(const std::string& path);

 private:
  GridLayout layout_;
  std::vector<cplx> amps_;
  double time_ = 0.0;
};

cplx inner_product(const WavefunctionGrid& a, const WavefunctionGrid& b);

}  // namespace pilotwave
