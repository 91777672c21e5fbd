#pragma once

// Named external-field families used by the particle and Pauli models.
// Coordinates are the model's beable coordinates (x0, x1, x2); vector
// fields return Cartesian components with coordinate d mapped to axis d.

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pilotwave/config.hpp"
#include "pilotwave/types.hpp"

namespace pilotwave {

struct HarmonicWell {
  std::vector<double> omega;   // per coordinate
  std::vector<double> center;  // per coordinate
};

struct LinearRamp {
  std::vector<double> slope;  // V = slope . x
};

struct GaussianBump {
  double height = 0.0;
  std::vector<double> center;
  double width = 1.0;
};

/// Smoothed wall at x0 = position with openings centred at `slits` along x1.
struct DoubleSlitWall {
  double position = 0.0;
  double thickness = 0.5;
  double height = 50.0;
  std::vector<double> slits;
  double slit_width = 1.0;
  double smoothing = 0.1;
};

struct QuarticWell {
  std::vector<double> lambda;  // V = sum lambda_d x_d^4
};

class ScalarField {
 public:
  using Term = std::variant<HarmonicWell, LinearRamp, GaussianBump, DoubleSlitWall, QuarticWell>;

  ScalarField() = default;
  explicit ScalarField(std::vector<Term> terms) : terms_(std::move(terms)) {}

  /// Harmonic terms need the per-coordinate mass: V = m w^2 (x-c)^2 / 2.
  double operator()(std::span<const double> x, std::span<const double> masses) const;
  bool empty() const { return terms_.empty(); }
  const std::vector<Term>& terms() const { return terms_; }

  static ScalarField parse(const Value& v, const std::string& key);
  std::string describe() const;

 private:
  std::vector<Term> terms_;
};

struct ConstantVector {
  Vec3 value{};
};

/// A = b (-x1/2, x0/2, 0): uniform field b along axis 2.
struct SymmetricGauge {
  double strength = 0.0;
};

/// B = (0, 0, b0 + gradient * x[axis]).
struct GradientField {
  double b0 = 0.0;
  double gradient = 0.0;
  int axis = 0;
};

class VectorField {
 public:
  using Term = std::variant<ConstantVector, SymmetricGauge, GradientField>;

  VectorField() = default;
  explicit VectorField(std::vector<Term> terms) : terms_(std::move(terms)) {}

  Vec3 operator()(std::span<const double> x) const;
  bool empty() const { return terms_.empty(); }
  /// True when the field does not depend on position.
  bool is_uniform() const;

  static VectorField parse(const Value& v, const std::string& key);

 private:
  std::vector<Term> terms_;
};

}  // namespace pilotwave
