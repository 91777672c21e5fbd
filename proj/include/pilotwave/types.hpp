#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace pilotwave {

using cplx = std::complex<double>;
using Vec3 = std::array<double, 3>;

inline constexpr double kPi = 3.14159265358979323846;

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible shapes, unsupported Hamiltonian kinds, malformed operator blocks.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Evaluation requested outside the represented configuration-space domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A time or argument outside the range where the quantity is defined.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Time step violates the resolution bound of the chosen scheme.
class StabilityError : public Error {
 public:
  using Error::Error;
};

/// Evaluation lattice cannot represent a retained mode exactly.
class LatticeError : public Error {
 public:
  using Error::Error;
};

/// A run finished but could not be certified (leakage, MCMC diagnostics, ...).
class CertificationError : public Error {
 public:
  using Error::Error;
};

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

inline Vec3 scaled(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }

inline Vec3 operator-(const Vec3& a) { return {-a[0], -a[1], -a[2]}; }

}  // namespace pilotwave
