#pragma once

#include <span>

namespace pilotwave {

/// Largest |sqrt(omega) q| at which Hermite functions are evaluated; beyond
/// it the Gaussian envelope underflows.
inline constexpr double kHermiteRange = 36.0;

/// Normalized eigenfunctions phi_0..phi_nmax of -1/2 d^2/dq^2 + omega^2 q^2 / 2
/// at q, using the normalized upward recurrence
///   phi_{n+1} = sqrt(2/(n+1)) xi phi_n - sqrt(n/(n+1)) phi_{n-1},  xi = sqrt(omega) q.
/// `derivatives`, when non-empty, receives d phi_n / dq.
void hermite_functions(double q, double omega, int nmax, std::span<double> values,
                       std::span<double> derivatives = {});

double hermite_function(int n, double q, double omega);

}  // namespace pilotwave
