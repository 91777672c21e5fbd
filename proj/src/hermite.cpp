#include "pilotwave/hermite.hpp"

#include <cmath>
#include <vector>

#include "pilotwave/types.hpp"

namespace pilotwave {

void hermite_functions(double q, double omega, int nmax, std::span<double> values, std::span<double> derivatives) {
  const double xi = std::sqrt(omega) * q;
  const int top = derivatives.empty() ? nmax : nmax + 1;
  // One extra slot so the derivative of phi_nmax can use phi_{nmax+1}.
  double stack[128];
  std::vector<double> heap;
  double* phi = stack;
  if (top + 1 > 128) {
    heap.resize(static_cast<std::size_t>(top + 1));
    phi = heap.data();
  }
  phi[0] = std::pow(omega / kPi, 0.25) * std::exp(-0.5 * xi * xi);
  if (top >= 1) phi[1] = std::sqrt(2.0) * xi * phi[0];
  for (int n = 1; n < top; ++n) {
    phi[n + 1] = std::sqrt(2.0 / (n + 1)) * xi * phi[n] - std::sqrt(static_cast<double>(n) / (n + 1)) * phi[n - 1];
  }
  for (int n = 0; n <= nmax; ++n) values[static_cast<std::size_t>(n)] = phi[n];
  if (!derivatives.empty()) {
    const double s = std::sqrt(omega);
    for (int n = 0; n <= nmax; ++n) {
      double lower = n > 0 ? std::sqrt(0.5 * n) * phi[n - 1] : 0.0;
      derivatives[static_cast<std::size_t>(n)] = s * (lower - std::sqrt(0.5 * (n + 1)) * phi[n + 1]);
    }
  }
}

double hermite_function(int n, double q, double omega) {
  std::vector<double> v(static_cast<std::size_t>(n + 1));
  hermite_functions(q, omega, n, v);
  return v.back();
}

}  // namespace pilotwave
