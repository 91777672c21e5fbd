#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "pilotwave/snapshot.hpp"

namespace pilotwave {

/// Independent generator for stream `index` of a master seed. Streams do
/// not depend on how work is split between threads.
std::mt19937_64 stream_engine(std::uint64_t seed, std::uint64_t index);

/// Flat list of n points in D dimensions, point-major.
struct PointSet {
  std::size_t dim = 0;
  std::vector<double> coords;

  std::size_t size() const { return dim == 0 ? 0 : coords.size() / dim; }
  std::span<const double> point(std::size_t i) const { return {coords.data() + i * dim, dim}; }
  std::span<double> point(std::size_t i) { return {coords.data() + i * dim, dim}; }
};

struct SamplingDiagnostics {
  std::string method;  // inverse_cdf, metropolis
  double rhat = 1.0;   // max split-chain R-hat over coordinates
  double acceptance = 1.0;
  bool converged = true;
};

struct SamplingOptions {
  std::size_t chains = 8;
  std::size_t burn_in = 2000;
  std::size_t thinning = 10;
  double rhat_limit = 1.05;
};

/// n draws from rho = |Psi|^2. Inverse CDF over the snapshot's tabulation
/// cells (with uniform jitter inside the cell) when D <= 2, random-walk
/// Metropolis otherwise. Deterministic given seed.
PointSet sample_equilibrium(const WaveSnapshot& psi, std::size_t n, std::uint64_t seed,
                            SamplingDiagnostics* diagnostics = nullptr, const SamplingOptions& options = {});

/// Tabulated inverse-CDF sampler, reusable for repeated draws.
class TableSampler {
 public:
  explicit TableSampler(const WaveSnapshot& psi);
  PointSet draw(std::size_t n, std::uint64_t seed) const;

 private:
  std::vector<Axis> axes_;
  std::vector<double> cdf_;
};

/// Split-chain potential scale reduction of equally long chains.
double split_rhat(const std::vector<std::vector<double>>& chains);

struct EquivarianceOptions {
  std::size_t bootstrap = 20;
  std::size_t max_bins_1d = 200;
  std::size_t max_bins_2d = 60;
};

struct Histogram1D {
  double min = 0.0, width = 1.0;
  std::vector<double> empirical;  // fraction of points per bin
  std::vector<double> expected;   // probability per bin
};

struct EquivarianceResult {
  double distance = 0.0;
  double noise_floor = 0.0;
  std::vector<std::size_t> bins;
  std::vector<double> bin_width;
  double outside_empirical = 0.0;
  double outside_expected = 0.0;
  bool marginal = false;  // averaged 1-D marginals (D >= 3)
  std::vector<Histogram1D> marginals;

  bool passes() const { return distance <= 2.0 * noise_floor; }
};

/// L1 distance between the empirical histogram of `points` and the bin
/// probabilities of rho(t), on full space for D <= 2 and as averaged 1-D
/// marginals for D >= 3. Bins follow 2 IQR N^(-1/(D+2)) computed on a fresh
/// sample from rho(t); an extra bin collects everything outside the range.
/// The noise floor is the mean distance of `bootstrap` fresh samples of the
/// same size. Throws RangeError for fewer than 100 points.
EquivarianceResult equivariance_distance(const PointSet& points, const WaveSnapshot& psi, std::uint64_t seed,
                                         const EquivarianceOptions& options = {});

}  // namespace pilotwave
