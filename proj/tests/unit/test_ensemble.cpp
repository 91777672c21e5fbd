#include "doctest.h"

#include <algorithm>

#include "pilotwave/ensemble.hpp"
#include "pilotwave/fock.hpp"
#include "support.hpp"

using namespace pilotwave;

namespace {

// Product Gaussian with density standard deviation s per coordinate.
SnapshotPtr gaussian(std::size_t dim, double center, double s, std::size_t points = 400) {
  std::vector<Axis> support(dim, Axis{center - 10 * s, center + 10 * s, points});
  return std::make_shared<FunctionSnapshot>(dim, 1, 0.0, support, [=](auto x, auto v, auto g) {
    double e = 0.0;
    for (double xi : x) e += (xi - center) * (xi - center);
    v[0] = std::pow(2 * kPi * s * s, -0.25 * static_cast<double>(x.size())) * std::exp(-e / (4 * s * s));
    if (!g.empty()) std::fill(g.begin(), g.end(), cplx(0.0));
  });
}

double normal_cdf(double x, double sd) { return 0.5 * std::erfc(-x / (sd * std::sqrt(2.0))); }

double ks_statistic(std::vector<double> xs, double sd) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double f = normal_cdf(xs[i], sd);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(f - static_cast<double>(i + 1) / n)});
  }
  return d;
}

}  // namespace

TEST_CASE("Gaussian samples have the right moments") {
  const double c = 0.7, s = 1.3;
  const std::size_t n = 100000;
  auto psi = gaussian(1, c, s, 2000);
  SamplingDiagnostics diag;
  auto pts = sample_equilibrium(*psi, n, 42, &diag);
  REQUIRE(pts.size() == n);
  CHECK(diag.method == "inverse_cdf");
  double mean = 0.0, var = 0.0;
  for (double x : pts.coords) mean += x;
  mean /= n;
  for (double x : pts.coords) var += (x - mean) * (x - mean);
  var /= n - 1;
  CHECK(std::abs(mean - c) <= 4 * s / std::sqrt(double(n)));
  CHECK(std::abs(var - s * s) <= 0.05 * s * s);
}

TEST_CASE("two-branch weights set the branch counts") {
  const double w1 = 0.3, w2 = 0.7;
  std::vector<Axis> support = {{-15, 15, 3000}};
  auto psi = std::make_shared<FunctionSnapshot>(1, 1, 0.0, support, [=](auto x, auto v, auto) {
    auto g = [](double y, double c) { return std::pow(2 * kPi * 0.25, -0.25) * std::exp(-(y - c) * (y - c) / (4 * 0.25)); };
    v[0] = std::sqrt(w1) * g(x[0], -5) + std::sqrt(w2) * g(x[0], 5);
  });
  const std::size_t n = 20000;
  auto pts = sample_equilibrium(*psi, n, 7);
  double left = static_cast<double>(std::count_if(pts.coords.begin(), pts.coords.end(), [](double x) { return x < 0; }));
  double se = std::sqrt(n * w1 * w2);
  CHECK(std::abs(left - n * w1) <= 3 * se);
}

TEST_CASE("two-mode vacuum marginals pass a KS test") {
  FockBasis basis({6, 6}, 1);
  FockWavefunction vac(basis, {1.0, 1.0});
  vac.amplitudes()[0] = 1.0;
  FockSnapshot snap(vac);
  const std::size_t n = 10000;
  auto pts = sample_equilibrium(snap, n, 2024);
  // Critical value of the one-sample KS statistic at the 0.01 level.
  const double critical = 1.628 / std::sqrt(double(n));
  for (std::size_t j = 0; j < 2; ++j) {
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i) xs[i] = pts.point(i)[j];
    double d = ks_statistic(xs, std::sqrt(0.5));
    CAPTURE(d);
    CHECK(d <= critical);
  }
}

TEST_CASE("equilibrium samples sit within the noise floor") {
  for (std::size_t dim : {1u, 2u, 3u}) {
    auto psi = gaussian(dim, 0.0, 1.0, dim == 3 ? 60 : 300);
    auto pts = sample_equilibrium(*psi, 10000, 100 + dim);
    auto r = equivariance_distance(pts, *psi, 5);
    CAPTURE(dim);
    CAPTURE(r.distance);
    CAPTURE(r.noise_floor);
    CHECK(r.passes());
    CHECK(r.marginal == (dim >= 3));
  }
}

TEST_CASE("a point ensemble is maximally far from equilibrium") {
  auto psi = gaussian(1, 0.0, 1.0);
  PointSet pts{1, std::vector<double>(1000, 0.001)};
  auto r = equivariance_distance(pts, *psi, 1);
  CHECK(r.distance == doctest::Approx(2.0).epsilon(0.1));
  CHECK_FALSE(r.passes());
}

TEST_CASE("equivariance needs at least 100 points") {
  auto psi = gaussian(1, 0.0, 1.0);
  PointSet pts{1, std::vector<double>(99, 0.0)};
  CHECK_THROWS_AS(equivariance_distance(pts, *psi, 1), RangeError);
}

TEST_CASE("sampling is deterministic in the seed") {
  auto psi = gaussian(2, 0.0, 1.0, 100);
  auto a = sample_equilibrium(*psi, 500, 9), b = sample_equilibrium(*psi, 500, 9), c = sample_equilibrium(*psi, 500, 10);
  CHECK(a.coords == b.coords);
  CHECK(a.coords != c.coords);
  auto e1 = stream_engine(9, 3), e2 = stream_engine(9, 3), e3 = stream_engine(9, 4);
  auto x1 = e1();
  CHECK(x1 == e2());
  CHECK(x1 != e3());

  auto psi3 = gaussian(3, 0.0, 1.0, 40);
  auto m1 = sample_equilibrium(*psi3, 300, 4), m2 = sample_equilibrium(*psi3, 300, 4);
  CHECK(m1.coords == m2.coords);
}

TEST_CASE("split R-hat") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::vector<std::vector<double>> same(4, std::vector<double>(2000)), apart = same;
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::size_t i = 0; i < 2000; ++i) {
      same[c][i] = g(rng);
      apart[c][i] = g(rng) + 3.0 * static_cast<double>(c);
    }
  }
  CHECK(split_rhat(same) == doctest::Approx(1.0).epsilon(0.02));
  CHECK(split_rhat(apart) > 1.5);
}

TEST_CASE("Metropolis sampling in three dimensions") {
  const double s = 0.8;
  auto psi = gaussian(3, 0.5, s, 60);
  SamplingDiagnostics diag;
  const std::size_t n = 20000;
  auto pts = sample_equilibrium(*psi, n, 77, &diag);
  CHECK(diag.method == "metropolis");
  CHECK(diag.converged);
  CHECK(diag.rhat <= 1.05);
  CHECK(diag.acceptance > 0.1);
  CHECK(diag.acceptance < 0.9);
  for (std::size_t d = 0; d < 3; ++d) {
    double mean = 0.0, var = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += pts.point(i)[d];
    mean /= n;
    for (std::size_t i = 0; i < n; ++i) var += std::pow(pts.point(i)[d] - mean, 2);
    var /= n - 1;
    CHECK(std::abs(mean - 0.5) <= 0.05);
    CHECK(std::abs(var - s * s) <= 0.1 * s * s);
  }
}
