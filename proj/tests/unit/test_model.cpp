#include "doctest.h"

#include <random>

#include "pilotwave/fock.hpp"
#include "pilotwave/grid_solver.hpp"
#include "pilotwave/hermite.hpp"
#include "pilotwave/model.hpp"
#include "support.hpp"

using namespace pilotwave;

namespace {

double max_dev(const Vec3& a, const Vec3& b) {
  return std::max({std::abs(a[0] - b[0]), std::abs(a[1] - b[1]), std::abs(a[2] - b[2])});
}

const char* kGaussian = R"(
name = g
[model]
kind = particle_schrodinger
masses = [1.0]
[initial]
state = gaussian_packet(center = [0.0], width = [1.0])
[domain]
axes = [axis(-20.0, 20.0, 256)]
[time]
dt = 0.01
t_final = 0.1
)";

}  // namespace

TEST_CASE("polarization vectors for k along z") {
  Vec3 k{0, 0, 1};
  CHECK(max_dev(polarization_vector(k, 1), {1, 0, 0}) < 1e-15);
  CHECK(max_dev(polarization_vector(k, 2), {0, 1, 0}) < 1e-15);
  double proj[3][3] = {};
  for (int l = 1; l <= 2; ++l) {
    Vec3 e = polarization_vector(k, l);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) proj[i][j] += e[i] * e[j];
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(proj[i][j] == doctest::Approx(i == j && i < 2 ? 1.0 : 0.0));
}

TEST_CASE("polarization identities over random wavevectors") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 500; ++trial) {
    Vec3 k{normal(rng), normal(rng), normal(rng)};
    if (trial % 50 == 0) k = {0, 0, -2.5};
    double kk = dot(k, k);
    Vec3 e[2] = {polarization_vector(k, 1), polarization_vector(k, 2)};
    for (const auto& v : e) {
      CHECK(std::abs(dot(v, k)) < 1e-12 * std::sqrt(kk));
      CHECK(std::abs(norm(v) - 1.0) < 1e-12);
    }
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        double lhs = e[0][i] * e[0][j] + e[1][i] * e[1][j];
        double rhs = (i == j ? 1.0 : 0.0) - k[i] * k[j] / kk;
        CHECK(std::abs(lhs - rhs) < 1e-12);
      }
    }
    CHECK(max_dev(polarization_vector(k, 1), polarization_vector(-k, 1)) < 1e-15);
    CHECK(max_dev(polarization_vector(k, 2), polarization_vector(-k, 2)) < 1e-15);
  }
}

TEST_CASE("diagonal wavevector against the explicit projector") {
  Vec3 k{1 / std::sqrt(2.0), 1 / std::sqrt(2.0), 0};
  const double oracle[3][3] = {{0.5, -0.5, 0}, {-0.5, 0.5, 0}, {0, 0, 1}};
  Vec3 e1 = polarization_vector(k, 1), e2 = polarization_vector(k, 2);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(std::abs(e1[i] * e1[j] + e2[i] * e2[j] - oracle[i][j]) < 1e-14);
}

TEST_CASE("mode basis keeps one member of each pair") {
  std::vector<Vec3> ks = {{0, 0, 1}, {0, 0, -1}, {1, 0, 0}};
  auto b = ModeBasis::build(ks);
  CHECK(b.mode_count() == 4);
  CHECK(b.quadrature_count() == 8);
  for (std::size_t j = 0; j < b.quadrature_count(); ++j) CHECK(b.frequency(j) == doctest::Approx(1.0));
  CHECK(b.quadrature_label(0) != b.quadrature_label(1));
  auto single = ModeBasis::build(ks, {2});
  CHECK(single.mode_count() == 2);
  CHECK(b.hash() != single.hash());
  CHECK(b.hash() == ModeBasis::build(ks).hash());
  std::vector<Vec3> zero = {{0, 0, 0}};
  CHECK_THROWS_AS(ModeBasis::build(zero), StructuralError);
}

TEST_CASE("validation of a valid scenario is empty") {
  auto s = testing::scenario_from(kGaussian);
  CHECK(validate_scenario(s).empty());
}

TEST_CASE("dt = 0 is flagged") {
  auto s = testing::scenario_from(kGaussian);
  s.dt = 0.0;
  auto ds = validate_scenario(s);
  REQUIRE(ds.size() >= 1);
  CHECK(testing::has_code(ds, "INVALID_TIMESTEP"));
}

TEST_CASE("non-Hermitian fermion block is flagged") {
  auto s = testing::scenario_from(R"(
name = nh
[model]
kind = field_mode
wavevectors = [(0.0, 0.0, 1.0)]
polarizations = [1]
fermion_dim = 2
fermion_block = [[0, 1], [0, 0]]
[initial]
state = spinor([1, 0], ho_ground())
[domain]
solver = fock
nmax = [8, 8]
[time]
dt = 0.1
t_final = 1.0
)");
  auto ds = validate_scenario(s);
  CHECK(testing::has_code(ds, "NONHERMITIAN_BLOCK"));
}

TEST_CASE("other invariants are flagged with stable codes") {
  auto s = testing::scenario_from(kGaussian);
  s.samples = 0;
  CHECK(testing::has_code(validate_scenario(s), "SAMPLE_COUNT"));
  s = testing::scenario_from(kGaussian);
  s.t_final = -1.0;
  CHECK(testing::has_code(validate_scenario(s), "INVALID_DURATION"));
  s = testing::scenario_from(kGaussian);
  s.axes[0].points = 4;
  CHECK(testing::has_code(validate_scenario(s), "AXIS_POINTS"));
  s = testing::scenario_from(kGaussian);
  s.axes[0] = Axis{-3.0, 3.0, 64};
  CHECK(testing::has_code(validate_scenario(s), "BOUNDARY_AMPLITUDE"));
  s = testing::scenario_from(kGaussian);
  s.model.masses = {-1.0};
  CHECK(testing::has_code(validate_scenario(s), "NONPOSITIVE_MASS"));
}

TEST_CASE("unknown keys are parse errors naming the key") {
  std::string text = std::string(kGaussian) + "[time]\nbogus = 1\n";
  try {
    testing::scenario_from(text);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.key() == "time.bogus");
  }
}

TEST_CASE("Hermite functions match closed forms") {
  const double w = 1.7;
  for (double q : {-2.0, -0.3, 0.0, 0.8, 3.1}) {
    double xi = std::sqrt(w) * q;
    double g = std::pow(w / kPi, 0.25) * std::exp(-xi * xi / 2);
    CHECK(hermite_function(0, q, w) == doctest::Approx(g).epsilon(1e-13));
    CHECK(hermite_function(1, q, w) == doctest::Approx(std::sqrt(2.0) * xi * g).epsilon(1e-13));
    CHECK(hermite_function(2, q, w) == doctest::Approx((2 * xi * xi - 1) / std::sqrt(2.0) * g).epsilon(1e-12));
    std::vector<double> v(7), d(7);
    hermite_functions(q, w, 6, v, d);
    for (int n = 0; n <= 5; ++n) {
      double h = 1e-5;
      double fd = (hermite_function(n, q + h, w) - hermite_function(n, q - h, w)) / (2 * h);
      CHECK(d[static_cast<std::size_t>(n)] == doctest::Approx(fd).epsilon(1e-7));
    }
  }
  std::vector<double> big(61);
  hermite_functions(7.0, 1.0, 60, big);
  for (double v : big) CHECK(std::isfinite(v));
}

TEST_CASE("assembled Hamiltonians are Hermitian") {
  const char* models[] = {
      R"(
name = a
[model]
kind = particle_schrodinger
masses = [1.0, 2.0]
potential = harmonic(omega = [1.0, 0.5])
[initial]
state = ho_ground()
[domain]
axes = [axis(-6.0, 6.0, 12), axis(-6.0, 6.0, 10)]
[time]
dt = 0.1
t_final = 1.0
)",
      R"(
name = b
[model]
kind = pauli
dimension = 2
charge = 1.0
moment = 0.7
vector_potential = symmetric_gauge(strength = 0.4)
magnetic_field = gradient(b0 = 1.0, gradient = 0.5, axis = 0)
[initial]
state = spinor([1, 0], ho_ground())
[domain]
axes = [axis(-6.0, 6.0, 10), axis(-6.0, 6.0, 10)]
[time]
dt = 0.1
t_final = 1.0
)",
      R"(
name = c
[model]
kind = field_mode
wavevectors = [(0.0, 0.0, 1.0)]
polarizations = [1]
fermion_dim = 2
fermion_block = sigma_z(0.5)
coulomb_block = [[0.1, (0, 0.2)], [(0, -0.2), 0.3]]
couplings = [sigma_x(1.0), sigma_y(0.3)]
[initial]
state = spinor([1, 0], ho_ground())
[domain]
axes = [axis(-6.0, 6.0, 12), axis(-6.0, 6.0, 12)]
nmax = [6, 6]
[time]
dt = 0.1
t_final = 1.0
)"};
  for (const char* text : models) {
    auto s = testing::scenario_from(text);
    GridHamiltonian h(s.model, GridLayout(s.axes, s.internal_dim()));
    Matrix d = h.dense();
    double scale = d.cwiseAbs().maxCoeff();
    CHECK((d - d.adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, scale));
    if (s.model.kind == ModelKind::field_mode) {
      FockBasis basis(s.nmax, s.internal_dim());
      Matrix f = Matrix(fock_hamiltonian(s.model, basis));
      CHECK((f - f.adjoint()).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}
