#include "doctest.h"

#include <fstream>

#include <Eigen/Eigenvalues>

#include "pilotwave/grid_solver.hpp"
#include "support.hpp"

using namespace pilotwave;

namespace {

struct Setup {
  Scenario s;
  std::unique_ptr<GridHamiltonian> h;
  WavefunctionGrid psi;
};

Setup make(const std::string& text) {
  Setup out;
  out.s = testing::scenario_from(text);
  GridLayout layout(out.s.axes, out.s.internal_dim());
  out.h = std::make_unique<GridHamiltonian>(out.s.model, layout);
  auto terms = out.s.initial_state.expand(out.s.state_context());
  out.psi = WavefunctionGrid::from_terms(layout, terms);
  out.psi.normalize();
  return out;
}

// <x^k> for coordinate 0 of a 1-D grid.
double moment(const WavefunctionGrid& psi, int k) {
  const Axis& a = psi.layout().axes()[0];
  auto rho = psi.density();
  double s = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) s += std::pow(a.at(i), k) * rho[i];
  return s * a.spacing();
}

const char* kOscillator = R"(
name = ho
[model]
kind = particle_schrodinger
masses = [1.0]
potential = harmonic(omega = [1.0])
[initial]
state = ho_ground()
[domain]
axes = [axis(-10.0, 10.0, 128)]
[time]
dt = 0.1
t_final = 1.0
)";

std::string free_packet(double momentum) {
  return fmt::format(R"(
name = free
[model]
kind = particle_schrodinger
masses = [1.0]
[initial]
state = gaussian_packet(center = [0.0], width = [1.0], momentum = [{}])
[domain]
axes = [axis(-40.0, 40.0, 1024)]
[time]
dt = 0.01
t_final = 2.0
)",
                     momentum);
}

}  // namespace

TEST_CASE("oscillator ground state only acquires the phase exp(-i E0 dt)") {
  auto st = make(kOscillator);
  const double e0 = 0.5;
  for (auto [scheme, tau] : {std::pair{GridScheme::exact, 0.37}, std::pair{GridScheme::exact, 1.3},
                             std::pair{GridScheme::split_step4, 0.01}, std::pair{GridScheme::split_step, 0.001},
                             std::pair{GridScheme::crank_nicolson, 0.01}}) {
    CAPTURE(to_string(scheme));
    GridPropagator prop(*st.h, scheme, tau);
    WavefunctionGrid out = st.psi;
    prop.step(out);
    cplx overlap = inner_product(out, st.psi) * std::exp(cplx(0, -e0 * tau));
    CHECK(std::abs(overlap) >= 1 - 1e-8);
    CHECK(std::abs(overlap - 1.0) <= 1e-6);
  }
}

TEST_CASE("free packet width follows the spreading law") {
  auto st = make(free_packet(0.0));
  GridPropagator prop(*st.h, GridScheme::split_step4, 0.01);
  for (int i = 0; i < 200; ++i) prop.step(st.psi);
  const double t = 2.0, s0 = 1.0;
  double sigma = std::sqrt(moment(st.psi, 2) - std::pow(moment(st.psi, 1), 2));
  double oracle = s0 * std::sqrt(1 + std::pow(t / (2 * s0 * s0), 2));
  CHECK(std::abs(sigma - oracle) / oracle <= 1e-4);
}

TEST_CASE("packet centre moves at the group velocity") {
  auto st = make(free_packet(2.0));
  GridPropagator prop(*st.h, GridScheme::split_step4, 0.01);
  for (int i = 0; i < 100; ++i) prop.step(st.psi);
  double mean = moment(st.psi, 1);
  CHECK(std::abs(mean - 2.0) / 2.0 <= 1e-4);
}

TEST_CASE("uncoupled field mode has ground energy sum omega / 2") {
  auto st = make(R"(
name = mode
[model]
kind = field_mode
wavevectors = [(0.0, 0.0, 2.0)]
polarizations = [1]
[initial]
state = ho_ground()
[domain]
axes = [axis(-6.0, 6.0, 48), axis(-6.0, 6.0, 48)]
[time]
dt = 0.1
t_final = 1.0
)");
  double e = st.h->lowest_eigenvalue();
  CHECK(std::abs(e - 2.0) / 2.0 <= 1e-6);
  CHECK(st.h->energy(st.psi) == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("Zeeman term splits spin states by 2 mu B") {
  const double mu = 0.7, b = 1.5;
  auto st = make(fmt::format(R"(
name = zeeman
[model]
kind = pauli
moment = {}
magnetic_field = constant([0.0, 0.0, {}])
potential = harmonic(omega = [1.0])
[initial]
state = spinor([1, 0], ho_ground())
[domain]
axes = [axis(-10.0, 10.0, 32)]
[time]
dt = 0.1
t_final = 1.0
)",
                             mu, b));
  Matrix d = st.h->dense();
  const Eigen::Index n = d.rows();
  double offdiag = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if ((i % 2) != (j % 2)) offdiag = std::max(offdiag, std::abs(d(i, j)));
  CHECK(offdiag == 0.0);
  Matrix up(n / 2, n / 2), down(n / 2, n / 2);
  for (Eigen::Index i = 0; i < n / 2; ++i) {
    for (Eigen::Index j = 0; j < n / 2; ++j) {
      up(i, j) = d(2 * i, 2 * j);
      down(i, j) = d(2 * i + 1, 2 * j + 1);
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eu(up), ed(down);
  for (Eigen::Index k = 0; k < 4; ++k) {
    CHECK(std::abs(eu.eigenvalues()(k) - ed.eigenvalues()(k)) == doctest::Approx(2 * mu * b).epsilon(1e-9));
  }
}

TEST_CASE("Lanczos ground energy of the coupled two-level mode matches dense diagonalization") {
  auto st = make(R"(
name = toy
[model]
kind = field_mode
wavevectors = [(0.0, 0.0, 1.0)]
polarizations = [1]
fermion_dim = 2
fermion_block = sigma_z(0.5)
couplings = [sigma_x(1.0), zero]
[initial]
state = spinor([1, 0], ho_ground())
[domain]
axes = [axis(-7.0, 7.0, 16), axis(-7.0, 7.0, 16)]
[time]
dt = 0.1
t_final = 1.0
)");
  Eigen::SelfAdjointEigenSolver<Matrix> es(st.h->dense(), Eigen::EigenvaluesOnly);
  CHECK(st.h->lowest_eigenvalue() == doctest::Approx(es.eigenvalues()(0)).epsilon(1e-10));
}

TEST_CASE("all schemes conserve the norm") {
  auto st = make(R"(
name = cn
[model]
kind = pauli
dimension = 2
charge = 1.0
moment = 0.5
vector_potential = symmetric_gauge(strength = 0.5)
magnetic_field = constant([0.0, 0.0, 0.5])
[initial]
state = spinor([0.6, 0.8], gaussian_packet(center = [0.0, 0.0], width = [1.0, 1.0], momentum = [1.0, 0.0]))
[domain]
axes = [axis(-12.0, 12.0, 64), axis(-12.0, 12.0, 64)]
[time]
dt = 0.02
t_final = 1.0
)");
  CHECK(resolve_grid_scheme("auto", st.s.model) == GridScheme::crank_nicolson);
  CHECK_THROWS_AS(GridPropagator(*st.h, GridScheme::split_step, 0.01), StructuralError);
  GridPropagator prop(*st.h, GridScheme::crank_nicolson, 0.01);
  double e0 = st.h->energy(st.psi);
  for (int i = 0; i < 20; ++i) {
    double before = st.psi.norm2();
    prop.step(st.psi);
    CHECK(std::abs(st.psi.norm2() - before) <= 1e-8);
  }
  CHECK(std::abs(st.h->energy(st.psi) - e0) / std::abs(e0) <= 1e-6);
}

TEST_CASE("too large a step for the potential is refused") {
  auto st = make(kOscillator);
  CHECK_THROWS_AS(GridPropagator(*st.h, GridScheme::split_step4, 1.0), StabilityError);
  CHECK_THROWS_AS(GridPropagator(*st.h, GridScheme::split_step4, 0.0), StabilityError);
}

TEST_CASE("grid snapshots round-trip through the binary format") {
  auto st = make(free_packet(1.0));
  st.psi.set_time(0.25);
  auto dir = testing::scratch_dir("grid");
  auto path = (dir / "psi.bin").string();
  st.psi.save(path);
  auto back = WavefunctionGrid::load(path);
  CHECK(back.layout() == st.psi.layout());
  CHECK(back.time() == 0.25);
  CHECK(back.amplitudes() == st.psi.amplitudes());
  std::ofstream(dir / "junk.bin") << "not a snapshot";
  CHECK_THROWS_AS(WavefunctionGrid::load((dir / "junk.bin").string()), StructuralError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("layout indexing and wavenumbers") {
  GridLayout l({Axis{0, 4, 4}, Axis{-1, 1, 8}}, 2);
  CHECK(l.points() == 32);
  CHECK(l.size() == 64);
  CHECK(l.stride(1) == 1);
  CHECK(l.stride(0) == 8);
  std::vector<std::size_t> m(2);
  l.multi_index(13, m);
  CHECK(m[0] == 1);
  CHECK(m[1] == 5);
  CHECK(l.index(m) == 13);
  auto k = l.wavenumbers(0);
  CHECK(k[1] == doctest::Approx(2 * kPi / 4));
  CHECK(k[2] < 0);
  CHECK(l.cell_volume() == doctest::Approx(0.25));
}
