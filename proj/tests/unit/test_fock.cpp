#include "doctest.h"

#include <random>

#include <Eigen/Eigenvalues>

#include "pilotwave/fock.hpp"
#include "support.hpp"

using namespace pilotwave;

namespace {

std::string mode_scenario(const std::string& state, const std::string& extra = "", int fermions = 1) {
  return fmt::format(R"(
name = fock
[model]
kind = field_mode
wavevectors = [(0.0, 0.0, 1.0)]
polarizations = [1]
fermion_dim = {}
{}
[initial]
state = {}
[domain]
solver = fock
nmax = [20, 4]
[time]
dt = 0.1
t_final = 1.0
)",
                     fermions, extra, state);
}

FockWavefunction initial(const Scenario& s) {
  FockBasis basis(s.nmax, s.internal_dim());
  auto terms = s.initial_state.expand(s.state_context());
  auto psi = FockWavefunction::from_terms(basis, s.model.frequencies, terms);
  psi.normalize();
  return psi;
}

// Dense number-basis Hamiltonian assembled from ladder operators, with the
// storage order flat(n) * F + f, last mode fastest.
Matrix oracle_hamiltonian(const std::vector<int>& nmax, const std::vector<double>& omega, const Matrix& hf,
                          const std::vector<Matrix>& g) {
  const std::size_t f = static_cast<std::size_t>(hf.rows());
  std::size_t states = 1;
  for (int n : nmax) states *= static_cast<std::size_t>(n + 1);
  const auto dim = static_cast<Eigen::Index>(states * f);
  Matrix h = Matrix::Zero(dim, dim);
  auto occupation = [&](std::size_t flat) {
    std::vector<int> n(nmax.size());
    for (std::size_t j = nmax.size(); j-- > 0;) {
      n[j] = static_cast<int>(flat % static_cast<std::size_t>(nmax[j] + 1));
      flat /= static_cast<std::size_t>(nmax[j] + 1);
    }
    return n;
  };
  auto flat_of = [&](const std::vector<int>& n) {
    std::size_t flat = 0;
    for (std::size_t j = 0; j < n.size(); ++j) flat = flat * static_cast<std::size_t>(nmax[j] + 1) + static_cast<std::size_t>(n[j]);
    return flat;
  };
  for (std::size_t s = 0; s < states; ++s) {
    auto n = occupation(s);
    double e = 0.0;
    for (std::size_t j = 0; j < n.size(); ++j) e += omega[j] * (n[j] + 0.5);
    for (std::size_t a = 0; a < f; ++a) {
      auto row = static_cast<Eigen::Index>(s * f + a);
      h(row, row) += e;
      for (std::size_t b = 0; b < f; ++b) h(row, static_cast<Eigen::Index>(s * f + b)) += hf(a, b);
    }
    for (std::size_t j = 0; j < n.size() && j < g.size(); ++j) {
      if (n[j] == nmax[j]) continue;
      auto up = n;
      ++up[j];
      double amp = std::sqrt(static_cast<double>(up[j]) / (2.0 * omega[j]));
      std::size_t t = flat_of(up);
      for (std::size_t a = 0; a < f; ++a) {
        for (std::size_t b = 0; b < f; ++b) {
          cplx v = amp * g[j](a, b);
          h(static_cast<Eigen::Index>(t * f + a), static_cast<Eigen::Index>(s * f + b)) += v;
          h(static_cast<Eigen::Index>(s * f + b), static_cast<Eigen::Index>(t * f + a)) += std::conj(v);
        }
      }
    }
  }
  return h;
}

}  // namespace

TEST_CASE("number state only acquires its phase") {
  auto s = testing::scenario_from(mode_scenario("number_state(n = [1, 0])"));
  auto psi = initial(s);
  const double tau = 0.3;
  FockPropagator prop(s.model, psi.basis(), tau);
  auto out = psi;
  prop.step(out);
  const double e = 1.0 * (1 + 0.5) + 1.0 * 0.5;
  for (std::size_t i = 0; i < psi.amplitudes().size(); ++i) {
    CHECK(std::abs(out.amplitudes()[i] - std::exp(cplx(0, -e * tau)) * psi.amplitudes()[i]) <= 1e-12);
  }
}

TEST_CASE("coherent state mean follows the classical oscillator") {
  const cplx alpha(1.2, 0.5);
  auto s = testing::scenario_from(mode_scenario("coherent(alpha = [(1.2, 0.5), 0])"));
  s.nmax = {40, 4};
  auto psi = initial(s);
  FockPropagator prop(s.model, psi.basis(), 0.05);
  for (int i = 1; i <= 60; ++i) {
    prop.step(psi);
    double t = 0.05 * i;
    double oracle = std::sqrt(2.0) * std::abs(alpha) * std::cos(t - std::arg(alpha));
    CHECK(std::abs(psi.mean(0) - oracle) <= 1e-6);
  }
  CHECK(psi.variance(0) == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("two-level coupling matches a dense matrix exponential") {
  auto s = testing::scenario_from(
      mode_scenario("spinor([1, 0], ho_ground())", "fermion_block = sigma_z(0.5)\ncouplings = [sigma_x(0.4), zero]", 2));
  s.nmax = {12, 2};
  auto psi = initial(s);
  Matrix h = oracle_hamiltonian(s.nmax, s.model.frequencies, s.model.fermion_block, s.model.couplings);
  FockBasis basis(s.nmax, 2);
  Matrix mine = Matrix(fock_hamiltonian(s.model, basis));
  CHECK((mine - h).cwiseAbs().maxCoeff() <= 1e-12);

  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const double t = 5.0;
  Eigen::VectorXcd phases = (es.eigenvalues().cast<cplx>() * cplx(0, -t)).array().exp();
  Matrix u = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
  Eigen::Map<const Eigen::VectorXcd> v0(psi.amplitudes().data(), static_cast<Eigen::Index>(psi.amplitudes().size()));
  Eigen::VectorXcd expected = u * v0;

  FockPropagator prop(s.model, basis, 0.25);
  for (int i = 0; i < 20; ++i) prop.step(psi);
  double excited = 0.0, excited_oracle = 0.0;
  for (std::size_t i = 0; i < psi.amplitudes().size(); ++i) {
    CHECK(std::abs(std::norm(psi.amplitudes()[i]) - std::norm(expected(static_cast<Eigen::Index>(i)))) <= 1e-8);
    if (i % 2 == 0) {
      excited += std::norm(psi.amplitudes()[i]);
      excited_oracle += std::norm(expected(static_cast<Eigen::Index>(i)));
    }
  }
  CHECK(std::abs(excited - excited_oracle) <= 1e-8);
  CHECK(excited < 0.999);
}

TEST_CASE("Lanczos and dense propagation agree") {
  auto s = testing::scenario_from(
      mode_scenario("spinor([1, 0], ho_ground())", "fermion_block = sigma_z(0.5)\ncouplings = [sigma_x(0.4), zero]", 2));
  auto a = initial(s);
  auto b = a;
  FockPropagator exact(s.model, a.basis(), 0.1, "exact");
  FockPropagator krylov(s.model, b.basis(), 0.1, "lanczos");
  CHECK(exact.method() == FockPropagator::Method::exact);
  CHECK(krylov.method() == FockPropagator::Method::lanczos);
  for (int i = 0; i < 10; ++i) {
    exact.step(a);
    krylov.step(b);
  }
  for (std::size_t i = 0; i < a.amplitudes().size(); ++i) CHECK(std::abs(a.amplitudes()[i] - b.amplitudes()[i]) <= 1e-10);
}

TEST_CASE("vacuum and first excited values at the origin") {
  auto s = testing::scenario_from(mode_scenario("ho_ground()"));
  auto vac = initial(s);
  std::vector<double> q = {0.0, 0.0};
  std::vector<cplx> v(1), g(2);
  vac.evaluate(q, v, g);
  CHECK(std::abs(v[0]) == doctest::Approx(std::sqrt(1.0 / kPi)).epsilon(1e-12));
  CHECK(std::abs(g[0]) < 1e-15);
  CHECK(std::abs(g[1]) < 1e-15);
  CHECK(vac.density(q) == doctest::Approx(1.0 / kPi).epsilon(1e-12));

  auto one = initial(testing::scenario_from(mode_scenario("number_state(n = [1, 0])")));
  one.evaluate(q, v, g);
  CHECK(std::abs(v[0]) < 1e-15);
}

TEST_CASE("gradients agree with central differences") {
  auto s = testing::scenario_from(mode_scenario("ho_ground()"));
  s.nmax = {6, 6};
  FockBasis basis(s.nmax, 1);
  FockWavefunction psi(basis, s.model.frequencies);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  for (auto& c : psi.amplitudes()) c = cplx(normal(rng), normal(rng));
  psi.normalize();
  std::uniform_real_distribution<double> uni(-2.5, 2.5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> q = {uni(rng), uni(rng)};
    std::vector<cplx> v(1), g(2), vp(1), vm(1);
    psi.evaluate(q, v, g);
    for (std::size_t j = 0; j < 2; ++j) {
      const double h = 1e-5;
      auto qp = q, qm = q;
      qp[j] += h;
      qm[j] -= h;
      psi.evaluate(qp, vp);
      psi.evaluate(qm, vm);
      cplx fd = (vp[0] - vm[0]) / (2 * h);
      CHECK(std::abs(g[j] - fd) <= 1e-6 * std::max(std::abs(g[j]), 1e-3));
    }
  }
}

TEST_CASE("amplitude norm equals the position-space norm") {
  auto s = testing::scenario_from(mode_scenario("coherent(alpha = [(0.8, -0.3), (0.2, 0.1)])"));
  s.nmax = {24, 12};
  auto psi = initial(s);
  const double h = 0.05;
  double total = 0.0;
  std::vector<double> q(2);
  for (double a = -9; a <= 9; a += h) {
    for (double b = -9; b <= 9; b += h) {
      q = {a, b};
      total += psi.density(q);
    }
  }
  CHECK(std::abs(total * h * h - psi.norm2()) <= 1e-6);
  double marginal = 0.0;
  for (double a = -9; a <= 9; a += h) marginal += psi.marginal_density(0, a) * h;
  CHECK(marginal == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("leakage measures the truncation shell") {
  auto s = testing::scenario_from(mode_scenario("number_state(n = [20, 0])"));
  auto psi = initial(s);
  CHECK(psi.leakage() == doctest::Approx(1.0));
  auto vac = initial(testing::scenario_from(mode_scenario("ho_ground()")));
  CHECK(vac.leakage() == 0.0);
}

TEST_CASE("Fock snapshots round-trip through the binary format") {
  auto psi = initial(testing::scenario_from(mode_scenario("coherent(alpha = [1.0, 0])")));
  psi.set_time(1.5);
  auto dir = testing::scratch_dir("fock");
  auto path = (dir / "psi.bin").string();
  psi.save(path);
  auto back = FockWavefunction::load(path);
  CHECK(back.basis() == psi.basis());
  CHECK(back.time() == 1.5);
  CHECK(back.amplitudes() == psi.amplitudes());
  std::filesystem::remove_all(dir);
}

TEST_CASE("evaluation beyond the Hermite range is refused") {
  auto psi = initial(testing::scenario_from(mode_scenario("ho_ground()")));
  std::vector<double> q = {100.0, 0.0};
  std::vector<cplx> v(1);
  CHECK_THROWS_AS(psi.evaluate(q, v), RangeError);
}
