#include "doctest.h"

#include "pilotwave/guidance.hpp"
#include "support.hpp"

using namespace pilotwave;

namespace {

using Eval = FunctionSnapshot::Evaluator;

SnapshotPtr closed_form(std::size_t dim, std::size_t f, double t, Eval e, double half_width = 20.0) {
  std::vector<Axis> support(dim, Axis{-half_width, half_width, 400});
  return std::make_shared<FunctionSnapshot>(dim, f, t, support, std::move(e));
}

// Packet with density standard deviation s, centre c and momentum p.
cplx packet(double x, double c, double s, double p, cplx* grad) {
  cplx v = std::pow(2 * kPi * s * s, -0.25) * std::exp(cplx(-(x - c) * (x - c) / (4 * s * s), p * x));
  if (grad) *grad = v * cplx(-(x - c) / (2 * s * s), p);
  return v;
}

// Free spreading packet (hbar = m = 1, zero momentum), density width s0 at t = 0.
cplx spreading(double x, double t, double s0, cplx* grad) {
  cplx st = s0 * cplx(1.0, t / (2 * s0 * s0));
  cplx v = std::pow(2 * kPi * st * st, -0.25) * std::exp(-x * x / (4 * s0 * st));
  if (grad) *grad = v * (-x / (2 * s0 * st));
  return v;
}

double phi0(double x) { return std::pow(kPi, -0.25) * std::exp(-x * x / 2); }

GuidanceLaw unit_law(std::size_t dim) {
  GuidanceLaw law;
  law.masses.assign(dim, 1.0);
  return law;
}

std::vector<double> vel(const WaveSnapshot& s, const GuidanceLaw& law, std::vector<double> x,
                        NodeSettings node = {}) {
  std::vector<double> v(x.size());
  velocity(s, law, node, x, v);
  return v;
}

}  // namespace

TEST_CASE("density of a normalized Gaussian at its centre") {
  const double s = 0.7;
  auto snap = closed_form(1, 1, 0, [&](auto x, auto v, auto g) { v[0] = packet(x[0], 0.3, s, 1.0, g.empty() ? nullptr : &g[0]); });
  std::vector<double> c = {0.3};
  CHECK(density(*snap, c) == doctest::Approx(1 / std::sqrt(2 * kPi * s * s)).epsilon(1e-14));

  auto spin = closed_form(1, 2, 0, [&](auto x, auto v, auto) {
    v[0] = packet(x[0], 0.3, s, 0, nullptr) / std::sqrt(2.0);
    v[1] = v[0];
  });
  CHECK(density(*spin, c) == doctest::Approx(1 / std::sqrt(2 * kPi * s * s)).epsilon(1e-14));
}

TEST_CASE("real states do not move") {
  auto ground = closed_form(1, 1, 0, [](auto x, auto v, auto g) {
    v[0] = phi0(x[0]);
    if (!g.empty()) g[0] = -x[0] * phi0(x[0]);
  });
  for (double x : {-3.0, -0.5, 0.0, 1.0, 2.5}) CHECK(vel(*ground, unit_law(1), {x})[0] == 0.0);
}

TEST_CASE("plane phase moves at p / m") {
  const double p = 1.7, m = 2.0;
  auto snap = closed_form(1, 1, 0, [&](auto x, auto v, auto g) { v[0] = packet(x[0], 0, 3.0, p, g.empty() ? nullptr : &g[0]); });
  GuidanceLaw law = unit_law(1);
  law.masses = {m};
  for (double x : {-4.0, 0.0, 2.0}) CHECK(vel(*snap, law, {x})[0] == doctest::Approx(p / m).epsilon(1e-14));
}

TEST_CASE("spreading Gaussian velocity matches the phase gradient") {
  const double s0 = 1.0;
  for (double t : {0.0, 0.5, 2.0}) {
    auto snap = closed_form(1, 1, t, [&](auto x, auto v, auto g) { v[0] = spreading(x[0], t, s0, g.empty() ? nullptr : &g[0]); });
    for (double x : {-2.0, 0.3, 1.5}) {
      double v = vel(*snap, unit_law(1), {x})[0];
      double h = 1e-5;
      double fd = (std::arg(spreading(x + h, t, s0, nullptr)) - std::arg(spreading(x - h, t, s0, nullptr))) / (2 * h);
      CHECK(v == doctest::Approx(fd).epsilon(1e-8));
      CHECK(v == doctest::Approx(x * t / (t * t + 4 * std::pow(s0, 4))).epsilon(1e-12));
    }
  }
}

TEST_CASE("Pauli velocity") {
  auto real_spinor = closed_form(1, 2, 0, [](auto x, auto v, auto g) {
    v[0] = 0.6 * phi0(x[0]);
    v[1] = 0.8 * phi0(x[0] - 0.5);
    if (!g.empty()) {
      g[0] = -x[0] * v[0];
      g[1] = -(x[0] - 0.5) * v[1];
    }
  });
  CHECK(vel(*real_spinor, unit_law(1), {0.4})[0] == 0.0);

  const double p = 0.9;
  auto up = closed_form(1, 2, 0, [&](auto x, auto v, auto g) {
    cplx d;
    v[0] = packet(x[0], 0, 2.0, p, &d);
    v[1] = 0.0;
    if (!g.empty()) {
      g[0] = d;
      g[1] = 0.0;
    }
  });
  std::vector<double> x = {0.7}, v(1);
  velocity_pauli(*up, unit_law(1), {}, x, v);
  CHECK(v[0] == doctest::Approx(p).epsilon(1e-14));

  GuidanceLaw law = unit_law(3);
  law.masses = {2.0, 2.0, 2.0};
  law.charge_over_c = 0.5;
  law.vector_potential = VectorField({ConstantVector{{0.3, -1.0, 0.2}}});
  auto packet3 = closed_form(3, 2, 0, [&](auto q, auto val, auto g) {
    cplx d[3], f[3];
    for (int i = 0; i < 3; ++i) f[i] = packet(q[i], 0.1 * i, 1.0, 0.4 * i, &d[i]);
    val[0] = 0.6 * f[0] * f[1] * f[2];
    val[1] = cplx(0, 0.8) * f[0] * f[1] * f[2];
    if (!g.empty()) {
      for (int c = 0; c < 2; ++c) {
        cplx w = c == 0 ? cplx(0.6) : cplx(0, 0.8);
        g[c * 3 + 0] = w * d[0] * f[1] * f[2];
        g[c * 3 + 1] = w * f[0] * d[1] * f[2];
        g[c * 3 + 2] = w * f[0] * f[1] * d[2];
      }
    }
  }, 8.0);
  GuidanceLaw free = law;
  free.charge_over_c = 0.0;
  std::vector<double> q = {0.2, -0.4, 1.1}, va(3), vb(3);
  velocity_pauli(*packet3, law, {}, q, va);
  velocity_pauli(*packet3, free, {}, q, vb);
  const double a[3] = {0.3, -1.0, 0.2};
  for (int i = 0; i < 3; ++i) CHECK(va[i] == doctest::Approx(vb[i] - 0.5 * a[i] / 2.0).epsilon(1e-14));
}

TEST_CASE("Pauli and particle velocities agree for one component") {
  auto snap = closed_form(1, 1, 0.7, [](auto x, auto v, auto g) { v[0] = spreading(x[0] - 0.2, 0.7, 0.8, g.empty() ? nullptr : &g[0]); });
  std::vector<double> va(1), vb(1);
  for (double x = -3; x <= 3; x += 0.25) {
    std::vector<double> q = {x};
    velocity_pauli(*snap, unit_law(1), {}, q, va);
    velocity_particles(*snap, unit_law(1), {}, q, vb);
    CHECK(std::abs(va[0] - vb[0]) <= 1e-12);
  }
}

TEST_CASE("field beable velocities") {
  auto s = testing::scenario_from(R"(
name = c
[model]
kind = field_mode
wavevectors = [(0.0, 0.0, 1.0)]
polarizations = [1]
[initial]
state = coherent(alpha = [(1.0, 0.6), (0.0, -0.4)])
[domain]
solver = fock
nmax = [30, 20]
[time]
dt = 0.1
t_final = 1.0
)");
  FockBasis basis(s.nmax, 1);
  auto coh = FockWavefunction::from_terms(basis, s.model.frequencies, s.initial_state.expand(s.state_context()));
  FockSnapshot snap(coh);
  // d<q>/dt = sqrt(2) Im(alpha) for unit mass and omega = 1.
  const double expected[2] = {std::sqrt(2.0) * 0.6, std::sqrt(2.0) * -0.4};
  for (auto q : {std::vector<double>{0.0, 0.0}, {1.4, -0.5}, {2.5, 0.7}}) {
    std::vector<double> v(2);
    velocity_field_beables(snap, {}, q, v);
    CHECK(v[0] == doctest::Approx(expected[0]).epsilon(1e-10));
    CHECK(v[1] == doctest::Approx(expected[1]).epsilon(1e-10));
  }
  FockWavefunction vac(basis, s.model.frequencies);
  vac.amplitudes()[0] = 1.0;
  FockSnapshot vs(vac);
  std::vector<double> q = {0.3, -1.2}, v(2);
  velocity_field_beables(vs, {}, q, v);
  CHECK(v[0] == 0.0);
  CHECK(v[1] == 0.0);
}

TEST_CASE("inside one of two disjoint branches the velocity is that branch's") {
  const double c1 = 0.6, c2 = 0.8;
  auto full = closed_form(1, 1, 0, [&](auto x, auto v, auto g) {
    cplx d1, d2;
    v[0] = c1 * packet(x[0], -10, 0.5, 1.0, &d1) + c2 * packet(x[0], 10, 0.5, -2.0, &d2);
    if (!g.empty()) g[0] = c1 * d1 + c2 * d2;
  });
  auto one = closed_form(1, 1, 0, [&](auto x, auto v, auto g) { v[0] = packet(x[0], -10, 0.5, 1.0, g.empty() ? nullptr : &g[0]); });
  auto two = closed_form(1, 1, 0, [&](auto x, auto v, auto g) { v[0] = packet(x[0], 10, 0.5, -2.0, g.empty() ? nullptr : &g[0]); });
  for (double x = -11.5; x <= -8.5; x += 0.25) CHECK(std::abs(vel(*full, unit_law(1), {x})[0] - vel(*one, unit_law(1), {x})[0]) <= 1e-10);
  for (double x = 8.5; x <= 11.5; x += 0.25) CHECK(std::abs(vel(*full, unit_law(1), {x})[0] - vel(*two, unit_law(1), {x})[0]) <= 1e-10);
}

TEST_CASE("node policy") {
  auto first = closed_form(1, 1, 0, [](auto x, auto v, auto g) {
    v[0] = cplx(std::sqrt(2.0) * x[0] * phi0(x[0]), 1e-9 * phi0(x[0]));
    if (!g.empty()) g[0] = cplx(std::sqrt(2.0) * (1 - x[0] * x[0]) * phi0(x[0]), -1e-9 * x[0] * phi0(x[0]));
  });
  NodeSettings node;
  node.v_max = 3.0;
  std::vector<double> x = {0.0}, v(1);
  auto r = velocity(*first, unit_law(1), node, x, v);
  CHECK(r.node);
  CHECK(std::abs(v[0]) <= 3.0);
  x = {1.0};
  r = velocity(*first, unit_law(1), node, x, v);
  CHECK_FALSE(r.node);

  auto zero = closed_form(1, 1, 0, [](auto, auto v, auto g) {
    v[0] = 0.0;
    if (!g.empty()) g[0] = 0.0;
  });
  r = velocity(*zero, unit_law(1), node, x, v);
  CHECK(r.node);
  CHECK(v[0] == 0.0);
}

TEST_CASE("free Gaussian trajectories scale with the width") {
  const double s0 = 1.0;
  SnapshotSource source = [&](double t) {
    return closed_form(1, 1, t, [=](auto x, auto v, auto g) { v[0] = spreading(x[0], t, s0, g.empty() ? nullptr : &g[0]); }, 40.0);
  };
  for (double x0 : {-2.0, -0.3, 0.8, 2.4}) {
    std::vector<double> q0 = {x0};
    auto tr = integrate_trajectory(q0, source, 2.0, 0.01, unit_law(1), {});
    REQUIRE(tr.times.size() == 201);
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      double t = tr.times[i];
      double oracle = x0 * std::sqrt(1 + std::pow(t / (2 * s0 * s0), 2));
      CHECK(std::abs(tr.points[i][0] - oracle) <= 1e-4 * std::abs(oracle));
    }
    CHECK_FALSE(tr.exited);
    CHECK(tr.node_events.empty());
  }
}

TEST_CASE("RK4 endpoint changes shrink sixteenfold when dt halves") {
  // (phi0 e^{-it/2} + 0.3 phi1 e^{-3it/2}): node-free for t in [0, 1].
  SnapshotSource source = [](double t) {
    return closed_form(1, 1, t, [=](auto x, auto v, auto g) {
      double p0 = phi0(x[0]);
      cplx a = std::exp(cplx(0, -0.5 * t)), b = 0.3 * std::exp(cplx(0, -1.5 * t));
      v[0] = a * p0 + b * std::sqrt(2.0) * x[0] * p0;
      if (!g.empty()) g[0] = -x[0] * a * p0 + b * std::sqrt(2.0) * (1 - x[0] * x[0]) * p0;
    });
  };
  std::vector<double> ends;
  for (double dt : {0.2, 0.1, 0.05}) {
    std::vector<double> q0 = {0.4};
    ends.push_back(integrate_trajectory(q0, source, 1.0, dt, unit_law(1), {}).points.back()[0]);
  }
  double first = std::abs(ends[1] - ends[0]), second = std::abs(ends[2] - ends[1]);
  CAPTURE(first);
  CAPTURE(second);
  CHECK(second <= first / 16);
}

TEST_CASE("leaving the domain freezes the trajectory") {
  auto snap = closed_form(1, 1, 0, [](auto x, auto v, auto g) { v[0] = packet(x[0], 0, 5.0, 50.0, g.empty() ? nullptr : &g[0]); }, 5.0);
  std::vector<double> x = {4.9};
  auto out = rk4_step(x, 0.1, *snap, *snap, *snap, unit_law(1), {});
  CHECK(out.exited);
  CHECK(x[0] == 4.9);
  CHECK_THROWS_AS(integrate_trajectory(std::vector<double>{9.0}, [&](double) { return snap; }, 1.0, 0.1, unit_law(1), {}),
                  DomainError);
}
