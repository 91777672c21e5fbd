#include "pilotwave/guidance.hpp"

#include <cmath>

#include <fmt/format.h>

namespace pilotwave {

GuidanceLaw GuidanceLaw::from(const HamiltonianSpec& spec) {
  GuidanceLaw law;
  law.hbar = spec.hbar;
  law.masses = spec.masses;
  if (spec.kind == ModelKind::pauli) {
    law.charge_over_c = spec.charge / spec.light_speed;
    law.vector_potential = spec.vector_potential;
  }
  return law;
}

VelocityResult velocity_from_values(const GuidanceLaw& law, std::span<const double> x, std::span<const cplx> values,
                                    std::span<const cplx> gradients, std::span<double> v) {
  const std::size_t dim = x.size();
  double rho = 0.0;
  for (const auto& c : values) rho += std::norm(c);
  VelocityResult r{rho, false};
  if (rho == 0.0) {
    std::fill(v.begin(), v.end(), 0.0);
    r.node = true;
    return r;
  }
  Vec3 a{};
  if (law.charge_over_c != 0.0 && !law.vector_potential.empty()) a = law.vector_potential(x);
  for (std::size_t j = 0; j < dim; ++j) {
    double im = 0.0;
    for (std::size_t f = 0; f < values.size(); ++f) im += (std::conj(values[f]) * gradients[f * dim + j]).imag();
    double m = law.masses[j];
    v[j] = law.hbar * im / (m * rho) - (j < 3 ? law.charge_over_c * a[j] / m : 0.0);
  }
  return r;
}

VelocityResult velocity(const WaveSnapshot& psi, const GuidanceLaw& law, const NodeSettings& node,
                        std::span<const double> x, std::span<double> v) {
  const std::size_t dim = psi.dim();
  const std::size_t f = psi.internal_dim();
  cplx vals[8];
  cplx grads[64];
  std::vector<cplx> hv, hg;
  std::span<cplx> values(vals, f), gradients(grads, f * dim);
  if (f > 8 || f * dim > 64) {
    hv.resize(f);
    hg.resize(f * dim);
    values = hv;
    gradients = hg;
  }
  psi.evaluate(x, values, gradients);
  VelocityResult r = velocity_from_values(law, x, values, gradients, v);
  if (r.node) return r;
  if (r.density < node.density_floor * psi.max_density()) {
    r.node = true;
    double speed = 0.0;
    for (std::size_t j = 0; j < dim; ++j) speed += v[j] * v[j];
    speed = std::sqrt(speed);
    if (speed > node.v_max) {
      for (std::size_t j = 0; j < dim; ++j) v[j] *= node.v_max / speed;
    }
  }
  return r;
}

double density(const WaveSnapshot& psi, std::span<const double> x) { return psi.density(x); }

VelocityResult velocity_particles(const WaveSnapshot& psi, const GuidanceLaw& law, const NodeSettings& node,
                                  std::span<const double> x, std::span<double> v) {
  if (psi.internal_dim() != 1) throw StructuralError("particle guidance needs a scalar wavefunction");
  GuidanceLaw scalar = law;
  scalar.charge_over_c = 0.0;
  return velocity(psi, scalar, node, x, v);
}

VelocityResult velocity_pauli(const WaveSnapshot& psi, const GuidanceLaw& law, const NodeSettings& node,
                              std::span<const double> x, std::span<double> v) {
  return velocity(psi, law, node, x, v);
}

VelocityResult velocity_field_beables(const WaveSnapshot& psi, const NodeSettings& node, std::span<const double> x,
                                      std::span<double> v) {
  GuidanceLaw law;
  law.masses.assign(psi.dim(), 1.0);
  return velocity(psi, law, node, x, v);
}

StepOutcome rk4_step(std::span<double> x, double h, const WaveSnapshot& s0, const WaveSnapshot& half,
                     const WaveSnapshot& s1, const GuidanceLaw& law, const NodeSettings& node, std::span<double> k1) {
  const std::size_t dim = x.size();
  double buf[5][8];
  std::span<double> k[4] = {{buf[0], dim}, {buf[1], dim}, {buf[2], dim}, {buf[3], dim}};
  std::span<double> y(buf[4], dim);
  StepOutcome out;
  auto stage = [&](const WaveSnapshot& s, std::span<const double> at, std::span<double> dst) {
    if (!s.contains(at)) {
      out.exited = true;
      return false;
    }
    VelocityResult r = velocity(s, law, node, at, dst);
    if (r.node) {
      if (!out.node || r.density < out.node_density) out.node_density = r.density;
      out.node = true;
    }
    return true;
  };
  if (!stage(s0, x, k[0])) return out;
  if (!k1.empty()) std::copy(k[0].begin(), k[0].end(), k1.begin());
  for (std::size_t j = 0; j < dim; ++j) y[j] = x[j] + 0.5 * h * k[0][j];
  if (!stage(half, y, k[1])) return out;
  for (std::size_t j = 0; j < dim; ++j) y[j] = x[j] + 0.5 * h * k[1][j];
  if (!stage(half, y, k[2])) return out;
  for (std::size_t j = 0; j < dim; ++j) y[j] = x[j] + h * k[2][j];
  if (!stage(s1, y, k[3])) return out;
  for (std::size_t j = 0; j < dim; ++j) {
    double next = x[j] + h / 6.0 * (k[0][j] + 2.0 * k[1][j] + 2.0 * k[2][j] + k[3][j]);
    y[j] = next;
  }
  if (!s1.contains(y)) {
    out.exited = true;
    return out;
  }
  std::copy(y.begin(), y.end(), x.begin());
  return out;
}

Trajectory integrate_trajectory(std::span<const double> q0, const SnapshotSource& source, double t_final, double dt,
                                const GuidanceLaw& law, const NodeSettings& node) {
  if (!(dt > 0.0)) throw StabilityError("trajectory step must be positive");
  if (q0.size() > 8) throw StructuralError("trajectories support at most 8 coordinates");
  auto steps = static_cast<std::size_t>(std::llround(t_final / dt));
  Trajectory tr;
  std::vector<double> x(q0.begin(), q0.end());
  tr.times.push_back(0.0);
  tr.points.push_back(x);
  tr.node_flags.push_back(false);
  SnapshotPtr s0 = source(0.0);
  if (!s0->contains(x)) throw DomainError("starting configuration outside the domain");
  for (std::size_t n = 0; n < steps; ++n) {
    double t = static_cast<double>(n) * dt;
    SnapshotPtr half = source(t + 0.5 * dt);
    SnapshotPtr s1 = source(t + dt);
    StepOutcome o;
    if (!tr.exited) {
      o = rk4_step(x, dt, *s0, *half, *s1, law, node);
      if (o.exited) {
        tr.exited = true;
        tr.exit_time = t;
      }
      if (o.node) tr.node_events.push_back({t, o.node_density});
    }
    tr.times.push_back(t + dt);
    tr.points.push_back(x);
    tr.node_flags.push_back(o.node);
    s0 = s1;
  }
  return tr;
}

double continuity_residual(const GridHamiltonian& h, const WavefunctionGrid& before, const WavefunctionGrid& middle,
                           const WavefunctionGrid& after, double dt) {
  const GridLayout& layout = middle.layout();
  const std::size_t dim = layout.dim();
  const std::size_t f = layout.internal_dim();
  const std::size_t n = layout.points();
  const HamiltonianSpec& spec = h.spec();
  const double q = spec.kind == ModelKind::pauli ? spec.charge / spec.light_speed : 0.0;
  auto rho_before = before.density();
  auto rho_after = after.density();
  std::vector<double> residual(n);
  for (std::size_t p = 0; p < n; ++p) residual[p] = (rho_after[p] - rho_before[p]) / (2.0 * dt);
  std::vector<std::size_t> multi(dim);
  std::vector<double> x(dim);
  const auto& psi = middle.amplitudes();
  for (std::size_t d = 0; d < dim; ++d) {
    const Axis& axis = layout.axes()[d];
    const double dx = axis.spacing();
    const std::size_t stride = layout.stride(d);
    auto neighbour = [&](std::size_t p, int dir) {
      layout.multi_index(p, multi);
      std::size_t i = multi[d];
      std::size_t j = dir > 0 ? (i + 1) % axis.points : (i + axis.points - 1) % axis.points;
      return p + j * stride - i * stride;
    };
    std::vector<double> current(n);
    for (std::size_t p = 0; p < n; ++p) {
      std::size_t up = neighbour(p, 1), down = neighbour(p, -1);
      double j = 0.0, r = 0.0;
      for (std::size_t c = 0; c < f; ++c) {
        cplx grad = (psi[up * f + c] - psi[down * f + c]) / (2.0 * dx);
        j += (std::conj(psi[p * f + c]) * grad).imag();
        r += std::norm(psi[p * f + c]);
      }
      double a = 0.0;
      if (q != 0.0) {
        layout.coordinates(p, x);
        a = spec.vector_potential_at(x)[d];
      }
      current[p] = (spec.hbar * j - q * a * r) / spec.masses[d];
    }
    for (std::size_t p = 0; p < n; ++p) {
      residual[p] += (current[neighbour(p, 1)] - current[neighbour(p, -1)]) / (2.0 * dx);
    }
  }
  double s = 0.0;
  for (double r : residual) s += r * r;
  return std::sqrt(s * layout.cell_volume());
}

}  // namespace pilotwave
