#include "pilotwave/beables.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "json.hpp"
#include "pilotwave/io.hpp"

namespace pilotwave {

namespace {

const double kFieldNorm = std::sqrt(2.0) * std::pow(2.0 * kPi, -1.5);

void require_quadratures(const ModeBasis& basis, std::span<const double> q) {
  if (q.size() != basis.quadrature_count()) {
    throw StructuralError(
        fmt::format("configuration has {} coordinates, basis has {} quadratures", q.size(), basis.quadrature_count()));
  }
}

GridLayout vector_layout(const Lattice& lattice) { return GridLayout(lattice.axes, 3); }

std::vector<cplx> spectrum(const Fft& fft, std::span<const Vec3> field) {
  std::vector<cplx> data(field.size() * 3);
  for (std::size_t p = 0; p < field.size(); ++p) {
    for (std::size_t c = 0; c < 3; ++c) data[3 * p + c] = field[p][c];
  }
  fft.forward(data);
  return data;
}

// Spectral derivative factors i k_d with the Nyquist entry zeroed.
std::vector<std::vector<double>> odd_wavenumbers(const GridLayout& layout) {
  std::vector<std::vector<double>> ks(3);
  for (std::size_t d = 0; d < 3; ++d) {
    ks[d] = layout.wavenumbers(d);
    std::size_t n = layout.axes()[d].points;
    if (n % 2 == 0) ks[d][n / 2] = 0.0;
  }
  return ks;
}

}  // namespace

std::size_t Lattice::points() const {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.points;
  return n;
}

Vec3 Lattice::point(std::size_t flat) const {
  Vec3 x{};
  for (std::size_t d = 3; d-- > 0;) {
    x[d] = axes[d].at(flat % axes[d].points);
    flat /= axes[d].points;
  }
  return x;
}

Lattice Lattice::fitted(const ModeBasis& basis, std::size_t n) {
  Lattice lattice;
  for (std::size_t d = 0; d < 3; ++d) {
    std::vector<double> comps;
    for (const auto& m : basis.modes()) {
      if (std::abs(m.k[d]) > 1e-12) comps.push_back(std::abs(m.k[d]));
    }
    double period = 2.0 * kPi;
    if (!comps.empty()) {
      double kmin = *std::min_element(comps.begin(), comps.end());
      double base = 0.0;
      for (int div = 1; div <= 16 && base == 0.0; ++div) {
        double k0 = kmin / div;
        bool ok = std::all_of(comps.begin(), comps.end(), [&](double c) {
          double r = c / k0;
          return std::abs(r - std::round(r)) < 1e-9 * r;
        });
        if (ok) base = k0;
      }
      if (base == 0.0) {
        throw LatticeError(fmt::format("wavevector components along axis {} share no common period", d));
      }
      period = 2.0 * kPi / base;
    }
    lattice.axes.push_back({0.0, period, n});
  }
  check_lattice(basis, lattice);
  return lattice;
}

void check_lattice(const ModeBasis& basis, const Lattice& lattice) {
  if (lattice.axes.size() != 3) throw LatticeError("field lattices are three-dimensional");
  for (std::size_t d = 0; d < 3; ++d) {
    const Axis& a = lattice.axes[d];
    if (a.points < 2 || !(a.max > a.min)) throw LatticeError(fmt::format("degenerate lattice axis {}", d));
    double k0 = 2.0 * kPi / (a.max - a.min);
    double nyquist = k0 * static_cast<double>(a.points) / 2.0;
    for (const auto& m : basis.modes()) {
      double kd = std::abs(m.k[d]);
      double r = kd / k0;
      if (std::abs(r - std::round(r)) > 1e-9 * std::max(1.0, r)) {
        throw LatticeError(fmt::format("wavevector component {} is not a wavenumber of the lattice along axis {}",
                                       m.k[d], d));
      }
      if (kd >= nyquist * (1.0 - 1e-12)) {
        throw LatticeError(fmt::format("wavevector component {} reaches the lattice Nyquist limit {} along axis {}",
                                       m.k[d], nyquist, d));
      }
    }
  }
}

double FieldSnapshot::max_abs() const {
  double m = 0.0;
  for (const auto& v : values) m = std::max({m, std::abs(v[0]), std::abs(v[1]), std::abs(v[2])});
  return m;
}

void FieldSnapshot::write_csv(const std::string& path) const {
  std::string out = fmt::format("# kind={}\n# time={:.17g}\n# basis={}\nx,y,z,Vx,Vy,Vz\n", kind, time, basis_hash);
  for (std::size_t p = 0; p < values.size(); ++p) {
    Vec3 x = lattice.point(p);
    out += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", x[0], x[1], x[2], values[p][0],
                       values[p][1], values[p][2]);
  }
  write_file_atomic(path, out);
}

void FieldSnapshot::write_json(const std::string& path) const {
  nlohmann::json j;
  j["kind"] = kind;
  j["time"] = time;
  j["basis_hash"] = basis_hash;
  for (const auto& a : lattice.axes) j["lattice"].push_back({{"min", a.min}, {"max", a.max}, {"points", a.points}});
  auto& rows = j["rows"] = nlohmann::json::array();
  for (std::size_t p = 0; p < values.size(); ++p) {
    Vec3 x = lattice.point(p);
    rows.push_back({x[0], x[1], x[2], values[p][0], values[p][1], values[p][2]});
  }
  write_file_atomic(path, j.dump(1) + "\n");
}

namespace {

enum class Profile { potential, curl };

FieldSnapshot reconstruct(const ModeBasis& basis, std::span<const double> q, const Lattice& lattice, Profile profile,
                          std::string kind) {
  require_quadratures(basis, q);
  check_lattice(basis, lattice);
  FieldSnapshot out;
  out.kind = std::move(kind);
  out.lattice = lattice;
  out.basis_hash = basis.hash();
  out.values.assign(lattice.points(), Vec3{});
  const auto& modes = basis.modes();
  for (std::size_t p = 0; p < out.values.size(); ++p) {
    Vec3 x = lattice.point(p);
    Vec3 v{};
    for (std::size_t m = 0; m < modes.size(); ++m) {
      double a = q[2 * m], b = q[2 * m + 1];
      if (a == 0.0 && b == 0.0) continue;
      double phase = dot(modes[m].k, x);
      double c = std::cos(phase), s = std::sin(phase);
      if (profile == Profile::potential) {
        double amp = kFieldNorm * (a * c - b * s);
        for (int i = 0; i < 3; ++i) v[i] += amp * modes[m].epsilon[i];
      } else {
        double amp = -kFieldNorm * (a * s + b * c);
        Vec3 ke = cross(modes[m].k, modes[m].epsilon);
        for (int i = 0; i < 3; ++i) v[i] += amp * ke[i];
      }
    }
    out.values[p] = v;
  }
  return out;
}

}  // namespace

FieldSnapshot reconstruct_A(const ModeBasis& basis, std::span<const double> q, const Lattice& lattice) {
  return reconstruct(basis, q, lattice, Profile::potential, "A");
}

FieldSnapshot reconstruct_B(const ModeBasis& basis, std::span<const double> q, const Lattice& lattice) {
  return reconstruct(basis, q, lattice, Profile::curl, "B");
}

FieldSnapshot reconstruct_E_T_from_rates(const ModeBasis& basis, std::span<const double> dq, const Lattice& lattice) {
  std::vector<double> neg(dq.begin(), dq.end());
  for (auto& v : neg) v = -v;
  return reconstruct(basis, neg, lattice, Profile::potential, "E_T");
}

FieldSnapshot reconstruct_E_T(const ModeBasis& basis, const Trajectory& traj, double t, const Lattice& lattice) {
  const auto& ts = traj.times;
  if (ts.size() < 3) throw RangeError("E_T needs at least three trajectory samples");
  double span = ts.back() - ts.front();
  double eps = 1e-9 * std::max(span, 1e-300);
  if (!(t > ts.front() + eps && t < ts.back() - eps)) {
    throw RangeError(fmt::format("E_T at t = {} needs samples on both sides (trajectory covers [{}, {}])", t,
                                 ts.front(), ts.back()));
  }
  const std::size_t dim = traj.points.front().size();
  // Derivative at t of the quadratic through the three samples around it.
  auto it = std::lower_bound(ts.begin(), ts.end(), t);
  auto j = static_cast<std::size_t>(it - ts.begin());
  if (j < ts.size() && j + 1 < ts.size() && ts[j] - t > t - ts[j - 1]) --j;
  j = std::clamp<std::size_t>(j, 1, ts.size() - 2);
  const double t0 = ts[j - 1], t1 = ts[j], t2 = ts[j + 1];
  const double w0 = ((t - t1) + (t - t2)) / ((t0 - t1) * (t0 - t2));
  const double w2 = ((t - t0) + (t - t1)) / ((t2 - t0) * (t2 - t1));
  std::vector<double> dq(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    const double mid = traj.points[j][k];
    dq[k] = w0 * (traj.points[j - 1][k] - mid) + w2 * (traj.points[j + 1][k] - mid);
  }
  FieldSnapshot out = reconstruct_E_T_from_rates(basis, dq, lattice);
  out.time = t;
  return out;
}

std::vector<Vec3> spectral_curl(const Lattice& lattice, std::span<const Vec3> field) {
  GridLayout layout = vector_layout(lattice);
  if (field.size() != layout.points()) throw StructuralError("field does not match the lattice");
  Fft fft(layout);
  auto data = spectrum(fft, field);
  auto ks = odd_wavenumbers(layout);
  std::vector<std::size_t> multi(3);
  const cplx i1(0.0, 1.0);
  for (std::size_t p = 0; p < layout.points(); ++p) {
    layout.multi_index(p, multi);
    double k[3] = {ks[0][multi[0]], ks[1][multi[1]], ks[2][multi[2]]};
    cplx f[3] = {data[3 * p], data[3 * p + 1], data[3 * p + 2]};
    data[3 * p] = i1 * (k[1] * f[2] - k[2] * f[1]);
    data[3 * p + 1] = i1 * (k[2] * f[0] - k[0] * f[2]);
    data[3 * p + 2] = i1 * (k[0] * f[1] - k[1] * f[0]);
  }
  fft.backward(data);
  double scale = 1.0 / static_cast<double>(layout.points());
  std::vector<Vec3> out(layout.points());
  for (std::size_t p = 0; p < out.size(); ++p) {
    for (std::size_t c = 0; c < 3; ++c) out[p][c] = data[3 * p + c].real() * scale;
  }
  return out;
}

std::vector<double> spectral_divergence(const Lattice& lattice, std::span<const Vec3> field) {
  GridLayout layout = vector_layout(lattice);
  if (field.size() != layout.points()) throw StructuralError("field does not match the lattice");
  Fft fft(layout);
  auto data = spectrum(fft, field);
  auto ks = odd_wavenumbers(layout);
  std::vector<std::size_t> multi(3);
  for (std::size_t p = 0; p < layout.points(); ++p) {
    layout.multi_index(p, multi);
    cplx d = cplx(0.0, 1.0) * (ks[0][multi[0]] * data[3 * p] + ks[1][multi[1]] * data[3 * p + 1] +
                               ks[2][multi[2]] * data[3 * p + 2]);
    data[3 * p] = d;
    data[3 * p + 1] = 0.0;
    data[3 * p + 2] = 0.0;
  }
  fft.backward(data);
  double scale = 1.0 / static_cast<double>(layout.points());
  std::vector<double> out(layout.points());
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = data[3 * p].real() * scale;
  return out;
}

LocalExpectation local_expectation(const WaveSnapshot& psi, const OperatorField& op, std::span<const double> q,
                                   const std::vector<Vec3>& points, double density_floor) {
  const std::size_t f = psi.internal_dim();
  std::vector<cplx> values(f);
  psi.evaluate(q, values, {});
  LocalExpectation out;
  for (const auto& c : values) out.density += std::norm(c);
  out.node = out.density == 0.0 || out.density < density_floor * psi.max_density();
  out.values.assign(points.size(), 0.0);
  if (out.density == 0.0) return out;
  Eigen::Map<const Eigen::VectorXcd> v(values.data(), static_cast<Eigen::Index>(f));
  for (std::size_t p = 0; p < points.size(); ++p) {
    Matrix o = op(points[p]);
    if (o.rows() != static_cast<Eigen::Index>(f) || o.cols() != static_cast<Eigen::Index>(f)) {
      throw StructuralError(fmt::format("operator block is {}x{}, expected {}x{}", o.rows(), o.cols(), f, f));
    }
    double scale = std::max(1.0, o.cwiseAbs().maxCoeff());
    if ((o - o.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw StructuralError("operator block is not Hermitian");
    }
    if (o.isDiagonal(0.0) && (o.diagonal().array() == o(0, 0)).all()) {
      out.values[p] = o(0, 0).real();
      continue;
    }
    cplx e = v.dot(o * v) / out.density;
    out.values[p] = e.real();
    out.max_imaginary = std::max(out.max_imaginary, std::abs(e.imag()));
  }
  return out;
}

std::vector<Axis> branch_grid(const WaveSnapshot& full) {
  std::vector<Axis> axes = full.support();
  const std::size_t dim = axes.size();
  if (dim > 3) throw StructuralError("branch integrals support at most three coordinates");
  const std::size_t limit = dim <= 2 ? (std::size_t{1} << 20) : (std::size_t{1} << 18);
  auto total = [&] {
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.points;
    return n;
  };
  while (total() > limit) {
    auto it = std::max_element(axes.begin(), axes.end(), [](const Axis& a, const Axis& b) { return a.points < b.points; });
    std::size_t n = it->points;
    std::size_t factor = 2;
    while (n % factor != 0 && factor < n) ++factor;
    it->points = n / factor;
  }
  return axes;
}

namespace {

double cell_volume(const std::vector<Axis>& axes) {
  double v = 1.0;
  for (const auto& a : axes) v *= a.spacing();
  return v;
}

}  // namespace

BranchAnalysis analyze_branches(const WaveSnapshot& full, const std::vector<SnapshotPtr>& branches) {
  auto axes = branch_grid(full);
  const double dv = cell_volume(axes);
  auto rho = full.tabulate(axes);
  double total = 0.0;
  for (double r : rho) total += r;
  total *= dv;
  const std::size_t b = branches.size();
  std::vector<std::vector<double>> amp(b);
  BranchAnalysis out;
  out.weights.assign(b, 0.0);
  for (std::size_t i = 0; i < b; ++i) {
    amp[i] = branches[i]->tabulate(axes);
    for (auto& r : amp[i]) {
      out.weights[i] += r;
      r = std::sqrt(r);
    }
    out.weights[i] *= dv;
  }
  out.overlaps.assign(b, std::vector<double>(b, 0.0));
  for (std::size_t i = 0; i < b; ++i) {
    out.overlaps[i][i] = 1.0;
    for (std::size_t j = i + 1; j < b; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < rho.size(); ++p) s += amp[i][p] * amp[j][p];
      double w = std::sqrt(out.weights[i] * out.weights[j]);
      double o = w > 0.0 ? s * dv / w : 0.0;
      out.overlaps[i][j] = out.overlaps[j][i] = o;
      out.max_overlap = std::max(out.max_overlap, o);
    }
  }
  double sum = 0.0;
  for (double w : out.weights) sum += w;
  out.residual = total > 0.0 ? std::abs(total - sum) / total : 0.0;
  return out;
}

int branch_membership(const std::vector<SnapshotPtr>& branches, std::span<const double> x) {
  int best = -1;
  double best_rho = 0.0;
  for (std::size_t i = 0; i < branches.size(); ++i) {
    if (!branches[i]->contains(x)) continue;
    double r = branches[i]->density(x);
    if (r > best_rho) {
      best_rho = r;
      best = static_cast<int>(i);
    }
  }
  return best;
}

SuperlevelBranches::SuperlevelBranches(const WaveSnapshot& full, double level) : axes_(branch_grid(full)) {
  const std::size_t dim = axes_.size();
  auto rho = full.tabulate(axes_);
  const double dv = cell_volume(axes_);
  double peak = *std::max_element(rho.begin(), rho.end());
  double total = 0.0;
  for (double r : rho) total += r;
  total *= dv;
  labels_.assign(rho.size(), -1);
  std::vector<std::size_t> strides(dim, 1);
  for (std::size_t d = dim; d-- > 1;) strides[d - 1] = strides[d] * axes_[d].points;
  std::vector<std::size_t> stack;
  int next = 0;
  for (std::size_t seed = 0; seed < rho.size(); ++seed) {
    if (labels_[seed] >= 0 || rho[seed] < level * peak || rho[seed] == 0.0) continue;
    double weight = 0.0;
    labels_[seed] = next;
    stack.push_back(seed);
    while (!stack.empty()) {
      std::size_t p = stack.back();
      stack.pop_back();
      weight += rho[p];
      for (std::size_t d = 0; d < dim; ++d) {
        std::size_t i = (p / strides[d]) % axes_[d].points;
        for (int dir : {-1, 1}) {
          if ((dir < 0 && i == 0) || (dir > 0 && i + 1 == axes_[d].points)) continue;
          std::size_t nb = dir < 0 ? p - strides[d] : p + strides[d];
          if (labels_[nb] < 0 && rho[nb] >= level * peak && rho[nb] > 0.0) {
            labels_[nb] = next;
            stack.push_back(nb);
          }
        }
      }
    }
    analysis_.weights.push_back(weight * dv);
    ++next;
  }
  const std::size_t b = analysis_.weights.size();
  analysis_.overlaps.assign(b, std::vector<double>(b, 0.0));
  for (std::size_t i = 0; i < b; ++i) analysis_.overlaps[i][i] = 1.0;
  double sum = 0.0;
  for (double w : analysis_.weights) sum += w;
  analysis_.residual = total > 0.0 ? std::abs(total - sum) / total : 0.0;
}

int SuperlevelBranches::membership(std::span<const double> x) const {
  std::size_t flat = 0;
  for (std::size_t d = 0; d < axes_.size(); ++d) {
    const Axis& a = axes_[d];
    double r = std::round((x[d] - a.min) / a.spacing());
    if (r < 0.0 || r >= static_cast<double>(a.points)) return -1;
    flat = flat * a.points + static_cast<std::size_t>(r);
  }
  return labels_[flat];
}

}  // namespace pilotwave
