#include "pilotwave/snapshot.hpp"

#include <cmath>

#include <fmt/format.h>

#include "pilotwave/hermite.hpp"

namespace pilotwave {

namespace {

std::size_t grid_points(const std::vector<Axis>& axes) {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.points;
  return n;
}

void grid_coordinates(const std::vector<Axis>& axes, std::size_t flat, std::span<double> x) {
  for (std::size_t d = axes.size(); d-- > 0;) {
    x[d] = axes[d].at(flat % axes[d].points);
    flat /= axes[d].points;
  }
}

}  // namespace

double WaveSnapshot::density(std::span<const double> x) const {
  std::vector<cplx> v(internal_dim());
  evaluate(x, v, {});
  double r = 0.0;
  for (const auto& c : v) r += std::norm(c);
  return r;
}

std::vector<double> WaveSnapshot::tabulate(const std::vector<Axis>& axes) const {
  if (axes.size() != dim()) throw StructuralError("tabulation axes do not match the configuration space");
  std::size_t n = grid_points(axes);
  std::vector<double> out(n);
  std::vector<double> x(dim());
  for (std::size_t p = 0; p < n; ++p) {
    grid_coordinates(axes, p, x);
    out[p] = contains(x) ? density(x) : 0.0;
  }
  return out;
}

// ---------------------------------------------------------------------------

GridSnapshot::GridSnapshot(const WavefunctionGrid& psi, const Fft& fft) : layout_(psi.layout()), time_(psi.time()) {
  const std::size_t dim = layout_.dim();
  const std::size_t f = layout_.internal_dim();
  const std::size_t n = layout_.points();
  // Derivative orders in {0,1,2}^dim with at most one 2.
  std::size_t combos = 1;
  for (std::size_t d = 0; d < dim; ++d) combos *= 3;
  for (std::size_t code = 0; code < combos; ++code) {
    std::vector<int> ord(dim);
    std::size_t c = code;
    int twos = 0;
    for (std::size_t d = 0; d < dim; ++d) {
      ord[d] = static_cast<int>(c % 3);
      c /= 3;
      twos += ord[d] == 2;
    }
    lookup_.push_back(twos <= 1 ? static_cast<int>(orders_.size()) : -1);
    if (twos <= 1) orders_.push_back(ord);
  }
  std::vector<cplx> spectrum(psi.amplitudes());
  fft.forward(spectrum);
  std::vector<std::vector<double>> ks(dim);
  for (std::size_t d = 0; d < dim; ++d) ks[d] = layout_.wavenumbers(d);
  std::vector<std::size_t> multi(dim);
  derivs_.resize(orders_.size());
  for (std::size_t a = 0; a < orders_.size(); ++a) {
    const auto& ord = orders_[a];
    bool zero = std::all_of(ord.begin(), ord.end(), [](int o) { return o == 0; });
    if (zero) {
      derivs_[a] = psi.amplitudes();
      continue;
    }
    std::vector<cplx> work(spectrum.size());
    for (std::size_t p = 0; p < n; ++p) {
      layout_.multi_index(p, multi);
      cplx factor = 1.0 / static_cast<double>(n);
      for (std::size_t d = 0; d < dim; ++d) {
        double k = ks[d][multi[d]];
        // Odd derivatives drop the unpaired Nyquist mode.
        bool nyquist = layout_.axes()[d].points % 2 == 0 && multi[d] == layout_.axes()[d].points / 2;
        if (ord[d] == 1) factor *= nyquist ? cplx(0.0) : cplx(0.0, k);
        if (ord[d] == 2) factor *= -k * k;
      }
      for (std::size_t c = 0; c < f; ++c) work[p * f + c] = spectrum[p * f + c] * factor;
    }
    fft.backward(work);
    derivs_[a] = std::move(work);
  }
  auto rho = grid_density();
  for (double r : rho) max_density_ = std::max(max_density_, r);
  marginals_.resize(dim);
  double cell = layout_.cell_volume();
  for (std::size_t d = 0; d < dim; ++d) {
    marginals_[d].assign(layout_.axes()[d].points, 0.0);
    double w = cell / layout_.axes()[d].spacing();
    for (std::size_t p = 0; p < n; ++p) {
      layout_.multi_index(p, multi);
      marginals_[d][multi[d]] += rho[p] * w;
    }
  }
}

std::size_t GridSnapshot::array_index(std::span<const int> orders) const {
  std::size_t code = 0;
  for (std::size_t d = orders.size(); d-- > 0;) code = code * 3 + static_cast<std::size_t>(orders[d]);
  int a = lookup_[code];
  if (a < 0) throw StructuralError("derivative order not tabulated");
  return static_cast<std::size_t>(a);
}

std::span<const cplx> GridSnapshot::derivative(std::size_t j) const {
  std::vector<int> ord(layout_.dim(), 0);
  ord[j] = 1;
  return derivs_[array_index(ord)];
}

std::vector<double> GridSnapshot::grid_density() const {
  const std::size_t f = layout_.internal_dim();
  std::vector<double> rho(layout_.points());
  const auto& a = derivs_[0];
  for (std::size_t i = 0; i < a.size(); ++i) rho[i / f] += std::norm(a[i]);
  return rho;
}

bool GridSnapshot::contains(std::span<const double> x) const {
  if (x.size() != layout_.dim()) return false;
  for (std::size_t d = 0; d < x.size(); ++d) {
    const Axis& a = layout_.axes()[d];
    if (!(x[d] >= a.min && x[d] < a.max)) return false;
  }
  return true;
}

void GridSnapshot::evaluate(std::span<const double> x, std::span<cplx> values, std::span<cplx> gradients) const {
  const std::size_t dim = layout_.dim();
  const std::size_t f = layout_.internal_dim();
  if (!contains(x)) {
    throw DomainError(fmt::format("configuration outside the grid domain (coordinate 0 = {})", x.empty() ? 0.0 : x[0]));
  }
  // Cubic Hermite weights per axis: w[d][corner][order].
  double w[3][2][2];
  std::size_t idx[3][2];
  for (std::size_t d = 0; d < dim; ++d) {
    const Axis& a = layout_.axes()[d];
    double h = a.spacing();
    double u = (x[d] - a.min) / h;
    auto i0 = static_cast<std::size_t>(std::floor(u));
    if (i0 >= a.points) i0 = a.points - 1;
    double s = u - static_cast<double>(i0);
    double s2 = s * s, s3 = s2 * s;
    w[d][0][0] = 2 * s3 - 3 * s2 + 1;
    w[d][0][1] = (s3 - 2 * s2 + s) * h;
    w[d][1][0] = -2 * s3 + 3 * s2;
    w[d][1][1] = (s3 - s2) * h;
    idx[d][0] = i0 * layout_.stride(d);
    idx[d][1] = ((i0 + 1) % a.points) * layout_.stride(d);
  }
  const std::size_t corners = std::size_t{1} << dim;
  const bool grad = !gradients.empty();
  std::fill(values.begin(), values.end(), cplx{});
  if (grad) std::fill(gradients.begin(), gradients.end(), cplx{});
  int ord[3];
  for (std::size_t alpha = 0; alpha < corners; ++alpha) {
    for (std::size_t d = 0; d < dim; ++d) ord[d] = static_cast<int>((alpha >> d) & 1);
    const auto& base = derivs_[array_index({ord, dim})];
    const std::vector<cplx>* shifted[3] = {nullptr, nullptr, nullptr};
    if (grad) {
      for (std::size_t j = 0; j < dim; ++j) {
        ++ord[j];
        shifted[j] = &derivs_[array_index({ord, dim})];
        --ord[j];
      }
    }
    for (std::size_t c = 0; c < corners; ++c) {
      double weight = 1.0;
      std::size_t point = 0;
      for (std::size_t d = 0; d < dim; ++d) {
        std::size_t cd = (c >> d) & 1;
        weight *= w[d][cd][ord[d]];
        point += idx[d][cd];
      }
      for (std::size_t k = 0; k < f; ++k) {
        values[k] += weight * base[point * f + k];
        if (grad) {
          for (std::size_t j = 0; j < dim; ++j) gradients[k * dim + j] += weight * (*shifted[j])[point * f + k];
        }
      }
    }
  }
}

std::vector<double> GridSnapshot::tabulate(const std::vector<Axis>& axes) const {
  if (axes == layout_.axes()) return grid_density();
  return WaveSnapshot::tabulate(axes);
}

double GridSnapshot::marginal(std::size_t j, double q) const {
  const Axis& a = layout_.axes()[j];
  if (!(q >= a.min && q < a.max)) return 0.0;
  double u = (q - a.min) / a.spacing();
  auto i0 = static_cast<std::size_t>(std::floor(u));
  if (i0 >= a.points) i0 = a.points - 1;
  double s = u - static_cast<double>(i0);
  return (1.0 - s) * marginals_[j][i0] + s * marginals_[j][(i0 + 1) % a.points];
}

// ---------------------------------------------------------------------------

std::vector<Axis> fock_support(const FockWavefunction& psi) {
  const std::size_t m = psi.basis().modes();
  std::size_t points = m == 1 ? 512 : (m == 2 ? 256 : 32);
  std::vector<Axis> axes;
  for (std::size_t j = 0; j < m; ++j) {
    double mu = psi.mean(j);
    double sd = std::sqrt(psi.variance(j));
    double limit = kHermiteRange / std::sqrt(psi.frequencies()[j]);
    double lo = std::max(mu - 8.0 * sd, -limit);
    double hi = std::min(mu + 8.0 * sd, limit);
    axes.push_back({lo, hi, points});
  }
  return axes;
}

FockSnapshot::FockSnapshot(FockWavefunction psi, std::vector<Axis> tabulation)
    : psi_(std::move(psi)), support_(tabulation.empty() ? fock_support(psi_) : std::move(tabulation)) {
  const std::size_t m = psi_.basis().modes();
  if (m <= 2) {
    // Coarse scan of the support for the density maximum.
    std::vector<Axis> coarse = support_;
    for (auto& a : coarse) a.points = 64;
    for (double r : WaveSnapshot::tabulate(coarse)) max_density_ = std::max(max_density_, r);
  } else {
    std::vector<double> mu(m);
    for (std::size_t j = 0; j < m; ++j) mu[j] = psi_.mean(j);
    max_density_ = psi_.density(mu);
  }
}

bool FockSnapshot::contains(std::span<const double> x) const {
  if (x.size() != dim()) return false;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!(std::abs(x[j]) * std::sqrt(psi_.frequencies()[j]) <= kHermiteRange)) return false;
  }
  return true;
}

void FockSnapshot::evaluate(std::span<const double> x, std::span<cplx> values, std::span<cplx> gradients) const {
  try {
    psi_.evaluate(x, values, gradients);
  } catch (const RangeError& e) {
    throw DomainError(e.what());
  }
}

// ---------------------------------------------------------------------------

FunctionSnapshot::FunctionSnapshot(std::size_t dim, std::size_t internal_dim, double time, std::vector<Axis> support,
                                   Evaluator f)
    : dim_(dim), internal_dim_(internal_dim), time_(time), support_(std::move(support)), f_(std::move(f)) {
  std::vector<Axis> coarse = support_;
  for (auto& a : coarse) a.points = std::min<std::size_t>(a.points, dim_ <= 2 ? 256 : 16);
  for (double r : WaveSnapshot::tabulate(coarse)) max_density_ = std::max(max_density_, r);
}

bool FunctionSnapshot::contains(std::span<const double> x) const {
  if (x.size() != dim_) return false;
  for (std::size_t d = 0; d < dim_; ++d) {
    if (!(x[d] >= support_[d].min && x[d] < support_[d].max)) return false;
  }
  return true;
}

void FunctionSnapshot::evaluate(std::span<const double> x, std::span<cplx> values, std::span<cplx> gradients) const {
  if (!contains(x)) throw DomainError("configuration outside the snapshot domain");
  f_(x, values, gradients);
}

double FunctionSnapshot::marginal(std::size_t j, double q) const {
  std::vector<Axis> others;
  for (std::size_t d = 0; d < dim_; ++d) {
    if (d != j) others.push_back(support_[d]);
  }
  std::size_t n = grid_points(others);
  double cell = 1.0;
  for (const auto& a : others) cell *= a.spacing();
  std::vector<double> y(others.size()), x(dim_);
  double s = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    grid_coordinates(others, p, y);
    for (std::size_t d = 0, k = 0; d < dim_; ++d) x[d] = d == j ? q : y[k++];
    if (contains(x)) s += density(x);
  }
  return s * cell;
}

}  // namespace pilotwave
