#include "pilotwave/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace pilotwave {

std::mt19937_64 stream_engine(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x70776176u};
  return std::mt19937_64(seq);
}

namespace {

std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t salt) { return stream_engine(seed, salt)(); }

double clamp_into(double x, const Axis& a) {
  double hi = std::nextafter(a.max, a.min);
  return std::clamp(x, a.min, hi);
}

}  // namespace

TableSampler::TableSampler(const WaveSnapshot& psi) : axes_(psi.support()) {
  auto rho = psi.tabulate(axes_);
  cdf_.resize(rho.size());
  double acc = 0.0;
  for (std::size_t p = 0; p < rho.size(); ++p) {
    acc += rho[p];
    cdf_[p] = acc;
  }
  if (!(acc > 0.0)) throw DomainError("density vanishes on the sampling grid");
}

PointSet TableSampler::draw(std::size_t n, std::uint64_t seed) const {
  const std::size_t dim = axes_.size();
  PointSet out{dim, std::vector<double>(n * dim)};
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto eng = stream_engine(seed, i);
    double u = unit(eng) * cdf_.back();
    auto cell = static_cast<std::size_t>(std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
    cell = std::min(cell, cdf_.size() - 1);
    auto x = out.point(i);
    for (std::size_t d = dim; d-- > 0;) {
      const Axis& a = axes_[d];
      std::size_t idx = cell % a.points;
      cell /= a.points;
      x[d] = clamp_into(a.at(idx) + (unit(eng) - 0.5) * a.spacing(), a);
    }
  }
  return out;
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> halves;
  for (const auto& c : chains) {
    std::size_t h = c.size() / 2;
    if (h < 2) continue;
    halves.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(h));
    halves.emplace_back(c.end() - static_cast<std::ptrdiff_t>(h), c.end());
  }
  if (halves.size() < 2) return std::numeric_limits<double>::infinity();
  const double len = static_cast<double>(halves.front().size());
  std::vector<double> means, vars;
  for (const auto& c : halves) {
    double m = std::accumulate(c.begin(), c.end(), 0.0) / len;
    double v = 0.0;
    for (double x : c) v += (x - m) * (x - m);
    means.push_back(m);
    vars.push_back(v / (len - 1.0));
  }
  const double k = static_cast<double>(halves.size());
  double w = std::accumulate(vars.begin(), vars.end(), 0.0) / k;
  double mm = std::accumulate(means.begin(), means.end(), 0.0) / k;
  double b = 0.0;
  for (double m : means) b += (m - mm) * (m - mm);
  b *= len / (k - 1.0);
  if (w == 0.0) return b == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  double var_plus = (len - 1.0) / len * w + b / len;
  return std::sqrt(var_plus / w);
}

namespace {

PointSet metropolis(const WaveSnapshot& psi, std::size_t n, std::uint64_t seed, SamplingDiagnostics& diag,
                    const SamplingOptions& opt) {
  const std::size_t dim = psi.dim();
  auto support = psi.support();
  std::vector<double> center(dim), step(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    center[d] = 0.5 * (support[d].min + support[d].max);
    step[d] = 2.4 / std::sqrt(static_cast<double>(dim)) * (support[d].max - support[d].min) / 16.0;
  }
  const std::size_t chains = std::max<std::size_t>(opt.chains, 2);
  const std::size_t per_chain = std::max<std::size_t>((n + chains - 1) / chains, 4);
  std::vector<std::vector<std::vector<double>>> traces(dim, std::vector<std::vector<double>>(chains));
  PointSet out{dim, {}};
  out.coords.reserve(chains * per_chain * dim);
  std::size_t accepted = 0, proposed = 0;
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t c = 0; c < chains; ++c) {
    auto eng = stream_engine(seed, c);
    std::vector<double> x(center), y(dim);
    for (std::size_t d = 0; d < dim; ++d) x[d] += 0.25 * step[d] * normal(eng);
    double rx = psi.density(x);
    const std::size_t total = opt.burn_in + per_chain * opt.thinning;
    for (std::size_t it = 0; it < total; ++it) {
      for (std::size_t d = 0; d < dim; ++d) y[d] = x[d] + step[d] * normal(eng);
      double ry = psi.contains(y) ? psi.density(y) : 0.0;
      ++proposed;
      if (ry >= rx || unit(eng) * rx < ry) {
        x.swap(y);
        rx = ry;
        ++accepted;
      }
      if (it >= opt.burn_in && (it - opt.burn_in) % opt.thinning == opt.thinning - 1) {
        out.coords.insert(out.coords.end(), x.begin(), x.end());
        for (std::size_t d = 0; d < dim; ++d) traces[d][c].push_back(x[d]);
      }
    }
  }
  out.coords.resize(n * dim);
  diag.method = "metropolis";
  diag.acceptance = static_cast<double>(accepted) / static_cast<double>(proposed);
  diag.rhat = 1.0;
  for (std::size_t d = 0; d < dim; ++d) diag.rhat = std::max(diag.rhat, split_rhat(traces[d]));
  diag.converged = diag.rhat <= opt.rhat_limit;
  return out;
}

}  // namespace

PointSet sample_equilibrium(const WaveSnapshot& psi, std::size_t n, std::uint64_t seed,
                            SamplingDiagnostics* diagnostics, const SamplingOptions& options) {
  if (n == 0) throw RangeError("sample count must be at least 1");
  SamplingDiagnostics local;
  SamplingDiagnostics& diag = diagnostics ? *diagnostics : local;
  if (psi.dim() <= 2) {
    diag = {"inverse_cdf", 1.0, 1.0, true};
    return TableSampler(psi).draw(n, seed);
  }
  return metropolis(psi, n, seed, diag, options);
}

// ---------------------------------------------------------------------------
// Equivariance

namespace {

constexpr double kGauss3[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
constexpr double kGauss3Weights[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

struct BinAxis {
  double min = 0.0;
  double width = 1.0;
  std::size_t bins = 1;

  // Bin index or -1 when outside [min, min + bins * width).
  long locate(double x) const {
    double r = std::floor((x - min) / width);
    if (r < 0.0 || r >= static_cast<double>(bins)) return -1;
    return static_cast<long>(r);
  }
};

double quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  double pos = p * static_cast<double>(v.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  std::size_t hi = std::min(lo + 1, v.size() - 1);
  double w = pos - static_cast<double>(lo);
  return (1.0 - w) * v[lo] + w * v[hi];
}

BinAxis bin_axis(const std::vector<double>& ref, std::size_t n, std::size_t dim, std::size_t max_bins) {
  double lo = *std::min_element(ref.begin(), ref.end());
  double hi = *std::max_element(ref.begin(), ref.end());
  double iqr = quantile(ref, 0.75) - quantile(ref, 0.25);
  double h = 2.0 * iqr * std::pow(static_cast<double>(n), -1.0 / static_cast<double>(dim + 2));
  BinAxis b;
  b.min = lo;
  if (!(hi > lo) || !(h > 0.0)) {
    b.width = std::max(hi - lo, 1e-12);
    b.bins = 1;
    return b;
  }
  auto bins = static_cast<std::size_t>(std::ceil((hi - lo) / h));
  bins = std::clamp<std::size_t>(bins, 1, max_bins);
  b.bins = bins;
  b.width = (hi - lo) / static_cast<double>(bins) * (1.0 + 1e-12);
  return b;
}

struct Node {
  double x, w;
  std::size_t bin;
};

// Gauss-Legendre nodes covering every bin, with sub-intervals no wider than `resolution`.
std::vector<Node> bin_nodes(const BinAxis& b, double resolution) {
  auto sub = static_cast<std::size_t>(std::ceil(b.width / std::max(resolution, 1e-300)));
  sub = std::clamp<std::size_t>(sub, 1, 256);
  double hs = b.width / static_cast<double>(sub);
  std::vector<Node> nodes;
  nodes.reserve(b.bins * sub * 3);
  for (std::size_t i = 0; i < b.bins; ++i) {
    for (std::size_t s = 0; s < sub; ++s) {
      double mid = b.min + static_cast<double>(i) * b.width + (static_cast<double>(s) + 0.5) * hs;
      for (int g = 0; g < 3; ++g) nodes.push_back({mid + 0.5 * hs * kGauss3[g], 0.5 * hs * kGauss3Weights[g], i});
    }
  }
  return nodes;
}

std::vector<double> axis_values(const PointSet& ps, std::size_t d) {
  std::vector<double> v(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) v[i] = ps.coords[i * ps.dim + d];
  return v;
}

// Histogram over a tensor of bin axes; last entry collects the outside.
std::vector<double> histogram(const PointSet& ps, const std::vector<BinAxis>& axes) {
  std::size_t total = 1;
  for (const auto& a : axes) total *= a.bins;
  std::vector<double> h(total + 1, 0.0);
  const double inc = 1.0 / static_cast<double>(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    std::size_t flat = 0;
    bool inside = true;
    for (std::size_t d = 0; d < axes.size(); ++d) {
      long b = axes[d].locate(ps.coords[i * ps.dim + d]);
      if (b < 0) {
        inside = false;
        break;
      }
      flat = flat * axes[d].bins + static_cast<std::size_t>(b);
    }
    h[inside ? flat : total] += inc;
  }
  return h;
}

double l1(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

// Probability per bin (plus outside) of the full density, D <= 2.
std::vector<double> expected_full(const WaveSnapshot& psi, const std::vector<BinAxis>& axes) {
  auto support = psi.support();
  std::vector<std::vector<Node>> nodes;
  for (std::size_t d = 0; d < axes.size(); ++d) nodes.push_back(bin_nodes(axes[d], support[d].spacing()));
  std::size_t total = 1;
  for (const auto& a : axes) total *= a.bins;
  std::vector<double> p(total + 1, 0.0);
  std::vector<double> x(axes.size());
  if (axes.size() == 1) {
    for (const auto& n : nodes[0]) {
      x[0] = n.x;
      if (psi.contains(x)) p[n.bin] += n.w * psi.density(x);
    }
  } else {
    for (const auto& a : nodes[0]) {
      x[0] = a.x;
      for (const auto& b : nodes[1]) {
        x[1] = b.x;
        if (psi.contains(x)) p[a.bin * axes[1].bins + b.bin] += a.w * b.w * psi.density(x);
      }
    }
  }
  double inside = std::accumulate(p.begin(), p.end() - 1, 0.0);
  p[total] = std::max(0.0, 1.0 - inside);
  return p;
}

std::vector<double> expected_marginal(const WaveSnapshot& psi, std::size_t j, const BinAxis& axis) {
  auto support = psi.support();
  std::vector<double> p(axis.bins + 1, 0.0);
  for (const auto& n : bin_nodes(axis, support[j].spacing())) p[n.bin] += n.w * psi.marginal(j, n.x);
  double inside = std::accumulate(p.begin(), p.end() - 1, 0.0);
  p[axis.bins] = std::max(0.0, 1.0 - inside);
  return p;
}

// Inverse-CDF sampler of one marginal on a fine table.
class MarginalSampler {
 public:
  MarginalSampler(const WaveSnapshot& psi, std::size_t j) {
    Axis a = psi.support()[j];
    a.points = std::max<std::size_t>(a.points, 2048);
    axis_ = a;
    double acc = 0.0;
    for (std::size_t i = 0; i < a.points; ++i) {
      acc += std::max(0.0, psi.marginal(j, a.at(i)));
      cdf_.push_back(acc);
    }
    if (!(acc > 0.0)) throw DomainError("marginal density vanishes");
  }
  std::vector<double> draw(std::size_t n, std::uint64_t seed) const {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto eng = stream_engine(seed, 0);
    std::vector<double> out(n);
    for (auto& v : out) {
      double u = unit(eng) * cdf_.back();
      auto i = static_cast<std::size_t>(std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
      i = std::min(i, cdf_.size() - 1);
      v = axis_.at(i) + (unit(eng) - 0.5) * axis_.spacing();
    }
    return out;
  }

 private:
  Axis axis_;
  std::vector<double> cdf_;
};

Histogram1D project(const std::vector<double>& emp, const std::vector<double>& exp, const std::vector<BinAxis>& axes,
                    std::size_t d) {
  Histogram1D h;
  h.min = axes[d].min;
  h.width = axes[d].width;
  h.empirical.assign(axes[d].bins, 0.0);
  h.expected.assign(axes[d].bins, 0.0);
  std::size_t stride = 1;
  for (std::size_t e = d + 1; e < axes.size(); ++e) stride *= axes[e].bins;
  for (std::size_t flat = 0; flat + 1 < emp.size(); ++flat) {
    std::size_t b = (flat / stride) % axes[d].bins;
    h.empirical[b] += emp[flat];
    h.expected[b] += exp[flat];
  }
  return h;
}

}  // namespace

EquivarianceResult equivariance_distance(const PointSet& points, const WaveSnapshot& psi, std::uint64_t seed,
                                         const EquivarianceOptions& options) {
  const std::size_t n = points.size();
  const std::size_t dim = points.dim;
  if (n < 100) throw RangeError(fmt::format("equivariance needs at least 100 trajectories, got {}", n));
  if (dim != psi.dim()) throw StructuralError("ensemble dimension does not match the wavefunction");
  EquivarianceResult r;
  if (dim <= 2) {
    TableSampler sampler(psi);
    PointSet ref = sampler.draw(n, derived_seed(seed, 0));
    std::vector<BinAxis> axes;
    for (std::size_t d = 0; d < dim; ++d) {
      axes.push_back(bin_axis(axis_values(ref, d), n, dim, dim == 1 ? options.max_bins_1d : options.max_bins_2d));
      r.bins.push_back(axes.back().bins);
      r.bin_width.push_back(axes.back().width);
    }
    auto expected = expected_full(psi, axes);
    auto empirical = histogram(points, axes);
    r.distance = l1(empirical, expected);
    r.outside_empirical = empirical.back();
    r.outside_expected = expected.back();
    double floor = 0.0;
    for (std::size_t b = 0; b < options.bootstrap; ++b) {
      floor += l1(histogram(sampler.draw(n, derived_seed(seed, b + 1)), axes), expected);
    }
    r.noise_floor = floor / static_cast<double>(options.bootstrap);
    for (std::size_t d = 0; d < dim; ++d) r.marginals.push_back(project(empirical, expected, axes, d));
    return r;
  }
  r.marginal = true;
  double floor = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    MarginalSampler sampler(psi, d);
    auto ref = sampler.draw(n, derived_seed(seed, 1000 * d));
    BinAxis axis = bin_axis(ref, n, 1, options.max_bins_1d);
    r.bins.push_back(axis.bins);
    r.bin_width.push_back(axis.width);
    auto expected = expected_marginal(psi, d, axis);
    PointSet proj{1, axis_values(points, d)};
    auto empirical = histogram(proj, {axis});
    r.distance += l1(empirical, expected);
    r.outside_empirical += empirical.back();
    r.outside_expected += expected.back();
    for (std::size_t b = 0; b < options.bootstrap; ++b) {
      PointSet fresh{1, sampler.draw(n, derived_seed(seed, 1000 * d + b + 1))};
      floor += l1(histogram(fresh, {axis}), expected);
    }
    r.marginals.push_back(project(empirical, expected, {axis}, 0));
  }
  const double dd = static_cast<double>(dim);
  r.distance /= dd;
  r.outside_empirical /= dd;
  r.outside_expected /= dd;
  r.noise_floor = floor / (dd * static_cast<double>(options.bootstrap));
  return r;
}

}  // namespace pilotwave
