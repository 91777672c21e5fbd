#include "pilotwave/grid.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>

#include <fftw3.h>
#include <fmt/format.h>

#include "json.hpp"

namespace pilotwave {

GridLayout::GridLayout(std::vector<Axis> axes, std::size_t internal_dim)
    : axes_(std::move(axes)), internal_dim_(internal_dim) {
  if (axes_.empty()) throw StructuralError("a grid needs at least one axis");
  if (internal_dim_ == 0) throw StructuralError("internal dimension must be positive");
  points_ = 1;
  strides_.assign(axes_.size(), 1);
  for (std::size_t d = axes_.size(); d-- > 0;) {
    if (axes_[d].points < 2 || !(axes_[d].max > axes_[d].min)) {
      throw StructuralError(fmt::format("axis {} must have max > min and at least 2 points", d));
    }
    strides_[d] = points_;
    points_ *= axes_[d].points;
  }
}

double GridLayout::cell_volume() const {
  double v = 1.0;
  for (const auto& a : axes_) v *= a.spacing();
  return v;
}

std::size_t GridLayout::index(std::span<const std::size_t> multi) const {
  std::size_t flat = 0;
  for (std::size_t d = 0; d < axes_.size(); ++d) flat += multi[d] * strides_[d];
  return flat;
}

void GridLayout::multi_index(std::size_t flat, std::span<std::size_t> out) const {
  for (std::size_t d = 0; d < axes_.size(); ++d) {
    out[d] = flat / strides_[d];
    flat %= strides_[d];
  }
}

void GridLayout::coordinates(std::size_t flat, std::span<double> out) const {
  for (std::size_t d = 0; d < axes_.size(); ++d) {
    out[d] = axes_[d].at(flat / strides_[d]);
    flat %= strides_[d];
  }
}

std::vector<double> GridLayout::wavenumbers(std::size_t d) const {
  const Axis& a = axes_[d];
  std::size_t n = a.points;
  double dk = 2.0 * kPi / (a.max - a.min);
  std::vector<double> k(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto s = static_cast<double>(i);
    k[i] = (i < (n + 1) / 2 ? s : s - static_cast<double>(n)) * dk;
  }
  return k;
}

// ---------------------------------------------------------------------------

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct Fft::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

Fft::Fft(const GridLayout& layout) : plans_(std::make_unique<Plans>()), size_(layout.size()) {
  std::vector<int> shape;
  for (const auto& a : layout.axes()) shape.push_back(static_cast<int>(a.points));
  int howmany = static_cast<int>(layout.internal_dim());
  auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * size_));
  std::lock_guard lock(planner_mutex());
  unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  plans_->forward = fftw_plan_many_dft(static_cast<int>(shape.size()), shape.data(), howmany, buf, nullptr, howmany, 1,
                                       buf, nullptr, howmany, 1, FFTW_FORWARD, flags);
  plans_->backward = fftw_plan_many_dft(static_cast<int>(shape.size()), shape.data(), howmany, buf, nullptr, howmany,
                                        1, buf, nullptr, howmany, 1, FFTW_BACKWARD, flags);
  fftw_free(buf);
  if (!plans_->forward || !plans_->backward) throw Error("FFTW could not create a plan");
}

Fft::~Fft() {
  std::lock_guard lock(planner_mutex());
  if (plans_->forward) fftw_destroy_plan(plans_->forward);
  if (plans_->backward) fftw_destroy_plan(plans_->backward);
}

void Fft::forward(std::span<cplx> data) const {
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plans_->forward, p, p);
}

void Fft::backward(std::span<cplx> data) const {
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plans_->backward, p, p);
}

// ---------------------------------------------------------------------------

WavefunctionGrid::WavefunctionGrid(GridLayout layout, double time)
    : layout_(std::move(layout)), amps_(layout_.size()), time_(time) {}

WavefunctionGrid WavefunctionGrid::from_terms(const GridLayout& layout, std::span<const ProductTerm> terms) {
  WavefunctionGrid g(layout);
  const std::size_t dim = layout.dim();
  const std::size_t f = layout.internal_dim();
  // Tabulate each one-dimensional factor once per axis.
  std::vector<std::vector<std::vector<cplx>>> tables(terms.size());
  for (std::size_t t = 0; t < terms.size(); ++t) {
    if (terms[t].factors.size() != dim || terms[t].spin.size() != f) {
      throw StructuralError("initial state shape does not match the grid");
    }
    tables[t].resize(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      const Axis& a = layout.axes()[d];
      for (std::size_t i = 0; i < a.points; ++i) tables[t][d].push_back(terms[t].factors[d](a.at(i)));
    }
  }
  std::vector<std::size_t> multi(dim);
  for (std::size_t p = 0; p < layout.points(); ++p) {
    layout.multi_index(p, multi);
    for (std::size_t t = 0; t < terms.size(); ++t) {
      cplx amp = terms[t].coefficient;
      for (std::size_t d = 0; d < dim; ++d) amp *= tables[t][d][multi[d]];
      for (std::size_t c = 0; c < f; ++c) g.at(p, c) += amp * terms[t].spin[c];
    }
  }
  return g;
}

double WavefunctionGrid::norm2() const {
  double s = 0.0;
  for (const auto& a : amps_) s += std::norm(a);
  return s * layout_.cell_volume();
}

void WavefunctionGrid::normalize() {
  double n = norm2();
  if (!(n > 0.0)) throw StructuralError("cannot normalize a zero wavefunction");
  double s = 1.0 / std::sqrt(n);
  for (auto& a : amps_) a *= s;
}

std::vector<double> WavefunctionGrid::component_weights() const {
  std::size_t f = layout_.internal_dim();
  std::vector<double> w(f);
  for (std::size_t i = 0; i < amps_.size(); ++i) w[i % f] += std::norm(amps_[i]);
  for (auto& x : w) x *= layout_.cell_volume();
  return w;
}

std::vector<double> WavefunctionGrid::density() const {
  std::size_t f = layout_.internal_dim();
  std::vector<double> rho(layout_.points());
  for (std::size_t i = 0; i < amps_.size(); ++i) rho[i / f] += std::norm(amps_[i]);
  return rho;
}

double WavefunctionGrid::boundary_amplitude(double fraction) const {
  std::vector<std::size_t> multi(layout_.dim());
  std::size_t f = layout_.internal_dim();
  double worst = 0.0;
  for (std::size_t p = 0; p < layout_.points(); ++p) {
    layout_.multi_index(p, multi);
    bool edge = false;
    for (std::size_t d = 0; d < layout_.dim(); ++d) {
      auto n = static_cast<double>(layout_.axes()[d].points);
      auto i = static_cast<double>(multi[d]);
      if (i < fraction * n || n - i <= fraction * n) edge = true;
    }
    if (!edge) continue;
    for (std::size_t c = 0; c < f; ++c) worst = std::max(worst, std::abs(at(p, c)));
  }
  return worst;
}

namespace {
constexpr char kGridMagic[] = "PWGRID1\n";
}

void WavefunctionGrid::save(const std::string& path) const {
  static_assert(std::endian::native == std::endian::little, "snapshot files are little-endian");
  nlohmann::json header;
  header["format"] = "pilotwave-grid";
  header["time"] = time_;
  header["internal_dim"] = layout_.internal_dim();
  header["order"] = "point-major, last axis fastest, internal index fastest within a point";
  header["value"] = "float64 re, float64 im";
  for (const auto& a : layout_.axes()) header["axes"].push_back({{"min", a.min}, {"max", a.max}, {"points", a.points}});
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out.write(kGridMagic, 8);
  std::string h = header.dump() + "\n";
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  out.write(reinterpret_cast<const char*>(amps_.data()), static_cast<std::streamsize>(amps_.size() * sizeof(cplx)));
  if (!out) throw Error("short write to '" + path + "'");
}

WavefunctionGrid WavefunctionGrid::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path + "'");
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kGridMagic, 8) != 0) throw StructuralError("'" + path + "' is not a grid snapshot");
  std::string line;
  std::getline(in, line);
  auto header = nlohmann::json::parse(line);
  std::vector<Axis> axes;
  for (const auto& a : header.at("axes")) {
    axes.push_back({a.at("min").get<double>(), a.at("max").get<double>(), a.at("points").get<std::size_t>()});
  }
  WavefunctionGrid g(GridLayout(std::move(axes), header.at("internal_dim").get<std::size_t>()),
                     header.at("time").get<double>());
  in.read(reinterpret_cast<char*>(g.amps_.data()), static_cast<std::streamsize>(g.amps_.size() * sizeof(cplx)));
  if (!in) throw StructuralError("'" + path + "' is truncated");
  return g;
}

cplx inner_product(const WavefunctionGrid& a, const WavefunctionGrid& b) {
  if (!(a.layout() == b.layout())) throw StructuralError("inner product of wavefunctions on different grids");
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.amplitudes().size(); ++i) s += std::conj(a.amplitudes()[i]) * b.amplitudes()[i];
  return s * a.layout().cell_volume();
}

}  // namespace pilotwave
