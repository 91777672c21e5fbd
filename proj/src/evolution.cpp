#include "pilotwave/evolution.hpp"

#include <cmath>

#include <fmt/format.h>

namespace pilotwave {

namespace {

class GridEvolution final : public Evolution {
 public:
  GridEvolution(const Scenario& s, std::span<const ProductTerm> terms, double scale, double tau)
      : h_(s.model, GridLayout(s.axes, s.internal_dim())),
        prop_(h_, resolve_grid_scheme(s.scheme, s.model), tau),
        psi_(WavefunctionGrid::from_terms(h_.layout(), terms)) {
    for (auto& a : psi_.amplitudes()) a *= scale;
  }

  void advance() override {
    prop_.step(psi_);
    cache_.reset();
  }
  double time() const override { return psi_.time(); }
  double tau() const override { return prop_.tau(); }
  SnapshotPtr snapshot() override {
    if (!cache_) cache_ = std::make_shared<GridSnapshot>(psi_, h_.fft());
    return cache_;
  }
  double norm2() const override { return psi_.norm2(); }
  double energy() const override { return h_.energy(psi_); }
  double boundary_amplitude() const override { return psi_.boundary_amplitude(); }
  std::vector<double> component_weights() const override { return psi_.component_weights(); }
  double characteristic_velocity() const override {
    const auto& layout = h_.layout();
    std::vector<cplx> spec(psi_.amplitudes());
    h_.fft().forward(spec);
    std::vector<std::size_t> multi(layout.dim());
    std::vector<std::vector<double>> ks(layout.dim());
    for (std::size_t d = 0; d < layout.dim(); ++d) ks[d] = layout.wavenumbers(d);
    const std::size_t f = layout.internal_dim();
    double total = 0.0, weight = 0.0;
    for (std::size_t p = 0; p < layout.points(); ++p) {
      layout.multi_index(p, multi);
      double v2 = 0.0;
      for (std::size_t d = 0; d < layout.dim(); ++d) {
        double v = h_.spec().hbar * ks[d][multi[d]] / h_.spec().masses[d];
        v2 += v * v;
      }
      for (std::size_t c = 0; c < f; ++c) {
        double r = std::norm(spec[p * f + c]);
        total += r * v2;
        weight += r;
      }
    }
    return weight > 0.0 ? std::sqrt(total / weight) : 0.0;
  }
  std::string scheme() const override { return to_string(prop_.scheme()); }
  void save(const std::string& path) const override { psi_.save(path); }

 private:
  GridHamiltonian h_;
  GridPropagator prop_;
  WavefunctionGrid psi_;
  SnapshotPtr cache_;
};

class FockEvolution final : public Evolution {
 public:
  FockEvolution(const Scenario& s, std::span<const ProductTerm> terms, double scale, double tau)
      : basis_(s.nmax, s.internal_dim()),
        prop_(s.model, basis_, tau, s.scheme),
        psi_(FockWavefunction::from_terms(basis_, s.model.frequencies, terms)),
        tabulation_(s.tabulation) {
    for (auto& a : psi_.amplitudes()) a *= scale;
  }

  void advance() override {
    prop_.step(psi_);
    cache_.reset();
  }
  double time() const override { return psi_.time(); }
  double tau() const override { return prop_.tau(); }
  SnapshotPtr snapshot() override {
    if (!cache_) cache_ = std::make_shared<FockSnapshot>(psi_, tabulation_);
    return cache_;
  }
  double norm2() const override { return psi_.norm2(); }
  double energy() const override { return prop_.energy(psi_); }
  double leakage() const override { return psi_.leakage() / psi_.norm2(); }
  std::vector<double> component_weights() const override { return psi_.component_weights(); }
  double characteristic_velocity() const override {
    double total = 0.0;
    for (std::size_t j = 0; j < basis_.modes(); ++j) total += psi_.momentum_square(j);
    return std::sqrt(total);
  }
  std::string scheme() const override {
    return prop_.method() == FockPropagator::Method::exact ? "exact" : "lanczos";
  }
  void save(const std::string& path) const override { psi_.save(path); }

 private:
  FockBasis basis_;
  FockPropagator prop_;
  FockWavefunction psi_;
  std::vector<Axis> tabulation_;
  SnapshotPtr cache_;
};

}  // namespace

std::unique_ptr<Evolution> make_evolution(const Scenario& s, SolverKind solver, std::span<const ProductTerm> terms,
                                          double scale, double tau) {
  if (solver == SolverKind::grid) return std::make_unique<GridEvolution>(s, terms, scale, tau);
  return std::make_unique<FockEvolution>(s, terms, scale, tau);
}

double normalization(const Scenario& s, SolverKind solver, std::span<const ProductTerm> terms) {
  double n2 = 0.0;
  if (solver == SolverKind::grid) {
    n2 = WavefunctionGrid::from_terms(GridLayout(s.axes, s.internal_dim()), terms).norm2();
  } else {
    n2 = FockWavefunction::from_terms(FockBasis(s.nmax, s.internal_dim()), s.model.frequencies, terms).norm2();
  }
  if (!(n2 > 0.0)) throw StructuralError("the initial state vanishes in the chosen representation");
  return 1.0 / std::sqrt(n2);
}

}  // namespace pilotwave
