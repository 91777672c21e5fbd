#include "pilotwave/grid_solver.hpp"

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

namespace pilotwave {

GridHamiltonian::GridHamiltonian(HamiltonianSpec spec, GridLayout layout)
    : spec_(std::move(spec)), layout_(std::move(layout)), fft_(layout_) {
  const std::size_t dim = layout_.dim();
  const std::size_t f = layout_.internal_dim();
  if (dim != spec_.dimension()) {
    throw StructuralError(fmt::format("grid has {} axes but the model has {} coordinates", dim, spec_.dimension()));
  }
  if (f != spec_.internal_dim()) {
    throw StructuralError(fmt::format("grid internal dimension {} differs from the model's {}", f, spec_.internal_dim()));
  }
  const double hbar = spec_.hbar;
  const double q = spec_.kind == ModelKind::pauli ? spec_.charge / spec_.light_speed : 0.0;
  uniform_a_ = spec_.vector_potential_uniform() || q == 0.0;

  std::vector<double> x(dim);
  std::vector<double> origin(dim, 0.0);
  Vec3 a0 = uniform_a_ ? spec_.vector_potential_at(origin) : Vec3{};
  if (q == 0.0) a0 = {};

  std::vector<std::vector<double>> ks(dim);
  for (std::size_t d = 0; d < dim; ++d) ks[d] = layout_.wavenumbers(d);
  kinetic_.resize(layout_.points());
  std::vector<std::size_t> multi(dim);
  for (std::size_t p = 0; p < layout_.points(); ++p) {
    layout_.multi_index(p, multi);
    double t = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      double pk = hbar * ks[d][multi[d]] - (d < 3 ? q * a0[d] : 0.0);
      t += pk * pk / (2.0 * spec_.masses[d]);
    }
    kinetic_[p] = t;
  }

  blocks_.resize(layout_.points() * f * f);
  if (!uniform_a_) a_field_.assign(dim, std::vector<double>(layout_.points()));
  for (std::size_t p = 0; p < layout_.points(); ++p) {
    layout_.coordinates(p, x);
    Matrix w = spec_.local_block(x);
    if (!uniform_a_) {
      Vec3 a = spec_.vector_potential_at(x);
      double a2 = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        a_field_[d][p] = a[d];
        a2 += q * q * a[d] * a[d] / (2.0 * spec_.masses[d]);
      }
      w += a2 * Matrix::Identity(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(f));
    }
    for (std::size_t r = 0; r < f; ++r) {
      for (std::size_t c = 0; c < f; ++c) {
        blocks_[(p * f + r) * f + c] = w(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      }
    }
  }
  work_.resize(layout_.size());
  work2_.resize(layout_.size());
  work3_.resize(layout_.size());
}

void GridHamiltonian::apply(std::span<const cplx> psi, std::span<cplx> out) const {
  const std::size_t f = layout_.internal_dim();
  const std::size_t n = layout_.points();
  const double inv_n = 1.0 / static_cast<double>(n);
  std::copy(psi.begin(), psi.end(), work_.begin());
  fft_.forward(work_);
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t c = 0; c < f; ++c) work_[p * f + c] *= kinetic_[p] * inv_n;
  }
  fft_.backward(work_);
  for (std::size_t p = 0; p < n; ++p) {
    const cplx* w = &blocks_[p * f * f];
    for (std::size_t r = 0; r < f; ++r) {
      cplx s = work_[p * f + r];
      for (std::size_t c = 0; c < f; ++c) s += w[r * f + c] * psi[p * f + c];
      out[p * f + r] = s;
    }
  }
  if (!uniform_a_) apply_vector_potential(psi, out);
}

// Adds (i hbar q / 2m) (div(A psi) + A . grad psi) for position-dependent A.
void GridHamiltonian::apply_vector_potential(std::span<const cplx> psi, std::span<cplx> out) const {
  const std::size_t f = layout_.internal_dim();
  const std::size_t n = layout_.points();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double q = spec_.charge / spec_.light_speed;
  const double hbar = spec_.hbar;
  std::vector<std::size_t> multi(layout_.dim());
  for (std::size_t d = 0; d < layout_.dim(); ++d) {
    auto k = layout_.wavenumbers(d);
    if (layout_.axes()[d].points % 2 == 0) k[layout_.axes()[d].points / 2] = 0.0;
    const double pref = hbar * q / (2.0 * spec_.masses[d]);
    // grad_d psi
    std::copy(psi.begin(), psi.end(), work2_.begin());
    fft_.forward(work2_);
    for (std::size_t p = 0; p < n; ++p) {
      layout_.multi_index(p, multi);
      cplx ik(0.0, k[multi[d]] * inv_n);
      for (std::size_t c = 0; c < f; ++c) work2_[p * f + c] *= ik;
    }
    fft_.backward(work2_);
    // div_d (A_d psi)
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t c = 0; c < f; ++c) work3_[p * f + c] = a_field_[d][p] * psi[p * f + c];
    }
    fft_.forward(work3_);
    for (std::size_t p = 0; p < n; ++p) {
      layout_.multi_index(p, multi);
      cplx ik(0.0, k[multi[d]] * inv_n);
      for (std::size_t c = 0; c < f; ++c) work3_[p * f + c] *= ik;
    }
    fft_.backward(work3_);
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t c = 0; c < f; ++c) {
        std::size_t i = p * f + c;
        out[i] += cplx(0.0, pref) * (work3_[i] + a_field_[d][p] * work2_[i]);
      }
    }
  }
}

double GridHamiltonian::energy(const WavefunctionGrid& psi) const {
  std::vector<cplx> hpsi(layout_.size());
  apply(psi.amplitudes(), hpsi);
  cplx e = 0.0;
  double n = 0.0;
  for (std::size_t i = 0; i < hpsi.size(); ++i) {
    e += std::conj(psi.amplitudes()[i]) * hpsi[i];
    n += std::norm(psi.amplitudes()[i]);
  }
  return e.real() / n;
}

double GridHamiltonian::max_block_radius() const {
  const std::size_t f = layout_.internal_dim();
  double worst = 0.0;
  auto fi = static_cast<Eigen::Index>(f);
  for (std::size_t p = 0; p < layout_.points(); ++p) {
    if (f == 1) {
      worst = std::max(worst, std::abs(blocks_[p]));
      continue;
    }
    Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> w(&blocks_[p * f * f], fi, fi);
    Eigen::SelfAdjointEigenSolver<Matrix> es(Matrix(w), Eigen::EigenvaluesOnly);
    worst = std::max(worst, es.eigenvalues().cwiseAbs().maxCoeff());
  }
  return worst;
}

Matrix GridHamiltonian::dense() const {
  const std::size_t n = layout_.size();
  Matrix h(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::vector<cplx> e(n), col(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::fill(e.begin(), e.end(), cplx{});
    e[j] = 1.0;
    apply(e, col);
    for (std::size_t i = 0; i < n; ++i) h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
  }
  return h;
}

double GridHamiltonian::lowest_eigenvalue(std::size_t krylov) const {
  const std::size_t n = layout_.size();
  const std::size_t m = std::min(krylov, n);
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> normal;
  std::vector<Eigen::VectorXcd> basis;
  Eigen::VectorXcd v(static_cast<Eigen::Index>(n));
  for (auto& c : v) c = cplx(normal(rng), normal(rng));
  v.normalize();
  std::vector<double> alpha, beta;
  Eigen::VectorXcd w(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < m; ++j) {
    basis.push_back(v);
    apply({v.data(), n}, {w.data(), n});
    double a = v.dot(w).real();
    alpha.push_back(a);
    // Full reorthogonalization, twice for stability.
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : basis) w -= b * b.dot(w);
    }
    double bnorm = w.norm();
    if (bnorm < 1e-13 || j + 1 == m) break;
    beta.push_back(bnorm);
    v = w / bnorm;
  }
  auto k = static_cast<Eigen::Index>(alpha.size());
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    t(i, i) = alpha[static_cast<std::size_t>(i)];
    if (i + 1 < k) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

// ---------------------------------------------------------------------------

std::string to_string(GridScheme s) {
  switch (s) {
    case GridScheme::split_step:
      return "split_step";
    case GridScheme::split_step4:
      return "split_step4";
    case GridScheme::crank_nicolson:
      return "crank_nicolson";
    case GridScheme::exact:
      return "exact";
  }
  return "?";
}

GridScheme resolve_grid_scheme(const std::string& name, const HamiltonianSpec& spec) {
  bool uniform = spec.vector_potential_uniform() || spec.charge == 0.0;
  if (name == "auto") return uniform ? GridScheme::split_step4 : GridScheme::crank_nicolson;
  if (name == "split_step") return GridScheme::split_step;
  if (name == "split_step4") return GridScheme::split_step4;
  if (name == "crank_nicolson") return GridScheme::crank_nicolson;
  if (name == "exact") return GridScheme::exact;
  throw StructuralError("scheme '" + name + "' is not available for the grid solver");
}

// exp(-i W c tau / hbar) per point and exp(-i T c tau / hbar) per wavenumber.
struct GridPropagator::Exponentials {
  double potential_weight = 0.0;  // first and last half-kick
  double kinetic_weight = 0.0;
  std::vector<cplx> potential;  // F x F per point (or 1 per point)
  std::vector<cplx> kinetic;
};

namespace {

std::vector<cplx> block_exponentials(const GridHamiltonian& h, double factor) {
  const std::size_t f = h.layout().internal_dim();
  const std::size_t n = h.layout().points();
  std::vector<cplx> out(n * f * f);
  auto fi = static_cast<Eigen::Index>(f);
  const auto& blocks = h.blocks();
  for (std::size_t p = 0; p < n; ++p) {
    if (f == 1) {
      out[p] = std::exp(cplx(0.0, -factor) * blocks[p]);
      continue;
    }
    Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> w(&blocks[p * f * f], fi, fi);
    Eigen::SelfAdjointEigenSolver<Matrix> es{Matrix(w)};
    Eigen::VectorXcd phases = (cplx(0.0, -factor) * es.eigenvalues().cast<cplx>()).array().exp();
    Matrix u = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
    for (std::size_t r = 0; r < f; ++r) {
      for (std::size_t c = 0; c < f; ++c) out[(p * f + r) * f + c] = u(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
  }
  return out;
}

void apply_blocks(std::span<cplx> psi, const std::vector<cplx>& u, std::size_t f) {
  const std::size_t n = psi.size() / f;
  if (f == 1) {
    for (std::size_t p = 0; p < n; ++p) psi[p] *= u[p];
    return;
  }
  cplx tmp[8];
  std::vector<cplx> heap;
  cplx* t = tmp;
  if (f > 8) {
    heap.resize(f);
    t = heap.data();
  }
  for (std::size_t p = 0; p < n; ++p) {
    const cplx* m = &u[p * f * f];
    for (std::size_t r = 0; r < f; ++r) {
      cplx s = 0.0;
      for (std::size_t c = 0; c < f; ++c) s += m[r * f + c] * psi[p * f + c];
      t[r] = s;
    }
    for (std::size_t r = 0; r < f; ++r) psi[p * f + r] = t[r];
  }
}

}  // namespace

GridPropagator::GridPropagator(const GridHamiltonian& h, GridScheme scheme, double tau)
    : h_(h), scheme_(scheme), tau_(tau) {
  if (!(tau > 0.0)) throw StabilityError(fmt::format("time step {} must be positive", tau));
  const double hbar = h.spec().hbar;
  if ((scheme == GridScheme::split_step || scheme == GridScheme::split_step4) && !h.uniform_vector_potential()) {
    throw StructuralError("split-step schemes need a uniform vector potential; use crank_nicolson");
  }
  std::vector<double> weights;
  if (scheme == GridScheme::split_step) {
    weights = {1.0};
  } else if (scheme == GridScheme::split_step4) {
    double c = std::cbrt(2.0);
    double w1 = 1.0 / (2.0 - c);
    double w0 = -c / (2.0 - c);
    weights = {w1, w0, w1};
  }
  if (!weights.empty()) {
    double largest = 0.0;
    for (double w : weights) largest = std::max(largest, std::abs(w));
    double radius = h.max_block_radius();
    if (radius * largest * tau / hbar > kPi) {
      throw StabilityError(fmt::format("step {} resolves potential energies up to {:.4g} but the grid reaches {:.4g}; "
                                       "reduce dt",
                                       tau, kPi * hbar / (largest * tau), radius));
    }
    const std::size_t n = h.layout().points();
    for (double w : weights) {
      auto e = std::make_unique<Exponentials>();
      e->potential_weight = 0.5 * w;
      e->kinetic_weight = w;
      e->potential = block_exponentials(h, 0.5 * w * tau / hbar);
      e->kinetic.resize(n);
      for (std::size_t p = 0; p < n; ++p) {
        e->kinetic[p] = std::exp(cplx(0.0, -w * tau / hbar * h.kinetic()[p])) / static_cast<double>(n);
      }
      stages_.push_back(std::move(e));
    }
  } else if (scheme == GridScheme::exact) {
    if (h.layout().size() > kExactSchemeLimit) {
      throw StructuralError(fmt::format("the exact scheme handles at most {} unknowns, grid has {}", kExactSchemeLimit,
                                        h.layout().size()));
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(h.dense());
    eigvecs_ = es.eigenvectors();
    eigvals_ = es.eigenvalues();
  }
}

GridPropagator::~GridPropagator() = default;

void GridPropagator::strang(std::span<cplx> psi, const Exponentials& e) const {
  const std::size_t f = h_.layout().internal_dim();
  const std::size_t n = h_.layout().points();
  apply_blocks(psi, e.potential, f);
  h_.fft().forward(psi);
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t c = 0; c < f; ++c) psi[p * f + c] *= e.kinetic[p];
  }
  h_.fft().backward(psi);
  apply_blocks(psi, e.potential, f);
}

void GridPropagator::step(WavefunctionGrid& psi) const {
  if (!(psi.layout() == h_.layout())) throw StructuralError("wavefunction grid does not match the Hamiltonian");
  std::span<cplx> a = psi.amplitudes();
  switch (scheme_) {
    case GridScheme::split_step:
    case GridScheme::split_step4:
      for (const auto& e : stages_) strang(a, *e);
      break;
    case GridScheme::crank_nicolson:
      crank_nicolson(a);
      break;
    case GridScheme::exact: {
      Eigen::Map<Eigen::VectorXcd> v(a.data(), static_cast<Eigen::Index>(a.size()));
      Eigen::VectorXcd c = eigvecs_.adjoint() * v;
      for (Eigen::Index i = 0; i < c.size(); ++i) c(i) *= std::exp(cplx(0.0, -eigvals_(i) * tau_ / h_.spec().hbar));
      v = eigvecs_ * c;
      break;
    }
  }
  psi.set_time(psi.time() + tau_);
}

// (1 + i tau H / 2 hbar) x = (1 - i tau H / 2 hbar) psi by BiCGSTAB, right
// preconditioned with the kinetic part inverted in Fourier space.
void GridPropagator::crank_nicolson(std::span<cplx> psi) const {
  const std::size_t size = psi.size();
  const std::size_t f = h_.layout().internal_dim();
  const std::size_t n = h_.layout().points();
  const cplx half(0.0, 0.5 * tau_ / h_.spec().hbar);
  std::vector<cplx> tmp(size);
  auto op = [&](std::span<const cplx> x, std::span<cplx> y) {
    h_.apply(x, tmp);
    for (std::size_t i = 0; i < size; ++i) y[i] = x[i] + half * tmp[i];
  };
  auto precond = [&](std::span<const cplx> x, std::span<cplx> y) {
    std::copy(x.begin(), x.end(), y.begin());
    h_.fft().forward(y);
    for (std::size_t p = 0; p < n; ++p) {
      cplx d = 1.0 / ((1.0 + half * h_.kinetic()[p]) * static_cast<double>(n));
      for (std::size_t c = 0; c < f; ++c) y[p * f + c] *= d;
    }
    h_.fft().backward(y);
  };
  auto dotc = [&](const std::vector<cplx>& a, const std::vector<cplx>& b) {
    cplx s = 0.0;
    for (std::size_t i = 0; i < size; ++i) s += std::conj(a[i]) * b[i];
    return s;
  };
  auto nrm = [&](const std::vector<cplx>& a) { return std::sqrt(dotc(a, a).real()); };

  std::vector<cplx> b(size), x(psi.begin(), psi.end()), r(size), rhat(size), p(size), v(size), s(size), t(size),
      phat(size), shat(size);
  h_.apply(psi, tmp);
  for (std::size_t i = 0; i < size; ++i) b[i] = psi[i] - half * tmp[i];
  // Initial guess: explicit second-order estimate.
  for (std::size_t i = 0; i < size; ++i) x[i] = b[i];
  op(x, v);
  for (std::size_t i = 0; i < size; ++i) r[i] = b[i] - v[i];
  rhat = r;
  double bnorm = nrm(b);
  cplx rho = 1.0, alpha = 1.0, omega = 1.0;
  std::fill(p.begin(), p.end(), cplx{});
  std::fill(v.begin(), v.end(), cplx{});
  const double tol = 1e-14 * bnorm;
  int it = 0;
  for (; it < 500 && nrm(r) > tol; ++it) {
    cplx rho_new = dotc(rhat, r);
    if (std::abs(rho_new) == 0.0) break;
    cplx beta = (rho_new / rho) * (alpha / omega);
    for (std::size_t i = 0; i < size; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    precond(p, phat);
    op(phat, v);
    alpha = rho_new / dotc(rhat, v);
    for (std::size_t i = 0; i < size; ++i) s[i] = r[i] - alpha * v[i];
    if (nrm(s) <= tol) {
      for (std::size_t i = 0; i < size; ++i) x[i] += alpha * phat[i];
      r = s;
      ++it;
      break;
    }
    precond(s, shat);
    op(shat, t);
    omega = dotc(t, s) / dotc(t, t);
    for (std::size_t i = 0; i < size; ++i) {
      x[i] += alpha * phat[i] + omega * shat[i];
      r[i] = s[i] - omega * t[i];
    }
    rho = rho_new;
  }
  if (nrm(r) > 1e-10 * bnorm) {
    throw StabilityError(fmt::format("Crank-Nicolson solve stalled at residual {:.3g}", nrm(r) / bnorm));
  }
  last_iterations_ = it;
  std::copy(x.begin(), x.end(), psi.begin());
}

}  // namespace pilotwave
