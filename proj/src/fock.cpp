#include "pilotwave/fock.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "json.hpp"
#include "pilotwave/hermite.hpp"

namespace pilotwave {

FockBasis::FockBasis(std::vector<int> nmax, std::size_t internal_dim) : nmax_(std::move(nmax)), f_(internal_dim) {
  if (nmax_.empty()) throw StructuralError("a Fock basis needs at least one mode");
  if (f_ == 0) throw StructuralError("internal dimension must be positive");
  strides_.assign(nmax_.size(), 1);
  states_ = 1;
  for (std::size_t j = nmax_.size(); j-- > 0;) {
    if (nmax_[j] < 1) throw StructuralError("N_max must be at least 1");
    strides_[j] = states_;
    states_ *= static_cast<std::size_t>(nmax_[j] + 1);
  }
}

void FockBasis::occupation(std::size_t flat, std::span<int> out) const {
  for (std::size_t j = 0; j < nmax_.size(); ++j) {
    out[j] = static_cast<int>(flat / strides_[j]);
    flat %= strides_[j];
  }
}

FockWavefunction::FockWavefunction(FockBasis basis, std::vector<double> frequencies, double time)
    : basis_(std::move(basis)), freq_(std::move(frequencies)), amps_(basis_.size()), time_(time) {
  if (freq_.size() != basis_.modes()) throw StructuralError("one frequency per mode is required");
  for (double w : freq_) {
    if (!(w > 0.0)) throw StructuralError("mode frequencies must be positive");
  }
}

FockWavefunction FockWavefunction::from_terms(const FockBasis& basis, const std::vector<double>& frequencies,
                                              std::span<const ProductTerm> terms) {
  FockWavefunction psi(basis, frequencies);
  const std::size_t m = basis.modes();
  const std::size_t f = basis.internal_dim();
  std::vector<int> occ(m);
  for (const auto& t : terms) {
    if (t.factors.size() != m || t.spin.size() != f) throw StructuralError("initial state shape does not match the Fock basis");
    std::vector<std::vector<cplx>> coeffs(m);
    for (std::size_t j = 0; j < m; ++j) coeffs[j] = t.factors[j].fock_coefficients(basis.nmax()[j], frequencies[j]);
    for (std::size_t s = 0; s < basis.states(); ++s) {
      basis.occupation(s, occ);
      cplx amp = t.coefficient;
      for (std::size_t j = 0; j < m; ++j) amp *= coeffs[j][static_cast<std::size_t>(occ[j])];
      if (amp == 0.0) continue;
      for (std::size_t c = 0; c < f; ++c) psi.amps_[s * f + c] += amp * t.spin[c];
    }
  }
  return psi;
}

double FockWavefunction::norm2() const {
  double s = 0.0;
  for (const auto& a : amps_) s += std::norm(a);
  return s;
}

void FockWavefunction::normalize() {
  double n = norm2();
  if (!(n > 0.0)) throw StructuralError("cannot normalize a zero wavefunction");
  for (auto& a : amps_) a /= std::sqrt(n);
}

double FockWavefunction::leakage() const {
  const std::size_t f = basis_.internal_dim();
  std::vector<int> occ(basis_.modes());
  double s = 0.0;
  for (std::size_t st = 0; st < basis_.states(); ++st) {
    basis_.occupation(st, occ);
    bool shell = false;
    for (std::size_t j = 0; j < occ.size(); ++j) shell = shell || occ[j] == basis_.nmax()[j];
    if (!shell) continue;
    for (std::size_t c = 0; c < f; ++c) s += std::norm(amps_[st * f + c]);
  }
  return s;
}

std::vector<double> FockWavefunction::component_weights() const {
  std::size_t f = basis_.internal_dim();
  std::vector<double> w(f);
  for (std::size_t i = 0; i < amps_.size(); ++i) w[i % f] += std::norm(amps_[i]);
  return w;
}

void FockWavefunction::evaluate(std::span<const double> q, std::span<cplx> values, std::span<cplx> gradients) const {
  const std::size_t m = basis_.modes();
  const std::size_t f = basis_.internal_dim();
  if (q.size() != m) throw StructuralError(fmt::format("configuration has {} coordinates, basis has {} modes", q.size(), m));
  std::vector<std::vector<double>> phi(m), dphi(m);
  const bool grad = !gradients.empty();
  for (std::size_t j = 0; j < m; ++j) {
    if (std::abs(q[j]) * std::sqrt(freq_[j]) > kHermiteRange) {
      throw RangeError(fmt::format("q_{} = {} is beyond the reliable Hermite range", j, q[j]));
    }
    auto n = static_cast<std::size_t>(basis_.nmax()[j] + 1);
    phi[j].resize(n);
    if (grad) dphi[j].resize(n);
    hermite_functions(q[j], freq_[j], basis_.nmax()[j], phi[j], grad ? std::span<double>(dphi[j]) : std::span<double>());
  }
  std::fill(values.begin(), values.end(), cplx{});
  if (grad) std::fill(gradients.begin(), gradients.end(), cplx{});
  std::vector<int> occ(m);
  std::vector<double> partial(m);
  for (std::size_t s = 0; s < basis_.states(); ++s) {
    basis_.occupation(s, occ);
    double prod = 1.0;
    for (std::size_t j = 0; j < m; ++j) prod *= phi[j][static_cast<std::size_t>(occ[j])];
    const cplx* a = &amps_[s * f];
    for (std::size_t c = 0; c < f; ++c) values[c] += a[c] * prod;
    if (!grad) continue;
    for (std::size_t j = 0; j < m; ++j) {
      double g = dphi[j][static_cast<std::size_t>(occ[j])];
      for (std::size_t i = 0; i < m; ++i) {
        if (i != j) g *= phi[i][static_cast<std::size_t>(occ[i])];
      }
      for (std::size_t c = 0; c < f; ++c) gradients[c * m + j] += a[c] * g;
    }
  }
}

double FockWavefunction::density(std::span<const double> q) const {
  std::vector<cplx> v(basis_.internal_dim());
  evaluate(q, v);
  double r = 0.0;
  for (const auto& c : v) r += std::norm(c);
  return r;
}

namespace {

// <a_j> and <a_j a_j>.
std::pair<cplx, cplx> lowering_moments(const FockWavefunction& psi, std::size_t j) {
  const auto& b = psi.basis();
  const std::size_t f = b.internal_dim();
  std::vector<int> occ(b.modes());
  cplx a1 = 0.0, a2 = 0.0;
  const auto& amps = psi.amplitudes();
  for (std::size_t s = 0; s < b.states(); ++s) {
    b.occupation(s, occ);
    int n = occ[j];
    for (std::size_t c = 0; c < f; ++c) {
      if (n >= 1) a1 += std::conj(amps[(s - b.stride(j)) * f + c]) * amps[s * f + c] * std::sqrt(double(n));
      if (n >= 2) {
        a2 += std::conj(amps[(s - 2 * b.stride(j)) * f + c]) * amps[s * f + c] * std::sqrt(double(n) * (n - 1));
      }
    }
  }
  return {a1, a2};
}

double number_mean(const FockWavefunction& psi, std::size_t j) {
  const auto& b = psi.basis();
  const std::size_t f = b.internal_dim();
  std::vector<int> occ(b.modes());
  double s = 0.0;
  for (std::size_t st = 0; st < b.states(); ++st) {
    b.occupation(st, occ);
    for (std::size_t c = 0; c < f; ++c) s += occ[j] * std::norm(psi.amplitudes()[st * f + c]);
  }
  return s;
}

}  // namespace

double FockWavefunction::mean(std::size_t j) const {
  auto [a1, a2] = lowering_moments(*this, j);
  return 2.0 * a1.real() / std::sqrt(2.0 * freq_[j]) / norm2();
}

double FockWavefunction::variance(std::size_t j) const {
  auto [a1, a2] = lowering_moments(*this, j);
  double n = norm2();
  double q2 = (2.0 * a2.real() + 2.0 * number_mean(*this, j) + n) / (2.0 * freq_[j]) / n;
  double m = mean(j);
  return std::max(0.0, q2 - m * m);
}

double FockWavefunction::momentum_square(std::size_t j) const {
  auto [a1, a2] = lowering_moments(*this, j);
  double n = norm2();
  return 0.5 * freq_[j] * (-2.0 * a2.real() + 2.0 * number_mean(*this, j) + n) / n;
}

Eigen::MatrixXcd FockWavefunction::reduced_density(std::size_t j) const {
  const std::size_t f = basis_.internal_dim();
  const int nj = basis_.nmax()[j] + 1;
  Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(nj, nj);
  std::vector<int> occ(basis_.modes());
  for (std::size_t s = 0; s < basis_.states(); ++s) {
    basis_.occupation(s, occ);
    if (occ[j] != 0) continue;
    // s enumerates the other modes; run over n_j for both sides.
    for (int a = 0; a < nj; ++a) {
      for (int b = 0; b < nj; ++b) {
        cplx sum = 0.0;
        for (std::size_t c = 0; c < f; ++c) {
          sum += amps_[(s + a * basis_.stride(j)) * f + c] * std::conj(amps_[(s + b * basis_.stride(j)) * f + c]);
        }
        r(a, b) += sum;
      }
    }
  }
  return r;
}

double FockWavefunction::marginal_density(std::size_t j, double q) const {
  Eigen::MatrixXcd r = reduced_density(j);
  std::vector<double> phi(static_cast<std::size_t>(r.rows()));
  hermite_functions(q, freq_[j], basis_.nmax()[j], phi);
  Eigen::Map<Eigen::VectorXd> p(phi.data(), r.rows());
  Eigen::VectorXcd pc = p.cast<cplx>();
  return (pc.transpose() * r * pc)(0).real();
}

namespace {
constexpr char kFockMagic[] = "PWFOCK1\n";
}

void FockWavefunction::save(const std::string& path) const {
  static_assert(std::endian::native == std::endian::little, "snapshot files are little-endian");
  nlohmann::json header;
  header["format"] = "pilotwave-fock";
  header["time"] = time_;
  header["internal_dim"] = basis_.internal_dim();
  header["nmax"] = basis_.nmax();
  header["frequencies"] = freq_;
  header["order"] = "occupation tuples lexicographic (last mode fastest), internal index fastest";
  header["value"] = "float64 re, float64 im";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out.write(kFockMagic, 8);
  std::string h = header.dump() + "\n";
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  out.write(reinterpret_cast<const char*>(amps_.data()), static_cast<std::streamsize>(amps_.size() * sizeof(cplx)));
  if (!out) throw Error("short write to '" + path + "'");
}

FockWavefunction FockWavefunction::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path + "'");
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kFockMagic, 8) != 0) throw StructuralError("'" + path + "' is not a Fock snapshot");
  std::string line;
  std::getline(in, line);
  auto header = nlohmann::json::parse(line);
  FockWavefunction psi(FockBasis(header.at("nmax").get<std::vector<int>>(), header.at("internal_dim").get<std::size_t>()),
                       header.at("frequencies").get<std::vector<double>>(), header.at("time").get<double>());
  in.read(reinterpret_cast<char*>(psi.amps_.data()), static_cast<std::streamsize>(psi.amps_.size() * sizeof(cplx)));
  if (!in) throw StructuralError("'" + path + "' is truncated");
  return psi;
}

// ---------------------------------------------------------------------------

SparseMatrix fock_hamiltonian(const HamiltonianSpec& spec, const FockBasis& basis) {
  if (spec.kind != ModelKind::field_mode) throw StructuralError("the Fock solver needs a field_mode Hamiltonian");
  for (double l : spec.quartic) {
    if (l != 0.0) throw StructuralError("quartic couplings have no ladder-operator form in the Fock solver");
  }
  const std::size_t m = basis.modes();
  const std::size_t f = basis.internal_dim();
  if (m != spec.dimension()) throw StructuralError("Fock basis modes do not match the model's quadratures");
  if (f != spec.internal_dim()) throw StructuralError("Fock basis internal dimension does not match the model");
  Matrix constant = spec.constant_block();
  std::vector<Eigen::Triplet<cplx>> trip;
  std::vector<int> occ(m);
  for (std::size_t s = 0; s < basis.states(); ++s) {
    basis.occupation(s, occ);
    double e0 = 0.0;
    for (std::size_t j = 0; j < m; ++j) e0 += spec.frequencies[j] * (occ[j] + 0.5);
    for (std::size_t r = 0; r < f; ++r) {
      auto row = static_cast<Eigen::Index>(s * f + r);
      trip.emplace_back(row, row, e0);
      for (std::size_t c = 0; c < f; ++c) {
        cplx v = constant(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        if (v != 0.0) trip.emplace_back(row, static_cast<Eigen::Index>(s * f + c), v);
      }
    }
    // g_j q_j connects n_j and n_j + 1.
    for (std::size_t j = 0; j < m && j < spec.couplings.size(); ++j) {
      const Matrix& g = spec.couplings[j];
      if (g.size() == 0 || occ[j] >= basis.nmax()[j]) continue;
      double amp = std::sqrt((occ[j] + 1.0) / (2.0 * spec.frequencies[j]));
      std::size_t up = s + basis.stride(j);
      for (std::size_t r = 0; r < f; ++r) {
        for (std::size_t c = 0; c < f; ++c) {
          cplx v = g(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * amp;
          if (v == 0.0) continue;
          // <n+1, r| g q |n, c> and its Hermitian partner.
          trip.emplace_back(static_cast<Eigen::Index>(up * f + r), static_cast<Eigen::Index>(s * f + c), v);
          trip.emplace_back(static_cast<Eigen::Index>(s * f + c), static_cast<Eigen::Index>(up * f + r), std::conj(v));
        }
      }
    }
  }
  auto n = static_cast<Eigen::Index>(basis.size());
  SparseMatrix h(n, n);
  h.setFromTriplets(trip.begin(), trip.end());
  return h;
}

FockPropagator::FockPropagator(const HamiltonianSpec& spec, const FockBasis& basis, double tau, const std::string& scheme)
    : basis_(basis), h_(fock_hamiltonian(spec, basis)), tau_(tau) {
  if (!(tau > 0.0)) throw StabilityError(fmt::format("time step {} must be positive", tau));
  if (scheme == "exact") {
    method_ = Method::exact;
  } else if (scheme == "lanczos") {
    method_ = Method::lanczos;
  } else if (scheme == "auto") {
    method_ = basis.size() <= kDenseFockLimit ? Method::exact : Method::lanczos;
  } else {
    throw StructuralError("scheme '" + scheme + "' is not available for the Fock solver");
  }
  if (method_ == Method::exact) {
    Eigen::SelfAdjointEigenSolver<Matrix> es{Matrix(h_)};
    Eigen::VectorXcd phases = (cplx(0.0, -tau) * es.eigenvalues().cast<cplx>()).array().exp();
    propagator_ = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
  }
}

void FockPropagator::step(FockWavefunction& psi) const {
  if (!(psi.basis() == basis_)) throw StructuralError("wavefunction basis does not match the propagator");
  Eigen::Map<Eigen::VectorXcd> v(psi.amplitudes().data(), static_cast<Eigen::Index>(psi.amplitudes().size()));
  if (method_ == Method::exact) {
    v = propagator_ * Eigen::VectorXcd(v);
  } else {
    Eigen::VectorXcd w = v;
    lanczos_step(w, tau_);
    v = w;
  }
  psi.set_time(psi.time() + tau_);
}

// exp(-i H tau) v in a Krylov space, halving the step until the a-posteriori
// error estimate is below 1e-14 relative.
void FockPropagator::lanczos_step(Eigen::VectorXcd& v, double tau) const {
  constexpr int kMaxKrylov = 40;
  const double beta0 = v.norm();
  if (beta0 == 0.0) return;
  std::vector<Eigen::VectorXcd> basis;
  std::vector<double> alpha, beta;
  Eigen::VectorXcd q = v / beta0;
  double next_beta = 0.0;
  for (int k = 0; k < kMaxKrylov; ++k) {
    basis.push_back(q);
    Eigen::VectorXcd w = h_ * q;
    alpha.push_back(q.dot(w).real());
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : basis) w -= b * b.dot(w);
    }
    next_beta = w.norm();
    if (next_beta < 1e-14) break;
    if (k + 1 < kMaxKrylov) {
      beta.push_back(next_beta);
      q = w / next_beta;
    }
  }
  auto m = static_cast<Eigen::Index>(alpha.size());
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    t(i, i) = alpha[static_cast<std::size_t>(i)];
    if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
  Eigen::VectorXcd phases = (cplx(0.0, -tau) * es.eigenvalues().cast<cplx>()).array().exp();
  Eigen::VectorXcd c = es.eigenvectors().cast<cplx>() * phases.asDiagonal() * es.eigenvectors().row(0).transpose().cast<cplx>();
  double err = next_beta * std::abs(c(m - 1));
  if (err > 1e-14 && next_beta >= 1e-14) {
    lanczos_step(v, 0.5 * tau);
    lanczos_step(v, 0.5 * tau);
    return;
  }
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(v.size());
  for (Eigen::Index i = 0; i < m; ++i) out += basis[static_cast<std::size_t>(i)] * c(i);
  v = beta0 * out;
}

double FockPropagator::energy(const FockWavefunction& psi) const {
  Eigen::Map<const Eigen::VectorXcd> v(psi.amplitudes().data(), static_cast<Eigen::Index>(psi.amplitudes().size()));
  Eigen::VectorXcd hv = h_ * v;
  return v.dot(hv).real() / v.squaredNorm();
}

}  // namespace pilotwave
