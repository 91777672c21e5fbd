#pragma once

// Truncated number-basis representation of field_mode wavefunctionals.
// Amplitude index = flat(n) * F + f, with occupation tuples n ordered
// lexicographically (last mode fastest). Quadrature j is a unit-mass
// oscillator of frequency omega_j, q_j = (a_j + a_j^dag) / sqrt(2 omega_j).

#include <span>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "pilotwave/model.hpp"

namespace pilotwave {

class FockBasis {
 public:
  FockBasis() = default;
  FockBasis(std::vector<int> nmax, std::size_t internal_dim);

  std::size_t modes() const { return nmax_.size(); }
  std::size_t internal_dim() const { return f_; }
  const std::vector<int>& nmax() const { return nmax_; }
  std::size_t states() const { return states_; }
  std::size_t size() const { return states_ * f_; }
  std::size_t stride(std::size_t j) const { return strides_[j]; }
  void occupation(std::size_t flat, std::span<int> out) const;
  bool operator==(const FockBasis& o) const { return nmax_ == o.nmax_ && f_ == o.f_; }

 private:
  std::vector<int> nmax_;
  std::size_t f_ = 1;
  std::size_t states_ = 0;
  std::vector<std::size_t> strides_;
};

class FockWavefunction {
 public:
  FockWavefunction() = default;
  FockWavefunction(FockBasis basis, std::vector<double> frequencies, double time = 0.0);

  static FockWavefunction from_terms(const FockBasis& basis, const std::vector<double>& frequencies,
                                     std::span<const ProductTerm> terms);

  const FockBasis& basis() const { return basis_; }
  const std::vector<double>& frequencies() const { return freq_; }
  std::vector<cplx>& amplitudes() { return amps_; }
  const std::vector<cplx>& amplitudes() const { return amps_; }
  double time() const { return time_; }
  void set_time(double t) { time_ = t; }

  double norm2() const;
  void normalize();
  /// Probability on the truncation shell (some n_j = N_max_j).
  double leakage() const;
  std::vector<double> component_weights() const;

  /// Psi_f(q) and d Psi_f / d q_j (gradients[f * M + j]); gradients may be
  /// empty. Throws RangeError beyond the reliable Hermite range.
  void evaluate(std::span<const double> q, std::span<cplx> values, std::span<cplx> gradients = {}) const;
  double density(std::span<const double> q) const;

  double mean(std::size_t j) const;
  double variance(std::size_t j) const;
  /// <p_j^2>, p_j = -i d/dq_j.
  double momentum_square(std::size_t j) const;

  /// Reduced density matrix of mode j (traced over other modes and f).
  Eigen::MatrixXcd reduced_density(std::size_t j) const;
  /// Marginal density of quadrature j at q.
  double marginal_density(std::size_t j, double q) const;

  /// Binary snapshot: "PWFOCK1\n", a one-line JSON header, then
  /// little-endian float64 (re, im) pairs in storage order.
  void save(const std::string& path) const;
  static FockWavefunction load(const std::string& path);

 private:
  FockBasis basis_;
  std::vector<double> freq_;
  std::vector<cplx> amps_;
  double time_ = 0.0;
};

using SparseMatrix = Eigen::SparseMatrix<cplx>;

/// Sparse number-basis matrix of a field_mode Hamiltonian.
SparseMatrix fock_hamiltonian(const HamiltonianSpec& spec, const FockBasis& basis);

/// Largest basis size propagated by a dense matrix exponential.
inline constexpr std::size_t kDenseFockLimit = 2500;

class FockPropagator {
 public:
  enum class Method { exact, lanczos };

  FockPropagator(const HamiltonianSpec& spec, const FockBasis& basis, double tau, const std::string& scheme = "auto");

  void step(FockWavefunction& psi) const;
  double energy(const FockWavefunction& psi) const;
  Method method() const { return method_; }
  double tau() const { return tau_; }
  const SparseMatrix& hamiltonian() const { return h_; }

 private:
  void lanczos_step(Eigen::VectorXcd& v, double tau) const;

  FockBasis basis_;
  SparseMatrix h_;
  double tau_;
  Method method_;
  Matrix propagator_;
};

}  // namespace pilotwave
