#pragma once

// Declarative initial states:
//   gaussian_packet(center, width, momentum)   width = std dev of |psi|^2
//   ho_ground(frequency)
//   coherent(alpha, frequency)                  alpha per coordinate, complex as (re, im)
//   number_state(n, frequency)
//   spinor(components, state)
//   superposition([(coeff, state), ...])
// Frequencies default to the model's coordinate frequencies (field modes)
// or 1. Every family is a finite sum of spinor-weighted products of
// one-dimensional factors, which is what both solvers consume.

#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pilotwave/config.hpp"
#include "pilotwave/types.hpp"

namespace pilotwave {

struct StateContext {
  std::size_t dim = 1;
  std::size_t internal_dim = 1;
  std::vector<double> masses;       // per coordinate
  std::vector<double> frequencies;  // per coordinate defaults
  double hbar = 1.0;
};

/// One-dimensional factor of a product state along a single coordinate.
struct Factor1D {
  enum class Kind { gaussian, ho_ground, coherent, number };
  Kind kind = Kind::gaussian;
  double center = 0.0;    // gaussian
  double width = 1.0;     // gaussian, density std dev
  double momentum = 0.0;  // gaussian
  double frequency = 1.0;
  double mass = 1.0;
  double hbar = 1.0;
  cplx alpha{};  // coherent
  int n = 0;     // number

  cplx operator()(double x) const;

  /// Coefficients <phi_n | factor> for n = 0..nmax in the unit-mass oscillator
  /// basis of frequency `omega` (hbar = 1).
  std::vector<cplx> fock_coefficients(int nmax, double omega) const;
};

struct ProductTerm {
  cplx coefficient{1.0, 0.0};
  std::vector<cplx> spin;  // internal components, size F
  std::vector<Factor1D> factors;
};

class InitialState {
 public:
  struct GaussianPacket {
    std::vector<double> center, width, momentum;
  };
  struct HoGround {
    std::vector<double> frequency;
  };
  struct Coherent {
    std::vector<cplx> alpha;
    std::vector<double> frequency;
  };
  struct NumberState {
    std::vector<int> n;
    std::vector<double> frequency;
  };
  struct Spinor {
    std::vector<cplx> components;
    std::shared_ptr<const InitialState> spatial;
  };
  struct Superposition {
    std::vector<std::pair<cplx, std::shared_ptr<const InitialState>>> terms;
  };
  using Node = std::variant<GaussianPacket, HoGround, Coherent, NumberState, Spinor, Superposition>;

  InitialState() = default;
  explicit InitialState(Node node) : node_(std::move(node)) {}

  static InitialState parse(const Value& v, const std::string& key);

  const Node& node() const { return node_; }
  std::string family() const;

  /// Flattened product expansion. Throws StructuralError on shape mismatch.
  std::vector<ProductTerm> expand(const StateContext& ctx) const;

  /// Top-level superposition terms with their coefficients folded in; a
  /// non-superposition state yields itself.
  std::vector<InitialState> top_terms() const;

  /// Psi_f(x), not normalized.
  void evaluate(const StateContext& ctx, std::span<const double> x, std::span<cplx> out) const;

 private:
  Node node_;
};

/// Psi_f(x) from an already expanded state.
void evaluate_terms(std::span<const ProductTerm> terms, std::span<const double> x, std::span<cplx> out);

}  // namespace pilotwave
