#include "pilotwave/state.hpp"

#include <cmath>

#include <fmt/format.h>

#include "pilotwave/hermite.hpp"

namespace pilotwave {

namespace {

template <class T>
T pick(const std::vector<T>& v, std::size_t d, T fallback) {
  if (v.empty()) return fallback;
  if (v.size() == 1) return v[0];
  return v[d];
}

template <class T>
void check_length(const std::vector<T>& v, std::size_t dim, const char* what) {
  if (v.size() > 1 && v.size() != dim) {
    throw StructuralError(fmt::format("{} has {} entries but the configuration space has {} coordinates", what,
                                      v.size(), dim));
  }
}

double default_frequency(const StateContext& ctx, std::size_t d) {
  return d < ctx.frequencies.size() ? ctx.frequencies[d] : 1.0;
}

double mass_of(const StateContext& ctx, std::size_t d) { return d < ctx.masses.size() ? ctx.masses[d] : 1.0; }

std::vector<double> optional_numbers(const Value& call, std::string_view name, std::size_t index,
                                     const std::string& key) {
  const Value* a = call.argument(name, index);
  return a ? as_numbers(*a, key) : std::vector<double>{};
}

}  // namespace

cplx Factor1D::operator()(double x) const {
  switch (kind) {
    case Kind::gaussian: {
      double s2 = width * width;
      double dx = x - center;
      return std::pow(2.0 * kPi * s2, -0.25) * std::exp(cplx(-dx * dx / (4.0 * s2), momentum * x / hbar));
    }
    case Kind::ho_ground: {
      double a = mass * frequency / hbar;
      return std::pow(a / kPi, 0.25) * std::exp(-0.5 * a * x * x);
    }
    case Kind::coherent: {
      // Displaced ground state: x0 = sqrt(2) l Re(alpha), p0 = sqrt(2) hbar/l Im(alpha).
      double l = std::sqrt(hbar / (mass * frequency));
      double x0 = std::sqrt(2.0) * l * alpha.real();
      double p0 = std::sqrt(2.0) * hbar / l * alpha.imag();
      double dx = x - x0;
      return std::pow(1.0 / (kPi * l * l), 0.25) *
             std::exp(cplx(-0.5 * dx * dx / (l * l), (p0 * x - 0.5 * x0 * p0) / hbar));
    }
    case Kind::number: {
      double omega_eff = mass * frequency / hbar;
      return hermite_function(n, x, omega_eff);
    }
  }
  return {};
}

std::vector<cplx> Factor1D::fock_coefficients(int nmax, double omega) const {
  std::vector<cplx> c(static_cast<std::size_t>(nmax + 1));
  const bool same_oscillator = std::abs(mass * frequency / hbar - omega) <= 1e-14 * omega && mass == 1.0 && hbar == 1.0;
  if (same_oscillator && kind == Kind::ho_ground) {
    c[0] = 1.0;
    return c;
  }
  if (same_oscillator && kind == Kind::number) {
    if (n <= nmax) c[static_cast<std::size_t>(n)] = 1.0;
    return c;
  }
  if (same_oscillator && kind == Kind::coherent) {
    cplx term = std::exp(-0.5 * std::norm(alpha));
    for (int k = 0; k <= nmax; ++k) {
      c[static_cast<std::size_t>(k)] = term;
      term *= alpha / std::sqrt(static_cast<double>(k + 1));
    }
    return c;
  }
  // Trapezoid projection; both factors decay like Gaussians, so the rule is
  // spectrally accurate on a wide enough window.
  double length = 1.0 / std::sqrt(omega);
  double scale = length;
  double middle = 0.0;
  switch (kind) {
    case Kind::gaussian:
      scale = std::min(scale, width);
      middle = center;
      break;
    case Kind::coherent:
    case Kind::ho_ground:
    case Kind::number:
      scale = std::min(scale, std::sqrt(hbar / (mass * frequency)));
      middle = kind == Kind::coherent ? std::sqrt(2.0 * hbar / (mass * frequency)) * alpha.real() : 0.0;
      break;
  }
  double reach = std::sqrt(2.0 * nmax + 1.0) * length + 14.0 * length;
  double lo = std::min(-reach, middle - 14.0 * std::max(scale, width));
  double hi = std::max(reach, middle + 14.0 * std::max(scale, width));
  if (kind == Kind::gaussian) {
    lo = std::min(lo, center - 14.0 * width);
    hi = std::max(hi, center + 14.0 * width);
  }
  double h = scale / 24.0;
  if (kind == Kind::gaussian && momentum != 0.0) h = std::min(h, 0.1 * hbar / std::abs(momentum));
  auto count = static_cast<std::size_t>(std::ceil((hi - lo) / h));
  h = (hi - lo) / static_cast<double>(count);
  std::vector<double> phi(static_cast<std::size_t>(nmax + 1));
  for (std::size_t i = 0; i <= count; ++i) {
    double x = lo + h * static_cast<double>(i);
    cplx f = (*this)(x);
    if (std::abs(x) * std::sqrt(omega) > kHermiteRange) continue;
    hermite_functions(x, omega, nmax, phi);
    double w = (i == 0 || i == count) ? 0.5 * h : h;
    for (int k = 0; k <= nmax; ++k) c[static_cast<std::size_t>(k)] += w * phi[static_cast<std::size_t>(k)] * f;
  }
  return c;
}

InitialState InitialState::parse(const Value& v, const std::string& key) {
  if (!v.is_call()) fail_at(v, key, "initial states are written family(...)");
  const std::string& name = v.text;
  if (name == "gaussian_packet") {
    GaussianPacket g;
    g.center = optional_numbers(v, "center", 0, key);
    g.width = optional_numbers(v, "width", 1, key);
    g.momentum = optional_numbers(v, "momentum", 2, key);
    if (g.width.empty()) g.width = {1.0};
    for (double w : g.width) {
      if (!(w > 0.0)) fail_at(v, key, "gaussian_packet width must be positive");
    }
    return InitialState(g);
  }
  if (name == "ho_ground") {
    HoGround h{optional_numbers(v, "frequency", 0, key)};
    for (double w : h.frequency) {
      if (!(w > 0.0)) fail_at(v, key, "ho_ground frequency must be positive");
    }
    return InitialState(h);
  }
  if (name == "coherent") {
    const Value* a = v.argument("alpha", 0);
    if (!a) fail_at(v, key, "coherent(...) needs alpha");
    return InitialState(Coherent{as_complexes(*a, key), optional_numbers(v, "frequency", 1, key)});
  }
  if (name == "number_state") {
    const Value* a = v.argument("n", 0);
    if (!a) fail_at(v, key, "number_state(...) needs n");
    NumberState s;
    for (double x : as_numbers(*a, key)) {
      if (x < 0 || std::floor(x) != x) fail_at(*a, key, "occupation numbers are non-negative integers");
      s.n.push_back(static_cast<int>(x));
    }
    s.frequency = optional_numbers(v, "frequency", 1, key);
    return InitialState(s);
  }
  if (name == "spinor") {
    const Value* c = v.argument("components", 0);
    const Value* s = v.argument("state", 1);
    if (!c || !s) fail_at(v, key, "spinor(components, state)");
    return InitialState(Spinor{as_complexes(*c, key), std::make_shared<InitialState>(parse(*s, key))});
  }
  if (name == "superposition") {
    const Value* list = v.argument("terms", 0);
    if (!list || !list->is_list() || list->items.empty()) fail_at(v, key, "superposition([(coeff, state), ...])");
    Superposition sup;
    for (const auto& item : list->items) {
      if (item.kind != Value::Kind::tuple || item.items.size() != 2) {
        fail_at(item, key, "superposition terms are (coeff, state) tuples");
      }
      sup.terms.emplace_back(as_complex(item.items[0], key), std::make_shared<InitialState>(parse(item.items[1], key)));
    }
    return InitialState(sup);
  }
  fail_at(v, key, "unknown initial-state family '" + name + "'");
}

std::string InitialState::family() const {
  static const char* names[] = {"gaussian_packet", "ho_ground", "coherent", "number_state", "spinor", "superposition"};
  return names[node_.index()];
}

std::vector<ProductTerm> InitialState::expand(const StateContext& ctx) const {
  const std::size_t dim = ctx.dim;
  auto scalar_term = [&](auto make_factor) {
    ProductTerm t;
    t.spin.assign(ctx.internal_dim, cplx{});
    t.spin[0] = 1.0;
    for (std::size_t d = 0; d < dim; ++d) t.factors.push_back(make_factor(d));
    return std::vector<ProductTerm>{t};
  };
  auto scalar_only = [&](std::vector<ProductTerm> terms) {
    if (ctx.internal_dim != 1) {
      throw StructuralError(fmt::format("state '{}' has no internal components; wrap it in spinor(...) for "
                                        "internal dimension {}",
                                        family(), ctx.internal_dim));
    }
    return terms;
  };

  if (const auto* g = std::get_if<GaussianPacket>(&node_)) {
    check_length(g->center, dim, "gaussian_packet center");
    check_length(g->width, dim, "gaussian_packet width");
    check_length(g->momentum, dim, "gaussian_packet momentum");
    return scalar_only(scalar_term([&](std::size_t d) {
      Factor1D f;
      f.kind = Factor1D::Kind::gaussian;
      f.center = pick(g->center, d, 0.0);
      f.width = pick(g->width, d, 1.0);
      f.momentum = pick(g->momentum, d, 0.0);
      f.mass = mass_of(ctx, d);
      f.hbar = ctx.hbar;
      return f;
    }));
  }
  if (const auto* h = std::get_if<HoGround>(&node_)) {
    check_length(h->frequency, dim, "ho_ground frequency");
    return scalar_only(scalar_term([&](std::size_t d) {
      Factor1D f;
      f.kind = Factor1D::Kind::ho_ground;
      f.frequency = pick(h->frequency, d, default_frequency(ctx, d));
      f.mass = mass_of(ctx, d);
      f.hbar = ctx.hbar;
      return f;
    }));
  }
  if (const auto* c = std::get_if<Coherent>(&node_)) {
    check_length(c->alpha, dim, "coherent alpha");
    check_length(c->frequency, dim, "coherent frequency");
    return scalar_only(scalar_term([&](std::size_t d) {
      Factor1D f;
      f.kind = Factor1D::Kind::coherent;
      f.alpha = pick(c->alpha, d, cplx{});
      f.frequency = pick(c->frequency, d, default_frequency(ctx, d));
      f.mass = mass_of(ctx, d);
      f.hbar = ctx.hbar;
      return f;
    }));
  }
  if (const auto* n = std::get_if<NumberState>(&node_)) {
    check_length(n->n, dim, "number_state n");
    check_length(n->frequency, dim, "number_state frequency");
    return scalar_only(scalar_term([&](std::size_t d) {
      Factor1D f;
      f.kind = Factor1D::Kind::number;
      f.n = pick(n->n, d, 0);
      f.frequency = pick(n->frequency, d, default_frequency(ctx, d));
      f.mass = mass_of(ctx, d);
      f.hbar = ctx.hbar;
      return f;
    }));
  }
  if (const auto* s = std::get_if<Spinor>(&node_)) {
    if (s->components.size() != ctx.internal_dim) {
      throw StructuralError(fmt::format("spinor has {} components but the model's internal dimension is {}",
                                        s->components.size(), ctx.internal_dim));
    }
    StateContext scalar_ctx = ctx;
    scalar_ctx.internal_dim = 1;
    auto inner = s->spatial->expand(scalar_ctx);
    for (auto& t : inner) {
      cplx amp = t.spin[0];
      t.spin = s->components;
      for (auto& c : t.spin) c *= amp;
    }
    return inner;
  }
  const auto& sup = std::get<Superposition>(node_);
  std::vector<ProductTerm> out;
  for (const auto& [coeff, state] : sup.terms) {
    for (auto t : state->expand(ctx)) {
      t.coefficient *= coeff;
      out.push_back(std::move(t));
    }
  }
  return out;
}

std::vector<InitialState> InitialState::top_terms() const {
  const auto* sup = std::get_if<Superposition>(&node_);
  if (!sup) return {*this};
  std::vector<InitialState> out;
  for (const auto& [coeff, state] : sup->terms) {
    out.emplace_back(Superposition{{{coeff, state}}});
  }
  return out;
}

void evaluate_terms(std::span<const ProductTerm> terms, std::span<const double> x, std::span<cplx> out) {
  for (auto& o : out) o = 0.0;
  for (const auto& t : terms) {
    cplx amp = t.coefficient;
    for (std::size_t d = 0; d < t.factors.size(); ++d) amp *= t.factors[d](x[d]);
    for (std::size_t f = 0; f < out.size(); ++f) out[f] += amp * t.spin[f];
  }
}

void InitialState::evaluate(const StateContext& ctx, std::span<const double> x, std::span<cplx> out) const {
  auto terms = expand(ctx);
  evaluate_terms(terms, x, out);
}

}  // namespace pilotwave
