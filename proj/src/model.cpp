#include "pilotwave/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>
#include <openssl/sha.h>

namespace pilotwave {

// ---------------------------------------------------------------------------
// Mode basis

bool is_canonical(const Vec3& k) {
  for (double c : k) {
    if (c > 0.0) return true;
    if (c < 0.0) return false;
  }
  return false;
}

Vec3 polarization_vector(const Vec3& k_in, int l) {
  if (l != 1 && l != 2) throw StructuralError(fmt::format("polarization label {} is not 1 or 2", l));
  double kn = norm(k_in);
  if (kn == 0.0) throw StructuralError("zero wavevector has no transverse plane");
  Vec3 k = is_canonical(k_in) ? k_in : -k_in;
  Vec3 khat = scaled(k, 1.0 / kn);
  Vec3 e1;
  if (k[0] == 0.0 && k[1] == 0.0) {
    e1 = {1.0, 0.0, 0.0};
  } else {
    e1 = cross({0.0, 0.0, 1.0}, khat);
    e1 = scaled(e1, 1.0 / norm(e1));
  }
  if (l == 1) return e1;
  return cross(khat, e1);
}

ModeBasis ModeBasis::build(std::span<const Vec3> wavevectors, std::vector<int> polarizations) {
  if (polarizations.empty()) throw StructuralError("at least one polarization label is required");
  std::sort(polarizations.begin(), polarizations.end());
  if (std::unique(polarizations.begin(), polarizations.end()) != polarizations.end()) {
    throw StructuralError("duplicate polarization labels");
  }
  ModeBasis b;
  std::set<Vec3> seen;
  for (const Vec3& k : wavevectors) {
    if (norm(k) == 0.0) throw StructuralError("zero wavevector has no transverse plane");
    if (!seen.insert(k).second) {
      throw StructuralError(fmt::format("duplicate wavevector ({}, {}, {})", k[0], k[1], k[2]));
    }
    Vec3 rep = is_canonical(k) ? k : -k;
    // -k of an earlier entry folds into the same pair.
    if (std::find(b.wavevectors_.begin(), b.wavevectors_.end(), rep) != b.wavevectors_.end()) continue;
    b.wavevectors_.push_back(rep);
  }
  for (std::size_t w = 0; w < b.wavevectors_.size(); ++w) {
    for (int l : polarizations) {
      b.modes_.push_back({b.wavevectors_[w], l, polarization_vector(b.wavevectors_[w], l), w});
    }
  }
  return b;
}

double ModeBasis::frequency(std::size_t j) const { return norm(modes_.at(j / 2).k); }

std::vector<double> ModeBasis::frequencies() const {
  std::vector<double> out;
  for (std::size_t j = 0; j < quadrature_count(); ++j) out.push_back(frequency(j));
  return out;
}

std::string ModeBasis::quadrature_label(std::size_t j) const {
  const auto& m = modes_.at(j / 2);
  return fmt::format("q_k{}_l{}_{}", m.wavevector_index, m.polarization, j % 2 == 0 ? "re" : "im");
}

std::string ModeBasis::hash() const {
  std::string text;
  for (const auto& m : modes_) text += fmt::format("{:.17g},{:.17g},{:.17g},{};", m.k[0], m.k[1], m.k[2], m.polarization);
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(text.data()), text.size(), digest);
  std::string out;
  for (int i = 0; i < 8; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Hamiltonians

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::particle_schrodinger:
      return "particle_schrodinger";
    case ModelKind::pauli:
      return "pauli";
    case ModelKind::field_mode:
      return "field_mode";
  }
  return "?";
}

std::size_t HamiltonianSpec::internal_dim() const {
  switch (kind) {
    case ModelKind::particle_schrodinger:
      return 1;
    case ModelKind::pauli:
      return 2;
    case ModelKind::field_mode:
      return fermion_dim;
  }
  return 1;
}

Matrix HamiltonianSpec::constant_block() const {
  std::size_t f = internal_dim();
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(f));
  if (kind == ModelKind::field_mode) {
    if (fermion_block.size()) m += fermion_block;
    if (coulomb_block.size()) m += coulomb_block;
  }
  return m;
}

double HamiltonianSpec::scalar_potential(std::span<const double> x) const {
  if (kind != ModelKind::field_mode) return potential(x, masses);
  double v = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    double w = frequencies[j];
    v += 0.5 * w * w * x[j] * x[j];
    if (j < quartic.size()) v += quartic[j] * std::pow(x[j], 4);
  }
  return v;
}

Matrix HamiltonianSpec::local_block(std::span<const double> x) const {
  std::size_t f = internal_dim();
  auto fi = static_cast<Eigen::Index>(f);
  Matrix m = constant_block();
  m += scalar_potential(x) * Matrix::Identity(fi, fi);
  if (kind == ModelKind::pauli) {
    Vec3 b = magnetic_field(x);
    m(0, 0) += moment * b[2];
    m(1, 1) -= moment * b[2];
    m(0, 1) += moment * cplx(b[0], -b[1]);
    m(1, 0) += moment * cplx(b[0], b[1]);
  } else if (kind == ModelKind::field_mode) {
    for (std::size_t j = 0; j < couplings.size() && j < x.size(); ++j) {
      if (couplings[j].size()) m += x[j] * couplings[j];
    }
  }
  return m;
}

Vec3 HamiltonianSpec::vector_potential_at(std::span<const double> x) const {
  if (kind != ModelKind::pauli) return {};
  return vector_potential(x);
}

bool HamiltonianSpec::vector_potential_uniform() const {
  return kind != ModelKind::pauli || vector_potential.is_uniform();
}

bool HamiltonianSpec::has_vector_potential() const { return kind == ModelKind::pauli && !vector_potential.empty(); }

Matrix parse_matrix(const Value& v, const std::string& key, std::size_t dim) {
  auto d = static_cast<Eigen::Index>(dim);
  Matrix m = Matrix::Zero(d, d);
  if (v.kind == Value::Kind::identifier && v.text == "zero") return m;
  if (v.is_call()) {
    const std::string& name = v.text;
    if (name == "zero") return m;
    if (name == "diag") {
      const Value* a = v.argument("values", 0);
      if (!a) fail_at(v, key, "diag(values)");
      auto vals = as_complexes(*a, key);
      if (vals.size() != dim) fail_at(v, key, fmt::format("diag needs {} entries", dim));
      for (Eigen::Index i = 0; i < d; ++i) m(i, i) = vals[static_cast<std::size_t>(i)];
      return m;
    }
    double g = 1.0;
    if (const Value* a = v.argument("scale", 0)) g = as_number(*a, key);
    if (name == "identity") return g * Matrix::Identity(d, d);
    if (name == "sigma_x" || name == "sigma_y" || name == "sigma_z") {
      if (dim != 2) fail_at(v, key, "Pauli matrices need internal dimension 2");
      if (name == "sigma_x") {
        m(0, 1) = m(1, 0) = g;
      } else if (name == "sigma_y") {
        m(0, 1) = cplx(0, -g);
        m(1, 0) = cplx(0, g);
      } else {
        m(0, 0) = g;
        m(1, 1) = -g;
      }
      return m;
    }
    fail_at(v, key, "unknown matrix family '" + name + "'");
  }
  if (!v.is_list() || v.items.size() != dim) fail_at(v, key, fmt::format("expected a {}x{} matrix", dim, dim));
  for (std::size_t i = 0; i < dim; ++i) {
    auto row = as_complexes(v.items[i], key);
    if (row.size() != dim) fail_at(v.items[i], key, fmt::format("matrix rows need {} entries", dim));
    for (std::size_t j = 0; j < dim; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
  }
  return m;
}

// ---------------------------------------------------------------------------
// Scenarios

StateContext Scenario::state_context() const {
  StateContext ctx;
  ctx.dim = dimension();
  ctx.internal_dim = internal_dim();
  ctx.masses = model.masses;
  ctx.hbar = model.hbar;
  if (model.kind == ModelKind::field_mode) {
    ctx.frequencies = model.frequencies;
  } else {
    // Default oscillator frequencies for ho_ground and friends come from a
    // harmonic potential when one is present.
    ctx.frequencies.assign(ctx.dim, 1.0);
    for (const auto& t : model.potential.terms()) {
      if (const auto* h = std::get_if<HarmonicWell>(&t)) {
        for (std::size_t d = 0; d < ctx.dim; ++d) {
          if (!h->omega.empty()) ctx.frequencies[d] = h->omega.size() == 1 ? h->omega[0] : h->omega[d];
        }
      }
    }
  }
  return ctx;
}

std::size_t Scenario::step_count() const {
  if (!(dt > 0.0)) return 0;
  return static_cast<std::size_t>(std::llround(t_final / dt));
}

std::vector<std::size_t> Scenario::checkpoint_steps() const {
  std::size_t n = step_count();
  std::vector<std::size_t> out;
  if (checkpoints.empty()) {
    for (std::size_t i = 1; i <= 5; ++i) out.push_back((i * n + 2) / 5);
  } else {
    for (double t : checkpoints) out.push_back(static_cast<std::size_t>(std::llround(t / dt)));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  out.erase(std::remove(out.begin(), out.end(), std::size_t{0}), out.end());
  if (out.empty() || out.back() != n) out.push_back(n);
  return out;
}

namespace {

std::vector<Axis> parse_axes(const Value& v, const std::string& key) {
  if (!v.is_list()) fail_at(v, key, "axes are written [axis(min, max, points), ...]");
  std::vector<Axis> out;
  for (const auto& item : v.items) {
    if (!item.is_call() || item.text != "axis") fail_at(item, key, "expected axis(min, max, points)");
    const Value* lo = item.argument("min", 0);
    const Value* hi = item.argument("max", 1);
    const Value* n = item.argument("points", 2);
    if (!lo || !hi || !n) fail_at(item, key, "axis(min, max, points)");
    long points = as_integer(*n, key);
    if (points < 0) fail_at(*n, key, "point count must be non-negative");
    out.push_back({as_number(*lo, key), as_number(*hi, key), static_cast<std::size_t>(points)});
  }
  return out;
}

std::vector<Vec3> parse_wavevectors(const Value& v, const std::string& key) {
  if (!v.is_list()) fail_at(v, key, "wavevectors are written [(kx, ky, kz), ...]");
  std::vector<Vec3> out;
  for (const auto& item : v.items) {
    if (item.kind != Value::Kind::tuple || item.items.size() != 3) fail_at(item, key, "expected (kx, ky, kz)");
    out.push_back({as_number(item.items[0], key), as_number(item.items[1], key), as_number(item.items[2], key)});
  }
  return out;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "name", "description",
      "model.kind", "model.hbar", "model.masses", "model.mass", "model.dimension", "model.potential",
      "model.charge", "model.moment", "model.light_speed", "model.vector_potential", "model.magnetic_field",
      "model.wavevectors", "model.polarizations", "model.fermion_dim", "model.fermion_block",
      "model.coulomb_block", "model.couplings", "model.quartic",
      "initial.state",
      "domain.solver", "domain.scheme", "domain.axes", "domain.nmax", "domain.tabulation",
      "time.dt", "time.t_final", "time.checkpoints",
      "ensemble.samples", "ensemble.seed", "ensemble.distribution", "ensemble.pinned", "ensemble.recorded",
      "node_policy.v_max", "node_policy.density_floor", "node_policy.dwell_limit",
      "branches.rule", "branches.level", "branches.overlap_threshold",
      "checks.cross_check", "checks.leakage_threshold"};
  return keys;
}

bool as_bool(const Value& v, const std::string& key) {
  if (v.kind == Value::Kind::identifier && (v.text == "true" || v.text == "false")) return v.text == "true";
  fail_at(v, key, "expected true or false");
}

}  // namespace

Scenario Scenario::from_config(const ConfigTree& tree) {
  for (const auto& e : tree.entries()) {
    if (!known_keys().count(e.key)) fail_at(e.value, e.key, "unknown key");
  }
  Scenario s;
  s.source = tree;
  s.name = tree.word_or("name", "unnamed");
  s.description = tree.word_or("description", "");

  HamiltonianSpec& m = s.model;
  std::string kind = tree.word("model.kind");
  m.hbar = tree.number_or("model.hbar", 1.0);
  if (kind == "particle_schrodinger") {
    m.kind = ModelKind::particle_schrodinger;
    m.masses = as_numbers(tree.get("model.masses"), "model.masses");
  } else if (kind == "pauli") {
    m.kind = ModelKind::pauli;
    double mass = tree.number_or("model.mass", 1.0);
    long dim = tree.has("model.dimension") ? as_integer(tree.get("model.dimension"), "model.dimension") : 1;
    if (dim < 1) fail_at(tree.get("model.dimension"), "model.dimension", "dimension must be positive");
    m.masses.assign(static_cast<std::size_t>(dim), mass);
    m.charge = tree.number_or("model.charge", 0.0);
    m.moment = tree.number_or("model.moment", 0.0);
    m.light_speed = tree.number_or("model.light_speed", 1.0);
    if (const Value* v = tree.find("model.vector_potential")) m.vector_potential = VectorField::parse(*v, "model.vector_potential");
    if (const Value* v = tree.find("model.magnetic_field")) m.magnetic_field = VectorField::parse(*v, "model.magnetic_field");
  } else if (kind == "field_mode") {
    m.kind = ModelKind::field_mode;
    auto ks = parse_wavevectors(tree.get("model.wavevectors"), "model.wavevectors");
    std::vector<int> pols = {1, 2};
    if (const Value* v = tree.find("model.polarizations")) {
      pols.clear();
      for (double p : as_numbers(*v, "model.polarizations")) pols.push_back(static_cast<int>(p));
    }
    try {
      m.basis = ModeBasis::build(ks, pols);
    } catch (const StructuralError& e) {
      fail_at(tree.get("model.wavevectors"), "model.wavevectors", e.what());
    }
    m.frequencies = m.basis.frequencies();
    m.masses.assign(m.basis.quadrature_count(), 1.0);
    long f = tree.has("model.fermion_dim") ? as_integer(tree.get("model.fermion_dim"), "model.fermion_dim") : 1;
    if (f < 1) fail_at(tree.get("model.fermion_dim"), "model.fermion_dim", "fermion_dim must be positive");
    m.fermion_dim = static_cast<std::size_t>(f);
    auto fd = m.fermion_dim;
    m.fermion_block = tree.has("model.fermion_block") ? parse_matrix(tree.get("model.fermion_block"), "model.fermion_block", fd)
                                                      : Matrix::Zero(static_cast<Eigen::Index>(fd), static_cast<Eigen::Index>(fd));
    m.coulomb_block = tree.has("model.coulomb_block") ? parse_matrix(tree.get("model.coulomb_block"), "model.coulomb_block", fd)
                                                      : Matrix::Zero(static_cast<Eigen::Index>(fd), static_cast<Eigen::Index>(fd));
    if (const Value* v = tree.find("model.couplings")) {
      if (!v->is_list()) fail_at(*v, "model.couplings", "couplings are a list with one matrix per quadrature");
      for (const auto& item : v->items) m.couplings.push_back(parse_matrix(item, "model.couplings", fd));
    }
    if (const Value* v = tree.find("model.quartic")) m.quartic = as_numbers(*v, "model.quartic");
  } else {
    fail_at(tree.get("model.kind"), "model.kind", "unknown model kind '" + kind + "'");
  }
  if (kind != "field_mode") {
    if (const Value* v = tree.find("model.potential")) m.potential = ScalarField::parse(*v, "model.potential");
  }

  s.initial_state = InitialState::parse(tree.get("initial.state"), "initial.state");

  std::string solver = tree.word_or("domain.solver", "grid");
  if (solver == "grid") {
    s.solver = SolverKind::grid;
  } else if (solver == "fock") {
    s.solver = SolverKind::fock;
  } else {
    fail_at(tree.get("domain.solver"), "domain.solver", "solver is grid or fock");
  }
  s.scheme = tree.word_or("domain.scheme", "auto");
  static const std::set<std::string> schemes = {"auto", "split_step", "split_step4", "crank_nicolson", "exact", "lanczos"};
  if (!schemes.count(s.scheme)) fail_at(tree.get("domain.scheme"), "domain.scheme", "unknown scheme '" + s.scheme + "'");
  if (const Value* v = tree.find("domain.axes")) s.axes = parse_axes(*v, "domain.axes");
  if (const Value* v = tree.find("domain.tabulation")) s.tabulation = parse_axes(*v, "domain.tabulation");
  if (const Value* v = tree.find("domain.nmax")) {
    for (double x : as_numbers(*v, "domain.nmax")) s.nmax.push_back(static_cast<int>(x));
    if (s.nmax.size() == 1 && s.dimension() > 1) s.nmax.assign(s.dimension(), s.nmax[0]);
  } else if (s.solver == SolverKind::fock) {
    s.nmax.assign(s.dimension(), 16);
  }

  s.dt = tree.number("time.dt");
  s.t_final = tree.number("time.t_final");
  if (const Value* v = tree.find("time.checkpoints")) s.checkpoints = as_numbers(*v, "time.checkpoints");

  if (const Value* v = tree.find("ensemble.samples")) {
    long n = as_integer(*v, "ensemble.samples");
    s.samples = n < 0 ? 0 : static_cast<std::size_t>(n);
  }
  if (const Value* v = tree.find("ensemble.seed")) {
    long seed = as_integer(*v, "ensemble.seed");
    if (seed < 0) fail_at(*v, "ensemble.seed", "seed must be non-negative");
    s.seed = static_cast<std::uint64_t>(seed);
  }
  if (const Value* v = tree.find("ensemble.recorded")) {
    long n = as_integer(*v, "ensemble.recorded");
    s.recorded = n < 0 ? 0 : static_cast<std::size_t>(n);
  }
  if (const Value* v = tree.find("ensemble.distribution")) {
    const std::string key = "ensemble.distribution";
    if (v->kind == Value::Kind::identifier && v->text == "equilibrium") {
      s.distribution.kind = InitialDistribution::Kind::equilibrium;
    } else if (v->is_call() && v->text == "point") {
      s.distribution.kind = InitialDistribution::Kind::point;
      const Value* c = v->argument("center", 0);
      if (!c) fail_at(*v, key, "point(center)");
      s.distribution.center = as_numbers(*c, key);
    } else if (v->is_call() && v->text == "gaussian") {
      s.distribution.kind = InitialDistribution::Kind::gaussian;
      const Value* c = v->argument("center", 0);
      const Value* w = v->argument("width", 1);
      if (!c || !w) fail_at(*v, key, "gaussian(center, width)");
      s.distribution.center = as_numbers(*c, key);
      s.distribution.width = as_numbers(*w, key);
    } else {
      fail_at(*v, key, "distribution is equilibrium, point(center) or gaussian(center, width)");
    }
  }
  if (const Value* v = tree.find("ensemble.pinned")) {
    if (!v->is_list()) fail_at(*v, "ensemble.pinned", "pinned starts are a list of coordinate lists");
    for (const auto& item : v->items) s.pinned.push_back(as_numbers(item, "ensemble.pinned"));
  }

  s.node_policy.v_max = tree.number_or("node_policy.v_max", 0.0);
  s.node_policy.density_floor = tree.number_or("node_policy.density_floor", 1e-12);
  if (const Value* v = tree.find("node_policy.dwell_limit")) {
    s.node_policy.dwell_limit = static_cast<std::size_t>(std::max(0L, as_integer(*v, "node_policy.dwell_limit")));
  }

  std::string rule = tree.word_or("branches.rule", "none");
  if (rule == "none") {
    s.branches = BranchRule::none;
  } else if (rule == "terms") {
    s.branches = BranchRule::terms;
  } else if (rule == "superlevel") {
    s.branches = BranchRule::superlevel;
  } else {
    fail_at(tree.get("branches.rule"), "branches.rule", "branch rule is none, terms or superlevel");
  }
  s.branch_level = tree.number_or("branches.level", 1e-6);
  s.overlap_threshold = tree.number_or("branches.overlap_threshold", 1e-6);

  if (const Value* v = tree.find("checks.cross_check")) s.cross_check = as_bool(*v, "checks.cross_check");
  s.leakage_threshold = tree.number_or("checks.leakage_threshold", 1e-6);
  return s;
}

void apply_overrides(ConfigTree& tree, std::span<const std::string> overrides) {
  for (const auto& o : overrides) {
    auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw ParseError(o, {}, "overrides are written section.key=value");
    std::string key = o.substr(0, eq);
    while (!key.empty() && key.back() == ' ') key.pop_back();
    tree.set(key, parse_value(std::string_view(o).substr(eq + 1), key));
  }
}

Scenario Scenario::load(const std::string& path, std::span<const std::string> overrides) {
  ConfigTree tree = ConfigTree::load(path);
  apply_overrides(tree, overrides);
  return from_config(tree);
}

// ---------------------------------------------------------------------------
// Validation

namespace {

bool hermitian(const Matrix& m) {
  if (m.rows() != m.cols()) return false;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff());
}

bool on_grid(double t, double dt) {
  double r = t / dt;
  return std::abs(r - std::round(r)) <= 1e-9 * std::max(1.0, std::abs(r));
}

}  // namespace

std::vector<Diagnostic> validate_scenario(const Scenario& s) {
  std::vector<Diagnostic> out;
  auto add = [&](const char* code, std::string msg) { out.push_back({code, std::move(msg)}); };
  const HamiltonianSpec& m = s.model;
  const std::size_t dim = s.dimension();
  const std::size_t f = s.internal_dim();

  if (!(s.dt > 0.0) || !std::isfinite(s.dt)) add("INVALID_TIMESTEP", fmt::format("dt = {} must be positive", s.dt));
  if (!(s.t_final >= 0.0) || !std::isfinite(s.t_final)) {
    add("INVALID_DURATION", fmt::format("t_final = {} must be non-negative", s.t_final));
  }
  if (s.dt > 0.0 && s.t_final >= 0.0 && !on_grid(s.t_final, s.dt)) {
    add("TIME_GRID", fmt::format("t_final = {} is not a multiple of dt = {}", s.t_final, s.dt));
  }
  for (double t : s.checkpoints) {
    if (!(t > 0.0) || t > s.t_final * (1 + 1e-12) || (s.dt > 0.0 && !on_grid(t, s.dt))) {
      add("CHECKPOINT_GRID", fmt::format("checkpoint {} is not a step time in (0, t_final]", t));
    }
  }
  if (s.samples < 1) add("SAMPLE_COUNT", "ensemble.samples must be at least 1");

  if (!(m.hbar > 0.0)) add("NONPOSITIVE_CONSTANT", "hbar must be positive");
  for (double mass : m.masses) {
    if (!(mass > 0.0)) add("NONPOSITIVE_MASS", fmt::format("mass {} must be positive", mass));
  }
  if (dim == 0) add("DIMENSION_MISMATCH", "the model has no beable coordinates");

  if (m.kind == ModelKind::field_mode) {
    for (double w : m.frequencies) {
      if (!(w > 0.0)) add("NONPOSITIVE_FREQUENCY", fmt::format("mode frequency {} must be positive", w));
    }
    if (!hermitian(m.fermion_block)) add("NONHERMITIAN_BLOCK", "fermion_block is not Hermitian");
    if (!hermitian(m.coulomb_block)) add("NONHERMITIAN_BLOCK", "coulomb_block is not Hermitian");
    for (std::size_t j = 0; j < m.couplings.size(); ++j) {
      if (!hermitian(m.couplings[j])) add("NONHERMITIAN_BLOCK", fmt::format("coupling {} is not Hermitian", j));
    }
    if (m.couplings.size() > dim) {
      add("DIMENSION_MISMATCH", fmt::format("{} couplings for {} quadratures", m.couplings.size(), dim));
    }
    if (m.quartic.size() > dim) add("DIMENSION_MISMATCH", fmt::format("{} quartic terms for {} quadratures", m.quartic.size(), dim));
  }
  if (m.kind == ModelKind::pauli && (m.charge != 0.0 && !(m.light_speed > 0.0))) {
    add("NONPOSITIVE_CONSTANT", "light_speed must be positive");
  }

  try {
    (void)s.initial_state.expand(s.state_context());
  } catch (const StructuralError& e) {
    add("DIMENSION_MISMATCH", e.what());
  }

  if (s.solver == SolverKind::grid || s.cross_check) {
    if (dim > 3) add("GRID_DIMENSION", fmt::format("grid solvers handle at most 3 coordinates, got {}", dim));
    if (s.axes.size() != dim) add("GRID_DIMENSION", fmt::format("{} axes for {} coordinates", s.axes.size(), dim));
    for (std::size_t d = 0; d < s.axes.size(); ++d) {
      const Axis& a = s.axes[d];
      if (a.points < 8 || !(a.max > a.min)) {
        add("AXIS_POINTS", fmt::format("axis {} needs max > min and at least 8 points", d));
      }
    }
    if (s.solver == SolverKind::grid && s.scheme == "lanczos") add("SCHEME", "lanczos is a Fock-solver scheme");
  }
  if (s.solver == SolverKind::fock || s.cross_check) {
    if (m.kind != ModelKind::field_mode) add("FOCK_INCOMPATIBLE", "the Fock solver needs a field_mode model");
    for (double q : m.quartic) {
      if (q != 0.0) add("FOCK_INCOMPATIBLE", "quartic couplings have no ladder-operator form");
    }
    if (s.nmax.size() != dim) add("DIMENSION_MISMATCH", fmt::format("{} truncations for {} quadratures", s.nmax.size(), dim));
    for (int n : s.nmax) {
      if (n < 1 || n > 60) add("TRUNCATION", fmt::format("N_max = {} is outside 1..60", n));
    }
    for (const Axis& a : s.tabulation) {
      if (a.points < 8 || !(a.max > a.min)) add("AXIS_POINTS", "tabulation axes need max > min and at least 8 points");
    }
    if (!s.tabulation.empty() && s.tabulation.size() != dim) add("GRID_DIMENSION", "tabulation needs one axis per quadrature");
    if (s.solver == SolverKind::fock && (s.scheme == "split_step" || s.scheme == "split_step4" || s.scheme == "crank_nicolson")) {
      add("SCHEME", "scheme '" + s.scheme + "' is a grid-solver scheme");
    }
  }
  if (s.cross_check && (s.axes.empty() || s.nmax.empty())) add("CROSS_CHECK", "cross_check needs both axes and nmax");

  if (s.distribution.kind != InitialDistribution::Kind::equilibrium && s.distribution.center.size() != dim) {
    add("DIMENSION_MISMATCH", "distribution center needs one entry per coordinate");
  }
  if (s.distribution.kind == InitialDistribution::Kind::gaussian) {
    if (s.distribution.width.size() != dim) add("DIMENSION_MISMATCH", "distribution width needs one entry per coordinate");
    for (double w : s.distribution.width) {
      if (!(w > 0.0)) add("DISTRIBUTION", "distribution widths must be positive");
    }
  }
  for (const auto& p : s.pinned) {
    if (p.size() != dim) add("DIMENSION_MISMATCH", "pinned starts need one entry per coordinate");
  }
  if (!(s.node_policy.density_floor > 0.0) || s.node_policy.v_max < 0.0) {
    add("NODE_POLICY", "density_floor must be positive and v_max non-negative");
  }
  if (s.branches == BranchRule::terms && s.initial_state.top_terms().size() < 2) {
    add("BRANCH_RULE", "branches.rule = terms needs a superposition with at least two terms");
  }
  if (s.branches == BranchRule::superlevel && dim > 2) {
    add("BRANCH_RULE", "superlevel branches are available for 1 or 2 coordinates");
  }
  if (!(s.overlap_threshold > 0.0) || !(s.branch_level > 0.0)) add("BRANCH_RULE", "branch thresholds must be positive");

  // Initial amplitude near the edges of a periodic grid.
  bool axes_ok = s.solver == SolverKind::grid && s.axes.size() == dim && dim >= 1 && dim <= 3 &&
                 std::all_of(s.axes.begin(), s.axes.end(), [](const Axis& a) { return a.points >= 8 && a.max > a.min; });
  bool state_ok = std::none_of(out.begin(), out.end(), [](const Diagnostic& d) { return d.code == "DIMENSION_MISMATCH"; });
  if (axes_ok && state_ok) {
    auto terms = s.initial_state.expand(s.state_context());
    std::size_t total = 1;
    for (const auto& a : s.axes) total *= a.points;
    std::vector<double> x(dim);
    std::vector<cplx> psi(f);
    double norm2 = 0.0;
    double edge_max = 0.0;
    double cell = 1.0;
    for (const auto& a : s.axes) cell *= a.spacing();
    for (std::size_t flat = 0; flat < total; ++flat) {
      std::size_t rem = flat;
      bool edge = false;
      for (std::size_t d = dim; d-- > 0;) {
        std::size_t i = rem % s.axes[d].points;
        rem /= s.axes[d].points;
        x[d] = s.axes[d].at(i);
        double span = s.axes[d].max - s.axes[d].min;
        if (x[d] - s.axes[d].min < 0.05 * span || s.axes[d].max - x[d] <= 0.05 * span) edge = true;
      }
      evaluate_terms(terms, x, psi);
      double r = 0.0;
      for (const auto& c : psi) r += std::norm(c);
      norm2 += r * cell;
      if (edge) edge_max = std::max(edge_max, r);
    }
    if (!(norm2 > 0.0)) {
      add("ZERO_STATE", "the initial state vanishes on the grid");
    } else if (std::sqrt(edge_max / norm2) > 1e-10) {
      add("BOUNDARY_AMPLITUDE", fmt::format("initial |psi| reaches {:.3g} within 5% of a grid boundary",
                                            std::sqrt(edge_max / norm2)));
    }
  }
  return out;
}

}  // namespace pilotwave
