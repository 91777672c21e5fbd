#include "pilotwave/fixtures.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

#include <fmt/format.h>

#include "pilotwave/io.hpp"

namespace pilotwave {

namespace fs = std::filesystem;
using nlohmann::json;

RunOutputs::RunOutputs(std::string dir) : dir_(std::move(dir)) {
  for (const char* name : {"report.json", "manifest.json", "scenario.scn", "trajectories.csv"}) {
    if (!fs::exists(fs::path(dir_) / name)) {
      throw StructuralError(fmt::format("run directory '{}' lacks {}", dir_, name));
    }
  }
  report_ = json::parse(read_file((fs::path(dir_) / "report.json").string()));
  manifest_ = json::parse(read_file((fs::path(dir_) / "manifest.json").string()));
  scenario_ = Scenario::load((fs::path(dir_) / "scenario.scn").string());
}

const RecordedTrajectories& RunOutputs::trajectories() const {
  if (!trajectories_) trajectories_ = read_trajectories_csv((fs::path(dir_) / "trajectories.csv").string());
  return *trajectories_;
}

namespace {

Verdict verdict(double measured, bool pass, std::string detail = {}) {
  Verdict v;
  v.measured = measured;
  v.pass = pass;
  v.detail = std::move(detail);
  return v;
}

Verdict at_most(double measured, double tol, std::string detail = {}) {
  return verdict(measured, std::isfinite(measured) && measured <= tol, std::move(detail));
}

const json& last_branch_checkpoint(const json& report) {
  const json* found = nullptr;
  for (const auto& c : report.at("checkpoints")) {
    if (c.contains("branches")) found = &c;
  }
  if (!found) throw StructuralError("report has no branch statistics");
  return *found;
}

Verdict check_equivariance(const RunOutputs& o, double tol) {
  double worst = 0.0;
  std::size_t n = 0;
  for (const auto& c : o.report().at("checkpoints")) {
    const auto& e = c.at("equivariance");
    if (e.is_null()) continue;
    double floor = e.at("noise_floor").get<double>();
    worst = std::max(worst, e.at("distance").get<double>() / floor);
    ++n;
  }
  if (n == 0) return verdict(0.0, false, "no equivariance checkpoints");
  return at_most(worst, tol, fmt::format("max distance / noise floor over {} checkpoints", n));
}

Verdict check_born_rule(const RunOutputs& o, double tol) {
  const json& c = last_branch_checkpoint(o.report());
  const auto& b = c.at("branches");
  auto weights = b.at("weights").get<std::vector<double>>();
  auto freqs = b.at("frequencies").get<std::vector<double>>();
  double n = o.report().at("samples").get<double>();
  double worst = 0.0;
  std::string detail;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    double w = weights[i];
    double se = std::sqrt(std::max(w * (1.0 - w), 1e-300) / n);
    double z = std::abs(freqs[i] - w) / se;
    worst = std::max(worst, z);
    detail += fmt::format("{}branch {}: frequency {:.4f} weight {:.4f}", i ? "; " : "", i, freqs[i], w);
  }
  return at_most(worst, tol, detail + " (standard errors)");
}

Verdict check_collapse(const RunOutputs& o, double tol) {
  const auto& c = o.report().at("collapse");
  if (c.at("onset").is_null()) return verdict(0.0, false, "branch overlap never fell below the threshold");
  double diff = c.at("max_relative_difference").get<double>();
  auto changes = c.at("membership_changes").get<std::size_t>();
  return verdict(diff, diff < tol && changes == 0,
                 fmt::format("onset t = {}, {} branch changes", c.at("onset").get<double>(), changes));
}

Verdict check_stationarity(const RunOutputs& o, double tol) {
  return at_most(o.report().at("stationarity").at("max_displacement").get<double>(), tol, "max displacement");
}

Verdict check_norm(const RunOutputs& o, double tol) {
  return at_most(o.report().at("conservation").at("max_norm_drift_per_step").get<double>(), tol, "per half step");
}

Verdict check_energy(const RunOutputs& o, double tol) {
  return at_most(o.report().at("conservation").at("energy_relative_drift").get<double>(), tol, "relative");
}

Verdict check_leakage(const RunOutputs& o, double tol) {
  return at_most(o.report().at("conservation").at("max_leakage").get<double>(), tol, "truncation shell");
}

Verdict check_cross(const RunOutputs& o, double tol) {
  double worst = -1.0;
  for (const auto& c : o.report().at("checkpoints")) {
    if (c.contains("cross_check")) worst = std::max(worst, c.at("cross_check").get<double>());
  }
  if (worst < 0.0) return verdict(0.0, false, "run has no cross-check");
  return at_most(worst, tol, "max |rho_grid - rho_fock|");
}

Verdict check_node_events(const RunOutputs& o, double tol) {
  const auto& events = o.manifest().at("node_events");
  double count = static_cast<double>(events.size());
  return verdict(count, count >= tol, "node events listed in the manifest");
}

Verdict check_branch_residual(const RunOutputs& o, double tol) {
  double worst = 0.0;
  for (const auto& c : o.report().at("checkpoints")) {
    if (c.contains("branches")) worst = std::max(worst, c.at("branches").at("residual").get<double>());
  }
  return at_most(worst, tol, "uncovered probability");
}

// Oracle: x(t) = c + p t / m + (x0 - c) sigma(t) / sigma0 along every axis.
Verdict check_free_gaussian(const RunOutputs& o, double tol) {
  const Scenario& s = o.scenario();
  auto terms = s.initial_state.expand(s.state_context());
  if (terms.size() != 1) return verdict(0.0, false, "initial state is not a single packet");
  for (const auto& f : terms[0].factors) {
    if (f.kind != Factor1D::Kind::gaussian) return verdict(0.0, false, "initial state is not a Gaussian packet");
  }
  double worst = 0.0;
  std::size_t count = 0;
  for (const auto& tr : o.trajectories().trajectories) {
    const auto& x0 = tr.points.front();
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      double t = tr.times[i];
      for (std::size_t d = 0; d < x0.size(); ++d) {
        const Factor1D& f = terms[0].factors[d];
        double spread = f.hbar * t / (2.0 * f.mass * f.width * f.width);
        double ratio = std::sqrt(1.0 + spread * spread);
        double oracle = f.center + f.momentum * t / f.mass + (x0[d] - f.center) * ratio;
        double err = std::abs(tr.points[i][d] - oracle) / std::max(std::abs(oracle), f.width);
        worst = std::max(worst, err);
      }
    }
    ++count;
  }
  if (count == 0) return verdict(0.0, false, "no recorded trajectories");
  return at_most(worst, tol, fmt::format("relative error over {} trajectories", count));
}

// Oracle: <q>(t) = x0 cos(w t) + p0 / w sin(w t) for unit-mass quadratures.
Verdict check_coherent(const RunOutputs& o, double tol) {
  const Scenario& s = o.scenario();
  auto terms = s.initial_state.expand(s.state_context());
  if (terms.size() != 1) return verdict(0.0, false, "initial state is not a single coherent state");
  std::vector<double> x0, p0;
  for (const auto& f : terms[0].factors) {
    if (f.kind != Factor1D::Kind::coherent) return verdict(0.0, false, "initial state is not coherent");
    double l = std::sqrt(f.hbar / (f.mass * f.frequency));
    x0.push_back(std::sqrt(2.0) * l * f.alpha.real());
    p0.push_back(std::sqrt(2.0) * f.hbar / l * f.alpha.imag());
  }
  const auto samples = o.report().at("samples").get<std::size_t>();
  const auto& rec = o.trajectories();
  double worst = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < rec.ids.size(); ++k) {
    if (rec.ids[k] < samples) continue;
    const auto& tr = rec.trajectories[k];
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      for (std::size_t d = 0; d < x0.size(); ++d) {
        double w = s.model.frequencies[d];
        double m = s.model.masses[d];
        double mean = x0[d] * std::cos(w * tr.times[i]) + p0[d] / (m * w) * std::sin(w * tr.times[i]);
        worst = std::max(worst, std::abs(tr.points[i][d] - mean));
      }
    }
    ++count;
  }
  if (count == 0) return verdict(0.0, false, "no pinned trajectories");
  return at_most(worst, tol, fmt::format("max |q(t) - <q>(t)| over {} pinned trajectories", count));
}

}  // namespace

const std::map<std::string, Checker>& checker_registry() {
  static const std::map<std::string, Checker> registry = {
      {"equivariance", check_equivariance},
      {"born_rule", check_born_rule},
      {"collapse", check_collapse},
      {"stationarity", check_stationarity},
      {"norm_drift", check_norm},
      {"energy_drift", check_energy},
      {"leakage", check_leakage},
      {"solver_cross_check", check_cross},
      {"node_events", check_node_events},
      {"branch_residual", check_branch_residual},
      {"free_gaussian_trajectory", check_free_gaussian},
      {"coherent_tracking", check_coherent},
  };
  return registry;
}

std::string scenario_dir() {
  if (const char* env = std::getenv("PILOTWAVE_SCENARIOS")) return env;
  return PILOTWAVE_SCENARIO_DIR;
}

std::string resolve_bundled(const std::string& name_or_path, const std::string& extension) {
  if (fs::exists(name_or_path) && fs::is_regular_file(name_or_path)) return name_or_path;
  fs::path p = fs::path(scenario_dir()) / name_or_path;
  if (p.extension() != extension) p += extension;
  if (fs::exists(p)) return p.string();
  throw Error(fmt::format("no such file or bundled name: '{}'", name_or_path));
}

Fixture load_fixture(const std::string& name_or_path) {
  std::string path = resolve_bundled(name_or_path, ".fix");
  ConfigTree tree = ConfigTree::load(path);
  Fixture f;
  f.name = fs::path(path).stem().string();
  f.scenario = tree.word("scenario");
  f.certification = tree.word_or("certification", "certified");
  if (f.certification != "certified" && f.certification != "diagnostics") {
    fail_at(tree.get("certification"), "certification", "expected certified or diagnostics");
  }
  for (const auto& e : tree.entries()) {
    if (e.key == "scenario" || e.key == "certification") continue;
    if (e.key.rfind("properties.", 0) != 0) fail_at(e.value, e.key, "unknown fixture key");
    const Value& v = e.value;
    if (!v.is_call() || v.text != "check") fail_at(v, e.key, "expected check(checker, tolerance = ..., basis = ...)");
    FixtureProperty p;
    p.name = e.key.substr(std::string("properties.").size());
    const Value* checker = v.argument("checker", 0);
    const Value* tol = v.argument("tolerance", 1);
    const Value* basis = v.argument("basis", 2);
    if (!checker || !tol) fail_at(v, e.key, "check(...) needs a checker and a tolerance");
    p.checker = as_word(*checker, e.key);
    p.tolerance = as_number(*tol, e.key);
    p.basis = basis ? as_word(*basis, e.key) : "numerical";
    if (!checker_registry().count(p.checker)) fail_at(*checker, e.key, fmt::format("unknown checker '{}'", p.checker));
    f.properties.push_back(p);
  }
  return f;
}

std::vector<Verdict> check_fixture(const Fixture& f, const std::string& run_dir) {
  RunOutputs outputs(run_dir);
  std::vector<Verdict> out;
  for (const auto& p : f.properties) {
    Verdict v = checker_registry().at(p.checker)(outputs, p.tolerance);
    v.property = p.name;
    v.checker = p.checker;
    v.tolerance = p.tolerance;
    out.push_back(v);
  }
  bool certified = outputs.manifest().at("certification").at("certified").get<bool>();
  Verdict c;
  c.property = "certification";
  c.checker = "certification";
  c.measured = certified ? 0.0 : 2.0;
  c.pass = (f.certification == "certified") == certified;
  std::string codes;
  for (const auto& d : outputs.manifest().at("certification").at("diagnostics")) {
    codes += (codes.empty() ? "" : ",") + d.at("code").get<std::string>();
  }
  c.detail = fmt::format("expected {}, got {}{}", f.certification, certified ? "certified" : "diagnostics",
                         codes.empty() ? "" : " (" + codes + ")");
  out.push_back(c);
  return out;
}

std::vector<std::string> manifest_checkers(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::vector<std::string> out;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string id;
    if (ls >> id) out.push_back(id);
  }
  return out;
}

}  // namespace pilotwave
