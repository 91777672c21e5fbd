#include "pilotwave/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <ostream>

#include <fmt/format.h>

#include "pilotwave/beables.hpp"
#include "pilotwave/fixtures.hpp"
#include "pilotwave/io.hpp"
#include "pilotwave/output.hpp"
#include "pilotwave/run.hpp"

namespace pilotwave {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> with_seed(std::vector<std::string> overrides, std::optional<std::uint64_t> seed) {
  if (seed) overrides.push_back(fmt::format("ensemble.seed={}", *seed));
  return overrides;
}

void print_diagnostics(std::ostream& out, const std::vector<Diagnostic>& ds) {
  for (const auto& d : ds) out << fmt::format("  [{}] {}\n", d.code, d.message);
}

}  // namespace

int cmd_validate(const std::string& scenario, const std::vector<std::string>& overrides, std::ostream& out,
                 std::ostream& err) {
  std::string path;
  try {
    path = resolve_bundled(scenario, ".scn");
    Scenario s = Scenario::load(path, overrides);
    auto ds = validate_scenario(s);
    if (ds.empty()) {
      out << fmt::format("{}: ok\n", path);
      return kExitCertified;
    }
    err << fmt::format("{}: {} problem(s)\n", path, ds.size());
    print_diagnostics(err, ds);
    return kExitFailure;
  } catch (const std::exception& e) {
    err << fmt::format("{}: {}\n", path.empty() ? scenario : path, e.what());
    return kExitFailure;
  }
}

int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err) {
  std::string path;
  Scenario s;
  try {
    path = resolve_bundled(args.scenario, ".scn");
    s = Scenario::load(path, with_seed(args.overrides, args.seed));
  } catch (const std::exception& e) {
    err << fmt::format("{}: {}\n", path.empty() ? args.scenario : path, e.what());
    return kExitFailure;
  }
  auto ds = validate_scenario(s);
  if (!ds.empty()) {
    err << fmt::format("{}: {} problem(s)\n", path, ds.size());
    print_diagnostics(err, ds);
    return kExitFailure;
  }
  const std::string dir = args.output.empty() ? fmt::format("run_{}", s.name) : args.output;
  try {
    fs::create_directories(dir);
    RunOptions options;
    options.threads = std::max<std::size_t>(1, args.threads);
    options.final_state_path = (fs::path(dir) / "psi_final.bin").string();
    RunResult r = run_ensemble(s, options);
    write_run(r, s, dir);
    out << fmt::format("{}: {} trajectories, {} checkpoints, scheme {}\n", s.name, r.samples + r.pinned,
                       r.checkpoints.size(), r.scheme);
    for (const auto& c : r.checkpoints) {
      std::string eq = c.equivariance ? fmt::format("distance {:.4f} (floor {:.4f})", c.equivariance->distance,
                                                    c.equivariance->noise_floor)
                                      : "distance n/a";
      out << fmt::format("  t = {:<10.6g} {}  norm {:.12f}\n", c.time, eq, c.norm2);
    }
    if (r.certified()) {
      out << "certified\n";
    } else {
      out << "completed with diagnostics:\n";
      print_diagnostics(out, r.diagnostics);
    }
    out << fmt::format("outputs in {}\n", dir);
    return r.exit_code();
  } catch (const std::exception& e) {
    remove_run_outputs(dir);
    err << fmt::format("{}: run failed: {}\n", s.name, e.what());
    return kExitFailure;
  }
}

int cmd_list_scenarios(std::ostream& out, std::ostream& err) {
  std::vector<fs::path> files;
  std::error_code ec;
  for (const auto& e : fs::directory_iterator(scenario_dir(), ec)) {
    if (e.path().extension() == ".scn") files.push_back(e.path());
  }
  if (ec) {
    err << fmt::format("cannot list {}: {}\n", scenario_dir(), ec.message());
    return kExitFailure;
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    try {
      ConfigTree tree = ConfigTree::load(f.string());
      out << fmt::format("{:<24} {}\n", f.stem().string(), tree.word_or("description", ""));
    } catch (const std::exception& e) {
      out << fmt::format("{:<24} (unreadable: {})\n", f.stem().string(), e.what());
    }
  }
  return kExitCertified;
}

int cmd_export(const ExportArgs& args, std::ostream& out, std::ostream& err) {
  try {
    if (!fs::is_directory(args.run_dir)) throw Error(fmt::format("no run directory '{}'", args.run_dir));
    Scenario s = Scenario::load((fs::path(args.run_dir) / "scenario.scn").string());
    auto rec = read_trajectories_csv((fs::path(args.run_dir) / "trajectories.csv").string());
    if (rec.trajectories.empty()) throw Error("run has no recorded trajectories");
    std::size_t k = 0;
    if (args.trajectory) {
      auto it = std::find(rec.ids.begin(), rec.ids.end(), *args.trajectory);
      if (it == rec.ids.end()) throw Error(fmt::format("trajectory {} was not recorded", *args.trajectory));
      k = static_cast<std::size_t>(it - rec.ids.begin());
    }
    const Trajectory& tr = rec.trajectories[k];
    const double t = args.time;
    const double eps = 1e-9 * std::max(1.0, tr.times.back());
    if (t < tr.times.front() - eps || t > tr.times.back() + eps) {
      throw RangeError(fmt::format("t = {} outside the run [{}, {}]", t, tr.times.front(), tr.times.back()));
    }
    std::string output = args.output;
    if (output.empty()) {
      output = (fs::path(args.run_dir) / fmt::format("{}_t{}.{}", args.kind, t, args.format)).string();
    }
    if (args.kind == "trajectory") {
      std::string csv = "t";
      for (const auto& l : rec.labels) csv += "," + l;
      csv += ",node_flag\n";
      for (std::size_t i = 0; i < tr.times.size() && tr.times[i] <= t + eps; ++i) {
        csv += fmt::format("{:.17g}", tr.times[i]);
        for (double v : tr.points[i]) csv += fmt::format(",{:.17g}", v);
        csv += tr.node_flags[i] ? ",1\n" : ",0\n";
      }
      write_file_atomic(output, csv);
      out << fmt::format("wrote {}\n", output);
      return kExitCertified;
    }
    if (s.model.kind != ModelKind::field_mode || s.model.basis.quadrature_count() != s.dimension()) {
      throw Error("field exports need a field_mode scenario with a mode basis");
    }
    const ModeBasis& basis = s.model.basis;
    Lattice lattice = Lattice::fitted(basis, args.lattice);
    FieldSnapshot field;
    if (args.kind == "E_T") {
      field = reconstruct_E_T(basis, tr, t, lattice);
    } else if (args.kind == "A" || args.kind == "B") {
      auto it = std::lower_bound(tr.times.begin(), tr.times.end(), t - eps);
      auto i = static_cast<std::size_t>(it - tr.times.begin());
      std::vector<double> q = tr.points[std::min(i, tr.points.size() - 1)];
      if (i < tr.times.size() && std::abs(tr.times[i] - t) > eps && i > 0) {
        double w = (t - tr.times[i - 1]) / (tr.times[i] - tr.times[i - 1]);
        for (std::size_t j = 0; j < q.size(); ++j) q[j] = (1.0 - w) * tr.points[i - 1][j] + w * tr.points[i][j];
      }
      field = args.kind == "A" ? reconstruct_A(basis, q, lattice) : reconstruct_B(basis, q, lattice);
      field.time = t;
    } else {
      throw Error(fmt::format("unknown export kind '{}' (A, B, E_T, trajectory)", args.kind));
    }
    if (args.format == "json") {
      field.write_json(output);
    } else if (args.format == "csv") {
      field.write_csv(output);
    } else {
      throw Error(fmt::format("unknown format '{}' (csv, json)", args.format));
    }
    out << fmt::format("wrote {} (max |{}| = {:.6g})\n", output, field.kind, field.max_abs());
    return kExitCertified;
  } catch (const std::exception& e) {
    err << fmt::format("export failed: {}\n", e.what());
    return kExitFailure;
  }
}

int cmd_check(const std::string& fixture, const std::string& output, std::size_t threads, std::ostream& out,
              std::ostream& err) {
  Fixture f;
  try {
    f = load_fixture(fixture);
  } catch (const std::exception& e) {
    err << fmt::format("{}: {}\n", fixture, e.what());
    return kExitFailure;
  }
  RunArgs run;
  run.scenario = f.scenario;
  run.output = output.empty() ? fmt::format("check_{}", f.name) : output;
  run.threads = threads;
  int code = cmd_run(run, out, err);
  if (code == kExitFailure) return kExitFailure;
  try {
    bool all = true;
    for (const auto& v : check_fixture(f, run.output)) {
      out << fmt::format("{} {:<28} measured {:<12.6g} tolerance {:<10.3g} {}\n", v.pass ? "PASS" : "FAIL",
                         v.property, v.measured, v.tolerance, v.detail);
      all = all && v.pass;
    }
    return all ? kExitCertified : kExitFailure;
  } catch (const std::exception& e) {
    err << fmt::format("{}: {}\n", f.name, e.what());
    return kExitFailure;
  }
}

}  // namespace pilotwave
