#include "pilotwave/output.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "pilotwave/io.hpp"

namespace pilotwave {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* const kDataFiles[] = {"scenario.scn",   "trajectories.csv", "positions.csv",
                                  "histograms.csv", "report.json",      "psi_final.bin"};

json equivariance_json(const EquivarianceResult& e) {
  return {{"distance", e.distance},
          {"noise_floor", e.noise_floor},
          {"passes", e.passes()},
          {"bins", e.bins},
          {"bin_width", e.bin_width},
          {"outside_empirical", e.outside_empirical},
          {"outside_expected", e.outside_expected},
          {"metric", e.marginal ? "marginal_l1" : "histogram_l1"}};
}

json branch_json(const BranchReport& b) {
  return {{"weights", b.analysis.weights},         {"overlaps", b.analysis.overlaps},
          {"max_overlap", b.analysis.max_overlap}, {"residual", b.analysis.residual},
          {"counts", b.counts},                    {"frequencies", b.frequencies},
          {"unassigned", b.unassigned}};
}

json events_json(const std::vector<TrajectoryEvent>& events, bool with_density) {
  json out = json::array();
  for (const auto& e : events) {
    json j = {{"trajectory", e.trajectory}, {"time", e.time}};
    if (with_density) j["density"] = e.density;
    out.push_back(j);
  }
  return out;
}

std::string num(double v) { return fmt::format("{:.17g}", v); }

}  // namespace

json report_json(const RunResult& r) {
  json j;
  j["scenario"] = r.scenario;
  j["seed"] = r.seed;
  j["solver"] = r.solver;
  j["scheme"] = r.scheme;
  j["coordinates"] = r.labels;
  j["samples"] = r.samples;
  j["pinned"] = r.pinned;
  j["characteristic_velocity"] = r.characteristic_velocity;
  j["v_max"] = r.v_max;
  j["sampling"] = {{"method", r.sampling.method},
                   {"rhat", r.sampling.rhat},
                   {"acceptance", r.sampling.acceptance},
                   {"converged", r.sampling.converged}};
  auto& cps = j["checkpoints"] = json::array();
  for (const auto& c : r.checkpoints) {
    json cj = {{"step", c.step},
               {"time", c.time},
               {"norm2", c.norm2},
               {"energy", c.energy},
               {"leakage", c.leakage},
               {"boundary", c.boundary},
               {"component_weights", c.component_weights}};
    cj["equivariance"] = c.equivariance ? equivariance_json(*c.equivariance) : json(nullptr);
    if (c.branches) cj["branches"] = branch_json(*c.branches);
    if (c.cross_check) cj["cross_check"] = *c.cross_check;
    cps.push_back(cj);
  }
  j["conservation"] = {{"initial_norm2", r.initial_norm2},
                       {"max_norm_drift_per_step", r.max_norm_drift},
                       {"initial_energy", r.initial_energy},
                       {"energy_relative_drift", r.energy_drift},
                       {"max_leakage", r.max_leakage},
                       {"max_boundary", r.max_boundary}};
  json collapse = {{"max_relative_difference", r.collapse.max_relative_difference},
                   {"membership_changes", r.collapse.membership_changes},
                   {"checked", r.collapse.checked}};
  collapse["onset"] = r.collapse.onset ? json(*r.collapse.onset) : json(nullptr);
  j["collapse"] = collapse;
  j["node_events"] = events_json(r.node_events, true);
  j["domain_exits"] = events_json(r.exits, false);
  j["dwell_violations"] = r.dwell_violations;
  j["stationarity"] = {{"max_displacement", r.max_displacement}};
  json diags = json::array();
  for (const auto& d : r.diagnostics) diags.push_back({{"code", d.code}, {"message", d.message}});
  j["certification"] = {{"certified", r.certified()}, {"exit_code", r.exit_code()}, {"diagnostics", diags}};
  return j;
}

std::string trajectories_csv(const RunResult& r) {
  std::string out = "trajectory,t";
  for (const auto& l : r.labels) out += "," + l;
  out += ",node_flag\n";
  for (std::size_t k = 0; k < r.recorded.size(); ++k) {
    const auto& tr = r.recorded[k];
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      out += fmt::format("{},{}", r.recorded_ids[k], num(tr.times[i]));
      for (double v : tr.points[i]) out += "," + num(v);
      out += tr.node_flags[i] ? ",1\n" : ",0\n";
    }
  }
  return out;
}

std::string positions_csv(const RunResult& r) {
  std::string out = "trajectory";
  for (const auto& l : r.labels) out += "," + l + "_0";
  for (const auto& l : r.labels) out += "," + l;
  out += ",exited\n";
  for (std::size_t i = 0; i < r.final_positions.size(); ++i) {
    out += fmt::format("{}", i);
    for (double v : r.initial_positions.point(i)) out += "," + num(v);
    for (double v : r.final_positions.point(i)) out += "," + num(v);
    out += r.exited[i] ? ",1\n" : ",0\n";
  }
  return out;
}

std::string histograms_csv(const RunResult& r) {
  std::string out = "checkpoint,t,coordinate,bin_min,bin_max,empirical,expected\n";
  for (std::size_t c = 0; c < r.checkpoints.size(); ++c) {
    const auto& cp = r.checkpoints[c];
    if (!cp.equivariance) continue;
    for (std::size_t d = 0; d < cp.equivariance->marginals.size(); ++d) {
      const auto& h = cp.equivariance->marginals[d];
      for (std::size_t b = 0; b < h.empirical.size(); ++b) {
        double lo = h.min + static_cast<double>(b) * h.width;
        out += fmt::format("{},{},{},{},{},{},{}\n", c, num(cp.time), r.labels[d], num(lo), num(lo + h.width),
                           num(h.empirical[b]), num(h.expected[b]));
      }
    }
  }
  return out;
}

RecordedTrajectories read_trajectories_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  RecordedTrajectories out;
  if (!std::getline(in, line)) throw StructuralError(fmt::format("{} is empty", path));
  std::vector<std::string> header;
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 4 || header[0] != "trajectory" || header[1] != "t" || header.back() != "node_flag") {
    throw StructuralError(fmt::format("{} does not have the trajectory header", path));
  }
  out.labels.assign(header.begin() + 2, header.end() - 1);
  const std::size_t dim = out.labels.size();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != dim + 3) throw StructuralError(fmt::format("malformed row in {}: {}", path, line));
    auto id = static_cast<std::size_t>(row[0]);
    if (out.ids.empty() || out.ids.back() != id) {
      out.ids.push_back(id);
      out.trajectories.emplace_back();
    }
    auto& tr = out.trajectories.back();
    tr.times.push_back(row[1]);
    tr.points.emplace_back(row.begin() + 2, row.begin() + 2 + static_cast<std::ptrdiff_t>(dim));
    tr.node_flags.push_back(row.back() != 0.0);
  }
  return out;
}

json write_run(const RunResult& r, const Scenario& s, const std::string& dir) {
  fs::create_directories(dir);
  auto path = [&](const char* name) { return (fs::path(dir) / name).string(); };
  std::string scenario_text = s.source.dump();
  write_file_atomic(path("scenario.scn"), scenario_text);
  write_file_atomic(path("trajectories.csv"), trajectories_csv(r));
  write_file_atomic(path("positions.csv"), positions_csv(r));
  write_file_atomic(path("histograms.csv"), histograms_csv(r));
  write_file_atomic(path("report.json"), report_json(r).dump(1) + "\n");

  json m;
  m["scenario"] = r.scenario;
  m["scenario_hash"] = sha256_hex(scenario_text);
  m["tool_version"] = kToolVersion;
  m["seed"] = r.seed;
  auto& files = m["files"] = json::array();
  for (const char* name : kDataFiles) {
    if (!fs::exists(path(name))) continue;
    files.push_back({{"name", name}, {"sha256", sha256_file(path(name))}, {"bytes", fs::file_size(path(name))}});
  }
  m["timings"] = {{"evolution_seconds", r.seconds_evolution},
                  {"trajectory_seconds", r.seconds_trajectories},
                  {"statistics_seconds", r.seconds_statistics}};
  std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  m["created"] = stamp;
  json diags = json::array();
  for (const auto& d : r.diagnostics) diags.push_back({{"code", d.code}, {"message", d.message}});
  m["certification"] = {{"certified", r.certified()}, {"exit_code", r.exit_code()}, {"diagnostics", diags}};
  m["node_events"] = events_json(r.node_events, true);
  write_file_atomic(path("manifest.json"), m.dump(1) + "\n");
  return m;
}

void remove_run_outputs(const std::string& dir) {
  std::error_code ec;
  for (const char* name : kDataFiles) {
    fs::remove(fs::path(dir) / name, ec);
    fs::remove(fs::path(dir) / (std::string(name) + ".tmp"), ec);
  }
  fs::remove(fs::path(dir) / "manifest.json", ec);
  fs::remove(fs::path(dir) / "manifest.json.tmp", ec);
}

}  // namespace pilotwave
