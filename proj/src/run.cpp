#include "pilotwave/run.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include <fmt/format.h>

namespace pilotwave {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Runs fn(i) for i in [0, n) over `threads` contiguous chunks. The first
// failure is rethrown with its item index.
template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  std::mutex mu;
  std::exception_ptr failure;
  std::size_t failed_at = n;
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
        return;
      }
    }
  };
  if (threads == 1) {
    work(0, n);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, n * t / threads, n * (t + 1) / threads);
    for (auto& th : pool) th.join();
  }
  if (failure) {
    try {
      std::rethrow_exception(failure);
    } catch (const std::exception& e) {
      throw Error(fmt::format("trajectory {}: {}", failed_at, e.what()));
    }
  }
}

std::uint64_t salt_seed(std::uint64_t seed, std::uint64_t salt) { return stream_engine(seed, salt)(); }

constexpr std::uint64_t kSaltInitial = 0x1000;
constexpr std::uint64_t kSaltEquivariance = 0x2000;

PointSet initial_positions(const Scenario& s, const WaveSnapshot& psi, SamplingDiagnostics& diag) {
  const std::size_t dim = s.dimension();
  const std::size_t n = s.samples;
  const auto& dist = s.distribution;
  switch (dist.kind) {
    case InitialDistribution::Kind::equilibrium:
      return sample_equilibrium(psi, n, salt_seed(s.seed, kSaltInitial), &diag);
    case InitialDistribution::Kind::point: {
      PointSet ps{dim, {}};
      for (std::size_t i = 0; i < n; ++i) ps.coords.insert(ps.coords.end(), dist.center.begin(), dist.center.end());
      diag = {"point", 1.0, 1.0, true};
      return ps;
    }
    case InitialDistribution::Kind::gaussian: {
      PointSet ps{dim, std::vector<double>(n * dim)};
      std::normal_distribution<double> normal;
      std::uint64_t seed = salt_seed(s.seed, kSaltInitial);
      for (std::size_t i = 0; i < n; ++i) {
        auto eng = stream_engine(seed, i);
        for (std::size_t d = 0; d < dim; ++d) ps.coords[i * dim + d] = dist.center[d] + dist.width[d] * normal(eng);
      }
      diag = {"gaussian", 1.0, 1.0, true};
      return ps;
    }
  }
  return {};
}

double max_density_difference(const WaveSnapshot& grid, const WaveSnapshot& other) {
  auto axes = grid.support();
  auto a = grid.tabulate(axes);
  auto b = other.tabulate(axes);
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

std::vector<std::string> coordinate_labels(const Scenario& s) {
  std::vector<std::string> out;
  if (s.model.kind == ModelKind::field_mode && s.model.basis.quadrature_count() == s.dimension()) {
    for (std::size_t j = 0; j < s.dimension(); ++j) out.push_back(s.model.basis.quadrature_label(j));
    return out;
  }
  const char* names[] = {"x", "y", "z"};
  for (std::size_t j = 0; j < s.dimension(); ++j) {
    out.push_back(s.dimension() <= 3 ? std::string(names[j]) : fmt::format("x{}", j));
  }
  if (s.model.kind == ModelKind::field_mode) {
    for (std::size_t j = 0; j < s.dimension(); ++j) out[j] = fmt::format("q{}", j);
  }
  return out;
}

RunResult run_ensemble(const Scenario& s, const RunOptions& options) {
  auto problems = validate_scenario(s);
  if (!problems.empty()) {
    std::string msg = "invalid scenario:";
    for (const auto& d : problems) msg += fmt::format(" [{}] {};", d.code, d.message);
    throw StructuralError(msg);
  }
  const std::size_t dim = s.dimension();
  const StateContext ctx = s.state_context();
  const auto terms = s.initial_state.expand(ctx);
  const double tau = 0.5 * s.dt;

  RunResult r;
  r.scenario = s.name;
  r.seed = s.seed;
  r.solver = s.solver == SolverKind::grid ? "grid" : "fock";
  r.labels = coordinate_labels(s);

  const double scale = normalization(s, s.solver, terms);
  auto full = make_evolution(s, s.solver, terms, scale, tau);
  r.scheme = full->scheme();

  std::vector<std::unique_ptr<Evolution>> branches;
  if (s.branches == BranchRule::terms) {
    for (const auto& t : s.initial_state.top_terms()) {
      branches.push_back(make_evolution(s, s.solver, t.expand(ctx), scale, tau));
    }
  }
  std::unique_ptr<Evolution> other;
  if (s.cross_check) {
    SolverKind kind = s.solver == SolverKind::grid ? SolverKind::fock : SolverKind::grid;
    Scenario alt = s;
    alt.scheme = "auto";
    other = make_evolution(alt, kind, terms, normalization(alt, kind, terms), tau);
  }

  GuidanceLaw law = GuidanceLaw::from(s.model);
  NodeSettings node;
  node.density_floor = s.node_policy.density_floor;
  r.characteristic_velocity = full->characteristic_velocity();
  double v_char = r.characteristic_velocity > 0.0 ? r.characteristic_velocity : 1.0;
  node.v_max = s.node_policy.v_max > 0.0 ? s.node_policy.v_max : 10.0 * v_char;
  r.v_max = node.v_max;

  SnapshotPtr s0 = full->snapshot();
  r.initial_norm2 = full->norm2();
  r.initial_energy = full->energy();

  // Initial configurations: ensemble first, then pinned starts.
  PointSet pos = initial_positions(s, *s0, r.sampling);
  r.samples = pos.size();
  for (const auto& p : s.pinned) pos.coords.insert(pos.coords.end(), p.begin(), p.end());
  r.pinned = s.pinned.size();
  const std::size_t total = pos.size();
  for (std::size_t i = 0; i < total; ++i) {
    if (!s0->contains(pos.point(i))) {
      throw DomainError(fmt::format("trajectory {}: starting configuration outside the domain", i));
    }
  }
  r.initial_positions = pos;
  r.exited.assign(total, false);

  for (std::size_t i = 0; i < r.pinned; ++i) r.recorded_ids.push_back(r.samples + i);
  for (std::size_t i = 0; i < std::min(s.recorded, r.samples); ++i) r.recorded_ids.push_back(i);
  r.recorded.resize(r.recorded_ids.size());
  for (std::size_t k = 0; k < r.recorded_ids.size(); ++k) {
    auto p = pos.point(r.recorded_ids[k]);
    r.recorded[k].times.push_back(0.0);
    r.recorded[k].points.emplace_back(p.begin(), p.end());
    r.recorded[k].node_flags.push_back(false);
  }

  const std::size_t steps = s.step_count();
  const auto checkpoint_steps = s.checkpoint_steps();
  std::size_t next_checkpoint = 0;

  std::vector<StepOutcome> outcomes(total);
  std::vector<std::size_t> dwell(total, 0);
  std::vector<bool> dwell_flagged(total, false);
  std::vector<int> onset_branch;
  std::vector<double> rel_diff(total, 0.0);
  std::vector<int> changed(total, 0);
  std::unique_ptr<SuperlevelBranches> superlevel;

  double evolution_s = 0.0, trajectory_s = 0.0, statistics_s = 0.0;
  double prev_norm = r.initial_norm2;

  auto advance_all = [&] {
    auto t0 = Clock::now();
    full->advance();
    for (auto& b : branches) b->advance();
    if (other) other->advance();
    double n2 = full->norm2();
    r.max_norm_drift = std::max(r.max_norm_drift, std::abs(n2 - prev_norm));
    prev_norm = n2;
    evolution_s += seconds_since(t0);
  };

  auto branch_snapshots = [&] {
    std::vector<SnapshotPtr> out;
    for (auto& b : branches) out.push_back(b->snapshot());
    return out;
  };

  for (std::size_t n = 0; n < steps; ++n) {
    const double t = static_cast<double>(n) * s.dt;
    advance_all();
    SnapshotPtr half = full->snapshot();
    advance_all();
    SnapshotPtr s1 = full->snapshot();
    const double t1 = t + s.dt;

    auto tt = Clock::now();
    parallel_for(total, options.threads, [&](std::size_t i) {
      outcomes[i] = {};
      if (r.exited[i]) return;
      outcomes[i] = rk4_step(pos.point(i), s.dt, *s0, *half, *s1, law, node);
    });
    for (std::size_t i = 0; i < total; ++i) {
      const auto& o = outcomes[i];
      if (o.exited) {
        r.exited[i] = true;
        r.exits.push_back({i, t, 0.0});
      }
      if (o.node) {
        r.node_events.push_back({i, t, o.node_density});
        if (++dwell[i] > s.node_policy.dwell_limit && !dwell_flagged[i]) {
          dwell_flagged[i] = true;
          ++r.dwell_violations;
        }
      } else {
        dwell[i] = 0;
      }
      auto p = pos.point(i);
      auto p0 = r.initial_positions.point(i);
      for (std::size_t d = 0; d < dim; ++d) r.max_displacement = std::max(r.max_displacement, std::abs(p[d] - p0[d]));
    }
    for (std::size_t k = 0; k < r.recorded_ids.size(); ++k) {
      auto p = pos.point(r.recorded_ids[k]);
      r.recorded[k].times.push_back(t1);
      r.recorded[k].points.emplace_back(p.begin(), p.end());
      r.recorded[k].node_flags.push_back(outcomes[r.recorded_ids[k]].node);
    }
    trajectory_s += seconds_since(tt);

    auto ts = Clock::now();
    if (next_checkpoint < checkpoint_steps.size() && checkpoint_steps[next_checkpoint] == n + 1) {
      CheckpointReport c;
      c.step = n + 1;
      c.time = t1;
      PointSet ensemble{dim, std::vector<double>(pos.coords.begin(),
                                                 pos.coords.begin() + static_cast<std::ptrdiff_t>(r.samples * dim))};
      if (r.samples >= 100) {
        c.equivariance = equivariance_distance(ensemble, *s1, salt_seed(s.seed, kSaltEquivariance + next_checkpoint));
      }
      c.norm2 = full->norm2();
      c.energy = full->energy();
      c.leakage = full->leakage();
      c.boundary = full->boundary_amplitude();
      c.component_weights = full->component_weights();
      if (other) {
        c.cross_check = s.solver == SolverKind::grid ? max_density_difference(*s1, *other->snapshot())
                                                     : max_density_difference(*other->snapshot(), *s1);
      }
      if (s.branches != BranchRule::none) {
        BranchReport br;
        std::vector<int> member(r.samples, -1);
        std::vector<SnapshotPtr> snaps;
        if (s.branches == BranchRule::terms) {
          snaps = branch_snapshots();
          br.analysis = analyze_branches(*s1, snaps);
          parallel_for(r.samples, options.threads,
                       [&](std::size_t i) { member[i] = branch_membership(snaps, pos.point(i)); });
        } else {
          superlevel = std::make_unique<SuperlevelBranches>(*s1, s.branch_level);
          br.analysis = superlevel->analysis();
          for (std::size_t i = 0; i < r.samples; ++i) member[i] = superlevel->membership(pos.point(i));
        }
        br.counts.assign(br.analysis.weights.size(), 0);
        for (int m : member) {
          if (m >= 0 && static_cast<std::size_t>(m) < br.counts.size()) {
            ++br.counts[static_cast<std::size_t>(m)];
          } else {
            ++br.unassigned;
          }
        }
        for (auto cnt : br.counts) br.frequencies.push_back(static_cast<double>(cnt) / static_cast<double>(r.samples));
        if (!r.collapse.onset && s.branches == BranchRule::terms && br.analysis.max_overlap < s.overlap_threshold) {
          r.collapse.onset = t1;
          onset_branch = member;
        }
        c.branches = std::move(br);
      }
      if (options.keep_positions) c.positions = ensemble;
      r.checkpoints.push_back(std::move(c));
      ++next_checkpoint;
    }

    if (r.collapse.onset) {
      auto snaps = branch_snapshots();
      parallel_for(r.samples, options.threads, [&](std::size_t i) {
        if (r.exited[i] || onset_branch[i] < 0) return;
        auto x = pos.point(i);
        int now = branch_membership(snaps, x);
        if (now != onset_branch[i]) ++changed[i];
        const std::size_t f = s1->internal_dim();
        std::vector<cplx> vals(f), grads(f * dim);
        std::vector<double> vf(dim), vb(dim);
        s1->evaluate(x, vals, grads);
        velocity_from_values(law, x, vals, grads, vf);
        snaps[static_cast<std::size_t>(onset_branch[i])]->evaluate(x, vals, grads);
        velocity_from_values(law, x, vals, grads, vb);
        double diff = 0.0, mag = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
          diff += (vf[d] - vb[d]) * (vf[d] - vb[d]);
          mag += vb[d] * vb[d];
        }
        rel_diff[i] = std::max(rel_diff[i], std::sqrt(diff) / std::max(std::sqrt(mag), v_char));
      });
      r.collapse.checked += r.samples;
    }
    statistics_s += seconds_since(ts);
    s0 = s1;
  }

  for (std::size_t i = 0; i < total; ++i) {
    r.collapse.max_relative_difference = std::max(r.collapse.max_relative_difference, rel_diff[i]);
    r.collapse.membership_changes += changed[i] > 0 ? 1 : 0;
  }
  for (const auto& c : r.checkpoints) {
    double denom = std::abs(r.initial_energy) > 0.0 ? std::abs(r.initial_energy) : 1.0;
    r.energy_drift = std::max(r.energy_drift, std::abs(c.energy - r.initial_energy) / denom);
    r.max_leakage = std::max(r.max_leakage, c.leakage);
    r.max_boundary = std::max(r.max_boundary, c.boundary);
  }
  r.final_positions = pos;
  if (!options.final_state_path.empty()) full->save(options.final_state_path);

  auto add = [&](std::string code, std::string msg) { r.diagnostics.push_back({std::move(code), std::move(msg)}); };
  if (!r.node_events.empty()) add("NODE_EVENTS", fmt::format("{} node events", r.node_events.size()));
  if (r.dwell_violations > 0) {
    add("NODE_DWELL", fmt::format("{} trajectories dwelt near nodes for more than {} steps", r.dwell_violations,
                                  s.node_policy.dwell_limit));
  }
  if (!r.exits.empty()) add("DOMAIN_EXIT", fmt::format("{} trajectories left the domain", r.exits.size()));
  if (r.max_leakage > s.leakage_threshold) {
    add("LEAKAGE", fmt::format("truncation leakage {:.3g} exceeds {:.3g}", r.max_leakage, s.leakage_threshold));
  }
  if (r.max_boundary > 1e-6) add("BOUNDARY_CONTAMINATION", fmt::format("|psi| reaches {:.3g} near the boundary", r.max_boundary));
  if (r.max_norm_drift > 1e-8) add("NORM_DRIFT", fmt::format("norm drift {:.3g} per step", r.max_norm_drift));
  if (r.energy_drift > 1e-6) add("ENERGY_DRIFT", fmt::format("relative energy drift {:.3g}", r.energy_drift));
  if (!r.sampling.converged) add("SAMPLING", fmt::format("Metropolis R-hat {:.4f}", r.sampling.rhat));
  if (s.distribution.kind == InitialDistribution::Kind::equilibrium) {
    for (const auto& c : r.checkpoints) {
      if (c.equivariance && !c.equivariance->passes()) {
        add("EQUIVARIANCE", fmt::format("distance {:.4g} exceeds twice the noise floor {:.4g} at t = {}",
                                        c.equivariance->distance, c.equivariance->noise_floor, c.time));
      }
    }
  }
  for (const auto& c : r.checkpoints) {
    if (c.branches && c.branches->analysis.residual > 1e-6) {
      add("BRANCH_RESIDUAL", fmt::format("branches miss {:.3g} of the probability at t = {}",
                                         c.branches->analysis.residual, c.time));
    }
    if (c.cross_check && *c.cross_check > 1e-5) {
      add("CROSS_CHECK", fmt::format("solver densities differ by {:.3g} at t = {}", *c.cross_check, c.time));
    }
  }
  if (r.collapse.onset) {
    if (r.collapse.max_relative_difference >= 1e-8) {
      add("COLLAPSE", fmt::format("full and branch velocities differ by {:.3g} after t = {}",
                                  r.collapse.max_relative_difference, *r.collapse.onset));
    }
    if (r.collapse.membership_changes > 0) {
      add("BRANCH_SWITCH", fmt::format("{} trajectories changed branch", r.collapse.membership_changes));
    }
  }
  r.seconds_evolution = evolution_s;
  r.seconds_trajectories = trajectory_s;
  r.seconds_statistics = statistics_s;
  return r;
}

}  // namespace pilotwave
