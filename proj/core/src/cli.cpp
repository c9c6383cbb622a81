#include "hjm/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "hjm/errors.hpp"
#include "hjm/extended_real.hpp"

namespace hjm {

namespace {

namespace fs = std::filesystem;

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string(), "output");
  out << content;
  if (!out) throw ConfigError("failed writing " + path.string(), "output");
}

void prepare_output(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory " + dir.string(), "output");
}

double mesh(const Scenario& s) { return s.dx + s.dt; }

double stability(const Problem& p) { return stability_constant(p.lagrangian, *p.lattice, p.initial); }

std::size_t grid_step(double t, double dt, const std::string& key) {
  const double k = std::round(t / dt);
  if (std::abs(k * dt - t) > 1e-9) throw ConfigError("probe time " + format_double(t) + " is not a multiple of dt", key);
  return static_cast<std::size_t>(k);
}

ValueGrid solve_problem(const Scenario& s, const Problem& p) {
  SolverOptions options;
  options.dt = s.dt;
  options.T = s.T;
  options.speeds = p.speeds;
  options.threads = s.threads;
  return solve(p.lattice, p.lagrangian, p.initial, options);
}

double speed_cap(const Problem& p) {
  double cap = p.speeds.back();
  for (const auto& node : p.lattice->nodes()) cap = std::min(cap, p.lagrangian.speed_bound(node.point));
  return cap;
}

int run_solve(const Scenario& s, const Problem& p, std::ostream& log) {
  const ValueGrid u = solve_problem(s, p);
  write_file(s.output / "value_grid.csv", value_grid_csv(u, p.sign));
  std::vector<AdmissibleCurve> curves;
  std::vector<double> horizons;
  for (const auto& probe : s.probes) {
    const std::size_t k = grid_step(probe.t, s.dt, "probes");
    curves.push_back(extract_trajectory(u, probe.x, u.time(k)));
    horizons.push_back(u.time(k));
  }
  write_file(s.output / "trajectories.csv", trajectories_csv(curves, horizons, s.dt));
  log << "solve: " << p.lattice->size() << " nodes, " << u.steps() << " steps, " << p.speeds.size()
      << " speeds -> " << (s.output / "value_grid.csv").string() << "\n";
  return exit_code::ok;
}

int run_verify(const Scenario& s, const Problem& p, std::ostream& log) {
  ValueGrid u = solve_problem(s, p);
  std::optional<std::pair<std::size_t, std::size_t>> anchor;
  if (s.inject_corruption) {
    const Corruption c = corruption_target(s, p, u);
    u = u.with_entry(c.node, c.step, u.at(c.node, c.step) - c.amount);
    anchor = std::make_pair(c.node, c.step);
    log << "verify: lowered U[" << c.node << "][" << c.step << "] by " << format_double(c.amount) << "\n";
  }
  const VerificationReport report = verify_grid(s, p, u, anchor);

  write_file(s.output / "report.txt", report.to_text());
  write_file(s.output / "report.csv", report.to_csv());
  for (const auto& r : report.records) {
    if (r.counterexample) write_file(s.output / ("counterexample_" + r.name + ".txt"), serialize(*r.counterexample));
  }
  const std::vector<double> deltas = {mesh(s), 2 * mesh(s), 4 * mesh(s), 8 * mesh(s), 16 * mesh(s)};
  write_file(s.output / "modulus.csv", modulus_csv(estimate_modulus(u, deltas, 32, s.seed)));

  for (const auto& r : report.records) {
    log << (r.pass ? "PASS " : "FAIL ") << r.name << " worst=" << format_double(r.worst_violation)
        << " tol=" << format_double(r.tolerance) << " samples=" << r.samples << "\n";
  }
  return report.all_passed() ? exit_code::ok : exit_code::verification_failed;
}

int run_transform(const Scenario& s, const Problem& p, std::ostream& log) {
  write_file(s.output / "legendre.csv", legendre_csv(p, s));
  log << "transform: " << p.lattice->size() << " nodes x " << (s.transform_samples + 1) << " speeds -> "
      << (s.output / "legendre.csv").string() << "\n";
  return exit_code::ok;
}

int run_converge(const Scenario& s, const Problem& p, std::ostream& log) {
  if (!p.hamiltonian.is_composite()) {
    throw ConfigError("converge needs the composite form with constant sigma and f", "hamiltonian");
  }
  const CompositeForm& form = p.hamiltonian.composite_form();
  if (!form.sigma.constant_value() || !form.f.constant_value()) {
    throw ConfigError("converge needs constant sigma and f", s.sigma.table ? "sigma" : "f");
  }
  const auto u0 = p.initial.closed_form();
  if (!u0) throw ConfigError("converge needs a closed-form u0 (constant, distance or bump)", "u0");

  RefinementProblem rp;
  rp.graph = p.graph;
  const HamiltonianSpec H = p.hamiltonian;
  const TransformGrid grid{s.p_max, s.n_p};
  const TransformMethod method = s.transform_method;
  rp.lagrangian = [H, grid, method](std::shared_ptr<const SpaceLattice>) { return Lagrangian(H, grid, method); };
  rp.initial = u0;
  const auto graph = p.graph;
  rp.exact = [graph, form, u0](const GraphPoint& x, double t) { return hopf_lax_value(*graph, form, u0, x, t); };
  rp.dx = s.dx;
  rp.dt = s.dt;
  rp.T = s.T;
  rp.policy = s.v_policy;
  rp.speed_count = s.v_count;
  const auto rows = refine_study(rp, s.levels);
  write_file(s.output / "convergence.csv", convergence_csv(rows));
  for (const auto& row : rows) {
    log << "level " << row.level << " dx=" << format_double(row.dx) << " dt=" << format_double(row.dt)
        << " max_error=" << format_double(row.max_error);
    if (row.observed_order) log << " order=" << format_double(*row.observed_order);
    log << "\n";
  }
  return exit_code::ok;
}

}  // namespace

std::optional<Command> parse_command(const std::string& name) {
  if (name == "solve") return Command::Solve;
  if (name == "verify") return Command::Verify;
  if (name == "transform") return Command::Transform;
  if (name == "converge") return Command::Converge;
  return std::nullopt;
}

Scenario with_overrides(Scenario s, const RunOverrides& overrides) {
  if (overrides.out) s.output = *overrides.out;
  if (overrides.seed) s.seed = *overrides.seed;
  if (overrides.orientation) {
    if (*overrides.orientation == Orientation::Max && s.tabulated) {
      throw ConfigError("orientation 'max' is only available for the composite form", "orientation");
    }
    s.orientation = *overrides.orientation;
  }
  return s;
}

int run(Command command, const Scenario& s, std::ostream& log) {
  const Problem p = build_problem(s);
  prepare_output(s.output);
  switch (command) {
    case Command::Solve:
      return run_solve(s, p, log);
    case Command::Verify:
      return run_verify(s, p, log);
    case Command::Transform:
      return run_transform(s, p, log);
    case Command::Converge:
      return run_converge(s, p, log);
  }
  throw InternalError("unhandled command");
}

int run(const std::string& command, const std::filesystem::path& scenario_path, const RunOverrides& overrides,
        std::ostream& log, std::ostream& err) {
  const auto cmd = parse_command(command);
  if (!cmd) {
    err << "error: unknown command '" << command << "' (expected solve, verify, transform or converge)\n";
    return exit_code::config_error;
  }
  try {
    const Scenario s = with_overrides(load_scenario(scenario_path), overrides);
    return run(*cmd, s, log);
  } catch (const ConfigError& e) {
    err << "configuration error";
    if (!e.key().empty()) err << " [" << e.key() << "]";
    err << ": " << e.what() << "\n";
    return exit_code::config_error;
  } catch (const InputError& e) {
    err << "configuration error: " << e.what() << "\n";
    return exit_code::config_error;
  } catch (const AssumptionError& e) {
    err << "configuration error (assumption): " << e.what() << "\n";
    return exit_code::config_error;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return exit_code::internal_error;
  }
}

std::string value_grid_csv(const ValueGrid& u, double sign) {
  std::ostringstream out;
  out << "node_id,edge_id,offset,t,U\n";
  const auto& lattice = u.lattice();
  for (std::size_t k = 0; k <= u.steps(); ++k) {
    const std::string t = format_double(u.time(k));
    for (std::size_t i = 0; i < lattice.size(); ++i) {
      const auto& pt = lattice.node(i).point;
      out << i << "," << pt.edge << "," << format_double(pt.offset) << "," << t << ","
          << format_double(sign * u.at(i, k)) << "\n";
    }
  }
  return out.str();
}

std::string trajectories_csv(const std::vector<AdmissibleCurve>& curves, const std::vector<double>& horizons,
                             double dt) {
  std::ostringstream out;
  out << "probe,step,h,edge_id,offset\n";
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const auto steps = static_cast<std::size_t>(std::llround(horizons[c] / dt));
    for (std::size_t j = 0; j <= steps; ++j) {
      const double h = dt * static_cast<double>(j);
      const GraphPoint x = curves[c].graph().canonical(curves[c].evaluate(h));
      out << c << "," << j << "," << format_double(h) << "," << x.edge << "," << format_double(x.offset) << "\n";
    }
  }
  return out.str();
}

std::string legendre_csv(const Problem& p, const Scenario& s) {
  std::ostringstream out;
  out << "node,v,L,roundtrip_error\n";
  const auto& lattice = *p.lattice;
  for (std::size_t i = 0; i < lattice.size(); ++i) {
    const GraphPoint& x = lattice.node(i).point;
    for (int j = 0; j <= s.transform_samples; ++j) {
      const double v = s.transform_v_max * static_cast<double>(j) / static_cast<double>(s.transform_samples);
      const ExtendedReal l = p.lagrangian(x, v);
      const double h_star_star = dual_roundtrip(p.lagrangian, x, v, s.transform_v_max, s.roundtrip_n_v);
      const double err = std::abs(h_star_star - p.hamiltonian(x, v));
      out << i << "," << format_double(v) << "," << l.to_string() << "," << format_double(err) << "\n";
    }
  }
  return out.str();
}

std::string convergence_csv(const std::vector<RefinementRow>& rows) {
  std::ostringstream out;
  out << "level,dx,dt,max_error,observed_order\n";
  for (const auto& r : rows) {
    out << r.level << "," << format_double(r.dx) << "," << format_double(r.dt) << "," << format_double(r.max_error)
        << "," << (r.observed_order ? format_double(*r.observed_order) : std::string()) << "\n";
  }
  return out.str();
}

std::string modulus_csv(const std::vector<ModulusRow>& rows) {
  std::ostringstream out;
  out << "delta,omega,pairs\n";
  for (const auto& r : rows) out << format_double(r.delta) << "," << format_double(r.omega) << "," << r.pairs << "\n";
  return out.str();
}

double superoptimality_tolerance(const Scenario& s, const Problem& p) {
  return s.super_factor * mesh(s) * stability(p);
}

Corruption corruption_target(const Scenario& s, const Problem& p, const ValueGrid& u) {
  Corruption c;
  c.node = s.corrupt_node.value_or(p.lattice->size() / 2);
  c.step = s.corrupt_step.value_or(u.steps());
  if (c.node >= p.lattice->size()) throw ConfigError("corrupt_node is outside the lattice", "corrupt_node");
  if (c.step == 0 || c.step > u.steps()) throw ConfigError("corrupt_step must be in 1..steps", "corrupt_step");
  c.amount = 10.0 * superoptimality_tolerance(s, p);
  return c;
}

VerificationReport verify_grid(const Scenario& s, const Problem& p, const ValueGrid& u,
                               std::optional<std::pair<std::size_t, std::size_t>> extra_anchor) {
  const double c1 = stability(p);
  const double h = mesh(s);
  VerificationReport report;

  {
    const AssumptionReport a = check_assumptions(p.hamiltonian, *p.lattice);
    CheckRecord r;
    r.name = "assumptions";
    r.samples = a.checks.size();
    for (const auto& check : a.checks) r.worst_violation += check.pass ? 0.0 : 1.0;
    r.tolerance = 0.0;
    report.records.push_back(finalize(std::move(r)));
  }
  report.records.push_back(check_initial_condition(u, p.initial));
  report.records.push_back(check_a_priori_bounds(u, p.lagrangian, 1e-9 + s.bounds_factor * h * c1));

  CurveSampling sampling;
  sampling.curves = s.curves;
  sampling.anchors = s.triples;
  sampling.seed = s.seed;
  sampling.v_cap = speed_cap(p);
  report.records.push_back(check_suboptimality(u, p.lagrangian, sampling, s.sub_factor * h * c1));

  {
    std::vector<std::pair<std::size_t, std::size_t>> anchors;
    if (extra_anchor) anchors.push_back(*extra_anchor);
    std::mt19937_64 rng(s.seed + 1);
    std::uniform_int_distribution<std::size_t> pick_node(0, p.lattice->size() - 1);
    std::uniform_int_distribution<std::size_t> pick_step(1, std::max<std::size_t>(1, u.steps()));
    for (int i = 0; i < s.triples && u.steps() > 0; ++i) anchors.emplace_back(pick_node(rng), pick_step(rng));
    for (const auto& probe : s.probes) {
      const std::size_t k = grid_step(probe.t, s.dt, "probes");
      if (k == 0) continue;
      const auto node = p.lattice->node_at(probe.x);
      if (node) anchors.emplace_back(*node, k);
    }
    const double tol = s.super_factor * h * c1;
    std::vector<CheckRecord> parts;
    for (const auto& [node, k] : anchors) {
      const GraphPoint x = p.lattice->node(node).point;
      const double t = u.time(k);
      parts.push_back(check_superoptimality(u, p.lagrangian, extract_trajectory(u, x, t), x, t, tol));
    }
    if (parts.empty()) {
      CheckRecord r;
      r.name = "superoptimality";
      r.tolerance = tol;
      parts.push_back(finalize(std::move(r)));
    }
    report.records.push_back(merge_records("superoptimality", parts));
  }

  CurveSampling visc = sampling;
  visc.curves = std::max(1, s.curves / 10);
  visc.seed = s.seed + 2;
  report.records.push_back(check_metric_viscosity(u, p.hamiltonian, visc, s.viscosity_c2 * h));
  return report;
}

}  // namespace hjm
