#include "hjm/verification.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

#include "hjm/errors.hpp"
#include "hjm/extended_real.hpp"

namespace hjm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

GraphPoint node_point(const ValueGrid& u, std::size_t node) { return u.lattice().node(node).point; }

std::string point_text(const GraphPoint& p) {
  return std::to_string(p.edge) + " " + format_double(p.offset);
}

Counterexample make_counterexample(const std::string& check, const GraphPoint& x, double t, double h,
                                   double violation, const AdmissibleCurve& curve) {
  return Counterexample{check, x, t, h, violation, serialize(curve)};
}

// Keeps the worst violation seen so far together with its witness.
struct Worst {
  double violation = -kInf;
  std::optional<Counterexample> witness;

  void offer(double v, const std::function<Counterexample()>& make) {
    if (v > violation) {
      violation = v;
      witness = make();
    }
  }
};

CheckRecord record_from(const std::string& name, std::size_t samples, const Worst& worst, double tol) {
  CheckRecord r;
  r.name = name;
  r.samples = samples;
  r.worst_violation = samples == 0 ? 0.0 : worst.violation;
  r.tolerance = tol;
  r.counterexample = worst.witness;
  return finalize(std::move(r));
}

double sub_violation(const ValueGrid& u, const Lagrangian& L, const AdmissibleCurve& c, const GraphPoint& x,
                     double t, double h, int n_quad) {
  const ExtendedReal a = action(c, L, h, n_quad);
  if (a.is_infinite()) return -kInf;
  return u.value(x, t) - a.value() - u.value(c.evaluate(h), t - h);
}

double super_violation(const ValueGrid& u, const Lagrangian& L, const AdmissibleCurve& c, const GraphPoint& x,
                       double t, double h, int n_quad) {
  const ExtendedReal a = action(c, L, h, n_quad);
  if (a.is_infinite()) return kInf;
  return a.value() + u.value(c.evaluate(h), t - h) - u.value(x, t);
}

}  // namespace

std::string serialize(const Counterexample& c) {
  std::ostringstream out;
  out << "check " << c.check << "\n";
  out << "x " << point_text(c.x) << "\n";
  out << "t " << format_double(c.t) << "\n";
  out << "h " << format_double(c.h) << "\n";
  out << "violation " << format_double(c.violation) << "\n";
  out << c.curve;
  return out.str();
}

Counterexample parse_counterexample(const std::string& text) {
  std::istringstream in(text);
  Counterexample c;
  auto expect = [&](const std::string& key) {
    std::string line;
    if (!std::getline(in, line)) throw InputError("counterexample: missing '" + key + "' line");
    std::istringstream ls(line);
    std::string k;
    ls >> k;
    if (k != key) throw InputError("counterexample: expected '" + key + "', found '" + k + "'");
    return ls;
  };
  {
    auto ls = expect("check");
    ls >> c.check;
  }
  {
    auto ls = expect("x");
    if (!(ls >> c.x.edge >> c.x.offset)) throw InputError("counterexample: bad 'x' line");
  }
  if (!(expect("t") >> c.t)) throw InputError("counterexample: bad 't' line");
  if (!(expect("h") >> c.h)) throw InputError("counterexample: bad 'h' line");
  if (!(expect("violation") >> c.violation)) throw InputError("counterexample: bad 'violation' line");
  std::ostringstream rest;
  rest << in.rdbuf();
  c.curve = rest.str();
  return c;
}

CheckRecord finalize(CheckRecord record) {
  record.pass = record.worst_violation <= record.tolerance;
  if (record.pass) record.counterexample.reset();
  return record;
}

CheckRecord merge_records(const std::string& name, std::span<const CheckRecord> records) {
  CheckRecord merged;
  merged.name = name;
  bool any = false;
  for (const auto& r : records) {
    merged.samples += r.samples;
    // Compare margins so that records with different tolerances merge sensibly.
    if (!any || r.worst_violation - r.tolerance > merged.worst_violation - merged.tolerance) {
      merged.worst_violation = r.worst_violation;
      merged.tolerance = r.tolerance;
      merged.counterexample = r.counterexample;
      any = true;
    }
  }
  return finalize(std::move(merged));
}

bool VerificationReport::all_passed() const {
  return std::all_of(records.begin(), records.end(), [](const CheckRecord& r) { return r.pass; });
}

std::string VerificationReport::to_text() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (i > 0) out << "\n";
    out << "check " << r.name << "\n";
    out << "samples " << r.samples << "\n";
    out << "worst_violation " << format_double(r.worst_violation) << "\n";
    out << "tolerance " << format_double(r.tolerance) << "\n";
    out << "pass " << (r.pass ? "true" : "false") << "\n";
    if (r.counterexample) {
      const auto& c = *r.counterexample;
      out << "counterexample x=" << point_text(c.x) << " t=" << format_double(c.t) << " h=" << format_double(c.h)
          << "\n";
    }
  }
  out << "\nresult " << (all_passed() ? "pass" : "fail") << "\n";
  return out.str();
}

std::string VerificationReport::to_csv() const {
  std::ostringstream out;
  out << "check,samples,worst_violation,tolerance,pass\n";
  for (const auto& r : records) {
    out << r.name << "," << r.samples << "," << format_double(r.worst_violation) << ","
        << format_double(r.tolerance) << "," << (r.pass ? "true" : "false") << "\n";
  }
  return out.str();
}

double stability_constant(const Lagrangian& L, const SpaceLattice& lattice, const InitialDatum& u0) {
  const double c_h0 = hamiltonian_sup(L.hamiltonian(), lattice, 0.0);
  return 1.0 + std::abs(c_h0) + lagrangian_rest_sup(L, lattice) + u0.lipschitz();
}

CheckRecord check_suboptimality(const ValueGrid& u, const Lagrangian& L, const CurveSampling& sampling, double tol) {
  const auto& lattice = u.lattice();
  if (u.steps() == 0) return record_from("suboptimality", 0, {}, tol);
  std::mt19937_64 rng(sampling.seed);
  std::uniform_int_distribution<std::size_t> pick_node(0, lattice.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_step(1, u.steps());
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Worst worst;
  std::size_t samples = 0;
  for (int a = 0; a < sampling.anchors; ++a) {
    const GraphPoint x = node_point(u, pick_node(rng));
    const double t = u.time(pick_step(rng));
    const auto curves = sample_curves(lattice.graph_ptr(), x, t, sampling.v_cap, sampling.curves, rng());
    for (const auto& c : curves) {
      const double h = t * unit(rng);
      const double v = sub_violation(u, L, c, x, t, h, sampling.n_quad);
      ++samples;
      worst.offer(v, [&] { return make_counterexample("suboptimality", x, t, h, v, c); });
    }
  }
  return record_from("suboptimality", samples, worst, tol);
}

CheckRecord check_superoptimality(const ValueGrid& u, const Lagrangian& L, const AdmissibleCurve& witness,
                                  const GraphPoint& x, double t, double eps, int n_quad) {
  const auto& g = u.lattice().graph();
  if (g.distance(witness.start(), x) > 1e-9) throw InputError("superoptimality: witness does not start at x");
  Worst worst;
  std::size_t samples = 0;
  for (std::size_t j = 0;; ++j) {
    const double h = u.dt() * static_cast<double>(j);
    if (h > t + 1e-12) break;
    const double v = super_violation(u, L, witness, x, t, h, n_quad);
    ++samples;
    worst.offer(v, [&] { return make_counterexample("superoptimality", x, t, h, v, witness); });
  }
  return record_from("superoptimality", samples, worst, eps);
}

CheckRecord check_metric_viscosity(const ValueGrid& u, const HamiltonianSpec& H, const CurveSampling& sampling,
                                   double tol, int points_per_curve) {
  const auto& lattice = u.lattice();
  if (u.steps() < 2) return record_from("metric_viscosity", 0, {}, tol);
  const double dr = 2.0 * lattice.dx();
  const double dtau = u.dt();
  const double smooth_floor = 1e-9;

  std::mt19937_64 rng(sampling.seed);
  std::uniform_int_distribution<std::size_t> pick_node(0, lattice.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_step(1, u.steps() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto smooth = [&](double minus, double mid, double plus) {
    return std::abs(plus - 2.0 * mid + minus) <= 10.0 * (0.5 * std::abs(plus - minus) + smooth_floor);
  };

  Worst worst;
  std::size_t samples = 0;
  const double v_cap = std::min(1.0, sampling.v_cap);
  for (int a = 0; a < sampling.anchors; ++a) {
    const GraphPoint x = node_point(u, pick_node(rng));
    const auto curves = sample_curves(lattice.graph_ptr(), x, 1.0, v_cap, sampling.curves, rng());
    for (const auto& c : curves) {
      const auto& bp = c.breakpoints();
      for (int q = 0; q < points_per_curve; ++q) {
        const std::size_t seg = static_cast<std::size_t>(unit(rng) * static_cast<double>(c.segments().size()));
        const double lo = bp[std::min(seg, bp.size() - 2)] + dr;
        const double hi = bp[std::min(seg, bp.size() - 2) + 1] - dr;
        if (hi <= lo) continue;
        const double r = lo + (hi - lo) * unit(rng);
        const std::size_t k = pick_step(rng);
        const double t = u.time(k);
        const GraphPoint here = c.evaluate(r);
        const double w_minus = u.value(c.evaluate(r - dr), t);
        const double w_mid = u.value(here, t);
        const double w_plus = u.value(c.evaluate(r + dr), t);
        const double w_before = u.value(here, t - dtau);
        const double w_after = u.value(here, t + dtau);
        if (!smooth(w_minus, w_mid, w_plus) || !smooth(w_before, w_mid, w_after)) continue;
        const double p = (w_plus - w_minus) / (2.0 * dr);
        const double qt = (w_after - w_before) / (2.0 * dtau);
        const double v = qt + H(here, std::abs(p));
        ++samples;
        worst.offer(v, [&] { return make_counterexample("metric_viscosity", here, t, 0.0, v, c.shifted(r)); });
      }
    }
  }
  return record_from("metric_viscosity", samples, worst, tol);
}

CheckRecord check_comparison(const ValueGrid& u_sub, const ValueGrid& v_super, double tol) {
  if (u_sub.lattice().size() != v_super.lattice().size() || u_sub.steps() != v_super.steps() ||
      std::abs(u_sub.dt() - v_super.dt()) > 1e-12 * std::max(1.0, u_sub.dt())) {
    throw InputError("comparison: value grids have different shapes");
  }
  const std::size_t n = u_sub.lattice().size();
  double initial = -kInf;
  for (std::size_t i = 0; i < n; ++i) initial = std::max(initial, u_sub.at(i, 0) - v_super.at(i, 0));

  Worst worst;
  std::size_t samples = 0;
  for (std::size_t k = 0; k <= u_sub.steps(); ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const double v = u_sub.at(i, k) - v_super.at(i, k) - initial;
      ++samples;
      worst.offer(v, [&] {
        const GraphPoint x = node_point(u_sub, i);
        return make_counterexample("comparison", x, u_sub.time(k), 0.0, v,
                                   AdmissibleCurve::constant(u_sub.lattice().graph_ptr(), x));
      });
    }
  }
  return record_from("comparison", samples, worst, tol);
}

CheckRecord check_a_priori_bounds(const ValueGrid& u, const Lagrangian& L, double tol) {
  const auto& lattice = u.lattice();
  const double c_h0 = hamiltonian_sup(L.hamiltonian(), lattice, 0.0);
  const auto u0 = u.layer(0);
  const double inf_u0 = *std::min_element(u0.begin(), u0.end());
  std::vector<double> rest(lattice.size());
  for (std::size_t i = 0; i < lattice.size(); ++i) {
    const ExtendedReal l0 = L(lattice.node(i).point, 0.0);
    rest[i] = l0.is_finite() ? l0.value() : kInf;
  }

  Worst worst;
  std::size_t samples = 0;
  for (std::size_t k = 0; k <= u.steps(); ++k) {
    const double t = u.time(k);
    for (std::size_t i = 0; i < lattice.size(); ++i) {
      const double lower = -c_h0 * t + inf_u0;
      const double upper = t * rest[i] + u0[i];
      const double value = u.at(i, k);
      const double v = std::max(lower - value, value - upper);
      ++samples;
      worst.offer(v, [&] {
        const GraphPoint x = node_point(u, i);
        return make_counterexample("a_priori_bounds", x, t, 0.0, v, AdmissibleCurve::constant(lattice.graph_ptr(), x));
      });
    }
  }
  return record_from("a_priori_bounds", samples, worst, tol);
}

CheckRecord check_initial_condition(const ValueGrid& u, const InitialDatum& u0) {
  const auto values = u0.values();
  if (values.size() != u.lattice().size()) throw InputError("initial condition: lattice size mismatch");
  Worst worst;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = std::abs(u.at(i, 0) - values[i]);
    worst.offer(v, [&] {
      const GraphPoint x = node_point(u, i);
      return make_counterexample("initial_condition", x, 0.0, 0.0, v,
                                 AdmissibleCurve::constant(u.lattice().graph_ptr(), x));
    });
  }
  return record_from("initial_condition", values.size(), worst, 0.0);
}

std::vector<ModulusRow> estimate_modulus(const ValueGrid& u, std::span<const double> deltas, int anchors,
                                         std::uint64_t seed) {
  std::vector<ModulusRow> rows;
  rows.reserve(deltas.size());
  for (double d : deltas) rows.push_back(ModulusRow{d, 0.0, 0});
  if (rows.empty()) return rows;
  const double reach = *std::max_element(deltas.begin(), deltas.end());

  const auto& lattice = u.lattice();
  const auto& g = lattice.graph();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_node(0, lattice.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_step(0, u.steps());

  for (int a = 0; a < anchors; ++a) {
    const std::size_t i = pick_node(rng);
    const std::size_t k = pick_step(rng);
    const GraphPoint x = node_point(u, i);
    const double ux = u.at(i, k);
    for (std::size_t j = 0; j < lattice.size(); ++j) {
      const double d = g.distance(x, node_point(u, j));
      if (d > reach) continue;
      for (std::size_t s = 0; s <= u.steps(); ++s) {
        const double gap = d + std::abs(u.time(k) - u.time(s));
        if (gap > reach) continue;
        const double diff = std::abs(ux - u.at(j, s));
        for (auto& row : rows) {
          if (gap <= row.delta) {
            row.omega = std::max(row.omega, diff);
            ++row.pairs;
          }
        }
      }
    }
  }
  return rows;
}

CheckRecord check_modulus(std::span<const ModulusRow> rows, double tol) {
  CheckRecord r;
  r.name = "modulus";
  if (rows.empty()) return finalize(std::move(r));
  std::vector<ModulusRow> sorted(rows.begin(), rows.end());
  std::sort(sorted.begin(), sorted.end(), [](const ModulusRow& a, const ModulusRow& b) { return a.delta < b.delta; });
  bool monotone = true;
  for (std::size_t i = 1; i < sorted.size(); ++i) monotone = monotone && sorted[i].omega >= sorted[i - 1].omega;
  for (const auto& row : sorted) r.samples += row.pairs;
  r.worst_violation = monotone ? sorted.front().omega : kInf;
  r.tolerance = tol;
  return finalize(std::move(r));
}

double replay(const ValueGrid& u, const Lagrangian& L, const Counterexample& c, int n_quad) {
  const AdmissibleCurve curve = parse_curve(u.lattice().graph_ptr(), c.curve);
  if (c.check == "suboptimality") return sub_violation(u, L, curve, c.x, c.t, c.h, n_quad);
  if (c.check == "superoptimality") return super_violation(u, L, curve, c.x, c.t, c.h, n_quad);
  throw InputError("replay: unsupported check '" + c.check + "'");
}

}  // namespace hjm
