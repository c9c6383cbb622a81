#include "hjm/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "hjm/errors.hpp"

namespace hjm {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t step_count(double T, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("time step dt must be positive");
  if (!(T > 0.0) || !std::isfinite(T)) throw InputError("time horizon T must be positive");
  return static_cast<std::size_t>(std::max(1.0, std::ceil(T / dt - 1e-9)));
}

double interpolate(std::span<const double> values, const Bracket& b) {
  if (b.lower == b.upper) return values[b.lower];
  return (1.0 - b.weight) * values[b.lower] + b.weight * values[b.upper];
}

bool move_order(const Move& a, const Move& b) {
  if (a.speed != b.speed) return a.speed < b.speed;
  std::size_t ea = a.legs.empty() ? 0 : a.legs.front().edge;
  std::size_t eb = b.legs.empty() ? 0 : b.legs.front().edge;
  if (ea != eb) return ea < eb;
  if (a.end.edge != b.end.edge) return a.end.edge < b.end.edge;
  return a.end.offset < b.end.offset;
}

std::vector<Move> generate_moves(const SpaceLattice& lattice, const Lagrangian& L, std::span<const double> speeds,
                                 double dt, const GraphPoint& x) {
  const MetricGraph& g = lattice.graph();
  GraphPoint here = g.canonical(x);
  std::vector<Move> out;
  for (double v : speeds) {
    ExtendedReal cost = L(here, v);
    if (cost.is_infinite()) continue;
    double c = dt * cost.value();
    if (v == 0.0) {
      out.push_back({0.0, c, lattice.locate(here), here, {}});
      continue;
    }
    for (Walk& walk : g.enumerate_walks(here, v * dt)) {
      out.push_back({v, c, lattice.locate(walk.end), walk.end, std::move(walk.legs)});
    }
  }
  std::stable_sort(out.begin(), out.end(), move_order);
  return out;
}

// Index of the best move against `previous`; first in order wins ties.
std::size_t best_move(std::span<const Move> moves, std::span<const double> previous, double* value = nullptr) {
  double best = kInf;
  std::size_t best_index = 0;
  for (std::size_t m = 0; m < moves.size(); ++m) {
    double candidate = moves[m].cost + interpolate(previous, moves[m].target);
    if (candidate < best) {
      best = candidate;
      best_index = m;
    }
  }
  if (value) *value = best;
  return best_index;
}

}  // namespace

InitialDatum InitialDatum::from_values(std::shared_ptr<const SpaceLattice> lattice, std::vector<double> node_values) {
  if (!lattice) throw InputError("initial datum needs a lattice");
  if (node_values.size() != lattice->size()) {
    throw InputError("initial datum has " + std::to_string(node_values.size()) + " values for a lattice of " +
                     std::to_string(lattice->size()) + " nodes");
  }
  for (double v : node_values) {
    if (!std::isfinite(v)) throw InputError("initial datum must be finite");
  }
  InitialDatum u0;
  u0.lattice_ = std::move(lattice);
  u0.values_ = std::move(node_values);
  return u0;
}

InitialDatum InitialDatum::from_function(std::shared_ptr<const SpaceLattice> lattice,
                                         std::function<double(const GraphPoint&)> fn) {
  if (!lattice || !fn) throw InputError("initial datum needs a lattice and a function");
  std::vector<double> values;
  values.reserve(lattice->size());
  for (const LatticeNode& node : lattice->nodes()) values.push_back(fn(node.point));
  InitialDatum u0 = from_values(lattice, std::move(values));
  u0.closed_form_ = std::move(fn);
  return u0;
}

double InitialDatum::inf() const { return *std::min_element(values_.begin(), values_.end()); }
double InitialDatum::sup() const { return *std::max_element(values_.begin(), values_.end()); }

double InitialDatum::lipschitz() const {
  double best = 0.0;
  for (std::size_t i = 0; i < lattice_->size(); ++i) {
    for (const Neighbor& nb : lattice_->neighbors(i)) {
      best = std::max(best, std::abs(values_[i] - values_[nb.node]) / nb.distance);
    }
  }
  return best;
}

double InitialDatum::modulus(double delta) const {
  if (!(delta >= 0.0)) throw InputError("modulus needs delta >= 0");
  const MetricGraph& g = lattice_->graph();
  double best = 0.0;
  for (std::size_t i = 0; i < lattice_->size(); ++i) {
    for (std::size_t j = i + 1; j < lattice_->size(); ++j) {
      if (g.distance(lattice_->node(i).point, lattice_->node(j).point) <= delta) {
        best = std::max(best, std::abs(values_[i] - values_[j]));
      }
    }
  }
  return best;
}

InitialDatum InitialDatum::plus(const std::vector<double>& shift) const {
  if (shift.size() != values_.size()) throw InputError("initial datum shift has the wrong size");
  std::vector<double> values = values_;
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += shift[i];
  return from_values(lattice_, std::move(values));
}

std::vector<double> make_speed_grid(SpeedPolicy policy, double v_max, int count) {
  if (!(v_max >= 0.0) || !std::isfinite(v_max)) throw InputError("speed grid needs a finite v_max >= 0");
  if (count < 1) throw InputError("speed grid needs count >= 1");
  std::vector<double> speeds{0.0};
  if (v_max == 0.0) return speeds;
  if (policy == SpeedPolicy::Uniform) {
    for (int j = 1; j <= count; ++j) speeds.push_back(v_max * static_cast<double>(j) / static_cast<double>(count));
    speeds.back() = v_max;
    return speeds;
  }
  if (count == 1) {
    speeds.push_back(v_max);
    return speeds;
  }
  for (int j = count - 1; j >= 0; --j) {
    speeds.push_back(v_max * std::pow(1e-3, static_cast<double>(j) / static_cast<double>(count - 1)));
  }
  speeds.back() = v_max;
  return speeds;
}

double default_speed_cap(const SpaceLattice& lattice, const Lagrangian& L, double dt, int k_max) {
  if (!(dt > 0.0) || k_max < 1) throw InputError("default_speed_cap needs dt > 0 and k_max >= 1");
  double sup_bound = 0.0;
  for (const LatticeNode& node : lattice.nodes()) sup_bound = std::max(sup_bound, L.speed_bound(node.point));
  return std::min(sup_bound, static_cast<double>(k_max) * lattice.dx() / dt);
}

MoveTable::MoveTable(const SpaceLattice& lattice, const Lagrangian& L, std::span<const double> speeds, double dt) {
  if (std::find(speeds.begin(), speeds.end(), 0.0) == speeds.end()) throw InputError("speed grid must contain 0");
  for (double v : speeds) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InputError("speeds must be finite and nonnegative");
  }
  std::vector<double> sorted(speeds.begin(), speeds.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  offsets_.reserve(lattice.size() + 1);
  for (std::size_t i = 0; i < lattice.size(); ++i) {
    offsets_.push_back(static_cast<std::uint32_t>(moves_.size()));
    std::vector<Move> local = generate_moves(lattice, L, sorted, dt, lattice.node(i).point);
    if (local.empty()) {
      throw ConfigError("every candidate move from lattice node " + std::to_string(i) + " has infinite cost",
                        "v_grid");
    }
    std::move(local.begin(), local.end(), std::back_inserter(moves_));
  }
  offsets_.push_back(static_cast<std::uint32_t>(moves_.size()));
}

std::span<const Move> MoveTable::moves(std::size_t node) const {
  std::span<const Move> all(moves_);
  return all.subspan(offsets_.at(node), offsets_.at(node + 1) - offsets_.at(node));
}

std::vector<Move> moves_from(const SpaceLattice& lattice, const Lagrangian& L, std::span<const double> speeds,
                             double dt, const GraphPoint& x) {
  std::vector<double> sorted(speeds.begin(), speeds.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  return generate_moves(lattice, L, sorted, dt, x);
}

ValueGrid ValueGrid::from_layers(std::shared_ptr<const SpaceLattice> lattice, double dt,
                                 std::vector<std::vector<double>> layers) {
  if (!lattice) throw InputError("value grid needs a lattice");
  if (!(dt > 0.0)) throw InputError("value grid needs dt > 0");
  if (layers.empty()) throw InputError("value grid needs at least one layer");
  for (const auto& layer : layers) {
    if (layer.size() != lattice->size()) throw InputError("value grid layer size does not match the lattice");
  }
  ValueGrid grid;
  grid.lattice_ = std::move(lattice);
  grid.dt_ = dt;
  grid.layers_ = std::move(layers);
  return grid;
}

ValueGrid ValueGrid::from_function(std::shared_ptr<const SpaceLattice> lattice, double dt, double T,
                                   const std::function<double(const GraphPoint&, double)>& fn) {
  if (!lattice) throw InputError("value grid needs a lattice");
  std::size_t steps = step_count(T, dt);
  std::vector<std::vector<double>> layers(steps + 1, std::vector<double>(lattice->size()));
  for (std::size_t k = 0; k <= steps; ++k) {
    for (std::size_t i = 0; i < lattice->size(); ++i) {
      layers[k][i] = fn(lattice->node(i).point, dt * static_cast<double>(k));
    }
  }
  return from_layers(std::move(lattice), dt, std::move(layers));
}

double ValueGrid::value(const GraphPoint& x, double t) const {
  double r = std::clamp(t / dt_, 0.0, static_cast<double>(steps()));
  double nearest = std::round(r);
  if (std::abs(r - nearest) < 1e-9) return lattice_->interpolate(layers_[static_cast<std::size_t>(nearest)], x);
  auto k = static_cast<std::size_t>(std::floor(r));
  double theta = r - static_cast<double>(k);
  double a = lattice_->interpolate(layers_[k], x);
  double b = lattice_->interpolate(layers_[k + 1], x);
  return (1.0 - theta) * a + theta * b;
}

std::uint32_t ValueGrid::argmin(std::size_t node, std::size_t k) const {
  if (argmin_.empty() || k == 0 || k > argmin_.size()) {
    throw InternalError("missing argmin record for node " + std::to_string(node) + " at step " + std::to_string(k));
  }
  return argmin_[k - 1].at(node);
}

ValueGrid ValueGrid::with_entry(std::size_t node, std::size_t k, double value) const {
  ValueGrid copy = *this;
  copy.layers_.at(k).at(node) = value;
  return copy;
}

SemiLagrangianScheme::SemiLagrangianScheme(std::shared_ptr<const SpaceLattice> lattice, Lagrangian L,
                                           std::vector<double> speeds, double dt, unsigned threads)
    : lattice_(std::move(lattice)),
      L_(std::move(L)),
      speeds_(std::move(speeds)),
      dt_(dt),
      threads_(std::max(1u, threads)),
      table_(*lattice_, L_, speeds_, dt_) {}

std::shared_ptr<const SemiLagrangianScheme> SemiLagrangianScheme::create(std::shared_ptr<const SpaceLattice> lattice,
                                                                         Lagrangian L, std::vector<double> speeds,
                                                                         double dt, unsigned threads) {
  if (!lattice) throw InputError("scheme needs a lattice");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("time step dt must be positive");
  return std::shared_ptr<const SemiLagrangianScheme>(
      new SemiLagrangianScheme(std::move(lattice), std::move(L), std::move(speeds), dt, threads));
}

void SemiLagrangianScheme::step_range(std::span<const double> previous, std::span<double> next,
                                      std::span<std::uint32_t> argmin, std::size_t begin, std::size_t end) const {
  for (std::size_t i = begin; i < end; ++i) {
    double value = 0.0;
    std::size_t m = best_move(table_.moves(i), previous, &value);
    next[i] = value;
    if (!argmin.empty()) argmin[i] = table_.first_id(i) + static_cast<std::uint32_t>(m);
  }
}

void SemiLagrangianScheme::step(std::span<const double> previous, std::span<double> next,
                                std::span<std::uint32_t> argmin) const {
  std::size_t n = lattice_->size();
  if (previous.size() != n || next.size() != n || (!argmin.empty() && argmin.size() != n)) {
    throw InputError("scheme step: layer size does not match the lattice");
  }
  if (threads_ == 1 || n < 2 * threads_) {
    step_range(previous, next, argmin, 0, n);
    return;
  }
  // nodes are independent within a layer; each worker owns a disjoint slice of `next`
  std::vector<std::jthread> workers;
  std::size_t chunk = (n + threads_ - 1) / threads_;
  for (std::size_t begin = 0; begin < n; begin += chunk) {
    std::size_t end = std::min(n, begin + chunk);
    workers.emplace_back([=, this] { step_range(previous, next, argmin, begin, end); });
  }
}

ValueGrid SemiLagrangianScheme::solve(const InitialDatum& u0, double T) const {
  if (&u0.lattice() != lattice_.get()) throw InputError("initial datum lives on a different lattice");
  std::size_t steps = step_count(T, dt_);
  ValueGrid grid;
  grid.lattice_ = lattice_;
  grid.dt_ = dt_;
  grid.scheme_ = shared_from_this();
  grid.layers_.assign(steps + 1, std::vector<double>(lattice_->size()));
  grid.argmin_.assign(steps, std::vector<std::uint32_t>(lattice_->size()));
  std::copy(u0.values().begin(), u0.values().end(), grid.layers_[0].begin());
  for (std::size_t k = 0; k < steps; ++k) step(grid.layers_[k], grid.layers_[k + 1], grid.argmin_[k]);
  return grid;
}

ValueGrid solve(std::shared_ptr<const SpaceLattice> lattice, const Lagrangian& L, const InitialDatum& u0,
                const SolverOptions& options) {
  step_count(options.T, options.dt);
  auto scheme = SemiLagrangianScheme::create(std::move(lattice), L, options.speeds, options.dt, options.threads);
  return scheme->solve(u0, options.T);
}

AdmissibleCurve extract_trajectory(const ValueGrid& V, const GraphPoint& x, double t) {
  const SemiLagrangianScheme* scheme = V.scheme();
  if (!scheme || !V.has_argmin()) throw InternalError("missing argmin record: value grid was not produced by a solve");
  double r = t / V.dt();
  double nearest = std::round(r);
  if (!(t >= 0.0) || std::abs(r - nearest) > 1e-9 || nearest > static_cast<double>(V.steps())) {
    throw InputError("extract_trajectory: t must be a grid time in [0, T]");
  }
  const SpaceLattice& lattice = V.lattice();
  const MetricGraph& g = lattice.graph();
  GraphPoint start = g.canonical(x);
  GraphPoint here = start;
  std::vector<CurveSegment> segments;
  for (auto k = static_cast<std::size_t>(nearest); k >= 1; --k) {
    Move chosen;
    if (auto node = lattice.node_at(here)) {
      chosen = scheme->moves().move(V.argmin(*node, k));
    } else {
      std::vector<Move> local = moves_from(lattice, scheme->lagrangian(), scheme->speeds(), V.dt(), here);
      if (local.empty()) throw InternalError("no finite move from an off-node trajectory point");
      chosen = local[best_move(local, V.layer(k - 1))];
    }
    if (chosen.speed == 0.0 && !segments.empty() && segments.back().speed == 0.0) {
      segments.back().duration += V.dt();
    } else {
      segments.push_back({V.dt(), chosen.speed, chosen.legs});
    }
    here = chosen.end;
  }
  return AdmissibleCurve(lattice.graph_ptr(), start, std::move(segments));
}

double brute_force_value(std::shared_ptr<const MetricGraph> g, const Lagrangian& L,
                         const std::function<double(const GraphPoint&)>& u0, const GraphPoint& x, double t, int depth,
                         std::span<const double> speeds, const BruteForceCaps& caps, int n_quad) {
  if (!g) throw InputError("brute_force_value needs a graph");
  if (g->edge_count() > caps.max_edges) throw InputError("brute_force_value: graph has too many edges");
  if (depth < 1 || depth > caps.max_depth) throw InputError("brute_force_value: depth outside the allowed range");
  if (speeds.size() > caps.max_speeds) throw InputError("brute_force_value: too many speeds");
  if (std::find(speeds.begin(), speeds.end(), 0.0) == speeds.end()) {
    throw InputError("brute_force_value: speeds must include 0");
  }
  if (!(t >= 0.0)) throw InputError("brute_force_value needs t >= 0");
  if (t == 0.0) return u0(g->canonical(x));
  double tau = t / static_cast<double>(depth);

  double best = kInf;
  auto recurse = [&](auto&& self, const GraphPoint& here, int level, double accumulated) -> void {
    if (level == depth) {
      best = std::min(best, accumulated + u0(here));
      return;
    }
    for (double v : speeds) {
      if (v == 0.0) {
        ExtendedReal rest = action(AdmissibleCurve::constant(g, here), L, tau, n_quad);
        if (rest.is_finite()) self(self, here, level + 1, accumulated + rest.value());
        continue;
      }
      std::vector<Walk> walks = g->enumerate_walks(here, v * tau);
      if (walks.size() > caps.max_directions) throw InputError("brute_force_value: too many walk directions");
      for (const Walk& walk : walks) {
        AdmissibleCurve piece(g, here, {CurveSegment{tau, v, walk.legs}});
        ExtendedReal cost = action(piece, L, tau, n_quad);
        if (cost.is_finite()) self(self, walk.end, level + 1, accumulated + cost.value());
      }
    }
  };
  recurse(recurse, g->canonical(x), 0, 0.0);
  return best;
}

double hopf_lax_value(const MetricGraph& g, const CompositeForm& H, const std::function<double(const GraphPoint&)>& u0,
                      const GraphPoint& x, double t, int samples_per_edge) {
  auto sigma = H.sigma.constant_value();
  auto f = H.f.constant_value();
  if (!sigma || !f) throw InputError("hopf_lax_value needs constant sigma and f");
  if (!(t >= 0.0)) throw InputError("hopf_lax_value needs t >= 0");
  if (samples_per_edge < 2) throw InputError("hopf_lax_value needs at least two samples per edge");
  GraphPoint center = g.canonical(x);
  if (t == 0.0) return u0(center);

  auto cost = [&](const GraphPoint& y) {
    double d = g.distance(center, y);
    ExtendedReal running = H.h.conjugate(d / (t * *sigma)).scaled(t * *sigma);
    if (running.is_infinite()) return kInf;
    return running.value() + *f * t + u0(y);
  };

  double best = kInf;
  double reach = t * *sigma * H.h.speed_bound() * (1.0 - 1e-12);
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    const EdgeSpec& spec = g.edge(e);
    std::vector<double> values(samples_per_edge + 1);
    std::size_t best_j = 0;
    for (int j = 0; j <= samples_per_edge; ++j) {
      values[j] = cost({e, spec.length * j / samples_per_edge});
      if (values[j] < values[best_j]) best_j = j;
    }
    best = std::min(best, values[best_j]);

    if (std::isfinite(reach)) {
      // points of this edge at distance exactly `reach` (the rim of the reachable ball)
      std::vector<double> candidates{reach - g.distance_to_vertex(center, spec.u),
                                     spec.length - (reach - g.distance_to_vertex(center, spec.v))};
      if (center.edge == e) {
        candidates.push_back(center.offset + reach);
        candidates.push_back(center.offset - reach);
      }
      for (double o : candidates) {
        if (o >= 0.0 && o <= spec.length) best = std::min(best, cost({e, o}));
      }
    }

    if (!std::isfinite(values[best_j])) continue;
    // golden-section refinement in the bracketing sample cells
    double lo = spec.length * static_cast<double>(best_j == 0 ? 0 : best_j - 1) / samples_per_edge;
    double hi = spec.length * static_cast<double>(std::min<std::size_t>(best_j + 1, samples_per_edge)) /
                samples_per_edge;
    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = hi - ratio * (hi - lo);
    double b = lo + ratio * (hi - lo);
    double fa = cost({e, a});
    double fb = cost({e, b});
    for (int it = 0; it < 80; ++it) {
      if (fa <= fb) {
        hi = b;
        b = a;
        fb = fa;
        a = hi - ratio * (hi - lo);
        fa = cost({e, a});
      } else {
        lo = a;
        a = b;
        fa = fb;
        b = lo + ratio * (hi - lo);
        fb = cost({e, b});
      }
    }
    best = std::min({best, fa, fb});
  }
  return best;
}

std::vector<RefinementRow> refine_study(const RefinementProblem& problem, int levels) {
  if (levels < 2) throw InputError("refine_study needs at least two levels");
  if (!problem.graph || !problem.lagrangian || !problem.initial || !problem.exact) {
    throw InputError("refine_study: incomplete problem");
  }
  std::vector<RefinementRow> rows;
  for (int level = 0; level < levels; ++level) {
    double scale = std::ldexp(1.0, -level);
    double dx = problem.dx * scale;
    double dt = problem.dt * scale;
    auto lattice = build_lattice(problem.graph, dx);
    Lagrangian L = problem.lagrangian(lattice);
    InitialDatum u0 = InitialDatum::from_function(lattice, problem.initial);
    const int speed_count = problem.refine_speeds ? problem.speed_count << level : problem.speed_count;
    SolverOptions options{dt, problem.T, make_speed_grid(problem.policy, default_speed_cap(*lattice, L, dt), speed_count)};
    ValueGrid U = solve(lattice, L, u0, options);
    double error = 0.0;
    double t_final = U.horizon();
    for (std::size_t i = 0; i < lattice->size(); ++i) {
      error = std::max(error, std::abs(U.at(i, U.steps()) - problem.exact(lattice->node(i).point, t_final)));
    }
    RefinementRow row{level, dx, dt, error, std::nullopt};
    if (!rows.empty() && rows.back().max_error > 0.0 && error > 0.0) {
      row.observed_order = std::log2(rows.back().max_error / error);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace hjm
