#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "hjm/curves.hpp"
#include "hjm/hamiltonian.hpp"
#include "hjm/metric_graph.hpp"

namespace hjm {

/// Initial datum u0 sampled at lattice nodes; off-node values interpolate along edges.
class InitialDatum {
 public:
  static InitialDatum from_values(std::shared_ptr<const SpaceLattice> lattice, std::vector<double> node_values);
  /// Samples `fn` at the nodes and keeps it as the closed form.
  static InitialDatum from_function(std::shared_ptr<const SpaceLattice> lattice,
                                    std::function<double(const GraphPoint&)> fn);

  const SpaceLattice& lattice() const { return *lattice_; }
  std::span<const double> values() const { return values_; }
  double operator()(const GraphPoint& x) const { return lattice_->interpolate(values_, x); }
  const std::function<double(const GraphPoint&)>& closed_form() const { return closed_form_; }

  double inf() const;
  double sup() const;
  /// Largest slope over lattice cells: the Lipschitz constant of the interpolant.
  double lipschitz() const;
  /// max |u0(x) - u0(y)| over node pairs with d(x, y) <= delta.
  double modulus(double delta) const;

  /// Pointwise sum with another datum on the same lattice.
  InitialDatum plus(const std::vector<double>& shift) const;

 private:
  std::shared_ptr<const SpaceLattice> lattice_;
  std::vector<double> values_;
  std::function<double(const GraphPoint&)> closed_form_;
};

enum class SpeedPolicy { Geometric, Uniform };

/// {0} plus `count` speeds up to v_max: geometric down to v_max * 1e-3, or uniform steps.
std::vector<double> make_speed_grid(SpeedPolicy policy, double v_max, int count);

/// min(sup_x V_L(x), k_max * dx / dt).
double default_speed_cap(const SpaceLattice& lattice, const Lagrangian& L, double dt, int k_max = 4);

/// One candidate move of the scheme: travel `speed * dt` along `legs` from a node.
struct Move {
  double speed = 0.0;
  double cost = 0.0;  // dt * L(x, speed)
  Bracket target;
  GraphPoint end;
  std::vector<Leg> legs;
};

/// Candidate moves out of every lattice node, ordered for tie-breaking
/// (speed, then first edge, then endpoint). Moves with infinite cost are dropped.
class MoveTable {
 public:
  MoveTable(const SpaceLattice& lattice, const Lagrangian& L, std::span<const double> speeds, double dt);

  std::span<const Move> moves(std::size_t node) const;
  const Move& move(std::uint32_t id) const { return moves_.at(id); }
  std::uint32_t first_id(std::size_t node) const { return offsets_.at(node); }

 private:
  std::vector<Move> moves_;
  std::vector<std::uint32_t> offsets_;
};

/// Moves out of an arbitrary point (not necessarily a node), same order as MoveTable.
std::vector<Move> moves_from(const SpaceLattice& lattice, const Lagrangian& L, std::span<const double> speeds,
                             double dt, const GraphPoint& x);

class SemiLagrangianScheme;

/// U[node][k] for t_k = k dt, k = 0..steps, with the argmin move for every entry k >= 1.
class ValueGrid {
 public:
  /// Grid from explicit layers (layers[k][node]); no argmin records, no scheme.
  static ValueGrid from_layers(std::shared_ptr<const SpaceLattice> lattice, double dt,
                               std::vector<std::vector<double>> layers);
  static ValueGrid from_function(std::shared_ptr<const SpaceLattice> lattice, double dt, double T,
                                 const std::function<double(const GraphPoint&, double)>& fn);

  const SpaceLattice& lattice() const { return *lattice_; }
  const std::shared_ptr<const SpaceLattice>& lattice_ptr() const { return lattice_; }
  double dt() const { return dt_; }
  std::size_t steps() const { return layers_.size() - 1; }
  double horizon() const { return dt_ * static_cast<double>(steps()); }
  double time(std::size_t k) const { return dt_ * static_cast<double>(k); }

  double at(std::size_t node, std::size_t k) const { return layers_.at(k).at(node); }
  std::span<const double> layer(std::size_t k) const { return layers_.at(k); }

  /// Space-time interpolation: along edges in x, linear in t (clamped to [0, horizon]).
  double value(const GraphPoint& x, double t) const;

  bool has_argmin() const { return !argmin_.empty(); }
  std::uint32_t argmin(std::size_t node, std::size_t k) const;
  const SemiLagrangianScheme* scheme() const { return scheme_.get(); }

  /// Copy with one entry replaced; argmin records are kept as they were.
  ValueGrid with_entry(std::size_t node, std::size_t k, double value) const;

 private:
  friend class SemiLagrangianScheme;
  ValueGrid() = default;

  std::shared_ptr<const SpaceLattice> lattice_;
  double dt_ = 0.0;
  std::vector<std::vector<double>> layers_;
  std::vector<std::vector<std::uint32_t>> argmin_;  // argmin_[k - 1][node]
  std::shared_ptr<const SemiLagrangianScheme> scheme_;
};

struct SolverOptions {
  double dt = 0.01;
  double T = 1.0;
  std::vector<double> speeds;  // must contain 0
  unsigned threads = 1;
};

/// Semi-Lagrangian dynamic programming:
///   U[x][k+1] = min over moves m of x of { dt L(x, v_m) + interp(U[.][k], end_m) }.
/// The update is monotone and deterministic; ties keep the first move in table order.
class SemiLagrangianScheme : public std::enable_shared_from_this<SemiLagrangianScheme> {
 public:
  static std::shared_ptr<const SemiLagrangianScheme> create(std::shared_ptr<const SpaceLattice> lattice, Lagrangian L,
                                                            std::vector<double> speeds, double dt,
                                                            unsigned threads = 1);

  const SpaceLattice& lattice() const { return *lattice_; }
  const Lagrangian& lagrangian() const { return L_; }
  std::span<const double> speeds() const { return speeds_; }
  double dt() const { return dt_; }
  const MoveTable& moves() const { return table_; }

  /// One update of `previous` into `next`; `argmin` (optional) receives winning move ids.
  void step(std::span<const double> previous, std::span<double> next, std::span<std::uint32_t> argmin = {}) const;

  /// T is rounded up to a whole number of steps.
  ValueGrid solve(const InitialDatum& u0, double T) const;

 private:
  SemiLagrangianScheme(std::shared_ptr<const SpaceLattice> lattice, Lagrangian L, std::vector<double> speeds, double dt,
                       unsigned threads);
  void step_range(std::span<const double> previous, std::span<double> next, std::span<std::uint32_t> argmin,
                  std::size_t begin, std::size_t end) const;

  std::shared_ptr<const SpaceLattice> lattice_;
  Lagrangian L_;
  std::vector<double> speeds_;
  double dt_;
  unsigned threads_;
  MoveTable table_;
};

/// Builds the scheme and runs it. Throws InputError on bad time settings and ConfigError
/// when some node has no finite-cost move.
ValueGrid solve(std::shared_ptr<const SpaceLattice> lattice, const Lagrangian& L, const InitialDatum& u0,
                const SolverOptions& options);

/// Follows argmin moves backward in time from (x, t) to t = 0. `t` must be a grid time.
/// At off-node positions the best move is recomputed with the same candidate set.
AdmissibleCurve extract_trajectory(const ValueGrid& V, const GraphPoint& x, double t);

struct BruteForceCaps {
  std::size_t max_edges = 4;
  int max_depth = 4;
  std::size_t max_speeds = 6;
  std::size_t max_directions = 4;
};

/// Minimum of action + u0(endpoint) over curves with `depth` equal-duration segments,
/// speeds from `speeds` (must include 0) and every walk direction. Refuses (InputError)
/// instances beyond `caps`.
double brute_force_value(std::shared_ptr<const MetricGraph> g, const Lagrangian& L,
                         const std::function<double(const GraphPoint&)>& u0, const GraphPoint& x, double t, int depth,
                         std::span<const double> speeds, const BruteForceCaps& caps = {}, int n_quad = 16);

/// min over y of t * sigma * l(d(x, y) / (t * sigma)) + f t + u0(y) for a composite
/// Hamiltonian with constant sigma and f, by dense sampling of every edge plus local refinement.
double hopf_lax_value(const MetricGraph& g, const CompositeForm& H, const std::function<double(const GraphPoint&)>& u0,
                      const GraphPoint& x, double t, int samples_per_edge = 2000);

struct RefinementProblem {
  std::shared_ptr<const MetricGraph> graph;
  std::function<Lagrangian(std::shared_ptr<const SpaceLattice>)> lagrangian;
  std::function<double(const GraphPoint&)> initial;
  std::function<double(const GraphPoint&, double)> exact;
  double dx = 0.1;
  double dt = 0.05;
  double T = 1.0;
  SpeedPolicy policy = SpeedPolicy::Geometric;
  int speed_count = 64;
  bool refine_speeds = true;  // double speed_count with every halving
};

struct RefinementRow {
  int level = 0;
  double dx = 0.0;
  double dt = 0.0;
  double max_error = 0.0;
  std::optional<double> observed_order;
};

/// Max-norm error at the final time over lattice nodes for dx, dt halved `levels - 1` times.
/// The speed grid is refined along with the mesh unless `refine_speeds` is false.
std::vector<RefinementRow> refine_study(const RefinementProblem& problem, int levels);

}  // namespace hjm
