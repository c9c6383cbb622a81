#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hjm/extended_real.hpp"
#include "hjm/metric_graph.hpp"

namespace hjm {

/// Real function on the graph: a constant, per-lattice-node samples (interpolated along
/// edges), or an arbitrary callable.
class SpatialField {
 public:
  static SpatialField constant(double value);
  static SpatialField on_lattice(std::shared_ptr<const SpaceLattice> lattice, std::vector<double> node_values);
  static SpatialField from_function(std::function<double(const GraphPoint&)> fn);

  double operator()(const GraphPoint& x) const { return fn_(x); }
  std::optional<double> constant_value() const { return constant_; }

  /// Pointwise negation (used for the maximizing orientation).
  SpatialField negated() const;

 private:
  std::function<double(const GraphPoint&)> fn_;
  std::optional<double> constant_;
};

/// The one-dimensional convex profile h of a composite Hamiltonian and its conjugate.
class Profile {
 public:
  enum class Kind { Quadratic, Linear, Power };

  static Profile quadratic() { return Profile(Kind::Quadratic, 2.0); }
  static Profile linear() { return Profile(Kind::Linear, 1.0); }
  /// h(p) = p^a / a with a > 1.
  static Profile power(double exponent);

  Kind kind() const { return kind_; }
  double exponent() const { return exponent_; }
  std::string name() const;

  double operator()(double p) const;
  /// l(v) = sup_{p >= 0} (p v - h(p)).
  ExtendedReal conjugate(double v) const;
  /// sup{v : l(v) < inf}.
  double speed_bound() const;

 private:
  Profile(Kind kind, double exponent) : kind_(kind), exponent_(exponent) {}
  Kind kind_;
  double exponent_;
};

/// H(x, p) = sigma(x) h(p) - f(x).
struct CompositeForm {
  SpatialField sigma;
  Profile h;
  SpatialField f;
};

/// H sampled on an increasing p-grid at every lattice node; piecewise linear in p with
/// linear extrapolation past the last grid point, and linear along edges in x.
struct TabulatedForm {
  std::vector<double> p_grid;
  std::shared_ptr<const SpaceLattice> lattice;
  std::vector<std::vector<double>> rows;  // rows[node][j] = H(node, p_grid[j])
};

class HamiltonianSpec {
 public:
  static HamiltonianSpec composite(SpatialField sigma, Profile h, SpatialField f);
  /// Throws InputError on shape mismatches, AssumptionError on non-finite entries.
  static HamiltonianSpec tabulated(std::vector<double> p_grid, std::shared_ptr<const SpaceLattice> lattice,
                                   std::vector<std::vector<double>> rows);

  double operator()(const GraphPoint& x, double p) const;

  bool is_composite() const { return std::holds_alternative<CompositeForm>(form_); }
  const CompositeForm& composite_form() const { return std::get<CompositeForm>(form_); }
  const TabulatedForm& tabulated_form() const { return std::get<TabulatedForm>(form_); }

  /// Row of the tabulated form at x (convex combination of the bracketing node rows).
  std::vector<double> tabulated_row(const GraphPoint& x) const;

 private:
  explicit HamiltonianSpec(std::variant<CompositeForm, TabulatedForm> form) : form_(std::move(form)) {}
  std::variant<CompositeForm, TabulatedForm> form_;
};

enum class TransformMethod {
  Auto,  // closed form for composite profiles, exact piecewise-linear conjugate for tables
  Grid,  // uniform p-grid maximization with the saturation rule
};

struct TransformGrid {
  double p_max = 100.0;
  int n_p = 1024;
};

/// L(x, v) = sup_p (p v - H(x, p)).
///
/// The grid path maximizes over p_j = j p_max / n_p, j = 0..n_p, and returns +inf when the
/// maximizer is the last point and pv - H is still increasing there. Throws InputError for
/// v < 0 and AssumptionError when a tabulated row is not nondecreasing.
ExtendedReal legendre_transform(const HamiltonianSpec& H, const GraphPoint& x, double v, double p_max, int n_p,
                                TransformMethod method = TransformMethod::Auto);

/// The Lagrangian of a Hamiltonian, with its speed bound V_L(x).
class Lagrangian {
 public:
  explicit Lagrangian(HamiltonianSpec H, TransformGrid grid = {}, TransformMethod method = TransformMethod::Auto);

  ExtendedReal operator()(const GraphPoint& x, double v) const;

  /// V_L(x) = sup{v : L(x, v) < inf}; +inf when the domain is unbounded.
  double speed_bound(const GraphPoint& x) const;

  const HamiltonianSpec& hamiltonian() const { return H_; }
  const TransformGrid& grid() const { return grid_; }
  TransformMethod method() const { return method_; }

 private:
  HamiltonianSpec H_;
  TransformGrid grid_;
  TransformMethod method_;
};

/// Discrete sup over v in [0, min(v_max, V_L(x))] of (p v - L(x, v)), n_v + 1 points
/// (the domain endpoint is always included).
double dual_roundtrip(const Lagrangian& L, const GraphPoint& x, double p, double v_max, int n_v);

/// c_H(p) = sup over lattice nodes of H(x, p).
double hamiltonian_sup(const HamiltonianSpec& H, const SpaceLattice& lattice, double p);

/// ell(v) = min over lattice nodes of L(x, v).
ExtendedReal ell_envelope(const Lagrangian& L, const SpaceLattice& lattice, double v);

/// ell(v_k) / v_k along v_k = v0 * ratio^k, k = 0..count-1.
std::vector<ExtendedReal> ell_growth_ratios(const Lagrangian& L, const SpaceLattice& lattice, double v0, double ratio,
                                            int count);

/// sup over lattice nodes of |L(x, 0)|.
double lagrangian_rest_sup(const Lagrangian& L, const SpaceLattice& lattice);

struct AssumptionCheck {
  std::string name;
  bool pass = true;
  std::string detail;
};

struct AssumptionReport {
  std::vector<AssumptionCheck> checks;
  bool all_passed() const;
  const AssumptionCheck& find(const std::string& name) const;
};

struct AssumptionGrids {
  double p_max = 20.0;
  int n_p = 200;
  double v_max = 5.0;
  int n_v = 50;
};

/// Samples the standing assumptions on lattice nodes. Failures are report entries.
///
/// Entries: "A1" finite values, "A2" monotone and convex in p, "A3" finite c_H, "A3'"
/// L >= -c_H(0), "A4" finite inf H(., 0) and nondecaying inf_x (H(x,p) - H(x,0)) / p over the
/// top of the p-grid, "A4'" finite sup_x L(x, V) at the detected speed bound, "A5" jumps of
/// V_L across lattice cells (informational, never fails).
AssumptionReport check_assumptions(const HamiltonianSpec& H, const SpaceLattice& lattice,
                                   const AssumptionGrids& grids = {});

}  // namespace hjm
