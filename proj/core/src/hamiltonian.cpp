#include "hjm/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hjm/errors.hpp"

namespace hjm {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double interpolate_row(const std::vector<double>& p_grid, const std::vector<double>& row, double p) {
  std::size_t n = p_grid.size();
  std::size_t j = 0;
  if (p >= p_grid[n - 1]) {
    j = n - 2;
  } else if (p > p_grid[0]) {
    j = static_cast<std::size_t>(std::upper_bound(p_grid.begin(), p_grid.end(), p) - p_grid.begin()) - 1;
  }
  double slope = (row[j + 1] - row[j]) / (p_grid[j + 1] - p_grid[j]);
  return row[j] + slope * (p - p_grid[j]);
}

void require_nondecreasing(const std::vector<double>& row) {
  for (std::size_t j = 0; j + 1 < row.size(); ++j) {
    if (row[j + 1] < row[j] - 1e-12 * (1.0 + std::abs(row[j]))) {
      throw AssumptionError("tabulated Hamiltonian row is not nondecreasing in p (index " + std::to_string(j) + ")");
    }
  }
}

ExtendedReal grid_transform(const std::function<double(double)>& H, double v, double p_max, int n_p) {
  if (!(p_max > 0.0) || n_p < 1) throw InputError("legendre_transform: need p_max > 0 and n_p >= 1");
  double best = -kInf;
  int best_j = 0;
  double last = 0.0;
  double previous = 0.0;
  for (int j = 0; j <= n_p; ++j) {
    double p = p_max * static_cast<double>(j) / static_cast<double>(n_p);
    double g = p * v - H(p);
    if (g > best) {
      best = g;
      best_j = j;
    }
    previous = last;
    last = g;
  }
  if (best_j == n_p && last - previous > 0.0) return ExtendedReal::infinity();
  return best;
}

double grid_tail_slope(const std::function<double(double)>& H, double p_max, int n_p) {
  double dp = p_max / static_cast<double>(n_p);
  return (H(p_max) - H(p_max - dp)) / dp;
}

}  // namespace

SpatialField SpatialField::constant(double value) {
  SpatialField field;
  field.fn_ = [value](const GraphPoint&) { return value; };
  field.constant_ = value;
  return field;
}

SpatialField SpatialField::on_lattice(std::shared_ptr<const SpaceLattice> lattice, std::vector<double> node_values) {
  if (!lattice) throw InputError("SpatialField::on_lattice: null lattice");
  if (node_values.size() != lattice->size()) {
    throw InputError("SpatialField::on_lattice: expected " + std::to_string(lattice->size()) + " values, got " +
                     std::to_string(node_values.size()));
  }
  SpatialField field;
  auto values = std::make_shared<const std::vector<double>>(std::move(node_values));
  field.fn_ = [lattice, values](const GraphPoint& x) { return lattice->interpolate(*values, x); };
  return field;
}

SpatialField SpatialField::from_function(std::function<double(const GraphPoint&)> fn) {
  if (!fn) throw InputError("SpatialField::from_function: empty function");
  SpatialField field;
  field.fn_ = std::move(fn);
  return field;
}

SpatialField SpatialField::negated() const {
  SpatialField field;
  auto inner = fn_;
  field.fn_ = [inner](const GraphPoint& x) { return -inner(x); };
  if (constant_) field.constant_ = -*constant_;
  return field;
}

Profile Profile::power(double exponent) {
  if (!(exponent > 1.0) || !std::isfinite(exponent)) throw InputError("power profile needs exponent > 1");
  return Profile(Kind::Power, exponent);
}

std::string Profile::name() const {
  switch (kind_) {
    case Kind::Quadratic:
      return "quadratic";
    case Kind::Linear:
      return "linear";
    case Kind::Power:
      return "power(" + format_double(exponent_) + ")";
  }
  return "?";
}

double Profile::operator()(double p) const {
  switch (kind_) {
    case Kind::Quadratic:
      return 0.5 * p * p;
    case Kind::Linear:
      return p;
    case Kind::Power:
      return std::pow(p, exponent_) / exponent_;
  }
  return 0.0;
}

ExtendedReal Profile::conjugate(double v) const {
  switch (kind_) {
    case Kind::Quadratic:
      return 0.5 * v * v;
    case Kind::Linear:
      return v <= 1.0 ? ExtendedReal(0.0) : ExtendedReal::infinity();
    case Kind::Power: {
      double dual = exponent_ / (exponent_ - 1.0);
      return std::pow(v, dual) / dual;
    }
  }
  return 0.0;
}

double Profile::speed_bound() const { return kind_ == Kind::Linear ? 1.0 : kInf; }

HamiltonianSpec HamiltonianSpec::composite(SpatialField sigma, Profile h, SpatialField f) {
  return HamiltonianSpec(CompositeForm{std::move(sigma), h, std::move(f)});
}

HamiltonianSpec HamiltonianSpec::tabulated(std::vector<double> p_grid, std::shared_ptr<const SpaceLattice> lattice,
                                           std::vector<std::vector<double>> rows) {
  if (!lattice) throw InputError("tabulated Hamiltonian needs a lattice");
  if (p_grid.size() < 2) throw InputError("tabulated Hamiltonian needs at least two p values");
  if (p_grid.front() < 0.0) throw InputError("tabulated Hamiltonian p-grid must be nonnegative");
  for (std::size_t j = 0; j + 1 < p_grid.size(); ++j) {
    if (!(p_grid[j + 1] > p_grid[j])) throw InputError("tabulated Hamiltonian p-grid must be strictly increasing");
  }
  if (rows.size() != lattice->size()) {
    throw InputError("tabulated Hamiltonian has " + std::to_string(rows.size()) + " rows but the lattice has " +
                     std::to_string(lattice->size()) + " nodes");
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != p_grid.size()) {
      throw InputError("tabulated Hamiltonian row " + std::to_string(i) + " has the wrong number of columns");
    }
    for (double value : rows[i]) {
      if (!std::isfinite(value)) throw AssumptionError("tabulated Hamiltonian row " + std::to_string(i) + " is not finite");
    }
  }
  return HamiltonianSpec(TabulatedForm{std::move(p_grid), std::move(lattice), std::move(rows)});
}

std::vector<double> HamiltonianSpec::tabulated_row(const GraphPoint& x) const {
  const TabulatedForm& t = tabulated_form();
  Bracket b = t.lattice->locate(x);
  if (b.lower == b.upper) return t.rows[b.lower];
  std::vector<double> row(t.p_grid.size());
  for (std::size_t j = 0; j < row.size(); ++j) {
    row[j] = (1.0 - b.weight) * t.rows[b.lower][j] + b.weight * t.rows[b.upper][j];
  }
  return row;
}

double HamiltonianSpec::operator()(const GraphPoint& x, double p) const {
  if (p < 0.0) throw InputError("H(x, p) needs p >= 0");
  if (const auto* c = std::get_if<CompositeForm>(&form_)) return c->sigma(x) * c->h(p) - c->f(x);
  const TabulatedForm& t = tabulated_form();
  return interpolate_row(t.p_grid, tabulated_row(x), p);
}

ExtendedReal legendre_transform(const HamiltonianSpec& H, const GraphPoint& x, double v, double p_max, int n_p,
                                TransformMethod method) {
  if (!(v >= 0.0)) throw InputError("legendre_transform needs v >= 0");

  if (H.is_composite()) {
    const CompositeForm& c = H.composite_form();
    if (method == TransformMethod::Auto) {
      double sigma = c.sigma(x);
      return c.h.conjugate(v / sigma).scaled(sigma) + ExtendedReal(c.f(x));
    }
    return grid_transform([&](double p) { return H(x, p); }, v, p_max, n_p);
  }

  const TabulatedForm& t = H.tabulated_form();
  std::vector<double> row = H.tabulated_row(x);
  require_nondecreasing(row);
  if (method == TransformMethod::Grid) {
    return grid_transform([&](double p) { return interpolate_row(t.p_grid, row, p); }, v, p_max, n_p);
  }
  // pv - H is piecewise linear, so its sup sits at a grid point unless v exceeds the last slope.
  std::size_t n = t.p_grid.size();
  double last_slope = (row[n - 1] - row[n - 2]) / (t.p_grid[n - 1] - t.p_grid[n - 2]);
  if (v > last_slope) return ExtendedReal::infinity();
  double best = -kInf;
  if (t.p_grid[0] > 0.0) best = -interpolate_row(t.p_grid, row, 0.0);
  for (std::size_t j = 0; j < n; ++j) best = std::max(best, t.p_grid[j] * v - row[j]);
  return best;
}

Lagrangian::Lagrangian(HamiltonianSpec H, TransformGrid grid, TransformMethod method)
    : H_(std::move(H)), grid_(grid), method_(method) {
  if (!(grid_.p_max > 0.0) || grid_.n_p < 1) throw InputError("Lagrangian: transform grid needs p_max > 0, n_p >= 1");
}

ExtendedReal Lagrangian::operator()(const GraphPoint& x, double v) const {
  return legendre_transform(H_, x, v, grid_.p_max, grid_.n_p, method_);
}

double Lagrangian::speed_bound(const GraphPoint& x) const {
  if (H_.is_composite()) {
    const CompositeForm& c = H_.composite_form();
    if (method_ == TransformMethod::Auto) return c.sigma(x) * c.h.speed_bound();
    return grid_tail_slope([&](double p) { return H_(x, p); }, grid_.p_max, grid_.n_p);
  }
  const TabulatedForm& t = H_.tabulated_form();
  std::vector<double> row = H_.tabulated_row(x);
  if (method_ == TransformMethod::Grid) {
    return grid_tail_slope([&](double p) { return interpolate_row(t.p_grid, row, p); }, grid_.p_max, grid_.n_p);
  }
  std::size_t n = t.p_grid.size();
  return (row[n - 1] - row[n - 2]) / (t.p_grid[n - 1] - t.p_grid[n - 2]);
}

double dual_roundtrip(const Lagrangian& L, const GraphPoint& x, double p, double v_max, int n_v) {
  if (!(p >= 0.0)) throw InputError("dual_roundtrip needs p >= 0");
  if (!(v_max > 0.0) || n_v < 1) throw InputError("dual_roundtrip needs v_max > 0 and n_v >= 1");
  double bound = std::min(v_max, L.speed_bound(x));
  if (!(bound >= 0.0)) throw InputError("dual_roundtrip: negative speed bound");
  double best = -kInf;
  for (int i = 0; i <= n_v; ++i) {
    double v = i == n_v ? bound : bound * static_cast<double>(i) / static_cast<double>(n_v);
    ExtendedReal cost = L(x, v);
    if (cost.is_finite()) best = std::max(best, p * v - cost.value());
  }
  return best;
}

double hamiltonian_sup(const HamiltonianSpec& H, const SpaceLattice& lattice, double p) {
  double best = -kInf;
  for (const LatticeNode& node : lattice.nodes()) best = std::max(best, H(node.point, p));
  return best;
}

ExtendedReal ell_envelope(const Lagrangian& L, const SpaceLattice& lattice, double v) {
  if (!(v >= 0.0)) throw InputError("ell_envelope needs v >= 0");
  ExtendedReal best = ExtendedReal::infinity();
  for (const LatticeNode& node : lattice.nodes()) best = min(best, L(node.point, v));
  return best;
}

std::vector<ExtendedReal> ell_growth_ratios(const Lagrangian& L, const SpaceLattice& lattice, double v0, double ratio,
                                            int count) {
  if (!(v0 > 0.0) || !(ratio > 1.0)) throw InputError("ell_growth_ratios needs v0 > 0 and ratio > 1");
  std::vector<ExtendedReal> out;
  double v = v0;
  for (int k = 0; k < count; ++k, v *= ratio) {
    ExtendedReal ell = ell_envelope(L, lattice, v);
    out.push_back(ell.is_finite() ? ExtendedReal(ell.value() / v) : ell);
  }
  return out;
}

double lagrangian_rest_sup(const Lagrangian& L, const SpaceLattice& lattice) {
  double best = 0.0;
  for (const LatticeNode& node : lattice.nodes()) best = std::max(best, std::abs(L(node.point, 0.0).value()));
  return best;
}

bool AssumptionReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const AssumptionCheck& c) { return c.pass; });
}

const AssumptionCheck& AssumptionReport::find(const std::string& name) const {
  for (const AssumptionCheck& c : checks) {
    if (c.name == name) return c;
  }
  throw InputError("no assumption check named " + name);
}

AssumptionReport check_assumptions(const HamiltonianSpec& H, const SpaceLattice& lattice,
                                   const AssumptionGrids& grids) {
  if (lattice.size() == 0) throw InputError("check_assumptions needs a nonempty lattice");
  if (!(grids.p_max > 0.0) || grids.n_p < 2 || !(grids.v_max > 0.0) || grids.n_v < 1) {
    throw InputError("check_assumptions: invalid sampling grids");
  }
  AssumptionReport report;
  auto p_at = [&](int j) { return grids.p_max * static_cast<double>(j) / static_cast<double>(grids.n_p); };
  std::size_t n_nodes = lattice.size();

  std::vector<std::vector<double>> values(n_nodes, std::vector<double>(grids.n_p + 1));
  bool finite = true;
  for (std::size_t i = 0; i < n_nodes; ++i) {
    for (int j = 0; j <= grids.n_p; ++j) {
      values[i][j] = H(lattice.node(i).point, p_at(j));
      finite = finite && std::isfinite(values[i][j]);
    }
  }
  {
    AssumptionCheck a1{"A1", finite, finite ? "all sampled values finite" : "non-finite H value sampled"};
    if (H.is_composite()) {
      double sigma_min = kInf;
      for (const LatticeNode& node : lattice.nodes()) sigma_min = std::min(sigma_min, H.composite_form().sigma(node.point));
      if (!(sigma_min > 0.0)) {
        a1.pass = false;
        a1.detail = "inf sigma = " + format_double(sigma_min) + " is not positive";
      }
    }
    report.checks.push_back(a1);
  }

  {
    bool monotone = true;
    bool convex = true;
    std::ostringstream detail;
    for (std::size_t i = 0; i < n_nodes && (monotone || convex); ++i) {
      const std::vector<double>& row = values[i];
      for (int j = 0; j + 1 <= grids.n_p; ++j) {
        double scale = 1.0 + std::abs(row[j]);
        if (monotone && row[j + 1] < row[j] - 1e-12 * scale) {
          monotone = false;
          detail << "decreasing at node " << i << ", p=" << format_double(p_at(j)) << "; ";
        }
        if (convex && j + 2 <= grids.n_p && row[j + 2] - 2.0 * row[j + 1] + row[j] < -1e-9 * scale) {
          convex = false;
          detail << "nonconvex at node " << i << ", p=" << format_double(p_at(j + 1)) << "; ";
        }
      }
    }
    report.checks.push_back({"A2", monotone && convex, monotone && convex ? "monotone and convex" : detail.str()});
  }

  double c_H0 = -kInf;
  {
    bool ok = true;
    for (int j = 0; j <= grids.n_p; ++j) {
      double sup = -kInf;
      for (std::size_t i = 0; i < n_nodes; ++i) sup = std::max(sup, values[i][j]);
      ok = ok && std::isfinite(sup);
      if (j == 0) c_H0 = sup;
    }
    report.checks.push_back({"A3", ok, "c_H(0) = " + format_double(c_H0)});
  }

  {
    double inf_h0 = kInf;
    for (std::size_t i = 0; i < n_nodes; ++i) inf_h0 = std::min(inf_h0, values[i][0]);
    auto growth = [&](double p) {
      double worst = kInf;
      for (std::size_t i = 0; i < n_nodes; ++i) {
        GraphPoint x = lattice.node(i).point;
        worst = std::min(worst, (H(x, p) - H(x, 0.0)) / p);
      }
      return worst;
    };
    double top = growth(grids.p_max);
    double half = growth(0.5 * grids.p_max);
    bool ok = std::isfinite(inf_h0) && top > 1e-8 && top >= half * (1.0 - 1e-6);
    report.checks.push_back({"A4", ok,
                             "inf H(.,0) = " + format_double(inf_h0) + ", growth ratio at p_max = " + format_double(top) +
                                 ", at p_max/2 = " + format_double(half)});
  }

  Lagrangian L(H, TransformGrid{grids.p_max, grids.n_p});
  try {
    double worst = kInf;
    for (const LatticeNode& node : lattice.nodes()) {
      for (int k = 0; k <= grids.n_v; ++k) {
        double v = grids.v_max * static_cast<double>(k) / static_cast<double>(grids.n_v);
        ExtendedReal cost = L(node.point, v);
        if (cost.is_finite()) worst = std::min(worst, cost.value() + c_H0);
      }
    }
    report.checks.push_back({"A3'", worst >= -1e-9, "min of L + c_H(0) = " + format_double(worst)});

    double speed = kInf;
    for (const LatticeNode& node : lattice.nodes()) speed = std::min(speed, L.speed_bound(node.point));
    double probe = std::isfinite(speed) ? speed : 1.0;
    double sup_cost = -kInf;
    for (const LatticeNode& node : lattice.nodes()) sup_cost = std::max(sup_cost, L(node.point, probe).raw());
    bool ok = probe > 0.0 && std::isfinite(sup_cost);
    report.checks.push_back(
        {"A4'", ok, "V_L = " + format_double(probe) + ", sup_x L(x, V_L) = " + format_double(sup_cost)});

    double jump = 0.0;
    for (std::size_t i = 0; i < n_nodes; ++i) {
      double here = L.speed_bound(lattice.node(i).point);
      for (const Neighbor& nb : lattice.neighbors(i)) {
        double there = L.speed_bound(lattice.node(nb.node).point);
        if (std::isfinite(here) && std::isfinite(there)) jump = std::max(jump, std::abs(here - there));
      }
    }
    report.checks.push_back({"A5", true, "largest V_L jump across a cell = " + format_double(jump)});
  } catch (const AssumptionError& e) {
    report.checks.push_back({"A3'", false, e.what()});
    report.checks.push_back({"A4'", false, e.what()});
    report.checks.push_back({"A5", true, "not evaluated"});
  }
  return report;
}

}  // namespace hjm
