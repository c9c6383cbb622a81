#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hjm/curves.hpp"
#include "hjm/hamiltonian.hpp"
#include "hjm/solver.hpp"

namespace hjm {

/// Where a check failed: the anchor (x, t), the time lag h and the curve used there.
struct Counterexample {
  std::string check;
  GraphPoint x;
  double t = 0.0;
  double h = 0.0;
  double violation = 0.0;
  std::string curve;  // serialized AdmissibleCurve
};

std::string serialize(const Counterexample& c);
Counterexample parse_counterexample(const std::string& text);

/// One check's outcome. `pass` is exactly `worst_violation <= tolerance`, and a
/// counterexample is attached exactly when the check failed.
struct CheckRecord {
  std::string name;
  std::size_t samples = 0;
  double worst_violation = 0.0;
  double tolerance = 0.0;
  bool pass = true;
  std::optional<Counterexample> counterexample;
};

/// Sets `pass` from the violation and drops the counterexample of a passing record.
CheckRecord finalize(CheckRecord record);

/// Worst-case merge of records for the same check.
CheckRecord merge_records(const std::string& name, std::span<const CheckRecord> records);

struct VerificationReport {
  std::vector<CheckRecord> records;

  bool all_passed() const;
  /// Blocks of "key value" lines, one block per record.
  std::string to_text() const;
  /// check,samples,worst_violation,tolerance,pass
  std::string to_csv() const;
};

struct CurveSampling {
  int curves = 200;
  int anchors = 20;
  std::uint64_t seed = 1;
  double v_cap = 1.0;
  int n_quad = 32;
};

/// 1 + |c_H(0)| + sup |L(., 0)| + Lip(u0): the scale of the scheme's consistency error.
double stability_constant(const Lagrangian& L, const SpaceLattice& lattice, const InitialDatum& u0);

/// u(x, t) - int_0^h L[xi] - u(xi(h), t - h) over sampled anchors, curves and lags.
CheckRecord check_suboptimality(const ValueGrid& u, const Lagrangian& L, const CurveSampling& sampling, double tol);

/// int_0^h L[xi] + u(xi(h), t - h) - u(x, t) along `witness` for every grid lag h in [0, t].
/// Throws InputError when the witness does not start at x.
CheckRecord check_superoptimality(const ValueGrid& u, const Lagrangian& L, const AdmissibleCurve& witness,
                                  const GraphPoint& x, double t, double eps, int n_quad = 32);

/// Finite-difference residual q + H(xi(s), |p|) of w(s, t) = u(xi(s), t) along sampled curves
/// with speeds <= 1, at stencil points that pass the smoothness filter.
CheckRecord check_metric_viscosity(const ValueGrid& u, const HamiltonianSpec& H, const CurveSampling& sampling,
                                   double tol, int points_per_curve = 4);

/// sup (u_sub - v_super) - sup_x (u_sub - v_super)(x, 0). Throws InputError on grid mismatch.
CheckRecord check_comparison(const ValueGrid& u_sub, const ValueGrid& v_super, double tol);

/// -c_H(0) t + inf u0 <= U(x, t) <= t L(x, 0) + u0(x) at every entry, u0 = U[., 0].
CheckRecord check_a_priori_bounds(const ValueGrid& u, const Lagrangian& L, double tol);

/// max |U[., 0] - u0| (exact equality expected).
CheckRecord check_initial_condition(const ValueGrid& u, const InitialDatum& u0);

struct ModulusRow {
  double delta = 0.0;
  double omega = 0.0;
  std::size_t pairs = 0;
};

/// omega(delta) = max |U(x, t) - U(y, s)| over pairs with d(x, y) + |t - s| <= delta, from
/// `anchors` random (node, layer) anchors shared by every delta (so omega is monotone in delta).
std::vector<ModulusRow> estimate_modulus(const ValueGrid& u, std::span<const double> deltas, int anchors = 64,
                                         std::uint64_t seed = 7);

/// Passes when omega is nondecreasing in delta and omega at the smallest delta is <= tol.
CheckRecord check_modulus(std::span<const ModulusRow> rows, double tol);

/// Recomputes the violation stored in a suboptimality or superoptimality counterexample.
double replay(const ValueGrid& u, const Lagrangian& L, const Counterexample& c, int n_quad = 32);

}  // namespace hjm
