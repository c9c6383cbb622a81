#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hjm/scenario.hpp"
#include "hjm/solver.hpp"
#include "hjm/verification.hpp"

namespace hjm {

enum class Command { Solve, Verify, Transform, Converge };

std::optional<Command> parse_command(const std::string& name);

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int verification_failed = 1;
inline constexpr int config_error = 2;
inline constexpr int internal_error = 3;
}  // namespace exit_code

struct RunOverrides {
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<Orientation> orientation;
};

/// Applies command-line overrides to a loaded scenario.
Scenario with_overrides(Scenario s, const RunOverrides& overrides);

/// Runs one command and writes its files into `s.output`. Progress goes to `log`.
/// Returns an exit code; configuration problems propagate as ConfigError.
int run(Command command, const Scenario& s, std::ostream& log);

/// Loads the scenario, applies overrides and runs, mapping exceptions to exit codes
/// (diagnostics go to `err`).
int run(const std::string& command, const std::filesystem::path& scenario_path, const RunOverrides& overrides,
        std::ostream& log, std::ostream& err);

// CSV emitters. Every value goes through format_double, so output is byte-stable.

/// node_id,edge_id,offset,t,U with U multiplied by `sign`.
std::string value_grid_csv(const ValueGrid& u, double sign = 1.0);
/// probe,step,h,edge_id,offset: the curve sampled at every grid lag.
std::string trajectories_csv(const std::vector<AdmissibleCurve>& curves, const std::vector<double>& horizons, double dt);
/// node,v,L,roundtrip_error where roundtrip_error = |H**(x, p) - H(x, p)| at p = v.
std::string legendre_csv(const Problem& p, const Scenario& s);
/// level,dx,dt,max_error,observed_order (empty order on the first level).
std::string convergence_csv(const std::vector<RefinementRow>& rows);
/// delta,omega,pairs
std::string modulus_csv(const std::vector<ModulusRow>& rows);

/// The checks run by `verify` on a solved grid (orientation already folded into the problem).
/// `extra_anchor` (node, step) is added to the superoptimality anchors.
VerificationReport verify_grid(const Scenario& s, const Problem& p, const ValueGrid& u,
                               std::optional<std::pair<std::size_t, std::size_t>> extra_anchor = std::nullopt);

/// The entry targeted by the corruption settings and how far it is lowered (10x the
/// superoptimality tolerance). Defaults: the middle node at the last step.
struct Corruption {
  std::size_t node = 0;
  std::size_t step = 0;
  double amount = 0.0;
};
Corruption corruption_target(const Scenario& s, const Problem& p, const ValueGrid& u);

/// The superoptimality tolerance 5 (dx + dt) C1 (factor from the scenario).
double superoptimality_tolerance(const Scenario& s, const Problem& p);

}  // namespace hjm
