#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hjm/hamiltonian.hpp"
#include "hjm/metric_graph.hpp"
#include "hjm/solver.hpp"

namespace hjm {

/// A constant, or a per-node CSV table (`node,value`) resolved against the lattice.
struct FieldSetting {
  double constant = 0.0;
  std::optional<std::filesystem::path> table;
};

struct InitialSetting {
  enum class Kind { Constant, Distance, Bump, Table };
  Kind kind = Kind::Constant;
  double value = 0.0;       // constant
  std::size_t vertex = 0;   // distance, bump
  double radius = 1.0;      // bump
  double height = 1.0;      // bump
  std::filesystem::path table;
};

struct Probe {
  GraphPoint x;
  double t = 0.0;
};

enum class Orientation { Min, Max };

struct Scenario {
  std::filesystem::path source;

  std::size_t vertices = 0;
  std::vector<EdgeSpec> edges;

  bool tabulated = false;
  std::string profile = "quadratic";
  double exponent = 2.0;
  FieldSetting sigma{1.0, std::nullopt};
  FieldSetting f{0.0, std::nullopt};
  std::filesystem::path hamiltonian_table;

  InitialSetting u0;

  double T = 1.0;
  double dt = 0.01;
  double dx = 0.02;
  SpeedPolicy v_policy = SpeedPolicy::Geometric;
  std::vector<double> v_list;  // explicit speeds; empty unless v_grid = list
  int v_count = 64;
  std::optional<double> v_max;
  Orientation orientation = Orientation::Min;
  unsigned threads = 1;

  TransformMethod transform_method = TransformMethod::Auto;
  double p_max = 100.0;
  int n_p = 1024;
  double transform_v_max = 5.0;
  int transform_samples = 50;
  int roundtrip_n_v = 4096;

  std::uint64_t seed = 1;
  int curves = 200;
  int triples = 20;
  double sub_factor = 3.0;
  double super_factor = 5.0;
  double bounds_factor = 2.0;
  double viscosity_c2 = 10.0;
  bool inject_corruption = false;
  std::optional<std::size_t> corrupt_node;
  std::optional<std::size_t> corrupt_step;

  int levels = 3;
  std::filesystem::path output = "out";
  std::vector<Probe> probes;
};

/// Parses and validates scenario text. Relative paths resolve against `base_dir`, and every
/// referenced file must exist. Throws ParseError for malformed lines and ConfigError naming
/// the offending key for invalid or unknown settings.
Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir);

/// Reads `path` and parses it. A missing or unreadable file is a ConfigError.
Scenario load_scenario(const std::filesystem::path& path);

/// Everything a command needs, built from a scenario. With orientation max, u0 and f are
/// negated so that the solver's infimum computes the negated value.
struct Problem {
  std::shared_ptr<const MetricGraph> graph;
  std::shared_ptr<const SpaceLattice> lattice;
  HamiltonianSpec hamiltonian;
  Lagrangian lagrangian;
  InitialDatum initial;
  std::vector<double> speeds;
  double sign = 1.0;  // multiply internal values by this before emitting
};

Problem build_problem(const Scenario& s);

/// CSV `node,value` with one row per lattice node, in node order.
std::vector<double> read_node_table(const std::filesystem::path& path, std::size_t nodes, const std::string& key);

/// CSV with header `node,<p_0>,...,<p_m>` and one row of H values per lattice node.
HamiltonianSpec read_hamiltonian_table(const std::filesystem::path& path, std::shared_ptr<const SpaceLattice> lattice);

}  // namespace hjm
