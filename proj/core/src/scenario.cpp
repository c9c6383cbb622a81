#include "hjm/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "hjm/errors.hpp"

namespace hjm {

namespace {

namespace fs = std::filesystem;

struct Value {
  std::string text;
  std::size_t line = 0;
  std::size_t column = 0;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::optional<double> to_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

std::optional<long long> to_integer(const std::string& s) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "vertices",      "hamiltonian",       "h",                "sigma",         "f",
      "hamiltonian_table", "u0",            "T",                "dt",            "dx",
      "v_grid",        "v_count",           "v_max",            "orientation",   "threads",
      "transform_method", "p_max",          "n_p",              "transform_v_max", "transform_samples",
      "roundtrip_n_v", "seed",              "curves",           "triples",       "sub_factor",
      "super_factor",  "bounds_factor",     "viscosity_c2",     "inject_corruption", "corrupt_node",
      "corrupt_step",  "levels",            "output"};
  return keys;
}

class Reader {
 public:
  Reader(const std::map<std::string, Value>& values, fs::path base) : values_(values), base_(std::move(base)) {}

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::string& text(const std::string& key) const { return values_.at(key).text; }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const auto v = to_double(text(key));
    if (!v || !std::isfinite(*v)) throw ConfigError("key '" + key + "': expected a finite number", key);
    return *v;
  }

  double positive(const std::string& key, double fallback) const {
    const double v = number(key, fallback);
    if (!(v > 0.0)) throw ConfigError("key '" + key + "': must be > 0", key);
    return v;
  }

  long long integer(const std::string& key, long long fallback, long long min_value) const {
    if (!has(key)) return fallback;
    const auto v = to_integer(text(key));
    if (!v) throw ConfigError("key '" + key + "': expected an integer", key);
    if (*v < min_value) throw ConfigError("key '" + key + "': must be >= " + std::to_string(min_value), key);
    return *v;
  }

  fs::path existing_path(const std::string& key, const std::string& raw) const {
    fs::path p(raw);
    if (p.is_relative()) p = base_ / p;
    if (!fs::exists(p)) throw ConfigError("key '" + key + "': file not found: " + p.string(), key);
    return p;
  }

  FieldSetting field(const std::string& key, double fallback) const {
    if (!has(key)) return FieldSetting{fallback, std::nullopt};
    const auto words = split_ws(text(key));
    if (words.size() == 2 && words[0] == "table") return FieldSetting{0.0, existing_path(key, words[1])};
    return FieldSetting{number(key, fallback), std::nullopt};
  }

  const fs::path& base() const { return base_; }

 private:
  const std::map<std::string, Value>& values_;
  fs::path base_;
};

std::vector<double> parse_row(const std::string& line, std::size_t line_no, std::size_t expected) {
  std::vector<double> row;
  std::size_t pos = 0;
  while (pos < line.size()) {
    const auto b = line.find_first_not_of(" \t\r", pos);
    if (b == std::string::npos) break;
    auto e = line.find_first_of(" \t\r", b);
    if (e == std::string::npos) e = line.size();
    const std::string word = line.substr(b, e - b);
    const auto v = to_double(word);
    if (!v) throw ParseError("expected a number, found '" + word + "'", line_no, b + 1);
    row.push_back(*v);
    pos = e;
  }
  if (row.size() != expected) {
    throw ParseError("expected " + std::to_string(expected) + " numbers, found " + std::to_string(row.size()),
                     line_no, 1);
  }
  return row;
}

std::size_t as_index(double v, const std::string& what, std::size_t line_no) {
  if (!(v >= 0.0) || v != std::floor(v)) throw ParseError(what + " must be a nonnegative integer", line_no, 1);
  return static_cast<std::size_t>(v);
}

void parse_initial(const Reader& r, Scenario& s) {
  if (!r.has("u0")) return;
  const auto words = split_ws(r.text("u0"));
  auto bad = [](const std::string& why) { return ConfigError("key 'u0': " + why, "u0"); };
  if (words.empty()) throw bad("missing value");
  auto num = [&](std::size_t i) {
    const auto v = to_double(words[i]);
    if (!v || !std::isfinite(*v)) throw bad("expected a number, found '" + words[i] + "'");
    return *v;
  };
  auto vertex = [&](std::size_t i) {
    const auto v = to_integer(words[i]);
    if (!v || *v < 0) throw bad("expected a vertex index, found '" + words[i] + "'");
    return static_cast<std::size_t>(*v);
  };
  const std::string& kind = words[0];
  if (kind == "constant" && words.size() == 2) {
    s.u0.kind = InitialSetting::Kind::Constant;
    s.u0.value = num(1);
  } else if (kind == "distance" && words.size() == 2) {
    s.u0.kind = InitialSetting::Kind::Distance;
    s.u0.vertex = vertex(1);
  } else if (kind == "bump" && words.size() == 4) {
    s.u0.kind = InitialSetting::Kind::Bump;
    s.u0.vertex = vertex(1);
    s.u0.radius = num(2);
    s.u0.height = num(3);
    if (!(s.u0.radius > 0.0)) throw bad("bump radius must be > 0");
  } else if (kind == "table" && words.size() == 2) {
    s.u0.kind = InitialSetting::Kind::Table;
    s.u0.table = r.existing_path("u0", words[1]);
  } else {
    throw bad("expected 'constant C', 'distance V', 'bump V RADIUS HEIGHT' or 'table PATH'");
  }
  if ((s.u0.kind == InitialSetting::Kind::Distance || s.u0.kind == InitialSetting::Kind::Bump) &&
      s.u0.vertex >= s.vertices) {
    throw bad("vertex " + std::to_string(s.u0.vertex) + " out of range");
  }
}

void parse_hamiltonian(const Reader& r, Scenario& s) {
  const std::string form = r.has("hamiltonian") ? r.text("hamiltonian") : "composite";
  if (form == "composite") {
    s.tabulated = false;
  } else if (form == "tabulated") {
    s.tabulated = true;
    if (!r.has("hamiltonian_table")) {
      throw ConfigError("key 'hamiltonian_table': required for the tabulated form", "hamiltonian_table");
    }
    s.hamiltonian_table = r.existing_path("hamiltonian_table", r.text("hamiltonian_table"));
  } else {
    throw ConfigError("key 'hamiltonian': expected 'composite' or 'tabulated'", "hamiltonian");
  }
  if (s.tabulated) {
    for (const char* key : {"h", "sigma", "f"}) {
      if (r.has(key)) throw ConfigError(std::string("key '") + key + "': not used by the tabulated form", key);
    }
    return;
  }
  if (r.has("hamiltonian_table")) {
    throw ConfigError("key 'hamiltonian_table': only used by the tabulated form", "hamiltonian_table");
  }
  const std::string h = r.has("h") ? r.text("h") : "quadratic";
  if (h == "quadratic") {
    s.profile = "quadratic";
    s.exponent = 2.0;
  } else if (h == "linear") {
    s.profile = "linear";
    s.exponent = 1.0;
  } else if (h.rfind("power(", 0) == 0 && h.back() == ')') {
    const auto a = to_double(h.substr(6, h.size() - 7));
    if (!a || !(*a > 1.0) || !std::isfinite(*a)) throw ConfigError("key 'h': power exponent must be > 1", "h");
    s.profile = "power";
    s.exponent = *a;
  } else {
    throw ConfigError("key 'h': expected 'quadratic', 'linear' or 'power(a)'", "h");
  }
  s.sigma = r.field("sigma", 1.0);
  s.f = r.field("f", 0.0);
  if (!s.sigma.table && !(s.sigma.constant > 0.0)) throw ConfigError("key 'sigma': must be > 0", "sigma");
}

void parse_speeds(const Reader& r, Scenario& s) {
  s.v_count = static_cast<int>(r.integer("v_count", 64, 1));
  if (r.has("v_max")) s.v_max = r.positive("v_max", 1.0);
  if (!r.has("v_grid")) return;
  const auto words = split_ws(r.text("v_grid"));
  if (words.size() == 1 && words[0] == "geometric") {
    s.v_policy = SpeedPolicy::Geometric;
  } else if (words.size() == 1 && words[0] == "uniform") {
    s.v_policy = SpeedPolicy::Uniform;
  } else if (words.size() >= 2 && words[0] == "list") {
    for (std::size_t i = 1; i < words.size(); ++i) {
      const auto v = to_double(words[i]);
      if (!v || !std::isfinite(*v) || *v < 0.0) {
        throw ConfigError("key 'v_grid': bad speed '" + words[i] + "'", "v_grid");
      }
      s.v_list.push_back(*v);
    }
    std::sort(s.v_list.begin(), s.v_list.end());
    s.v_list.erase(std::unique(s.v_list.begin(), s.v_list.end()), s.v_list.end());
    if (s.v_list.front() != 0.0) throw ConfigError("key 'v_grid': the speed list must contain 0", "v_grid");
  } else {
    throw ConfigError("key 'v_grid': expected 'geometric', 'uniform' or 'list v0 v1 ...'", "v_grid");
  }
}

bool parse_bool(const Reader& r, const std::string& key) {
  if (!r.has(key)) return false;
  const auto& v = r.text(key);
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("key '" + key + "': expected 'true' or 'false'", key);
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir) {
  std::map<std::string, Value> values;
  std::vector<std::pair<std::vector<double>, std::size_t>> edge_rows;
  std::vector<std::pair<std::vector<double>, std::size_t>> probe_rows;
  enum class Section { None, Edges, Probes } section = Section::None;
  std::size_t section_line = 0;
  bool saw_edges = false;
  bool saw_probes = false;

  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = hash == std::string::npos ? raw : raw.substr(0, hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const std::size_t indent = line.find_first_not_of(" \t") + 1;

    if (content.front() == '[') {
      if (content == "[end]") {
        if (section == Section::None) throw ParseError("'[end]' without an open section", line_no, indent);
        section = Section::None;
      } else if (section != Section::None) {
        throw ParseError("section opened before '[end]'", line_no, indent);
      } else if (content == "[edges]") {
        if (saw_edges) throw ParseError("duplicate section '[edges]'", line_no, indent);
        section = Section::Edges;
        saw_edges = true;
        section_line = line_no;
      } else if (content == "[probes]") {
        if (saw_probes) throw ParseError("duplicate section '[probes]'", line_no, indent);
        section = Section::Probes;
        saw_probes = true;
        section_line = line_no;
      } else {
        throw ParseError("unknown section '" + content + "'", line_no, indent);
      }
      continue;
    }

    if (section == Section::Edges) {
      edge_rows.emplace_back(parse_row(line, line_no, 3), line_no);
      continue;
    }
    if (section == Section::Probes) {
      probe_rows.emplace_back(parse_row(line, line_no, 3), line_no);
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no, indent);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError("missing key before '='", line_no, eq + 1);
    if (key.find_first_of(" \t") != std::string::npos) throw ParseError("malformed key '" + key + "'", line_no, indent);
    if (value.empty()) throw ParseError("missing value after '='", line_no, eq + 2);
    if (!known_keys().count(key)) throw ConfigError("unknown key '" + key + "'", key);
    if (values.count(key)) throw ConfigError("duplicate key '" + key + "'", key);
    values[key] = Value{value, line_no, indent};
  }
  if (section != Section::None) throw ParseError("section is not closed with '[end]'", section_line, 1);

  Reader r(values, base_dir);
  Scenario s;

  if (!r.has("vertices")) throw ConfigError("key 'vertices': required", "vertices");
  s.vertices = static_cast<std::size_t>(r.integer("vertices", 0, 1));
  if (edge_rows.empty()) throw ConfigError("section 'edges': at least one edge is required", "edges");
  for (const auto& [row, ln] : edge_rows) {
    s.edges.push_back(EdgeSpec{as_index(row[0], "edge endpoint", ln), as_index(row[1], "edge endpoint", ln), row[2]});
  }
  // Graph validation (endpoints, lengths, connectivity) reports under the 'edges' key.
  try {
    MetricGraph check(s.vertices, s.edges);
  } catch (const InputError& e) {
    throw ConfigError(std::string("section 'edges': ") + e.what(), "edges");
  }

  parse_hamiltonian(r, s);
  parse_initial(r, s);

  s.T = r.positive("T", 1.0);
  s.dt = r.positive("dt", 0.01);
  s.dx = r.positive("dx", 0.02);
  parse_speeds(r, s);

  if (r.has("orientation")) {
    const auto& o = r.text("orientation");
    if (o == "min") {
      s.orientation = Orientation::Min;
    } else if (o == "max") {
      s.orientation = Orientation::Max;
    } else {
      throw ConfigError("key 'orientation': expected 'min' or 'max'", "orientation");
    }
  }
  if (s.orientation == Orientation::Max && s.tabulated) {
    throw ConfigError("key 'orientation': 'max' is only available for the composite form", "orientation");
  }
  s.threads = static_cast<unsigned>(r.integer("threads", 1, 1));

  if (r.has("transform_method")) {
    const auto& m = r.text("transform_method");
    if (m == "auto") {
      s.transform_method = TransformMethod::Auto;
    } else if (m == "grid") {
      s.transform_method = TransformMethod::Grid;
    } else {
      throw ConfigError("key 'transform_method': expected 'auto' or 'grid'", "transform_method");
    }
  }
  s.p_max = r.positive("p_max", 100.0);
  s.n_p = static_cast<int>(r.integer("n_p", 1024, 1));
  s.transform_v_max = r.positive("transform_v_max", 5.0);
  s.transform_samples = static_cast<int>(r.integer("transform_samples", 50, 1));
  s.roundtrip_n_v = static_cast<int>(r.integer("roundtrip_n_v", 4096, 1));

  s.seed = static_cast<std::uint64_t>(r.integer("seed", 1, 0));
  s.curves = static_cast<int>(r.integer("curves", 200, 1));
  s.triples = static_cast<int>(r.integer("triples", 20, 1));
  s.sub_factor = r.positive("sub_factor", 3.0);
  s.super_factor = r.positive("super_factor", 5.0);
  s.bounds_factor = r.positive("bounds_factor", 2.0);
  s.viscosity_c2 = r.positive("viscosity_c2", 10.0);
  s.inject_corruption = parse_bool(r, "inject_corruption");
  if (r.has("corrupt_node")) s.corrupt_node = static_cast<std::size_t>(r.integer("corrupt_node", 0, 0));
  if (r.has("corrupt_step")) s.corrupt_step = static_cast<std::size_t>(r.integer("corrupt_step", 0, 1));
  if ((s.corrupt_node || s.corrupt_step) && !s.inject_corruption) {
    const std::string key = s.corrupt_node ? "corrupt_node" : "corrupt_step";
    throw ConfigError("key '" + key + "': requires inject_corruption = true", key);
  }

  s.levels = static_cast<int>(r.integer("levels", 3, 2));
  if (r.has("output")) {
    fs::path out(r.text("output"));
    s.output = out.is_relative() ? base_dir / out : out;
  } else {
    s.output = base_dir / "out";
  }

  MetricGraph g(s.vertices, s.edges);
  for (const auto& [row, ln] : probe_rows) {
    const std::size_t e = as_index(row[0], "probe edge", ln);
    if (e >= g.edges().size()) throw ConfigError("section 'probes': edge out of range (line " + std::to_string(ln) + ")", "probes");
    const double len = g.edge(e).length;
    if (!(row[1] >= 0.0 && row[1] <= len)) {
      throw ConfigError("section 'probes': offset outside the edge (line " + std::to_string(ln) + ")", "probes");
    }
    if (!(row[2] >= 0.0 && row[2] <= s.T)) {
      throw ConfigError("section 'probes': time outside [0, T] (line " + std::to_string(ln) + ")", "probes");
    }
    s.probes.push_back(Probe{GraphPoint{e, row[1]}, row[2]});
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read scenario file: " + path.string(), "scenario");
  std::ostringstream text;
  text << in.rdbuf();
  Scenario s = parse_scenario(text.str(), path.parent_path().empty() ? fs::path(".") : path.parent_path());
  s.source = path;
  return s;
}

namespace {

std::vector<std::vector<std::string>> read_csv(const fs::path& path, const std::string& key) {
  std::ifstream in(path);
  if (!in) throw ConfigError("key '" + key + "': cannot read " + path.string(), key);
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(in, line);) {
    line = trim(line);
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(trim(cell));
    rows.push_back(std::move(cells));
  }
  return rows;
}

double table_number(const std::string& cell, const fs::path& path, std::size_t row, const std::string& key) {
  const auto v = to_double(cell);
  if (!v || !std::isfinite(*v)) {
    throw ConfigError("key '" + key + "': " + path.filename().string() + " row " + std::to_string(row) +
                          ": expected a finite number, found '" + cell + "'",
                      key);
  }
  return *v;
}

}  // namespace

std::vector<double> read_node_table(const std::filesystem::path& path, std::size_t nodes, const std::string& key) {
  const auto rows = read_csv(path, key);
  if (rows.empty() || rows[0].size() != 2 || rows[0][0] != "node") {
    throw ConfigError("key '" + key + "': " + path.filename().string() + ": expected header 'node,value'", key);
  }
  if (rows.size() - 1 != nodes) {
    throw ConfigError("key '" + key + "': " + path.filename().string() + " has " + std::to_string(rows.size() - 1) +
                          " rows, the lattice has " + std::to_string(nodes) + " nodes",
                      key);
  }
  std::vector<double> values(nodes);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 2) throw ConfigError("key '" + key + "': row " + std::to_string(i) + " needs 2 cells", key);
    const double id = table_number(rows[i][0], path, i, key);
    if (id != static_cast<double>(i - 1)) {
      throw ConfigError("key '" + key + "': rows must list nodes 0.." + std::to_string(nodes - 1) + " in order", key);
    }
    values[i - 1] = table_number(rows[i][1], path, i, key);
  }
  return values;
}

HamiltonianSpec read_hamiltonian_table(const std::filesystem::path& path, std::shared_ptr<const SpaceLattice> lattice) {
  const std::string key = "hamiltonian_table";
  const auto rows = read_csv(path, key);
  if (rows.empty() || rows[0].size() < 3 || rows[0][0] != "node") {
    throw ConfigError("key '" + key + "': expected header 'node,p_0,...,p_m' with at least two p values", key);
  }
  std::vector<double> p_grid;
  for (std::size_t j = 1; j < rows[0].size(); ++j) p_grid.push_back(table_number(rows[0][j], path, 0, key));
  for (std::size_t j = 1; j < p_grid.size(); ++j) {
    if (!(p_grid[j] > p_grid[j - 1])) throw ConfigError("key '" + key + "': p values must increase", key);
  }
  if (p_grid.front() != 0.0) throw ConfigError("key '" + key + "': the p grid must start at 0", key);
  if (rows.size() - 1 != lattice->size()) {
    throw ConfigError("key '" + key + "': " + std::to_string(rows.size() - 1) + " rows, the lattice has " +
                          std::to_string(lattice->size()) + " nodes",
                      key);
  }
  std::vector<std::vector<double>> table;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != p_grid.size() + 1) {
      throw ConfigError("key '" + key + "': row " + std::to_string(i) + " has the wrong number of cells", key);
    }
    const double id = table_number(rows[i][0], path, i, key);
    if (id != static_cast<double>(i - 1)) throw ConfigError("key '" + key + "': rows must list nodes in order", key);
    std::vector<double> row;
    for (std::size_t j = 1; j < rows[i].size(); ++j) row.push_back(table_number(rows[i][j], path, i, key));
    table.push_back(std::move(row));
  }
  try {
    return HamiltonianSpec::tabulated(std::move(p_grid), std::move(lattice), std::move(table));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("key '" + key + "': " + e.what(), key);
  } catch (const std::domain_error& e) {
    throw ConfigError("key '" + key + "': " + e.what(), key);
  }
}

Problem build_problem(const Scenario& s) {
  auto graph = std::make_shared<const MetricGraph>(s.vertices, s.edges);
  auto lattice = build_lattice(graph, s.dx);
  const double sign = s.orientation == Orientation::Max ? -1.0 : 1.0;

  auto field = [&](const FieldSetting& fs_, const std::string& key) {
    if (!fs_.table) return SpatialField::constant(fs_.constant);
    return SpatialField::on_lattice(lattice, read_node_table(*fs_.table, lattice->size(), key));
  };

  std::optional<HamiltonianSpec> H;
  if (s.tabulated) {
    H = read_hamiltonian_table(s.hamiltonian_table, lattice);
  } else {
    Profile h = s.profile == "quadratic" ? Profile::quadratic()
                : s.profile == "linear"  ? Profile::linear()
                                         : Profile::power(s.exponent);
    SpatialField sigma = field(s.sigma, "sigma");
    if (s.sigma.table) {
      for (const auto& node : lattice->nodes()) {
        if (!(sigma(node.point) > 0.0)) throw ConfigError("key 'sigma': table values must be > 0", "sigma");
      }
    }
    SpatialField f = field(s.f, "f");
    if (sign < 0.0) f = f.negated();
    H = HamiltonianSpec::composite(std::move(sigma), h, std::move(f));
  }

  std::optional<InitialDatum> u0;
  switch (s.u0.kind) {
    case InitialSetting::Kind::Constant: {
      const double c = sign * s.u0.value;
      u0 = InitialDatum::from_function(lattice, [c](const GraphPoint&) { return c; });
      break;
    }
    case InitialSetting::Kind::Distance: {
      const std::size_t v = s.u0.vertex;
      u0 = InitialDatum::from_function(lattice, [graph, v, sign](const GraphPoint& x) {
        return sign * graph->distance_to_vertex(x, v);
      });
      break;
    }
    case InitialSetting::Kind::Bump: {
      const std::size_t v = s.u0.vertex;
      const double radius = s.u0.radius;
      const double height = s.u0.height;
      u0 = InitialDatum::from_function(lattice, [graph, v, radius, height, sign](const GraphPoint& x) {
        return sign * height * std::max(0.0, 1.0 - graph->distance_to_vertex(x, v) / radius);
      });
      break;
    }
    case InitialSetting::Kind::Table: {
      auto values = read_node_table(s.u0.table, lattice->size(), "u0");
      for (auto& v : values) v *= sign;
      u0 = InitialDatum::from_values(lattice, std::move(values));
      break;
    }
  }

  Lagrangian L(*H, TransformGrid{s.p_max, s.n_p}, s.transform_method);

  std::vector<double> speeds;
  if (!s.v_list.empty()) {
    speeds = s.v_list;
  } else {
    double cap = default_speed_cap(*lattice, L, s.dt);
    if (s.v_max) cap = std::min(cap, *s.v_max);
    if (!std::isfinite(cap) || !(cap > 0.0)) {
      throw ConfigError("key 'v_grid': cannot derive a finite positive speed cap; set v_max", "v_max");
    }
    speeds = make_speed_grid(s.v_policy, cap, s.v_count);
  }

  return Problem{graph, lattice, std::move(*H), std::move(L), std::move(*u0), std::move(speeds), sign};
}

}  // namespace hjm
