#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hjm/cli.hpp"
#include "hjm/errors.hpp"

namespace hjm {
namespace {

namespace fs = std::filesystem;

fs::path scenario(const std::string& name) { return fs::path(HJM_SCENARIO_DIR) / name; }

fs::path out_dir(const std::string& name) {
  const fs::path d = fs::path(HJM_TEST_TMP) / "cli" / name;
  fs::remove_all(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

int run_cli(const std::string& command, const fs::path& path, const RunOverrides& o, std::string* err_text = nullptr) {
  std::ostringstream log, err;
  const int code = run(command, path, o, log, err);
  if (err_text) *err_text = err.str();
  return code;
}

TEST(Cli, VerifyPassesOnAConstantDatum) {
  const fs::path out = out_dir("constant");
  EXPECT_EQ(run_cli("verify", scenario("constant.hj"), {out, {}, {}}), exit_code::ok);
  EXPECT_TRUE(fs::exists(out / "report.txt"));
  EXPECT_NE(slurp(out / "report.txt").find("result pass"), std::string::npos);
  EXPECT_TRUE(fs::exists(out / "modulus.csv"));
}

TEST(Cli, VerifyCatchesInjectedCorruption) {
  const fs::path out = out_dir("corrupted");
  EXPECT_EQ(run_cli("verify", scenario("hopf_lax_corrupted.hj"), {out, {}, {}}), exit_code::verification_failed);
  const fs::path ce = out / "counterexample_superoptimality.txt";
  ASSERT_TRUE(fs::exists(ce));
  const Counterexample c = parse_counterexample(slurp(ce));
  EXPECT_EQ(c.check, "superoptimality");
  EXPECT_GT(c.violation, 0.0);
}

TEST(Cli, TransformOfTheQuadraticProfile) {
  const fs::path out = out_dir("transform_quadratic");
  ASSERT_EQ(run_cli("transform", scenario("hopf_lax_path.hj"), {out, {}, {}}), exit_code::ok);
  const auto rows = csv_rows(out / "legendre.csv");
  ASSERT_FALSE(rows.empty());
  for (const auto& r : rows) {
    ASSERT_EQ(r.size(), 4u);
    const double v = std::stod(r[1]);
    EXPECT_NEAR(std::stod(r[2]), 0.5 * v * v, 1e-9);
    EXPECT_LE(std::stod(r[3]), 1e-4);
  }
}

TEST(Cli, TransformOfTheLinearProfileIsInfinitePastTheSpeedBound) {
  const fs::path out = out_dir("transform_linear");
  ASSERT_EQ(run_cli("transform", scenario("eikonal_star.hj"), {out, {}, {}}), exit_code::ok);
  bool saw_inf = false;
  for (const auto& r : csv_rows(out / "legendre.csv")) {
    const double v = std::stod(r[1]);
    if (v > 1.0) {
      EXPECT_EQ(r[2], "inf");
      saw_inf = true;
    } else {
      EXPECT_EQ(std::stod(r[2]), 0.0);
    }
  }
  EXPECT_TRUE(saw_inf);
}

TEST(Cli, OutputsAreByteIdentical) {
  const fs::path a = out_dir("repeat_a");
  const fs::path b = out_dir("repeat_b");
  ASSERT_EQ(run_cli("solve", scenario("two_edge.hj"), {a, {}, {}}), exit_code::ok);
  ASSERT_EQ(run_cli("solve", scenario("two_edge.hj"), {b, {}, {}}), exit_code::ok);
  for (const char* f : {"value_grid.csv", "trajectories.csv"}) {
    const std::string content = slurp(a / f);
    EXPECT_FALSE(content.empty()) << f;
    EXPECT_EQ(content, slurp(b / f)) << f;
  }
}

TEST(Cli, ConfigurationProblemsExitWithTwo) {
  const fs::path dir = out_dir("bad_config");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.hj") << "vertices = 2\ndt = -1\n[edges]\n0 1 1\n[end]\n";
  std::string err;
  EXPECT_EQ(run_cli("solve", dir / "bad.hj", {dir / "out", {}, {}}, &err), exit_code::config_error);
  EXPECT_NE(err.find("[dt]"), std::string::npos) << err;
  EXPECT_EQ(run_cli("solve", dir / "missing.hj", {}), exit_code::config_error);
  EXPECT_EQ(run_cli("explode", scenario("constant.hj"), {}), exit_code::config_error);
  EXPECT_EQ(run_cli("solve", scenario("tabulated_segment.hj"), {dir / "out", {}, Orientation::Max}),
            exit_code::config_error);
}

TEST(Cli, ConvergeWritesTheStudy) {
  Scenario s = load_scenario(scenario("hopf_lax_path.hj"));
  s.output = out_dir("converge");
  s.levels = 2;
  s.dx = 0.1;
  s.dt = 0.05;
  s.v_count = 16;
  std::ostringstream log;
  ASSERT_EQ(run(Command::Converge, s, log), exit_code::ok);
  const auto rows = csv_rows(s.output / "convergence.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_LT(std::stod(rows[1][3]), std::stod(rows[0][3]));
  EXPECT_GT(std::stod(rows[1][4]), 0.0);

  Scenario table_datum = s;
  table_datum.u0.kind = InitialSetting::Kind::Table;
  EXPECT_THROW(run(Command::Converge, table_datum, log), ConfigError);
}

// u0 = distance to vertex 0 on the path 0-1-2-3; staying put bounds min below u0 and max above it.
TEST(Cli, MaxOrientationFlipsTheInequality) {
  const double starts[] = {0.0, 1.0, 2.5};
  auto check = [&](Orientation o, double sign) {
    const fs::path out = out_dir(o == Orientation::Max ? "orient_max" : "orient_min");
    ASSERT_EQ(run_cli("solve", scenario("hopf_lax_path.hj"), {out, {}, o}), exit_code::ok);
    std::size_t strict = 0;
    for (const auto& r : csv_rows(out / "value_grid.csv")) {
      const double u0 = starts[std::stoul(r[1])] + std::stod(r[2]);
      const double diff = sign * (std::stod(r[4]) - u0);
      EXPECT_GE(diff, -1e-12);
      if (diff > 1e-6) ++strict;
    }
    EXPECT_GT(strict, 0u);
  };
  check(Orientation::Max, 1.0);
  check(Orientation::Min, -1.0);
}

TEST(Cli, ParseCommand) {
  EXPECT_EQ(parse_command("verify"), Command::Verify);
  EXPECT_EQ(parse_command("converge"), Command::Converge);
  EXPECT_FALSE(parse_command("Verify").has_value());
}

}  // namespace
}  // namespace hjm
