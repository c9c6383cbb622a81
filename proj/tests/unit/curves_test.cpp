#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "hjm/curves.hpp"
#include "hjm/errors.hpp"

namespace hjm {
namespace {

std::shared_ptr<const MetricGraph> path_graph() {
  return std::make_shared<const MetricGraph>(3, std::vector<EdgeSpec>{{0, 1, 1.0}, {1, 2, 2.0}});
}

// Runs from (0, 0.2) across vertex 1 to (1, 0.7) at speed 1.5, then rests.
AdmissibleCurve sample_curve(const std::shared_ptr<const MetricGraph>& g) {
  return AdmissibleCurve(g, {0, 0.2},
                         {CurveSegment{1.0, 1.5, {Leg{0, 0.2, 1.0}, Leg{1, 0.0, 0.7}}}, CurveSegment{0.5, 0.0, {}}});
}

HamiltonianSpec composite(Profile h) {
  return HamiltonianSpec::composite(SpatialField::constant(1.0), h, SpatialField::constant(0.0));
}

void expect_at(const MetricGraph& g, const GraphPoint& got, const GraphPoint& want) {
  EXPECT_LT(g.distance(got, want), 1e-12) << "edge " << got.edge << " offset " << got.offset;
}

TEST(AdmissibleCurve, EvaluatesAlongItsPath) {
  const auto g = path_graph();
  const AdmissibleCurve c = sample_curve(g);
  EXPECT_DOUBLE_EQ(c.horizon(), 1.5);
  EXPECT_DOUBLE_EQ(c.arc_length(), 1.5);
  expect_at(*g, c.evaluate(0.0), {0, 0.2});
  expect_at(*g, c.evaluate(0.5), {0, 0.95});
  expect_at(*g, c.evaluate(1.2), {1, 0.7});
  expect_at(*g, c.evaluate(9.0), {1, 0.7});
  EXPECT_DOUBLE_EQ(c.speed_at(0.5), 1.5);
  EXPECT_DOUBLE_EQ(c.speed_at(1.2), 0.0);
  EXPECT_DOUBLE_EQ(c.speed_at(9.0), 0.0);
  EXPECT_THROW(c.evaluate(-0.1), InputError);
}

TEST(AdmissibleCurve, ShiftedStartsLater) {
  const auto g = path_graph();
  const AdmissibleCurve s = sample_curve(g).shifted(0.5);
  expect_at(*g, s.start(), {0, 0.95});
  expect_at(*g, s.evaluate(0.5), {1, 0.7});
  EXPECT_DOUBLE_EQ(s.horizon(), 1.0);
}

TEST(AdmissibleCurve, RejectsInconsistentSegments) {
  const auto g = path_graph();
  EXPECT_THROW(AdmissibleCurve(g, {0, 0.2}, {CurveSegment{1.0, 1.0, {Leg{0, 0.2, 1.0}}}}), InputError);
  EXPECT_THROW(AdmissibleCurve(g, {0, 0.2}, {CurveSegment{1.0, 0.0, {Leg{0, 0.2, 0.2}}}}), InputError);
  EXPECT_THROW(AdmissibleCurve(g, {0, 0.2}, {CurveSegment{0.4, 1.0, {Leg{0, 0.4, 0.8}}}}), InputError);
  EXPECT_THROW(AdmissibleCurve(g, {0, 0.2}, {CurveSegment{-1.0, 0.0, {}}}), InputError);
  EXPECT_THROW(AdmissibleCurve(nullptr, {0, 0.2}, {}), InputError);
}

TEST(AdmissibleCurve, ReparametrizationByArcLength) {
  const auto g = path_graph();
  const ArcLengthProfile p = reparametrize(sample_curve(g));
  EXPECT_DOUBLE_EQ(p.total, 1.5);
  EXPECT_DOUBLE_EQ(p.tau(0.5), 0.75);
  EXPECT_DOUBLE_EQ(p.tau(1.4), 1.5);
  expect_at(*g, p.unit_point(*g, 0.75), {0, 0.95});
}

TEST(CurveText, RoundTrips) {
  const auto g = path_graph();
  const AdmissibleCurve c = sample_curve(g);
  const std::string text = serialize(c);
  const AdmissibleCurve back = parse_curve(g, text);
  EXPECT_EQ(serialize(back), text);
  for (double h : {0.0, 0.3, 0.9, 1.4}) expect_at(*g, back.evaluate(h), c.evaluate(h));
}

TEST(CurveText, RejectsMalformedInput) {
  const auto g = path_graph();
  EXPECT_THROW(parse_curve(g, "segment 1 0\nend\n"), InputError);
  EXPECT_THROW(parse_curve(g, "curve 0 0.2\nsegment 1 1 0:0.2\nend\n"), InputError);
  EXPECT_THROW(parse_curve(g, "curve 0 0.2\n"), InputError);
  EXPECT_THROW(parse_curve(g, "curve 0 x\nend\n"), InputError);
  EXPECT_THROW(parse_curve(g, "curve 0 0.2\nbogus\nend\n"), InputError);
}

TEST(Action, QuadraticAndSpeedLimitedCosts) {
  const auto g = path_graph();
  const AdmissibleCurve c = sample_curve(g);
  const Lagrangian quadratic(composite(Profile::quadratic()));
  EXPECT_NEAR(action(c, quadratic, 1.5).value(), 1.125, 1e-12);
  EXPECT_NEAR(action(c, quadratic, 0.5).value(), 0.5625, 1e-12);
  EXPECT_TRUE(action(c, Lagrangian(composite(Profile::linear())), 1.0).is_infinite());
  const AdmissibleCurve rest = AdmissibleCurve::constant(g, {1, 0.3});
  const Lagrangian costly(HamiltonianSpec::composite(SpatialField::constant(1.0), Profile::quadratic(),
                                                     SpatialField::constant(0.4)));
  EXPECT_NEAR(action(rest, costly, 2.0).value(), 0.8, 1e-12);
  EXPECT_THROW(action(c, quadratic, -1.0), InputError);
}

TEST(SampleCurves, DeterministicAndAnchored) {
  const auto g = path_graph();
  const GraphPoint x{1, 0.5};
  const auto a = sample_curves(g, x, 1.0, 2.0, 30, 5);
  const auto b = sample_curves(g, x, 1.0, 2.0, 30, 5);
  ASSERT_EQ(a.size(), 30u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(serialize(a[i]), serialize(b[i]));
  EXPECT_DOUBLE_EQ(a[0].arc_length(), 0.0);
  for (const auto& c : a) expect_at(*g, c.start(), x);
  EXPECT_NE(serialize(a[5]), serialize(sample_curves(g, x, 1.0, 2.0, 30, 6)[5]));
}

// Sampled curves are v_cap-Lipschitz for the path distance.
TEST(SampleCurvesProperty, LipschitzInTime) {
  gen::Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = gen::build(gen::connected_graph(rng, 6, 3));
    const GraphPoint x = gen::point(rng, *g);
    const double v_cap = gen::uniform(rng, 0.1, 3.0);
    for (const auto& c : sample_curves(g, x, 1.5, v_cap, 20, trial)) {
      for (int k = 0; k < 30; ++k) {
        const double s = gen::uniform(rng, 0.0, 2.0);
        const double t = gen::uniform(rng, 0.0, 2.0);
        EXPECT_LE(g->distance(c.evaluate(s), c.evaluate(t)), v_cap * std::abs(s - t) + 1e-9);
        EXPECT_LE(c.speed_at(s), v_cap + 1e-12);
      }
    }
  }
}

}  // namespace
}  // namespace hjm
