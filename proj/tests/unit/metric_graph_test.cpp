#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "generators.hpp"
#include "hjm/errors.hpp"
#include "hjm/metric_graph.hpp"
#include "oracles.hpp"

namespace hjm {
namespace {

std::vector<EdgeSpec> star_edges() { return {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}}; }

TEST(MetricGraph, RejectsMalformedGraphs) {
  EXPECT_THROW(MetricGraph(0, {}), InputError);
  EXPECT_THROW(MetricGraph(2, {}), InputError);
  EXPECT_THROW(MetricGraph(2, {{0, 2, 1.0}}), InputError);
  EXPECT_THROW(MetricGraph(2, {{0, 1, 0.0}}), InputError);
  EXPECT_THROW(MetricGraph(2, {{0, 1, -1.0}}), InputError);
  EXPECT_THROW(MetricGraph(2, {{0, 1, std::nan("")}}), InputError);
  EXPECT_THROW(MetricGraph(2, {{0, 1, std::numeric_limits<double>::infinity()}}), InputError);
  EXPECT_THROW(MetricGraph(4, {{0, 1, 1.0}, {2, 3, 1.0}}), InputError);  // disconnected
}

TEST(MetricGraph, DistancesOnAStar) {
  const MetricGraph g(4, star_edges());
  EXPECT_DOUBLE_EQ(g.distance({0, 0.5}, {1, 0.25}), 0.75);
  EXPECT_DOUBLE_EQ(g.distance({0, 0.5}, {0, 0.9}), 0.4);
  EXPECT_DOUBLE_EQ(g.distance_to_vertex({2, 0.3}, 3), 0.7);
  EXPECT_DOUBLE_EQ(g.distance_to_vertex({2, 0.3}, 1), 1.3);
  EXPECT_DOUBLE_EQ(g.vertex_distance(1, 3), 2.0);
  EXPECT_DOUBLE_EQ(g.total_length(), 3.0);
  EXPECT_THROW(g.distance({5, 0.0}, {0, 0.0}), InputError);
  EXPECT_THROW(g.distance({0, 1.5}, {0, 0.0}), InputError);
}

TEST(MetricGraph, VertexPointsHaveOneCanonicalForm) {
  const MetricGraph g(4, star_edges());
  // The center is offset 0 on each of the three edges.
  const GraphPoint a = g.canonical({1, 0.0});
  const GraphPoint b = g.canonical({2, 0.0});
  EXPECT_EQ(a, b);
  EXPECT_EQ(g.vertex_at({2, 0.0}), std::optional<std::size_t>(0));
  EXPECT_FALSE(g.vertex_at({2, 0.5}).has_value());
  EXPECT_TRUE(g.same_point({0, 1e-14}, {2, 0.0}));
  EXPECT_EQ(g.degree(0), 3u);
  EXPECT_EQ(g.degree(1), 1u);
}

TEST(MetricGraph, HeadingsBranchAtJunctions) {
  const MetricGraph g(4, star_edges());
  EXPECT_EQ(g.headings({0, 0.5}).size(), 2u);
  EXPECT_EQ(g.headings(g.vertex_point(0)).size(), 3u);
  EXPECT_EQ(g.headings(g.vertex_point(2)).size(), 1u);
}

TEST(MetricGraph, WalksBranchAtVerticesAndBounceAtLeaves) {
  const MetricGraph star(4, star_edges());
  // From the middle of edge 0 toward the center and beyond: two branches at the center,
  // plus the walk toward leaf 1 that bounces back.
  const auto walks = star.enumerate_walks({0, 0.5}, 0.75);
  EXPECT_EQ(walks.size(), 3u);
  for (const auto& w : walks) EXPECT_LE(star.distance({0, 0.5}, w.end), 0.75 + 1e-12);

  const MetricGraph edge(2, {{0, 1, 1.0}});
  const auto bounced = edge.enumerate_walks({0, 0.5}, 1.5);
  ASSERT_EQ(bounced.size(), 2u);
  std::vector<double> ends;
  for (const auto& w : bounced) ends.push_back(edge.canonical(w.end).offset);
  std::sort(ends.begin(), ends.end());
  EXPECT_NEAR(ends[0], 0.0, 1e-12);
  EXPECT_NEAR(ends[1], 1.0, 1e-12);
  EXPECT_THROW(star.enumerate_walks({0, 0.5}, 50.0, 16), ConfigError);
}

TEST(MetricGraph, PositionAlongFollowsLegs) {
  const MetricGraph g(4, star_edges());
  const std::vector<Leg> legs{{0, 0.5, 0.0}, {1, 0.0, 0.8}};
  EXPECT_TRUE(g.same_point(g.position_along(legs, 0.5), g.vertex_point(0)));
  const GraphPoint p = g.position_along(legs, 0.9);
  EXPECT_EQ(p.edge, 1u);
  EXPECT_NEAR(p.offset, 0.4, 1e-12);
  EXPECT_NEAR(g.position_along(legs, 5.0).offset, 0.8, 1e-12);
}

TEST(SpaceLattice, CellsAndNodeLayout) {
  auto g = std::make_shared<const MetricGraph>(3, std::vector<EdgeSpec>{{0, 1, 1.0}, {1, 2, 0.5}});
  const auto lattice = build_lattice(g, 0.3);
  EXPECT_EQ(lattice->cells(0), 4u);
  EXPECT_EQ(lattice->cells(1), 2u);
  EXPECT_DOUBLE_EQ(lattice->cell_length(0), 0.25);
  EXPECT_EQ(lattice->size(), 7u);  // 5 + 3 with vertex 1 shared
  EXPECT_LE(lattice->max_spacing(), 0.3);
  EXPECT_EQ(lattice->vertex_node(1), lattice->edge_nodes(1).front());
  EXPECT_THROW(build_lattice(g, 0.0), InputError);
  for (std::size_t i = 1; i < lattice->size(); ++i) {
    const auto& a = lattice->node(i - 1).point;
    const auto& b = lattice->node(i).point;
    EXPECT_TRUE(a.edge < b.edge || (a.edge == b.edge && a.offset < b.offset));
  }
}

TEST(SpaceLattice, InterpolationIsLinearWithinCells) {
  auto g = std::make_shared<const MetricGraph>(2, std::vector<EdgeSpec>{{0, 1, 1.0}});
  const auto lattice = build_lattice(g, 0.25);
  std::vector<double> values;
  for (const auto& n : lattice->nodes()) values.push_back(3.0 * n.point.offset + 1.0);
  for (double o : {0.0, 0.1, 0.25, 0.37, 0.99, 1.0}) EXPECT_NEAR(lattice->interpolate(values, {0, o}), 3.0 * o + 1.0, 1e-12);
  const Bracket b = lattice->locate({0, 0.3});
  EXPECT_NEAR(b.weight, 0.2, 1e-12);
  EXPECT_TRUE(lattice->node_at({0, 0.5}).has_value());
  EXPECT_FALSE(lattice->node_at({0, 0.6}).has_value());
}

TEST(SpaceLattice, InterpolationNeverCrossesAVertex) {
  auto g = std::make_shared<const MetricGraph>(4, star_edges());
  const auto lattice = build_lattice(g, 0.5);
  std::vector<double> values(lattice->size(), 0.0);
  // A spike on edge 2 must not leak onto edges 0 and 1.
  for (std::size_t n : lattice->edge_nodes(2)) {
    if (!lattice->node(n).vertex) values[n] = 10.0;
  }
  EXPECT_DOUBLE_EQ(lattice->interpolate(values, {0, 0.1}), 0.0);
  EXPECT_DOUBLE_EQ(lattice->interpolate(values, {1, 0.1}), 0.0);
  EXPECT_DOUBLE_EQ(lattice->interpolate(values, {2, 0.25}), 5.0);
}

// Properties of the geodesic metric against an independent Floyd-Warshall oracle.
TEST(MetricGraphProperty, DistanceIsAMetricAndMatchesFloydWarshall) {
  gen::Rng rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const auto c = gen::connected_graph(rng, 2 + gen::index(rng, 7), gen::index(rng, 6));
    const auto g = gen::build(c);
    const oracle::Distances d(c.vertices, c.edges);
    for (int s = 0; s < 50; ++s) {
      const GraphPoint a = gen::point(rng, *g);
      const GraphPoint b = gen::point(rng, *g);
      const GraphPoint z = gen::point(rng, *g);
      const double ab = g->distance(a, b);
      EXPECT_NEAR(ab, d(a, b), 1e-12);
      EXPECT_DOUBLE_EQ(ab, g->distance(b, a));
      EXPECT_EQ(g->distance(a, a), 0.0);
      EXPECT_LE(ab, g->distance(a, z) + g->distance(z, b) + 1e-12);
      EXPECT_NEAR(geodesic_distance(*g, a, b), ab, 0.0);
    }
  }
}

TEST(MetricGraphProperty, WalkEndpointsLieWithinTheWalkLength) {
  gen::Rng rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    const auto c = gen::connected_graph(rng, 2 + gen::index(rng, 5), gen::index(rng, 3));
    const auto g = gen::build(c);
    const GraphPoint x = gen::point(rng, *g);
    const double len = gen::uniform(rng, 0.0, 1.5);
    for (const auto& w : g->enumerate_walks(x, len)) {
      double total = 0.0;
      for (const auto& leg : w.legs) total += leg.length();
      EXPECT_NEAR(total, len, 1e-9);
      EXPECT_LE(g->distance(x, w.end), len + 1e-9);
      EXPECT_TRUE(g->same_point(g->position_along(w.legs, len), w.end));
    }
  }
}

TEST(SpaceLatticeProperty, SpacingNeverExceedsDx) {
  gen::Rng rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const auto g = gen::build(gen::connected_graph(rng, 2 + gen::index(rng, 6), gen::index(rng, 4)));
    const double dx = gen::uniform(rng, 0.01, 0.7);
    const auto lattice = build_lattice(g, dx);
    EXPECT_LE(lattice->max_spacing(), dx * (1.0 + 1e-9));
    for (std::size_t i = 0; i < lattice->size(); ++i) {
      for (const auto& nb : lattice->neighbors(i)) {
        EXPECT_NEAR(nb.distance, g->distance(lattice->node(i).point, lattice->node(nb.node).point), 1e-12);
      }
    }
  }
}

}  // namespace
}  // namespace hjm
