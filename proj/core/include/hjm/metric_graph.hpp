#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace hjm {

struct EdgeSpec {
  std::size_t u = 0;
  std::size_t v = 0;
  double length = 0.0;
};

/// A point of the metric graph: arc-length `offset` from the first endpoint of `edge`.
///
/// Vertices have several raw representations (one per incident edge end); use
/// MetricGraph::canonical before comparing raw fields.
struct GraphPoint {
  std::size_t edge = 0;
  double offset = 0.0;

  friend bool operator==(const GraphPoint&, const GraphPoint&) = default;
};

/// A direction of travel out of a point: along `edge` from `offset`, increasing (+1) or
/// decreasing (-1) arc length.
struct Heading {
  std::size_t edge = 0;
  double offset = 0.0;
  int sign = 1;
};

/// A straight run along one edge from offset `from` to offset `to`.
struct Leg {
  std::size_t edge = 0;
  double from = 0.0;
  double to = 0.0;

  double length() const { return to > from ? to - from : from - to; }
  friend bool operator==(const Leg&, const Leg&) = default;
};

/// A path along the graph made of legs joined at vertices.
struct Walk {
  std::vector<Leg> legs;
  GraphPoint end;
};

struct Incidence {
  std::size_t edge = 0;
  bool at_start = true;  // the vertex is the edge's first endpoint
};

/// Connected graph with positive edge lengths and its shortest-path metric.
///
/// Vertex-to-vertex distances are precomputed at construction; point-to-point distances
/// combine them with the offsets of the two points in O(1). Immutable after construction.
class MetricGraph {
 public:
  /// Throws InputError on nonpositive lengths, dangling endpoints, an empty edge list or a
  /// disconnected graph.
  MetricGraph(std::size_t vertex_count, std::vector<EdgeSpec> edges);

  std::size_t vertex_count() const { return vertex_count_; }
  std::size_t edge_count() const { return edges_.size(); }
  const EdgeSpec& edge(std::size_t id) const;
  std::span<const EdgeSpec> edges() const { return edges_; }
  std::span<const Incidence> incident(std::size_t vertex) const;
  std::size_t degree(std::size_t vertex) const { return incident(vertex).size(); }
  double total_length() const;

  /// Throws InputError unless the point references an existing edge with offset in [0, length].
  void validate(const GraphPoint& p) const;

  /// Validated point with vertices mapped to their designated representative
  /// (lowest-id incident edge, offset 0 or length).
  GraphPoint canonical(const GraphPoint& p) const;

  GraphPoint vertex_point(std::size_t vertex) const;
  std::optional<std::size_t> vertex_at(const GraphPoint& p) const;
  bool same_point(const GraphPoint& a, const GraphPoint& b) const { return canonical(a) == canonical(b); }

  double vertex_distance(std::size_t a, std::size_t b) const { return vertex_distances_[a * vertex_count_ + b]; }
  double distance_to_vertex(const GraphPoint& p, std::size_t vertex) const;
  double distance(const GraphPoint& a, const GraphPoint& b) const;

  /// Directions of travel out of `p`: two for an interior point, one per incident edge end for a vertex.
  std::vector<Heading> headings(const GraphPoint& p) const;

  /// Headings leaving `vertex` other than reversing along the edge end we arrived through.
  /// At a leaf this is the reversal itself, so walks bounce.
  std::vector<Heading> continuations(std::size_t vertex, const Incidence& arrived_through) const;

  /// All non-backtracking walks of exactly `length` starting at `p`, branching at every
  /// vertex crossed. Throws ConfigError if more than `max_walks` would be produced.
  std::vector<Walk> enumerate_walks(const GraphPoint& p, double length, std::size_t max_walks = 4096) const;

  /// Position at arc length `s` along `legs` (clamped to the walk's end).
  GraphPoint position_along(std::span<const Leg> legs, double s) const;

 private:
  void enumerate_from(const Heading& h, double remaining, std::vector<Leg>& legs, std::vector<Walk>& out,
                      std::size_t max_walks) const;

  std::size_t vertex_count_;
  std::vector<EdgeSpec> edges_;
  std::vector<std::vector<Incidence>> incidence_;
  std::vector<double> vertex_distances_;
};

double geodesic_distance(const MetricGraph& g, const GraphPoint& a, const GraphPoint& b);

struct LatticeNode {
  GraphPoint point;
  std::optional<std::size_t> vertex;
};

struct Neighbor {
  std::size_t node = 0;
  double distance = 0.0;
};

/// Linear interpolation stencil: value = (1 - weight) * U[lower] + weight * U[upper].
struct Bracket {
  std::size_t lower = 0;
  std::size_t upper = 0;
  double weight = 0.0;
};

/// Spatial discretization: each edge cut into ceil(length / dx) equal cells, vertices shared.
///
/// Nodes are ordered by (edge id, offset) of their canonical point. Interpolation never
/// crosses a vertex: a point is bracketed by the two nodes of the cell of its own edge.
class SpaceLattice {
 public:
  SpaceLattice(std::shared_ptr<const MetricGraph> graph, double dx);

  const MetricGraph& graph() const { return *graph_; }
  const std::shared_ptr<const MetricGraph>& graph_ptr() const { return graph_; }
  double dx() const { return dx_; }
  double max_spacing() const;

  std::size_t size() const { return nodes_.size(); }
  const LatticeNode& node(std::size_t i) const { return nodes_.at(i); }
  std::span<const LatticeNode> nodes() const { return nodes_; }
  std::span<const Neighbor> neighbors(std::size_t i) const { return adjacency_.at(i); }

  std::size_t cells(std::size_t edge) const { return edge_nodes_.at(edge).size() - 1; }
  double cell_length(std::size_t edge) const;
  std::span<const std::size_t> edge_nodes(std::size_t edge) const { return edge_nodes_.at(edge); }
  std::size_t vertex_node(std::size_t vertex) const { return vertex_nodes_.at(vertex); }

  Bracket locate(const GraphPoint& p) const;
  double interpolate(std::span<const double> node_values, const GraphPoint& p) const;

  /// Index of the node at `p`, if `p` is a lattice node.
  std::optional<std::size_t> node_at(const GraphPoint& p) const;

 private:
  std::shared_ptr<const MetricGraph> graph_;
  double dx_;
  std::vector<LatticeNode> nodes_;
  std::vector<std::vector<Neighbor>> adjacency_;
  std::vector<std::vector<std::size_t>> edge_nodes_;
  std::vector<std::size_t> vertex_nodes_;
};

/// Throws InputError if dx <= 0.
std::shared_ptr<const SpaceLattice> build_lattice(std::shared_ptr<const MetricGraph> g, double dx);

}  // namespace hjm
