#include "hjm/metric_graph.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <string>
#include <utility>

#include "hjm/errors.hpp"

namespace hjm {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Relative tolerance for snapping offsets onto edge endpoints.
constexpr double kSnap = 1e-12;

std::vector<double> dijkstra(std::size_t source, std::size_t n, const std::vector<EdgeSpec>& edges,
                             const std::vector<std::vector<Incidence>>& incidence) {
  std::vector<double> dist(n, kInf);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[source] = 0.0;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    auto [d, u] = queue.top();
    queue.pop();
    if (d > dist[u]) continue;
    for (const Incidence& inc : incidence[u]) {
      const EdgeSpec& e = edges[inc.edge];
      std::size_t w = inc.at_start ? e.v : e.u;
      double candidate = d + e.length;
      if (candidate < dist[w]) {
        dist[w] = candidate;
        queue.emplace(candidate, w);
      }
    }
  }
  return dist;
}

}  // namespace

MetricGraph::MetricGraph(std::size_t vertex_count, std::vector<EdgeSpec> edges)
    : vertex_count_(vertex_count), edges_(std::move(edges)), incidence_(vertex_count) {
  if (vertex_count_ == 0) throw InputError("metric graph needs at least one vertex");
  if (edges_.empty()) throw InputError("metric graph needs at least one edge");
  for (std::size_t id = 0; id < edges_.size(); ++id) {
    const EdgeSpec& e = edges_[id];
    if (e.u >= vertex_count_ || e.v >= vertex_count_) {
      throw InputError("edge " + std::to_string(id) + " references a missing vertex");
    }
    if (!(e.length > 0.0) || !std::isfinite(e.length)) {
      throw InputError("edge " + std::to_string(id) + " must have a finite positive length");
    }
    incidence_[e.u].push_back({id, true});
    incidence_[e.v].push_back({id, false});
  }

  vertex_distances_.resize(vertex_count_ * vertex_count_);
  for (std::size_t s = 0; s < vertex_count_; ++s) {
    std::vector<double> row = dijkstra(s, vertex_count_, edges_, incidence_);
    for (std::size_t t = 0; t < vertex_count_; ++t) {
      if (!std::isfinite(row[t])) {
        throw InputError("metric graph is disconnected (vertex " + std::to_string(t) + " unreachable from " +
                         std::to_string(s) + ")");
      }
      vertex_distances_[s * vertex_count_ + t] = row[t];
    }
  }
}

const EdgeSpec& MetricGraph::edge(std::size_t id) const {
  if (id >= edges_.size()) throw InputError("edge id " + std::to_string(id) + " out of range");
  return edges_[id];
}

std::span<const Incidence> MetricGraph::incident(std::size_t vertex) const {
  if (vertex >= vertex_count_) throw InputError("vertex id " + std::to_string(vertex) + " out of range");
  return incidence_[vertex];
}

double MetricGraph::total_length() const {
  double total = 0.0;
  for (const EdgeSpec& e : edges_) total += e.length;
  return total;
}

void MetricGraph::validate(const GraphPoint& p) const {
  const EdgeSpec& e = edge(p.edge);
  double tol = kSnap * e.length;
  if (!(p.offset >= -tol && p.offset <= e.length + tol)) {
    throw InputError("offset " + std::to_string(p.offset) + " outside edge " + std::to_string(p.edge));
  }
}

GraphPoint MetricGraph::canonical(const GraphPoint& p) const {
  validate(p);
  const EdgeSpec& e = edges_[p.edge];
  double tol = kSnap * e.length;
  if (p.offset <= tol) return vertex_point(e.u);
  if (p.offset >= e.length - tol) return vertex_point(e.v);
  return p;
}

GraphPoint MetricGraph::vertex_point(std::size_t vertex) const {
  // incidence lists are built in edge-id order, so the first entry is the lowest-id edge
  const Incidence& first = incident(vertex).front();
  return {first.edge, first.at_start ? 0.0 : edges_[first.edge].length};
}

std::optional<std::size_t> MetricGraph::vertex_at(const GraphPoint& p) const {
  validate(p);
  const EdgeSpec& e = edges_[p.edge];
  double tol = kSnap * e.length;
  if (p.offset <= tol) return e.u;
  if (p.offset >= e.length - tol) return e.v;
  return std::nullopt;
}

double MetricGraph::distance_to_vertex(const GraphPoint& p, std::size_t vertex) const {
  GraphPoint c = canonical(p);
  if (vertex >= vertex_count_) throw InputError("vertex id out of range");
  const EdgeSpec& e = edges_[c.edge];
  return std::min(c.offset + vertex_distance(e.u, vertex), (e.length - c.offset) + vertex_distance(e.v, vertex));
}

double MetricGraph::distance(const GraphPoint& a, const GraphPoint& b) const {
  GraphPoint ca = canonical(a);
  GraphPoint cb = canonical(b);
  if (ca == cb) return 0.0;
  const EdgeSpec& ea = edges_[ca.edge];
  const EdgeSpec& eb = edges_[cb.edge];
  auto to_b = [&](std::size_t w) {
    return std::min(cb.offset + vertex_distance(w, eb.u), (eb.length - cb.offset) + vertex_distance(w, eb.v));
  };
  double best = std::min(ca.offset + to_b(ea.u), (ea.length - ca.offset) + to_b(ea.v));
  if (ca.edge == cb.edge) best = std::min(best, std::abs(ca.offset - cb.offset));
  return best;
}

std::vector<Heading> MetricGraph::headings(const GraphPoint& p) const {
  GraphPoint c = canonical(p);
  if (auto w = vertex_at(c)) {
    std::vector<Heading> out;
    for (const Incidence& inc : incidence_[*w]) {
      const EdgeSpec& e = edges_[inc.edge];
      out.push_back(inc.at_start ? Heading{inc.edge, 0.0, +1} : Heading{inc.edge, e.length, -1});
    }
    return out;
  }
  return {Heading{c.edge, c.offset, +1}, Heading{c.edge, c.offset, -1}};
}

std::vector<Heading> MetricGraph::continuations(std::size_t vertex, const Incidence& arrived_through) const {
  std::vector<Heading> out;
  for (const Incidence& inc : incident(vertex)) {
    if (inc.edge == arrived_through.edge && inc.at_start == arrived_through.at_start) continue;
    const EdgeSpec& e = edges_[inc.edge];
    out.push_back(inc.at_start ? Heading{inc.edge, 0.0, +1} : Heading{inc.edge, e.length, -1});
  }
  if (out.empty()) {
    const EdgeSpec& e = edges_[arrived_through.edge];
    out.push_back(arrived_through.at_start ? Heading{arrived_through.edge, 0.0, +1}
                                           : Heading{arrived_through.edge, e.length, -1});
  }
  return out;
}

void MetricGraph::enumerate_from(const Heading& h, double remaining, std::vector<Leg>& legs,
                                 std::vector<Walk>& out, std::size_t max_walks) const {
  const EdgeSpec& e = edges_[h.edge];
  double to_end = h.sign > 0 ? e.length - h.offset : h.offset;
  if (remaining <= to_end + kSnap * e.length) {
    double end = std::clamp(h.offset + h.sign * remaining, 0.0, e.length);
    legs.push_back({h.edge, h.offset, end});
    if (out.size() >= max_walks) {
      throw ConfigError("walk enumeration exceeded " + std::to_string(max_walks) +
                        " branches; the move length is too long for the edge lengths");
    }
    out.push_back({legs, canonical({h.edge, end})});
    legs.pop_back();
    return;
  }
  double end = h.sign > 0 ? e.length : 0.0;
  legs.push_back({h.edge, h.offset, end});
  std::size_t vertex = h.sign > 0 ? e.v : e.u;
  Incidence arrived{h.edge, h.sign < 0};
  for (const Heading& next : continuations(vertex, arrived)) {
    enumerate_from(next, remaining - to_end, legs, out, max_walks);
  }
  legs.pop_back();
}

std::vector<Walk> MetricGraph::enumerate_walks(const GraphPoint& p, double length, std::size_t max_walks) const {
  if (!(length >= 0.0)) throw InputError("walk length must be nonnegative");
  GraphPoint start = canonical(p);
  if (length == 0.0) return {Walk{{}, start}};
  std::vector<Walk> out;
  std::vector<Leg> legs;
  for (const Heading& h : headings(start)) enumerate_from(h, length, legs, out, max_walks);
  return out;
}

GraphPoint MetricGraph::position_along(std::span<const Leg> legs, double s) const {
  if (legs.empty()) throw InputError("position_along: empty walk");
  double remaining = std::max(s, 0.0);
  for (const Leg& leg : legs) {
    double len = leg.length();
    if (remaining <= len) {
      double dir = leg.to >= leg.from ? 1.0 : -1.0;
      return canonical({leg.edge, std::clamp(leg.from + dir * remaining, 0.0, edge(leg.edge).length)});
    }
    remaining -= len;
  }
  return canonical({legs.back().edge, legs.back().to});
}

double geodesic_distance(const MetricGraph& g, const GraphPoint& a, const GraphPoint& b) { return g.distance(a, b); }

SpaceLattice::SpaceLattice(std::shared_ptr<const MetricGraph> graph, double dx) : graph_(std::move(graph)), dx_(dx) {
  if (!graph_) throw InputError("lattice needs a graph");
  if (!(dx > 0.0) || !std::isfinite(dx)) throw InputError("lattice spacing dx must be positive");
  const MetricGraph& g = *graph_;

  std::vector<GraphPoint> points;
  for (std::size_t v = 0; v < g.vertex_count(); ++v) points.push_back(g.vertex_point(v));
  std::vector<std::size_t> cell_counts(g.edge_count());
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    double len = g.edge(e).length;
    auto n = static_cast<std::size_t>(std::ceil(len / dx - 1e-9));
    cell_counts[e] = std::max<std::size_t>(n, 1);
    for (std::size_t j = 1; j < cell_counts[e]; ++j) {
      points.push_back({e, len * static_cast<double>(j) / static_cast<double>(cell_counts[e])});
    }
  }
  std::sort(points.begin(), points.end(), [](const GraphPoint& a, const GraphPoint& b) {
    return a.edge != b.edge ? a.edge < b.edge : a.offset < b.offset;
  });

  nodes_.reserve(points.size());
  vertex_nodes_.assign(g.vertex_count(), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto vertex = g.vertex_at(points[i]);
    nodes_.push_back({points[i], vertex});
    if (vertex) vertex_nodes_[*vertex] = i;
  }

  // interior nodes of an edge are contiguous in the sorted order
  std::vector<std::size_t> first_interior(g.edge_count(), 0);
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    if (!nodes_[i].vertex) first_interior[nodes_[i].point.edge] = i;
  }
  edge_nodes_.resize(g.edge_count());
  adjacency_.resize(nodes_.size());
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    const EdgeSpec& spec = g.edge(e);
    std::vector<std::size_t>& ids = edge_nodes_[e];
    ids.push_back(vertex_nodes_[spec.u]);
    for (std::size_t j = 1; j < cell_counts[e]; ++j) ids.push_back(first_interior[e] + j - 1);
    ids.push_back(vertex_nodes_[spec.v]);
    double h = spec.length / static_cast<double>(cell_counts[e]);
    for (std::size_t j = 0; j + 1 < ids.size(); ++j) {
      adjacency_[ids[j]].push_back({ids[j + 1], h});
      adjacency_[ids[j + 1]].push_back({ids[j], h});
    }
  }
}

double SpaceLattice::cell_length(std::size_t edge) const {
  return graph_->edge(edge).length / static_cast<double>(cells(edge));
}

double SpaceLattice::max_spacing() const {
  double worst = 0.0;
  for (std::size_t e = 0; e < graph_->edge_count(); ++e) worst = std::max(worst, cell_length(e));
  return worst;
}

Bracket SpaceLattice::locate(const GraphPoint& p) const {
  GraphPoint c = graph_->canonical(p);
  if (auto v = graph_->vertex_at(c)) {
    std::size_t id = vertex_nodes_[*v];
    return {id, id, 0.0};
  }
  const std::vector<std::size_t>& ids = edge_nodes_[c.edge];
  std::size_t n = ids.size() - 1;
  double h = cell_length(c.edge);
  double scaled = c.offset / h;
  auto j = static_cast<std::size_t>(std::min(std::floor(scaled), static_cast<double>(n - 1)));
  double w = std::clamp(scaled - static_cast<double>(j), 0.0, 1.0);
  if (w < 1e-12) return {ids[j], ids[j], 0.0};
  if (w > 1.0 - 1e-12) return {ids[j + 1], ids[j + 1], 0.0};
  return {ids[j], ids[j + 1], w};
}

double SpaceLattice::interpolate(std::span<const double> node_values, const GraphPoint& p) const {
  if (node_values.size() != nodes_.size()) throw InputError("interpolate: value count does not match lattice size");
  Bracket b = locate(p);
  if (b.lower == b.upper) return node_values[b.lower];
  return (1.0 - b.weight) * node_values[b.lower] + b.weight * node_values[b.upper];
}

std::optional<std::size_t> SpaceLattice::node_at(const GraphPoint& p) const {
  Bracket b = locate(p);
  if (b.lower == b.upper) return b.lower;
  return std::nullopt;
}

std::shared_ptr<const SpaceLattice> build_lattice(std::shared_ptr<const MetricGraph> g, double dx) {
  return std::make_shared<const SpaceLattice>(std::move(g), dx);
}

}  // namespace hjm
