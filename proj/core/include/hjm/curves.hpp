#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hjm/extended_real.hpp"
#include "hjm/hamiltonian.hpp"
#include "hjm/metric_graph.hpp"

namespace hjm {

/// Constant-speed piece of a curve. `legs` is the path traversed; empty iff speed is 0.
struct CurveSegment {
  double duration = 0.0;
  double speed = 0.0;
  std::vector<Leg> legs;
};

/// Piecewise constant-speed curve on a metric graph, defined on [0, inf).
///
/// After the last breakpoint the curve rests at its terminal point. Construction checks
/// that each segment's path length equals speed * duration and that consecutive pieces
/// join; speed limits coming from a Lagrangian are checked where the curve is used.
class AdmissibleCurve {
 public:
  AdmissibleCurve(std::shared_ptr<const MetricGraph> graph, GraphPoint start, std::vector<CurveSegment> segments);

  /// The curve r -> x.
  static AdmissibleCurve constant(std::shared_ptr<const MetricGraph> graph, GraphPoint x);

  const MetricGraph& graph() const { return *graph_; }
  const std::shared_ptr<const MetricGraph>& graph_ptr() const { return graph_; }
  const GraphPoint& start() const { return start_; }
  const std::vector<CurveSegment>& segments() const { return segments_; }

  /// Time of the last breakpoint.
  double horizon() const { return breakpoints_.back(); }
  /// 0 = r_0 < r_1 < ... < r_n.
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  GraphPoint terminal() const { return anchors_.back(); }
  double arc_length() const;

  GraphPoint evaluate(double h) const;
  /// Metric derivative on [h, h + 0), zero past the horizon.
  double speed_at(double h) const;
  /// The curve r -> xi(r + h).
  AdmissibleCurve shifted(double h) const;

 private:
  std::size_t segment_at(double h) const;

  std::shared_ptr<const MetricGraph> graph_;
  GraphPoint start_;
  std::vector<CurveSegment> segments_;
  std::vector<double> breakpoints_;
  std::vector<GraphPoint> anchors_;
  std::vector<double> arc_before_;
};

inline GraphPoint evaluate(const AdmissibleCurve& c, double h) { return c.evaluate(h); }

/// tau(h) = integral of |xi'| over [0, h] and the unit-speed curve xi-hat with xi = xi-hat o tau.
struct ArcLengthProfile {
  std::vector<double> times;  // breakpoints of tau
  std::vector<double> arcs;   // tau at those breakpoints
  std::vector<Leg> unit_path;
  GraphPoint start;
  double total = 0.0;  // L+

  double tau(double h) const;
  /// xi-hat(s) for s in [0, total].
  GraphPoint unit_point(const MetricGraph& g, double s) const;
};

ArcLengthProfile reparametrize(const AdmissibleCurve& c);

/// Integral over [0, h] of L(xi(r), |xi'|(r)) by composite midpoint rule, `n_quad` panels
/// per constant-speed piece. Any infinite sample makes the result infinite.
ExtendedReal action(const AdmissibleCurve& c, const Lagrangian& L, double h, int n_quad = 64);

/// Random curves from x with 1-5 segments over [0, horizon], speeds uniform in [0, v_cap]
/// and random-walk directions. Element 0 is the constant curve. Deterministic in `seed`.
std::vector<AdmissibleCurve> sample_curves(std::shared_ptr<const MetricGraph> g, const GraphPoint& x, double horizon,
                                           double v_cap, int n, std::uint64_t seed);

/// Line-based text form:
///   curve <edge> <offset>
///   segment <duration> <speed> <edge>:<from>:<to> ...
///   end
std::string serialize(const AdmissibleCurve& c);
AdmissibleCurve parse_curve(std::shared_ptr<const MetricGraph> g, const std::string& text);

}  // namespace hjm
