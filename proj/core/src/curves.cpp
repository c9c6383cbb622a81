#include "hjm/curves.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <random>
#include <sstream>

#include "hjm/errors.hpp"

namespace hjm {
namespace {

constexpr double kJoinTolerance = 1e-9;

double path_length(const std::vector<Leg>& legs) {
  double total = 0.0;
  for (const Leg& leg : legs) total += leg.length();
  return total;
}

// Legs describing the part of `legs` after arc length s.
std::vector<Leg> legs_after(const std::vector<Leg>& legs, double s) {
  std::vector<Leg> out;
  double remaining = s;
  for (const Leg& leg : legs) {
    double len = leg.length();
    if (remaining >= len) {
      remaining -= len;
      continue;
    }
    double dir = leg.to >= leg.from ? 1.0 : -1.0;
    out.push_back({leg.edge, leg.from + dir * remaining, leg.to});
    remaining = 0.0;
  }
  return out;
}

std::vector<Leg> random_walk(const MetricGraph& g, const GraphPoint& start, double length, std::mt19937_64& rng) {
  std::vector<Leg> legs;
  std::vector<Heading> options = g.headings(start);
  Heading h = options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng)];
  double remaining = length;
  while (true) {
    const EdgeSpec& e = g.edge(h.edge);
    double to_end = h.sign > 0 ? e.length - h.offset : h.offset;
    if (remaining <= to_end) {
      legs.push_back({h.edge, h.offset, std::clamp(h.offset + h.sign * remaining, 0.0, e.length)});
      return legs;
    }
    double end = h.sign > 0 ? e.length : 0.0;
    legs.push_back({h.edge, h.offset, end});
    remaining -= to_end;
    std::size_t vertex = h.sign > 0 ? e.v : e.u;
    options = g.continuations(vertex, Incidence{h.edge, h.sign < 0});
    h = options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng)];
  }
}

}  // namespace

AdmissibleCurve::AdmissibleCurve(std::shared_ptr<const MetricGraph> graph, GraphPoint start,
                                 std::vector<CurveSegment> segments)
    : graph_(std::move(graph)), segments_(std::move(segments)) {
  if (!graph_) throw InputError("curve needs a graph");
  start_ = graph_->canonical(start);
  breakpoints_.push_back(0.0);
  anchors_.push_back(start_);
  arc_before_.push_back(0.0);
  GraphPoint here = start_;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const CurveSegment& seg = segments_[i];
    std::string where = "curve segment " + std::to_string(i);
    if (!(seg.duration > 0.0) || !std::isfinite(seg.duration)) throw InputError(where + ": duration must be positive");
    if (!(seg.speed >= 0.0) || !std::isfinite(seg.speed)) throw InputError(where + ": speed must be nonnegative");
    if (seg.speed == 0.0 && !seg.legs.empty()) throw InputError(where + ": resting segment cannot carry a path");
    if (seg.speed > 0.0 && seg.legs.empty()) throw InputError(where + ": moving segment needs a path");
    double expected = seg.speed * seg.duration;
    double traversed = path_length(seg.legs);
    if (std::abs(traversed - expected) > kJoinTolerance * (1.0 + expected)) {
      throw InputError(where + ": path length " + format_double(traversed) + " differs from speed * duration " +
                       format_double(expected));
    }
    for (std::size_t j = 0; j < seg.legs.size(); ++j) {
      const Leg& leg = seg.legs[j];
      GraphPoint from = graph_->canonical({leg.edge, leg.from});
      GraphPoint to = graph_->canonical({leg.edge, leg.to});
      if (graph_->distance(here, from) > kJoinTolerance) throw InputError(where + ": path is not continuous");
      if (j + 1 < seg.legs.size() && !graph_->vertex_at(to)) {
        throw InputError(where + ": legs may only join at vertices");
      }
      here = to;
    }
    breakpoints_.push_back(breakpoints_.back() + seg.duration);
    anchors_.push_back(here);
    arc_before_.push_back(arc_before_.back() + traversed);
  }
}

AdmissibleCurve AdmissibleCurve::constant(std::shared_ptr<const MetricGraph> graph, GraphPoint x) {
  return AdmissibleCurve(std::move(graph), x, {});
}

double AdmissibleCurve::arc_length() const { return arc_before_.back(); }

std::size_t AdmissibleCurve::segment_at(double h) const {
  // index i with r_i <= h < r_{i+1}; segments_.size() past the horizon
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), h);
  return static_cast<std::size_t>(std::distance(breakpoints_.begin(), it)) - 1;
}

GraphPoint AdmissibleCurve::evaluate(double h) const {
  if (!(h >= 0.0)) throw InputError("curve evaluation needs h >= 0");
  std::size_t i = segment_at(h);
  if (i >= segments_.size()) return anchors_.back();
  const CurveSegment& seg = segments_[i];
  if (seg.speed == 0.0) return anchors_[i];
  return graph_->position_along(seg.legs, seg.speed * (h - breakpoints_[i]));
}

double AdmissibleCurve::speed_at(double h) const {
  if (!(h >= 0.0)) throw InputError("curve speed needs h >= 0");
  std::size_t i = segment_at(h);
  return i >= segments_.size() ? 0.0 : segments_[i].speed;
}

AdmissibleCurve AdmissibleCurve::shifted(double h) const {
  if (!(h >= 0.0)) throw InputError("curve shift needs h >= 0");
  std::size_t i = segment_at(h);
  if (i >= segments_.size()) return constant(graph_, anchors_.back());
  std::vector<CurveSegment> rest;
  const CurveSegment& first = segments_[i];
  double left = breakpoints_[i + 1] - h;
  if (left > 0.0) {
    CurveSegment cut{left, first.speed, {}};
    if (first.speed > 0.0) {
      cut.legs = legs_after(first.legs, first.speed * (h - breakpoints_[i]));
      if (cut.legs.empty()) cut.speed = 0.0;
    }
    rest.push_back(std::move(cut));
  }
  for (std::size_t j = i + 1; j < segments_.size(); ++j) rest.push_back(segments_[j]);
  if (!rest.empty() && rest.front().speed > 0.0) {
    // re-derive the exact path length so the segment stays consistent after cutting
    rest.front().speed = path_length(rest.front().legs) / rest.front().duration;
  }
  return AdmissibleCurve(graph_, evaluate(h), std::move(rest));
}

double ArcLengthProfile::tau(double h) const {
  if (h <= 0.0) return 0.0;
  if (h >= times.back()) return total;
  auto it = std::upper_bound(times.begin(), times.end(), h);
  auto i = static_cast<std::size_t>(std::distance(times.begin(), it)) - 1;
  double span = times[i + 1] - times[i];
  return arcs[i] + (arcs[i + 1] - arcs[i]) * (h - times[i]) / span;
}

GraphPoint ArcLengthProfile::unit_point(const MetricGraph& g, double s) const {
  if (unit_path.empty()) return start;
  return g.position_along(unit_path, std::clamp(s, 0.0, total));
}

ArcLengthProfile reparametrize(const AdmissibleCurve& c) {
  ArcLengthProfile profile;
  profile.start = c.start();
  profile.times = c.breakpoints();
  profile.arcs.push_back(0.0);
  for (const CurveSegment& seg : c.segments()) {
    // the breakpoint value of tau is the realized path length, not speed * duration
    profile.arcs.push_back(profile.arcs.back() + path_length(seg.legs));
    profile.unit_path.insert(profile.unit_path.end(), seg.legs.begin(), seg.legs.end());
  }
  profile.total = profile.arcs.back();
  return profile;
}

ExtendedReal action(const AdmissibleCurve& c, const Lagrangian& L, double h, int n_quad) {
  if (!(h >= 0.0)) throw InputError("action needs h >= 0");
  if (n_quad < 1) throw InputError("action needs n_quad >= 1");
  ExtendedReal total = 0.0;
  const std::vector<double>& bp = c.breakpoints();
  auto piece = [&](double a, double b, double speed) {
    double width = (b - a) / static_cast<double>(n_quad);
    for (int k = 0; k < n_quad; ++k) {
      double r = a + (static_cast<double>(k) + 0.5) * width;
      ExtendedReal value = L(c.evaluate(r), speed);
      if (value.is_infinite()) return false;
      total += value.scaled(width);
    }
    return true;
  };
  for (std::size_t i = 0; i < c.segments().size() && bp[i] < h; ++i) {
    if (!piece(bp[i], std::min(bp[i + 1], h), c.segments()[i].speed)) return ExtendedReal::infinity();
  }
  if (h > c.horizon()) {
    if (!piece(c.horizon(), h, 0.0)) return ExtendedReal::infinity();
  }
  return total;
}

std::vector<AdmissibleCurve> sample_curves(std::shared_ptr<const MetricGraph> g, const GraphPoint& x, double horizon,
                                           double v_cap, int n, std::uint64_t seed) {
  if (!g) throw InputError("sample_curves needs a graph");
  if (!(v_cap >= 0.0) || n < 1) throw InputError("sample_curves needs v_cap >= 0 and n >= 1");
  std::mt19937_64 rng(seed);
  std::vector<AdmissibleCurve> out;
  out.push_back(AdmissibleCurve::constant(g, x));
  if (!(horizon > 0.0)) {
    while (static_cast<int>(out.size()) < n) out.push_back(AdmissibleCurve::constant(g, x));
    return out;
  }
  std::uniform_int_distribution<int> count(1, 5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (static_cast<int>(out.size()) < n) {
    int k = count(rng);
    std::vector<double> cuts{0.0, horizon};
    for (int j = 1; j < k; ++j) cuts.push_back(horizon * unit(rng));
    std::sort(cuts.begin(), cuts.end());
    std::vector<CurveSegment> segments;
    GraphPoint here = g->canonical(x);
    for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
      double duration = cuts[j + 1] - cuts[j];
      if (!(duration > 0.0)) continue;
      double speed = v_cap * unit(rng);
      CurveSegment seg{duration, speed, {}};
      if (speed * duration > 0.0) {
        seg.legs = random_walk(*g, here, speed * duration, rng);
        here = g->canonical({seg.legs.back().edge, seg.legs.back().to});
      } else {
        seg.speed = 0.0;
      }
      segments.push_back(std::move(seg));
    }
    out.emplace_back(g, x, std::move(segments));
  }
  return out;
}

std::string serialize(const AdmissibleCurve& c) {
  std::ostringstream os;
  os << "curve " << c.start().edge << ' ' << format_double(c.start().offset) << '\n';
  for (const CurveSegment& seg : c.segments()) {
    os << "segment " << format_double(seg.duration) << ' ' << format_double(seg.speed);
    for (const Leg& leg : seg.legs) os << ' ' << leg.edge << ':' << format_double(leg.from) << ':' << format_double(leg.to);
    os << '\n';
  }
  os << "end\n";
  return os.str();
}

AdmissibleCurve parse_curve(std::shared_ptr<const MetricGraph> g, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto number = [](const std::string& token) {
    try {
      return ExtendedReal::parse(token).value();
    } catch (const InputError&) {
      throw InputError("curve text: bad number '" + token + "'");
    }
  };
  auto index = [](const std::string& token) {
    if (token.empty() || token.find_first_not_of("0123456789") != std::string::npos) {
      throw InputError("curve text: bad index '" + token + "'");
    }
    return static_cast<std::size_t>(std::stoull(token));
  };
  std::optional<GraphPoint> start;
  std::vector<CurveSegment> segments;
  bool closed = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    if (word == "curve") {
      std::string e, o;
      if (!(ls >> e >> o)) throw InputError("curve text: 'curve' needs edge and offset");
      start = GraphPoint{index(e), number(o)};
    } else if (word == "segment") {
      if (!start) throw InputError("curve text: segment before curve header");
      std::string d, s, token;
      if (!(ls >> d >> s)) throw InputError("curve text: segment needs duration and speed");
      CurveSegment seg{number(d), number(s), {}};
      while (ls >> token) {
        auto first = token.find(':');
        auto second = token.find(':', first == std::string::npos ? first : first + 1);
        if (first == std::string::npos || second == std::string::npos) {
          throw InputError("curve text: leg '" + token + "' is not edge:from:to");
        }
        seg.legs.push_back({index(token.substr(0, first)), number(token.substr(first + 1, second - first - 1)),
                            number(token.substr(second + 1))});
      }
      segments.push_back(std::move(seg));
    } else if (word == "end") {
      closed = true;
      break;
    } else {
      throw InputError("curve text: unexpected line '" + line + "'");
    }
  }
  if (!start || !closed) throw InputError("curve text: missing header or end marker");
  return AdmissibleCurve(std::move(g), *start, std::move(segments));
}

}  // namespace hjm
