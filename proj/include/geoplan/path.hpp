#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "geoplan/distance.hpp"
#include "geoplan/error.hpp"
#include "geoplan/manifold.hpp"

namespace geoplan {

/// Piecewise path through chart waypoints with cached per-segment
/// midpoint-distance lengths. Mutate only through the functions below so
/// the cache stays consistent.
template <typename S>
struct Polyline {
  std::vector<Vector<S>> waypoints;
  std::vector<S> lengths;  // lengths[i] spans waypoints[i] -> waypoints[i+1]

  std::size_t segments() const { return lengths.size(); }
  const Vector<S>& front() const { return waypoints.front(); }
  const Vector<S>& back() const { return waypoints.back(); }
};

template <typename S>
Polyline<S> make_polyline(const Manifold<S>& m,
                          std::vector<Vector<S>> waypoints) {
  Polyline<S> p;
  p.waypoints = std::move(waypoints);
  p.lengths.reserve(p.waypoints.size());
  for (std::size_t i = 0; i + 1 < p.waypoints.size(); ++i)
    p.lengths.push_back(
        midpoint_distance(m, p.waypoints[i], p.waypoints[i + 1]));
  return p;
}

template <typename S>
void append_waypoint(const Manifold<S>& m, Polyline<S>& p,
                     const Vector<S>& q) {
  if (!p.waypoints.empty())
    p.lengths.push_back(midpoint_distance(m, p.waypoints.back(), q));
  p.waypoints.push_back(q);
}

template <typename S>
S path_length(const Polyline<S>& p) {
  S total = S(0);
  for (const S d : p.lengths) total += d;
  return total;
}

/// Discrete curve energy with uniform parameter allocation per segment:
/// E = 0.5 * K * sum d_i^2 for K segments, so a unit-speed polyline of
/// length L has E = L^2 / 2.
template <typename S>
S path_energy(const Polyline<S>& p) {
  S sq = S(0);
  for (const S d : p.lengths) sq += d * d;
  return S(0.5) * static_cast<S>(p.segments()) * sq;
}

/// Point at fraction t of the retraction curve spanning one segment.
template <typename S>
Vector<S> point_on_segment(const Manifold<S>& m, const Vector<S>& a,
                           const Vector<S>& b, S t) {
  if (t <= S(0)) return a;
  if (t >= S(1)) return b;
  return retract<S>(m, a, t * inverse_retract(m, a, b).components);
}

/// Resamples the polyline to n_out waypoints at equal arc-length spacing.
/// Output waypoints lie on the input segments; the curve geometry, total
/// length and endpoints are preserved up to the resampling resolution.
template <typename S>
Polyline<S> reparameterize_unit_speed(const Manifold<S>& m,
                                      const Polyline<S>& p, int n_out) {
  if (n_out < 2) throw DimensionMismatch("n_out must be at least 2");
  const S total = path_length(p);
  if (total < S(1e-12)) throw DegeneratePath("polyline has zero length");

  // Refine each segment so that cuts interpolate over near-uniform-speed
  // pieces, then place cuts at uniform cumulative length.
  const S fine_target =
      total / static_cast<S>(std::max<std::size_t>(1024, 8 * (n_out - 1)));
  struct FinePoint {
    std::size_t seg;
    S frac;
  };
  std::vector<FinePoint> fine;
  std::vector<S> cum;  // cumulative length at each fine point
  fine.push_back({0, S(0)});
  cum.push_back(S(0));
  Vector<S> prev = p.waypoints.front();
  for (std::size_t i = 0; i < p.segments(); ++i) {
    const int pieces =
        std::max(1, static_cast<int>(std::ceil(p.lengths[i] / fine_target)));
    for (int j = 1; j <= pieces; ++j) {
      const S frac = static_cast<S>(j) / static_cast<S>(pieces);
      const Vector<S> pt =
          point_on_segment(m, p.waypoints[i], p.waypoints[i + 1], frac);
      cum.push_back(cum.back() + midpoint_distance(m, prev, pt));
      fine.push_back({i, frac});
      prev = pt;
    }
  }
  const S fine_total = cum.back();

  Polyline<S> out;
  out.waypoints.reserve(static_cast<std::size_t>(n_out));
  out.waypoints.push_back(p.waypoints.front());
  std::size_t k = 0;
  for (int j = 1; j + 1 < n_out; ++j) {
    const S target =
        fine_total * static_cast<S>(j) / static_cast<S>(n_out - 1);
    while (k + 1 < cum.size() && cum[k + 1] < target) ++k;
    const S span = cum[k + 1] - cum[k];
    const S t = span > S(0) ? (target - cum[k]) / span : S(0);
    // Interpolate the cut inside the original segment of this fine piece.
    const std::size_t seg = fine[k + 1].seg;
    const S f0 = (fine[k].seg == seg) ? fine[k].frac : S(0);
    const S f1 = fine[k + 1].frac;
    const S frac = f0 + t * (f1 - f0);
    out.waypoints.push_back(
        point_on_segment(m, p.waypoints[seg], p.waypoints[seg + 1], frac));
  }
  out.waypoints.push_back(p.waypoints.back());
  out.lengths.reserve(out.waypoints.size() - 1);
  for (std::size_t i = 0; i + 1 < out.waypoints.size(); ++i)
    out.lengths.push_back(
        midpoint_distance(m, out.waypoints[i], out.waypoints[i + 1]));
  return out;
}

}  // namespace geoplan
