#pragma once

#include <cmath>

#include "geoplan/manifold.hpp"

namespace geoplan {

/// Halfway point along the retraction curve from q_x toward q_y:
/// R_{q_x}(0.5 * R^-1_{q_x}(q_y)).
template <typename S>
Vector<S> retraction_midpoint(const Manifold<S>& m, const Vector<S>& qx,
                              const Vector<S>& qy) {
  const TangentVector<S> u = inverse_retract(m, qx, qy);
  return retract<S>(m, qx, S(0.5) * u.components);
}

/// Approximate geodesic distance: the metric norm, at the retraction
/// midpoint, of the difference of the two inverse retractions. Exact for
/// constant metrics under the chart retraction; needs a single metric
/// evaluation per call.
template <typename S>
S midpoint_distance(const Manifold<S>& m, const Vector<S>& qx,
                    const Vector<S>& qy) {
  if (m.retraction == RetractionKind::Chart) {
    // Under the chart retraction the two inverse retractions at the
    // midpoint differ by exactly the wrapped chart difference.
    const Vector<S> diff = detail::chart_difference(m, qx, qy);
    const Vector<S> mid = wrap_config<S>(m, qx + S(0.5) * diff);
    return std::sqrt(inner_raw(m.metric_field(mid), diff, diff));
  }
  const Vector<S> mid = retraction_midpoint(m, qx, qy);
  const Vector<S> wx = inverse_retract(m, mid, qx).components;
  const Vector<S> wy = inverse_retract(m, mid, qy).components;
  const Vector<S> diff = wy - wx;
  return std::sqrt(inner_raw(metric_at(m, mid), diff, diff));
}

}  // namespace geoplan
