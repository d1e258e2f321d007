#pragma once

#include <Eigen/Cholesky>
#include <cmath>

#include "geoplan/distance.hpp"
#include "geoplan/path.hpp"

namespace geoplan {

template <typename S>
struct ExpansionParams {
  S step = S(0.25);       // s, in metric units
  S lambda = S(1.5);      // displacement guard factor
  S step_min = S(-1);     // <= 0 resolves to step / 64
  S travel_budget = S(-1);  // d_max; <= 0 resolves to 3 * d(q_near, q_rand)
  int max_iters = -1;     // <= 0 resolves to 10 * ceil(d_max / step)
  S grad_fd_step = S(-1); // <= 0 resolves to 1e-5 * max(1, |q|_inf)
};

enum class StopReason { Reached, BudgetExhausted, StepUnderflow, IterCap };

template <typename S>
struct ExpansionTrace {
  Polyline<S> path;   // starts at q_near; accepted configurations only
  StopReason reason = StopReason::Reached;
  S travelled = S(0); // sum of accepted step lengths
};

/// Squared-distance cost potential 0.5 * d(q, q_dagger)^2.
template <typename S>
S potential(const Manifold<S>& m, const Vector<S>& q,
            const Vector<S>& q_dagger) {
  const S d = midpoint_distance(m, q, q_dagger);
  return S(0.5) * d * d;
}

namespace detail {

template <typename S>
S resolve_fd_step(S requested, const Vector<S>& q) {
  if (requested > S(0)) return requested;
  return S(1e-5) * std::max(S(1), q.template lpNorm<Eigen::Infinity>());
}

// Euclidean gradient of the pulled-back potential u -> phi(R_q(u)) at the
// tangent-space origin, by central finite differences.
template <typename S>
Vector<S> pullback_gradient(const Manifold<S>& m, const Vector<S>& q,
                            const Vector<S>& q_dagger, S fd_step) {
  Vector<S> g(m.dim);
  Vector<S> e = Vector<S>::Zero(m.dim);
  for (Eigen::Index i = 0; i < m.dim; ++i) {
    e[i] = fd_step;
    const S fp = potential(m, retract(m, q, e), q_dagger);
    e[i] = -fd_step;
    const S fm = potential(m, retract(m, q, e), q_dagger);
    e[i] = S(0);
    g[i] = (fp - fm) / (S(2) * fd_step);
  }
  return g;
}

}  // namespace detail

/// Riemannian gradient of the potential at q: the inverse metric applied
/// to the tangent-space gradient of phi composed with the retraction.
template <typename S>
TangentVector<S> natural_gradient(const Manifold<S>& m, const Vector<S>& q,
                                  const Vector<S>& q_dagger,
                                  S fd_step = S(-1)) {
  check_dimension(m, q);
  check_dimension(m, q_dagger);
  const S h = detail::resolve_fd_step(fd_step, q);
  const Vector<S> g = detail::pullback_gradient(m, q, q_dagger, h);
  Eigen::LLT<Matrix<S>> llt(metric_at(m, q));
  return {q, llt.solve(g)};
}

/// Vertex expansion toward q_rand by normalized natural-gradient descent
/// steps of the squared-distance potential. The loop stops once q_rand is
/// within one step length, the travel budget is spent, the step length
/// underflows while guarding against oversized displacements, or the
/// iteration cap hits.
template <typename S>
ExpansionTrace<S> expand(const Manifold<S>& m, const Vector<S>& q_near,
                         const Vector<S>& q_rand,
                         const ExpansionParams<S>& params) {
  ExpansionTrace<S> trace;
  trace.path.waypoints.push_back(q_near);

  S s = params.step;
  const S s_min = params.step_min > S(0) ? params.step_min : params.step / S(64);
  S dist = midpoint_distance(m, q_near, q_rand);
  const S d_max =
      params.travel_budget > S(0) ? params.travel_budget : S(3) * dist;
  const int max_iters =
      params.max_iters > 0
          ? params.max_iters
          : 10 * static_cast<int>(std::ceil(std::max(S(1), d_max / s)));

  Vector<S> q = q_near;
  int iters = 0;
  while (true) {
    if (dist <= s) {
      trace.reason = StopReason::Reached;
      break;
    }
    if (++iters > max_iters) {
      trace.reason = StopReason::IterCap;
      break;
    }

    const S fd = detail::resolve_fd_step(params.grad_fd_step, q);
    const Vector<S> g = detail::pullback_gradient(m, q, q_rand, fd);
    Eigen::LLT<Matrix<S>> llt(metric_at(m, q));
    if (llt.info() != Eigen::Success)
      throw NotPositiveDefinite("metric not positive definite in expand");
    const Vector<S> v = llt.solve(g);
    const S v_norm = std::sqrt(g.dot(v));  // |v|_q^2 = g^T G^-1 g
    if (!(v_norm > S(1e-14))) {
      trace.reason = StopReason::StepUnderflow;
      break;
    }

    const Vector<S> q_next = retract<S>(m, q, (-s / v_norm) * v);
    const S step_len = midpoint_distance(m, q, q_next);
    const S dist_next = midpoint_distance(m, q_next, q_rand);
    // Guard against oversized displacements and non-monotone progress by
    // halving the step length; once halved it stays halved.
    if (step_len > params.lambda * s || dist_next > dist + S(1e-12)) {
      s *= S(0.5);
      if (s < s_min) {
        trace.reason = StopReason::StepUnderflow;
        break;
      }
      continue;
    }

    trace.travelled += step_len;
    trace.path.lengths.push_back(step_len);
    trace.path.waypoints.push_back(q_next);
    q = q_next;
    dist = dist_next;
    if (trace.travelled > d_max) {
      trace.reason = StopReason::BudgetExhausted;
      break;
    }
  }
  return trace;
}

}  // namespace geoplan
