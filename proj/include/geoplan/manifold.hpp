#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "geoplan/error.hpp"
#include "geoplan/types.hpp"

namespace geoplan {

enum class WrapRule { None, Angular };

enum class RetractionKind { Chart, Se2Exp };

template <typename S>
using MetricField = std::function<Matrix<S>(const Vector<S>&)>;

/// A chart-coordinate manifold: dimension, metric field q -> G(q),
/// retraction choice and per-coordinate wrapping rules.
template <typename S>
struct Manifold {
  Eigen::Index dim = 0;
  MetricField<S> metric_field;
  RetractionKind retraction = RetractionKind::Chart;
  std::vector<WrapRule> wrap;  // one rule per coordinate
};

/// Wraps an angle to (-pi, pi]; ties at pi map to +pi.
template <typename S>
S wrap_angle(S a) {
  constexpr S pi = std::numbers::pi_v<S>;
  constexpr S two_pi = S(2) * pi;
  S y = a - two_pi * std::ceil((a - pi) / two_pi);
  if (y <= -pi) y += two_pi;
  if (y > pi) y -= two_pi;
  return y;
}

template <typename S>
void check_dimension(const Manifold<S>& m, const Vector<S>& q) {
  if (q.size() != m.dim)
    throw DimensionMismatch("configuration has size " +
                            std::to_string(q.size()) + ", manifold dim is " +
                            std::to_string(m.dim));
}

/// Canonical chart form: angular coordinates wrapped to (-pi, pi].
template <typename S>
Vector<S> wrap_config(const Manifold<S>& m, Vector<S> q) {
  check_dimension(m, q);
  for (Eigen::Index i = 0; i < m.dim; ++i)
    if (m.wrap[static_cast<std::size_t>(i)] == WrapRule::Angular)
      q[i] = wrap_angle(q[i]);
  return q;
}

/// Evaluates the metric field and validates symmetry and positive
/// definiteness of the result.
template <typename S>
Matrix<S> metric_at(const Manifold<S>& m, const Vector<S>& q) {
  check_dimension(m, q);
  Matrix<S> g = m.metric_field(q);
  if (g.rows() != m.dim || g.cols() != m.dim)
    throw DimensionMismatch("metric field returned " +
                            std::to_string(g.rows()) + "x" +
                            std::to_string(g.cols()));
  const S scale = S(1) + g.template lpNorm<Eigen::Infinity>();
  if ((g - g.transpose()).template lpNorm<Eigen::Infinity>() >
      S(1e-12) * scale)
    throw NotPositiveDefinite("metric tensor is not symmetric");
  Eigen::LLT<Matrix<S>> llt(g);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("metric tensor is not positive definite");
  return g;
}

template <typename S>
S inner_raw(const Matrix<S>& g, const Vector<S>& u, const Vector<S>& v) {
  return u.dot(g * v);
}

/// Riemannian inner product of two tangent vectors based at q.
template <typename S>
S inner(const Manifold<S>& m, const Vector<S>& q, const TangentVector<S>& u,
        const TangentVector<S>& v) {
  const bool same_base = u.base.size() == v.base.size() &&
                         u.base.size() == q.size() && u.base == v.base &&
                         u.base == q;
  if (!same_base)
    throw BaseMismatch("tangent vectors based at different configurations");
  check_dimension(m, u.components);
  check_dimension(m, v.components);
  return inner_raw(metric_at(m, q), u.components, v.components);
}

template <typename S>
S metric_norm(const Manifold<S>& m, const Vector<S>& q, const Vector<S>& v) {
  return std::sqrt(inner_raw(metric_at(m, q), v, v));
}

namespace detail {

// SE(2) chart <-> body velocity map at heading theta. Body components are
// (longitudinal, lateral, angular); chart_to_body is A with G = A^T W A.
template <typename S>
Matrix<S> se2_chart_to_body(S theta) {
  const S c = std::cos(theta), s = std::sin(theta);
  Matrix<S> a(3, 3);
  a << c, s, S(0), -s, c, S(0), S(0), S(0), S(1);
  return a;
}

// Closed-form SE(2) exponential: body twist (vx, vy, omega) to the relative
// pose it integrates to over unit time.
template <typename S>
Vector<S> se2_exp(const Vector<S>& xi) {
  const S vx = xi[0], vy = xi[1], w = xi[2];
  S a, b;  // sin(w)/w and (1-cos(w))/w
  if (std::abs(w) < S(1e-4)) {
    const S w2 = w * w;
    a = S(1) - w2 / S(6);
    b = w / S(2) - w2 * w / S(24);
  } else {
    a = std::sin(w) / w;
    b = (S(1) - std::cos(w)) / w;
  }
  Vector<S> rel(3);
  rel << a * vx - b * vy, b * vx + a * vy, w;
  return rel;
}

// Inverse of se2_exp for relative poses with |dtheta| < pi.
template <typename S>
Vector<S> se2_log(const Vector<S>& rel) {
  const S dx = rel[0], dy = rel[1], w = rel[2];
  S alpha;  // (w/2) * cot(w/2)
  if (std::abs(w) < S(1e-4)) {
    alpha = S(1) - w * w / S(12);
  } else {
    alpha = w * std::sin(w) / (S(2) * (S(1) - std::cos(w)));
  }
  const S beta = w / S(2);
  Vector<S> xi(3);
  xi << alpha * dx + beta * dy, -beta * dx + alpha * dy, w;
  return xi;
}

}  // namespace detail

/// Maps a tangent vector (chart basis) at q to a nearby configuration.
/// Chart retraction is coordinate addition followed by angle wrapping; the
/// SE(2) group-exponential retraction composes with exp of the body twist.
/// Both satisfy R_q(0) = q with identity differential at the origin.
template <typename S>
Vector<S> retract(const Manifold<S>& m, const Vector<S>& q,
                  const Vector<S>& v) {
  check_dimension(m, q);
  check_dimension(m, v);
  switch (m.retraction) {
    case RetractionKind::Chart:
      return wrap_config<S>(m, q + v);
    case RetractionKind::Se2Exp: {
      const S theta = q[2];
      const Vector<S> rel =
          detail::se2_exp<S>(detail::se2_chart_to_body(theta) * v);
      const S c = std::cos(theta), s = std::sin(theta);
      Vector<S> p(3);
      p << q[0] + c * rel[0] - s * rel[1], q[1] + s * rel[0] + c * rel[1],
          wrap_angle(theta + rel[2]);
      return p;
    }
  }
  throw std::logic_error("unknown retraction kind");
}

template <typename S>
Vector<S> retract(const Manifold<S>& m, const TangentVector<S>& v) {
  return retract(m, v.base, v.components);
}

namespace detail {

// Chart difference a - b with angular coordinates wrapped to the shortest
// arc; never throws, so it is safe for residuals and baseline distances.
template <typename S>
Vector<S> wrapped_difference(const Manifold<S>& m, const Vector<S>& a,
                             const Vector<S>& b) {
  Vector<S> d = a - b;
  for (Eigen::Index i = 0; i < m.dim; ++i)
    if (m.wrap[static_cast<std::size_t>(i)] == WrapRule::Angular)
      d[i] = wrap_angle(d[i]);
  return d;
}

// Chart difference p - q with angular coordinates taken along the shortest
// arc. Throws on exactly antipodal angles, where the inverse is ambiguous.
template <typename S>
Vector<S> chart_difference(const Manifold<S>& m, const Vector<S>& q,
                           const Vector<S>& p) {
  constexpr S pi = std::numbers::pi_v<S>;
  Vector<S> d = p - q;
  for (Eigen::Index i = 0; i < m.dim; ++i) {
    if (m.wrap[static_cast<std::size_t>(i)] == WrapRule::Angular) {
      d[i] = wrap_angle(d[i]);
      if (std::abs(d[i]) >= pi)
        throw OutOfNeighborhood("antipodal angular coordinate " +
                                std::to_string(i));
    }
  }
  return d;
}

}  // namespace detail

/// Local inverse of the retraction: the tangent vector at q that retracts
/// to p. Valid while every angular separation stays below pi.
template <typename S>
TangentVector<S> inverse_retract(const Manifold<S>& m, const Vector<S>& q,
                                 const Vector<S>& p) {
  check_dimension(m, q);
  check_dimension(m, p);
  switch (m.retraction) {
    case RetractionKind::Chart:
      return {q, detail::chart_difference(m, q, p)};
    case RetractionKind::Se2Exp: {
      const S theta = q[2];
      const S c = std::cos(theta), s = std::sin(theta);
      const S rx = p[0] - q[0], ry = p[1] - q[1];
      constexpr S pi = std::numbers::pi_v<S>;
      const S dtheta = wrap_angle(p[2] - theta);
      if (std::abs(dtheta) >= pi)
        throw OutOfNeighborhood("antipodal heading");
      Vector<S> rel(3);
      rel << c * rx + s * ry, -s * rx + c * ry, dtheta;
      return {q, detail::se2_chart_to_body(theta).transpose() *
                     detail::se2_log<S>(rel)};
    }
  }
  throw std::logic_error("unknown retraction kind");
}

}  // namespace geoplan
