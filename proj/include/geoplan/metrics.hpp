#pragma once

#include <Eigen/Cholesky>
#include <cmath>
#include <utility>
#include <vector>

#include "geoplan/manifold.hpp"

namespace geoplan {

/// Body-frame velocity weights for SE(2): longitudinal, lateral, angular.
template <typename S>
struct Se2Weights {
  S wx = S(1);
  S wy = S(1);
  S wtheta = S(1);
};

/// Planar two-link arm parameters. The reference arm uses two uniform
/// slender rods of unit length and mass, pivoting at the rod ends.
template <typename S>
struct TwoLinkParams {
  S l1 = S(1), l2 = S(1);
  S m1 = S(1), m2 = S(1);
  S lc1 = S(0.5), lc2 = S(0.5);
  S I1 = S(1) / S(12), I2 = S(1) / S(12);
};

template <typename S>
struct BarrierParams {
  S alpha = S(0);  // clearance decay rate, 1/m
  S beta = S(0);   // amplitude; zero recovers the base metric exactly
};

/// Joint-space mass matrix of the planar two-link arm; depends on the
/// elbow angle only.
template <typename S>
Matrix<S> two_link_mass_matrix(const TwoLinkParams<S>& p, const Vector<S>& q) {
  const S c2 = std::cos(q[1]);
  Matrix<S> g(2, 2);
  const S m12 = p.m2 * (p.lc2 * p.lc2 + p.l1 * p.lc2 * c2) + p.I2;
  g(0, 0) = p.m1 * p.lc1 * p.lc1 + p.I1 +
            p.m2 * (p.l1 * p.l1 + p.lc2 * p.lc2 + S(2) * p.l1 * p.lc2 * c2) +
            p.I2;
  g(0, 1) = m12;
  g(1, 0) = m12;
  g(1, 1) = p.m2 * p.lc2 * p.lc2 + p.I2;
  return g;
}

/// Left-invariant SE(2) metric in chart coordinates: G(q) = A(theta)^T W
/// A(theta), where A maps chart velocity to body velocity. Independent of
/// position, so motion along the current heading always costs wx per meter.
template <typename S>
Matrix<S> se2_left_invariant_metric(const Se2Weights<S>& w,
                                    const Vector<S>& q) {
  const Matrix<S> a = detail::se2_chart_to_body<S>(q[2]);
  Vector<S> diag(3);
  diag << w.wx, w.wy, w.wtheta;
  return a.transpose() * diag.asDiagonal() * a;
}

/// Conformal reshaping of a base metric by an exponential clearance
/// barrier: G_b(q) = (1 + beta * exp(-alpha * clearance(q))) * G(q).
template <typename S>
MetricField<S> barrier_reshaped_metric(MetricField<S> base,
                                       std::function<S(const Vector<S>&)>
                                           clearance,
                                       BarrierParams<S> b) {
  if (b.beta == S(0)) return base;
  return [base = std::move(base), clearance = std::move(clearance),
          b](const Vector<S>& q) -> Matrix<S> {
    const S factor = S(1) + b.beta * std::exp(-b.alpha * clearance(q));
    return factor * base(q);
  };
}

/// Christoffel symbols of the second kind at q, with metric partials taken
/// by central finite differences of the metric field. Returned as one
/// matrix per upper index k, symmetric in the two lower indices.
template <typename S>
std::vector<Matrix<S>> christoffel_at(const Manifold<S>& m, const Vector<S>& q,
                                      S fd_step = S(1e-5)) {
  check_dimension(m, q);
  const Eigen::Index n = m.dim;
  std::vector<Matrix<S>> dg(static_cast<std::size_t>(n));
  for (Eigen::Index l = 0; l < n; ++l) {
    Vector<S> qp = q, qm = q;
    qp[l] += fd_step;
    qm[l] -= fd_step;
    dg[static_cast<std::size_t>(l)] =
        (m.metric_field(qp) - m.metric_field(qm)) / (S(2) * fd_step);
  }
  const Matrix<S> g = metric_at(m, q);
  Eigen::LLT<Matrix<S>> llt(g);
  const Matrix<S> ginv = llt.solve(Matrix<S>::Identity(n, n));
  std::vector<Matrix<S>> gamma(static_cast<std::size_t>(n),
                               Matrix<S>::Zero(n, n));
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i; j < n; ++j) {
        S sum = S(0);
        for (Eigen::Index l = 0; l < n; ++l)
          sum += ginv(k, l) * (dg[static_cast<std::size_t>(i)](j, l) +
                               dg[static_cast<std::size_t>(j)](i, l) -
                               dg[static_cast<std::size_t>(l)](i, j));
        gamma[static_cast<std::size_t>(k)](i, j) = S(0.5) * sum;
        gamma[static_cast<std::size_t>(k)](j, i) = S(0.5) * sum;
      }
  return gamma;
}

// --- Manifold factories ---------------------------------------------------

template <typename S>
Manifold<S> euclidean_manifold(Eigen::Index dim) {
  Manifold<S> m;
  m.dim = dim;
  m.retraction = RetractionKind::Chart;
  m.wrap.assign(static_cast<std::size_t>(dim), WrapRule::None);
  m.metric_field = [dim](const Vector<S>&) {
    return Matrix<S>::Identity(dim, dim).eval();
  };
  return m;
}

template <typename S>
Manifold<S> constant_metric_manifold(Matrix<S> g) {
  Manifold<S> m;
  m.dim = g.rows();
  m.retraction = RetractionKind::Chart;
  m.wrap.assign(static_cast<std::size_t>(m.dim), WrapRule::None);
  m.metric_field = [g = std::move(g)](const Vector<S>&) { return g; };
  return m;
}

template <typename S>
Manifold<S> se2_manifold(Se2Weights<S> w,
                         RetractionKind kind = RetractionKind::Chart) {
  Manifold<S> m;
  m.dim = 3;
  m.retraction = kind;
  m.wrap = {WrapRule::None, WrapRule::None, WrapRule::Angular};
  m.metric_field = [w](const Vector<S>& q) {
    return se2_left_invariant_metric(w, q);
  };
  return m;
}

/// Two-link arm configuration space: joint angles treated as a bounded
/// chart box (no wrapping), metric given by the mass matrix.
template <typename S>
Manifold<S> two_link_manifold(TwoLinkParams<S> p = {}) {
  Manifold<S> m;
  m.dim = 2;
  m.retraction = RetractionKind::Chart;
  m.wrap = {WrapRule::None, WrapRule::None};
  m.metric_field = [p](const Vector<S>& q) {
    return two_link_mass_matrix(p, q);
  };
  return m;
}

/// Conformal sphere-like test metric G = (1 + |q|^2)^-2 I on R^2; its
/// geodesic distances have the closed form of half great-circle angles
/// under the inverse stereographic embedding.
template <typename S>
Manifold<S> stereographic_sphere_manifold() {
  Manifold<S> m;
  m.dim = 2;
  m.retraction = RetractionKind::Chart;
  m.wrap = {WrapRule::None, WrapRule::None};
  m.metric_field = [](const Vector<S>& q) {
    const S f = S(1) + q.squaredNorm();
    return (Matrix<S>::Identity(2, 2) / (f * f)).eval();
  };
  return m;
}

/// Closed-form geodesic distance for stereographic_sphere_manifold.
template <typename S>
S stereographic_sphere_distance(const Vector<S>& a, const Vector<S>& b) {
  const S na = a.squaredNorm(), nb = b.squaredNorm();
  const S dot = (S(4) * a.dot(b) + (na - S(1)) * (nb - S(1))) /
                ((S(1) + na) * (S(1) + nb));
  const S clamped = std::max(S(-1), std::min(S(1), dot));
  return std::acos(clamped) / S(2);
}

}  // namespace geoplan
