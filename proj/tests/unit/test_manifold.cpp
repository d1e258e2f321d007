#include <numbers>
#include <random>

#include "doctest.h"
#include "geoplan/distance.hpp"
#include "geoplan/geodesic.hpp"
#include "geoplan/manifold.hpp"
#include "geoplan/metrics.hpp"

using namespace geoplan;

namespace {

constexpr double kPi = std::numbers::pi;

VectorXd vec2(double a, double b) {
  VectorXd v(2);
  v << a, b;
  return v;
}

VectorXd vec3(double a, double b, double c) {
  VectorXd v(3);
  v << a, b, c;
  return v;
}

// Relative pose T(q)^-1 T(p), written independently of the library.
VectorXd rel_pose(const VectorXd& q, const VectorXd& p) {
  const double c = std::cos(q[2]), s = std::sin(q[2]);
  VectorXd r(3);
  r << c * (p[0] - q[0]) + s * (p[1] - q[1]),
      -s * (p[0] - q[0]) + c * (p[1] - q[1]), wrap_angle(p[2] - q[2]);
  return r;
}

// Oracle for the SE(2) chart metric: body velocities of chart directions
// obtained by numerically differentiating left translations.
MatrixXd se2_metric_oracle(const Eigen::Vector3d& w, const VectorXd& q) {
  const double h = 1e-6;
  MatrixXd xi(3, 3);
  for (int i = 0; i < 3; ++i) {
    VectorXd e = VectorXd::Zero(3);
    e[i] = h;
    xi.col(i) = (rel_pose(q, q + e) - rel_pose(q, q - e)) / (2.0 * h);
  }
  MatrixXd g(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      g(i, j) = w[0] * xi(0, i) * xi(0, j) + w[1] * xi(1, i) * xi(1, j) +
                w[2] * xi(2, i) * xi(2, j);
  return g;
}

// Integrates a constant body twist by brute force.
VectorXd integrate_twist(const VectorXd& xi, int steps) {
  VectorXd q = VectorXd::Zero(3);
  const double dt = 1.0 / steps;
  for (int i = 0; i < steps; ++i) {
    auto deriv = [&](const VectorXd& state) {
      VectorXd d(3);
      d << std::cos(state[2]) * xi[0] - std::sin(state[2]) * xi[1],
          std::sin(state[2]) * xi[0] + std::cos(state[2]) * xi[1], xi[2];
      return d;
    };
    const VectorXd k1 = deriv(q);
    const VectorXd k2 = deriv(q + 0.5 * dt * k1);
    const VectorXd k3 = deriv(q + 0.5 * dt * k2);
    const VectorXd k4 = deriv(q + dt * k3);
    q += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return q;
}

}  // namespace

TEST_SUITE("manifold") {
  TEST_CASE("wrap_angle maps to (-pi, pi] with ties at pi") {
    CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
    CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
    CHECK(wrap_angle(3.0 * kPi) == doctest::Approx(kPi));
    CHECK(wrap_angle(0.0) == 0.0);
    CHECK(wrap_angle(3.5) == doctest::Approx(3.5 - 2.0 * kPi));
    CHECK(wrap_angle(-6.0) == doctest::Approx(-6.0 + 2.0 * kPi));
  }

  TEST_CASE("metric_at on the concrete fields") {
    const auto euclid = euclidean_manifold<double>(2);
    CHECK(metric_at(euclid, vec2(0.3, -1.2)).isIdentity(1e-15));

    const auto se2 = se2_manifold<double>({1.0, 100.0, 1.0});
    MatrixXd g0 = metric_at(se2, vec3(0, 0, 0));
    CHECK(g0(0, 0) == doctest::Approx(1.0));
    CHECK(g0(1, 1) == doctest::Approx(100.0));
    CHECK(g0(2, 2) == doctest::Approx(1.0));
    CHECK(std::abs(g0(0, 1)) < 1e-12);

    // At theta = pi/2 the chart x-direction is the body lateral direction.
    MatrixXd g90 = metric_at(se2, vec3(0, 0, kPi / 2));
    CHECK(g90(0, 0) == doctest::Approx(100.0));
    CHECK(g90(1, 1) == doctest::Approx(1.0));
    CHECK(g90(2, 2) == doctest::Approx(1.0));
    CHECK(std::abs(g90(0, 1)) < 1e-9);

    // Cross-check against the left-translation oracle at generic poses.
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(-3.0, 3.0);
    for (int k = 0; k < 20; ++k) {
      const VectorXd q = vec3(uni(rng), uni(rng), wrap_angle(uni(rng)));
      const MatrixXd g = metric_at(se2, q);
      const MatrixXd ref = se2_metric_oracle({1.0, 100.0, 1.0}, q);
      CHECK((g - ref).lpNorm<Eigen::Infinity>() < 1e-7);
    }
  }

  TEST_CASE("metric_at errors") {
    const auto se2 = se2_manifold<double>({1.0, 100.0, 1.0});
    CHECK_THROWS_AS((void)metric_at(se2, vec2(0, 0)), DimensionMismatch);

    Manifold<double> bad = euclidean_manifold<double>(2);
    bad.metric_field = [](const VectorXd&) {
      MatrixXd g(2, 2);
      g << 1.0, 0.0, 0.0, -1.0;
      return g;
    };
    CHECK_THROWS_AS((void)metric_at(bad, vec2(0, 0)), NotPositiveDefinite);
  }

  TEST_CASE("inner products") {
    const auto euclid = euclidean_manifold<double>(2);
    const VectorXd q = vec2(0, 0);
    CHECK(inner(euclid, q, {q, vec2(1, 0)}, {q, vec2(0, 1)}) ==
          doctest::Approx(0.0));

    const auto se2 = se2_manifold<double>({1.0, 100.0, 1.0});
    const VectorXd o = vec3(0, 0, 0);
    CHECK(inner(se2, o, {o, vec3(0, 1, 0)}, {o, vec3(0, 1, 0)}) ==
          doctest::Approx(100.0));

    CHECK_THROWS_AS(
        (void)inner(euclid, q, {q, vec2(1, 0)}, {vec2(1, 1), vec2(0, 1)}),
        BaseMismatch);
  }

  TEST_CASE("chart retraction with angle wrap") {
    const auto euclid = euclidean_manifold<double>(2);
    CHECK((retract<double>(euclid, vec2(1, 2), vec2(0.5, -0.5)) -
           vec2(1.5, 1.5))
              .norm() < 1e-15);

    const auto se2 = se2_manifold<double>({1.0, 100.0, 1.0});
    const VectorXd p = retract<double>(se2, vec3(0, 0, 3.0), vec3(0, 0, 0.5));
    CHECK(p[2] == doctest::Approx(3.5 - 2.0 * kPi));

    const TangentVector<double> back =
        inverse_retract(se2, vec3(0, 0, 3.0), vec3(0, 0, -3.0));
    CHECK(back.components[2] == doctest::Approx(2.0 * kPi - 6.0));
  }

  TEST_CASE("group-exponential retraction matches twist integration") {
    const auto se2 = se2_manifold<double>({1.0, 100.0, 1.0},
                                          RetractionKind::Se2Exp);
    const VectorXd v = vec3(1.0, 0.0, kPi / 2);
    const VectorXd p = retract<double>(se2, vec3(0, 0, 0), v);
    CHECK(p[0] == doctest::Approx(2.0 / kPi).epsilon(1e-9));
    CHECK(p[1] == doctest::Approx(2.0 / kPi).epsilon(1e-9));
    CHECK(p[2] == doctest::Approx(kPi / 2).epsilon(1e-12));

    const VectorXd integrated = integrate_twist(v, 20000);
    CHECK((p - integrated).lpNorm<Eigen::Infinity>() < 1e-9);

    const TangentVector<double> log_v =
        inverse_retract(se2, vec3(0, 0, 0), p);
    CHECK((log_v.components - v).norm() < 1e-9);

    // Away from the identity the tangent components stay in the chart
    // basis, so the round trip must still close.
    const VectorXd q = vec3(0.4, -1.1, 2.2);
    const VectorXd w = vec3(-0.3, 0.2, 0.7);
    const VectorXd p2 = retract<double>(se2, q, w);
    CHECK((inverse_retract(se2, q, p2).components - w).norm() < 1e-9);
  }

  TEST_CASE("antipodal angular separation is rejected") {
    const auto se2 = se2_manifold<double>({1.0, 1.0, 1.0});
    CHECK_THROWS_AS(
        (void)inverse_retract(se2, vec3(0, 0, 0), vec3(0, 0, kPi)),
        OutOfNeighborhood);
  }

  TEST_CASE("retraction consistency for small tangents") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const auto kinds = {RetractionKind::Chart, RetractionKind::Se2Exp};
    for (const auto kind : kinds) {
      const auto se2 = se2_manifold<double>({1.0, 100.0, 1.0}, kind);
      for (int k = 0; k < 200; ++k) {
        const VectorXd q =
            vec3(3.0 * uni(rng), 3.0 * uni(rng), wrap_angle(3.0 * uni(rng)));
        VectorXd v = vec3(uni(rng), uni(rng), uni(rng));
        const double norm = metric_norm(se2, q, v);
        v *= 0.1 * std::abs(uni(rng)) / norm;
        const VectorXd p = retract(se2, q, v);
        CHECK((inverse_retract(se2, q, p).components - v).norm() <= 1e-9);
      }
    }
    const auto arm = two_link_manifold<double>();
    for (int k = 0; k < 100; ++k) {
      const VectorXd q = vec2(2.0 * uni(rng), 2.0 * uni(rng));
      VectorXd v = vec2(uni(rng), uni(rng));
      v *= 0.1 / metric_norm(arm, q, v);
      const VectorXd p = retract(arm, q, v);
      CHECK((inverse_retract(arm, q, p).components - v).norm() <= 1e-9);
    }
  }

  TEST_CASE("retractions are first order") {
    const std::vector<double> eps = {1e-1, 1e-2, 1e-3, 1e-4};
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);

    // Chart retraction is exact in chart coordinates.
    const auto chart = se2_manifold<double>({1.0, 100.0, 1.0});
    const VectorXd q = vec3(0.3, -0.2, 2.9);
    VectorXd w = vec3(uni(rng), uni(rng), uni(rng));
    w /= w.norm();
    for (const double e : eps) {
      const VectorXd r = retract<double>(chart, q, (e * w).eval());
      const VectorXd residual =
          detail::wrapped_difference(chart, r, q) - e * w;
      CHECK(residual.norm() < 1e-13);
    }

    // Group-exponential retraction: quadratic residual, slope >= 1.9.
    const auto grp =
        se2_manifold<double>({1.0, 100.0, 1.0}, RetractionKind::Se2Exp);
    std::vector<double> errs;
    for (const double e : eps) {
      const VectorXd r = retract<double>(grp, q, (e * w).eval());
      errs.push_back(
          (detail::wrapped_difference(grp, r, q) - e * w).norm());
    }
    const double slope =
        fit_loglog_slope(std::vector<double>(eps.begin(), eps.end()), errs);
    CHECK(slope >= 1.9);
  }

  TEST_CASE("core ops instantiate for float") {
    const auto se2 = se2_manifold<float>({1.0f, 100.0f, 1.0f});
    Vector<float> q(3), v(3);
    q << 0.1f, -0.2f, 2.9f;
    v << 0.05f, 0.0f, 0.3f;
    const Vector<float> p = retract(se2, q, v);
    CHECK((inverse_retract(se2, q, p).components - v).norm() < 1e-5f);
    CHECK(midpoint_distance(se2, q, p) > 0.0f);
  }

  TEST_CASE("wrapping across the seam matches the seam-free computation") {
    const auto se2 = se2_manifold<double>({1.0, 100.0, 1.0});
    const VectorXd q = vec3(0.0, 0.0, 3.1);
    const VectorXd v = vec3(0.0, 0.0, 0.1);
    const VectorXd p = retract(se2, q, v);
    CHECK(p[2] == doctest::Approx(wrap_angle(3.2)));
    CHECK((inverse_retract(se2, q, p).components - v).norm() < 1e-12);
  }
}
