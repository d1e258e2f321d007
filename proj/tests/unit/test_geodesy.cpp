#include <numbers>
#include <random>

#include "doctest.h"
#include "geoplan/geodesic.hpp"

using namespace geoplan;

namespace {

constexpr double kPi = std::numbers::pi;

VectorXd vec1(double a) {
  VectorXd v(1);
  v << a;
  return v;
}

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

MatrixXd random_spd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = noise(rng);
  return a.transpose() * a + 0.5 * MatrixXd::Identity(n, n);
}

double max_lateral_deviation(const Polyline<double>& p, const VectorXd& a,
                             const VectorXd& b) {
  const VectorXd dir = (b - a).normalized();
  double worst = 0.0;
  for (const VectorXd& q : p.waypoints) {
    const VectorXd d = q - a;
    worst = std::max(worst, (d - d.dot(dir) * dir).norm());
  }
  return worst;
}

}  // namespace

TEST_SUITE("geodesy") {
  TEST_CASE("retraction midpoint") {
    const auto euclid = euclidean_manifold<double>(2);
    CHECK((retraction_midpoint(euclid, vec2(0, 0), vec2(2, 2)) - vec2(1, 1))
              .norm() < 1e-15);
    CHECK((retraction_midpoint(euclid, vec2(0.3, -0.4), vec2(0.3, -0.4)) -
           vec2(0.3, -0.4))
              .norm() < 1e-15);

    const auto se2 = se2_manifold<double>({1.0, 100.0, 1.0});
    const VectorXd mid =
        retraction_midpoint(se2, vec3(0, 0, 3.0), vec3(0, 0, -3.0));
    CHECK(mid[2] == doctest::Approx(kPi).epsilon(1e-12));
  }

  TEST_CASE("midpoint distance basics") {
    const auto euclid = euclidean_manifold<double>(2);
    CHECK(midpoint_distance(euclid, vec2(0, 0), vec2(3, 4)) ==
          doctest::Approx(5.0).epsilon(1e-14));
    CHECK(midpoint_distance(euclid, vec2(1, 1), vec2(1, 1)) == 0.0);

    // Pure longitudinal translation is a geodesic of the left-invariant
    // metric; the variational solver confirms d = 1 is not just an upper
    // bound.
    const auto se2 = se2_manifold<double>({1.0, 100.0, 1.0});
    CHECK(midpoint_distance(se2, vec3(0, 0, 0), vec3(1, 0, 0)) ==
          doctest::Approx(1.0).epsilon(1e-12));
    GeodesicSolveConfig<double> cfg;
    cfg.num_control_points = 16;
    cfg.tolerance = 1e-10;
    const auto sol =
        solve_geodesic_variational(se2, vec3(0, 0, 0), vec3(1, 0, 0), cfg);
    CHECK(sol.report.converged);
    CHECK(sol.length == doctest::Approx(1.0).epsilon(1e-5));

    // Small lateral offset: the approximation gives 0.1, the true distance
    // is strictly smaller but within cubic error.
    const double d_hat =
        midpoint_distance(se2, vec3(0, 0, 0), vec3(0, 0.01, 0));
    CHECK(d_hat == doctest::Approx(0.1).epsilon(1e-12));
    const auto lat =
        solve_geodesic_variational(se2, vec3(0, 0, 0), vec3(0, 0.01, 0), cfg);
    CHECK(lat.report.converged);
    CHECK(lat.length < d_hat + 1e-9);
    CHECK(lat.length > 0.05);
  }

  TEST_CASE("exact on constant metrics") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int rep = 0; rep < 10; ++rep) {
      const auto m = constant_metric_manifold<double>(random_spd(5, rng));
      for (int k = 0; k < 100; ++k) {
        VectorXd a(5), b(5);
        for (int i = 0; i < 5; ++i) {
          a[i] = noise(rng);
          b[i] = noise(rng);
        }
        const VectorXd d = b - a;
        const double exact = std::sqrt(d.dot(metric_at(m, a) * d));
        const double approx = midpoint_distance(m, a, b);
        CHECK(std::abs(approx - exact) <= 1e-12 * std::max(exact, 1e-30));
      }
    }
  }

  TEST_CASE("symmetry behavior") {
    // Exactly symmetric for constant metrics with the linear retraction.
    std::mt19937_64 rng(29);
    const auto constant = constant_metric_manifold<double>(random_spd(3, rng));
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int k = 0; k < 50; ++k) {
      VectorXd a(3), b(3);
      for (int i = 0; i < 3; ++i) {
        a[i] = noise(rng);
        b[i] = noise(rng);
      }
      CHECK(midpoint_distance(constant, a, b) ==
            doctest::Approx(midpoint_distance(constant, b, a))
                .epsilon(1e-14));
    }

    // Near-symmetry on a smooth varying metric: the gap shrinks cubically.
    const auto arm = two_link_manifold<double>();
    std::uniform_real_distribution<double> uni(-1.5, 1.5);
    for (int k = 0; k < 200; ++k) {
      const VectorXd a = vec2(uni(rng), uni(rng));
      VectorXd step = vec2(noise(rng), noise(rng));
      step *= 0.5 * std::abs(noise(rng)) / metric_norm(arm, a, step);
      const VectorXd b = a + step;
      const double dab = midpoint_distance(arm, a, b);
      if (dab > 0.5 || dab < 1e-6) continue;
      const double dba = midpoint_distance(arm, b, a);
      CHECK(std::abs(dab - dba) <= 1e-2 * dab * dab * dab + 1e-13);
    }
  }

  TEST_CASE("path length and energy") {
    const auto euclid = euclidean_manifold<double>(2);
    const auto two = make_polyline(euclid, {vec2(0, 0), vec2(3, 4)});
    CHECK(path_length(two) == doctest::Approx(5.0));

    const auto straight =
        make_polyline(euclid, {vec2(0, 0), vec2(1, 0), vec2(2, 0)});
    CHECK(path_length(straight) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(path_energy(straight) == doctest::Approx(2.0).epsilon(1e-14));

    const auto e1 = euclidean_manifold<double>(1);
    const auto uneven = make_polyline(e1, {vec1(0), vec1(2), vec1(2)});
    CHECK(path_energy(uneven) == doctest::Approx(4.0).epsilon(1e-14));
  }

  TEST_CASE("segment refinement changes length at third order") {
    const auto arm = two_link_manifold<double>();
    const VectorXd a = vec2(0.3, 0.8);
    VectorXd dir = vec2(0.6, -0.8);
    dir /= metric_norm(arm, a, dir);
    std::vector<double> hs = {0.4, 0.2, 0.1};
    std::vector<double> errs;
    for (const double h : hs) {
      const VectorXd b = a + h * dir;
      const VectorXd mid = retraction_midpoint(arm, a, b);
      const double split =
          midpoint_distance(arm, a, mid) + midpoint_distance(arm, mid, b);
      errs.push_back(std::abs(split - midpoint_distance(arm, a, b)));
    }
    CHECK(fit_loglog_slope(hs, errs) > 2.5);
  }

  TEST_CASE("unit-speed reparameterization") {
    const auto e1 = euclidean_manifold<double>(1);
    const auto p = make_polyline(e1, {vec1(0), vec1(2), vec1(2)});
    const auto r = reparameterize_unit_speed(e1, p, 3);
    REQUIRE(r.waypoints.size() == 3);
    CHECK(r.waypoints[0][0] == doctest::Approx(0.0));
    CHECK(r.waypoints[1][0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.waypoints[2][0] == doctest::Approx(2.0));

    // Degenerate path.
    const auto zero = make_polyline(e1, {vec1(1), vec1(1)});
    CHECK_THROWS_AS((void)reparameterize_unit_speed(e1, zero, 4),
                    DegeneratePath);

    // A curved two-link path: equal spacing within 0.1%, length preserved.
    const auto arm = two_link_manifold<double>();
    GeodesicSolveConfig<double> cfg;
    cfg.num_control_points = 8;
    cfg.tolerance = 1e-9;
    const auto sol = solve_geodesic_variational(
        arm, vec2(-kPi / 4, -kPi / 4), vec2(3 * kPi / 4, 3 * kPi / 4), cfg);
    const auto res = reparameterize_unit_speed(arm, sol.path, 129);
    REQUIRE(res.waypoints.size() == 129);
    const double total = path_length(res);
    CHECK(std::abs(total - path_length(sol.path)) <= 1e-3 * total);
    double lo = 1e300, hi = 0.0;
    for (const double d : res.lengths) {
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    CHECK(hi / lo <= 1.001);
    const double energy = path_energy(res);
    CHECK(std::abs(energy - 0.5 * total * total) <= 1e-3 * energy);
  }

  TEST_CASE("shooting solver on a constant metric is the chart line") {
    MatrixXd g(2, 2);
    g << 2.0, 0.3, 0.3, 1.0;
    const auto m = constant_metric_manifold<double>(g);
    GeodesicSolveConfig<double> cfg;
    cfg.mode = GeodesicSolveConfig<double>::Mode::ShootingBvp;
    const VectorXd a = vec2(0.2, -0.4), b = vec2(1.0, 1.3);
    const auto sol = solve_geodesic_bvp(m, a, b, cfg);
    CHECK(sol.report.converged);
    CHECK((sol.initial_velocity - (b - a)).norm() < 1e-8);
    CHECK(max_lateral_deviation(sol.path, a, b) < 1e-8);
    const double direct = midpoint_distance(m, a, b);
    CHECK(sol.length == doctest::Approx(direct).epsilon(1e-10));
    CHECK(sol.energy ==
          doctest::Approx(0.5 * direct * direct).epsilon(1e-10));
  }

  TEST_CASE("solvers match the closed form on the sphere-like metric") {
    const auto m = stereographic_sphere_manifold<double>();
    const std::vector<std::pair<VectorXd, VectorXd>> pairs = {
        {vec2(0.1, 0.2), vec2(0.5, -0.3)},
        {vec2(-0.4, 0.1), vec2(0.3, 0.6)},
    };
    for (const auto& [a, b] : pairs) {
      const double exact = stereographic_sphere_distance(a, b);

      GeodesicSolveConfig<double> bvp;
      bvp.mode = GeodesicSolveConfig<double>::Mode::ShootingBvp;
      bvp.tolerance = 1e-11;
      const auto shot = solve_geodesic_bvp(m, a, b, bvp);
      CHECK(shot.report.converged);
      CHECK(std::abs(shot.length - exact) < 1e-6);

      // Constant speed along the integrated geodesic.
      const auto traj = geodesic_flow(m, a, shot.initial_velocity, 256);
      double lo = 1e300, hi = 0.0;
      for (std::size_t i = 0; i < traj.q.size(); ++i) {
        const double speed = metric_norm(m, traj.q[i], traj.v[i]);
        lo = std::min(lo, speed);
        hi = std::max(hi, speed);
      }
      CHECK((hi - lo) / hi < 1e-6);

      GeodesicSolveConfig<double> var;
      var.num_control_points = 24;
      var.tolerance = 1e-12;
      var.max_iterations = 20000;
      const auto sol = solve_geodesic_variational(m, a, b, var);
      CHECK(sol.report.converged);
      CHECK(std::abs(sol.length - exact) < 1e-6);
    }
  }

  TEST_CASE("variational solver basics") {
    MatrixXd g(2, 2);
    g << 3.0, 0.0, 0.0, 1.0;
    const auto m = constant_metric_manifold<double>(g);
    GeodesicSolveConfig<double> cfg;
    const VectorXd a = vec2(0, 0), b = vec2(2, 1);
    const auto sol = solve_geodesic_variational(m, a, b, cfg);
    CHECK(sol.report.converged);
    CHECK(max_lateral_deviation(sol.path, a, b) < 1e-6);

    // Energy history is monotone nonincreasing over accepted steps.
    for (std::size_t i = 1; i < sol.energy_history.size(); ++i)
      CHECK(sol.energy_history[i] <= sol.energy_history[i - 1]);

    const double exact = midpoint_distance(m, a, b);
    CHECK(sol.length == doctest::Approx(exact).epsilon(1e-8));
  }

  TEST_CASE("two-link solvers beat the straight line") {
    const auto arm = two_link_manifold<double>();
    const VectorXd a = vec2(-kPi / 4, -kPi / 4),
                   b = vec2(3 * kPi / 4, 3 * kPi / 4);

    // Straight-line reference energy at unit speed.
    std::vector<VectorXd> pts;
    for (int i = 0; i <= 128; ++i)
      pts.push_back(a + (static_cast<double>(i) / 128.0) * (b - a));
    auto straight = make_polyline(arm, pts);
    straight = reparameterize_unit_speed(arm, straight, 129);
    const double straight_energy = path_energy(straight);

    GeodesicSolveConfig<double> cfg;
    cfg.num_control_points = 16;
    cfg.tolerance = 1e-10;
    cfg.max_iterations = 6000;
    const auto sol = solve_geodesic_variational(arm, a, b, cfg);
    CHECK(sol.energy <= 0.99 * straight_energy);

    // Best-of-8 restarts never loses to the single start.
    const auto best = solve_geodesic_variational_restarts(arm, a, b, cfg, 8,
                                                          0.5, 1234);
    CHECK(best.energy <= sol.energy + 1e-12);
  }

  TEST_CASE("convergence study is exact on constant metrics") {
    MatrixXd g(2, 2);
    g << 2.0, 0.4, 0.4, 1.5;
    const auto m = constant_metric_manifold<double>(g);
    GeodesicSolveConfig<double> oracle;
    oracle.num_control_points = 16;
    oracle.tolerance = 1e-12;
    const auto study = convergence_study(m, vec2(0.1, 0.2), vec2(1.0, -0.5),
                                         {0.2, 0.1, 0.05}, oracle);
    CHECK(study.exact);
  }

  TEST_CASE("convergence study slopes on the two-link metric") {
    const auto arm = two_link_manifold<double>();
    GeodesicSolveConfig<double> oracle;
    oracle.num_control_points = 32;
    oracle.tolerance = 1e-10;
    oracle.max_iterations = 20000;
    const auto study =
        convergence_study(arm, vec2(0.3, 0.8), vec2(0.7, -0.4),
                          {0.2, 0.1, 0.05, 0.025, 0.0125}, oracle);
    CHECK(!study.exact);
    CHECK(study.slope_distance >= 2.7);
    CHECK(study.slope_distance <= 3.5);
    CHECK(study.slope_midpoint >= 1.7);
    CHECK(study.slope_midpoint <= 2.5);
    CHECK(study.slope_logdiff >= 2.7);
    for (const double mm : study.bvp_mismatch) {
      CHECK(std::isfinite(mm));
      CHECK(mm < 1e-6);
    }
  }
}
