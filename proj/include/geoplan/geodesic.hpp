#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "geoplan/metrics.hpp"
#include "geoplan/path.hpp"
#include "geoplan/spline.hpp"

namespace geoplan {

template <typename S>
struct GeodesicSolveConfig {
  enum class Mode { ShootingBvp, VariationalSpline };
  Mode mode = Mode::VariationalSpline;
  int num_control_points = 16;       // free interior spline control points
  S integrator_step = S(1) / S(256); // BVP: RK4 step over the unit horizon
  int max_iterations = 0;            // 0 -> mode default
  S tolerance = S(1e-10);  // BVP endpoint error / relative energy decrease
  S christoffel_fd_step = S(1e-5);
  int output_waypoints = 129;
};

template <typename S>
struct SolveReport {
  bool converged = false;
  int iterations = 0;
  S residual = std::numeric_limits<S>::quiet_NaN();
};

template <typename S>
struct GeodesicSolution {
  Polyline<S> path;
  S length = S(0);
  S energy = S(0);
  SolveReport<S> report;
  Vector<S> initial_velocity;     // shooting solutions only
  std::vector<S> energy_history;  // variational: accepted-step energies
};

namespace detail {

template <typename S>
Vector<S> geodesic_acceleration(const Manifold<S>& m, const Vector<S>& q,
                                const Vector<S>& v, S fd_step) {
  const std::vector<Matrix<S>> gamma = christoffel_at(m, q, fd_step);
  Vector<S> a(m.dim);
  for (Eigen::Index k = 0; k < m.dim; ++k)
    a[k] = -v.dot(gamma[static_cast<std::size_t>(k)] * v);
  return a;
}

}  // namespace detail

template <typename S>
struct FlowTrajectory {
  std::vector<Vector<S>> q;
  std::vector<Vector<S>> v;
};

/// Integrates the geodesic equation from (q0, v0) over t in [0, 1] with
/// fixed-step RK4. Coordinates are left unwrapped so the trajectory stays
/// in one chart.
template <typename S>
FlowTrajectory<S> geodesic_flow(const Manifold<S>& m, const Vector<S>& q0,
                                const Vector<S>& v0, int steps,
                                S christoffel_fd_step = S(1e-5)) {
  FlowTrajectory<S> traj;
  traj.q.reserve(static_cast<std::size_t>(steps) + 1);
  traj.v.reserve(static_cast<std::size_t>(steps) + 1);
  Vector<S> q = q0, v = v0;
  traj.q.push_back(q);
  traj.v.push_back(v);
  const S dt = S(1) / static_cast<S>(steps);
  for (int i = 0; i < steps; ++i) {
    const Vector<S> k1q = v;
    const Vector<S> k1v =
        detail::geodesic_acceleration(m, q, v, christoffel_fd_step);
    const Vector<S> k2q = v + S(0.5) * dt * k1v;
    const Vector<S> k2v = detail::geodesic_acceleration(
        m, (q + S(0.5) * dt * k1q).eval(), k2q, christoffel_fd_step);
    const Vector<S> k3q = v + S(0.5) * dt * k2v;
    const Vector<S> k3v = detail::geodesic_acceleration(
        m, (q + S(0.5) * dt * k2q).eval(), k3q, christoffel_fd_step);
    const Vector<S> k4q = v + dt * k3v;
    const Vector<S> k4v = detail::geodesic_acceleration(
        m, (q + dt * k3q).eval(), k4q, christoffel_fd_step);
    q += dt / S(6) * (k1q + S(2) * k2q + S(2) * k3q + k4q);
    v += dt / S(6) * (k1v + S(2) * k2v + S(2) * k3v + k4v);
    traj.q.push_back(q);
    traj.v.push_back(v);
  }
  return traj;
}

/// Two-point geodesic solve by single shooting: the initial velocity is
/// adjusted with a damped Newton iteration (finite-difference Jacobian)
/// until the integrated endpoint matches q_y.
template <typename S>
GeodesicSolution<S> solve_geodesic_bvp(const Manifold<S>& m,
                                       const Vector<S>& qx,
                                       const Vector<S>& qy,
                                       const GeodesicSolveConfig<S>& cfg) {
  const int steps =
      std::max(8, static_cast<int>(std::lround(S(1) / cfg.integrator_step)));
  const int max_iters = cfg.max_iterations > 0 ? cfg.max_iterations : 50;
  const Eigen::Index n = m.dim;

  Vector<S> v = inverse_retract(m, qx, qy).components;
  auto endpoint = [&](const Vector<S>& vel) {
    return geodesic_flow(m, qx, vel, steps, cfg.christoffel_fd_step)
        .q.back();
  };
  Vector<S> r = detail::wrapped_difference(m, endpoint(v), qy);

  GeodesicSolution<S> sol;
  int it = 0;
  for (; it < max_iters && r.norm() > cfg.tolerance; ++it) {
    Matrix<S> jac(n, n);
    const S h = S(1e-6) * std::max(S(1), v.template lpNorm<Eigen::Infinity>());
    for (Eigen::Index c = 0; c < n; ++c) {
      Vector<S> vp = v, vm = v;
      vp[c] += h;
      vm[c] -= h;
      jac.col(c) = (detail::wrapped_difference(m, endpoint(vp), qy) -
                    detail::wrapped_difference(m, endpoint(vm), qy)) /
                   (S(2) * h);
    }
    const Vector<S> delta = jac.fullPivLu().solve(-r);
    bool accepted = false;
    S alpha = S(1);
    for (int k = 0; k < 10; ++k, alpha *= S(0.5)) {
      const Vector<S> v_try = v + alpha * delta;
      const Vector<S> r_try = detail::wrapped_difference(m, endpoint(v_try), qy);
      if (r_try.norm() < r.norm()) {
        v = v_try;
        r = r_try;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;  // stalled
  }

  sol.report.iterations = it;
  sol.report.residual = r.norm();
  sol.report.converged = r.norm() <= cfg.tolerance;

  const FlowTrajectory<S> traj =
      geodesic_flow(m, qx, v, steps, cfg.christoffel_fd_step);
  std::vector<Vector<S>> pts;
  pts.reserve(traj.q.size());
  for (const auto& q : traj.q) pts.push_back(wrap_config(m, q));
  sol.path = make_polyline(m, std::move(pts));
  // Geodesics have constant speed, so length equals the initial speed over
  // the unit horizon.
  sol.length = metric_norm(m, qx, v);
  sol.energy = S(0.5) * sol.length * sol.length;
  sol.initial_velocity = v;
  return sol;
}

namespace detail {

// 5-point Gauss-Legendre nodes and weights on [0, 1].
template <typename S>
const std::array<std::pair<S, S>, 5>& gauss5() {
  static const std::array<std::pair<S, S>, 5> table = [] {
    const double x[5] = {-0.906179845938664, -0.538469310105683, 0.0,
                         0.538469310105683, 0.906179845938664};
    const double w[5] = {0.236926885056189, 0.478628670499366,
                         0.568888888888889, 0.478628670499366,
                         0.236926885056189};
    std::array<std::pair<S, S>, 5> t;
    for (int i = 0; i < 5; ++i)
      t[static_cast<std::size_t>(i)] = {S(0.5) * (S(1) + S(x[i])),
                                        S(0.5) * S(w[i])};
    return t;
  }();
  return table;
}

// Precomputed quadrature: basis values at every (interval, node) pair.
template <typename S>
struct SplineQuadrature {
  struct Node {
    S weight;  // includes the interval width
    std::array<S, 4> b;
    std::array<S, 4> db;
  };
  std::vector<std::array<Node, 5>> per_interval;
  std::vector<S> t0, dt;

  explicit SplineQuadrature(const CubicBSpline<S>& sp) {
    const int m = sp.intervals();
    per_interval.resize(static_cast<std::size_t>(m));
    t0.resize(static_cast<std::size_t>(m));
    dt.resize(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
      const S a = sp.knots[static_cast<std::size_t>(j) + 3];
      const S b = sp.knots[static_cast<std::size_t>(j) + 4];
      t0[static_cast<std::size_t>(j)] = a;
      dt[static_cast<std::size_t>(j)] = b - a;
      for (int g = 0; g < 5; ++g) {
        const auto [xg, wg] = gauss5<S>()[static_cast<std::size_t>(g)];
        auto& node = per_interval[static_cast<std::size_t>(j)]
                                 [static_cast<std::size_t>(g)];
        node.weight = wg * (b - a);
        sp.basis(j, a + xg * (b - a), node.b, node.db);
      }
    }
  }

  // Energy contribution of one interval: 0.5 * integral of |gamma'|^2_G.
  S interval_energy(const Manifold<S>& m, const CubicBSpline<S>& sp,
                    int j) const {
    S e = S(0);
    Vector<S> pos(sp.dim()), vel(sp.dim());
    for (int g = 0; g < 5; ++g) {
      const auto& node = per_interval[static_cast<std::size_t>(j)]
                                     [static_cast<std::size_t>(g)];
      pos.setZero();
      vel.setZero();
      for (int r = 0; r < 4; ++r) {
        pos += node.b[static_cast<std::size_t>(r)] *
               sp.ctrl.row(j + r).transpose();
        vel += node.db[static_cast<std::size_t>(r)] *
               sp.ctrl.row(j + r).transpose();
      }
      const Matrix<S> g_q = m.metric_field(pos);
      e += node.weight * S(0.5) * vel.dot(g_q * vel);
    }
    return e;
  }

  S total_energy(const Manifold<S>& m, const CubicBSpline<S>& sp) const {
    S e = S(0);
    for (int j = 0; j < sp.intervals(); ++j) e += interval_energy(m, sp, j);
    return e;
  }

  S total_length(const Manifold<S>& m, const CubicBSpline<S>& sp) const {
    S len = S(0);
    Vector<S> pos(sp.dim()), vel(sp.dim());
    for (int j = 0; j < sp.intervals(); ++j)
      for (int g = 0; g < 5; ++g) {
        const auto& node = per_interval[static_cast<std::size_t>(j)]
                                       [static_cast<std::size_t>(g)];
        pos.setZero();
        vel.setZero();
        for (int r = 0; r < 4; ++r) {
          pos += node.b[static_cast<std::size_t>(r)] *
                 sp.ctrl.row(j + r).transpose();
          vel += node.db[static_cast<std::size_t>(r)] *
                 sp.ctrl.row(j + r).transpose();
        }
        const Matrix<S> g_q = m.metric_field(pos);
        len += node.weight * std::sqrt(vel.dot(g_q * vel));
      }
    return len;
  }
};

}  // namespace detail

/// Minimizes the spline energy functional over the interior control points
/// by gradient descent with a backtracking line search; gradients are
/// central finite differences of the quadrature energy. Energy is monotone
/// nonincreasing over accepted steps.
template <typename S>
GeodesicSolution<S> solve_geodesic_variational(
    const Manifold<S>& m, const Vector<S>& qx, const Vector<S>& qy,
    const GeodesicSolveConfig<S>& cfg, const Matrix<S>* initial_ctrl = nullptr) {
  const int n_free = std::max(4, cfg.num_control_points);
  const int n_ctrl = n_free + 2;
  const int max_iters = cfg.max_iterations > 0 ? cfg.max_iterations : 4000;

  // Build in the unwrapped chart so the control polygon stays continuous.
  const Vector<S> goal_unwrapped =
      qx + detail::chart_difference(m, qx, qy);
  CubicBSpline<S> sp = CubicBSpline<S>::line(qx, goal_unwrapped, n_ctrl);
  if (initial_ctrl != nullptr) sp.ctrl = *initial_ctrl;
  const detail::SplineQuadrature<S> quad(sp);
  const int m_intervals = sp.intervals();

  // Descent directions are preconditioned by the metric at the chord
  // midpoint; otherwise anisotropic metrics make plain gradient steps
  // hopelessly ill-conditioned.
  const Eigen::LLT<Matrix<S>> preconditioner(
      m.metric_field((S(0.5) * (qx + goal_unwrapped)).eval()));

  auto local_energy = [&](int ctrl_index) {
    const int lo = std::max(0, ctrl_index - 3);
    const int hi = std::min(m_intervals - 1, ctrl_index);
    S e = S(0);
    for (int j = lo; j <= hi; ++j) e += quad.interval_energy(m, sp, j);
    return e;
  };

  S energy = quad.total_energy(m, sp);
  std::vector<S> energy_history{energy};
  Matrix<S> grad = Matrix<S>::Zero(n_ctrl, m.dim);
  S alpha = S(1);
  int it = 0;
  int stall_count = 0;
  S last_rel_decrease = std::numeric_limits<S>::infinity();
  bool converged = false;

  for (; it < max_iters; ++it) {
    // Finite-difference gradient over interior control points, evaluating
    // only the intervals a control point supports.
    const S fd = S(1e-6) *
                 std::max(S(1), sp.ctrl.template lpNorm<Eigen::Infinity>());
    for (int c = 1; c < n_ctrl - 1; ++c)
      for (Eigen::Index d = 0; d < m.dim; ++d) {
        const S saved = sp.ctrl(c, d);
        sp.ctrl(c, d) = saved + fd;
        const S ep = local_energy(c);
        sp.ctrl(c, d) = saved - fd;
        const S em = local_energy(c);
        sp.ctrl(c, d) = saved;
        grad(c, d) = (ep - em) / (S(2) * fd);
      }
    Matrix<S> direction = Matrix<S>::Zero(n_ctrl, m.dim);
    S grad_dot_dir = S(0);
    for (int c = 1; c < n_ctrl - 1; ++c) {
      direction.row(c) =
          preconditioner.solve(grad.row(c).transpose()).transpose();
      grad_dot_dir += grad.row(c).dot(direction.row(c));
    }
    if (grad_dot_dir < S(1e-28)) {
      converged = true;
      break;
    }

    bool accepted = false;
    const Matrix<S> ctrl_saved = sp.ctrl;
    for (int k = 0; k < 60; ++k, alpha *= S(0.5)) {
      sp.ctrl = ctrl_saved - alpha * direction;
      const S e_try = quad.total_energy(m, sp);
      if (e_try <= energy - S(1e-4) * alpha * grad_dot_dir) {
        last_rel_decrease = (energy - e_try) / std::max(energy, S(1e-300));
        energy = e_try;
        energy_history.push_back(energy);
        accepted = true;
        alpha *= S(1.5);
        break;
      }
    }
    if (!accepted) {
      sp.ctrl = ctrl_saved;
      converged = last_rel_decrease <= cfg.tolerance;
      break;
    }
    if (last_rel_decrease <= cfg.tolerance) {
      if (++stall_count >= 3) {
        converged = true;
        break;
      }
    } else {
      stall_count = 0;
    }
  }
  if (it >= max_iters) converged = last_rel_decrease <= cfg.tolerance;

  GeodesicSolution<S> sol;
  sol.report.converged = converged;
  sol.report.iterations = it;
  sol.report.residual = last_rel_decrease;
  sol.energy = energy;
  sol.energy_history = std::move(energy_history);
  sol.length = quad.total_length(m, sp);
  std::vector<Vector<S>> pts;
  const int n_out = std::max(2, cfg.output_waypoints);
  pts.reserve(static_cast<std::size_t>(n_out));
  for (int i = 0; i < n_out; ++i)
    pts.push_back(wrap_config(
        m, sp.eval(static_cast<S>(i) / static_cast<S>(n_out - 1))));
  sol.path = make_polyline(m, std::move(pts));
  return sol;
}

/// Best-of-N variational solve: restart 0 starts from the straight chart
/// segment, later restarts perturb the interior control points.
template <typename S>
GeodesicSolution<S> solve_geodesic_variational_restarts(
    const Manifold<S>& m, const Vector<S>& qx, const Vector<S>& qy,
    const GeodesicSolveConfig<S>& cfg, int restarts, S perturb_std,
    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<S> noise(S(0), S(1));
  GeodesicSolution<S> best;
  bool have_best = false;
  const int n_ctrl = std::max(4, cfg.num_control_points) + 2;
  const Vector<S> goal_unwrapped = qx + detail::chart_difference(m, qx, qy);
  for (int r = 0; r < std::max(1, restarts); ++r) {
    GeodesicSolution<S> sol;
    if (r == 0) {
      sol = solve_geodesic_variational(m, qx, qy, cfg);
    } else {
      CubicBSpline<S> init = CubicBSpline<S>::line(qx, goal_unwrapped, n_ctrl);
      for (int c = 1; c < n_ctrl - 1; ++c)
        for (Eigen::Index d = 0; d < m.dim; ++d)
          init.ctrl(c, d) += perturb_std * noise(rng);
      sol = solve_geodesic_variational(m, qx, qy, cfg, &init.ctrl);
    }
    if (!have_best || sol.energy < best.energy) {
      best = sol;
      have_best = true;
    }
  }
  return best;
}

template <typename S>
struct ConvergenceStudy {
  std::vector<S> h;
  std::vector<S> err_distance;  // |d_hat - d_oracle|
  std::vector<S> err_midpoint;  // retraction midpoint vs geodesic midpoint
  std::vector<S> err_logdiff;   // inverse-retraction difference vs 2u
  std::vector<S> oracle_length;
  std::vector<S> bvp_mismatch;  // |d_bvp - d_oracle| cross-check
  S slope_distance = std::numeric_limits<S>::quiet_NaN();
  S slope_midpoint = std::numeric_limits<S>::quiet_NaN();
  S slope_logdiff = std::numeric_limits<S>::quiet_NaN();
  bool exact = false;
};

/// Least-squares slope of log(err) against log(h); entries below 1e-14 are
/// excluded. Returns NaN when fewer than two usable points remain.
template <typename S>
S fit_loglog_slope(const std::vector<S>& h, const std::vector<S>& err) {
  std::vector<S> lx, ly;
  for (std::size_t i = 0; i < h.size(); ++i)
    if (err[i] > S(1e-14)) {
      lx.push_back(std::log(h[i]));
      ly.push_back(std::log(err[i]));
    }
  if (lx.size() < 2) return std::numeric_limits<S>::quiet_NaN();
  S mx = S(0), my = S(0);
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<S>(lx.size());
  my /= static_cast<S>(lx.size());
  S num = S(0), den = S(0);
  for (std::size_t i = 0; i < lx.size(); ++i) {
    num += (lx[i] - mx) * (ly[i] - my);
    den += (lx[i] - mx) * (lx[i] - mx);
  }
  return num / den;
}

/// Order-of-accuracy study around a base point: endpoint pairs at geodesic
/// separation h are generated by integrating the geodesic flow in the
/// given direction, so the base point is the reference geodesic midpoint.
/// The oracle distance comes from the variational solver, cross-checked
/// against shooting. Throws NoConvergence when the oracle fails.
template <typename S>
ConvergenceStudy<S> convergence_study(const Manifold<S>& m,
                                      const Vector<S>& base,
                                      const Vector<S>& direction,
                                      const std::vector<S>& hs,
                                      const GeodesicSolveConfig<S>& oracle_cfg) {
  ConvergenceStudy<S> out;
  const S dir_norm = metric_norm(m, base, direction);
  if (dir_norm <= S(0)) throw DimensionMismatch("zero study direction");
  const Vector<S> w = direction / dir_norm;
  const int flow_steps = 64;

  for (const S h : hs) {
    const Vector<S> qx = wrap_config(
        m, geodesic_flow(m, base, (-S(0.5) * h * w).eval(), flow_steps)
               .q.back());
    const Vector<S> qy = wrap_config(
        m, geodesic_flow(m, base, (S(0.5) * h * w).eval(), flow_steps)
               .q.back());

    GeodesicSolution<S> oracle =
        solve_geodesic_variational(m, qx, qy, oracle_cfg);
    if (!oracle.report.converged)
      throw NoConvergence("variational oracle failed at h=" +
                          std::to_string(static_cast<double>(h)));
    const S d_star = oracle.length;
    const S d_hat = midpoint_distance(m, qx, qy);

    GeodesicSolveConfig<S> bvp_cfg = oracle_cfg;
    bvp_cfg.mode = GeodesicSolveConfig<S>::Mode::ShootingBvp;
    const GeodesicSolution<S> cross = solve_geodesic_bvp(m, qx, qy, bvp_cfg);

    const Vector<S> mid_hat = retraction_midpoint(m, qx, qy);
    const Vector<S> u = (S(0.5) * h * w).eval();
    const Vector<S> wdiff = inverse_retract(m, mid_hat, qy).components -
                            inverse_retract(m, mid_hat, qx).components;

    out.h.push_back(h);
    out.err_distance.push_back(std::abs(d_hat - d_star));
    out.err_midpoint.push_back(midpoint_distance(m, mid_hat, base));
    out.err_logdiff.push_back(metric_norm(m, base, (wdiff - S(2) * u).eval()));
    out.oracle_length.push_back(d_star);
    out.bvp_mismatch.push_back(cross.report.converged
                                   ? std::abs(cross.length - d_star)
                                   : std::numeric_limits<S>::quiet_NaN());
  }

  out.exact = std::all_of(out.err_distance.begin(), out.err_distance.end(),
                          [](S e) { return e < S(1e-12); });
  if (!out.exact) {
    out.slope_distance = fit_loglog_slope(out.h, out.err_distance);
    out.slope_midpoint = fit_loglog_slope(out.h, out.err_midpoint);
    out.slope_logdiff = fit_loglog_slope(out.h, out.err_logdiff);
  }
  return out;
}

}  // namespace geoplan
