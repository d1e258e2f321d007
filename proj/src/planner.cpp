#include "geoplan/planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>

namespace geoplan {

namespace {

using Clock = std::chrono::steady_clock;

double euclid_dist(const Manifold<double>& m, const VectorXd& a,
                   const VectorXd& b) {
  return detail::wrapped_difference(m, b, a).norm();
}

// Straight-line steering in the chart with the same step, budget and
// termination semantics as the gradient expansion.
ExpansionTrace<double> steer_euclidean(const Manifold<double>& m,
                                       const VectorXd& q_near,
                                       const VectorXd& q_rand,
                                       const ExpansionParams<double>& params) {
  ExpansionTrace<double> trace;
  trace.path.waypoints.push_back(q_near);
  const double s = params.step;
  double dist = euclid_dist(m, q_near, q_rand);
  const double d_max =
      params.travel_budget > 0 ? params.travel_budget : 3.0 * dist;
  const int max_iters =
      params.max_iters > 0
          ? params.max_iters
          : 10 * static_cast<int>(std::ceil(std::max(1.0, d_max / s)));

  VectorXd q = q_near;
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
    const VectorXd dir = detail::wrapped_difference(m, q_rand, q) / dist;
    const VectorXd q_next = wrap_config(m, (q + s * dir).eval());
    append_waypoint(m, trace.path, q_next);
    trace.travelled += s;
    q = q_next;
    dist = euclid_dist(m, q, q_rand);
    if (trace.travelled > d_max) {
      trace.reason = StopReason::BudgetExhausted;
      break;
    }
  }
  return trace;
}

struct Geometry {
  const Manifold<double>* m;
  PlanMode mode;
  const ExpansionParams<double>* params;

  double dist(const VectorXd& a, const VectorXd& b) const {
    return mode == PlanMode::Riemannian ? midpoint_distance(*m, a, b)
                                        : euclid_dist(*m, a, b);
  }
  ExpansionTrace<double> steer(const VectorXd& from, const VectorXd& to) const {
    return mode == PlanMode::Riemannian ? expand(*m, from, to, *params)
                                        : steer_euclidean(*m, from, to, *params);
  }
  double edge_cost(const Polyline<double>& edge) const {
    if (mode == PlanMode::Riemannian) return path_length(edge);
    double c = 0.0;
    for (std::size_t i = 0; i + 1 < edge.waypoints.size(); ++i)
      c += euclid_dist(*m, edge.waypoints[i], edge.waypoints[i + 1]);
    return c;
  }
};

bool segment_free(const CollisionFn& in_collision, const Manifold<double>& m,
                  const VectorXd& a, const VectorXd& b, double len,
                  double delta) {
  if (!in_collision) return true;
  const int k = std::max(1, static_cast<int>(std::ceil(len / delta)));
  for (int j = 1; j <= k; ++j) {
    const VectorXd pt =
        point_on_segment(m, a, b, static_cast<double>(j) / k);
    if (in_collision(pt)) return false;
  }
  return true;
}

// Longest prefix of whole segments that passes the collision resolution.
Polyline<double> free_prefix(const CollisionFn& in_collision,
                             const Manifold<double>& m,
                             const Polyline<double>& path, double delta) {
  Polyline<double> out;
  out.waypoints.push_back(path.waypoints.front());
  for (std::size_t i = 0; i < path.segments(); ++i) {
    if (!segment_free(in_collision, m, path.waypoints[i],
                      path.waypoints[i + 1], path.lengths[i], delta))
      break;
    out.waypoints.push_back(path.waypoints[i + 1]);
    out.lengths.push_back(path.lengths[i]);
  }
  return out;
}

}  // namespace

VectorXd sample_free(std::mt19937_64& rng, const VectorXd& lo,
                     const VectorXd& hi, const CollisionFn& in_collision) {
  VectorXd q(lo.size());
  for (int attempt = 0; attempt < 10000; ++attempt) {
    for (Eigen::Index i = 0; i < lo.size(); ++i)
      q[i] = std::uniform_real_distribution<double>(lo[i], hi[i])(rng);
    if (!in_collision || !in_collision(q)) return q;
  }
  throw SamplingExhausted("no free sample after 10000 rejections");
}

int nearest(const std::vector<TreeNode>& tree, const VectorXd& q,
            const std::function<double(const VectorXd&, const VectorXd&)>&
                dist) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (const TreeNode& node : tree) {
    const double d = dist(node.config, q);
    if (d < best_d) {
      best_d = d;
      best = node.id;
    }
  }
  return best;
}

bool check_edge(const CollisionFn& in_collision, const Manifold<double>& m,
                const Polyline<double>& edge, double delta) {
  if (!in_collision) return true;
  if (in_collision(edge.waypoints.front())) return false;
  for (std::size_t i = 0; i < edge.segments(); ++i)
    if (!segment_free(in_collision, m, edge.waypoints[i],
                      edge.waypoints[i + 1], edge.lengths[i], delta))
      return false;
  return true;
}

PlanResult plan(const PlanRequest& req) {
  const auto t_start = Clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(Clock::now() - t_start).count();
  };

  const Manifold<double>& m = req.manifold;
  if (req.iteration_budget <= 0 && req.time_budget_s <= 0)
    throw std::invalid_argument("plan needs an iteration or time budget");
  if (req.sample_lo.size() != m.dim || req.sample_hi.size() != m.dim)
    throw DimensionMismatch("sampling bounds do not match the manifold");
  if (req.in_collision && (req.in_collision(req.start) ||
                           req.in_collision(req.goal)))
    throw std::invalid_argument("start or goal configuration in collision");

  Geometry geo{&m, req.mode, &req.expansion};
  auto dist_fn = [&](const VectorXd& a, const VectorXd& b) {
    return geo.dist(a, b);
  };

  std::vector<TreeNode> tree;
  tree.push_back(TreeNode{0, req.start, -1, {}, 0.0, 0.0, {}});
  int goal_node = -1;

  PlanResult result;
  result.seed = req.seed;
  std::mt19937_64 rng(req.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Snaps the terminal hop onto `to` so the edge ends exactly there. The
  // travel budget falls back to the dynamic default: connection edges must
  // be allowed to reach their target even when the extension range used by
  // the main loop is shorter.
  ExpansionParams<double> connect_params = req.expansion;
  connect_params.travel_budget = -1.0;
  Geometry connect_geo{&m, req.mode, &connect_params};
  auto connect = [&](const VectorXd& from,
                     const VectorXd& to) -> std::optional<Polyline<double>> {
    ExpansionTrace<double> trace = connect_geo.steer(from, to);
    if (trace.reason != StopReason::Reached) return std::nullopt;
    Polyline<double> poly = std::move(trace.path);
    if (poly.waypoints.back() != to) append_waypoint(m, poly, to);
    return poly;
  };

  auto is_ancestor = [&](int anc, int node) {
    for (int i = node; i >= 0; i = tree[static_cast<std::size_t>(i)].parent)
      if (i == anc) return true;
    return false;
  };

  auto reparent = [&](int node, int new_parent, Polyline<double> edge,
                      double edge_cost, double new_cost) {
    TreeNode& nd = tree[static_cast<std::size_t>(node)];
    auto& old_children =
        tree[static_cast<std::size_t>(nd.parent)].children;
    old_children.erase(
        std::find(old_children.begin(), old_children.end(), node));
    nd.parent = new_parent;
    nd.edge = std::move(edge);
    nd.edge_cost = edge_cost;
    const double delta = new_cost - nd.cost;
    tree[static_cast<std::size_t>(new_parent)].children.push_back(node);
    std::vector<int> stack{node};
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      tree[static_cast<std::size_t>(i)].cost += delta;
      for (int c : tree[static_cast<std::size_t>(i)].children)
        stack.push_back(c);
    }
  };

  double best_reported = std::numeric_limits<double>::infinity();
  auto record_progress = [&](long it) {
    if (goal_node < 0) return;
    const double c = tree[static_cast<std::size_t>(goal_node)].cost;
    if (c < best_reported * (1.0 - 1e-12)) {
      best_reported = c;
      result.cost_trace.push_back({it, elapsed(), c});
    }
  };

  // Tries to tie a node within goal tolerance to the exact goal config.
  auto try_goal_connection = [&](int node_id, long it) {
    const VectorXd& q = tree[static_cast<std::size_t>(node_id)].config;
    const double d = geo.dist(q, req.goal);
    if (d > req.goal_tolerance) return;
    if (d < 1e-12) {  // the node already sits on the goal
      if (goal_node < 0 ||
          tree[static_cast<std::size_t>(node_id)].cost + 1e-12 <
              tree[static_cast<std::size_t>(goal_node)].cost)
        goal_node = node_id;
      record_progress(it);
      return;
    }
    auto cand = connect(q, req.goal);
    if (!cand || !check_edge(req.in_collision, m, *cand,
                             0.5 * req.collision_resolution))
      return;
    const double ec = geo.edge_cost(*cand);
    const double c = tree[static_cast<std::size_t>(node_id)].cost + ec;
    if (goal_node < 0) {
      const int id = static_cast<int>(tree.size());
      tree.push_back(TreeNode{id, req.goal, node_id, std::move(*cand), ec, c,
                              {}});
      tree[static_cast<std::size_t>(node_id)].children.push_back(id);
      goal_node = id;
    } else if (c + 1e-12 < tree[static_cast<std::size_t>(goal_node)].cost &&
               !is_ancestor(goal_node, node_id)) {
      reparent(goal_node, node_id, std::move(*cand), ec, c);
    }
    record_progress(it);
  };

  try_goal_connection(0, 0);

  long it = 0;
  while ((req.iteration_budget <= 0 || it < req.iteration_budget) &&
         (req.time_budget_s <= 0 || elapsed() < req.time_budget_s)) {
    ++it;

    VectorXd target;
    if (unit(rng) < req.goal_bias) {
      target = req.goal;
    } else {
      target = sample_free(rng, req.sample_lo, req.sample_hi,
                           req.in_collision);
    }

    const int near_id = nearest(tree, target, dist_fn);
    if (geo.dist(tree[static_cast<std::size_t>(near_id)].config, target) <
        1e-12) {
      record_progress(it);
      continue;
    }
    ExpansionTrace<double> trace =
        geo.steer(tree[static_cast<std::size_t>(near_id)].config, target);
    Polyline<double> extended = std::move(trace.path);
    // When the expansion reaches the sample, adopt the sample itself as the
    // candidate node so the tree keeps densifying.
    if (trace.reason == StopReason::Reached &&
        extended.waypoints.back() != target)
      append_waypoint(m, extended, target);
    if (extended.segments() == 0) {
      record_progress(it);
      continue;
    }
    Polyline<double> prefix = free_prefix(req.in_collision, m, extended,
                                          0.5 * req.collision_resolution);
    if (prefix.segments() == 0) {
      record_progress(it);
      continue;
    }
    const VectorXd q_new = prefix.waypoints.back();

    // Neighborhood for parent choice and rewiring.
    const double n = static_cast<double>(tree.size());
    const double radius_floor = req.rewire_radius_min > 0
                                    ? req.rewire_radius_min
                                    : 3.0 * req.expansion.step;
    const double radius =
        std::max(req.rewire_gamma *
                     std::pow(std::log(n + 1.0) / n,
                              1.0 / static_cast<double>(m.dim)),
                 radius_floor);
    std::vector<int> near_ids;
    for (const TreeNode& node : tree)
      if (geo.dist(node.config, q_new) <= radius) near_ids.push_back(node.id);

    int parent = near_id;
    double parent_edge_cost = geo.edge_cost(prefix);
    Polyline<double> parent_edge = std::move(prefix);
    double best_cost =
        tree[static_cast<std::size_t>(near_id)].cost + parent_edge_cost;

    std::sort(near_ids.begin(), near_ids.end(), [&](int a, int b) {
      const double la = tree[static_cast<std::size_t>(a)].cost +
                        geo.dist(tree[static_cast<std::size_t>(a)].config,
                                 q_new);
      const double lb = tree[static_cast<std::size_t>(b)].cost +
                        geo.dist(tree[static_cast<std::size_t>(b)].config,
                                 q_new);
      return la != lb ? la < lb : a < b;
    });
    for (int i : near_ids) {
      if (i == near_id) continue;
      const double lower_bound =
          tree[static_cast<std::size_t>(i)].cost +
          geo.dist(tree[static_cast<std::size_t>(i)].config, q_new);
      if (lower_bound >= best_cost) break;  // sorted by lower bound
      auto cand = connect(tree[static_cast<std::size_t>(i)].config, q_new);
      if (!cand || !check_edge(req.in_collision, m, *cand,
                               0.5 * req.collision_resolution))
        continue;
      const double ec = geo.edge_cost(*cand);
      const double c = tree[static_cast<std::size_t>(i)].cost + ec;
      if (c + 1e-12 < best_cost) {
        best_cost = c;
        parent = i;
        parent_edge_cost = ec;
        parent_edge = std::move(*cand);
      }
    }

    const int new_id = static_cast<int>(tree.size());
    tree.push_back(TreeNode{new_id, q_new, parent, std::move(parent_edge),
                            parent_edge_cost, best_cost, {}});
    tree[static_cast<std::size_t>(parent)].children.push_back(new_id);

    // Rewire the neighborhood through the new node when strictly cheaper.
    for (int i : near_ids) {
      if (i == parent) continue;
      const VectorXd& qi = tree[static_cast<std::size_t>(i)].config;
      const double lower_bound = best_cost + geo.dist(q_new, qi);
      if (lower_bound + 1e-12 >= tree[static_cast<std::size_t>(i)].cost)
        continue;
      if (is_ancestor(i, new_id)) continue;
      auto cand = connect(q_new, qi);
      if (!cand || !check_edge(req.in_collision, m, *cand,
                               0.5 * req.collision_resolution))
        continue;
      const double ec = geo.edge_cost(*cand);
      const double c = best_cost + ec;
      if (c + 1e-12 < tree[static_cast<std::size_t>(i)].cost)
        reparent(i, new_id, std::move(*cand), ec, c);
    }

    try_goal_connection(new_id, it);
    record_progress(it);
  }

  result.iterations = it;
  result.tree_nodes = tree.size();
  if (req.keep_tree) result.tree = tree;
  if (goal_node >= 0) {
    // Stitch the root-to-goal edges into one polyline.
    std::vector<int> chain;
    for (int i = goal_node; i >= 0;
         i = tree[static_cast<std::size_t>(i)].parent)
      chain.push_back(i);
    std::reverse(chain.begin(), chain.end());
    Polyline<double> raw;
    raw.waypoints.push_back(req.start);
    for (std::size_t k = 1; k < chain.size(); ++k) {
      const TreeNode& node = tree[static_cast<std::size_t>(chain[k])];
      for (std::size_t j = 1; j < node.edge.waypoints.size(); ++j) {
        raw.waypoints.push_back(node.edge.waypoints[j]);
        raw.lengths.push_back(node.edge.lengths[j - 1]);
      }
    }
    if (raw.waypoints.size() < 2) {
      raw.waypoints.push_back(req.goal);
      raw.lengths.push_back(0.0);
    }
    const double raw_length = path_length(raw);
    if (raw_length > 1e-12) {
      // Resample finely enough that the unit-speed polyline tracks the
      // validated curve well inside the collision resolution.
      const int n_out = std::max(
          req.solution_waypoints,
          4 * static_cast<int>(std::ceil(raw_length /
                                         req.collision_resolution)) +
              1);
      result.solution = reparameterize_unit_speed(m, raw, n_out);
    } else {
      result.solution = raw;
    }
    result.length = path_length(result.solution);
    result.energy = path_energy(result.solution);
    result.success = check_edge(req.in_collision, m, result.solution,
                                0.5 * req.collision_resolution);
    if (result.success && req.mode == PlanMode::Riemannian)
      result.cost_trace.push_back({it, elapsed(), result.length});
  }
  result.wall_time_s = elapsed();
  return result;
}

}  // namespace geoplan
