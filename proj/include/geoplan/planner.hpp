#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "geoplan/expansion.hpp"
#include "geoplan/manifold.hpp"
#include "geoplan/path.hpp"

namespace geoplan {

enum class PlanMode { Riemannian, EuclideanBaseline };

using CollisionFn = std::function<bool(const VectorXd&)>;  // true = colliding

struct PlanRequest {
  Manifold<double> manifold;
  VectorXd start;
  VectorXd goal;
  CollisionFn in_collision;  // empty means obstacle-free
  VectorXd sample_lo;
  VectorXd sample_hi;
  double time_budget_s = 0.0;    // <= 0: no time limit
  long iteration_budget = 0;     // <= 0: no iteration limit
  double goal_tolerance = 0.5;   // metric units
  double goal_bias = 0.05;
  double rewire_gamma = 2.0;
  double rewire_radius_min = 0.0;  // <= 0: three expansion steps
  std::uint64_t seed = 0;
  ExpansionParams<double> expansion;
  double collision_resolution = 0.05;  // metric units
  PlanMode mode = PlanMode::Riemannian;
  int solution_waypoints = 257;
  bool keep_tree = false;  // copy the final tree into the result
};

struct TreeNode {
  int id = 0;
  VectorXd config;
  int parent = -1;            // -1 for the root
  Polyline<double> edge;      // from parent.config to config
  double edge_cost = 0.0;     // planner-objective cost of the edge
  double cost = 0.0;          // cost-to-come under the planner objective
  std::vector<int> children;
};

struct CostTracePoint {
  long iteration = 0;
  double time_s = 0.0;
  double cost = 0.0;  // planner-objective cost of the best goal path
};

struct PlanResult {
  bool success = false;
  Polyline<double> solution;  // unit-speed reparameterized
  double length = 0.0;        // Riemannian length of the solution
  double energy = 0.0;        // discrete energy of the solution
  long iterations = 0;
  double wall_time_s = 0.0;
  std::uint64_t seed = 0;
  std::vector<CostTracePoint> cost_trace;
  std::size_t tree_nodes = 0;
  std::vector<TreeNode> tree;  // filled when PlanRequest::keep_tree is set
};

/// Uniform rejection sample over the chart box; throws SamplingExhausted
/// after 10^4 consecutive colliding draws.
VectorXd sample_free(std::mt19937_64& rng, const VectorXd& lo,
                     const VectorXd& hi, const CollisionFn& in_collision);

/// Index of the tree node closest to q under the mode distance; ties go to
/// the lowest id.
int nearest(const std::vector<TreeNode>& tree, const VectorXd& q,
            const std::function<double(const VectorXd&, const VectorXd&)>&
                dist);

/// True iff every sample of the edge, taken at arc-length spacing at most
/// delta, is collision-free.
bool check_edge(const CollisionFn& in_collision, const Manifold<double>& m,
                const Polyline<double>& edge, double delta);

/// Anytime tree planner over the manifold; see PlanRequest for knobs. In
/// Riemannian mode all distances, steering and edge costs use the midpoint
/// distance and gradient expansion; the Euclidean baseline swaps in chart
/// distances and straight-line steering, leaving everything else alike.
PlanResult plan(const PlanRequest& req);

inline const std::vector<CostTracePoint>& cost_trace(const PlanResult& r) {
  return r.cost_trace;
}

}  // namespace geoplan
