#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "geoplan/error.hpp"
#include "geoplan/types.hpp"

namespace geoplan {

/// Binary occupancy grid with a precomputed exact Euclidean clearance
/// field (distance between cell centers, meters). Cell (0,0) is the
/// bottom-left cell; `origin` is the world position of its lower-left
/// corner.
struct GridMap {
  int width = 0;
  int height = 0;
  double resolution = 0.05;
  double origin_x = 0.0;
  double origin_y = 0.0;
  std::vector<std::uint8_t> occ;      // row-major, index = iy * width + ix
  std::vector<double> clearance_m;    // cell-center distance to occupancy

  bool occupied(int ix, int iy) const {
    return occ[static_cast<std::size_t>(iy) * static_cast<std::size_t>(width) +
               static_cast<std::size_t>(ix)] != 0;
  }
  double cell_clearance(int ix, int iy) const {
    return clearance_m[static_cast<std::size_t>(iy) *
                           static_cast<std::size_t>(width) +
                       static_cast<std::size_t>(ix)];
  }
  double min_x() const { return origin_x; }
  double min_y() const { return origin_y; }
  double max_x() const { return origin_x + width * resolution; }
  double max_y() const { return origin_y + height * resolution; }

  /// Continuous clearance to obstacle surfaces at a world position:
  /// bilinear interpolation of the cell-center field minus half a cell.
  /// Zero outside the map and inside obstacles.
  double clearance_at(double x, double y) const;

  void compute_clearance();
};

GridMap load_map(const std::string& path);
void save_map(const GridMap& g, const std::string& path);

bool se2_in_collision(const GridMap& g, const VectorXd& q,
                      double robot_radius);

struct DoorwayParams {
  double width_m = 12.0;
  double height_m = 8.0;
  double wall_thickness = 0.2;
  double opening_width = 1.0;
  double resolution = 0.05;
};

/// Two rooms joined by a single opening in a dividing wall.
GridMap make_doorway_map(const DoorwayParams& p = {});

struct CorridorParams {
  double width_m = 13.0;
  double height_m = 9.0;
  double corridor_width = 1.2;
  double resolution = 0.05;
};

/// A narrow passage with two 90-degree turns between two end rooms.
GridMap make_corridor_map(const CorridorParams& p = {});

struct Circle {
  double cx = 0.0, cy = 0.0, r = 1.0;
};

/// Planar two-link arm workspace: link segments from forward kinematics
/// against circular obstacles, with joint limits.
struct ArmWorld {
  double l1 = 1.0, l2 = 1.0;
  double base_x = 0.0, base_y = 0.0;
  std::vector<Circle> obstacles;
  Eigen::Vector2d limit_lo{-3.14159265358979323846, -3.14159265358979323846};
  Eigen::Vector2d limit_hi{3.14159265358979323846, 3.14159265358979323846};
};

bool arm_in_collision(const ArmWorld& w, const VectorXd& q);

/// Minimum workspace distance from the arm links to obstacle surfaces,
/// clamped at zero; used by barrier-reshaped metrics.
double arm_clearance(const ArmWorld& w, const VectorXd& q);

}  // namespace geoplan
