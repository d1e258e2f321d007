#include "geoplan/environment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace geoplan {

namespace {

// 1D squared-distance transform (lower envelope of parabolas), after
// Felzenszwalb & Huttenlocher. f holds squared distances on input.
void edt_1d(std::vector<double>& f, std::vector<double>& d,
            std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (int q = 1; q < n; ++q) {
    double s;
    while (true) {
      const int p = v[static_cast<std::size_t>(k)];
      s = ((f[static_cast<std::size_t>(q)] + q * q) -
           (f[static_cast<std::size_t>(p)] + p * p)) /
          (2.0 * q - 2.0 * p);
      if (s <= z[static_cast<std::size_t>(k)]) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[static_cast<std::size_t>(k)] = q;
    z[static_cast<std::size_t>(k)] = s;
    z[static_cast<std::size_t>(k) + 1] =
        std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[static_cast<std::size_t>(k) + 1] < q) ++k;
    const int p = v[static_cast<std::size_t>(k)];
    d[static_cast<std::size_t>(q)] =
        (q - p) * static_cast<double>(q - p) + f[static_cast<std::size_t>(p)];
  }
}

}  // namespace

void GridMap::compute_clearance() {
  const std::size_t n =
      static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<double> sq(n);
  const double inf = 1e18;
  for (std::size_t i = 0; i < n; ++i) sq[i] = occ[i] ? 0.0 : inf;

  // Pass 1: along rows.
  {
    std::vector<double> f(static_cast<std::size_t>(width)),
        d(static_cast<std::size_t>(width));
    std::vector<int> v(static_cast<std::size_t>(width));
    std::vector<double> z(static_cast<std::size_t>(width) + 1);
    for (int iy = 0; iy < height; ++iy) {
      for (int ix = 0; ix < width; ++ix)
        f[static_cast<std::size_t>(ix)] =
            sq[static_cast<std::size_t>(iy) * width + ix];
      edt_1d(f, d, v, z);
      for (int ix = 0; ix < width; ++ix)
        sq[static_cast<std::size_t>(iy) * width + ix] =
            d[static_cast<std::size_t>(ix)];
    }
  }
  // Pass 2: along columns.
  {
    std::vector<double> f(static_cast<std::size_t>(height)),
        d(static_cast<std::size_t>(height));
    std::vector<int> v(static_cast<std::size_t>(height));
    std::vector<double> z(static_cast<std::size_t>(height) + 1);
    for (int ix = 0; ix < width; ++ix) {
      for (int iy = 0; iy < height; ++iy)
        f[static_cast<std::size_t>(iy)] =
            sq[static_cast<std::size_t>(iy) * width + ix];
      edt_1d(f, d, v, z);
      for (int iy = 0; iy < height; ++iy)
        sq[static_cast<std::size_t>(iy) * width + ix] =
            d[static_cast<std::size_t>(iy)];
    }
  }

  clearance_m.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    clearance_m[i] = std::sqrt(sq[i]) * resolution;
}

double GridMap::clearance_at(double x, double y) const {
  if (x < min_x() || x > max_x() || y < min_y() || y > max_y()) return 0.0;
  // Bilinear interpolation over cell centers, clamped at the map border.
  const double gx = (x - origin_x) / resolution - 0.5;
  const double gy = (y - origin_y) / resolution - 0.5;
  const int ix0 = std::clamp(static_cast<int>(std::floor(gx)), 0, width - 1);
  const int iy0 = std::clamp(static_cast<int>(std::floor(gy)), 0, height - 1);
  const int ix1 = std::min(ix0 + 1, width - 1);
  const int iy1 = std::min(iy0 + 1, height - 1);
  const double tx = std::clamp(gx - ix0, 0.0, 1.0);
  const double ty = std::clamp(gy - iy0, 0.0, 1.0);
  const double c00 = cell_clearance(ix0, iy0), c10 = cell_clearance(ix1, iy0);
  const double c01 = cell_clearance(ix0, iy1), c11 = cell_clearance(ix1, iy1);
  const double interp = (1.0 - ty) * ((1.0 - tx) * c00 + tx * c10) +
                        ty * ((1.0 - tx) * c01 + tx * c11);
  // Cell-center distances overestimate the distance to the obstacle
  // surface by half a cell on flat walls.
  return std::max(0.0, interp - 0.5 * resolution);
}

bool se2_in_collision(const GridMap& g, const VectorXd& q,
                      double robot_radius) {
  const double x = q[0], y = q[1];
  if (x < g.min_x() || x > g.max_x() || y < g.min_y() || y > g.max_y())
    return true;
  return g.clearance_at(x, y) < robot_radius;
}

GridMap load_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open map file: " + path, 0, 0);
  std::string header;
  if (!std::getline(in, header)) throw ParseError("empty map file", 1, 1);
  std::istringstream hs(header);
  std::string kw_res, kw_origin;
  GridMap g;
  if (!(hs >> kw_res >> g.resolution >> kw_origin >> g.origin_x >>
        g.origin_y) ||
      kw_res != "resolution" || kw_origin != "origin")
    throw ParseError("expected 'resolution <f> origin <f> <f>'", 1, 1);
  if (g.resolution <= 0.0) throw ParseError("resolution must be positive", 1, 12);

  std::vector<std::string> rows;
  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (!rows.empty() && line.size() != rows.front().size())
      throw ParseError("ragged row", lineno, 1);
    for (std::size_t i = 0; i < line.size(); ++i)
      if (line[i] != '#' && line[i] != '.')
        throw ParseError(std::string("invalid cell character '") + line[i] +
                             "'",
                         lineno, static_cast<int>(i) + 1);
    rows.push_back(line);
  }
  if (rows.empty()) throw ParseError("map has no rows", lineno, 1);

  g.height = static_cast<int>(rows.size());
  g.width = static_cast<int>(rows.front().size());
  g.occ.assign(
      static_cast<std::size_t>(g.width) * static_cast<std::size_t>(g.height),
      0);
  // Row 0 of the file is the top (max-y) row.
  for (int iy = 0; iy < g.height; ++iy) {
    const std::string& r = rows[static_cast<std::size_t>(g.height - 1 - iy)];
    for (int ix = 0; ix < g.width; ++ix)
      g.occ[static_cast<std::size_t>(iy) * g.width + ix] =
          (r[static_cast<std::size_t>(ix)] == '#') ? 1 : 0;
  }
  g.compute_clearance();
  return g;
}

void save_map(const GridMap& g, const std::string& path) {
  std::ofstream out(path);
  out << "resolution " << g.resolution << " origin " << g.origin_x << " "
      << g.origin_y << "\n";
  for (int iy = g.height - 1; iy >= 0; --iy) {
    for (int ix = 0; ix < g.width; ++ix)
      out << (g.occupied(ix, iy) ? '#' : '.');
    out << "\n";
  }
}

namespace {

GridMap blank_map(double width_m, double height_m, double resolution) {
  GridMap g;
  g.resolution = resolution;
  g.width = static_cast<int>(std::lround(width_m / resolution));
  g.height = static_cast<int>(std::lround(height_m / resolution));
  g.occ.assign(
      static_cast<std::size_t>(g.width) * static_cast<std::size_t>(g.height),
      0);
  return g;
}

void fill_rect(GridMap& g, double x0, double y0, double x1, double y1,
               std::uint8_t value) {
  const int ix0 = std::max(0, static_cast<int>(std::floor(x0 / g.resolution)));
  const int iy0 = std::max(0, static_cast<int>(std::floor(y0 / g.resolution)));
  const int ix1 =
      std::min(g.width, static_cast<int>(std::lround(x1 / g.resolution)));
  const int iy1 =
      std::min(g.height, static_cast<int>(std::lround(y1 / g.resolution)));
  for (int iy = iy0; iy < iy1; ++iy)
    for (int ix = ix0; ix < ix1; ++ix)
      g.occ[static_cast<std::size_t>(iy) * g.width + ix] = value;
}

void add_boundary(GridMap& g, double thickness) {
  const double w = g.width * g.resolution, h = g.height * g.resolution;
  fill_rect(g, 0, 0, w, thickness, 1);
  fill_rect(g, 0, h - thickness, w, h, 1);
  fill_rect(g, 0, 0, thickness, h, 1);
  fill_rect(g, w - thickness, 0, w, h, 1);
}

}  // namespace

GridMap make_doorway_map(const DoorwayParams& p) {
  GridMap g = blank_map(p.width_m, p.height_m, p.resolution);
  add_boundary(g, p.wall_thickness);
  const double wall_x = 0.5 * p.width_m;
  const double door_center = 0.5 * p.height_m;
  const double half = 0.5 * p.opening_width;
  // Dividing wall with a single opening.
  fill_rect(g, wall_x - 0.5 * p.wall_thickness, 0,
            wall_x + 0.5 * p.wall_thickness, door_center - half, 1);
  fill_rect(g, wall_x - 0.5 * p.wall_thickness, door_center + half,
            wall_x + 0.5 * p.wall_thickness, p.height_m, 1);
  g.compute_clearance();
  return g;
}

GridMap make_corridor_map(const CorridorParams& p) {
  GridMap g = blank_map(p.width_m, p.height_m, p.resolution);
  // Everything occupied, then carve two end rooms and an S-shaped corridor
  // with two 90-degree turns.
  std::fill(g.occ.begin(), g.occ.end(), 1);
  const double half = 0.5 * p.corridor_width;
  const double room = 2.0;
  const double y_lo = 2.0, y_hi = p.height_m - 2.0;
  const double x_turn = 0.5 * p.width_m;
  // End rooms.
  fill_rect(g, 0.8, y_lo - 0.5 * room, 0.8 + room, y_lo + 0.5 * room, 0);
  fill_rect(g, p.width_m - 0.8 - room, y_hi - 0.5 * room, p.width_m - 0.8,
            y_hi + 0.5 * room, 0);
  // Leg 1: from the left room to the turn column.
  fill_rect(g, 0.8 + room, y_lo - half, x_turn + half, y_lo + half, 0);
  // Leg 2: vertical column.
  fill_rect(g, x_turn - half, y_lo - half, x_turn + half, y_hi + half, 0);
  // Leg 3: from the turn column to the right room.
  fill_rect(g, x_turn - half, y_hi - half, p.width_m - 0.8 - room,
            y_hi + half, 0);
  g.compute_clearance();
  return g;
}

namespace {

double point_segment_distance(double px, double py, double ax, double ay,
                              double bx, double by) {
  const double vx = bx - ax, vy = by - ay;
  const double len_sq = vx * vx + vy * vy;
  double t = 0.0;
  if (len_sq > 0.0) t = std::clamp(((px - ax) * vx + (py - ay) * vy) / len_sq, 0.0, 1.0);
  const double dx = px - (ax + t * vx), dy = py - (ay + t * vy);
  return std::hypot(dx, dy);
}

}  // namespace

bool arm_in_collision(const ArmWorld& w, const VectorXd& q) {
  if (q[0] < w.limit_lo[0] || q[0] > w.limit_hi[0] || q[1] < w.limit_lo[1] ||
      q[1] > w.limit_hi[1])
    return true;
  const double x1 = w.base_x + w.l1 * std::cos(q[0]);
  const double y1 = w.base_y + w.l1 * std::sin(q[0]);
  const double x2 = x1 + w.l2 * std::cos(q[0] + q[1]);
  const double y2 = y1 + w.l2 * std::sin(q[0] + q[1]);
  for (const Circle& c : w.obstacles) {
    if (point_segment_distance(c.cx, c.cy, w.base_x, w.base_y, x1, y1) < c.r)
      return true;
    if (point_segment_distance(c.cx, c.cy, x1, y1, x2, y2) < c.r) return true;
  }
  return false;
}

double arm_clearance(const ArmWorld& w, const VectorXd& q) {
  const double x1 = w.base_x + w.l1 * std::cos(q[0]);
  const double y1 = w.base_y + w.l1 * std::sin(q[0]);
  const double x2 = x1 + w.l2 * std::cos(q[0] + q[1]);
  const double y2 = y1 + w.l2 * std::sin(q[0] + q[1]);
  double best = std::numeric_limits<double>::infinity();
  for (const Circle& c : w.obstacles) {
    best = std::min(best, point_segment_distance(c.cx, c.cy, w.base_x,
                                                 w.base_y, x1, y1) -
                              c.r);
    best = std::min(
        best, point_segment_distance(c.cx, c.cy, x1, y1, x2, y2) - c.r);
  }
  if (w.obstacles.empty()) return std::numeric_limits<double>::infinity();
  return std::max(0.0, best);
}

}  // namespace geoplan
