#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "doctest.h"
#include "geoplan/environment.hpp"

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

// O(N^2) nearest-occupied-cell distance.
double brute_force_clearance(const GridMap& g, int ix, int iy) {
  double best = 1e18;
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x)
      if (g.occupied(x, y)) {
        const double d = std::hypot(static_cast<double>(x - ix),
                                    static_cast<double>(y - iy));
        best = std::min(best, d);
      }
  return best * g.resolution;
}

GridMap random_map(std::mt19937_64& rng, int w, int h) {
  GridMap g;
  g.width = w;
  g.height = h;
  g.resolution = 0.25;
  g.occ.assign(static_cast<std::size_t>(w) * h, 0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (auto& c : g.occ) c = uni(rng) < 0.15 ? 1 : 0;
  g.occ[0] = 1;  // keep at least one source
  g.compute_clearance();
  return g;
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

// Dense workspace-sampling collision oracle: tests many points per link.
bool arm_collision_oracle(const ArmWorld& w, const VectorXd& q) {
  if (q[0] < w.limit_lo[0] || q[0] > w.limit_hi[0] || q[1] < w.limit_lo[1] ||
      q[1] > w.limit_hi[1])
    return true;
  const double x1 = w.base_x + w.l1 * std::cos(q[0]);
  const double y1 = w.base_y + w.l1 * std::sin(q[0]);
  const double x2 = x1 + w.l2 * std::cos(q[0] + q[1]);
  const double y2 = y1 + w.l2 * std::sin(q[0] + q[1]);
  const int n = 1000;
  for (const Circle& c : w.obstacles)
    for (int i = 0; i <= n; ++i) {
      const double t = static_cast<double>(i) / n;
      const double ax = w.base_x + t * (x1 - w.base_x);
      const double ay = w.base_y + t * (y1 - w.base_y);
      if (std::hypot(ax - c.cx, ay - c.cy) < c.r) return true;
      const double bx = x1 + t * (x2 - x1);
      const double by = y1 + t * (y2 - y1);
      if (std::hypot(bx - c.cx, by - c.cy) < c.r) return true;
    }
  return false;
}

}  // namespace

TEST_SUITE("environment") {
  TEST_CASE("clearance field matches brute force") {
    std::mt19937_64 rng(41);
    for (int rep = 0; rep < 3; ++rep) {
      const GridMap g = random_map(rng, 48, 32);
      for (int iy = 0; iy < g.height; iy += 3)
        for (int ix = 0; ix < g.width; ix += 3)
          CHECK(g.cell_clearance(ix, iy) ==
                doctest::Approx(brute_force_clearance(g, ix, iy))
                    .epsilon(1e-9));
    }
  }

  TEST_CASE("clearance of a bordered free map") {
    GridMap g;
    g.width = 21;
    g.height = 21;
    g.resolution = 1.0;
    g.occ.assign(21 * 21, 0);
    for (int i = 0; i < 21; ++i) {
      g.occ[static_cast<std::size_t>(i)] = 1;
      g.occ[static_cast<std::size_t>(20 * 21 + i)] = 1;
      g.occ[static_cast<std::size_t>(i * 21)] = 1;
      g.occ[static_cast<std::size_t>(i * 21 + 20)] = 1;
    }
    g.compute_clearance();
    CHECK(g.cell_clearance(10, 10) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(g.cell_clearance(0, 5) == 0.0);
  }

  TEST_CASE("map file round trip and parse errors") {
    std::mt19937_64 rng(43);
    const GridMap g = random_map(rng, 17, 9);
    const std::string path = temp_path("geoplan_roundtrip.map");
    save_map(g, path);
    const GridMap loaded = load_map(path);
    CHECK(loaded.width == g.width);
    CHECK(loaded.height == g.height);
    CHECK(loaded.resolution == doctest::Approx(g.resolution));
    CHECK(loaded.occ == g.occ);

    const std::string bad1 = temp_path("geoplan_bad1.map");
    {
      std::ofstream out(bad1);
      out << "resolutio 0.05 origin 0 0\n...\n";
    }
    CHECK_THROWS_AS((void)load_map(bad1), ParseError);

    const std::string bad2 = temp_path("geoplan_bad2.map");
    {
      std::ofstream out(bad2);
      out << "resolution 0.05 origin 0 0\n..#\n..\n";
    }
    try {
      (void)load_map(bad2);
      CHECK(false);
    } catch (const ParseError& e) {
      CHECK(e.line == 3);
    }

    const std::string bad3 = temp_path("geoplan_bad3.map");
    {
      std::ofstream out(bad3);
      out << "resolution 0.05 origin 0 0\n..x\n";
    }
    try {
      (void)load_map(bad3);
      CHECK(false);
    } catch (const ParseError& e) {
      CHECK(e.line == 2);
      CHECK(e.column == 3);
    }
  }

  TEST_CASE("a small all-free map parses") {
    const std::string path = temp_path("geoplan_free.map");
    {
      std::ofstream out(path);
      out << "resolution 1 origin 0 0\n...\n...\n...\n";
    }
    const GridMap g = load_map(path);
    CHECK(g.width == 3);
    CHECK(g.height == 3);
    int free_cells = 0;
    for (const auto c : g.occ) free_cells += c == 0 ? 1 : 0;
    CHECK(free_cells == 9);
  }

  TEST_CASE("doorway map geometry") {
    DoorwayParams p;
    const GridMap g = make_doorway_map(p);
    // The opening spans 20 free cells in the dividing-wall column.
    const int wall_ix = static_cast<int>(std::lround(
        (0.5 * p.width_m) / p.resolution));
    int free_cells = 0;
    for (int iy = 0; iy < g.height; ++iy)
      if (!g.occupied(wall_ix, iy)) ++free_cells;
    CHECK(free_cells == 20);

    // Door-line poses: centerline free at radius 0.45, offsets >= 0.06
    // colliding.
    const double cx = 0.5 * p.width_m, cy = 0.5 * p.height_m;
    CHECK(!se2_in_collision(g, vec3(cx, cy, 0.0), 0.45));
    CHECK(!se2_in_collision(g, vec3(cx, cy + 0.05, 0.0), 0.45));
    CHECK(se2_in_collision(g, vec3(cx, cy + 0.06, 0.0), 0.45));
    CHECK(se2_in_collision(g, vec3(cx, cy - 0.06, 0.0), 0.45));

    // Benchmark endpoints are free at the default radius.
    CHECK(!se2_in_collision(g, vec3(2.5, cy, 0.0), 0.3));
    CHECK(!se2_in_collision(g, vec3(9.5, cy, 0.0), 0.3));

    // Inside a wall.
    CHECK(se2_in_collision(g, vec3(cx, 1.0, 0.0), 0.3));
    // Out of bounds.
    CHECK(se2_in_collision(g, vec3(-1.0, 1.0, 0.0), 0.3));
  }

  TEST_CASE("corridor map geometry") {
    CorridorParams p;
    const GridMap g = make_corridor_map(p);
    // Max clearance on the first-leg centerline is half the width.
    double best = 0.0;
    for (double x = 3.2; x <= 5.5; x += 0.05)
      best = std::max(best, g.clearance_at(x, 2.0));
    CHECK(best == doctest::Approx(0.6).epsilon(0.05));

    // Benchmark endpoints are free at the default radius.
    CHECK(!se2_in_collision(g, vec3(1.8, 2.0, 0.0), 0.3));
    CHECK(!se2_in_collision(g, vec3(p.width_m - 1.8, p.height_m - 2.0, 0.0),
                            0.3));
  }

  TEST_CASE("arm collision basics") {
    ArmWorld w;
    CHECK(!arm_in_collision(w, vec2(0.3, -1.2)));
    CHECK(arm_in_collision(w, vec2(3.5, 0.0)));  // joint limit violation

    // Circle centered on the elbow.
    w.obstacles.push_back(Circle{std::cos(0.5), std::sin(0.5), 0.05});
    CHECK(arm_in_collision(w, vec2(0.5, 0.3)));

    // Circle exactly radius + eps away from both links.
    ArmWorld w2;
    w2.obstacles.push_back(Circle{0.5, 0.2 + 1e-9, 0.2});
    CHECK(!arm_in_collision(w2, vec2(0.0, 0.0)));
    w2.obstacles[0].cy = 0.2 - 1e-6;
    CHECK(arm_in_collision(w2, vec2(0.0, 0.0)));
  }

  TEST_CASE("arm collision agrees with the dense sampling oracle") {
    ArmWorld w;
    w.obstacles.push_back(Circle{0.8, 0.6, 0.3});
    w.obstacles.push_back(Circle{-1.0, -0.5, 0.4});
    std::mt19937_64 rng(47);
    std::uniform_real_distribution<double> uni(-kPi, kPi);
    int disagreements = 0;
    for (int k = 0; k < 1000; ++k) {
      const VectorXd q = vec2(uni(rng), uni(rng));
      const bool fast = arm_in_collision(w, q);
      const bool dense = arm_collision_oracle(w, q);
      // Dense sampling can only under-report collisions.
      if (fast != dense) {
        ++disagreements;
        CHECK(fast);
        CHECK(arm_clearance(w, q) < 5e-3);
      }
    }
    CHECK(disagreements <= 5);
  }

  TEST_CASE("arm clearance") {
    ArmWorld w;
    CHECK(arm_clearance(w, vec2(0, 0)) ==
          std::numeric_limits<double>::infinity());
    w.obstacles.push_back(Circle{0.0, 1.0, 0.25});
    CHECK(arm_clearance(w, vec2(0, 0)) == doctest::Approx(0.75).epsilon(1e-9));
  }
}
