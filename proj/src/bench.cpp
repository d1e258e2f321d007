#include "geoplan/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <thread>

#include "json.hpp"

namespace geoplan {

using nlohmann::json;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

const json& require_key(const json& j, const char* key, const char* context) {
  auto it = j.find(key);
  if (it == j.end())
    throw ConfigError(std::string("missing key '") + key + "' in " + context);
  return *it;
}

VectorXd parse_vector(const json& j, const char* context) {
  if (!j.is_array())
    throw ConfigError(std::string("expected array for ") + context);
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number())
      throw ConfigError(std::string("expected numbers in ") + context);
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Manifold<double> parse_manifold(const json& j) {
  const std::string type =
      require_key(j, "type", "manifold").get<std::string>();
  if (type == "euclidean") {
    const int dim = require_key(j, "dim", "manifold").get<int>();
    if (dim <= 0) throw ConfigError("manifold dim must be positive");
    if (j.contains("metric")) {
      const json& rows = j["metric"];
      if (static_cast<int>(rows.size()) != dim)
        throw ConfigError("metric must be dim x dim");
      MatrixXd g(dim, dim);
      for (int r = 0; r < dim; ++r) {
        const VectorXd row =
            parse_vector(rows[static_cast<std::size_t>(r)], "metric row");
        if (row.size() != dim) throw ConfigError("metric must be dim x dim");
        g.row(r) = row.transpose();
      }
      return constant_metric_manifold<double>(g);
    }
    return euclidean_manifold<double>(dim);
  }
  if (type == "se2") {
    const VectorXd w =
        parse_vector(require_key(j, "weights", "manifold"), "se2 weights");
    if (w.size() != 3 || w.minCoeff() <= 0)
      throw ConfigError("se2 weights must be three positive numbers");
    RetractionKind kind = RetractionKind::Chart;
    if (j.contains("retraction")) {
      const std::string r = j["retraction"].get<std::string>();
      if (r == "chart")
        kind = RetractionKind::Chart;
      else if (r == "exp")
        kind = RetractionKind::Se2Exp;
      else
        throw ConfigError("se2 retraction must be 'chart' or 'exp'");
    }
    return se2_manifold<double>({w[0], w[1], w[2]}, kind);
  }
  if (type == "two_link") {
    TwoLinkParams<double> p;
    if (j.contains("params")) {
      const json& pj = j["params"];
      p.l1 = pj.value("l1", p.l1);
      p.l2 = pj.value("l2", p.l2);
      p.m1 = pj.value("m1", p.m1);
      p.m2 = pj.value("m2", p.m2);
      p.lc1 = pj.value("lc1", p.lc1);
      p.lc2 = pj.value("lc2", p.lc2);
      p.I1 = pj.value("I1", p.I1);
      p.I2 = pj.value("I2", p.I2);
    }
    return two_link_manifold<double>(p);
  }
  if (type == "sphere2") return stereographic_sphere_manifold<double>();
  throw ConfigError("unknown manifold type: " + type);
}

struct EnvironmentSetup {
  CollisionFn in_collision;
  std::function<double(const VectorXd&)> clearance;
  VectorXd lo, hi;
};

EnvironmentSetup parse_environment(const json& j) {
  EnvironmentSetup env;
  const std::string type =
      require_key(j, "type", "environment").get<std::string>();
  if (type == "none") {
    const json& bounds = require_key(j, "bounds", "environment");
    env.lo = parse_vector(require_key(bounds, "lo", "bounds"), "bounds.lo");
    env.hi = parse_vector(require_key(bounds, "hi", "bounds"), "bounds.hi");
    return env;
  }
  if (type == "gridmap") {
    auto map = std::make_shared<GridMap>();
    if (j.contains("map")) {
      *map = load_map(j["map"].get<std::string>());
    } else {
      const std::string builtin =
          require_key(j, "builtin", "environment").get<std::string>();
      const json params = j.value("params", json::object());
      if (builtin == "doorway") {
        DoorwayParams p;
        p.width_m = params.value("width", p.width_m);
        p.height_m = params.value("height", p.height_m);
        p.wall_thickness = params.value("wall_thickness", p.wall_thickness);
        p.opening_width = params.value("opening", p.opening_width);
        p.resolution = params.value("resolution", p.resolution);
        *map = make_doorway_map(p);
      } else if (builtin == "corridor") {
        CorridorParams p;
        p.width_m = params.value("width", p.width_m);
        p.height_m = params.value("height", p.height_m);
        p.corridor_width = params.value("corridor_width", p.corridor_width);
        p.resolution = params.value("resolution", p.resolution);
        *map = make_corridor_map(p);
      } else {
        throw ConfigError("unknown builtin map: " + builtin);
      }
    }
    const double radius = j.value("robot_radius", 0.3);
    env.in_collision = [map, radius](const VectorXd& q) {
      return se2_in_collision(*map, q, radius);
    };
    env.clearance = [map, radius](const VectorXd& q) {
      return std::max(0.0, map->clearance_at(q[0], q[1]) - radius);
    };
    constexpr double pi = 3.14159265358979323846;
    env.lo = VectorXd(3);
    env.hi = VectorXd(3);
    env.lo << map->min_x(), map->min_y(), -pi;
    env.hi << map->max_x(), map->max_y(), pi;
    return env;
  }
  if (type == "arm") {
    auto world = std::make_shared<ArmWorld>();
    if (j.contains("obstacles"))
      for (const json& c : j["obstacles"])
        world->obstacles.push_back(Circle{c.value("cx", 0.0),
                                          c.value("cy", 0.0),
                                          c.value("r", 0.1)});
    if (j.contains("joint_limits")) {
      const VectorXd lo = parse_vector(j["joint_limits"]["lo"], "limits.lo");
      const VectorXd hi = parse_vector(j["joint_limits"]["hi"], "limits.hi");
      world->limit_lo = lo.head<2>();
      world->limit_hi = hi.head<2>();
    }
    env.in_collision = [world](const VectorXd& q) {
      return arm_in_collision(*world, q);
    };
    if (!world->obstacles.empty())
      env.clearance = [world](const VectorXd& q) {
        return arm_clearance(*world, q);
      };
    env.lo = world->limit_lo;
    env.hi = world->limit_hi;
    return env;
  }
  throw ConfigError("unknown environment type: " + type);
}

}  // namespace

ProblemSetup load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }

  ProblemSetup s;
  s.name = j.value("name", "unnamed");
  s.seed = j.value("seed", std::uint64_t{1});
  s.manifold = parse_manifold(require_key(j, "manifold", "config"));

  if (j.contains("environment")) {
    EnvironmentSetup env = parse_environment(j["environment"]);
    s.in_collision = env.in_collision;
    s.clearance = env.clearance;
    s.sample_lo = env.lo;
    s.sample_hi = env.hi;
    if (s.sample_lo.size() != s.manifold.dim)
      throw ConfigError("environment bounds do not match the manifold");
  }

  if (j.contains("endpoints")) {
    s.start = parse_vector(require_key(j["endpoints"], "start", "endpoints"),
                           "start");
    s.goal =
        parse_vector(require_key(j["endpoints"], "goal", "endpoints"), "goal");
    if (s.start.size() != s.manifold.dim || s.goal.size() != s.manifold.dim)
      throw ConfigError("endpoint dimension does not match the manifold");
  }
  if (j.contains("perturbation"))
    s.perturb_std = parse_vector(
        require_key(j["perturbation"], "std", "perturbation"), "std");
  else
    s.perturb_std = VectorXd::Zero(s.manifold.dim);

  if (j.contains("methods"))
    for (const json& mth : j["methods"])
      s.methods.push_back(mth.get<std::string>());
  for (const std::string& mth : s.methods)
    if (mth != "riemannian" && mth != "euclidean" && mth != "variational" &&
        mth != "bvp")
      throw ConfigError("unknown method: " + mth);

  PlanRequest& req = s.planner_template;
  const json planner = j.value("planner", json::object());
  req.goal_tolerance = planner.value("goal_tolerance", 0.5);
  req.goal_bias = planner.value("goal_bias", 0.05);
  req.rewire_gamma = planner.value("gamma", 2.0);
  req.rewire_radius_min = planner.value("rewire_radius_min", 0.0);
  req.collision_resolution = planner.value("collision_resolution", 0.05);
  req.solution_waypoints = planner.value("solution_waypoints", 257);
  req.expansion.step = planner.value("step", 0.25);
  req.expansion.lambda = planner.value("lambda", 1.5);
  req.expansion.travel_budget = planner.value("travel_budget", -1.0);

  const json var = j.value("variational", json::object());
  s.variational_cfg.mode = GeodesicSolveConfig<double>::Mode::VariationalSpline;
  s.variational_cfg.num_control_points = var.value("control_points", 16);
  s.variational_cfg.tolerance = var.value("tolerance", 1e-8);
  s.variational_cfg.max_iterations = var.value("max_iterations", 2000);
  s.variational_restarts = var.value("restarts", 8);
  s.variational_perturb_std = var.value("perturb_std", 0.5);
  s.barrier.alpha = var.value("barrier_alpha", 2.0);
  s.barrier.beta = var.value("barrier_beta", 10.0);

  s.bvp_cfg.mode = GeodesicSolveConfig<double>::Mode::ShootingBvp;
  const json bvp = j.value("bvp", json::object());
  s.bvp_cfg.tolerance = bvp.value("tolerance", 1e-8);
  s.bvp_cfg.max_iterations = bvp.value("max_iterations", 50);
  s.bvp_cfg.integrator_step = bvp.value("integrator_step", 1.0 / 256.0);

  const json tiers = j.value("tiers", json::object());
  auto parse_tier = [&](const char* key, TierSpec def) {
    const json t = tiers.value(key, json::object());
    TierSpec out = def;
    out.trials = t.value("trials", def.trials);
    out.runs = t.value("runs", def.runs);
    out.budget_s = t.value("budget_s", def.budget_s);
    out.iteration_budget = t.value("iteration_budget", def.iteration_budget);
    if (out.trials <= 0 || out.runs <= 0)
      throw ConfigError("tier trial and run counts must be positive");
    return out;
  };
  s.smoke = parse_tier("smoke", TierSpec{10, 3, 30.0, 0});
  s.full = parse_tier("full", TierSpec{50, 10, 60.0, 0});

  if (j.contains("study")) {
    const json& st = j["study"];
    for (const json& bp : require_key(st, "base_points", "study"))
      s.study_base_points.push_back(parse_vector(bp, "base point"));
    if (st.contains("directions"))
      for (const json& d : st["directions"])
        s.study_directions.push_back(parse_vector(d, "direction"));
    for (const json& h : require_key(st, "h_values", "study"))
      s.study_h.push_back(h.get<double>());
    const json oracle = st.value("oracle", json::object());
    s.oracle_cfg.mode = GeodesicSolveConfig<double>::Mode::VariationalSpline;
    s.oracle_cfg.num_control_points = oracle.value("control_points", 32);
    s.oracle_cfg.tolerance = oracle.value("tolerance", 1e-10);
    s.oracle_cfg.max_iterations = oracle.value("max_iterations", 20000);
  }

  if (j.contains("solve")) {
    const json& sv = j["solve"];
    s.solve_method = sv.value("method", "riemannian");
    s.solve_budget_s = sv.value("budget_s", 10.0);
    s.solve_iteration_budget =
        static_cast<long>(sv.value("iteration_budget", 3000));
  }
  s.config_echo = j.dump();
  return s;
}

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mad_of(const std::vector<double>& v, double med) {
  std::vector<double> dev;
  dev.reserve(v.size());
  for (double x : v) dev.push_back(std::abs(x - med));
  return median_of(std::move(dev));
}

// Riemannian length/energy of a solution path, measured after unit-speed
// reparameterization under the unreshaped metric.
void measure_waypoints(const Manifold<double>& m,
                       const std::vector<VectorXd>& pts, int n_out,
                       double& length, double& energy) {
  Polyline<double> poly = make_polyline(m, pts);
  if (path_length(poly) > 1e-12)
    poly = reparameterize_unit_speed(m, poly, n_out);
  length = path_length(poly);
  energy = path_energy(poly);
}

VectorXd perturb_config(const ProblemSetup& s, const VectorXd& base,
                        std::mt19937_64& rng) {
  VectorXd q = base;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    std::normal_distribution<double> noise(0.0, 1.0);
    q[i] += s.perturb_std[i] * noise(rng);
  }
  q = wrap_config(s.manifold, q);
  for (Eigen::Index i = 0; i < q.size(); ++i)
    q[i] = std::clamp(q[i], s.sample_lo[i], s.sample_hi[i]);
  return q;
}

TrialInfo make_trial(const ProblemSetup& s, int trial) {
  TrialInfo info;
  info.trial = trial;
  info.start = s.start;
  info.goal = s.goal;
  if (s.perturb_std.size() == s.manifold.dim &&
      s.perturb_std.maxCoeff() > 0.0 && s.sample_lo.size() == s.manifold.dim) {
    std::mt19937_64 rng(
        splitmix64(s.seed ^ (0xA5A5A5A5ULL + static_cast<std::uint64_t>(trial))));
    for (int attempt = 0; attempt < 200; ++attempt) {
      const VectorXd cand_start = perturb_config(s, s.start, rng);
      const VectorXd cand_goal = perturb_config(s, s.goal, rng);
      if (!s.in_collision ||
          (!s.in_collision(cand_start) && !s.in_collision(cand_goal))) {
        info.start = cand_start;
        info.goal = cand_goal;
        break;
      }
    }
  }
  // Straight chart-segment reference under the Riemannian metric.
  const VectorXd diff =
      detail::wrapped_difference(s.manifold, info.goal, info.start);
  std::vector<VectorXd> pts;
  const int k = 256;
  pts.reserve(k + 1);
  for (int i = 0; i <= k; ++i)
    pts.push_back(wrap_config(
        s.manifold,
        (info.start + (static_cast<double>(i) / k) * diff).eval()));
  measure_waypoints(s.manifold, pts, 257, info.straight_length,
                    info.straight_energy);
  return info;
}

std::uint64_t run_seed(const ProblemSetup& s, std::size_t method_index,
                       int trial, int run) {
  return splitmix64(splitmix64(s.seed + 0x9E3779B9ULL * (method_index + 1)) +
                    static_cast<std::uint64_t>(trial) * 1024ULL +
                    static_cast<std::uint64_t>(run));
}

RunRecord execute_task(const ProblemSetup& s, const TierSpec& tier,
                       const TrialInfo& trial, const std::string& method,
                       int run, std::uint64_t seed) {
  RunRecord rec;
  rec.method = method;
  rec.trial = trial.trial;
  rec.run = run;
  rec.seed = seed;
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t0)
        .count();
  };

  try {
    if (method == "riemannian" || method == "euclidean") {
      PlanRequest req = s.planner_template;
      req.manifold = s.manifold;
      req.in_collision = s.in_collision;
      req.sample_lo = s.sample_lo;
      req.sample_hi = s.sample_hi;
      req.start = trial.start;
      req.goal = trial.goal;
      req.seed = seed;
      req.time_budget_s = tier.budget_s;
      req.iteration_budget = tier.iteration_budget;
      req.mode = method == "riemannian" ? PlanMode::Riemannian
                                        : PlanMode::EuclideanBaseline;
      const PlanResult res = plan(req);
      rec.success = res.success;
      rec.iterations = res.iterations;
      rec.length = res.length;
      rec.energy = res.energy;
    } else if (method == "variational") {
      Manifold<double> solver_m = s.manifold;
      if (s.clearance && s.barrier.beta > 0.0)
        solver_m.metric_field = barrier_reshaped_metric<double>(
            s.manifold.metric_field, s.clearance, s.barrier);
      const GeodesicSolution<double> sol = solve_geodesic_variational_restarts(
          solver_m, trial.start, trial.goal, s.variational_cfg,
          s.variational_restarts, s.variational_perturb_std, seed);
      rec.iterations = sol.report.iterations;
      measure_waypoints(s.manifold, sol.path.waypoints,
                        s.planner_template.solution_waypoints, rec.length,
                        rec.energy);
      rec.success =
          std::isfinite(rec.length) &&
          check_edge(s.in_collision, s.manifold, sol.path,
                     0.5 * s.planner_template.collision_resolution);
    } else if (method == "bvp") {
      const GeodesicSolution<double> sol =
          solve_geodesic_bvp(s.manifold, trial.start, trial.goal, s.bvp_cfg);
      rec.iterations = sol.report.iterations;
      measure_waypoints(s.manifold, sol.path.waypoints,
                        s.planner_template.solution_waypoints, rec.length,
                        rec.energy);
      rec.success = sol.report.converged &&
                    check_edge(s.in_collision, s.manifold, sol.path,
                               0.5 * s.planner_template.collision_resolution);
    }
  } catch (const std::exception&) {
    rec.success = false;
  }
  if (!rec.success) {
    rec.length = std::numeric_limits<double>::infinity();
    rec.energy = std::numeric_limits<double>::infinity();
  }
  rec.wall_time_s = elapsed();
  return rec;
}

}  // namespace

MethodSummary summarize_method(const std::string& method,
                               const std::vector<RunRecord>& records,
                               int trials) {
  MethodSummary sum;
  sum.method = method;
  sum.trials = trials;
  // Per-trial best (by length) over successful runs.
  std::vector<double> lengths, energies;
  int successful_trials = 0;
  for (int t = 0; t < trials; ++t) {
    double best_len = std::numeric_limits<double>::infinity();
    double best_energy = std::numeric_limits<double>::infinity();
    bool ok = false;
    for (const RunRecord& r : records)
      if (r.method == method && r.trial == t && r.success &&
          r.length < best_len) {
        best_len = r.length;
        best_energy = r.energy;
        ok = true;
      }
    if (ok) {
      ++successful_trials;
      lengths.push_back(best_len);
      energies.push_back(best_energy);
    }
  }
  sum.success_rate =
      trials > 0 ? static_cast<double>(successful_trials) / trials : 0.0;
  sum.median_length = median_of(lengths);
  sum.mad_length = mad_of(lengths, sum.median_length);
  sum.median_energy = median_of(energies);
  sum.mad_energy = mad_of(energies, sum.median_energy);
  return sum;
}

BenchReport run_bench(const ProblemSetup& setup, const std::string& tier_name,
                      int workers) {
  if (setup.methods.empty())
    throw ConfigError("config lists no methods to benchmark");
  if (setup.start.size() == 0 || setup.goal.size() == 0)
    throw ConfigError("config has no endpoints");
  const TierSpec tier = tier_name == "full" ? setup.full : setup.smoke;

  BenchReport report;
  report.name = setup.name;
  report.tier = tier_name;
  report.version = version_string();
  report.base_seed = setup.seed;
  report.config_echo = setup.config_echo;
  for (int t = 0; t < tier.trials; ++t)
    report.trials.push_back(make_trial(setup, t));

  struct Task {
    std::string method;
    int trial;
    int run;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t mi = 0; mi < setup.methods.size(); ++mi) {
    const std::string& method = setup.methods[mi];
    const int runs =
        (method == "variational" || method == "bvp") ? 1 : tier.runs;
    for (int t = 0; t < tier.trials; ++t)
      for (int r = 0; r < runs; ++r)
        tasks.push_back({method, t, r, run_seed(setup, mi, t, r)});
  }

  report.records.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  const int n_workers = std::max(1, workers);
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) break;
      const Task& task = tasks[i];
      report.records[i] =
          execute_task(setup, tier, report.trials[static_cast<std::size_t>(
                                        task.trial)],
                       task.method, task.run, task.seed);
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (std::thread& th : pool) th.join();

  for (const std::string& method : setup.methods)
    report.summaries.push_back(
        summarize_method(method, report.records, tier.trials));
  return report;
}

void write_report_csv(const BenchReport& report, const std::string& path) {
  std::ofstream out(path);
  out << "method,trial,run,seed,success,iterations,length,energy\n";
  for (const RunRecord& r : report.records)
    out << r.method << "," << r.trial << "," << r.run << "," << r.seed << ","
        << (r.success ? 1 : 0) << "," << r.iterations << ","
        << fmt_double(r.length) << "," << fmt_double(r.energy) << "\n";
}

namespace {

json vector_to_json(const VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

}  // namespace

void write_report_json(const BenchReport& report, const std::string& path) {
  json j;
  j["name"] = report.name;
  j["tier"] = report.tier;
  j["version"] = report.version;
  j["base_seed"] = report.base_seed;
  if (!report.config_echo.empty())
    j["config"] = json::parse(report.config_echo);
  j["trials"] = json::array();
  for (const TrialInfo& t : report.trials)
    j["trials"].push_back({{"trial", t.trial},
                           {"start", vector_to_json(t.start)},
                           {"goal", vector_to_json(t.goal)},
                           {"straight_length", t.straight_length},
                           {"straight_energy", t.straight_energy}});
  j["records"] = json::array();
  for (const RunRecord& r : report.records)
    j["records"].push_back({{"method", r.method},
                            {"trial", r.trial},
                            {"run", r.run},
                            {"seed", r.seed},
                            {"success", r.success},
                            {"iterations", r.iterations},
                            {"length", r.length},
                            {"energy", r.energy},
                            {"wall_time_s", r.wall_time_s}});
  j["seed_manifest"] = json::array();
  for (const RunRecord& r : report.records)
    j["seed_manifest"].push_back(r.seed);
  j["summaries"] = json::array();
  for (const MethodSummary& s : report.summaries)
    j["summaries"].push_back({{"method", s.method},
                              {"median_length", s.median_length},
                              {"mad_length", s.mad_length},
                              {"median_energy", s.median_energy},
                              {"mad_energy", s.mad_energy},
                              {"success_rate", s.success_rate},
                              {"trials", s.trials}});
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

ConvergeReport run_converge(const ProblemSetup& setup) {
  if (setup.study_base_points.empty() || setup.study_h.empty())
    throw ConfigError("config has no study section");
  ConvergeReport report;
  report.name = setup.name;
  for (std::size_t i = 0; i < setup.study_base_points.size(); ++i) {
    ConvergePointResult pr;
    pr.point = static_cast<int>(i);
    VectorXd dir;
    if (i < setup.study_directions.size()) {
      dir = setup.study_directions[i];
    } else {
      std::mt19937_64 rng(splitmix64(setup.seed + 0x51ULL * (i + 1)));
      std::normal_distribution<double> noise(0.0, 1.0);
      dir = VectorXd(setup.manifold.dim);
      for (Eigen::Index d = 0; d < dir.size(); ++d) dir[d] = noise(rng);
    }
    try {
      pr.study = convergence_study(setup.manifold,
                                   setup.study_base_points[i], dir,
                                   setup.study_h, setup.oracle_cfg);
    } catch (const std::exception& e) {
      pr.excluded = true;
      pr.note = e.what();
    }
    report.points.push_back(std::move(pr));
  }
  return report;
}

void write_converge_outputs(const ConvergeReport& report,
                            const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  json summary;
  summary["name"] = report.name;
  summary["points"] = json::array();
  for (const ConvergePointResult& pr : report.points) {
    if (!pr.excluded) {
      std::ofstream csv(fs::path(out_dir) /
                        (report.name + "_point" + std::to_string(pr.point) +
                         ".csv"));
      csv << "h,err_distance,err_midpoint\n";
      for (std::size_t i = 0; i < pr.study.h.size(); ++i)
        csv << fmt_double(pr.study.h[i]) << ","
            << fmt_double(pr.study.err_distance[i]) << ","
            << fmt_double(pr.study.err_midpoint[i]) << "\n";
    }
    json pj;
    pj["point"] = pr.point;
    pj["excluded"] = pr.excluded;
    if (!pr.note.empty()) pj["note"] = pr.note;
    if (!pr.excluded) {
      pj["exact"] = pr.study.exact;
      pj["slope_distance"] = pr.study.slope_distance;
      pj["slope_midpoint"] = pr.study.slope_midpoint;
      pj["slope_logdiff"] = pr.study.slope_logdiff;
      double max_mismatch = 0.0;
      for (double v : pr.study.bvp_mismatch)
        if (std::isfinite(v)) max_mismatch = std::max(max_mismatch, v);
      pj["max_bvp_mismatch"] = max_mismatch;
    }
    summary["points"].push_back(pj);
  }
  std::ofstream out(fs::path(out_dir) / (report.name + "_summary.json"));
  out << summary.dump(2) << "\n";
}

SolveOutcome run_solve(const ProblemSetup& setup) {
  if (setup.start.size() == 0 || setup.goal.size() == 0)
    throw ConfigError("config has no endpoints");
  SolveOutcome outcome;
  outcome.method = setup.solve_method;
  const auto t0 = std::chrono::steady_clock::now();

  if (setup.solve_method == "riemannian" ||
      setup.solve_method == "euclidean") {
    PlanRequest req = setup.planner_template;
    req.manifold = setup.manifold;
    req.in_collision = setup.in_collision;
    req.sample_lo = setup.sample_lo;
    req.sample_hi = setup.sample_hi;
    req.start = setup.start;
    req.goal = setup.goal;
    req.seed = setup.seed;
    req.time_budget_s = setup.solve_budget_s;
    req.iteration_budget = setup.solve_iteration_budget;
    req.mode = setup.solve_method == "riemannian"
                   ? PlanMode::Riemannian
                   : PlanMode::EuclideanBaseline;
    const PlanResult res = plan(req);
    outcome.success = res.success;
    outcome.solution = res.solution;
    outcome.length = res.length;
    outcome.energy = res.energy;
    outcome.cost_trace = res.cost_trace;
  } else if (setup.solve_method == "variational") {
    Manifold<double> solver_m = setup.manifold;
    if (setup.clearance && setup.barrier.beta > 0.0)
      solver_m.metric_field = barrier_reshaped_metric<double>(
          setup.manifold.metric_field, setup.clearance, setup.barrier);
    const GeodesicSolution<double> sol = solve_geodesic_variational_restarts(
        solver_m, setup.start, setup.goal, setup.variational_cfg,
        setup.variational_restarts, setup.variational_perturb_std,
        setup.seed);
    Polyline<double> measured =
        make_polyline(setup.manifold, sol.path.waypoints);
    if (path_length(measured) > 1e-12)
      measured = reparameterize_unit_speed(
          setup.manifold, measured, setup.planner_template.solution_waypoints);
    outcome.solution = measured;
    outcome.length = path_length(measured);
    outcome.energy = path_energy(measured);
    outcome.success =
        check_edge(setup.in_collision, setup.manifold, sol.path,
                   0.5 * setup.planner_template.collision_resolution);
  } else if (setup.solve_method == "bvp") {
    const GeodesicSolution<double> sol = solve_geodesic_bvp(
        setup.manifold, setup.start, setup.goal, setup.bvp_cfg);
    Polyline<double> measured =
        make_polyline(setup.manifold, sol.path.waypoints);
    if (path_length(measured) > 1e-12)
      measured = reparameterize_unit_speed(
          setup.manifold, measured, setup.planner_template.solution_waypoints);
    outcome.solution = measured;
    outcome.length = path_length(measured);
    outcome.energy = path_energy(measured);
    outcome.success = sol.report.converged &&
                      check_edge(setup.in_collision, setup.manifold, sol.path,
                                 0.5 * setup.planner_template.collision_resolution);
  } else {
    throw ConfigError("unknown solve method: " + setup.solve_method);
  }
  outcome.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return outcome;
}

void write_solve_outputs(const SolveOutcome& outcome,
                         const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::ofstream csv(fs::path(out_dir) / "solution.csv");
  for (const VectorXd& q : outcome.solution.waypoints) {
    for (Eigen::Index i = 0; i < q.size(); ++i)
      csv << (i > 0 ? "," : "") << fmt_double(q[i]);
    csv << "\n";
  }
  json j;
  j["method"] = outcome.method;
  j["success"] = outcome.success;
  j["length"] = outcome.length;
  j["energy"] = outcome.energy;
  j["time_s"] = outcome.wall_time_s;
  j["cost_trace"] = json::array();
  for (const CostTracePoint& p : outcome.cost_trace)
    j["cost_trace"].push_back({p.iteration, p.time_s, p.cost});
  std::ofstream out(fs::path(out_dir) / "solution.json");
  out << j.dump(2) << "\n";
}

}  // namespace geoplan
