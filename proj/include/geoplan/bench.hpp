#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geoplan/environment.hpp"
#include "geoplan/geodesic.hpp"
#include "geoplan/metrics.hpp"
#include "geoplan/planner.hpp"

namespace geoplan {

struct TierSpec {
  int trials = 10;
  int runs = 3;
  double budget_s = 30.0;
  long iteration_budget = 0;  // 0: time budget only
};

/// A fully assembled benchmark problem: manifold, environment closures,
/// endpoints, method list and budget tiers, parsed from one JSON config.
struct ProblemSetup {
  std::string name;
  Manifold<double> manifold;
  CollisionFn in_collision;                         // empty: obstacle-free
  std::function<double(const VectorXd&)> clearance; // empty: none
  VectorXd start, goal;
  VectorXd sample_lo, sample_hi;
  VectorXd perturb_std;
  std::vector<std::string> methods;
  PlanRequest planner_template;  // knobs only; endpoints set per trial
  GeodesicSolveConfig<double> variational_cfg;
  int variational_restarts = 8;
  double variational_perturb_std = 0.5;
  BarrierParams<double> barrier;
  GeodesicSolveConfig<double> bvp_cfg;
  TierSpec smoke, full;
  std::uint64_t seed = 0;

  // converge-mode study description
  std::vector<VectorXd> study_base_points;
  std::vector<VectorXd> study_directions;  // empty: seeded random
  std::vector<double> study_h;
  GeodesicSolveConfig<double> oracle_cfg;

  // solve-mode method
  std::string solve_method = "riemannian";
  double solve_budget_s = 10.0;
  long solve_iteration_budget = 3000;

  std::string config_echo;  // the parsed config, normalized JSON
};

ProblemSetup load_config(const std::string& path);  // throws ConfigError

struct RunRecord {
  std::string method;
  int trial = 0;
  int run = 0;
  std::uint64_t seed = 0;
  bool success = false;
  long iterations = 0;
  double length = 0.0;
  double energy = 0.0;
  double wall_time_s = 0.0;
};

struct MethodSummary {
  std::string method;
  double median_length = 0.0;
  double mad_length = 0.0;
  double median_energy = 0.0;
  double mad_energy = 0.0;
  double success_rate = 0.0;  // successful trials / trials
  int trials = 0;
};

struct TrialInfo {
  int trial = 0;
  VectorXd start, goal;
  double straight_length = 0.0;  // Riemannian length of the chart segment
  double straight_energy = 0.0;
};

struct BenchReport {
  std::string name;
  std::string tier;
  std::string version;
  std::uint64_t base_seed = 0;
  std::string config_echo;
  std::vector<TrialInfo> trials;
  std::vector<RunRecord> records;
  std::vector<MethodSummary> summaries;
};

/// Runs every configured method over perturbed-endpoint trials. Seeds are
/// pre-assigned per (method, trial, run), so results do not depend on the
/// worker count.
BenchReport run_bench(const ProblemSetup& setup, const std::string& tier,
                      int workers);

void write_report_csv(const BenchReport& report, const std::string& path);
void write_report_json(const BenchReport& report, const std::string& path);

MethodSummary summarize_method(const std::string& method,
                               const std::vector<RunRecord>& records,
                               int trials);

struct ConvergePointResult {
  int point = 0;
  bool excluded = false;    // oracle failure
  std::string note;
  ConvergenceStudy<double> study;
};

struct ConvergeReport {
  std::string name;
  std::vector<ConvergePointResult> points;
};

ConvergeReport run_converge(const ProblemSetup& setup);
void write_converge_outputs(const ConvergeReport& report,
                            const std::string& out_dir);

struct SolveOutcome {
  bool success = false;
  std::string method;
  Polyline<double> solution;
  double length = 0.0;
  double energy = 0.0;
  double wall_time_s = 0.0;
  std::vector<CostTracePoint> cost_trace;  // sampling methods only
};

SolveOutcome run_solve(const ProblemSetup& setup);
void write_solve_outputs(const SolveOutcome& outcome,
                         const std::string& out_dir);

std::uint64_t splitmix64(std::uint64_t x);

inline const char* version_string() { return "geoplan 0.1.0"; }

}  // namespace geoplan
