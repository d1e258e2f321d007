#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "geoplan/bench.hpp"

namespace {

int env_workers(int cli_value) {
  if (cli_value > 0) return cli_value;
  if (const char* e = std::getenv("GEOPLAN_WORKERS")) {
    const int v = std::atoi(e);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

std::string env_out(const std::string& cli_value) {
  if (!cli_value.empty()) return cli_value;
  if (const char* e = std::getenv("GEOPLAN_OUT")) return e;
  return ".";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geoplan: geometry-aware sampling-based planning benchmarks"};
  app.require_subcommand(1);

  std::string config_path, out_dir, tier = "smoke";
  int workers = 0;

  CLI::App* bench = app.add_subcommand("bench", "run a multi-trial benchmark");
  bench->add_option("config", config_path, "benchmark config JSON")
      ->required();
  bench->add_option("--tier", tier, "budget tier: smoke or full")
      ->check(CLI::IsMember({"smoke", "full"}));
  bench->add_option("--workers", workers, "worker thread count");
  bench->add_option("--out", out_dir, "output directory");

  CLI::App* converge =
      app.add_subcommand("converge", "run order-of-accuracy studies");
  converge->add_option("config", config_path, "study config JSON")->required();
  converge->add_option("--out", out_dir, "output directory");

  CLI::App* solve = app.add_subcommand("solve", "solve a single problem");
  solve->add_option("config", config_path, "problem config JSON")->required();
  solve->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    const geoplan::ProblemSetup setup = geoplan::load_config(config_path);
    const std::string out = env_out(out_dir);
    std::filesystem::create_directories(out);

    if (bench->parsed()) {
      const geoplan::BenchReport report =
          geoplan::run_bench(setup, tier, env_workers(workers));
      geoplan::write_report_csv(
          report, (std::filesystem::path(out) / "report.csv").string());
      geoplan::write_report_json(
          report, (std::filesystem::path(out) / "report.json").string());
      for (const geoplan::MethodSummary& s : report.summaries)
        std::cout << s.method << ": median length "
                  << (s.trials > 0 ? s.median_length : 0.0)
                  << ", median energy " << s.median_energy
                  << ", success rate " << s.success_rate << "\n";
      return 0;
    }
    if (converge->parsed()) {
      const geoplan::ConvergeReport report = geoplan::run_converge(setup);
      geoplan::write_converge_outputs(report, out);
      for (const geoplan::ConvergePointResult& p : report.points) {
        std::cout << "point " << p.point;
        if (p.excluded)
          std::cout << ": excluded (" << p.note << ")";
        else if (p.study.exact)
          std::cout << ": exact";
        else
          std::cout << ": slope_distance " << p.study.slope_distance
                    << ", slope_midpoint " << p.study.slope_midpoint;
        std::cout << "\n";
      }
      return 0;
    }
    if (solve->parsed()) {
      const geoplan::SolveOutcome outcome = geoplan::run_solve(setup);
      geoplan::write_solve_outputs(outcome, out);
      std::cout << (outcome.success ? "solved" : "no solution")
                << ": length " << outcome.length << ", energy "
                << outcome.energy << "\n";
      return outcome.success ? 0 : 1;
    }
  } catch (const geoplan::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const geoplan::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
