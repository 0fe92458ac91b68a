// Command-line front end. Talks to the library only through the C API.
#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dbpark/dbpark.h"

namespace {

constexpr int kExitFail = 1;   // a certificate failed
constexpr int kExitError = 2;  // bad input, I/O, ...

struct Options {
  std::optional<std::string> step;
  std::optional<std::string> cutoff;
  std::string out_dir = "out";
  std::size_t workers = 1;
  std::string preset_dir = DBPARK_PRESET_DIR;
};

int fail(dbp_status st) {
  std::fprintf(stderr, "error (%s): %s\n", dbp_status_name(st),
               dbp_last_error());
  return kExitError;
}

int report_and_write(dbp_results* results, const Options& opt) {
  size_t n = 0;
  dbp_results_count(results, &n);
  for (size_t i = 0; i < n; ++i) {
    dbp_run_info info{};
    dbp_results_info(results, i, &info);
    if (info.reached_cutoff) {
      std::printf("%-12s %s  cutoff at t=%.6g after %zu samples, max|omega|=%.6g\n",
                  info.name, info.passed ? "PASS" : "FAIL", info.cutoff_time,
                  info.samples, info.max_abs_omega);
    } else {
      std::printf("%-12s %s  no cutoff (%zu samples)\n", info.name,
                  info.passed ? "PASS" : "FAIL", info.samples);
    }
  }
  const char* report = nullptr;
  dbp_results_report(results, &report);
  std::printf("\n%s", report);
  if (dbp_status st = dbp_results_write(results, opt.out_dir.c_str()); st != DBP_OK) {
    return fail(st);
  }
  std::printf("outputs written to %s\n", opt.out_dir.c_str());
  int passed = 0;
  dbp_results_passed(results, &passed);
  return passed ? 0 : kExitFail;
}

int run_file(const std::string& path, const Options& opt) {
  dbp_scenario_set* set = nullptr;
  if (dbp_status st = dbp_scenario_load(path.c_str(), &set); st != DBP_OK) {
    return fail(st);
  }
  dbp_status st = DBP_OK;
  if (opt.step) st = dbp_scenario_override(set, "step", opt.step->c_str());
  if (st == DBP_OK && opt.cutoff) {
    st = dbp_scenario_override(set, "cutoff", opt.cutoff->c_str());
  }
  dbp_results* results = nullptr;
  if (st == DBP_OK) st = dbp_run(set, opt.workers, &results);
  dbp_scenario_free(set);
  if (st != DBP_OK) return fail(st);
  const int code = report_and_write(results, opt);
  dbp_results_free(results);
  return code;
}

int run_sweep(const std::string& path, const Options& opt, bool workers_given) {
  dbp_sweep* sweep = nullptr;
  if (dbp_status st = dbp_sweep_load(path.c_str(), &sweep); st != DBP_OK) {
    return fail(st);
  }
  dbp_status st = DBP_OK;
  if (opt.step) st = dbp_sweep_override(sweep, "step", opt.step->c_str());
  if (st == DBP_OK && opt.cutoff) {
    st = dbp_sweep_override(sweep, "cutoff", opt.cutoff->c_str());
  }
  if (st != DBP_OK) {
    dbp_sweep_free(sweep);
    return fail(st);
  }
  size_t points = 0, workers = 0;
  dbp_sweep_point_count(sweep, &points);
  dbp_sweep_workers(sweep, &workers);
  if (workers_given) workers = opt.workers;
  std::printf("grid: %zu points, %zu workers\n", points, workers);
  std::fflush(stdout);
  dbp_sweep_results* results = nullptr;
  st = dbp_sweep_run(sweep, workers, &results);
  dbp_sweep_free(sweep);
  if (st != DBP_OK) return fail(st);
  const char* table = nullptr;
  double fraction = 0;
  dbp_sweep_table(results, &table);
  dbp_sweep_pass_fraction(results, &fraction);
  std::printf("%spass fraction: %.4g\n", table, fraction);
  st = dbp_sweep_write(results, opt.out_dir.c_str());
  dbp_sweep_results_free(results);
  if (st != DBP_OK) return fail(st);
  std::printf("outputs written to %s\n", opt.out_dir.c_str());
  return fraction == 1.0 ? 0 : kExitFail;
}

int run_check(const std::string& csv, const std::string& law,
              const Options& opt) {
  double cutoff = 0.01;
  if (opt.cutoff) {
    try {
      cutoff = std::stod(*opt.cutoff);
    } catch (const std::exception&) {
      std::fprintf(stderr, "error: --cutoff '%s' is not a number\n",
                   opt.cutoff->c_str());
      return kExitError;
    }
  }
  dbp_results* results = nullptr;
  if (dbp_status st = dbp_check_csv(csv.c_str(), law.c_str(), cutoff, &results);
      st != DBP_OK) {
    return fail(st);
  }
  const char* report = nullptr;
  dbp_results_report(results, &report);
  std::printf("%s", report);
  int passed = 0;
  dbp_results_passed(results, &passed);
  dbp_results_free(results);
  return passed ? 0 : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deadbeat parking simulator and certificate checker"};
  app.require_subcommand(1);
  Options opt;
  app.add_option("--step", opt.step, "sample step (overrides the file)");
  app.add_option("--cutoff", opt.cutoff, "cutoff distance (overrides the file)");
  app.add_option("--out-dir", opt.out_dir, "directory for CSV/SVG/report files")
      ->capture_default_str();
  auto* workers_opt =
      app.add_option("--workers", opt.workers, "worker threads")
          ->check(CLI::PositiveNumber);
  app.add_option("--preset-dir", opt.preset_dir, "directory holding fig*.scn")
      ->capture_default_str();

  std::string file, preset, law;
  auto* run = app.add_subcommand("run", "run a scenario file");
  run->add_option("file", file, "scenario file")->required();
  auto* sweep = app.add_subcommand("sweep", "run a parameter sweep");
  sweep->add_option("file", file, "sweep file")->required();
  auto* pre = app.add_subcommand("preset", "reproduce a figure preset");
  pre->add_option("name", preset, "preset name")
      ->required()
      ->check(CLI::IsMember({"fig1", "fig2", "fig3", "fig4", "fig5"}));
  auto* check = app.add_subcommand("check", "re-certify a trajectory CSV");
  check->add_option("file", file, "trajectory CSV")->required();
  check->add_option("--law", law, "law spec, e.g. backstep,c1=1.01,c2=5,v=0.5")
      ->required();

  // Global flags are accepted after the subcommand as well.
  for (CLI::App* sub : {run, sweep, pre, check}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitError;
  }

  if (*run) return run_file(file, opt);
  if (*sweep) return run_sweep(file, opt, workers_opt->count() > 0);
  if (*pre) return run_file(opt.preset_dir + "/" + preset + ".scn", opt);
  return run_check(file, law, opt);
}
