#include "dbpark/dbpark.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "dbpark/errors.h"
#include "dbpark/harness.h"
#include "dbpark/scenario.h"

struct dbp_scenario_set {
  dbpark::ScenarioSet set;
};

struct dbp_results {
  std::string title;
  std::vector<dbpark::RunResult> runs;
  std::string report;  // built lazily
  std::vector<std::string> csv;
};

struct dbp_sweep {
  dbpark::SweepSpec spec;
};

struct dbp_sweep_results {
  dbpark::SweepSpec spec;
  dbpark::SweepResult result;
  std::string table;
};

namespace {

thread_local std::string g_last_error;

dbp_status status_of(dbpark::ErrorCode code) {
  using dbpark::ErrorCode;
  switch (code) {
    case ErrorCode::kDomain:
      return DBP_ERR_DOMAIN;
    case ErrorCode::kDegenerateOrigin:
      return DBP_ERR_DEGENERATE_ORIGIN;
    case ErrorCode::kGuardTripped:
      return DBP_ERR_GUARD_TRIPPED;
    case ErrorCode::kMismatchedLaw:
      return DBP_ERR_MISMATCHED_LAW;
    case ErrorCode::kParse:
      return DBP_ERR_PARSE;
    case ErrorCode::kInvalidArgument:
      return DBP_ERR_INVALID_ARGUMENT;
    case ErrorCode::kIo:
      return DBP_ERR_IO;
  }
  return DBP_ERR_INTERNAL;
}

// Runs f, translating exceptions into a status and the thread's last error.
template <typename F>
dbp_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return DBP_OK;
  } catch (const dbpark::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return DBP_ERR_INTERNAL;
}

void require(bool ok, const char* what) {
  if (!ok) throw dbpark::InvalidArgument(what);
}

std::string read_text(const char* path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw dbpark::IoError(std::string("cannot open ") + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

dbp_results* make_results(std::string title,
                          std::vector<dbpark::RunResult> runs) {
  auto* r = new dbp_results;
  r->title = std::move(title);
  r->runs = std::move(runs);
  r->csv.resize(r->runs.size());
  return r;
}

}  // namespace

extern "C" {

const char* dbp_last_error(void) { return g_last_error.c_str(); }

const char* dbp_status_name(dbp_status status) {
  switch (status) {
    case DBP_OK:
      return "ok";
    case DBP_ERR_DOMAIN:
      return "domain error";
    case DBP_ERR_DEGENERATE_ORIGIN:
      return "degenerate origin";
    case DBP_ERR_GUARD_TRIPPED:
      return "guard tripped";
    case DBP_ERR_MISMATCHED_LAW:
      return "mismatched law";
    case DBP_ERR_PARSE:
      return "parse error";
    case DBP_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case DBP_ERR_IO:
      return "I/O error";
    case DBP_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

dbp_status dbp_scenario_load(const char* path, dbp_scenario_set** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new dbp_scenario_set{dbpark::load_scenario_file(path)};
  });
}

dbp_status dbp_scenario_parse(const char* text, dbp_scenario_set** out) {
  return guarded([&] {
    require(text && out, "null argument");
    *out = new dbp_scenario_set{dbpark::parse_scenario_text(text)};
  });
}

dbp_status dbp_scenario_override(dbp_scenario_set* set, const char* key,
                                 const char* value) {
  return guarded([&] {
    require(set && key && value, "null argument");
    dbpark::ScenarioSet copy = set->set;
    dbpark::apply_override(copy, key, value);
    set->set = std::move(copy);
  });
}

dbp_status dbp_scenario_title(const dbp_scenario_set* set, const char** out) {
  return guarded([&] {
    require(set && out, "null argument");
    *out = set->set.title.c_str();
  });
}

dbp_status dbp_scenario_count(const dbp_scenario_set* set, size_t* out) {
  return guarded([&] {
    require(set && out, "null argument");
    *out = set->set.runs.size();
  });
}

void dbp_scenario_free(dbp_scenario_set* set) { delete set; }

dbp_status dbp_run(const dbp_scenario_set* set, size_t workers,
                   dbp_results** out) {
  return guarded([&] {
    require(set && out, "null argument");
    require(workers >= 1, "workers must be >= 1");
    *out = make_results(set->set.title, dbpark::run_set(set->set, workers));
  });
}

dbp_status dbp_results_count(const dbp_results* results, size_t* out) {
  return guarded([&] {
    require(results && out, "null argument");
    *out = results->runs.size();
  });
}

dbp_status dbp_results_info(const dbp_results* results, size_t index,
                            dbp_run_info* out) {
  return guarded([&] {
    require(results && out, "null argument");
    require(index < results->runs.size(), "run index out of range");
    const dbpark::RunResult& r = results->runs[index];
    dbp_run_info info{};
    info.name = r.scenario.name.c_str();
    info.passed = r.passed() ? 1 : 0;
    info.completed = r.error.empty() ? 1 : 0;
    if (r.trajectory) {
      info.samples = r.trajectory->samples.size();
      info.reached_cutoff = r.trajectory->cutoff_time ? 1 : 0;
      info.cutoff_time = r.trajectory->cutoff_time.value_or(0.0);
      for (const dbpark::Sample& s : r.trajectory->samples) {
        info.max_abs_omega = std::max(info.max_abs_omega, std::abs(s.inputs.omega));
      }
    }
    *out = info;
  });
}

dbp_status dbp_results_passed(const dbp_results* results, int* out) {
  return guarded([&] {
    require(results && out, "null argument");
    bool all = true;
    for (const dbpark::RunResult& r : results->runs) all &= r.passed();
    *out = all ? 1 : 0;
  });
}

dbp_status dbp_results_report(const dbp_results* results, const char** out) {
  return guarded([&] {
    require(results && out, "null argument");
    auto* mut = const_cast<dbp_results*>(results);
    if (mut->report.empty()) {
      mut->report = dbpark::report_document(results->title, results->runs);
    }
    *out = mut->report.c_str();
  });
}

dbp_status dbp_results_csv(const dbp_results* results, size_t index,
                           const char** out) {
  return guarded([&] {
    require(results && out, "null argument");
    require(index < results->runs.size(), "run index out of range");
    const dbpark::RunResult& r = results->runs[index];
    require(r.trajectory.has_value(), "run has no trajectory");
    auto* mut = const_cast<dbp_results*>(results);
    if (mut->csv[index].empty()) {
      mut->csv[index] = dbpark::trajectory_csv(*r.trajectory);
    }
    *out = mut->csv[index].c_str();
  });
}

dbp_status dbp_results_write(const dbp_results* results, const char* out_dir) {
  return guarded([&] {
    require(results && out_dir, "null argument");
    dbpark::write_outputs(results->title, results->runs, out_dir);
  });
}

void dbp_results_free(dbp_results* results) { delete results; }

dbp_status dbp_sweep_load(const char* path, dbp_sweep** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new dbp_sweep{dbpark::load_sweep_file(path)};
  });
}

dbp_status dbp_sweep_parse(const char* text, dbp_sweep** out) {
  return guarded([&] {
    require(text && out, "null argument");
    *out = new dbp_sweep{dbpark::parse_sweep_text(text)};
  });
}

dbp_status dbp_sweep_override(dbp_sweep* sweep, const char* key,
                              const char* value) {
  return guarded([&] {
    require(sweep && key && value, "null argument");
    dbpark::apply_key_value(sweep->spec.base, key, value);
  });
}

dbp_status dbp_sweep_point_count(const dbp_sweep* sweep, size_t* out) {
  return guarded([&] {
    require(sweep && out, "null argument");
    *out = sweep->spec.point_count();
  });
}

dbp_status dbp_sweep_workers(const dbp_sweep* sweep, size_t* out) {
  return guarded([&] {
    require(sweep && out, "null argument");
    *out = sweep->spec.workers;
  });
}

dbp_status dbp_sweep_run(const dbp_sweep* sweep, size_t workers,
                         dbp_sweep_results** out) {
  return guarded([&] {
    require(sweep && out, "null argument");
    auto* r = new dbp_sweep_results;
    r->spec = sweep->spec;
    try {
      r->result = dbpark::run_sweep(sweep->spec,
                                    workers ? workers : sweep->spec.workers);
      r->table = dbpark::sweep_table(r->spec, r->result);
    } catch (...) {
      delete r;
      throw;
    }
    *out = r;
  });
}

dbp_status dbp_sweep_table(const dbp_sweep_results* results, const char** out) {
  return guarded([&] {
    require(results && out, "null argument");
    *out = results->table.c_str();
  });
}

dbp_status dbp_sweep_pass_fraction(const dbp_sweep_results* results,
                                   double* out) {
  return guarded([&] {
    require(results && out, "null argument");
    *out = results->result.pass_fraction();
  });
}

dbp_status dbp_sweep_write(const dbp_sweep_results* results,
                           const char* out_dir) {
  return guarded([&] {
    require(results && out_dir, "null argument");
    dbpark::write_sweep_outputs(results->spec, results->result, out_dir);
  });
}

void dbp_sweep_free(dbp_sweep* sweep) { delete sweep; }
void dbp_sweep_results_free(dbp_sweep_results* results) { delete results; }

dbp_status dbp_check_csv(const char* path, const char* law_spec,
                         double cutoff_rho, dbp_results** out) {
  return guarded([&] {
    require(path && law_spec && out, "null argument");
    require(cutoff_rho > 0.0, "cutoff must be positive");
    const dbpark::ControlLaw law = dbpark::parse_law_spec(law_spec, cutoff_rho);
    dbpark::RunResult run;
    run.trajectory = dbpark::trajectory_from_csv(read_text(path), law, cutoff_rho);
    run.scenario.name = std::filesystem::path(path).stem().string();
    run.scenario.law = law;
    run.scenario.initial = run.trajectory->initial();
    run.scenario.cutoff_rho = cutoff_rho;
    run.report = dbpark::check_trajectory(*run.trajectory, law);
    std::vector<dbpark::RunResult> runs;
    runs.push_back(std::move(run));
    *out = make_results("check", std::move(runs));
  });
}

dbp_status dbp_cart_to_polar(dbp_pose pose, dbp_polar* out) {
  return guarded([&] {
    require(out, "null argument");
    const dbpark::PolarState s = dbpark::cart_to_polar({pose.x, pose.y, pose.theta});
    *out = {s.rho, s.delta, s.gamma};
  });
}

dbp_status dbp_polar_to_cart(dbp_polar state, dbp_pose* out) {
  return guarded([&] {
    require(out, "null argument");
    const dbpark::CartesianPose p =
        dbpark::polar_to_cart({state.rho, state.delta, state.gamma});
    *out = {p.x, p.y, p.theta};
  });
}

dbp_status dbp_control(const char* law_spec, dbp_polar state, double* v,
                       double* omega) {
  return guarded([&] {
    require(law_spec && v && omega, "null argument");
    const dbpark::ControlLaw law = dbpark::parse_law_spec(law_spec, 0.0);
    const dbpark::Inputs in =
        dbpark::evaluate(law, {state.rho, state.delta, state.gamma});
    *v = in.v;
    *omega = in.omega;
  });
}

dbp_status dbp_simulate(const char* law_spec, dbp_polar initial, double step,
                        double cutoff_rho, double horizon, dbp_results** out) {
  return guarded([&] {
    require(law_spec && out, "null argument");
    dbpark::Scenario s;
    s.name = "simulate";
    s.law = dbpark::parse_law_spec(law_spec, cutoff_rho);
    s.rho_floor_auto = false;
    s.initial = {initial.rho, initial.delta, initial.gamma};
    s.step = step;
    s.cutoff_rho = cutoff_rho;
    if (horizon > 0.0) s.horizon = horizon;
    dbpark::finalize(s);
    std::vector<dbpark::RunResult> runs;
    try {
      runs.push_back(dbpark::run_scenario(s));
    } catch (const dbpark::GuardTripped& e) {
      dbpark::RunResult r;
      r.scenario = s;
      r.trajectory = e.partial();
      r.error = e.what();
      runs.push_back(std::move(r));
    }
    *out = make_results("simulate", std::move(runs));
  });
}

}  // extern "C"
