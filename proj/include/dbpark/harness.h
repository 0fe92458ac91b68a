#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "dbpark/certificates.h"
#include "dbpark/dynamics.h"
#include "dbpark/scenario.h"

namespace dbpark {

struct RunResult {
  Scenario scenario;
  std::optional<Trajectory> trajectory;
  std::optional<CertificateReport> report;
  /// Set when the run could not complete (guard trip, domain error).
  std::string error;

  bool passed() const { return error.empty() && report && report->overall(); }
};

/// Integrates the scenario and certifies the trajectory. Deterministic.
/// Throws on guard trips and domain errors.
RunResult run_scenario(const Scenario& scenario);

/// Runs every scenario of the set; per-run failures are recorded in
/// RunResult::error instead of thrown.
std::vector<RunResult> run_set(const ScenarioSet& set, std::size_t workers);

struct SweepRow {
  std::size_t index = 0;
  std::vector<double> values;
  enum class Status { kOk, kSkipped, kError } status = Status::kOk;
  std::string reason;
  bool passed = false;
  std::optional<double> parking_time;
  double max_abs_omega = 0.0;
  std::vector<std::string> failed_checks;
  /// Finalized scenario of the point (absent when skipped).
  std::optional<Scenario> scenario;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double pass_fraction() const;
};

/// Evaluates every grid point on `workers` threads. Rows come back in grid
/// order regardless of completion order; failures never abort the sweep.
SweepResult run_sweep(const SweepSpec& spec, std::size_t workers);

std::string sweep_table(const SweepSpec& spec, const SweepResult& result);

/// t,rho,delta,gamma,v,omega,x,y,theta with 17 significant digits.
std::string trajectory_csv(const Trajectory& traj);
void emit_csv(const Trajectory& traj, const std::string& path);

/// Reads a CSV in the emit_csv layout back into a trajectory under `law`.
/// A final row with v = omega = 0 marks the cutoff. Throws ParseError.
Trajectory trajectory_from_csv(const std::string& text, const ControlLaw& law,
                               double cutoff_rho);

enum class PlotKind { kXyTrack, kOmegaVsT, kAnglesVsT, kVVsT };

const char* to_string(PlotKind kind);

struct PlotSeries {
  std::string label;
  const Trajectory* trajectory = nullptr;
};

std::string render_svg(const std::vector<PlotSeries>& series, PlotKind kind);
void emit_svg(const std::vector<PlotSeries>& series, PlotKind kind,
              const std::string& path);

/// One line per check: `check <name> <PASS|FAIL> <worst_slack> <worst_time>`,
/// framed by run metadata and an `overall` line.
std::string serialize_report(const RunResult& run);

/// `title` line, one serialize_report block per run and a `summary` line.
std::string report_document(const std::string& title,
                            const std::vector<RunResult>& runs);

/// Writes the requested artifacts of every run into `out_dir`:
/// <title>_<run>.csv, <title>_<kind>.svg and <title>.report.
/// Returns the written paths.
std::vector<std::string> write_outputs(const std::string& title,
                                       const std::vector<RunResult>& runs,
                                       const std::string& out_dir);

/// Writes <title>_sweep.csv and one re-runnable scenario file per point
/// under <title>_points/.
std::vector<std::string> write_sweep_outputs(const SweepSpec& spec,
                                             const SweepResult& result,
                                             const std::string& out_dir);

}  // namespace dbpark
