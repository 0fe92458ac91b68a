#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "dbpark/controllers.h"
#include "dbpark/geometry.h"

namespace dbpark {

enum OutputFlags : unsigned {
  kOutputCsv = 1u << 0,
  kOutputSvg = 1u << 1,
  kOutputReport = 1u << 2,
};

/// One closed-loop run as described by a scenario file. Fields marked auto
/// are resolved by finalize().
struct Scenario {
  std::string name = "run";
  PolarState initial;
  /// Set when the file gave a Cartesian pose; `initial` is derived from it.
  std::optional<CartesianPose> initial_pose;
  ControlLaw law;
  bool c1_auto = false;
  /// When set, law.v is chosen so that |omega| stays within this bound.
  std::optional<double> omega_limit;
  bool rho_floor_auto = true;
  double step = 0.0;  // 0 = auto
  int substeps = 0;   // 0 = auto
  double cutoff_rho = 0.01;
  std::optional<double> horizon;  // empty = 10 x arrival bound
  unsigned outputs = kOutputCsv | kOutputSvg | kOutputReport;
  std::string note;
};

/// The runs of one scenario file, in file order.
struct ScenarioSet {
  std::string title;
  std::vector<Scenario> runs;
};

/// Resolves auto fields (curb-safe c1 = bound + 1, speed from an omega
/// limit, rho_floor = cutoff) and validates the law against the initial
/// state. Throws DomainError naming the violated condition.
void finalize(Scenario& scenario);

/// Horizon actually used: explicit value or 10 x arrival bound.
double resolved_horizon(const Scenario& scenario);

/// Parses an INI-style scenario file. Top-level keys are defaults; each
/// `[run NAME]` section is one run overriding them. A file without run
/// sections is a single run. Every run is finalized. Throws ParseError or
/// DomainError.
ScenarioSet parse_scenario_text(const std::string& text);
ScenarioSet load_scenario_file(const std::string& path);

/// Sets one scenario key (same keys and syntax as the file) without
/// finalizing. Throws ParseError for unknown keys or bad values.
void apply_key_value(Scenario& scenario, const std::string& key,
                     const std::string& value);

/// Applies a key = value override to every run (before finalize). Used for
/// the --step and --cutoff command-line flags.
void apply_override(ScenarioSet& set, const std::string& key,
                    const std::string& value);

/// Single-run file that reproduces `scenario` exactly when parsed again.
std::string serialize_scenario(const Scenario& scenario);

/// Parses "kind,key=value,..." (e.g. "backstep,c1=1.01,c2=5,v=0.5").
/// Missing rho_floor defaults to `default_floor`.
ControlLaw parse_law_spec(const std::string& spec, double default_floor);
std::string format_law(const ControlLaw& law);

/// Parses a real number or a multiple of pi: "0.5", "-pi/2.5", "3*pi/4",
/// "pi". Throws ParseError.
double parse_angle_expr(const std::string& text);

/// Grid axes a sweep can vary, in row-major order (last axis fastest).
enum class SweepAxis { kDelta0, kGamma0, kC1, kC2, kV };

struct SweepSpec {
  std::string title;
  Scenario base;
  std::vector<std::pair<SweepAxis, std::vector<double>>> grid;
  std::size_t workers = 1;

  /// Cross-product size; 0 when no axis is given or any axis is empty.
  std::size_t point_count() const;
  /// Axis values of grid point `index`.
  std::vector<double> point_values(std::size_t index) const;
};

const char* to_string(SweepAxis axis);

/// Parses a sweep file: a single-run scenario plus `grid.<axis> = list`
/// keys and an optional `workers` key. The base is not finalized; every
/// grid point is finalized on its own.
SweepSpec parse_sweep_text(const std::string& text);
SweepSpec load_sweep_file(const std::string& path);

}  // namespace dbpark
