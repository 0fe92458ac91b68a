#pragma once

#include <optional>
#include <vector>

#include "dbpark/controllers.h"
#include "dbpark/errors.h"
#include "dbpark/geometry.h"

namespace dbpark {

struct PolarRates {
  double rho = 0.0;
  double delta = 0.0;
  double gamma = 0.0;
};

/// d(delta)/d(rho) and d(gamma)/d(rho): the dynamics with distance as the
/// independent variable.
struct RhoRates {
  double delta = 0.0;
  double gamma = 0.0;
};

/// rho' = -v cos(gamma), delta' = (v/rho) sin(gamma),
/// gamma' = (v/rho) sin(gamma) - omega. Throws DomainError when rho <= 0.
PolarRates polar_derivatives(const PolarState& state, const Inputs& inputs);

/// Throws DomainError when rho <= 0, v = 0 or cos(gamma) <= 0.
RhoRates rho_parameterized_derivatives(const PolarState& state,
                                       const Inputs& inputs);

enum class Termination { kCutoffReached, kHorizon, kGuardTripped };
enum class TimeScale { kPhysical, kLogDistance };

const char* to_string(Termination reason);

struct Sample {
  double t = 0.0;
  PolarState state;
  Inputs inputs;
};

/// Closed-loop run. Physical-time runs are sampled every `step`; log-distance
/// runs are sampled every `step_sigma` in ln(rho0/rho) and carry the
/// zero-dynamics clock in `t`. The last sample of a run that reached the
/// cutoff shell has zero inputs and nothing follows it.
struct Trajectory {
  ControlLaw law;
  std::vector<Sample> samples;
  std::optional<double> cutoff_time;
  double cutoff_rho = 0.0;
  double step = 0.0;
  int substeps = 1;
  double horizon = 0.0;
  Termination terminated = Termination::kHorizon;
  TimeScale time_scale = TimeScale::kPhysical;
  double step_sigma = 0.0;

  const PolarState& initial() const { return samples.front().state; }
};

/// Raised when a sample leaves the law's open domain. Holds the run up to and
/// including the offending sample.
class GuardTripped : public Error {
 public:
  GuardTripped(const std::string& what, Sample offending, Trajectory partial)
      : Error(ErrorCode::kGuardTripped, what),
        offending_(offending),
        partial_(std::move(partial)) {}

  const Sample& offending() const noexcept { return offending_; }
  const Trajectory& partial() const noexcept { return partial_; }

 private:
  Sample offending_;
  Trajectory partial_;
};

struct IntegrationOptions {
  /// Sample spacing; 0 selects default_step.
  double step = 0.0;
  double cutoff_rho = 0.01;
  /// Stop time. Must be positive.
  double horizon = 0.0;
  /// Fixed RK4 substeps per sample; 0 selects default_substeps.
  int substeps = 0;
};

/// min(1e-3, cutoff_rho / (10 v_shell)) where v_shell is the largest speed
/// the law can command just outside the cutoff shell.
double default_step(const ControlLaw& law, const PolarState& state0,
                    double cutoff_rho);

/// Upper estimate of the closed-loop stiffness |d(gamma')/d(tan gamma)| at
/// the clipping floor. Used to size the fixed substep.
double stiffness_bound(const ControlLaw& law, const PolarState& state0,
                       double cutoff_rho);

/// Smallest substep count keeping step * stiffness_bound / substeps <= 2,
/// inside the real-axis stability interval of classical RK4.
int default_substeps(const ControlLaw& law, const PolarState& state0,
                     double step, double cutoff_rho);

/// Classical fixed-step RK4 of the closed loop. Stops at the first sample
/// with rho <= cutoff_rho, or at the horizon. Throws GuardTripped if
/// |gamma| >= pi/2 - kAngleEpsilon, delta leaves the law's interval, or the
/// state stops being finite.
Trajectory integrate(const PolarState& state0, const ControlLaw& law,
                     const IntegrationOptions& options);

/// Scaled time and log-distance of a sample.
struct ZeroDynamicsClock {
  double scaled_time = 0.0;   // t / rho0
  double log_distance = 0.0;  // ln(rho0 / rho)
};

ZeroDynamicsClock zero_dynamics_clock(const Trajectory& traj,
                                      std::size_t index);

struct LogTimescaleOptions {
  double step_sigma = 1e-4;
  /// Stop once ln(rho0/rho) reaches this value; 0 means ln(rho0/cutoff_rho).
  double sigma_max = 0.0;
  double cutoff_rho = 0.01;
  int substeps = 0;
};

/// Integrates (delta, tan gamma, t/rho0) with sigma = ln(rho0/rho) as the
/// independent variable and rho = rho0 exp(-sigma). Same guards as
/// integrate.
Trajectory integrate_log_timescale(const PolarState& state0,
                                   const ControlLaw& law,
                                   const LogTimescaleOptions& options);

}  // namespace dbpark
