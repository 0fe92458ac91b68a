#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dbpark/controllers.h"
#include "dbpark/dynamics.h"

namespace dbpark {

/// Sample-wise inequality lhs <= rhs passes when
/// lhs - rhs <= absolute + relative * |rhs|.
struct Tolerance {
  double absolute = 1e-6;
  double relative = 1e-4;

  double allowance(double rhs) const;
};

struct CheckResult {
  std::string name;
  bool passed = true;
  /// Supremum over samples of (lhs - rhs - allowance). <= 0 means every
  /// sample passed with margin. For fraction-based checks this is the worst
  /// single sample and `passed` follows the fraction rule instead.
  double worst_slack = 0.0;
  double worst_time = 0.0;
  /// False for fitted-shape checks whose constants come from the data.
  bool exact = true;
};

/// Upper envelopes B^2 <= N1 exp(-beta1 / (1 - t/t1)) B0^2 and
/// |omega| <= v N2 exp(-beta2 / (1 - t/t1)) scale B0 fitted to a run of
/// the smooth, no-front or curb-safe law. The shape horizon t1 is the
/// backstepping arrival bound evaluated with the law's c1; beta comes from a
/// log-linear regression over samples with B >= 1e-12 B0 and N is then
/// raised until the envelope covers every sample. N can exceed the double
/// range, so only its logarithm is kept.
struct FittedConstants {
  double log_n1 = 0.0;
  double beta1 = 0.0;
  double log_n2 = 0.0;
  double beta2 = 0.0;
  double shape_horizon = 0.0;
  /// (rho0/v) sqrt(1 + N1 exp(-beta1) B0^2): arrival bound implied by the
  /// fitted B envelope.
  double t1 = 0.0;
  /// RMS of the log-linear regression residuals.
  double residual_b = 0.0;
  double residual_omega = 0.0;
  std::size_t fitted_samples = 0;
};

struct CertificateReport {
  LawKind law = LawKind::kBackstep;
  std::vector<CheckResult> checks;
  std::optional<FittedConstants> fitted;

  bool overall() const;
  /// Null when no check has that name.
  const CheckResult* find(const std::string& name) const;
};

/// Arrival-time bound of the backstepping law:
/// (rho0/v) sqrt(1 + M(c1)^2 B0^2).
double arrival_time_backstep(double rho0, double v, double c1, double b0);

/// Arrival-time bound of the decelerating law:
/// (n+1) rho0^(1/(n+1)) / c0 * sqrt(1 + M(c1)^2 B0^2).
double arrival_time_decel(double rho0, double c0, int n, double c1,
                          double b0);

/// sqrt(2) (1 + max(c1 c2, c1 + c2)) M(c1), the omega-envelope constant of
/// the decelerating law.
double decel_omega_constant(double c1, double c2);

/// Arrival-time bound used for horizons and envelopes. The smooth, no-front
/// and curb-safe laws have no closed form, so the backstepping formula with
/// their c1 stands in.
double arrival_horizon(const ControlLaw& law, const PolarState& state0);

/// Result of the centered-difference check of dV/drho >= a V / rho.
struct DifferentialCheck {
  std::size_t interior = 0;
  std::size_t violations = 0;
  double worst_violation = 0.0;  // largest (rhs - lhs - tolerance), > 0 fails
  double worst_time = 0.0;

  double pass_fraction() const;
};

/// Lyapunov rate check for backstepping runs: V = delta^2 + zeta^2 with
/// zeta = tan(gamma) + c1 delta must satisfy dV/drho >= 2 min(c1,c2) V / rho.
/// dV/drho is a centered difference over neighbouring samples; each sample
/// gets a tolerance of 10 |D+ - D-|, where D+ and D- are the one-sided
/// differences (10 h times the local derivative estimate of dV/drho).
DifferentialCheck lyapunov_rate_check(const Trajectory& traj);

/// Every sampled check applicable to the trajectory's law. Throws
/// MismatchedLaw when the trajectory was produced under a different law.
CertificateReport check_trajectory(const Trajectory& traj,
                                   const ControlLaw& law,
                                   const Tolerance& tol = {});

enum class LemmaVerdict { kVerified, kConclusionViolated, kHypothesisNotMet };

struct LemmaResult {
  LemmaVerdict verdict = LemmaVerdict::kVerified;
  /// Samples where the hypothesis (or, if it held, the conclusion) failed.
  std::vector<std::size_t> flagged;
  /// Supremum of (value - envelope - allowance) over the conclusion.
  double worst_slack = 0.0;
};

const char* to_string(LemmaVerdict verdict);

/// Comparison gain of the distance-as-time lemma:
/// kLinear   dV/drho >= (a/rho) V   =>  V <= V0 (rho/rho0)^a
/// kQuadratic dV/drho >= (a/rho^2) V =>  V <= V0 exp(a (1/rho0 - 1/rho))
enum class ComparisonGain { kLinear, kQuadratic };

struct RhoValue {
  double rho = 0.0;
  double value = 0.0;
};

/// Samples must be ordered with rho strictly decreasing, all in (0, rho0].
/// The hypothesis is tested with centered differences at interior samples
/// using the same 10 |D+ - D-| tolerance as lyapunov_rate_check. Throws
/// InvalidArgument on malformed input.
LemmaResult comparison_lemma_check(std::span<const RhoValue> samples, double a,
                                   ComparisonGain gain,
                                   const Tolerance& tol = {});

/// Strictly increasing map on [0, 1] with alpha(0) = 0, from a fixed catalog.
class ClassKFunction {
 public:
  enum class Form { kLinear, kPower, kScaled };

  /// gain * s
  static ClassKFunction linear(double gain);
  /// gain * s^exponent
  static ClassKFunction power(double gain, double exponent);
  /// gain * s / (scale + s)
  static ClassKFunction scaled(double gain, double scale);

  double operator()(double s) const;
  Form form() const { return form_; }

 private:
  ClassKFunction(Form form, double gain, double param);

  Form form_;
  double gain_;
  double param_;
};

/// Arrival-time lemma: if cos(gamma) > 0 and tan^2(gamma) <= alpha(rho/rho0)
/// at every sample of a constant-speed run, then
/// rho(t) <= rho0 (1 - t/t1) with t1 = (rho0/v) sqrt(1 + alpha(1)).
/// Returns kHypothesisNotMet (with the offending samples) instead of a
/// verdict when the premise fails. Throws InvalidArgument when v is not
/// constant along the run.
LemmaResult arrival_lemma_check(const Trajectory& traj,
                                const ClassKFunction& alpha,
                                const Tolerance& tol = {});

}  // namespace dbpark
