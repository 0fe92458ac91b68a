#pragma once

#include <string_view>

#include "dbpark/geometry.h"

namespace dbpark {

/// Forward speed and steering rate applied to the vehicle.
struct Inputs {
  double v = 0.0;
  double omega = 0.0;

  bool operator==(const Inputs&) const = default;
};

/// The five steering laws.
///
///  - kBackstep: constant speed, 1/rho gain, finite-time parking with an
///    explicit envelope on B, omega and rho.
///  - kSmooth: constant speed, 1/rho^2 gain inside the backstepping variable,
///    so steering fades out before the target.
///  - kNoFront: like kSmooth but in sin(delta)/tan(delta/2) coordinates, so
///    delta never reaches +-pi (no crossing of the ray in front of the target).
///  - kDecel: kBackstep steering with speed v = c0 rho^(n/(n+1)).
///  - kCurbSafe: nonovershooting law that keeps delta in [0, pi), i.e. y <= 0.
enum class LawKind { kBackstep, kSmooth, kNoFront, kDecel, kCurbSafe };

struct Gains {
  double c0 = 0.0;  // kDecel only
  double c1 = 0.0;
  double c2 = 0.0;
  int n = 0;        // kDecel only

  bool operator==(const Gains&) const = default;
};

struct ControlLaw {
  LawKind kind = LawKind::kBackstep;
  Gains gains;
  /// Constant forward speed; ignored by kDecel.
  double v = 0.0;
  /// rho fed to every feedback formula is max(rho, rho_floor).
  double rho_floor = 0.0;

  bool operator==(const ControlLaw&) const = default;
};

/// Backstepping quantities recomputed from the state on every call. Never
/// integrated.
struct ZetaView {
  double zeta = 0.0;
  double omega_bar = 0.0;
};

/// Admissible delta interval for a law. Unbounded laws report +-infinity.
struct DeltaInterval {
  double lo;
  double hi;
};

std::string_view to_string(LawKind kind);
/// Accepts the names produced by to_string. Throws ParseError otherwise.
LawKind law_kind_from_string(std::string_view name);

/// Error norm whose envelope the law certifies.
ErrorNorm law_error_norm(LawKind kind);
DeltaInterval law_delta_interval(LawKind kind);
bool has_constant_speed(LawKind kind);

/// min(c1, c2).
double min_gain(const Gains& gains);

double clip_rho(double rho, double floor);

// Raw feedback formulas. `state.rho` is used as given: callers clip it first.
// Each throws DomainError when rho <= 0 or gamma is within kAngleEpsilon of
// +-pi/2, and the delta-restricted laws also reject delta outside their
// interval.
double omega_backstep(const PolarState& state, double v, double c1, double c2);
double omega_smooth(const PolarState& state, double v, double c1, double c2);
double omega_nofront(const PolarState& state, double v, double c1, double c2);
Inputs control_decel(const PolarState& state, double c0, double c1, double c2,
                     int n);
double omega_curbsafe(const PolarState& state, double v, double c1, double c2);

/// zeta and omega_bar for the law at the (clipped) state.
ZetaView backstep_view(const ControlLaw& law, const PolarState& state);

/// Feedback at `state`, with rho clipped to law.rho_floor.
Inputs evaluate(const ControlLaw& law, const PolarState& state);

/// max(0, -rho0 tan(gamma0) / sin(delta0)). The curb-safe law needs c1
/// strictly above this value. Throws DomainError unless delta0 is in (0, pi).
double curbsafe_c1_lower_bound(const PolarState& state0);

/// Largest constant speed for which the backstepping law keeps |omega| <= omega_max
/// along the whole run. Throws DomainError when B0 = 0 (any speed works).
double velocity_for_omega_limit(double omega_max, const PolarState& state0,
                                double c1, double c2);

/// max(c1 c2, c1 + c2).
double coupling_gain(double c1, double c2);

/// Checks gains and the initial state against the law's hypotheses. Throws
/// DomainError naming the violated condition.
void validate(const ControlLaw& law, const PolarState& state0);

/// Speed commanded by the law at the given (unclipped) distance.
double speed_at(const ControlLaw& law, double rho);

}  // namespace dbpark
