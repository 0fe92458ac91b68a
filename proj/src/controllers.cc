#include "dbpark/controllers.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <fmt/format.h>

#include "dbpark/errors.h"

namespace dbpark {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_common(const PolarState& s, const char* law) {
  if (!(s.rho > 0.0)) {
    throw DomainError(fmt::format("{} law needs rho > 0, got {}", law, s.rho));
  }
  if (!(std::abs(s.gamma) < kPi / 2 - kAngleEpsilon)) {
    throw DomainError(
        fmt::format("{} law needs |gamma| < pi/2, got {}", law, s.gamma));
  }
  if (!std::isfinite(s.delta)) {
    throw DomainError(fmt::format("{} law got non-finite delta", law));
  }
}

void require_delta(const PolarState& s, LawKind kind) {
  const DeltaInterval iv = law_delta_interval(kind);
  if (!(s.delta > iv.lo && s.delta < iv.hi)) {
    throw DomainError(fmt::format("{} law needs delta in ({}, {}), got {}",
                                  to_string(kind), iv.lo, iv.hi, s.delta));
  }
}

// Common outer form (v/rho)(sin gamma + cos^3 gamma * omega_bar).
double outer_omega(const PolarState& s, double v, double omega_bar) {
  const double c = std::cos(s.gamma);
  return v / s.rho * (std::sin(s.gamma) + c * c * c * omega_bar);
}

ZetaView view_backstep(const PolarState& s, double c1, double c2) {
  const double tg = std::tan(s.gamma);
  ZetaView z;
  z.zeta = tg + c1 * s.delta;
  z.omega_bar = c2 * z.zeta + s.delta + c1 * tg;
  return z;
}

ZetaView view_smooth(const PolarState& s, double c1, double c2) {
  const double tg = std::tan(s.gamma);
  ZetaView z;
  z.zeta = tg + c1 / s.rho * s.delta;
  z.omega_bar = s.delta + (c1 * (tg + s.delta) + c2 * z.zeta) / s.rho;
  return z;
}

ZetaView view_nofront(const PolarState& s, double c1, double c2) {
  const double tg = std::tan(s.gamma);
  const double th = std::tan(s.delta / 2);
  const double sd = std::sin(s.delta);
  ZetaView z;
  z.zeta = tg + c1 / s.rho * sd;
  z.omega_bar = (1.0 + th * th) * 2.0 * th +
                (c1 * (std::cos(s.delta) * tg + sd) + c2 * z.zeta) / s.rho;
  return z;
}

ZetaView view_curbsafe(const PolarState& s, double c1, double c2) {
  const double tg = std::tan(s.gamma);
  const double th = std::tan(s.delta / 2);
  const double sd = std::sin(s.delta);
  const double k = 1.0 + th * th;
  ZetaView z;
  z.zeta = tg + c1 / s.rho * sd;
  z.omega_bar = (c1 * (sd + std::cos(s.delta) * tg) +
                 c2 * (1.0 + s.rho * s.rho) * k * k * z.zeta) /
                s.rho;
  return z;
}

}  // namespace

std::string_view to_string(LawKind kind) {
  switch (kind) {
    case LawKind::kBackstep:
      return "backstep";
    case LawKind::kSmooth:
      return "smooth";
    case LawKind::kNoFront:
      return "nofront";
    case LawKind::kDecel:
      return "decel";
    case LawKind::kCurbSafe:
      return "curbsafe";
  }
  return "?";
}

LawKind law_kind_from_string(std::string_view name) {
  for (LawKind k : {LawKind::kBackstep, LawKind::kSmooth, LawKind::kNoFront,
                    LawKind::kDecel, LawKind::kCurbSafe}) {
    if (to_string(k) == name) return k;
  }
  throw ParseError(fmt::format(
      "unknown law '{}' (expected backstep, smooth, nofront, decel or "
      "curbsafe)",
      name));
}

ErrorNorm law_error_norm(LawKind kind) {
  switch (kind) {
    case LawKind::kNoFront:
      return ErrorNorm::kHalf4;
    case LawKind::kCurbSafe:
      return ErrorNorm::kHalf1;
    default:
      return ErrorNorm::kEuclid;
  }
}

DeltaInterval law_delta_interval(LawKind kind) {
  switch (kind) {
    case LawKind::kNoFront:
      return {-kPi + kAngleEpsilon, kPi - kAngleEpsilon};
    case LawKind::kCurbSafe:
      // Closed at 0 up to the guard margin: delta decays onto 0 from above.
      return {-kAngleEpsilon, kPi - kAngleEpsilon};
    default:
      return {-kInf, kInf};
  }
}

bool has_constant_speed(LawKind kind) { return kind != LawKind::kDecel; }

double min_gain(const Gains& gains) { return std::min(gains.c1, gains.c2); }

double coupling_gain(double c1, double c2) {
  return std::max(c1 * c2, c1 + c2);
}

double clip_rho(double rho, double floor) { return std::max(rho, floor); }

double omega_backstep(const PolarState& s, double v, double c1, double c2) {
  require_common(s, "backstep");
  const double cg = std::cos(s.gamma);
  const double sg = std::sin(s.gamma);
  return v / s.rho *
         (sg + cg * cg * (cg * (1.0 + c1 * c2) * s.delta + (c1 + c2) * sg));
}

double omega_smooth(const PolarState& s, double v, double c1, double c2) {
  require_common(s, "smooth");
  return outer_omega(s, v, view_smooth(s, c1, c2).omega_bar);
}

double omega_nofront(const PolarState& s, double v, double c1, double c2) {
  require_common(s, "nofront");
  require_delta(s, LawKind::kNoFront);
  return outer_omega(s, v, view_nofront(s, c1, c2).omega_bar);
}

Inputs control_decel(const PolarState& s, double c0, double c1, double c2,
                     int n) {
  require_common(s, "decel");
  const double v = c0 * std::pow(s.rho, static_cast<double>(n) / (n + 1));
  return {v, omega_backstep(s, v, c1, c2)};
}

double omega_curbsafe(const PolarState& s, double v, double c1, double c2) {
  require_common(s, "curbsafe");
  require_delta(s, LawKind::kCurbSafe);
  return outer_omega(s, v, view_curbsafe(s, c1, c2).omega_bar);
}

ZetaView backstep_view(const ControlLaw& law, const PolarState& state) {
  PolarState s = state;
  s.rho = clip_rho(state.rho, law.rho_floor);
  require_common(s, to_string(law.kind).data());
  const Gains& g = law.gains;
  switch (law.kind) {
    case LawKind::kBackstep:
    case LawKind::kDecel:
      return view_backstep(s, g.c1, g.c2);
    case LawKind::kSmooth:
      return view_smooth(s, g.c1, g.c2);
    case LawKind::kNoFront:
      require_delta(s, law.kind);
      return view_nofront(s, g.c1, g.c2);
    case LawKind::kCurbSafe:
      require_delta(s, law.kind);
      return view_curbsafe(s, g.c1, g.c2);
  }
  return {};
}

Inputs evaluate(const ControlLaw& law, const PolarState& state) {
  PolarState s = state;
  s.rho = clip_rho(state.rho, law.rho_floor);
  const Gains& g = law.gains;
  switch (law.kind) {
    case LawKind::kBackstep:
      return {law.v, omega_backstep(s, law.v, g.c1, g.c2)};
    case LawKind::kSmooth:
      return {law.v, omega_smooth(s, law.v, g.c1, g.c2)};
    case LawKind::kNoFront:
      return {law.v, omega_nofront(s, law.v, g.c1, g.c2)};
    case LawKind::kDecel:
      return control_decel(s, g.c0, g.c1, g.c2, g.n);
    case LawKind::kCurbSafe:
      return {law.v, omega_curbsafe(s, law.v, g.c1, g.c2)};
  }
  return {};
}

double curbsafe_c1_lower_bound(const PolarState& s0) {
  if (!(s0.delta > 0.0 && s0.delta < kPi)) {
    throw DomainError(fmt::format(
        "curb-safe gain bound needs delta0 in (0, pi), got {}", s0.delta));
  }
  const double sd = std::sin(s0.delta);
  if (sd == 0.0) throw DomainError("curb-safe gain bound: sin(delta0) = 0");
  return std::max(0.0, -s0.rho * std::tan(s0.gamma) / sd);
}

double velocity_for_omega_limit(double omega_max, const PolarState& s0,
                                double c1, double c2) {
  if (!(omega_max > 0.0)) {
    throw DomainError("velocity_for_omega_limit needs omega_max > 0");
  }
  if (!(std::min(c1, c2) > 1.0)) {
    throw DomainError("velocity_for_omega_limit needs min(c1, c2) > 1");
  }
  const double b0 = error_norm(s0.delta, s0.gamma, ErrorNorm::kEuclid);
  if (b0 == 0.0) {
    throw DomainError(
        "initial state is the equilibrium (B0 = 0); every speed keeps "
        "omega = 0");
  }
  return omega_max * s0.rho / b0 /
         (std::sqrt(2.0) * gain_margin(c1) * (1.0 + coupling_gain(c1, c2)));
}

void validate(const ControlLaw& law, const PolarState& s0) {
  const auto name = to_string(law.kind);
  if (!(s0.rho > 0.0) || !std::isfinite(s0.rho)) {
    throw DomainError(fmt::format("initial rho must be positive, got {}",
                                  s0.rho));
  }
  if (!(std::abs(s0.gamma) < kPi / 2 - kAngleEpsilon)) {
    throw DomainError(fmt::format(
        "{} law needs initial gamma in (-pi/2, pi/2), got {}", name,
        s0.gamma));
  }
  if (!std::isfinite(s0.delta)) {
    throw DomainError("initial delta must be finite");
  }
  if (!(law.rho_floor >= 0.0)) {
    throw DomainError("rho_floor must be >= 0");
  }
  const Gains& g = law.gains;
  if (law.kind != LawKind::kDecel && !(law.v > 0.0)) {
    throw DomainError(fmt::format("{} law needs a constant speed v > 0", name));
  }
  switch (law.kind) {
    case LawKind::kBackstep:
      if (!(min_gain(g) > 1.0)) {
        throw DomainError(fmt::format(
            "backstep law needs min(c1, c2) > 1, got c1 = {}, c2 = {}", g.c1,
            g.c2));
      }
      break;
    case LawKind::kSmooth:
    case LawKind::kNoFront:
      if (!(min_gain(g) > 0.0)) {
        throw DomainError(fmt::format(
            "{} law needs min(c1, c2) > 0, got c1 = {}, c2 = {}", name, g.c1,
            g.c2));
      }
      if (law.kind == LawKind::kNoFront &&
          !(std::abs(s0.delta) < kPi - kAngleEpsilon)) {
        throw DomainError(fmt::format(
            "nofront law needs initial delta in (-pi, pi), got {}", s0.delta));
      }
      break;
    case LawKind::kDecel:
      if (g.n < 1) {
        throw DomainError(
            fmt::format("decel law needs a positive integer n, got {}", g.n));
      }
      if (!(g.c0 > 0.0)) {
        throw DomainError(fmt::format("decel law needs c0 > 0, got {}", g.c0));
      }
      if (!(min_gain(g) > 1.0 / (g.n + 1))) {
        throw DomainError(fmt::format(
            "decel law needs min(c1, c2) > 1/(n+1) = {}, got c1 = {}, c2 = {}",
            1.0 / (g.n + 1), g.c1, g.c2));
      }
      break;
    case LawKind::kCurbSafe: {
      if (!(g.c2 > 0.0)) {
        throw DomainError(
            fmt::format("curbsafe law needs c2 > 0, got {}", g.c2));
      }
      if (!(s0.delta > 0.0 && s0.delta < kPi - kAngleEpsilon)) {
        throw DomainError(fmt::format(
            "curbsafe law needs initial delta in (0, pi), got {}", s0.delta));
      }
      const double bound = curbsafe_c1_lower_bound(s0);
      if (!(g.c1 > bound)) {
        throw DomainError(fmt::format(
            "curbsafe law needs c1 > max(0, -rho0 tan(gamma0) / sin(delta0)) "
            "= {}, got c1 = {}",
            bound, g.c1));
      }
      break;
    }
  }
}

double speed_at(const ControlLaw& law, double rho) {
  if (has_constant_speed(law.kind)) return law.v;
  const int n = law.gains.n;
  return law.gains.c0 *
         std::pow(clip_rho(rho, law.rho_floor), static_cast<double>(n) / (n + 1));
}

}  // namespace dbpark
