#include "dbpark/dynamics.h"

#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>

namespace dbpark {
namespace {

// Speed for the stiffness and step estimates; the decelerating law is
// evaluated at the distance where it matters.
double speed_scale(const ControlLaw& law, double rho) {
  if (has_constant_speed(law.kind)) return law.v;
  const int n = law.gains.n;
  return law.gains.c0 * std::pow(rho, static_cast<double>(n) / (n + 1));
}

// Trace of the linearised (delta, tan gamma) loop in the law's natural time
// scale (ln(rho0/rho) for the 1/rho laws, 1/rho for the 1/rho^2 laws),
// converted to physical time at distance rho.
double stiffness_at(const ControlLaw& law, double rho, double delta) {
  const Gains& g = law.gains;
  const double v = speed_scale(law, rho);
  switch (law.kind) {
    case LawKind::kBackstep:
    case LawKind::kDecel:
      return (g.c1 + g.c2) * v / rho;
    case LawKind::kSmooth:
    case LawKind::kNoFront:
      return (g.c1 + g.c2) * v / (rho * rho);
    case LawKind::kCurbSafe: {
      const double th = std::tan(std::min(std::abs(delta), kPi - 1e-3) / 2);
      const double k = (1.0 + th * th) * (1.0 + th * th);
      return (g.c1 + g.c2 * (1.0 + rho * rho) * k) * v / (rho * rho);
    }
  }
  return 0.0;
}

double effective_floor(const ControlLaw& law, double cutoff_rho) {
  return std::max(law.rho_floor, 0.9 * cutoff_rho);
}

struct GuardFailure {
  bool failed = false;
  std::string reason;
};

GuardFailure guard(const ControlLaw& law, const PolarState& s) {
  if (!std::isfinite(s.rho) || !std::isfinite(s.delta) ||
      !std::isfinite(s.gamma)) {
    return {true, "state is not finite"};
  }
  if (!(s.rho > 0.0)) return {true, fmt::format("rho = {} <= 0", s.rho)};
  if (!(std::abs(s.gamma) < kPi / 2 - kAngleEpsilon)) {
    return {true, fmt::format("|gamma| = {} reached pi/2", std::abs(s.gamma))};
  }
  const DeltaInterval iv = law_delta_interval(law.kind);
  if (!(s.delta > iv.lo && s.delta < iv.hi)) {
    return {true, fmt::format("delta = {} left ({}, {})", s.delta, iv.lo,
                              iv.hi)};
  }
  return {};
}

PolarState axpy(const PolarState& s, double h, const PolarRates& k) {
  return {s.rho + h * k.rho, s.delta + h * k.delta, s.gamma + h * k.gamma};
}

PolarRates closed_loop(const ControlLaw& law, const PolarState& s) {
  return polar_derivatives(s, evaluate(law, s));
}

PolarState rk4_step(const ControlLaw& law, const PolarState& s, double h) {
  const PolarRates k1 = closed_loop(law, s);
  const PolarRates k2 = closed_loop(law, axpy(s, h / 2, k1));
  const PolarRates k3 = closed_loop(law, axpy(s, h / 2, k2));
  const PolarRates k4 = closed_loop(law, axpy(s, h, k3));
  return {s.rho + h / 6 * (k1.rho + 2 * k2.rho + 2 * k3.rho + k4.rho),
          s.delta + h / 6 * (k1.delta + 2 * k2.delta + 2 * k3.delta + k4.delta),
          s.gamma + h / 6 * (k1.gamma + 2 * k2.gamma + 2 * k3.gamma + k4.gamma)};
}

[[noreturn]] void trip(Trajectory traj, const Sample& offending,
                       const std::string& reason) {
  traj.terminated = Termination::kGuardTripped;
  traj.samples.push_back(offending);
  throw GuardTripped(fmt::format("guard tripped at t = {}: {}", offending.t,
                                 reason),
                     offending, std::move(traj));
}

// Log-distance state: (delta, tan gamma, t / rho0).
using LogState = std::array<double, 3>;

PolarState from_log(const LogState& y, double rho0, double sigma) {
  return {rho0 * std::exp(-sigma), y[0], std::atan(y[1])};
}

LogState log_rates(const ControlLaw& law, double rho0, double sigma,
                   const LogState& y) {
  const PolarState s = from_log(y, rho0, sigma);
  const Inputs in = evaluate(law, s);
  if (!(in.v > 0.0)) throw DomainError("log-distance time needs v > 0");
  const double cg = std::cos(s.gamma);
  const double tg = y[1];
  return {tg, (1.0 + tg * tg) * (tg - s.rho * in.omega / (in.v * cg)),
          s.rho / (rho0 * in.v * cg)};
}

LogState log_rk4_step(const ControlLaw& law, double rho0, double sigma,
                      const LogState& y, double h) {
  auto add = [](const LogState& a, double c, const LogState& b) {
    return LogState{a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2]};
  };
  const LogState k1 = log_rates(law, rho0, sigma, y);
  const LogState k2 = log_rates(law, rho0, sigma + h / 2, add(y, h / 2, k1));
  const LogState k3 = log_rates(law, rho0, sigma + h / 2, add(y, h / 2, k2));
  const LogState k4 = log_rates(law, rho0, sigma + h, add(y, h, k3));
  LogState out;
  for (std::size_t i = 0; i < 3; ++i) {
    out[i] = y[i] + h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  }
  return out;
}

}  // namespace

const char* to_string(Termination reason) {
  switch (reason) {
    case Termination::kCutoffReached:
      return "CUTOFF_REACHED";
    case Termination::kHorizon:
      return "HORIZON";
    case Termination::kGuardTripped:
      return "GUARD_TRIPPED";
  }
  return "?";
}

PolarRates polar_derivatives(const PolarState& s, const Inputs& in) {
  if (!(s.rho > 0.0)) {
    throw DomainError(fmt::format("polar dynamics need rho > 0, got {}", s.rho));
  }
  const double sg = std::sin(s.gamma);
  return {-in.v * std::cos(s.gamma), in.v / s.rho * sg,
          in.v / s.rho * sg - in.omega};
}

RhoRates rho_parameterized_derivatives(const PolarState& s, const Inputs& in) {
  if (!(s.rho > 0.0)) {
    throw DomainError("distance-parameterised dynamics need rho > 0");
  }
  if (!(std::abs(s.gamma) < kPi / 2 - kAngleEpsilon)) {
    throw DomainError("distance-parameterised dynamics need cos(gamma) > 0");
  }
  const double cg = std::cos(s.gamma);
  if (in.v == 0.0) {
    throw DomainError("distance-parameterised dynamics need v != 0");
  }
  const double tg = std::tan(s.gamma);
  return {-tg / s.rho, -tg / s.rho + in.omega / (in.v * cg)};
}

double default_step(const ControlLaw& law, const PolarState& state0,
                    double cutoff_rho) {
  double v_shell = law.v;
  if (!has_constant_speed(law.kind)) {
    v_shell = speed_scale(law, std::min(2 * cutoff_rho, state0.rho));
  }
  if (!(v_shell > 0.0)) return 1e-3;
  return std::min(1e-3, cutoff_rho / (10 * v_shell));
}

double stiffness_bound(const ControlLaw& law, const PolarState& state0,
                       double cutoff_rho) {
  const double floor = effective_floor(law, cutoff_rho);
  const double near = stiffness_at(law, floor, 0.0);
  const double start = stiffness_at(law, std::max(state0.rho, floor),
                                    state0.delta);
  return std::max(near, start);
}

int default_substeps(const ControlLaw& law, const PolarState& state0,
                     double step, double cutoff_rho) {
  const double lambda = stiffness_bound(law, state0, cutoff_rho);
  return std::max(1, static_cast<int>(std::ceil(step * lambda / 2.0)));
}

Trajectory integrate(const PolarState& state0, const ControlLaw& law,
                     const IntegrationOptions& options) {
  validate(law, state0);
  if (!(options.cutoff_rho > 0.0)) {
    throw InvalidArgument("cutoff_rho must be positive");
  }
  if (!(options.horizon > 0.0)) {
    throw InvalidArgument("horizon must be positive");
  }
  if (options.step < 0.0 || options.substeps < 0) {
    throw InvalidArgument("step and substeps must be non-negative");
  }

  Trajectory traj;
  traj.law = law;
  traj.cutoff_rho = options.cutoff_rho;
  traj.horizon = options.horizon;
  traj.time_scale = TimeScale::kPhysical;
  traj.step = options.step > 0.0
                  ? options.step
                  : default_step(law, state0, options.cutoff_rho);
  traj.substeps = options.substeps > 0
                      ? options.substeps
                      : default_substeps(law, state0, traj.step,
                                         options.cutoff_rho);
  const double h = traj.step;
  const double h_sub = h / traj.substeps;
  const auto max_steps =
      static_cast<std::size_t>(std::ceil(options.horizon / h));
  traj.samples.reserve(std::min<std::size_t>(max_steps + 1, 1u << 20));

  PolarState s = state0;
  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * h;
    if (s.rho <= options.cutoff_rho) {
      traj.samples.push_back({t, s, Inputs{}});
      traj.cutoff_time = t;
      traj.terminated = Termination::kCutoffReached;
      break;
    }
    Inputs in;
    try {
      in = evaluate(law, s);
    } catch (const DomainError& e) {
      trip(std::move(traj), {t, s, Inputs{}}, e.what());
    }
    traj.samples.push_back({t, s, in});
    if (k >= max_steps) {
      traj.terminated = Termination::kHorizon;
      break;
    }
    PolarState next = s;
    for (int j = 0; j < traj.substeps; ++j) {
      try {
        next = rk4_step(law, next, h_sub);
      } catch (const DomainError& e) {
        trip(std::move(traj), {t + h, next, Inputs{}}, e.what());
      }
      if (GuardFailure f = guard(law, next); f.failed) {
        trip(std::move(traj), {t + h, next, Inputs{}}, f.reason);
      }
    }
    s = next;
  }
  return traj;
}

ZeroDynamicsClock zero_dynamics_clock(const Trajectory& traj,
                                      std::size_t index) {
  const double rho0 = traj.initial().rho;
  const Sample& s = traj.samples.at(index);
  return {s.t / rho0, std::log(rho0 / s.state.rho)};
}

Trajectory integrate_log_timescale(const PolarState& state0,
                                   const ControlLaw& law,
                                   const LogTimescaleOptions& options) {
  validate(law, state0);
  if (!(options.step_sigma > 0.0) || !(options.cutoff_rho > 0.0)) {
    throw InvalidArgument("step_sigma and cutoff_rho must be positive");
  }
  const double rho0 = state0.rho;
  const double sigma_cut = std::log(rho0 / options.cutoff_rho);
  const double sigma_max =
      options.sigma_max > 0.0 ? options.sigma_max : sigma_cut;

  Trajectory traj;
  traj.law = law;
  traj.cutoff_rho = options.cutoff_rho;
  traj.time_scale = TimeScale::kLogDistance;
  traj.step_sigma = options.step_sigma;
  if (options.substeps > 0) {
    traj.substeps = options.substeps;
  } else {
    // Stiffness in sigma is the physical one times rho / v.
    const double floor = effective_floor(law, options.cutoff_rho);
    const double lambda =
        stiffness_at(law, floor, 0.0) * floor / speed_scale(law, floor);
    traj.substeps = std::max(
        1, static_cast<int>(std::ceil(options.step_sigma * lambda / 2.0)));
  }
  const double h = options.step_sigma;
  const double h_sub = h / traj.substeps;

  LogState y{state0.delta, std::tan(state0.gamma), 0.0};
  for (std::size_t k = 0;; ++k) {
    const double sigma = static_cast<double>(k) * h;
    PolarState s = from_log(y, rho0, sigma);
    if (k == 0) s = state0;
    const double t = rho0 * y[2];
    if (sigma >= sigma_cut || s.rho <= options.cutoff_rho) {
      traj.samples.push_back({t, s, Inputs{}});
      traj.cutoff_time = t;
      traj.terminated = Termination::kCutoffReached;
      break;
    }
    Inputs in;
    try {
      in = evaluate(law, s);
    } catch (const DomainError& e) {
      trip(std::move(traj), {t, s, Inputs{}}, e.what());
    }
    traj.samples.push_back({t, s, in});
    if (sigma >= sigma_max) {
      traj.terminated = Termination::kHorizon;
      break;
    }
    LogState next = y;
    for (int j = 0; j < traj.substeps; ++j) {
      const double sj = sigma + j * h_sub;
      try {
        next = log_rk4_step(law, rho0, sj, next, h_sub);
      } catch (const DomainError& e) {
        trip(std::move(traj),
             {rho0 * next[2], from_log(next, rho0, sj), Inputs{}}, e.what());
      }
      const PolarState ps = from_log(next, rho0, sj + h_sub);
      if (GuardFailure f = guard(law, ps); f.failed || !std::isfinite(next[2])) {
        trip(std::move(traj), {rho0 * next[2], ps, Inputs{}},
             f.failed ? f.reason : "clock is not finite");
      }
    }
    y = next;
  }
  traj.horizon = traj.samples.back().t;
  return traj;
}

}  // namespace dbpark
