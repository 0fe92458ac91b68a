#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dbpark/dynamics.h"
#include "dbpark/errors.h"

using namespace dbpark;

namespace {

ControlLaw backstep(double c1 = 1.01, double c2 = 5, double v = 0.5,
                    double floor = 0.01) {
  ControlLaw law;
  law.kind = LawKind::kBackstep;
  law.gains = {0, c1, c2, 0};
  law.v = v;
  law.rho_floor = floor;
  return law;
}

IntegrationOptions options(double horizon, double step = 0, int substeps = 0,
                           double cutoff = 0.01) {
  IntegrationOptions o;
  o.horizon = horizon;
  o.step = step;
  o.substeps = substeps;
  o.cutoff_rho = cutoff;
  return o;
}

const PolarState kRed{1, 0, -kPi / 2.5};

}  // namespace

TEST(PolarDerivatives, Examples) {
  PolarRates r = polar_derivatives({1, 0, 0}, {0.5, 0});
  EXPECT_DOUBLE_EQ(r.rho, -0.5);
  EXPECT_EQ(r.delta, 0);
  EXPECT_EQ(r.gamma, 0);
  r = polar_derivatives({2, 0.3, kPi / 2}, {1, 0});
  EXPECT_NEAR(r.rho, 0, 1e-16);
  EXPECT_DOUBLE_EQ(r.delta, 0.5);
  EXPECT_DOUBLE_EQ(r.gamma, 0.5);
  r = polar_derivatives({0.7, 1.0, -0.4}, {0, 0.9});
  EXPECT_EQ(r.rho, 0);
  EXPECT_EQ(r.delta, 0);
  EXPECT_EQ(r.gamma, -0.9);
  EXPECT_THROW(polar_derivatives({0, 0, 0}, {1, 0}), DomainError);
}

TEST(RhoDerivatives, Examples) {
  RhoRates r = rho_parameterized_derivatives({1, 2.0, 0}, {0.5, 0});
  EXPECT_EQ(r.delta, 0);
  EXPECT_EQ(r.gamma, 0);
  r = rho_parameterized_derivatives({2, 0.1, kPi / 4}, {1, 1});
  EXPECT_NEAR(r.delta, -0.5, 1e-15);
  EXPECT_NEAR(r.gamma, -0.5 + std::sqrt(2.0), 1e-15);
  EXPECT_THROW(rho_parameterized_derivatives({1, 0, kPi / 2}, {1, 0}),
               DomainError);
  EXPECT_THROW(rho_parameterized_derivatives({1, 0, 0.1}, {0, 0}), DomainError);
}

TEST(RhoDerivatives, ChainRuleAgainstTimeScale) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> r(0.01, 5), d(-4, 4), g(-1.5, 1.5),
      v(0.05, 3), w(-10, 10);
  for (int i = 0; i < 1000; ++i) {
    const PolarState s{r(rng), d(rng), g(rng)};
    const Inputs in{v(rng), w(rng)};
    const PolarRates dt = polar_derivatives(s, in);
    const RhoRates dr = rho_parameterized_derivatives(s, in);
    const double scale = 1 + std::abs(dt.delta) + std::abs(dt.gamma);
    EXPECT_NEAR(dr.delta * dt.rho, dt.delta, 1e-12 * scale);
    EXPECT_NEAR(dr.gamma * dt.rho, dt.gamma, 1e-12 * scale);
  }
}

TEST(DefaultStep, ShellRule) {
  EXPECT_DOUBLE_EQ(default_step(backstep(), kRed, 0.01), 1e-3);
  EXPECT_DOUBLE_EQ(default_step(backstep(), kRed, 0.001), 2e-4);
  EXPECT_DOUBLE_EQ(default_step(backstep(1.01, 5, 2.0), kRed, 0.01), 5e-4);
}

TEST(Integrate, StraightLineRun) {
  const Trajectory t = integrate({1, 0, 0}, backstep(), options(100));
  ASSERT_EQ(t.terminated, Termination::kCutoffReached);
  for (const Sample& s : t.samples) {
    EXPECT_NEAR(s.state.rho, 1 - 0.5 * s.t, 1e-12);
    EXPECT_EQ(s.state.delta, 0);
    EXPECT_EQ(s.state.gamma, 0);
  }
  ASSERT_TRUE(t.cutoff_time);
  EXPECT_GE(*t.cutoff_time, (1 - 0.01) / 0.5 - 1e-9);
  EXPECT_LE(*t.cutoff_time, (1 - 0.01) / 0.5 + t.step + 1e-9);
}

TEST(Integrate, UniformSamplesAndCutoffSemantics) {
  const Trajectory t = integrate(kRed, backstep(), options(100));
  ASSERT_EQ(t.terminated, Termination::kCutoffReached);
  EXPECT_EQ(t.step, 1e-3);
  for (std::size_t k = 0; k < t.samples.size(); ++k) {
    EXPECT_EQ(t.samples[k].t, static_cast<double>(k) * t.step);
  }
  const Sample& last = t.samples.back();
  EXPECT_LE(last.state.rho, 0.01);
  EXPECT_EQ(last.inputs.v, 0);
  EXPECT_EQ(last.inputs.omega, 0);
  EXPECT_EQ(*t.cutoff_time, last.t);
  for (std::size_t k = 0; k + 1 < t.samples.size(); ++k) {
    EXPECT_GT(t.samples[k].state.rho, 0.01);
    EXPECT_GT(t.samples[k].state.rho, t.samples[k + 1].state.rho);
    EXPECT_TRUE(std::isfinite(t.samples[k].inputs.omega));
  }
}

TEST(Integrate, HorizonStop) {
  const Trajectory t = integrate(kRed, backstep(), options(0.5));
  EXPECT_EQ(t.terminated, Termination::kHorizon);
  EXPECT_FALSE(t.cutoff_time);
  EXPECT_NEAR(t.samples.back().t, 0.5, 1e-12);
}

TEST(Integrate, StepHalvingConverges) {
  const Trajectory a = integrate(kRed, backstep(), options(100, 1e-3));
  const Trajectory b = integrate(kRed, backstep(), options(100, 5e-4));
  // Compare at t = 2.0, well inside both runs.
  const PolarState& x = a.samples.at(2000).state;
  const PolarState& y = b.samples.at(4000).state;
  EXPECT_LT(std::abs(x.delta - y.delta), 1e-6);
  EXPECT_LT(std::abs(x.gamma - y.gamma), 1e-6);
}

TEST(Integrate, FourthOrder) {
  // Fixed single substep so the step really halves. Reference at h/16.
  const double h0 = 8e-3, t_end = 1.6;
  auto state_at = [&](double h) {
    const Trajectory t = integrate(kRed, backstep(), options(100, h, 1));
    return t.samples.at(static_cast<std::size_t>(std::lround(t_end / h))).state;
  };
  const PolarState ref = state_at(h0 / 16);
  auto err = [&](double h) {
    const PolarState s = state_at(h);
    return std::hypot(s.delta - ref.delta, s.gamma - ref.gamma);
  };
  const double ratio = err(h0) / err(h0 / 2);
  EXPECT_GE(ratio, 8);
  EXPECT_LE(ratio, 32);
}

TEST(Integrate, GuardTripCarriesContext) {
  try {
    integrate({1, -kPi / 2, -kPi / 2.5}, backstep(), options(50, 0.2, 1));
    FAIL() << "expected a guard trip";
  } catch (const GuardTripped& e) {
    EXPECT_EQ(e.code(), ErrorCode::kGuardTripped);
    EXPECT_EQ(e.partial().terminated, Termination::kGuardTripped);
    EXPECT_FALSE(e.partial().samples.empty());
    // A stage of the failing step left the domain; the offending sample is
    // the end of that step.
    EXPECT_EQ(e.offending().t, e.partial().samples.back().t);
    EXPECT_NE(std::string(e.what()).find("gamma"), std::string::npos);
  }
}

TEST(Integrate, RejectsBadArguments) {
  EXPECT_THROW(integrate(kRed, backstep(), options(0)), InvalidArgument);
  EXPECT_THROW(integrate(kRed, backstep(), options(1, 0, 0, 0)), InvalidArgument);
  EXPECT_THROW(integrate(kRed, backstep(1.0, 5), options(1)), DomainError);
}

TEST(Integrate, Deterministic) {
  const Trajectory a = integrate(kRed, backstep(), options(100));
  const Trajectory b = integrate(kRed, backstep(), options(100));
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t k = 0; k < a.samples.size(); ++k) {
    EXPECT_EQ(a.samples[k].state.delta, b.samples[k].state.delta);
    EXPECT_EQ(a.samples[k].inputs.omega, b.samples[k].inputs.omega);
  }
}

TEST(LogTimescale, StraightLineClosedForm) {
  LogTimescaleOptions o;
  o.step_sigma = 1e-3;
  o.cutoff_rho = 0.01;
  const Trajectory t = integrate_log_timescale({1, 0, 0}, backstep(), o);
  EXPECT_EQ(t.time_scale, TimeScale::kLogDistance);
  for (std::size_t k = 0; k < t.samples.size(); ++k) {
    const Sample& s = t.samples[k];
    const double sigma = std::log(1 / s.state.rho);
    EXPECT_EQ(s.state.delta, 0);
    EXPECT_EQ(s.state.gamma, 0);
    EXPECT_NEAR(s.t, (1 - std::exp(-sigma)) / 0.5, 1e-12);
  }
  EXPECT_LE(t.samples.back().state.rho, 0.01 * (1 + 1e-12));
}

TEST(LogTimescale, ClockIsMonotone) {
  LogTimescaleOptions o;
  o.cutoff_rho = 0.01;
  const Trajectory t = integrate_log_timescale(kRed, backstep(), o);
  ZeroDynamicsClock prev = zero_dynamics_clock(t, 0);
  EXPECT_EQ(prev.scaled_time, 0);
  EXPECT_EQ(prev.log_distance, 0);
  for (std::size_t k = 1; k < t.samples.size(); ++k) {
    const ZeroDynamicsClock c = zero_dynamics_clock(t, k);
    EXPECT_GT(c.scaled_time, prev.scaled_time);
    EXPECT_GT(c.log_distance, prev.log_distance);
    prev = c;
  }
}
