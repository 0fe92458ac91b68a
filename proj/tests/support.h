// Shared helpers for the test binaries: preset loading and synthetic traces
// for the comparison lemma.
#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "dbpark/certificates.h"
#include "dbpark/harness.h"
#include "dbpark/scenario.h"

namespace dbpark::testing {

inline std::string preset_path(const std::string& name) {
  return std::string(DBPARK_PRESET_DIR) + "/" + name;
}

inline ScenarioSet preset(const std::string& fig) {
  return load_scenario_file(preset_path(fig + ".scn"));
}

inline const Scenario& run_named(const ScenarioSet& set,
                                 const std::string& name) {
  for (const Scenario& s : set.runs) {
    if (s.name == name) return s;
  }
  throw std::runtime_error("no run named " + name);
}

// V over a strictly decreasing rho grid on [rho_min, rho0].
struct SyntheticTrace {
  std::vector<RhoValue> samples;
  double a = 1.0;
  ComparisonGain gain = ComparisonGain::kLinear;
};

inline std::vector<double> rho_grid(double rho0, double rho_min, int n) {
  std::vector<double> r(n);
  for (int k = 0; k < n; ++k) r[k] = rho0 - (rho0 - rho_min) * k / (n - 1);
  return r;
}

// Extremal factor: (rho/rho0)^a or exp(a (1/rho0 - 1/rho)).
inline double extremal(double rho, double rho0, double a, ComparisonGain g) {
  return g == ComparisonGain::kLinear ? std::pow(rho / rho0, a)
                                      : std::exp(a * (1 / rho0 - 1 / rho));
}

// V = extremal * W with W nondecreasing in rho and W(rho0) = V0, so the
// hypothesis dV/drho >= rate V holds everywhere.
inline SyntheticTrace satisfying_trace(std::mt19937_64& rng, ComparisonGain g) {
  std::uniform_real_distribution<double> ua(0.5, 5), ub(0, 3), uc(0, 0.9),
      up(1, 4), uv(0.1, 10);
  SyntheticTrace t;
  t.gain = g;
  t.a = ua(rng);
  const double b = ub(rng), c = uc(rng), p = up(rng), v0 = uv(rng);
  const double rho0 = 1.0, rho_min = g == ComparisonGain::kLinear ? 0.01 : 0.2;
  for (double r : rho_grid(rho0, rho_min, 1000)) {
    const double w =
        v0 * std::exp(b * (r - rho0)) * (1 - c + c * std::pow(r / rho0, p));
    t.samples.push_back({r, extremal(r, rho0, t.a, g) * w});
  }
  return t;
}

// Either a uniformly too-slow decay or a localized bump where W decreases
// with rho; both break the hypothesis by a margin well above the
// finite-difference tolerance.
inline SyntheticTrace violating_trace(std::mt19937_64& rng, ComparisonGain g,
                                      bool localized) {
  std::uniform_real_distribution<double> ua(0.5, 5), uu(0.2, 0.8),
      uc(0.3, 0.8), uv(0.1, 10);
  SyntheticTrace t;
  t.gain = g;
  t.a = ua(rng);
  const double u = uu(rng), centre = uc(rng), v0 = uv(rng);
  const double rho0 = 1.0, rho_min = g == ComparisonGain::kLinear ? 0.01 : 0.2;
  for (double r : rho_grid(rho0, rho_min, 1000)) {
    double v;
    if (localized) {
      const double z = (r - centre) / 0.05;
      v = v0 * extremal(r, rho0, t.a, g) * (1 + 0.5 * std::exp(-z * z));
    } else {
      v = v0 * extremal(r, rho0, u * t.a, g);
    }
    t.samples.push_back({r, v});
  }
  return t;
}

}  // namespace dbpark::testing
