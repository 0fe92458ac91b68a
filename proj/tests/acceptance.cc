// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "dbpark/certificates.h"
#include "dbpark/dynamics.h"
#include "dbpark/errors.h"
#include "dbpark/harness.h"
#include "dbpark/scenario.h"
#include "support.h"

using namespace dbpark;
using dbpark::testing::preset;
using dbpark::testing::preset_path;

namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = true;
  std::string details;

  void require(bool ok, const std::string& why) {
    if (!ok) {
      passed = false;
      note("FAILED " + why);
    }
  }
  void note(const std::string& text) {
    if (!details.empty()) details += "; ";
    details += text;
  }
};

const Trajectory& traj_of(const RunResult& r) {
  if (!r.trajectory) throw std::runtime_error(r.scenario.name + ": " + r.error);
  return *r.trajectory;
}

double initial_norm(const Trajectory& t) {
  const PolarState& s = t.initial();
  return error_norm(s.delta, s.gamma, law_error_norm(t.law.kind));
}

double max_abs_omega(const Trajectory& t) {
  double m = 0;
  for (const Sample& s : t.samples) m = std::max(m, std::abs(s.inputs.omega));
  return m;
}

Outcome exact_envelopes() {
  Outcome o;
  for (const RunResult& r : run_set(preset("fig1"), 1)) {
    const Trajectory& t = traj_of(r);
    double worst = -INFINITY;
    for (const char* name : {"rho_envelope", "error_norm_envelope", "omega_envelope"}) {
      const CheckResult* c = r.report->find(name);
      o.require(c && c->passed && c->exact, fmt::format("{} {}", r.scenario.name, name));
      if (c) worst = std::max(worst, c->worst_slack);
    }
    o.require(t.cutoff_time.has_value(), r.scenario.name + " reached cutoff");
    o.note(fmt::format("{}: {} samples, worst slack {:.3g}", r.scenario.name,
                       t.samples.size(), worst));
  }
  return o;
}

Outcome lyapunov_rate() {
  Outcome o;
  for (const Scenario& base : preset("fig1").runs) {
    const Trajectory t = traj_of(run_scenario(base));
    const DifferentialCheck d = lyapunov_rate_check(t);
    o.require(d.pass_fraction() >= 0.999, base.name + " fraction");
    std::string extra;
    if (d.violations > 0) {
      Scenario half = base;
      half.step = t.step / 2;
      half.substeps = t.substeps;
      const DifferentialCheck dh = lyapunov_rate_check(traj_of(run_scenario(half)));
      const double shrink = dh.violations == 0 ? INFINITY
                                               : d.worst_violation / dh.worst_violation;
      o.require(shrink >= 4, base.name + " shrink under step halving");
      extra = fmt::format(", shrink {:.3g}", shrink);
    }
    o.note(fmt::format("{}: {}/{} interior ok{}", base.name,
                       d.interior - d.violations, d.interior, extra));
  }
  return o;
}

Outcome lemma_harnesses() {
  Outcome o;
  std::mt19937_64 rng(20240611);
  int ok_sat = 0, ok_vio = 0;
  for (int k = 0; k < 200; ++k) {
    const ComparisonGain g = k % 2 ? ComparisonGain::kQuadratic : ComparisonGain::kLinear;
    const auto sat = dbpark::testing::satisfying_trace(rng, g);
    if (comparison_lemma_check(sat.samples, sat.a, g).verdict == LemmaVerdict::kVerified)
      ++ok_sat;
    const auto vio = dbpark::testing::violating_trace(rng, g, (k / 2) % 2 == 1);
    if (comparison_lemma_check(vio.samples, vio.a, g).verdict != LemmaVerdict::kVerified)
      ++ok_vio;
  }
  o.require(ok_sat == 200 && ok_vio == 200, "synthetic verdicts");
  o.note(fmt::format("satisfying verified {}/200, violating flagged {}/200", ok_sat, ok_vio));

  for (const RunResult& r : run_set(preset("fig1"), 1)) {
    const Trajectory& t = traj_of(r);
    const double m = gain_margin(t.law.gains.c1), b0 = initial_norm(t);
    const auto alpha = ClassKFunction::power(m * m * b0 * b0, 2 * min_gain(t.law.gains));
    const LemmaResult lr = arrival_lemma_check(t, alpha);
    const double t1 = t.initial().rho / t.law.v * std::sqrt(1 + alpha(1));
    o.require(lr.verdict == LemmaVerdict::kVerified, r.scenario.name + " arrival lemma");
    o.note(fmt::format("{}: {} (t1 {:.6g}, slack {:.3g})", r.scenario.name,
                       to_string(lr.verdict), t1, lr.worst_slack));
  }
  return o;
}

Outcome smoothness() {
  Outcome o;
  for (const RunResult& r : run_set(preset("fig2"), 1)) {
    const Trajectory& t = traj_of(r);
    o.require(t.cutoff_time.has_value() && t.samples.size() >= 2,
              r.scenario.name + " reached cutoff");
    if (!t.cutoff_time) continue;
    const Sample& last = t.samples[t.samples.size() - 2];
    const PolarState& at_cut = t.samples.back().state;
    const double ratio = std::abs(last.inputs.omega) / max_abs_omega(t);
    o.require(ratio < 0.01, r.scenario.name + " terminal omega");
    o.require(std::abs(at_cut.delta) < 0.05 && std::abs(at_cut.gamma) < 0.05,
              r.scenario.name + " angles at cutoff");
    o.require(r.passed(), r.scenario.name + " certificate");
    o.note(fmt::format("{}: |w| ratio {:.2e}, delta {:.2e}, gamma {:.2e}", r.scenario.name,
                       ratio, at_cut.delta, at_cut.gamma));
  }
  return o;
}

Outcome safety() {
  Outcome o;
  const auto runs = run_set(preset("fig3"), 1);
  for (const RunResult& r : runs) {
    const Trajectory& t = traj_of(r);
    double lo = INFINITY, hi = -INFINITY;
    bool front_hit = false;
    for (const Sample& s : t.samples) {
      lo = std::min(lo, s.state.delta);
      hi = std::max(hi, s.state.delta);
      const CartesianPose p = polar_to_cart(s.state);
      if (std::abs(s.state.delta) >= kPi && p.x > 0) front_hit = true;
    }
    const bool inside = lo > -kPi && hi < kPi;
    if (r.scenario.law.kind == LawKind::kNoFront) {
      o.require(inside && !front_hit, "nofront stays off the front ray");
      o.require(r.passed(), "nofront certificate");
    } else {
      o.require(!inside, "comparison run crosses the front ray");
    }
    o.note(fmt::format("{}: delta in [{:.4f}, {:.4f}]", r.scenario.name, lo, hi));
  }
  return o;
}

Outcome deceleration() {
  Outcome o;
  for (const RunResult& r : run_set(preset("fig4"), 1)) {
    const Trajectory& t = traj_of(r);
    for (const char* name : {"rho_envelope", "speed_envelope", "speed_decreasing"}) {
      const CheckResult* c = r.report->find(name);
      o.require(c && c->passed, fmt::format("{} {}", r.scenario.name, name));
    }
    bool monotone = true;
    for (std::size_t k = 1; k + 1 < t.samples.size(); ++k)
      monotone = monotone && t.samples[k].inputs.v < t.samples[k - 1].inputs.v;
    const double v_cut = speed_at(t.law, t.samples.back().state.rho);
    o.require(monotone, "v strictly decreasing");
    o.require(t.cutoff_time && v_cut < 1e-3, "v at cutoff");
    o.note(fmt::format("{}: v at cutoff {:.3e}, cutoff t {:.4g}", r.scenario.name, v_cut,
                       t.cutoff_time.value_or(NAN)));
  }
  return o;
}

Outcome nonundershooting() {
  Outcome o;
  std::vector<RunResult> runs = run_set(preset("fig5"), 1);
  const SweepSpec sweep = load_sweep_file(preset_path("sweeps/curbsafe_delta.sweep"));
  const SweepResult sr = run_sweep(sweep, 2);
  for (const SweepRow& row : sr.rows) {
    o.require(row.status == SweepRow::Status::kOk && row.scenario,
              fmt::format("sweep point {}", row.index));
    if (row.scenario) runs.push_back(run_scenario(*row.scenario));
  }
  std::size_t n = 0;
  for (const RunResult& r : runs) {
    const Trajectory& t = traj_of(r);
    double min_delta = INFINITY, max_y = -INFINITY;
    for (const Sample& s : t.samples) {
      min_delta = std::min(min_delta, s.state.delta);
      max_y = std::max(max_y, polar_to_cart(s.state).y);
    }
    o.require(min_delta >= 0 && max_y <= 0, r.scenario.name + " stays below the curb");
    o.require(t.cutoff_time && t.cutoff_rho == 0.001, r.scenario.name + " cutoff 0.001");
    o.require(r.passed(), r.scenario.name + " certificate");
    ++n;
    o.note(fmt::format("{}(c1 {:.4f}): min delta {:.3e}", r.scenario.name,
                       t.law.gains.c1, min_delta));
  }
  o.require(n == 6, "three preset runs and three sweep points");

  // Gains at or below the bound are rejected when the file is loaded.
  const PolarState s0{1, kPi / 6, -kPi / 4};
  const double bound = curbsafe_c1_lower_bound(s0);
  for (double c1 : {bound, 0.5 * bound}) {
    const std::string text = fmt::format(
        "schema = dbpark-scenario/1\nlaw = curbsafe\nc1 = {:.17g}\nc2 = 1\nv = 0.5\n"
        "initial.polar = 1, pi/6, -pi/4\n",
        c1);
    bool rejected = false;
    try {
      parse_scenario_text(text);
    } catch (const DomainError&) {
      rejected = true;
    }
    o.require(rejected, fmt::format("c1 = {:.6g} rejected at load", c1));
  }
  o.note(fmt::format("c1 <= bound {:.6f} rejected at load", bound));
  return o;
}

// Cubic Hermite interpolation of (delta, gamma) in sigma = ln(rho0/rho) on a
// log-distance run; slopes come from the distance-parameterized dynamics.
struct SigmaInterpolant {
  const Trajectory& log_run;
  double rho0;

  std::pair<double, double> slopes(const Sample& s) const {
    const RhoRates d = rho_parameterized_derivatives(s.state, evaluate(log_run.law, s.state));
    return {-s.state.rho * d.delta, -s.state.rho * d.gamma};
  }

  std::optional<std::pair<double, double>> at(double sigma) const {
    const double h = log_run.step_sigma;
    const auto k = static_cast<std::size_t>(std::floor(sigma / h));
    if (k + 1 >= log_run.samples.size()) return std::nullopt;
    const Sample& a = log_run.samples[k];
    const Sample& b = log_run.samples[k + 1];
    const double sa = std::log(rho0 / a.state.rho), sb = std::log(rho0 / b.state.rho);
    const double u = (sigma - sa) / (sb - sa), w = sb - sa;
    const double h00 = (1 + 2 * u) * (1 - u) * (1 - u), h10 = u * (1 - u) * (1 - u);
    const double h01 = u * u * (3 - 2 * u), h11 = u * u * (u - 1);
    const auto [da, ga] = slopes(a);
    const auto [db, gb] = slopes(b);
    return std::pair{h00 * a.state.delta + h10 * w * da + h01 * b.state.delta + h11 * w * db,
                     h00 * a.state.gamma + h10 * w * ga + h01 * b.state.gamma + h11 * w * gb};
  }
};

Outcome cross_time_scale() {
  Outcome o;
  for (const RunResult& r : run_set(preset("fig2"), 1)) {
    const Trajectory& phys = traj_of(r);
    LogTimescaleOptions lo;
    lo.step_sigma = 1e-4;
    lo.cutoff_rho = phys.cutoff_rho;
    const Trajectory log_run = integrate_log_timescale(phys.initial(), phys.law, lo);
    const double rho0 = phys.initial().rho;
    const SigmaInterpolant interp{log_run, rho0};
    double worst = 0;
    std::size_t matched = 0;
    for (const Sample& s : phys.samples) {
      if (s.state.rho <= phys.cutoff_rho) break;
      const auto dg = interp.at(std::log(rho0 / s.state.rho));
      if (!dg) continue;
      worst = std::max({worst, std::abs(dg->first - s.state.delta),
                        std::abs(dg->second - s.state.gamma)});
      ++matched;
    }
    o.require(matched + 2 >= phys.samples.size(), r.scenario.name + " coverage");
    o.require(worst <= 1e-5, r.scenario.name + " agreement");

    const double t1 = arrival_horizon(phys.law, phys.initial());
    const double clock = zero_dynamics_clock(log_run, log_run.samples.size() - 1).scaled_time;
    o.require(clock * rho0 < t1, r.scenario.name + " clock below t1");
    o.note(fmt::format("{}: max |diff| {:.2e} over {} samples, clock {:.4g} < t1/rho0 {:.4g}",
                       r.scenario.name, worst, matched, clock, t1 / rho0));
  }
  // The same clock bound for the backstepping runs the arrival formula is
  // stated for.
  for (const Scenario& s : preset("fig1").runs) {
    LogTimescaleOptions lo;
    lo.cutoff_rho = s.cutoff_rho;
    const Trajectory log_run = integrate_log_timescale(s.initial, s.law, lo);
    const double b0 = error_norm(s.initial.delta, s.initial.gamma,
                                 law_error_norm(s.law.kind));
    const double t1 = arrival_time_backstep(s.initial.rho, s.law.v, s.law.gains.c1, b0);
    const double t_end = log_run.samples.back().t;
    o.require(t_end < t1, "fig1 " + s.name + " clock below t1");
    o.note(fmt::format("fig1 {}: {:.4g} < {:.4g}", s.name, t_end, t1));
  }
  return o;
}

Outcome velocity_limit() {
  Outcome o;
  const Scenario red = dbpark::testing::run_named(preset("fig1"), "red");
  for (double limit : {0.5, 1.0, 2.0}) {
    Scenario s = red;
    apply_key_value(s, "omega_limit", fmt::format("{}", limit));
    finalize(s);
    const RunResult r = run_scenario(s);
    const double w = max_abs_omega(traj_of(r));
    o.require(w <= limit, fmt::format("Omega {}", limit));
    o.require(r.passed(), fmt::format("Omega {} certificate", limit));
    o.note(fmt::format("Omega {}: v {:.4g}, max|w| {:.4g}", limit, s.law.v, w));
  }
  return o;
}

std::map<std::string, std::string> read_tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    files[fs::relative(e.path(), dir).string()] =
        std::string(std::istreambuf_iterator<char>(in), {});
  }
  return files;
}

Outcome numerics() {
  Outcome o;
  const double h0 = 8e-3, t_end = 1.6;
  for (const auto& [fig, run] : {std::pair{"fig1", "red"}, std::pair{"fig2", "blue"}}) {
    const Scenario s = dbpark::testing::run_named(preset(fig), run);
    auto state_at = [&](double h) {
      IntegrationOptions opt;
      opt.step = h;
      opt.substeps = 1;
      opt.cutoff_rho = s.cutoff_rho;
      opt.horizon = t_end + 2 * h;
      const Trajectory t = integrate(s.initial, s.law, opt);
      return t.samples.at(static_cast<std::size_t>(std::lround(t_end / h))).state;
    };
    const PolarState ref = state_at(h0 / 16);
    auto err = [&](double h) {
      const PolarState p = state_at(h);
      return std::hypot(p.rho - ref.rho, p.delta - ref.delta, p.gamma - ref.gamma);
    };
    const double ratio = err(h0) / err(h0 / 2);
    o.require(ratio >= 8 && ratio <= 32, fmt::format("{} {} order ratio", fig, run));
    o.note(fmt::format("{} {}: ratio {:.3g}", fig, run, ratio));
  }

  const fs::path root = fs::temp_directory_path() / "dbpark_acceptance";
  fs::remove_all(root);
  std::size_t files = 0;
  for (const char* fig : {"fig1", "fig2", "fig3", "fig4", "fig5"}) {
    const ScenarioSet set = preset(fig);
    write_outputs(set.title, run_set(set, 1), (root / "a" / fig).string());
    write_outputs(set.title, run_set(set, 2), (root / "b" / fig).string());
    const auto a = read_tree(root / "a" / fig), b = read_tree(root / "b" / fig);
    o.require(!a.empty() && a == b, std::string(fig) + " byte-identical rerun");
    files += a.size();
  }
  fs::remove_all(root);
  o.note(fmt::format("{} preset output files identical across reruns", files));
  return o;
}

struct Criterion {
  int id;
  const char* description;
  std::function<Outcome()> check;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "fig1 exact rho, error-norm and omega envelopes", exact_envelopes},
      {2, "Lyapunov rate inequality on fig1 runs", lyapunov_rate},
      {3, "comparison and arrival lemma harnesses", lemma_harnesses},
      {4, "fig2 smooth terminal behaviour", smoothness},
      {5, "fig3 front-ray safety contrast", safety},
      {6, "fig4 deceleration envelopes", deceleration},
      {7, "fig5 and delta0 sweep stay below the curb", nonundershooting},
      {8, "physical vs log-distance time scales", cross_time_scale},
      {9, "velocity limiting on fig1 red", velocity_limit},
      {10, "RK4 order and byte-identical reruns", numerics},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o.passed = false;
      o.note(std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.passed) ++failed;
    fmt::print("criterion {}: {} - {} ({}; {:.2f} s)\n", c.id, o.passed ? "PASS" : "FAIL",
               c.description, o.details, secs);
    std::fflush(stdout);
  }
  fmt::print("{}/{} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
