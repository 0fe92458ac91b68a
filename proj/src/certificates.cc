#include "dbpark/certificates.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace dbpark {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Accumulates lhs <= rhs over samples.
class Envelope {
 public:
  Envelope(std::string name, const Tolerance& tol, bool exact = true)
      : tol_(tol) {
    result_.name = std::move(name);
    result_.exact = exact;
    result_.worst_slack = -kInf;
  }

  void add(double t, double lhs, double rhs) {
    const double slack = lhs - rhs - tol_.allowance(rhs);
    // NaN counts as a failure.
    if (!(slack <= 0.0)) result_.passed = false;
    if (!(slack <= result_.worst_slack)) {
      result_.worst_slack = std::isnan(slack) ? kInf : slack;
      result_.worst_time = t;
    }
  }

  CheckResult finish() && {
    if (result_.worst_slack == -kInf) result_.worst_slack = 0.0;
    return std::move(result_);
  }

 private:
  Tolerance tol_;
  CheckResult result_;
};

// Strict inequality lhs < rhs without tolerance, for invariants that must
// hold exactly (domains, safety lines, monotonicity).
class StrictCheck {
 public:
  explicit StrictCheck(std::string name) {
    result_.name = std::move(name);
    result_.worst_slack = -kInf;
  }

  void add(double t, double lhs, double rhs) {
    const double slack = lhs - rhs;
    if (!(slack < 0.0)) result_.passed = false;
    if (!(slack <= result_.worst_slack)) {
      result_.worst_slack = std::isnan(slack) ? kInf : slack;
      result_.worst_time = t;
    }
  }

  CheckResult finish() && {
    if (result_.worst_slack == -kInf) result_.worst_slack = 0.0;
    return std::move(result_);
  }

 private:
  CheckResult result_;
};

double shrink_factor(double t, double t1) {
  return std::max(0.0, 1.0 - t / t1);
}

double b_of(const PolarState& s, ErrorNorm norm) {
  return error_norm(s.delta, s.gamma, norm);
}

CheckResult arrival_check(const Trajectory& traj, double t1) {
  CheckResult r;
  r.name = "arrival_before_t1";
  const double t_end = traj.samples.back().t;
  r.worst_slack = t_end - t1;
  r.worst_time = t_end;
  r.passed = traj.terminated == Termination::kCutoffReached && t_end < t1;
  return r;
}

CheckResult gamma_domain_check(const Trajectory& traj) {
  StrictCheck c("gamma_domain");
  for (const Sample& s : traj.samples) {
    c.add(s.t, std::abs(s.state.gamma), kPi / 2 - kAngleEpsilon);
  }
  return std::move(c).finish();
}

CheckResult rho_decreasing_check(const Trajectory& traj) {
  StrictCheck c("rho_decreasing");
  for (std::size_t k = 1; k < traj.samples.size(); ++k) {
    c.add(traj.samples[k].t, traj.samples[k].state.rho,
          traj.samples[k - 1].state.rho);
  }
  return std::move(c).finish();
}

CheckResult lyapunov_check_result(const Trajectory& traj) {
  const DifferentialCheck d = lyapunov_rate_check(traj);
  CheckResult r;
  r.name = "lyapunov_rate";
  r.worst_slack = d.worst_violation;
  r.worst_time = d.worst_time;
  r.passed = d.pass_fraction() >= 0.999;
  return r;
}

// Least-squares line through (x, y); returns {intercept, slope}.
std::pair<double, double> fit_line(const std::vector<double>& x,
                                   const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxx > 0 ? sxy / sxx : 0.0;
  return {my - slope * mx, slope};
}

struct ShapeFit {
  double log_n = 0.0;
  double beta = 0.0;
  double residual = 0.0;
  std::size_t used = 0;
};

// Below this fraction of the initial value a sample carries no shape
// information (rounding, denormals), so it is left out of the regression.
constexpr double kFitFloorLog = -2 * 27.631021115928547;  // ln(1e-24)

// Upper envelope y <= ln N - beta / (1 - t/t1) with beta >= 0 from the
// regression slope, ln N raised until every point with t < t1 is covered.
ShapeFit fit_shape(const std::vector<double>& t, const std::vector<double>& y,
                   double t1) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t1 && std::isfinite(y[i]) && y[i] >= kFitFloorLog) {
      xs.push_back(1.0 / (1.0 - t[i] / t1));
      ys.push_back(y[i]);
    }
  }
  ShapeFit f;
  f.used = xs.size();
  if (xs.empty()) return f;
  const auto [intercept, slope] = fit_line(xs, ys);
  f.beta = std::max(0.0, -slope);
  double ss = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (intercept + slope * xs[i]);
    ss += r * r;
  }
  f.residual = std::sqrt(ss / xs.size());
  f.log_n = -kInf;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t1 && std::isfinite(y[i])) {
      f.log_n = std::max(f.log_n, y[i] + f.beta / (1.0 - t[i] / t1));
    }
  }
  if (f.log_n == -kInf) f.log_n = 0.0;
  return f;
}

double omega_shape_scale(LawKind kind, double b0) {
  switch (kind) {
    case LawKind::kNoFront:
      return 1.0 + b0 * b0;
    case LawKind::kCurbSafe:
      return 1.0 + b0 * b0 * b0 * b0;
    default:
      return 1.0;
  }
}

FittedConstants fit_constants(const Trajectory& traj, double b0) {
  const ControlLaw& law = traj.law;
  const PolarState& s0 = traj.initial();
  const ErrorNorm norm = law_error_norm(law.kind);
  FittedConstants fc;
  fc.shape_horizon = arrival_horizon(law, s0);
  if (b0 == 0.0) {
    fc.t1 = s0.rho / law.v;
    return fc;
  }
  std::vector<double> ts, yb, yw;
  const double w_scale = law.v * b0 * omega_shape_scale(law.kind, b0);
  for (const Sample& s : traj.samples) {
    const double b = b_of(s.state, norm);
    ts.push_back(s.t);
    yb.push_back(b > 0 ? 2 * std::log(b / b0) : -kInf);
    const double w = std::abs(s.inputs.omega);
    yw.push_back(w > 0 ? std::log(w / w_scale) : -kInf);
  }
  const ShapeFit fb = fit_shape(ts, yb, fc.shape_horizon);
  const ShapeFit fw = fit_shape(ts, yw, fc.shape_horizon);
  fc.log_n1 = fb.log_n;
  fc.beta1 = fb.beta;
  fc.log_n2 = fw.log_n;
  fc.beta2 = fw.beta;
  fc.residual_b = fb.residual;
  fc.residual_omega = fw.residual;
  fc.fitted_samples = fb.used;
  fc.t1 = s0.rho / law.v *
          std::sqrt(1.0 + std::exp(fb.log_n - fb.beta) * b0 * b0);
  return fc;
}

void check_backstep(const Trajectory& traj, const Tolerance& tol,
                    CertificateReport& rep) {
  const ControlLaw& law = traj.law;
  const PolarState& s0 = traj.initial();
  const double c1 = law.gains.c1, c2 = law.gains.c2;
  const double c_min = min_gain(law.gains);
  const double b0 = b_of(s0, ErrorNorm::kEuclid);
  const double m = gain_margin(c1);
  const double t1 = arrival_time_backstep(s0.rho, law.v, c1, b0);
  const double w0 = law.v / s0.rho * std::sqrt(2.0) *
                    (1.0 + coupling_gain(c1, c2)) * m * b0;

  Envelope rho("rho_envelope", tol), b("error_norm_envelope", tol),
      w("omega_envelope", tol);
  for (const Sample& s : traj.samples) {
    const double f = shrink_factor(s.t, t1);
    rho.add(s.t, s.state.rho, s0.rho * f);
    const double bt = b_of(s.state, ErrorNorm::kEuclid);
    b.add(s.t, bt * bt, m * m * std::pow(f, 2 * c_min) * b0 * b0);
    w.add(s.t, std::abs(s.inputs.omega), w0 * std::pow(f, c_min - 1));
  }
  rep.checks.push_back(std::move(rho).finish());
  rep.checks.push_back(std::move(b).finish());
  rep.checks.push_back(std::move(w).finish());
  rep.checks.push_back(lyapunov_check_result(traj));
  rep.checks.push_back(arrival_check(traj, t1));
}

void check_decel(const Trajectory& traj, const Tolerance& tol,
                 CertificateReport& rep) {
  const ControlLaw& law = traj.law;
  const PolarState& s0 = traj.initial();
  const Gains& g = law.gains;
  const double c_min = min_gain(g);
  const int n = g.n;
  const double b0 = b_of(s0, ErrorNorm::kEuclid);
  const double m = gain_margin(g.c1);
  const double t1 = arrival_time_decel(s0.rho, g.c0, n, g.c1, b0);
  const double v0 = g.c0 * std::pow(s0.rho, static_cast<double>(n) / (n + 1));
  const double w0 = g.c0 * decel_omega_constant(g.c1, g.c2) * m * b0 /
                    std::pow(s0.rho, 1.0 / (n + 1));

  Envelope rho("rho_envelope", tol), b("error_norm_envelope", tol),
      v("speed_envelope", tol), w("omega_envelope", tol);
  StrictCheck mono("speed_decreasing");
  for (std::size_t k = 0; k < traj.samples.size(); ++k) {
    const Sample& s = traj.samples[k];
    const double f = shrink_factor(s.t, t1);
    rho.add(s.t, s.state.rho, s0.rho * std::pow(f, n + 1));
    b.add(s.t, b_of(s.state, ErrorNorm::kEuclid),
          m * b0 * std::pow(f, (n + 1) * c_min));
    v.add(s.t, s.inputs.v, v0 * std::pow(f, n));
    w.add(s.t, std::abs(s.inputs.omega),
          w0 * std::pow(f, (n + 1) * c_min - 1));
    if (k > 0) mono.add(s.t, s.inputs.v, traj.samples[k - 1].inputs.v);
  }
  rep.checks.push_back(std::move(rho).finish());
  rep.checks.push_back(std::move(b).finish());
  rep.checks.push_back(std::move(v).finish());
  rep.checks.push_back(std::move(w).finish());
  rep.checks.push_back(std::move(mono).finish());
  rep.checks.push_back(lyapunov_check_result(traj));
  rep.checks.push_back(arrival_check(traj, t1));
}

void check_fitted(const Trajectory& traj, const Tolerance& tol,
                  CertificateReport& rep) {
  const ControlLaw& law = traj.law;
  const PolarState& s0 = traj.initial();
  const ErrorNorm norm = law_error_norm(law.kind);
  const double b0 = b_of(s0, norm);
  const FittedConstants fc = fit_constants(traj, b0);
  rep.fitted = fc;

  Envelope rho("rho_envelope_fitted", tol, false);
  for (const Sample& s : traj.samples) {
    rho.add(s.t, s.state.rho, s0.rho * shrink_factor(s.t, fc.t1));
  }
  rep.checks.push_back(std::move(rho).finish());

  // The fitted envelopes cover the data by construction; what can fail is
  // the shape itself (growth instead of decay, or an unbounded constant).
  CheckResult shape;
  shape.name = "decay_shape_fit";
  shape.exact = false;
  shape.worst_slack = -std::min(fc.beta1, fc.beta2);
  shape.passed = std::isfinite(fc.log_n1) && std::isfinite(fc.log_n2) &&
                 std::isfinite(fc.t1) && fc.beta1 >= 0 && fc.beta2 >= 0;
  rep.checks.push_back(shape);

  // Terminal error below the initial one: the angles actually decayed.
  Envelope decay("terminal_decay", tol);
  const Sample& last = traj.samples.back();
  decay.add(last.t, b_of(last.state, norm), b0);
  rep.checks.push_back(std::move(decay).finish());

  if (law.kind == LawKind::kNoFront) {
    StrictCheck safe("front_line_safety");
    for (const Sample& s : traj.samples) {
      safe.add(s.t, std::abs(s.state.delta), kPi);
    }
    rep.checks.push_back(std::move(safe).finish());
  } else if (law.kind == LawKind::kCurbSafe) {
    CheckResult safe;
    safe.name = "half_plane_safety";
    safe.worst_slack = -kInf;
    for (const Sample& s : traj.samples) {
      // delta in [0, pi): -delta <= 0 and delta - pi < 0.
      const double slack = std::max(-s.state.delta, s.state.delta - kPi);
      const bool ok = s.state.delta >= 0.0 && s.state.delta < kPi;
      if (!ok) safe.passed = false;
      if (!(slack <= safe.worst_slack)) {
        safe.worst_slack = slack;
        safe.worst_time = s.t;
      }
    }
    rep.checks.push_back(safe);
  }
  rep.checks.push_back(arrival_check(traj, fc.t1));
}

bool constant_speed_run(const Trajectory& traj, double* v) {
  bool first = true;
  for (const Sample& s : traj.samples) {
    if (traj.cutoff_time && &s == &traj.samples.back()) break;
    if (first) {
      *v = s.inputs.v;
      first = false;
    } else if (s.inputs.v != *v) {
      return false;
    }
  }
  return !first;
}

}  // namespace

double Tolerance::allowance(double rhs) const {
  return absolute + relative * std::abs(rhs);
}

bool CertificateReport::overall() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckResult& c) { return c.passed; });
}

const CheckResult* CertificateReport::find(const std::string& name) const {
  for (const CheckResult& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

double arrival_time_backstep(double rho0, double v, double c1, double b0) {
  if (!(rho0 > 0.0) || !(v > 0.0)) {
    throw DomainError("arrival time needs rho0 > 0 and v > 0");
  }
  const double m = gain_margin(c1);
  return rho0 / v * std::sqrt(1.0 + m * m * b0 * b0);
}

double arrival_time_decel(double rho0, double c0, int n, double c1,
                          double b0) {
  if (!(rho0 > 0.0) || !(c0 > 0.0) || n < 0) {
    throw DomainError("arrival time needs rho0 > 0, c0 > 0, n >= 0");
  }
  const double m = gain_margin(c1);
  return (n + 1) * std::pow(rho0, 1.0 / (n + 1)) / c0 *
         std::sqrt(1.0 + m * m * b0 * b0);
}

double decel_omega_constant(double c1, double c2) {
  return std::sqrt(2.0) * (1.0 + coupling_gain(c1, c2)) * gain_margin(c1);
}

double arrival_horizon(const ControlLaw& law, const PolarState& s0) {
  if (law.kind == LawKind::kDecel) {
    return arrival_time_decel(s0.rho, law.gains.c0, law.gains.n, law.gains.c1,
                              error_norm(s0.delta, s0.gamma, ErrorNorm::kEuclid));
  }
  return arrival_time_backstep(
      s0.rho, law.v, law.gains.c1,
      error_norm(s0.delta, s0.gamma, law_error_norm(law.kind)));
}

double DifferentialCheck::pass_fraction() const {
  if (interior == 0) return 1.0;
  return 1.0 - static_cast<double>(violations) / static_cast<double>(interior);
}

DifferentialCheck lyapunov_rate_check(const Trajectory& traj) {
  const ControlLaw& law = traj.law;
  if (law.kind != LawKind::kBackstep && law.kind != LawKind::kDecel) {
    throw InvalidArgument(
        "lyapunov_rate_check applies to the backstep and decel laws");
  }
  const double c1 = law.gains.c1;
  const double a = 2 * min_gain(law.gains);
  const auto& ss = traj.samples;
  std::vector<double> v(ss.size());
  for (std::size_t k = 0; k < ss.size(); ++k) {
    const double zeta = std::tan(ss[k].state.gamma) + c1 * ss[k].state.delta;
    v[k] = ss[k].state.delta * ss[k].state.delta + zeta * zeta;
  }
  DifferentialCheck d;
  d.worst_violation = -kInf;
  for (std::size_t k = 1; k + 1 < ss.size(); ++k) {
    const double r_prev = ss[k - 1].state.rho, r = ss[k].state.rho,
                 r_next = ss[k + 1].state.rho;
    const double d_plus = (v[k + 1] - v[k]) / (r_next - r);
    const double d_minus = (v[k] - v[k - 1]) / (r - r_prev);
    const double centered = (v[k + 1] - v[k - 1]) / (r_next - r_prev);
    const double tol = 10.0 * std::abs(d_plus - d_minus);
    const double violation = a * v[k] / r - centered - tol;
    ++d.interior;
    if (violation > 0.0) ++d.violations;
    if (violation > d.worst_violation) {
      d.worst_violation = violation;
      d.worst_time = ss[k].t;
    }
  }
  if (d.interior == 0) d.worst_violation = 0.0;
  return d;
}

CertificateReport check_trajectory(const Trajectory& traj,
                                   const ControlLaw& law,
                                   const Tolerance& tol) {
  if (!(traj.law == law)) {
    throw MismatchedLaw(fmt::format(
        "trajectory was produced under the {} law with different settings "
        "than the {} law being certified",
        to_string(traj.law.kind), to_string(law.kind)));
  }
  if (traj.samples.empty()) throw InvalidArgument("empty trajectory");
  CertificateReport rep;
  rep.law = law.kind;
  rep.checks.push_back(gamma_domain_check(traj));
  rep.checks.push_back(rho_decreasing_check(traj));
  switch (law.kind) {
    case LawKind::kBackstep:
      check_backstep(traj, tol, rep);
      break;
    case LawKind::kDecel:
      check_decel(traj, tol, rep);
      break;
    case LawKind::kSmooth:
    case LawKind::kNoFront:
    case LawKind::kCurbSafe:
      check_fitted(traj, tol, rep);
      break;
  }
  return rep;
}

const char* to_string(LemmaVerdict verdict) {
  switch (verdict) {
    case LemmaVerdict::kVerified:
      return "VERIFIED";
    case LemmaVerdict::kConclusionViolated:
      return "CONCLUSION_VIOLATED";
    case LemmaVerdict::kHypothesisNotMet:
      return "HYPOTHESIS_NOT_MET";
  }
  return "?";
}

LemmaResult comparison_lemma_check(std::span<const RhoValue> samples, double a,
                                   ComparisonGain gain, const Tolerance& tol) {
  if (samples.size() < 3) {
    throw InvalidArgument("comparison lemma check needs at least 3 samples");
  }
  if (!(a > 0.0)) throw InvalidArgument("comparison gain a must be positive");
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (!(samples[k].rho > 0.0) || !(samples[k].value >= 0.0)) {
      throw InvalidArgument("samples need rho > 0 and V >= 0");
    }
    if (k > 0 && !(samples[k].rho < samples[k - 1].rho)) {
      throw InvalidArgument("rho must be strictly decreasing");
    }
  }
  auto rate = [&](double rho) {
    return gain == ComparisonGain::kLinear ? a / rho : a / (rho * rho);
  };

  LemmaResult res;
  for (std::size_t k = 1; k + 1 < samples.size(); ++k) {
    const RhoValue &p = samples[k - 1], &c = samples[k], &n = samples[k + 1];
    const double d_plus = (n.value - c.value) / (n.rho - c.rho);
    const double d_minus = (c.value - p.value) / (c.rho - p.rho);
    const double centered = (n.value - p.value) / (n.rho - p.rho);
    const double fd_tol = 10.0 * std::abs(d_plus - d_minus);
    if (rate(c.rho) * c.value - centered > fd_tol) res.flagged.push_back(k);
  }
  if (!res.flagged.empty()) {
    res.verdict = LemmaVerdict::kHypothesisNotMet;
    return res;
  }

  const double rho0 = samples.front().rho;
  const double v0 = samples.front().value;
  res.worst_slack = -kInf;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const double rho = samples[k].rho;
    const double bound =
        gain == ComparisonGain::kLinear
            ? v0 * std::pow(rho / rho0, a)
            : v0 * std::exp(a * (1.0 / rho0 - 1.0 / rho));
    const double slack = samples[k].value - bound - tol.allowance(bound);
    res.worst_slack = std::max(res.worst_slack, slack);
    if (slack > 0.0) res.flagged.push_back(k);
  }
  res.verdict = res.flagged.empty() ? LemmaVerdict::kVerified
                                    : LemmaVerdict::kConclusionViolated;
  return res;
}

ClassKFunction::ClassKFunction(Form form, double gain, double param)
    : form_(form), gain_(gain), param_(param) {
  if (!(gain > 0.0) || !std::isfinite(gain)) {
    throw InvalidArgument("class-K gain must be positive and finite");
  }
  if (form != Form::kLinear && !(param > 0.0)) {
    throw InvalidArgument("class-K exponent/scale must be positive");
  }
}

ClassKFunction ClassKFunction::linear(double gain) {
  return {Form::kLinear, gain, 1.0};
}

ClassKFunction ClassKFunction::power(double gain, double exponent) {
  return {Form::kPower, gain, exponent};
}

ClassKFunction ClassKFunction::scaled(double gain, double scale) {
  return {Form::kScaled, gain, scale};
}

double ClassKFunction::operator()(double s) const {
  switch (form_) {
    case Form::kLinear:
      return gain_ * s;
    case Form::kPower:
      return gain_ * std::pow(s, param_);
    case Form::kScaled:
      return gain_ * s / (param_ + s);
  }
  return 0.0;
}

LemmaResult arrival_lemma_check(const Trajectory& traj,
                                const ClassKFunction& alpha,
                                const Tolerance& tol) {
  double v = 0.0;
  if (!constant_speed_run(traj, &v) || !(v > 0.0)) {
    throw InvalidArgument("arrival lemma needs a constant positive speed");
  }
  const double rho0 = traj.initial().rho;
  LemmaResult res;
  for (std::size_t k = 0; k < traj.samples.size(); ++k) {
    const PolarState& s = traj.samples[k].state;
    const double tg = std::tan(s.gamma);
    const double a = alpha(s.rho / rho0);
    if (!(std::cos(s.gamma) > 0.0) || tg * tg > a + tol.allowance(a)) {
      res.flagged.push_back(k);
    }
  }
  if (!res.flagged.empty()) {
    res.verdict = LemmaVerdict::kHypothesisNotMet;
    return res;
  }
  const double t1 = rho0 / v * std::sqrt(1.0 + alpha(1.0));
  res.worst_slack = -kInf;
  for (std::size_t k = 0; k < traj.samples.size(); ++k) {
    const Sample& s = traj.samples[k];
    const double bound = rho0 * std::max(0.0, 1.0 - s.t / t1);
    const double slack = s.state.rho - bound - tol.allowance(bound);
    res.worst_slack = std::max(res.worst_slack, slack);
    if (slack > 0.0) res.flagged.push_back(k);
  }
  res.verdict = res.flagged.empty() ? LemmaVerdict::kVerified
                                    : LemmaVerdict::kConclusionViolated;
  return res;
}

}  // namespace dbpark
