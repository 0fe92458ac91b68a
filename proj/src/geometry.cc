#include "dbpark/geometry.h"

#include <cmath>
#include <string>

#include "dbpark/errors.h"

namespace dbpark {
namespace {

// Floored modulus, result in [0, m).
double positive_mod(double a, double m) {
  double r = std::fmod(a, m);
  if (r < 0.0) r += m;
  // fmod can return m itself after the correction for tiny negatives.
  if (r >= m) r -= m;
  return r;
}

void require_tan_domain(double angle, const char* what) {
  if (!(std::abs(angle) < kPi / 2 - kAngleEpsilon)) {
    throw DomainError(std::string(what) + " = " + std::to_string(angle) +
                      " is at a tan pole");
  }
}

}  // namespace

double wrap_angle(double angle) {
  return positive_mod(angle + kPi, 2 * kPi) - kPi;
}

double angle_difference(double a, double b) { return wrap_angle(a - b); }

PolarState cart_to_polar(const CartesianPose& pose) {
  if (pose.x == 0.0 && pose.y == 0.0) {
    throw DegenerateOrigin("pose at the target has no polar angle");
  }
  const double bearing = std::atan2(pose.y, pose.x);
  PolarState s;
  s.rho = std::hypot(pose.x, pose.y);
  s.delta = positive_mod(bearing, 2 * kPi) - kPi;
  s.gamma = positive_mod(bearing - pose.theta, 2 * kPi) - kPi;
  return s;
}

CartesianPose polar_to_cart(const PolarState& state) {
  if (!(state.rho > 0.0)) {
    throw DomainError("polar_to_cart needs rho > 0");
  }
  return {-state.rho * std::cos(state.delta),
          -state.rho * std::sin(state.delta),
          wrap_angle(state.delta - state.gamma)};
}

double error_norm(double delta, double gamma, ErrorNorm variant) {
  require_tan_domain(gamma, "gamma");
  const double tg = std::tan(gamma);
  switch (variant) {
    case ErrorNorm::kEuclid:
      return std::sqrt(delta * delta + tg * tg);
    case ErrorNorm::kHalf4:
    case ErrorNorm::kHalf1: {
      if (!(std::abs(delta) < kPi - 2 * kAngleEpsilon)) {
        throw DomainError("half-angle error norm needs |delta| < pi");
      }
      const double th = std::tan(delta / 2);
      const double w = variant == ErrorNorm::kHalf4 ? 4.0 : 1.0;
      return std::sqrt(w * th * th + tg * tg);
    }
  }
  return 0.0;
}

double gain_margin(double s) {
  if (!(s >= 0.0)) throw DomainError("gain_margin needs s >= 0");
  return 1.0 + s * s / 2 + s * std::sqrt(1.0 + s * s / 4);
}

const char* to_string(ErrorNorm variant) {
  switch (variant) {
    case ErrorNorm::kEuclid:
      return "euclid";
    case ErrorNorm::kHalf4:
      return "half4";
    case ErrorNorm::kHalf1:
      return "half1";
  }
  return "?";
}

}  // namespace dbpark
