#pragma once

#include <numbers>

namespace dbpark {

inline constexpr double kPi = std::numbers::pi;

/// Margin kept away from tan poles (|gamma| -> pi/2) and from the edges of
/// the delta intervals some laws require.
inline constexpr double kAngleEpsilon = 1e-9;

/// World pose of the vehicle. The target sits at the origin facing +x.
struct CartesianPose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

/// Distance to target, polar angle of the vehicle position, and line-of-sight
/// angle. Integration keeps delta unwrapped (it lives on the real line for
/// the backstepping laws); only cart_to_polar produces wrapped angles.
struct PolarState {
  double rho = 1.0;
  double delta = 0.0;
  double gamma = 0.0;
};

enum class ErrorNorm {
  kEuclid,  ///< sqrt(delta^2 + tan^2 gamma)
  kHalf4,   ///< sqrt(4 tan^2(delta/2) + tan^2 gamma)
  kHalf1,   ///< sqrt(tan^2(delta/2) + tan^2 gamma)
};

/// Wraps an angle into [-pi, pi).
double wrap_angle(double angle);

/// Shortest signed difference a - b, wrapped into [-pi, pi).
double angle_difference(double a, double b);

/// Throws DegenerateOrigin when (x, y) = (0, 0).
PolarState cart_to_polar(const CartesianPose& pose);

/// Inverse of cart_to_polar: x = -rho cos(delta), y = -rho sin(delta),
/// theta = wrap(delta - gamma). Throws DomainError when rho <= 0.
CartesianPose polar_to_cart(const PolarState& state);

/// Error norm B(delta, gamma) in the requested variant. Throws DomainError
/// when an argument is within kAngleEpsilon of a tan pole.
double error_norm(double delta, double gamma, ErrorNorm variant);

/// Gain margin M(s) = 1 + s^2/2 + s sqrt(1 + s^2/4). M(s)^2 is the condition
/// number of [[1 + s^2, s], [s, 1]]. Throws DomainError for s < 0.
double gain_margin(double s);

const char* to_string(ErrorNorm variant);

}  // namespace dbpark
