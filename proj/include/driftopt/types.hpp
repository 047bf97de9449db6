#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

namespace driftopt {

inline constexpr double kPi = 3.14159265358979323846;

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a = kPi;
  return a;
}

/// Signed minimal angular difference a - b, in (-pi, pi].
inline double wrap_angle_diff(double a, double b) { return wrap_angle(a - b); }

/// Planar pose in the world frame. The heading is always stored wrapped
/// to (-pi, pi].
struct CarPose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;

  CarPose() = default;
  CarPose(double x_, double y_, double heading_) : x(x_), y(y_), heading(wrap_angle(heading_)) {}

  Eigen::Vector3d vec() const { return {x, y, heading}; }
};

/// Velocity expressed in the car's body frame: x forward, y left,
/// omega counterclockwise yaw rate.
struct BodyVelocity {
  double vx = 0.0;
  double vy = 0.0;
  double omega = 0.0;

  BodyVelocity() = default;
  BodyVelocity(double vx_, double vy_, double omega_) : vx(vx_), vy(vy_), omega(omega_) {}

  Eigen::Vector3d vec() const { return {vx, vy, omega}; }
  bool finite() const { return std::isfinite(vx) && std::isfinite(vy) && std::isfinite(omega); }
};

/// Normalized drive command. Both axes are clamped to [-1, 1] at
/// construction; this is the range the plant accepts.
struct ControlInput {
  double throttle = 0.0;
  double steer = 0.0;

  ControlInput() = default;
  ControlInput(double throttle_, double steer_)
      : throttle(std::clamp(throttle_, -1.0, 1.0)), steer(std::clamp(steer_, -1.0, 1.0)) {}

  Eigen::Vector2d vec() const { return {throttle, steer}; }
};

/// Full planar state: pose plus body velocity. The simulator integrates
/// this; trajectory rollouts carry it so that velocity memory is explicit.
struct SimState {
  CarPose pose;
  BodyVelocity vel;

  SimState() = default;
  SimState(const CarPose& p, const BodyVelocity& v) : pose(p), vel(v) {}

  Eigen::Matrix<double, 6, 1> vec() const {
    Eigen::Matrix<double, 6, 1> z;
    z << pose.x, pose.y, pose.heading, vel.vx, vel.vy, vel.omega;
    return z;
  }

  static SimState from_vec(const Eigen::Matrix<double, 6, 1>& z) {
    return {CarPose(z[0], z[1], z[2]), BodyVelocity(z[3], z[4], z[5])};
  }
};

/// Rotates a body-frame planar velocity into the world frame; yaw rate
/// passes through.
inline Eigen::Vector3d body_to_global(double heading, const BodyVelocity& v) {
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  return {c * v.vx - s * v.vy, s * v.vx + c * v.vy, v.omega};
}

/// Rotates a world-frame planar velocity into the body frame of a car with
/// the given heading; the heading rate passes through.
inline BodyVelocity global_to_body(double heading, const Eigen::Vector3d& global_vel) {
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  return {c * global_vel[0] + s * global_vel[1], -s * global_vel[0] + c * global_vel[1],
          global_vel[2]};
}

}  // namespace driftopt
