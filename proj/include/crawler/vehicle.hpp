#pragma once

#include "crawler/geometry.hpp"
#include "crawler/world.hpp"

namespace crawler {

/// Six-element crawler state. The crawler works on a plane: z, roll and pitch
/// stay 0 and yaw stays in (-pi, pi].
struct StateVector {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;

  static StateVector planar(double x, double y, double yaw) {
    return {x, y, 0.0, 0.0, 0.0, wrap_angle(yaw)};
  }
  static StateVector from_pose(const Pose2D& p) { return planar(p.x, p.y, p.yaw); }
  Pose2D pose() const { return {x, y, yaw}; }
  bool operator==(const StateVector&) const = default;
};

struct VelocityCommand {
  double v = 0.0;      ///< forward speed, m/s
  double omega = 0.0;  ///< yaw rate, rad/s
  bool operator==(const VelocityCommand&) const = default;
};

struct VehicleConfig {
  double v_max = 0.5;
  double omega_max = 1.0;
  double footprint_radius = 0.2;
  /// Multiplicative actuation error on the true crawler (fraction of the
  /// command, 1-sigma). Zero keeps the crawler on its commanded track.
  double actuation_noise_v = 0.0;
  double actuation_noise_omega = 0.0;

  void validate() const;
};

/// Clamps |v| <= v_max and |omega| <= omega_max.
VelocityCommand clamp_command(VelocityCommand cmd, const VehicleConfig& cfg);

/// Euler step: x += v dt cos(yaw), y += v dt sin(yaw), yaw += omega dt.
StateVector step_kinematics(const StateVector& state, const VelocityCommand& cmd, double dt);

/// True iff the footprint disc overlaps any active obstacle or leaves the
/// enclosure.
bool check_collision(const WorldModel& world, const StateVector& state, double footprint_radius);

}  // namespace crawler
