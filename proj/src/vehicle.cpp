#include "crawler/vehicle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "crawler/errors.hpp"

namespace crawler {

void VehicleConfig::validate() const {
  if (!(v_max > 0.0) || !(omega_max > 0.0))
    throw std::invalid_argument("vehicle: v_max and omega_max must be > 0");
  if (!(footprint_radius > 0.0)) throw std::invalid_argument("vehicle: footprint_radius must be > 0");
  if (actuation_noise_v < 0.0 || actuation_noise_omega < 0.0)
    throw std::invalid_argument("vehicle: actuation noise must be >= 0");
}

VelocityCommand clamp_command(VelocityCommand cmd, const VehicleConfig& cfg) {
  cmd.v = std::clamp(cmd.v, -cfg.v_max, cfg.v_max);
  cmd.omega = std::clamp(cmd.omega, -cfg.omega_max, cfg.omega_max);
  return cmd;
}

StateVector step_kinematics(const StateVector& s, const VelocityCommand& cmd, double dt) {
  CRAWLER_EXPECTS(dt > 0.0, "step_kinematics: dt must be > 0");
  StateVector next = s;
  next.x = s.x + cmd.v * dt * std::cos(s.yaw);
  next.y = s.y + cmd.v * dt * std::sin(s.yaw);
  next.yaw = wrap_angle(s.yaw + cmd.omega * dt);
  next.z = next.roll = next.pitch = 0.0;
  return next;
}

namespace {

bool inside_polygon(Vec2 p, const std::vector<Vec2>& v) {
  bool inside = false;
  for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
    if ((v[i].y > p.y) != (v[j].y > p.y)) {
      const double x = v[j].x + (p.y - v[j].y) * (v[i].x - v[j].x) / (v[i].y - v[j].y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

}  // namespace

bool check_collision(const WorldModel& world, const StateVector& state, double footprint_radius) {
  CRAWLER_EXPECTS(footprint_radius > 0.0, "check_collision: footprint_radius must be > 0");
  const Vec2 p{state.x, state.y};
  if (!world.contains(p)) return true;
  for (const Edge& e : world.edges())
    if (point_segment_distance(p, e.a, e.b) < footprint_radius) return true;
  const auto& obstacles = world.obstacles();
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    if (!world.is_active(i) || obstacles[i].kind != ShapeKind::polygon) continue;
    if (inside_polygon(p, obstacles[i].vertices)) return true;
  }
  return false;
}

}  // namespace crawler
