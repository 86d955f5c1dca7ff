#include "crawler/sensors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace crawler {

void UltrasonicConfig::validate() const {
  if (!(min_range > 0.0 && min_range < max_range))
    throw std::invalid_argument("ultrasonic: need 0 < min_range < max_range");
  if (!(beam_width_deg > 0.0 && beam_width_deg < 180.0))
    throw std::invalid_argument("ultrasonic: beam_width_deg must be in (0, 180)");
  if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("ultrasonic: sample_rate_hz must be > 0");
  if (mount_angles.empty()) throw std::invalid_argument("ultrasonic: no mount angles");
  if (cone_rays < 1 || cone_rays % 2 == 0)
    throw std::invalid_argument("ultrasonic: cone_rays must be a positive odd number");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("ultrasonic: noise_sigma must be >= 0");
  if (!(detection_budget_db > 0.0))
    throw std::invalid_argument("ultrasonic: detection_budget_db must be > 0");
  if (unit_cost < 0) throw std::invalid_argument("ultrasonic: unit_cost must be >= 0");
}

void LidarConfig::validate() const {
  if (beams_per_scan < 1) throw std::invalid_argument("lidar: beams_per_scan must be >= 1");
  if (!(fov_deg > 0.0 && fov_deg <= 360.0))
    throw std::invalid_argument("lidar: fov_deg must be in (0, 360]");
  if (!(min_range >= 0.0 && min_range < max_range))
    throw std::invalid_argument("lidar: need min_range < max_range");
  if (!(scan_rate_hz > 0.0)) throw std::invalid_argument("lidar: scan_rate_hz must be > 0");
  if (!(detection_fraction > 0.0 && detection_fraction < 1.0))
    throw std::invalid_argument("lidar: detection_fraction must be in (0, 1)");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("lidar: noise_sigma must be >= 0");
  if (unit_cost < 0) throw std::invalid_argument("lidar: unit_cost must be >= 0");
}

double echo_time_to_distance(double t, double c) { return c * t / 2.0; }

double distance_to_echo_time(double d, double c) { return 2.0 * d / c; }

double beam_spread(double w, double r) { return 2.0 * std::atan(w / (2.0 * r)); }

double attenuation_limited_range(const UltrasonicConfig& cfg, const MediumProperties& medium) {
  const double alpha = medium.ultrasonic_attenuation_db_per_m;
  if (alpha <= 0.0) return std::numeric_limits<double>::infinity();
  return cfg.detection_budget_db / (2.0 * alpha);
}

double attenuation_limited_range(const LidarConfig& cfg, const MediumProperties& medium) {
  const double alpha = medium.lidar_attenuation_per_m;
  if (alpha <= 0.0) return std::numeric_limits<double>::infinity();
  return std::log(1.0 / cfg.detection_fraction) / (2.0 * alpha);
}

double effective_range(const UltrasonicConfig& cfg, const MediumProperties& medium) {
  return std::min(cfg.max_range, attenuation_limited_range(cfg, medium));
}

double effective_range(const LidarConfig& cfg, const MediumProperties& medium) {
  return std::min(cfg.max_range, attenuation_limited_range(cfg, medium));
}

Pose2D sonar_pose(const Pose2D& robot, const UltrasonicConfig& cfg, int index) {
  return {robot.x, robot.y, wrap_angle(robot.yaw + cfg.mount_angles.at(static_cast<std::size_t>(index)))};
}

std::optional<double> ultrasonic_echo(const WorldModel& world, const Pose2D& sensor_pose,
                                      const UltrasonicConfig& cfg) {
  const double reach = effective_range(cfg, world.medium());
  const double half = deg_to_rad(cfg.beam_width_deg) / 2.0;
  const double sin_threshold = std::sin(deg_to_rad(cfg.incidence_threshold_deg));
  std::optional<double> nearest;
  for (int j = 0; j < cfg.cone_rays; ++j) {
    const double offset =
        cfg.cone_rays == 1 ? 0.0 : half * (2.0 * j / (cfg.cone_rays - 1) - 1.0);
    const Vec2 dir = unit_from_angle(sensor_pose.yaw + offset);
    const auto hit = raycast(world, sensor_pose.position(), dir, reach);
    if (!hit || hit->material == Material::absorbing) continue;
    // sin(grazing angle) = |dir . n|; at or below the threshold the echo is lost.
    if (std::abs(dot(dir, hit->surface_normal)) <= sin_threshold + 1e-12) continue;
    if (!nearest || hit->distance < *nearest) nearest = hit->distance;
  }
  return nearest;
}

RangeReading ultrasonic_measure(const WorldModel& world, const Pose2D& sensor_pose,
                                const UltrasonicConfig& cfg, Rng& rng, int sensor_index, Tick tick) {
  const double c = world.medium().sound_speed;
  RangeReading r;
  r.sensor_index = sensor_index;
  r.beam_axis_world = unit_from_angle(sensor_pose.yaw);
  r.beam_width_deg = cfg.beam_width_deg;
  r.tick = tick;

  const auto echo = ultrasonic_echo(world, sensor_pose, cfg);
  const double noise = rng.normal();  // drawn unconditionally to keep the stream aligned
  if (!echo) {
    r.echo_time = distance_to_echo_time(effective_range(cfg, world.medium()), c);
    return r;
  }
  const double d = std::clamp(*echo + cfg.noise_sigma * noise, cfg.min_range, cfg.max_range);
  r.echo_time = distance_to_echo_time(d, c);
  r.distance = d;
  return r;
}

bool cones_overlap(double axis_a, double width_a_deg, double axis_b, double width_b_deg) {
  const double separation = std::abs(wrap_angle(axis_a - axis_b));
  return separation < deg_to_rad(width_a_deg + width_b_deg) / 2.0;
}

std::vector<RangeReading> mark_crosstalk(std::vector<RangeReading> readings,
                                         const UltrasonicConfig& cfg) {
  const std::size_t n = readings.size();
  std::vector<bool> suspect(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const RangeReading& a = readings[i];
      const RangeReading& b = readings[j];
      const double axis_a = std::atan2(a.beam_axis_world.y, a.beam_axis_world.x);
      const double axis_b = std::atan2(b.beam_axis_world.y, b.beam_axis_world.x);
      if (!cones_overlap(axis_a, a.beam_width_deg, axis_b, b.beam_width_deg)) continue;
      if (cfg.crosstalk_mode == CrosstalkMode::inject) {
        if (a.is_max_range() && b.is_max_range()) continue;
        std::swap(readings[i].distance, readings[j].distance);
        std::swap(readings[i].echo_time, readings[j].echo_time);
        suspect[i] = suspect[j] = true;
        continue;
      }
      if (a.is_max_range() || b.is_max_range()) continue;
      if (std::abs(*a.distance - *b.distance) <= cfg.crosstalk_epsilon) suspect[i] = suspect[j] = true;
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (suspect[i]) readings[i].crosstalk_suspect = true;
  return readings;
}

std::vector<RangeReading> sample_sonar_ring(const WorldModel& world, const Pose2D& robot,
                                            const UltrasonicConfig& cfg, Rng& rng, Tick tick) {
  std::vector<RangeReading> ring;
  ring.reserve(cfg.mount_angles.size());
  for (std::size_t i = 0; i < cfg.mount_angles.size(); ++i) {
    const int idx = static_cast<int>(i);
    ring.push_back(ultrasonic_measure(world, sonar_pose(robot, cfg, idx), cfg, rng, idx, tick));
  }
  return mark_crosstalk(std::move(ring), cfg);
}

LidarScan lidar_scan(const WorldModel& world, const Pose2D& robot, const LidarConfig& cfg,
                     Rng& rng, Tick tick, Execution exec) {
  LidarScan scan;
  scan.start_angle = cfg.start_angle();
  scan.angle_increment = cfg.angle_increment();
  scan.tick = tick;

  const std::size_t n = static_cast<std::size_t>(cfg.beams_per_scan);
  std::vector<Vec2> dirs(n);
  for (std::size_t i = 0; i < n; ++i) dirs[i] = unit_from_angle(robot.yaw + scan.beam_angle(i));
  const auto hits = raycast_many(world, robot.position(), dirs, cfg.max_range, exec);

  const double reach = effective_range(cfg, world.medium());
  scan.ranges.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double noise = rng.normal();
    LidarReturn& out = scan.ranges[i];
    const auto& hit = hits[i];
    if (!hit || hit->distance > reach) {
      out.status = ReturnStatus::max_range;
    } else if (hit->distance < cfg.min_range) {
      out.status = ReturnStatus::too_close;
    } else {
      out.status = ReturnStatus::valid;
      out.distance = std::clamp(hit->distance + cfg.systematic_error + cfg.noise_sigma * noise,
                                cfg.min_range, cfg.max_range);
    }
  }
  return scan;
}

std::string format_reading(const RangeReading& r) {
  char buf[128];
  if (r.distance) {
    std::snprintf(buf, sizeof buf, "%lld,%d,%.6f,%.9f,%d", static_cast<long long>(r.tick),
                  r.sensor_index, *r.distance, r.echo_time, r.crosstalk_suspect ? 1 : 0);
  } else {
    std::snprintf(buf, sizeof buf, "%lld,%d,MAX,%.9f,%d", static_cast<long long>(r.tick),
                  r.sensor_index, r.echo_time, r.crosstalk_suspect ? 1 : 0);
  }
  return buf;
}

}  // namespace crawler
