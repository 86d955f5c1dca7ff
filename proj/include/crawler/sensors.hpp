#pragma once

#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crawler/execution.hpp"
#include "crawler/geometry.hpp"
#include "crawler/rng.hpp"
#include "crawler/world.hpp"

namespace crawler {

using Tick = std::int64_t;

enum class CrosstalkMode { flag, inject };

/// Ring of pulse-echo transducers.
struct UltrasonicConfig {
  double min_range = 0.01;
  double max_range = 2.0;
  double beam_width_deg = 30.0;  ///< full cone angle
  double sample_rate_hz = 10.0;
  std::vector<double> mount_angles{0.0, std::numbers::pi / 2, std::numbers::pi,
                                   3 * std::numbers::pi / 2};
  double incidence_threshold_deg = 45.0;  ///< grazing angle below which echoes are lost
  double noise_sigma = 0.0;
  double frequency_khz = 10.0;
  int cone_rays = 7;  ///< odd, so the axis ray is always cast
  double detection_budget_db = 60.0;
  double crosstalk_epsilon = 0.05;
  CrosstalkMode crosstalk_mode = CrosstalkMode::flag;
  long unit_cost = 100;

  /// Throws std::invalid_argument on an inconsistent configuration.
  void validate() const;
};

struct LidarConfig {
  int beams_per_scan = 720;
  double fov_deg = 360.0;
  double min_range = 1.0;
  double max_range = 10.0;
  double systematic_error = 0.050;
  double noise_sigma = 0.0;
  double power_w = 125.0;
  double scan_rate_hz = 1.0;
  double detection_fraction = 1e-4;
  long unit_cost = 100000;

  void validate() const;
  double angle_increment() const { return deg_to_rad(fov_deg) / beams_per_scan; }
  double start_angle() const { return -deg_to_rad(fov_deg) / 2.0; }
};

/// One sonar echo. `distance` is empty for the max-range (no echo) flag.
struct RangeReading {
  int sensor_index = 0;
  std::optional<double> distance;
  double echo_time = 0.0;  ///< for max-range: the listening window 2*R/c
  Vec2 beam_axis_world{1.0, 0.0};
  double beam_width_deg = 30.0;
  Tick tick = 0;
  bool crosstalk_suspect = false;

  bool is_max_range() const { return !distance.has_value(); }
};

enum class ReturnStatus : std::uint8_t {
  valid,
  max_range,  ///< nothing within effective range
  too_close,  ///< surface closer than min_range; carries no free-space evidence
};

struct LidarReturn {
  ReturnStatus status = ReturnStatus::max_range;
  double distance = 0.0;
};

struct LidarScan {
  std::vector<LidarReturn> ranges;
  double start_angle = 0.0;  ///< body frame
  double angle_increment = 0.0;
  Tick tick = 0;

  double beam_angle(std::size_t i) const { return start_angle + angle_increment * static_cast<double>(i); }
};

/// D = c t / 2.
double echo_time_to_distance(double t, double c);
double distance_to_echo_time(double d, double c);

/// Angle subtended by a beam of width w at range r: 2 atan(w / (2 r)).
double beam_spread(double w, double r);

/// Largest range at which the round trip stays detectable given the medium's
/// absorption: 2 d alpha <= budget (dB) for sound, exp(-2 alpha d) >= fraction
/// for light. Infinite when alpha is 0.
double attenuation_limited_range(const UltrasonicConfig& cfg, const MediumProperties& medium);
double attenuation_limited_range(const LidarConfig& cfg, const MediumProperties& medium);

/// min(max_range, attenuation_limited_range).
double effective_range(const UltrasonicConfig& cfg, const MediumProperties& medium);
double effective_range(const LidarConfig& cfg, const MediumProperties& medium);

/// Pose of transducer `index` for a robot at `robot` (mounted at the body
/// center, axis rotated by the mount angle).
Pose2D sonar_pose(const Pose2D& robot, const UltrasonicConfig& cfg, int index);

/// Noiseless echo distance for a transducer pose, or nullopt when no ray in the
/// cone survives absorption, grazing dropout and attenuation.
std::optional<double> ultrasonic_echo(const WorldModel& world, const Pose2D& sensor_pose,
                                      const UltrasonicConfig& cfg);

RangeReading ultrasonic_measure(const WorldModel& world, const Pose2D& sensor_pose,
                                const UltrasonicConfig& cfg, Rng& rng, int sensor_index = 0,
                                Tick tick = 0);

/// Fires every transducer in mount order and applies crosstalk marking.
std::vector<RangeReading> sample_sonar_ring(const WorldModel& world, const Pose2D& robot,
                                            const UltrasonicConfig& cfg, Rng& rng, Tick tick = 0);

/// Flags readings whose distances agree within epsilon while their cones
/// overlap. In inject mode the overlapping pair also swap distances.
std::vector<RangeReading> mark_crosstalk(std::vector<RangeReading> readings,
                                         const UltrasonicConfig& cfg);

/// True when two cones (axis angles, full widths in degrees) share a direction.
bool cones_overlap(double axis_a, double width_a_deg, double axis_b, double width_b_deg);

LidarScan lidar_scan(const WorldModel& world, const Pose2D& robot, const LidarConfig& cfg,
                     Rng& rng, Tick tick = 0, Execution exec = Execution::parallel);

/// Line-oriented trace row: tick,sensor,distance|MAX,echo_time,crosstalk
std::string format_reading(const RangeReading& r);

}  // namespace crawler
