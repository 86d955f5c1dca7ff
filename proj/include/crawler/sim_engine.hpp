#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crawler/localization.hpp"
#include "crawler/mapping.hpp"
#include "crawler/planning.hpp"
#include "crawler/sensors.hpp"
#include "crawler/vehicle.hpp"
#include "crawler/world.hpp"

namespace crawler {

enum class Suite { ultrasonic, lidar, both };
enum class RunMode { navigate, explore, teleop };
enum class LocalizationMode { ground_truth, dead_reckoning, particle_filter };
enum class MapSource { estimated_map, world };

struct LocalizationConfig {
  LocalizationMode mode = LocalizationMode::ground_truth;
  MapSource map_source = MapSource::estimated_map;
  int particles = 500;
  double init_sigma_xy = 0.0;
  double init_sigma_yaw = 0.0;
  MotionNoise motion{};
  LikelihoodConfig likelihood{};
};

struct ScriptStep {
  double t = 0.0;  ///< seconds; the command holds until the next step
  VelocityCommand cmd;
};

/// Frontier-chasing knobs for explore runs.
struct ExploreConfig {
  int min_frontier_cells = 5;  ///< ignore frontiers closer than this (BFS cells)
  int stall_ticks = 100;       ///< give up on a target after this many ticks
  double reach_tolerance = 0.3;
  double spin_rad = 1.5707963267948966;  ///< turn in place after reaching a target
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::string world_path;
  WorldModel world;  ///< static world plus the scenario's dynamic obstacles
  Suite suite = Suite::ultrasonic;
  UltrasonicConfig ultrasonic{};
  LidarConfig lidar{};
  VehicleConfig vehicle{};
  MappingConfig mapping{};
  LocalizationConfig localization{};
  PlanningConfig planning{};
  ExploreConfig explore{};
  Pose2D start{};
  RunMode mode = RunMode::navigate;
  Vec2 goal{};
  double goal_tolerance = 0.2;
  std::vector<ScriptStep> script;
  double duration_s = 60.0;
  double dt = 0.1;
  std::uint64_t seed = 0;
  long tick_budget = 100000;

  long max_ticks() const;
  /// Throws ConfigError (or the component's std::invalid_argument).
  void validate() const;
};

/// Parses a scenario file. Relative world paths resolve against base_dir.
ScenarioConfig load_scenario(std::string_view text, const std::string& base_dir);
/// ConfigError when the file (or its world) cannot be read.
ScenarioConfig load_scenario_file(const std::string& path);

Suite parse_suite(std::string_view s);
std::string_view to_string(Suite s);

enum class SimStatus { goal_reached, no_path, collision, timeout, coverage_complete };
std::string_view to_string(SimStatus s);

struct TraceRow {
  Tick tick = 0;
  Pose2D truth;
  Pose2D estimate;
  double cov_trace = 0.0;
  VelocityCommand cmd;
};

/// Everything sensed during one tick.
struct TickReadings {
  std::vector<RangeReading> sonar;
  std::optional<LidarScan> lidar;
};

struct SimResult {
  std::string scenario;
  std::uint64_t seed = 0;
  SimStatus status = SimStatus::timeout;
  Tick ticks = 0;
  OccupancyGrid map;
  std::vector<TraceRow> trace;
  std::vector<TickReadings> readings;
  int replans = 0;
  int collision_ticks = 0;
  int filter_divergences = 0;
  Pose2D final_truth;
  Pose2D final_estimate;
};

/// Closed loop: spawn, sense, localize, map, plan, act, collision check.
/// Never throws once the config is valid; every failure is a status.
SimResult run_scenario(const ScenarioConfig& cfg);

/// Same loop with the planner replaced by the timed commands.
SimResult run_teleop_script(const ScenarioConfig& cfg, const std::vector<ScriptStep>& script);

/// Root-mean-square distance between true and estimated positions.
double localization_rmse(const SimResult& r);

/// One row per tick: tick,true_x,true_y,true_yaw,est_x,est_y,est_yaw,cov_trace,cmd_v,cmd_omega,sonar,lidar_valid
std::string format_trace_csv(const SimResult& r);

/// Deterministic JSON. `extra` is merged in at the top level (metrics).
std::string format_result_json(const SimResult& r, const std::string& extra_json = "{}");

}  // namespace crawler
