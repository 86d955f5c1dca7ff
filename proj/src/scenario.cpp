#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "crawler/errors.hpp"
#include "crawler/sim_engine.hpp"
#include "json_detail.hpp"

namespace crawler {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ParseError(where, "expected an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ParseError(where.empty() ? key : where + "." + key, "unknown field");
  }
}

std::string string_or(const json& j, const std::string& key, const std::string& fallback,
                      const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) throw ParseError(where + "." + key, "expected a string");
  return j.at(key).get<std::string>();
}

int int_or(const json& j, const std::string& key, int fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer()) throw ParseError(where + "." + key, "expected an integer");
  return j.at(key).get<int>();
}

long long_or(const json& j, const std::string& key, long fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer()) throw ParseError(where + "." + key, "expected an integer");
  return j.at(key).get<long>();
}

template <class Enum>
Enum enum_or(const json& j, const std::string& key, Enum fallback, const std::string& where,
             std::initializer_list<std::pair<const char*, Enum>> names) {
  if (!j.contains(key)) return fallback;
  const std::string s = string_or(j, key, "", where);
  for (const auto& [name, value] : names)
    if (s == name) return value;
  std::string options;
  for (const auto& [name, value] : names) options += std::string(options.empty() ? "" : "|") + name;
  throw ParseError(where + "." + key, "expected one of " + options);
}

UltrasonicConfig parse_ultrasonic(const json& j) {
  const std::string w = "ultrasonic";
  check_keys(j, {"min_range", "max_range", "beam_width_deg", "sample_rate_hz", "mount_angles_deg",
                 "incidence_threshold_deg", "noise_sigma", "frequency_khz", "cone_rays",
                 "detection_budget_db", "crosstalk_epsilon", "crosstalk_mode", "unit_cost"},
             w);
  UltrasonicConfig c;
  c.min_range = number_or(j, "min_range", c.min_range, w);
  c.max_range = number_or(j, "max_range", c.max_range, w);
  c.beam_width_deg = number_or(j, "beam_width_deg", c.beam_width_deg, w);
  c.sample_rate_hz = number_or(j, "sample_rate_hz", c.sample_rate_hz, w);
  if (j.contains("mount_angles_deg")) {
    const json& a = j.at("mount_angles_deg");
    if (!a.is_array()) throw ParseError(w + ".mount_angles_deg", "expected an array of numbers");
    c.mount_angles.clear();
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!a[i].is_number()) throw ParseError(w + ".mount_angles_deg[" + std::to_string(i) + "]", "expected a number");
      c.mount_angles.push_back(deg_to_rad(a[i].get<double>()));
    }
  }
  c.incidence_threshold_deg = number_or(j, "incidence_threshold_deg", c.incidence_threshold_deg, w);
  c.noise_sigma = number_or(j, "noise_sigma", c.noise_sigma, w);
  c.frequency_khz = number_or(j, "frequency_khz", c.frequency_khz, w);
  c.cone_rays = int_or(j, "cone_rays", c.cone_rays, w);
  c.detection_budget_db = number_or(j, "detection_budget_db", c.detection_budget_db, w);
  c.crosstalk_epsilon = number_or(j, "crosstalk_epsilon", c.crosstalk_epsilon, w);
  c.crosstalk_mode = enum_or(j, "crosstalk_mode", c.crosstalk_mode, w,
                             {{"flag", CrosstalkMode::flag}, {"inject", CrosstalkMode::inject}});
  c.unit_cost = long_or(j, "unit_cost", c.unit_cost, w);
  return c;
}

LidarConfig parse_lidar(const json& j) {
  const std::string w = "lidar";
  check_keys(j, {"beams_per_scan", "fov_deg", "min_range", "max_range", "systematic_error", "noise_sigma",
                 "power_w", "scan_rate_hz", "detection_fraction", "unit_cost"},
             w);
  LidarConfig c;
  c.beams_per_scan = int_or(j, "beams_per_scan", c.beams_per_scan, w);
  c.fov_deg = number_or(j, "fov_deg", c.fov_deg, w);
  c.min_range = number_or(j, "min_range", c.min_range, w);
  c.max_range = number_or(j, "max_range", c.max_range, w);
  c.systematic_error = number_or(j, "systematic_error", c.systematic_error, w);
  c.noise_sigma = number_or(j, "noise_sigma", c.noise_sigma, w);
  c.power_w = number_or(j, "power_w", c.power_w, w);
  c.scan_rate_hz = number_or(j, "scan_rate_hz", c.scan_rate_hz, w);
  c.detection_fraction = number_or(j, "detection_fraction", c.detection_fraction, w);
  c.unit_cost = long_or(j, "unit_cost", c.unit_cost, w);
  return c;
}

VehicleConfig parse_vehicle(const json& j) {
  const std::string w = "vehicle";
  check_keys(j, {"v_max", "omega_max", "footprint_radius", "actuation_noise_v", "actuation_noise_omega"}, w);
  VehicleConfig c;
  c.v_max = number_or(j, "v_max", c.v_max, w);
  c.omega_max = number_or(j, "omega_max", c.omega_max, w);
  c.footprint_radius = number_or(j, "footprint_radius", c.footprint_radius, w);
  c.actuation_noise_v = number_or(j, "actuation_noise_v", c.actuation_noise_v, w);
  c.actuation_noise_omega = number_or(j, "actuation_noise_omega", c.actuation_noise_omega, w);
  return c;
}

MappingConfig parse_mapping(const json& j) {
  const std::string w = "mapping";
  check_keys(j, {"resolution", "cell_band_factor", "crosstalk_weight", "stale_window", "l_occ", "l_free",
                 "l_min", "l_max", "occ_threshold", "free_threshold"},
             w);
  MappingConfig c;
  c.resolution = number_or(j, "resolution", c.resolution, w);
  c.cell_band_factor = number_or(j, "cell_band_factor", c.cell_band_factor, w);
  c.crosstalk_weight = number_or(j, "crosstalk_weight", c.crosstalk_weight, w);
  c.stale_window = long_or(j, "stale_window", c.stale_window, w);
  auto& p = c.log_odds;
  p.l_occ = number_or(j, "l_occ", p.l_occ, w);
  p.l_free = number_or(j, "l_free", p.l_free, w);
  p.l_min = number_or(j, "l_min", p.l_min, w);
  p.l_max = number_or(j, "l_max", p.l_max, w);
  p.occ_threshold = number_or(j, "occ_threshold", p.occ_threshold, w);
  p.free_threshold = number_or(j, "free_threshold", p.free_threshold, w);
  return c;
}

LocalizationConfig parse_localization(const json& j) {
  const std::string w = "localization";
  check_keys(j, {"mode", "map_source", "particles", "init_sigma_xy", "init_sigma_yaw", "motion", "likelihood"}, w);
  LocalizationConfig c;
  c.mode = enum_or(j, "mode", c.mode, w,
                   {{"ground_truth", LocalizationMode::ground_truth},
                    {"dead_reckoning", LocalizationMode::dead_reckoning},
                    {"particle_filter", LocalizationMode::particle_filter}});
  c.map_source = enum_or(j, "map_source", c.map_source, w,
                         {{"estimated_map", MapSource::estimated_map}, {"world", MapSource::world}});
  c.particles = int_or(j, "particles", c.particles, w);
  c.init_sigma_xy = number_or(j, "init_sigma_xy", c.init_sigma_xy, w);
  c.init_sigma_yaw = number_or(j, "init_sigma_yaw", c.init_sigma_yaw, w);
  if (j.contains("motion")) {
    const json& m = j.at("motion");
    const std::string mw = w + ".motion";
    check_keys(m, {"scale_v", "scale_omega", "floor_v", "floor_omega"}, mw);
    c.motion.sigma_v_scale = number_or(m, "scale_v", c.motion.sigma_v_scale, mw);
    c.motion.sigma_omega_scale = number_or(m, "scale_omega", c.motion.sigma_omega_scale, mw);
    c.motion.floor_v = number_or(m, "floor_v", c.motion.floor_v, mw);
    c.motion.floor_omega = number_or(m, "floor_omega", c.motion.floor_omega, mw);
  }
  if (j.contains("likelihood")) {
    const json& l = j.at("likelihood");
    const std::string lw = w + ".likelihood";
    check_keys(l, {"sonar_sigma", "lidar_sigma", "outlier_weight", "lidar_beam_stride"}, lw);
    c.likelihood.sonar_sigma = number_or(l, "sonar_sigma", c.likelihood.sonar_sigma, lw);
    c.likelihood.lidar_sigma = number_or(l, "lidar_sigma", c.likelihood.lidar_sigma, lw);
    c.likelihood.outlier_weight = number_or(l, "outlier_weight", c.likelihood.outlier_weight, lw);
    c.likelihood.lidar_beam_stride = int_or(l, "lidar_beam_stride", c.likelihood.lidar_beam_stride, lw);
  }
  return c;
}

PlanningConfig parse_planning(const json& j) {
  const std::string w = "planning";
  check_keys(j, {"unknown_policy", "inflation_margin", "lookahead", "heading_gain", "stop_near", "stop_far",
                 "front_cone_deg", "safety_distance", "replan_horizon"},
             w);
  PlanningConfig c;
  c.unknown = enum_or(j, "unknown_policy", c.unknown, w,
                      {{"blocked", UnknownPolicy::blocked}, {"free", UnknownPolicy::free}});
  c.inflation_margin = number_or(j, "inflation_margin", c.inflation_margin, w);
  c.lookahead = number_or(j, "lookahead", c.lookahead, w);
  c.heading_gain = number_or(j, "heading_gain", c.heading_gain, w);
  c.stop_near = number_or(j, "stop_near", c.stop_near, w);
  c.stop_far = number_or(j, "stop_far", c.stop_far, w);
  c.front_cone_deg = number_or(j, "front_cone_deg", c.front_cone_deg, w);
  c.safety_distance = number_or(j, "safety_distance", c.safety_distance, w);
  c.replan_horizon = number_or(j, "replan_horizon", c.replan_horizon, w);
  return c;
}

ExploreConfig parse_explore(const json& j) {
  const std::string w = "explore";
  check_keys(j, {"min_frontier_cells", "stall_ticks", "reach_tolerance", "spin_deg"}, w);
  ExploreConfig c;
  c.min_frontier_cells = int_or(j, "min_frontier_cells", c.min_frontier_cells, w);
  c.stall_ticks = int_or(j, "stall_ticks", c.stall_ticks, w);
  c.reach_tolerance = number_or(j, "reach_tolerance", c.reach_tolerance, w);
  c.spin_rad = deg_to_rad(number_or(j, "spin_deg", rad_to_deg(c.spin_rad), w));
  return c;
}

std::string read_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(std::string("cannot read ") + what + " file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Suite parse_suite(std::string_view s) {
  if (s == "ultrasonic") return Suite::ultrasonic;
  if (s == "lidar") return Suite::lidar;
  if (s == "both") return Suite::both;
  throw ConfigError("unknown sensor suite '" + std::string(s) + "' (expected ultrasonic, lidar or both)");
}

std::string_view to_string(Suite s) {
  switch (s) {
    case Suite::ultrasonic: return "ultrasonic";
    case Suite::lidar: return "lidar";
    case Suite::both: return "both";
  }
  return "?";
}

long ScenarioConfig::max_ticks() const { return static_cast<long>(std::ceil(duration_s / dt - 1e-9)); }

void ScenarioConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
  if (!(duration_s >= 0.0)) throw ConfigError("duration_s must be >= 0");
  if (tick_budget <= 0) throw ConfigError("tick_budget must be > 0");
  if (max_ticks() > tick_budget)
    throw ConfigError("duration_s / dt = " + std::to_string(max_ticks()) + " ticks exceeds the tick budget of " +
                      std::to_string(tick_budget));
  if (!(goal_tolerance > 0.0)) throw ConfigError("goal_tolerance must be > 0");
  try {
    ultrasonic.validate();
    lidar.validate();
    vehicle.validate();
    mapping.validate();
    planning.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (localization.particles <= 0) throw ConfigError("localization.particles must be > 0");
  if (explore.stall_ticks <= 0 || explore.min_frontier_cells < 0) throw ConfigError("bad explore settings");
  if (!world.contains(start.position())) throw ConfigError("start pose lies outside the world bounds");
  if (check_collision(world, StateVector::from_pose(start), vehicle.footprint_radius))
    throw ConfigError("start pose collides with the world");
  if (mode == RunMode::navigate && !world.contains(goal)) throw ConfigError("goal lies outside the world bounds");
  for (std::size_t i = 0; i < script.size(); ++i)
    if (!(script[i].t >= 0.0 && script[i].t <= duration_s) || (i > 0 && script[i].t < script[i - 1].t))
      throw ConfigError("script step " + std::to_string(i) + " time must be ascending and within duration");
}

ScenarioConfig load_scenario(std::string_view text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(line_of(text, e.byte), e.what());
  }
  if (!j.is_object()) throw ParseError("line 1", "scenario file must be a JSON object");
  check_keys(j, {"name", "world", "suite", "mode", "start", "goal", "goal_tolerance", "duration_s", "dt", "seed",
                 "tick_budget", "ultrasonic", "lidar", "vehicle", "mapping", "localization", "planning", "explore",
                 "script", "dynamic_obstacles"},
             "");

  ScenarioConfig c;
  c.name = string_or(j, "name", c.name, "scenario");
  if (!j.contains("world") || !j.at("world").is_string()) throw ParseError("world", "missing world file path");
  std::filesystem::path wp = j.at("world").get<std::string>();
  if (wp.is_relative() && !base_dir.empty()) wp = std::filesystem::path(base_dir) / wp;
  c.world_path = wp.lexically_normal().string();

  const std::string suite = string_or(j, "suite", "ultrasonic", "scenario");
  if (suite != "ultrasonic" && suite != "lidar" && suite != "both")
    throw ParseError("suite", "expected ultrasonic|lidar|both");
  c.suite = parse_suite(suite);
  c.mode = enum_or(j, "mode", c.mode, "scenario",
                   {{"navigate", RunMode::navigate}, {"explore", RunMode::explore}, {"teleop", RunMode::teleop}});

  if (!j.contains("start")) throw ParseError("start", "missing start pose");
  check_keys(j.at("start"), {"x", "y", "yaw_deg"}, "start");
  c.start = {number_at(j.at("start"), "x", "start"), number_at(j.at("start"), "y", "start"),
             wrap_angle(deg_to_rad(number_or(j.at("start"), "yaw_deg", 0.0, "start")))};
  if (j.contains("goal")) {
    check_keys(j.at("goal"), {"x", "y"}, "goal");
    c.goal = {number_at(j.at("goal"), "x", "goal"), number_at(j.at("goal"), "y", "goal")};
  } else if (c.mode == RunMode::navigate) {
    throw ParseError("goal", "navigate scenarios need a goal");
  }
  c.goal_tolerance = number_or(j, "goal_tolerance", c.goal_tolerance, "scenario");
  c.duration_s = number_or(j, "duration_s", c.duration_s, "scenario");
  c.dt = number_or(j, "dt", c.dt, "scenario");
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned() && !(j.at("seed").is_number_integer() && j.at("seed").get<long>() >= 0))
      throw ParseError("seed", "expected a non-negative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  c.tick_budget = long_or(j, "tick_budget", c.tick_budget, "scenario");

  if (j.contains("ultrasonic")) c.ultrasonic = parse_ultrasonic(j.at("ultrasonic"));
  if (j.contains("lidar")) c.lidar = parse_lidar(j.at("lidar"));
  if (j.contains("vehicle")) c.vehicle = parse_vehicle(j.at("vehicle"));
  if (j.contains("mapping")) c.mapping = parse_mapping(j.at("mapping"));
  if (j.contains("localization")) c.localization = parse_localization(j.at("localization"));
  if (j.contains("planning")) c.planning = parse_planning(j.at("planning"));
  if (j.contains("explore")) c.explore = parse_explore(j.at("explore"));

  if (j.contains("script")) {
    const json& s = j.at("script");
    if (!s.is_array()) throw ParseError("script", "expected an array");
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::string w = "script[" + std::to_string(i) + "]";
      check_keys(s[i], {"t", "v", "omega"}, w);
      c.script.push_back({number_at(s[i], "t", w), {number_or(s[i], "v", 0.0, w), number_or(s[i], "omega", 0.0, w)}});
    }
  }

  std::vector<Obstacle> dynamic;
  if (j.contains("dynamic_obstacles")) {
    dynamic = parse_obstacle_list(j.at("dynamic_obstacles"), "dynamic_obstacles");
    for (Obstacle& o : dynamic) o.dynamic = true;
  }
  WorldModel world = load_world_file(c.world_path);
  c.world = dynamic.empty() ? std::move(world) : world.with_obstacles(std::move(dynamic));
  c.validate();
  return c;
}

ScenarioConfig load_scenario_file(const std::string& path) {
  const std::string text = read_file(path, "scenario");
  return load_scenario(text, std::filesystem::path(path).parent_path().string());
}

}  // namespace crawler
