#include "crawler/sim_engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>

#include <json.hpp>

namespace crawler {

std::string_view to_string(SimStatus s) {
  switch (s) {
    case SimStatus::goal_reached: return "goal_reached";
    case SimStatus::no_path: return "no_path";
    case SimStatus::collision: return "collision";
    case SimStatus::timeout: return "timeout";
    case SimStatus::coverage_complete: return "coverage_complete";
  }
  return "?";
}

namespace {

// Path checks against a fresh inflation are not needed every tick.
constexpr Tick kPathCheckPeriod = 10;

long period_ticks(double rate_hz, double dt) {
  return std::max(1L, std::lround(1.0 / (rate_hz * dt)));
}

bool path_still_free(const PlanningGrid& grid, const GridPath& path, std::size_t from) {
  for (std::size_t i = from; i < path.cells.size(); ++i)
    if (grid.blocked(path.cells[i])) return false;
  return true;
}

std::size_t nearest_index(const GridPath& path, Vec2 p) {
  std::size_t best = 0;
  double best_d = INFINITY;
  for (std::size_t i = 0; i < path.world_waypoints.size(); ++i) {
    const double d = norm(path.world_waypoints[i] - p);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

struct Outcome {
  VelocityCommand cmd;
  std::optional<SimStatus> stop;
};

class Simulation {
 public:
  using ScriptFn = std::function<VelocityCommand(double)>;

  Simulation(const ScenarioConfig& cfg, ScriptFn script)
      : cfg_(cfg),
        script_(std::move(script)),
        use_sonar_(cfg.suite != Suite::lidar),
        use_lidar_(cfg.suite != Suite::ultrasonic),
        sonar_period_(period_ticks(cfg.ultrasonic.sample_rate_hz, cfg.dt)),
        lidar_period_(period_ticks(cfg.lidar.scan_rate_hz, cfg.dt)),
        us_range_(effective_range(cfg.ultrasonic, cfg.world.medium())),
        lidar_range_(effective_range(cfg.lidar, cfg.world.medium())),
        sonar_rng_(Rng::derive(cfg.seed, "sonar")),
        lidar_rng_(Rng::derive(cfg.seed, "lidar")),
        actuation_rng_(Rng::derive(cfg.seed, "actuation")),
        filter_rng_(Rng::derive(cfg.seed, "filter")) {}

  SimResult run() {
    SimResult r;
    r.scenario = cfg_.name;
    r.seed = cfg_.seed;
    map_ = make_map(cfg_.world.bounds(), cfg_.mapping);
    truth_ = StateVector::from_pose(cfg_.start);
    estimate_ = cfg_.start;
    if (cfg_.localization.mode == LocalizationMode::particle_filter) {
      particles_ = make_particles(cfg_.start, cfg_.localization.particles, cfg_.localization.init_sigma_xy,
                                  cfg_.localization.init_sigma_yaw, filter_rng_);
      estimate_ = estimate(particles_).mean;
    }
    const long max_ticks = cfg_.max_ticks();
    std::size_t active = SIZE_MAX;
    VelocityCommand last_cmd;

    for (Tick k = 0;; ++k) {
      const double t = static_cast<double>(k) * cfg_.dt;
      // (1) scheduled obstacles
      const std::size_t now_active = active_count(t);
      if (now_active != active) {
        world_ = cfg_.world.at_time(t);
        active = now_active;
      }
      if (cfg_.mode == RunMode::navigate && !script_ &&
          norm(truth_.pose().position() - cfg_.goal) <= cfg_.goal_tolerance) {
        r.status = SimStatus::goal_reached;
        break;
      }
      if (k >= max_ticks) {
        r.status = SimStatus::timeout;
        break;
      }

      // (2) sense from the true pose
      const Pose2D true_pose = truth_.pose();
      TickReadings sensed;
      if (use_sonar_ && k % sonar_period_ == 0)
        sensed.sonar = sample_sonar_ring(world_, true_pose, cfg_.ultrasonic, sonar_rng_, k);
      if (use_lidar_ && k % lidar_period_ == 0)
        sensed.lidar = lidar_scan(world_, true_pose, cfg_.lidar, lidar_rng_, k);

      // (3) localize
      double cov_trace = 0.0;
      localize(k, last_cmd, sensed, r, cov_trace);

      // (4) map at the estimated pose
      for (const RangeReading& rd : sensed.sonar)
        integrate_sonar_reading(map_, sonar_pose(estimate_, cfg_.ultrasonic, rd.sensor_index), rd, cfg_.mapping,
                                us_range_, k);
      if (sensed.lidar) integrate_lidar_scan(map_, estimate_, *sensed.lidar, cfg_.mapping, lidar_range_);

      // (5) plan
      Outcome out;
      if (script_) {
        out.cmd = script_(t);
      } else if (cfg_.mode == RunMode::explore) {
        out = explore_step(k, sensed);
      } else {
        out = navigate_step(k, sensed, r);
      }
      const VelocityCommand cmd = clamp_command(out.cmd, cfg_.vehicle);

      // (6) act on the true crawler
      bool collided = false;
      if (!out.stop) {
        const double nv = actuation_rng_.normal();
        const double nw = actuation_rng_.normal();
        const VelocityCommand actual{cmd.v * (1.0 + cfg_.vehicle.actuation_noise_v * nv),
                                     cmd.omega * (1.0 + cfg_.vehicle.actuation_noise_omega * nw)};
        truth_ = step_kinematics(truth_, actual, cfg_.dt);
        collided = check_collision(world_, truth_, cfg_.vehicle.footprint_radius);
      }

      r.trace.push_back({k, true_pose, estimate_, cov_trace, out.stop ? VelocityCommand{} : cmd});
      r.readings.push_back(std::move(sensed));
      r.ticks = k + 1;
      last_cmd = out.stop ? VelocityCommand{} : cmd;
      if (collided) {
        ++r.collision_ticks;
        r.status = SimStatus::collision;
        break;
      }
      if (out.stop) {
        r.status = *out.stop;
        break;
      }
    }
    r.map = map_;
    r.final_truth = truth_.pose();
    r.final_estimate = estimate_;
    return r;
  }

 private:
  std::size_t active_count(double t) const {
    std::size_t n = 0;
    for (const Obstacle& o : cfg_.world.obstacles())
      if (!o.dynamic || o.appear_at_s <= t + 1e-12) ++n;
    return n;
  }

  void localize(Tick k, const VelocityCommand& last_cmd, const TickReadings& sensed, SimResult& r,
                double& cov_trace) {
    const auto& lc = cfg_.localization;
    switch (lc.mode) {
      case LocalizationMode::ground_truth:
        estimate_ = truth_.pose();
        return;
      case LocalizationMode::dead_reckoning:
        if (k > 0) estimate_ = step_kinematics(StateVector::from_pose(estimate_), last_cmd, cfg_.dt).pose();
        return;
      case LocalizationMode::particle_filter:
        break;
    }
    if (k > 0) predict(particles_, last_cmd, cfg_.dt, lc.motion, filter_rng_);
    MapView view;
    if (lc.map_source == MapSource::world) {
      view.world = &world_;
    } else {
      view.grid = &map_;
    }
    if (!sensed.sonar.empty()) {
      const SonarObservation obs{sensed.sonar, &cfg_.ultrasonic, us_range_};
      if (update_weights(particles_, obs, view, lc.likelihood).diverged) ++r.filter_divergences;
    }
    if (sensed.lidar) {
      const LidarObservation obs{&*sensed.lidar, &cfg_.lidar, lidar_range_};
      if (update_weights(particles_, obs, view, lc.likelihood).diverged) ++r.filter_divergences;
    }
    const PoseEstimate est = estimate(particles_);
    particles_ = resample(particles_, filter_rng_);
    estimate_ = est.mean;
    cov_trace = est.trace();
  }

  SensorSnapshot snapshot(const TickReadings& sensed) const {
    return {sensed.sonar, sensed.lidar ? &*sensed.lidar : nullptr};
  }

  // Plans toward `goal`; false when no route exists. Falls back to the bare
  // footprint when the safety margin closes every gap.
  bool plan_to(Vec2 goal) {
    path_planning_ = cfg_.planning;
    PlanResult res = replan(map_, estimate_, goal, cfg_.vehicle.footprint_radius, path_planning_);
    if (!res.ok() && path_planning_.inflation_margin > 0.0) {
      path_planning_.inflation_margin = 0.0;
      res = replan(map_, estimate_, goal, cfg_.vehicle.footprint_radius, path_planning_);
    }
    if (!res.ok()) {
      path_.reset();
      return false;
    }
    path_ = res.path;
    return true;
  }

  bool path_blocked(Tick k) const {
    if (!path_ || k % kPathCheckPeriod != 0) return false;
    const PlanningGrid grid = PlanningGrid::from_map(map_, cfg_.vehicle.footprint_radius, path_planning_);
    return !path_still_free(grid, *path_, nearest_index(*path_, estimate_.position()));
  }

  // Follows the current path; returns nullopt when a required replan fails.
  std::optional<VelocityCommand> follow(Tick k, Vec2 goal, const TickReadings& sensed, int& replans) {
    if (path_blocked(k)) {
      ++replans;
      if (!plan_to(goal)) return std::nullopt;
    }
    const SensorSnapshot snap = snapshot(sensed);
    LocalDecision d = plan_local(estimate_, *path_, goal, snap, cfg_.vehicle, cfg_.planning, true);
    if (std::holds_alternative<ReplanRequest>(d)) {
      ++replans;
      if (!plan_to(goal)) return std::nullopt;
      d = plan_local(estimate_, *path_, goal, snap, cfg_.vehicle, cfg_.planning, false);
    }
    return std::get<VelocityCommand>(d);
  }

  // Sonar arcs often close a doorway until it is seen head-on, so a failed
  // plan turns in place for one revolution before giving up.
  Outcome navigate_step(Tick k, const TickReadings& sensed, SimResult& r) {
    std::optional<VelocityCommand> cmd;
    if (path_ || plan_to(cfg_.goal)) cmd = follow(k, cfg_.goal, sensed, r.replans);
    if (cmd) {
      stuck_ticks_ = 0;
      return {*cmd, std::nullopt};
    }
    const double turn = 2.0 * std::numbers::pi / (cfg_.vehicle.omega_max * cfg_.dt);
    if (++stuck_ticks_ > turn) return {{}, SimStatus::no_path};
    return {{0.0, cfg_.vehicle.omega_max}, std::nullopt};
  }

  int inflation_cells() const {
    return static_cast<int>(std::ceil((cfg_.vehicle.footprint_radius + cfg_.planning.inflation_margin) /
                                          map_.resolution() -
                                      1e-9));
  }

  // Targets are free cells from which a frontier is in view; frontier cells
  // around a target that was reached, stalled on or unplannable are retired.
  Outcome explore_step(Tick k, const TickReadings& sensed) {
    const ExploreConfig& ec = cfg_.explore;
    if (excluded_.empty()) {
      excluded_.assign(map_.cells().size(), 0);
      if (needs_spin()) spin_left_ = 2.0 * std::numbers::pi;
    }
    if (spin_left_ > 0.0) {
      spin_left_ -= cfg_.vehicle.omega_max * cfg_.dt;
      return {{0.0, cfg_.vehicle.omega_max}, std::nullopt};
    }

    if (target_) {
      const Vec2 c = map_.center_of(*target_);
      bool drop = false;
      if (norm(c - estimate_.position()) <= ec.reach_tolerance) {
        retire(*target_);
        target_.reset();
        path_.reset();
        if (!needs_spin()) return {{}, std::nullopt};
        spin_left_ = ec.spin_rad - cfg_.vehicle.omega_max * cfg_.dt;
        return {{0.0, cfg_.vehicle.omega_max}, std::nullopt};
      }
      if (++target_ticks_ > ec.stall_ticks) {
        retire(*target_);
        drop = true;
      } else if (!frontier_in_view(*target_)) {
        drop = true;
      }
      if (drop) {
        target_.reset();
        path_.reset();
      }
    }

    if (!target_ && !choose_target()) return {{}, SimStatus::coverage_complete};

    int unused = 0;
    const auto cmd = follow(k, map_.center_of(*target_), sensed, unused);
    if (!cmd) {
      retire(*target_);
      target_.reset();
      return {{}, std::nullopt};
    }
    return {*cmd, std::nullopt};
  }

  // A full-circle scanner sees everything without turning.
  bool needs_spin() const { return use_sonar_ || cfg_.lidar.fov_deg < 360.0 - 1e-9; }

  // Distance band (cells) at which a frontier is observed from a target: past
  // the inflation and the nearest sensor's blind zone, half a metre deep.
  std::pair<int, int> view_band() const {
    double blind = INFINITY;
    if (use_sonar_) blind = std::min(blind, cfg_.ultrasonic.min_range);
    if (use_lidar_) blind = std::min(blind, cfg_.lidar.min_range);
    const int inner = std::max(inflation_cells() + 1,
                               static_cast<int>(std::ceil((blind + 0.2) / map_.resolution())));
    return {inner, inner + static_cast<int>(std::lround(0.5 / map_.resolution()))};
  }

  template <typename F>
  void for_view(GridIndex c, F&& f) const {
    const int v = view_band().second;
    for (int dy = -v; dy <= v; ++dy)
      for (int dx = -v; dx <= v; ++dx) {
        const GridIndex n{c.col + dx, c.row + dy};
        if (dx * dx + dy * dy <= v * v && map_.in_bounds(n)) f(n);
      }
  }

  bool is_frontier(GridIndex c) const {
    if (map_.state(c) != CellState::free) return false;
    const GridIndex nbs[4] = {{c.col + 1, c.row}, {c.col - 1, c.row}, {c.col, c.row + 1}, {c.col, c.row - 1}};
    for (const GridIndex& n : nbs)
      if (map_.in_bounds(n) && map_.state(n) == CellState::unknown) return true;
    return false;
  }

  bool frontier_in_view(GridIndex c) const {
    bool any = false;
    for_view(c, [&](GridIndex n) { any = any || (!excluded_[map_.linear(n)] && is_frontier(n)); });
    return any;
  }

  void retire(GridIndex c) {
    excluded_[map_.linear(c)] = 1;
    for_view(c, [&](GridIndex n) {
      if (is_frontier(n)) excluded_[map_.linear(n)] = 1;
    });
  }

  bool choose_target() {
    const PlanningGrid grid = PlanningGrid::from_map(map_, cfg_.vehicle.footprint_radius, cfg_.planning);
    const Cell here = grid.cell_of(estimate_.position());
    for (int attempt = 0; attempt < 50; ++attempt) {
      const auto [vmin, vmax] = view_band();
      auto f = nearest_frontier(map_, grid, here, cfg_.explore.min_frontier_cells, excluded_, vmin, vmax);
      if (!f) f = nearest_frontier(map_, grid, here, 0, excluded_, vmin, vmax);
      if (!f) return false;
      if (plan_to(map_.center_of(*f))) {
        target_ = *f;
        target_ticks_ = 0;
        return true;
      }
      retire(*f);
    }
    return false;
  }

  const ScenarioConfig& cfg_;
  ScriptFn script_;
  bool use_sonar_;
  bool use_lidar_;
  long sonar_period_;
  long lidar_period_;
  double us_range_;
  double lidar_range_;
  Rng sonar_rng_;
  Rng lidar_rng_;
  Rng actuation_rng_;
  Rng filter_rng_;

  WorldModel world_;
  OccupancyGrid map_;
  StateVector truth_;
  Pose2D estimate_;
  ParticleSet particles_;

  std::optional<GridPath> path_;
  PlanningConfig path_planning_;
  std::optional<GridIndex> target_;
  int target_ticks_ = 0;
  int stuck_ticks_ = 0;
  double spin_left_ = 0.0;
  std::vector<std::uint8_t> excluded_;
};

VelocityCommand command_at(const std::vector<ScriptStep>& script, double t) {
  VelocityCommand cmd;
  for (const ScriptStep& s : script) {
    if (s.t > t + 1e-9) break;
    cmd = s.cmd;
  }
  return cmd;
}

}  // namespace

SimResult run_scenario(const ScenarioConfig& cfg) {
  if (cfg.mode == RunMode::teleop) return run_teleop_script(cfg, cfg.script);
  return Simulation(cfg, nullptr).run();
}

SimResult run_teleop_script(const ScenarioConfig& cfg, const std::vector<ScriptStep>& script) {
  return Simulation(cfg, [&script](double t) { return command_at(script, t); }).run();
}

double localization_rmse(const SimResult& r) {
  if (r.trace.empty()) return 0.0;
  double s = 0.0;
  for (const TraceRow& row : r.trace) {
    const double d = norm(row.truth.position() - row.estimate.position());
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(r.trace.size()));
}

std::string format_trace_csv(const SimResult& r) {
  std::string out = "tick,true_x,true_y,true_yaw,est_x,est_y,est_yaw,cov_trace,cmd_v,cmd_omega,sonar,lidar_valid\n";
  char buf[256];
  for (std::size_t i = 0; i < r.trace.size(); ++i) {
    const TraceRow& row = r.trace[i];
    std::snprintf(buf, sizeof buf, "%lld,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6e,%.6f,%.6f,",
                  static_cast<long long>(row.tick), row.truth.x, row.truth.y, row.truth.yaw, row.estimate.x,
                  row.estimate.y, row.estimate.yaw, row.cov_trace, row.cmd.v, row.cmd.omega);
    out += buf;
    const TickReadings& tr = r.readings[i];
    for (std::size_t s = 0; s < tr.sonar.size(); ++s) {
      if (s > 0) out += ';';
      if (tr.sonar[s].distance) {
        std::snprintf(buf, sizeof buf, "%.4f", *tr.sonar[s].distance);
        out += buf;
      } else {
        out += "MAX";
      }
      if (tr.sonar[s].crosstalk_suspect) out += '*';
    }
    out += ',';
    if (tr.lidar) {
      const auto valid = std::count_if(tr.lidar->ranges.begin(), tr.lidar->ranges.end(),
                                       [](const LidarReturn& l) { return l.status == ReturnStatus::valid; });
      out += std::to_string(valid);
    }
    out += '\n';
  }
  return out;
}

std::string format_result_json(const SimResult& r, const std::string& extra_json) {
  using nlohmann::json;
  auto pose = [](const Pose2D& p) { return json{{"x", p.x}, {"y", p.y}, {"yaw", p.yaw}}; };
  json j;
  j["scenario"] = r.scenario;
  j["seed"] = r.seed;
  j["status"] = std::string(to_string(r.status));
  j["ticks"] = r.ticks;
  j["replans"] = r.replans;
  j["collision_ticks"] = r.collision_ticks;
  j["filter_divergences"] = r.filter_divergences;
  j["final_pose"] = {{"truth", pose(r.final_truth)}, {"estimate", pose(r.final_estimate)}};
  j["localization_rmse"] = localization_rmse(r);
  j["map"] = {{"width", r.map.width()},
              {"height", r.map.height()},
              {"resolution", r.map.resolution()},
              {"origin", {r.map.origin().x, r.map.origin().y}},
              {"rows", ascii_rows(r.map)}};
  j.update(json::parse(extra_json));
  return j.dump(2) + "\n";
}

}  // namespace crawler
