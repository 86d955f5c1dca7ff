#include <gtest/gtest.h>

#include <cmath>

#include "crawler/errors.hpp"
#include "crawler/mapping.hpp"
#include "crawler/sim_engine.hpp"
#include "test_support.hpp"

namespace crawler {
namespace {

using testing::data_path;

ScenarioConfig scenario(const std::string& name) { return load_scenario_file(data_path("scenarios/" + name + ".json")); }

std::string pgm_string(const OccupancyGrid& g) {
  const auto b = export_pgm(g);
  return {b.begin(), b.end()};
}

TEST(Scenario, ParseErrors) {
  EXPECT_EQ(parse_suite("lidar"), Suite::lidar);
  EXPECT_EQ(parse_suite("both"), Suite::both);
  EXPECT_THROW(parse_suite("radar"), ConfigError);
  const std::string base = data_path("scenarios");
  const std::string start = R"("start": {"x": 3, "y": 3}, "goal": {"x": 4, "y": 3})";
  EXPECT_ANY_THROW(load_scenario(R"({"world": "../worlds/empty_room.json", "suite": "radar", )" + start + "}", base));
  EXPECT_THROW(load_scenario(R"({"world": "../worlds/missing.json", )" + start + "}", base), ConfigError);
  EXPECT_THROW(load_scenario(R"({"world": "../worlds/empty_room.json"})", base), ParseError);
  EXPECT_THROW(load_scenario(R"({"world": "../worlds/empty_room.json", "dt": 0})", base), std::exception);
  EXPECT_THROW(load_scenario(R"({"world": "../worlds/empty_room.json", "duration_s": 100000, "dt": 0.1})", base),
               std::exception);
  // Start pose inside a wall.
  EXPECT_THROW(load_scenario(R"({"world": "../worlds/empty_room.json", "start": {"x": 0.05, "y": 3}})", base),
               std::exception);
}

TEST(Sim, GoalAtStart) {
  ScenarioConfig cfg = scenario("nav_empty_straight");
  cfg.goal = cfg.start.position();
  const SimResult r = run_scenario(cfg);
  EXPECT_EQ(r.status, SimStatus::goal_reached);
  EXPECT_EQ(r.ticks, 0);
  EXPECT_EQ(r.trace.size(), 0u);
}

TEST(Sim, StraightLineTickCount) {
  const ScenarioConfig cfg = scenario("nav_empty_straight");
  const double dist = norm(cfg.goal - cfg.start.position());
  ASSERT_NEAR(dist, 3.0, 1e-12);
  const SimResult r = run_scenario(cfg);
  ASSERT_EQ(r.status, SimStatus::goal_reached);
  EXPECT_EQ(r.collision_ticks, 0);
  const double ideal = dist / (cfg.vehicle.v_max * cfg.dt);
  EXPECT_NEAR(static_cast<double>(r.ticks), ideal, 0.1 * ideal);
  EXPECT_LE(norm(r.final_truth.position() - cfg.goal), cfg.goal_tolerance);
}

TEST(Sim, RunTwiceIsBitIdentical) {
  for (const char* name : {"nav_house_pf", "teleop_square"}) {
    const ScenarioConfig cfg = scenario(name);
    const SimResult a = run_scenario(cfg);
    const SimResult b = run_scenario(cfg);
    EXPECT_EQ(format_result_json(a), format_result_json(b)) << name;
    EXPECT_EQ(format_trace_csv(a), format_trace_csv(b)) << name;
    EXPECT_EQ(pgm_string(a.map), pgm_string(b.map)) << name;
  }
}

TEST(Sim, SeedChangesNoisyRun) {
  ScenarioConfig cfg = scenario("loc_loop_pf");
  cfg.duration_s = 5;
  const SimResult a = run_scenario(cfg);
  cfg.seed += 1;
  const SimResult b = run_scenario(cfg);
  EXPECT_NE(format_trace_csv(a), format_trace_csv(b));
}

TEST(Sim, DynamicObstacleForcesReplan) {
  const ScenarioConfig cfg = scenario("nav_two_corridors_dynamic");
  const SimResult r = run_scenario(cfg);
  EXPECT_EQ(r.status, SimStatus::goal_reached);
  EXPECT_GE(r.replans, 1);
  EXPECT_EQ(r.collision_ticks, 0);
}

TEST(Sim, TraceAndReadingsMatchTickCount) {
  for (const char* name : {"nav_empty_diagonal", "teleop_wall_crash", "loc_stationary_open"}) {
    const SimResult r = run_scenario(scenario(name));
    EXPECT_EQ(static_cast<Tick>(r.trace.size()), r.ticks) << name;
    EXPECT_EQ(static_cast<Tick>(r.readings.size()), r.ticks) << name;
    for (Tick k = 0; k < r.ticks; ++k) EXPECT_EQ(r.trace[static_cast<std::size_t>(k)].tick, k);
    const std::string csv = format_trace_csv(r);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), r.ticks + 1) << name;
  }
}

TEST(Sim, SensorCadence) {
  ScenarioConfig cfg = scenario("teleop_square");
  ASSERT_EQ(cfg.suite, Suite::both);
  cfg.duration_s = 4;
  const SimResult r = run_scenario(cfg);
  const long period = std::lround(1.0 / (cfg.lidar.scan_rate_hz * cfg.dt));
  ASSERT_EQ(period, 10);
  for (std::size_t k = 0; k < r.readings.size(); ++k) {
    EXPECT_EQ(r.readings[k].sonar.size(), 4u);
    EXPECT_EQ(r.readings[k].lidar.has_value(), k % period == 0) << k;
    for (const auto& s : r.readings[k].sonar) EXPECT_EQ(s.tick, static_cast<Tick>(k));
  }
}

TEST(Teleop, EmptyScriptStaysPut) {
  ScenarioConfig cfg = scenario("teleop_wall_crash");
  cfg.duration_s = 3;
  const SimResult r = run_teleop_script(cfg, {});
  EXPECT_EQ(r.status, SimStatus::timeout);
  EXPECT_EQ(r.ticks, cfg.max_ticks());
  for (const TraceRow& row : r.trace) EXPECT_EQ(row.truth, cfg.start);
  // Only cells inside one of the start cones were touched.
  const double reach = effective_range(cfg.ultrasonic, cfg.world.medium()) + cfg.mapping.cell_band();
  int touched = 0;
  for (int row = 0; row < r.map.height(); ++row)
    for (int col = 0; col < r.map.width(); ++col) {
      if (r.map.log_odds({col, row}) == 0.0) continue;
      ++touched;
      const Vec2 d = r.map.center_of({col, row}) - cfg.start.position();
      bool in_any = false;
      for (double mount : cfg.ultrasonic.mount_angles) {
        const double off = std::abs(wrap_angle(std::atan2(d.y, d.x) - cfg.start.yaw - mount));
        const double widen = std::atan(r.map.resolution() / (2 * norm(d)));
        in_any |= norm(d) <= reach && off <= deg_to_rad(cfg.ultrasonic.beam_width_deg) / 2 + widen;
      }
      EXPECT_TRUE(in_any) << col << "," << row;
    }
  EXPECT_GT(touched, 0);
}

TEST(Teleop, SquareMapsAllFourWalls) {
  const ScenarioConfig cfg = scenario("teleop_square");
  const SimResult r = run_scenario(cfg);
  EXPECT_EQ(r.status, SimStatus::timeout);
  EXPECT_EQ(r.collision_ticks, 0);
  // The square spans [1, 3] on both axes; each wall's segment facing it must
  // be mapped occupied for most of its length.
  const OccupancyGrid& m = r.map;
  const int n = m.width();
  auto count = [&](auto cell_at) {
    int occ = 0, total = 0;
    for (int i = 10; i < 30; ++i, ++total) occ += m.state(cell_at(i)) == CellState::occupied;
    return static_cast<double>(occ) / total;
  };
  EXPECT_GE(count([&](int i) { return GridIndex{i, 0}; }), 0.8);
  EXPECT_GE(count([&](int i) { return GridIndex{i, n - 1}; }), 0.8);
  EXPECT_GE(count([&](int i) { return GridIndex{0, i}; }), 0.8);
  EXPECT_GE(count([&](int i) { return GridIndex{n - 1, i}; }), 0.8);
}

TEST(Teleop, WallCrashAtPredictedTick) {
  const ScenarioConfig cfg = scenario("teleop_wall_crash");
  ASSERT_EQ(cfg.script.size(), 1u);
  const double v = cfg.script[0].cmd.v;
  // First tick whose post-step footprint crosses the east wall.
  double x = cfg.start.x;
  Tick expected = 0;
  for (;; ++expected) {
    x += v * cfg.dt;
    if (x + cfg.vehicle.footprint_radius > cfg.world.bounds().width) break;
  }
  const SimResult r = run_scenario(cfg);
  EXPECT_EQ(r.status, SimStatus::collision);
  EXPECT_EQ(r.ticks, expected + 1);
  EXPECT_EQ(r.trace.back().tick, expected);
}

TEST(Localization, NoiselessFilterTracksTruth) {
  ScenarioConfig cfg = scenario("loc_loop_pf");
  cfg.vehicle.actuation_noise_v = cfg.vehicle.actuation_noise_omega = 0;
  cfg.ultrasonic.noise_sigma = 0;
  cfg.localization.init_sigma_xy = cfg.localization.init_sigma_yaw = 0;
  cfg.localization.motion = MotionNoise{0, 0, 0, 0};
  const SimResult r = run_scenario(cfg);
  for (const TraceRow& row : r.trace)
    ASSERT_LT(norm(row.truth.position() - row.estimate.position()), cfg.mapping.resolution) << row.tick;
  EXPECT_LT(localization_rmse(r), 1e-9);
}

TEST(Sim, GoalReachedImpliesTolerance) {
  for (const char* name : {"nav_l_corridor", "nav_empty_diagonal"}) {
    const ScenarioConfig cfg = scenario(name);
    const SimResult r = run_scenario(cfg);
    ASSERT_EQ(r.status, SimStatus::goal_reached) << name;
    EXPECT_LE(norm(r.final_truth.position() - cfg.goal), cfg.goal_tolerance);
    EXPECT_EQ(r.collision_ticks, 0);
  }
}

}  // namespace
}  // namespace crawler
