// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "crawler/bench_report.hpp"
#include "crawler/cli.hpp"
#include "crawler/planning.hpp"
#include "crawler/sensors.hpp"
#include "crawler/sim_engine.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace crawler;
using crawler::testing::data_path;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ScenarioConfig scenario(const std::string& name) { return load_scenario_file(data_path("scenarios/" + name + ".json")); }

Outcome formula_fidelity() {
  Rng rng(20240601);
  double worst_d = 0, worst_t = 0;
  for (int i = 0; i < 10000; ++i) {
    const double t = rng.uniform(0.0, 0.1), c = rng.uniform(1.0, 3000.0);
    worst_d = std::max(worst_d, std::abs(echo_time_to_distance(t, c) - c * t / 2.0));
    const double w = rng.uniform(1e-3, 5.0), r = rng.uniform(1e-3, 20.0);
    worst_t = std::max(worst_t, std::abs(beam_spread(w, r) - 2.0 * std::atan(w / (2.0 * r))));
  }
  return {worst_d <= 1e-12 && worst_t <= 1e-12, fmt("max |dD| %.3g m, max |dtheta| %.3g rad", worst_d, worst_t)};
}

Outcome planner_optimality() {
  Rng rng(30);
  int solvable = 0, unsolvable = 0, mismatched = 0;
  for (int i = 0; i < 200; ++i) {
    std::vector<std::uint8_t> cells(900);
    for (auto& c : cells) c = rng.uniform() < 0.2 ? 1 : 0;
    const PlanningGrid g(30, 30, cells);
    auto pick = [&] {
      for (;;) {
        const Cell c{static_cast<int>(rng.uniform() * 30), static_cast<int>(rng.uniform() * 30)};
        if (!g.blocked(c)) return c;
      }
    };
    const Cell s = pick(), t = pick();
    const PlanResult a = plan_global(g, s, t);
    const PlanResult d = dijkstra_oracle(g, s, t);
    if (a.ok() != d.ok()) {
      ++mismatched;
    } else if (a.ok()) {
      ++solvable;
      if (a.path.cost != d.path.cost || !path_is_valid(g, a.path, s, t)) ++mismatched;
    } else {
      ++unsolvable;
    }
  }
  return {mismatched == 0,
          fmt("%g solvable, %g unsolvable, %g mismatches", solvable, unsolvable, mismatched)};
}

Outcome mapping_fidelity() {
  ScenarioConfig cfg = scenario("house_explore");
  cfg.suite = Suite::lidar;
  cfg.lidar.systematic_error = 0.0;
  cfg.lidar.noise_sigma = 0.0;
  cfg.localization.mode = LocalizationMode::ground_truth;
  const SimResult r = run_scenario(cfg);
  const MapMetrics m = score_run(cfg, r);
  const bool ok = r.status == SimStatus::coverage_complete && m.occupied_recall >= 0.95 && m.free_accuracy >= 0.99;
  return {ok, "status " + std::string(to_string(r.status)) +
                  fmt(", recall %.4f, free accuracy %.4f, coverage %.4f", m.occupied_recall, m.free_accuracy,
                      m.coverage)};
}

Outcome ultrasonic_dropout() {
  const WorldModel open("open", {60, 60}, MediumProperties{}, {});
  UltrasonicConfig cone;  // noiseless defaults
  UltrasonicConfig single = cone;
  single.cone_rays = 1;
  const double half = cone.beam_width_deg / 2.0;
  Rng rng(45);
  int grazing = 0, grazing_ok = 0, perpendicular = 0, perpendicular_ok = 0;
  for (int i = 0; i < 2000; ++i) {
    const Pose2D pose{rng.uniform(25, 35), rng.uniform(25, 35), rng.uniform(-pi, pi)};
    const Vec2 axis = unit_from_angle(pose.yaw);
    const double d = rng.uniform(0.05, 1.9);
    // Wall through the axis point at distance d, struck by the axis at `incidence`.
    // Single-ray transducer: anything below the threshold; full cone: every
    // ray of the fan below the threshold.
    const bool use_cone = i % 2 == 0;
    const double max_inc = use_cone ? cone.incidence_threshold_deg - half : cone.incidence_threshold_deg;
    const double inc = deg_to_rad(rng.uniform(0.5, max_inc - 1e-6));
    const double side = rng.uniform() < 0.5 ? 1.0 : -1.0;
    const Vec2 along = unit_from_angle(pose.yaw + side * inc);
    const Vec2 p = pose.position() + axis * d;
    const WorldModel w = open.with_obstacles({crawler::testing::segment(p - along * 20.0, p + along * 20.0)});
    const RangeReading rd = ultrasonic_measure(w, pose, use_cone ? cone : single, rng);
    ++grazing;
    grazing_ok += rd.is_max_range();
  }
  std::vector<double> ds{0.01, 2.0};
  for (int i = 0; i < 2000; ++i) ds.push_back(rng.uniform(0.01, 2.0));
  for (double d : ds) {
    const Pose2D pose{rng.uniform(25, 35), rng.uniform(25, 35), rng.uniform(-pi, pi)};
    const Vec2 axis = unit_from_angle(pose.yaw);
    const Vec2 along{-axis.y, axis.x};
    const Vec2 p = pose.position() + axis * d;
    const WorldModel w = open.with_obstacles({crawler::testing::segment(p - along * 5.0, p + along * 5.0)});
    const RangeReading rd = ultrasonic_measure(w, pose, cone, rng);
    ++perpendicular;
    perpendicular_ok += rd.distance && std::abs(*rd.distance - d) <= 1e-6;
  }
  return {grazing_ok == grazing && perpendicular_ok == perpendicular,
          fmt("grazing max-range %g/%g, perpendicular exact %g/%g", grazing_ok, grazing, perpendicular_ok,
              perpendicular)};
}

Outcome table_reproduction(const ComparisonReport& rep) {
  const std::string golden = slurp(std::string(CRAWLER_GOLDEN_DIR) + "/static_table.txt");
  const std::string table = format_static_table(rep);
  const std::string text = format_report_text(rep);
  const auto& u = rep.static_ultrasonic;
  const auto& l = rep.static_lidar;
  const bool values = u.sensor_count == 4 && u.samples_per_s == 10.0 && u.range_min == 0.01 && u.range_max == 2.0 &&
                      u.cost.total == 400 && l.sensor_count == 1 && l.samples_per_s == 720.0 && l.range_min == 1.0 &&
                      l.range_max == 10.0 && l.cost.total >= 100000;
  const bool ok = !golden.empty() && table == golden && text.find(golden) != std::string::npos && values;
  return {ok, std::string(table == golden ? "static rows byte-identical to golden" : "static rows differ from golden") +
                  (values ? "" : ", static values wrong")};
}

Outcome ordering(const ComparisonReport& rep) {
  const SuiteRow* us = nullptr;
  const SuiteRow* li = nullptr;
  for (const SuiteRow& r : rep.rows) {
    if (r.spec.suite == Suite::ultrasonic) us = &r;
    if (r.spec.suite == Suite::lidar) li = &r;
  }
  if (!us || !li || !rep.flags) return {false, "missing rows"};
  const bool ok = rep.flags->lidar_coverage_gt_ultrasonic && rep.flags->ultrasonic_cost_lt_lidar &&
                  rep.seeds.size() == 5 && rep.all_completed();
  return {ok, fmt("coverage lidar %.4f vs ultrasonic %.4f, cost %g vs %g", li->mean.coverage, us->mean.coverage,
                  static_cast<double>(li->spec.cost.total), static_cast<double>(us->spec.cost.total))};
}

double mean_trace(const SimResult& r, Tick from, Tick to) {
  double s = 0;
  int n = 0;
  for (const TraceRow& row : r.trace)
    if (row.tick >= from && row.tick <= to) {
      s += row.cov_trace;
      ++n;
    }
  return n ? s / n : NAN;
}

Outcome localization_behavior() {
  const ScenarioConfig still = scenario("loc_stationary_open");
  const ScenarioConfig moving = scenario("loc_wall_follow");
  int wins = 0;
  double worst_ratio = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ScenarioConfig a = still, b = moving;
    a.seed = b.seed = seed;
    const double ts = mean_trace(run_scenario(a), 10, 50);
    const double tm = mean_trace(run_scenario(b), 10, 50);
    wins += tm < ts;
    worst_ratio = std::max(worst_ratio, tm / ts);
  }
  ScenarioConfig pf = scenario("loc_loop_pf");
  ScenarioConfig dr = pf;
  dr.localization.mode = LocalizationMode::dead_reckoning;
  const double rmse_pf = localization_rmse(run_scenario(pf));
  const double rmse_dr = localization_rmse(run_scenario(dr));
  const bool ok = wins == 5 && pf.ultrasonic.noise_sigma == 0.02 && rmse_pf <= 0.5 * rmse_dr;
  return {ok, fmt("moving < stationary trace in %g/5 seeds (worst ratio %.3f); RMSE pf %.4f m vs dr %.4f m", wins,
                  worst_ratio, rmse_pf, rmse_dr)};
}

bool inside(Vec2 p, const Obstacle& o) {
  bool in = false;
  const auto& v = o.vertices;
  for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++)
    if ((v[i].y > p.y) != (v[j].y > p.y) && p.x < (v[j].x - v[i].x) * (p.y - v[i].y) / (v[j].y - v[i].y) + v[i].x)
      in = !in;
  return in;
}

Outcome navigation() {
  const std::vector<std::string> names{"nav_empty_straight", "nav_empty_diagonal", "nav_l_corridor",
                                       "nav_pillars",        "nav_maze",           "nav_house_bl_to_br",
                                       "nav_house_bl_to_tr", "nav_house_tl_to_br", "nav_house_pf",
                                       "nav_two_corridors_dynamic"};
  int reached = 0, dynamic_runs = 0, dynamic_ok = 0;
  std::string failures;
  for (const auto& n : names) {
    const ScenarioConfig cfg = scenario(n);
    const SimResult r = run_scenario(cfg);
    const bool ok = r.status == SimStatus::goal_reached && r.collision_ticks == 0;
    reached += ok;
    if (!ok) failures += " " + n + "=" + std::string(to_string(r.status));
    bool has_dynamic = false;
    for (const Obstacle& o : cfg.world.obstacles()) has_dynamic |= o.dynamic;
    if (!has_dynamic) continue;
    ++dynamic_runs;
    // The obstacle must land on the route planned through the static world.
    const OccupancyGrid truth = rasterize_ground_truth(cfg.world, cfg.mapping.resolution);
    const PlanResult plan = replan(truth, cfg.start, cfg.goal, cfg.vehicle.footprint_radius, cfg.planning);
    bool on_path = false;
    for (const Obstacle& o : cfg.world.obstacles())
      if (o.dynamic)
        for (const Vec2& w : plan.path.world_waypoints) on_path |= inside(w, o);
    dynamic_ok += plan.ok() && on_path && r.replans >= 1;
    failures += fmt(" (dynamic: on planned path %g, replans %g)", on_path, r.replans);
  }
  return {reached == 10 && dynamic_runs >= 1 && dynamic_ok == dynamic_runs,
          fmt("%g/10 goal_reached without collision", reached) + failures};
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "crawler_slam");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "crawler_acceptance_det";
  fs::remove_all(root);
  int scenarios = 0, identical = 0;
  std::string differing;
  for (const auto& e : fs::directory_iterator(data_path("scenarios"))) {
    if (e.path().extension() != ".json") continue;
    ++scenarios;
    const std::string stem = e.path().stem().string();
    cli({"run", e.path().string(), "--out", (root / stem / "a").string()});
    cli({"run", e.path().string(), "--out", (root / stem / "b").string()});
    bool same = true;
    for (const char* f : {"result.json", "map.pgm", "trace.csv"}) {
      const std::string a = slurp(root / stem / "a" / f);
      same &= !a.empty() && a == slurp(root / stem / "b" / f);
    }
    identical += same;
    if (!same) differing += " " + stem;
  }
  // Bench under different thread caps.
  std::ofstream(root / "set.json") << "{\"name\": \"det\", \"scenarios\": [\"" << data_path("scenarios/nav_house_pf.json")
                                   << "\", \"" << data_path("scenarios/teleop_square.json")
                                   << "\"], \"suites\": [\"ultrasonic\", \"lidar\"], \"seeds\": 3}";
  std::vector<std::string> reports;
  for (const char* threads : {"1", "4"}) {
    setenv("CRAWLER_SLAM_THREADS", threads, 1);
    const fs::path out = root / (std::string("bench_") + threads);
    cli({"bench", (root / "set.json").string(), "--out", out.string()});
    reports.push_back(slurp(out / "comparison.json") + slurp(out / "comparison.txt"));
  }
  unsetenv("CRAWLER_SLAM_THREADS");
  const bool bench_same = !reports[0].empty() && reports[0] == reports[1];
  return {identical == scenarios && scenarios >= 10 && bench_same,
          fmt("%g/%g scenarios byte-identical across runs; bench 1 vs 4 threads ", identical, scenarios) +
              (bench_same ? "identical" : "DIFFER") + differing};
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](int n, const char* title, double limit_s, const std::function<Outcome()>& f) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (limit_s > 0 && secs >= limit_s) {
      o.pass = false;
      o.detail += fmt(" (over the %gs budget)", limit_s);
    }
    failed += !o.pass;
    std::printf("%s criterion %d: %s [%.2fs] %s\n", o.pass ? "PASS" : "FAIL", n, title, secs, o.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "formula fidelity", 1.0, formula_fidelity);
  report(2, "planner optimality", 5.0, planner_optimality);
  report(3, "lidar mapping fidelity", 30.0, mapping_fidelity);
  report(4, "ultrasonic dropout", 1.0, ultrasonic_dropout);

  // Criteria 5 and 6 share one bench run over the house set.
  ComparisonReport rep;
  double bench_s = 0;
  std::string bench_error;
  {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const BenchSet set = load_bench_set_file(data_path("sets/house_bench.json"));
      std::vector<ScenarioConfig> sc;
      for (const auto& p : set.scenario_paths) sc.push_back(load_scenario_file(p));
      configure_threads();
      rep = compare_sensors(sc, set.suites, set.seed_list(), set.name);
    } catch (const std::exception& e) {
      bench_error = e.what();
    }
    bench_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  auto from_bench = [&](std::function<Outcome()> f) {
    return [&, f]() -> Outcome { return bench_error.empty() ? f() : Outcome{false, "bench error: " + bench_error}; };
  };
  report(5, "sensor table reproduction", 0, from_bench([&] { return table_reproduction(rep); }));
  report(6, "coverage and cost ordering", 0, from_bench([&] {
    Outcome o = ordering(rep);
    o.detail += fmt(", bench %.1fs", bench_s);
    if (bench_s >= 180.0) o = {false, o.detail + " (over the 180s budget)"};
    return o;
  }));
  report(7, "localization behavior", 0, localization_behavior);
  report(8, "navigation", 120.0, navigation);
  report(9, "determinism", 0, determinism);

  std::printf("%d of 9 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
