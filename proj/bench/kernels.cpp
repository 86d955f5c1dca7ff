// Serial reference vs OpenMP kernel timings on the house world.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include <omp.h>

#include <CLI11.hpp>

#include "crawler/execution.hpp"
#include "crawler/localization.hpp"
#include "crawler/sensors.hpp"
#include "crawler/world.hpp"

using namespace crawler;

namespace {

template <typename F>
double best_ms(int reps, F&& f) {
  double best = INFINITY;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

void row(const char* name, double serial, double parallel, bool same) {
  std::printf("%-26s %10.3f %10.3f %8.2fx  %s\n", name, serial, parallel, serial / parallel,
              same ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel benchmark: serial reference vs OpenMP"};
  int reps = 5;
  int threads = 0;
  std::string world_path = std::string(CRAWLER_DATA_DIR) + "/worlds/house.json";
  app.add_option("--reps", reps, "Repetitions (best time is reported)");
  app.add_option("--threads", threads, "OpenMP threads (default: CRAWLER_SLAM_THREADS or all)");
  app.add_option("--world", world_path, "World file");
  CLI11_PARSE(app, argc, argv);

  configure_threads(threads);
  const WorldModel world = load_world_file(world_path);
  std::printf("threads: %d\n", omp_get_max_threads());
  std::printf("%-26s %10s %10s %9s\n", "kernel", "serial ms", "omp ms", "speedup");

  // Dense ray fan from the middle of the lower-left room.
  std::vector<Vec2> dirs(20000);
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(dirs.size());
    dirs[i] = {std::cos(a), std::sin(a)};
  }
  const Vec2 origin{2.5, 3.5};
  std::vector<std::optional<RayHit>> rs, rp;
  const double ray_s = best_ms(reps, [&] { rs = raycast_many(world, origin, dirs, 10.0, Execution::serial); });
  const double ray_p = best_ms(reps, [&] { rp = raycast_many(world, origin, dirs, 10.0, Execution::parallel); });
  bool same = rs.size() == rp.size();
  for (std::size_t i = 0; same && i < rs.size(); ++i)
    same = rs[i].has_value() == rp[i].has_value() && (!rs[i] || rs[i]->distance == rp[i]->distance);
  row("raycast_many (20000 rays)", ray_s, ray_p, same);

  OccupancyGrid gs, gp;
  const double ras_s = best_ms(reps, [&] { gs = rasterize_ground_truth(world, 0.02, Execution::serial); });
  const double ras_p = best_ms(reps, [&] { gp = rasterize_ground_truth(world, 0.02, Execution::parallel); });
  row("rasterize (0.02 m cells)", ras_s, ras_p,
      std::equal(gs.cells().begin(), gs.cells().end(), gp.cells().begin(), gp.cells().end()));

  Rng rng(7);
  const ParticleSet ps = make_particles({2.5, 3.5, 0.3}, 2000, 0.3, 0.2, rng);
  LidarConfig lidar;
  Rng scan_rng(11);
  const LidarScan scan = lidar_scan(world, {2.5, 3.5, 0.3}, lidar, scan_rng);
  const LidarObservation obs{&scan, &lidar, effective_range(lidar, world.medium())};
  MapView view;
  view.world = &world;
  LikelihoodConfig lc;
  std::vector<double> ls, lp;
  const double pl_s = best_ms(reps, [&] { ls = particle_log_likelihoods(ps, obs, view, lc, Execution::serial); });
  const double pl_p = best_ms(reps, [&] { lp = particle_log_likelihoods(ps, obs, view, lc, Execution::parallel); });
  row("particle likelihoods (2000)", pl_s, pl_p, ls == lp);
  return 0;
}
