#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "crawler/localization.hpp"
#include "test_support.hpp"

namespace crawler {
namespace {

using testing::box_world;

constexpr double pi = std::numbers::pi;

double weight_sum(const ParticleSet& ps) { return std::accumulate(ps.weights.begin(), ps.weights.end(), 0.0); }

ParticleSet uniform_set(std::vector<Pose2D> poses) {
  ParticleSet ps;
  ps.particles = std::move(poses);
  ps.weights.assign(ps.particles.size(), 1.0 / static_cast<double>(ps.particles.size()));
  return ps;
}

TEST(Predict, ZeroCommandZeroNoiseIsIdentity) {
  Rng rng(1);
  ParticleSet ps = make_particles({1, 2, 0.5}, 50, 0.3, 0.3, rng);
  const ParticleSet before = ps;
  predict(ps, {0, 0}, 0.1, MotionNoise{0, 0, 0, 0}, rng);
  EXPECT_EQ(ps.particles, before.particles);
  EXPECT_EQ(ps.weights, before.weights);
}

TEST(Predict, NoiselessTranslation) {
  Rng rng(2);
  ParticleSet ps = make_particles({1, 2, 0.5}, 50, 0.3, 1.0, rng);
  const ParticleSet before = ps;
  predict(ps, {1, 0}, 0.1, MotionNoise{0, 0, 0, 0}, rng);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const Pose2D a = before.particles[i], b = ps.particles[i];
    EXPECT_NEAR(b.x - a.x, 0.1 * std::cos(a.yaw), 1e-15);
    EXPECT_NEAR(b.y - a.y, 0.1 * std::sin(a.yaw), 1e-15);
    EXPECT_EQ(b.yaw, a.yaw);
  }
}

TEST(Predict, StationarySpreadOnlyWithFloor) {
  auto trace_after = [](MotionNoise noise) {
    Rng rng(3);
    ParticleSet ps = make_particles({5, 5, 0}, 300, 0.0, 0.0, rng);
    for (int i = 0; i < 100; ++i) predict(ps, {0, 0}, 0.1, noise, rng);
    return estimate(ps).trace();
  };
  EXPECT_LT(trace_after({0.2, 0.2, 0.0, 0.0}), 1e-20);
  EXPECT_GT(trace_after({0.2, 0.2, 0.02, 0.02}), 1e-4);
  Rng rng(4);
  ParticleSet moving = make_particles({5, 5, 0}, 300, 0.0, 0.0, rng);
  for (int i = 0; i < 100; ++i) predict(moving, {0.3, 0.2}, 0.1, {0.2, 0.2, 0.0, 0.0}, rng);
  EXPECT_GT(estimate(moving).trace(), 1e-4);
}

struct WallCase {
  WorldModel world = box_world(10, 10).with_obstacles({testing::segment({6, 0}, {6, 10})});
  UltrasonicConfig cfg;
  std::vector<RangeReading> readings;
  WallCase() {
    Rng rng(1);
    readings = sample_sonar_ring(world, {5, 5, 0}, cfg, rng);
  }
  SonarObservation obs() const { return {readings, &cfg, 2.0}; }
  MapView view() const { return {nullptr, &world}; }
};

TEST(UpdateWeights, IdenticalParticlesStayUniform) {
  WallCase wc;
  ASSERT_TRUE(wc.readings[0].distance);
  ParticleSet ps = uniform_set(std::vector<Pose2D>(20, Pose2D{5, 5, 0}));
  const WeightUpdate u = update_weights(ps, wc.obs(), wc.view(), LikelihoodConfig{});
  EXPECT_FALSE(u.diverged);
  for (double w : ps.weights) EXPECT_NEAR(w, 1.0 / 20, 1e-12);
}

TEST(UpdateWeights, TruePoseWins) {
  WallCase wc;
  // Sliding along the wall is unobservable, so every decoy moves off it.
  ParticleSet ps = uniform_set({{4, 5, 0}, {5, 5, 0}, {4.4, 5.8, 0}, {4.4, 4.2, 0}, {4.2, 5.6, 0}});
  update_weights(ps, wc.obs(), wc.view(), LikelihoodConfig{});
  EXPECT_NEAR(weight_sum(ps), 1.0, 1e-9);
  for (std::size_t i = 0; i < ps.size(); ++i)
    if (i != 1) { EXPECT_GT(ps.weights[1], ps.weights[i]) << i; }
  // The particle 1 m back from the true pose expects 2 m of water where the
  // echo says 1 m.
  EXPECT_GT(ps.weights[1], 5.0 * ps.weights[0]);
}

TEST(UpdateWeights, OpenSpaceMaxRangeIsUninformative) {
  const WorldModel w = box_world(10, 10);
  UltrasonicConfig cfg;
  Rng rng(1);
  const auto readings = sample_sonar_ring(w, {5, 5, 0}, cfg, rng);
  for (const auto& r : readings) ASSERT_TRUE(r.is_max_range());
  ParticleSet ps = uniform_set({{5, 5, 0}, {4.5, 5.2, 1}, {5.5, 4.6, -2}, {4.8, 4.8, 3}});
  update_weights(ps, SonarObservation{readings, &cfg, 2.0}, MapView{nullptr, &w}, LikelihoodConfig{});
  for (double x : ps.weights) EXPECT_NEAR(x, 0.25, 1e-9);
}

TEST(UpdateWeights, NormalizedAndSerialMatchesParallel) {
  const WorldModel w = load_world_file(testing::data_path("worlds/house.json"));
  LidarConfig cfg;
  cfg.noise_sigma = 0.02;
  Rng rng(6);
  const LidarScan scan = lidar_scan(w, {2.5, 2.5, 0.3}, cfg, rng);
  ParticleSet ps = make_particles({2.5, 2.5, 0.3}, 400, 0.3, 0.2, rng);
  const OccupancyGrid truth = rasterize_ground_truth(w, 0.1);
  for (const MapView view : {MapView{nullptr, &w}, MapView{&truth, nullptr}}) {
    const LidarObservation obs{&scan, &cfg, effective_range(cfg, w.medium())};
    const auto a = particle_log_likelihoods(ps, obs, view, LikelihoodConfig{}, Execution::serial);
    const auto b = particle_log_likelihoods(ps, obs, view, LikelihoodConfig{}, Execution::parallel);
    EXPECT_EQ(a, b);
    ParticleSet copy = ps;
    update_weights(copy, obs, view, LikelihoodConfig{});
    EXPECT_NEAR(weight_sum(copy), 1.0, 1e-9);
    for (double x : copy.weights) EXPECT_GE(x, 0.0);
  }
}

TEST(UpdateWeights, UnderflowResetsToUniform) {
  ParticleSet ps = uniform_set({{1, 1, 0}, {2, 2, 0}, {3, 3, 0}});
  const std::vector<double> ll{-1e6, -2e6, -1.5e6};
  ps.weights = {0.5, 0.5, 0.0};
  const std::vector<double> dead{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                                 -std::numeric_limits<double>::infinity()};
  EXPECT_TRUE(apply_log_likelihoods(ps, dead).diverged);
  for (double x : ps.weights) EXPECT_NEAR(x, 1.0 / 3, 1e-12);
  // Large but finite log-likelihoods are handled in log space.
  EXPECT_FALSE(apply_log_likelihoods(ps, ll).diverged);
  EXPECT_NEAR(ps.weights[0], 1.0, 1e-12);
}

TEST(Resample, UniformPassesThrough) {
  Rng rng(1);
  ParticleSet ps = make_particles({0, 0, 0}, 100, 1.0, 1.0, rng);
  EXPECT_NEAR(effective_sample_size(ps), 100.0, 1e-9);
  const ParticleSet out = resample(ps, rng);
  EXPECT_EQ(out.particles, ps.particles);
}

TEST(Resample, DegenerateWeight) {
  Rng rng(1);
  ParticleSet ps = make_particles({0, 0, 0}, 100, 1.0, 1.0, rng);
  std::fill(ps.weights.begin(), ps.weights.end(), 0.0);
  ps.weights[37] = 1.0;
  const ParticleSet out = resample(ps, rng);
  ASSERT_EQ(out.size(), 100u);
  for (const Pose2D& p : out.particles) EXPECT_EQ(p, ps.particles[37]);
  for (double w : out.weights) EXPECT_DOUBLE_EQ(w, 0.01);
}

TEST(Resample, TwoEqualWeights) {
  for (int n : {10, 11, 100, 501}) {
    Rng rng(static_cast<std::uint64_t>(n));
    ParticleSet ps = make_particles({0, 0, 0}, n, 1.0, 1.0, rng);
    std::fill(ps.weights.begin(), ps.weights.end(), 0.0);
    ps.weights[0] = ps.weights[1] = 0.5;
    const ParticleSet out = resample(ps, rng);
    ASSERT_EQ(static_cast<int>(out.size()), n);
    int a = 0, b = 0;
    for (const Pose2D& p : out.particles) {
      a += p == ps.particles[0];
      b += p == ps.particles[1];
    }
    EXPECT_EQ(a + b, n);
    EXPECT_LE(std::abs(a - n / 2.0), 1.0);
    EXPECT_LE(std::abs(b - n / 2.0), 1.0);
  }
}

TEST(Resample, PreservesMeanInExpectation) {
  Rng init(9);
  ParticleSet ps = make_particles({0, 0, 0}, 50, 1.0, 0.0, init);
  double wsum = 0;
  for (double& w : ps.weights) wsum += (w = init.uniform() * init.uniform());
  for (double& w : ps.weights) w /= wsum;
  double mean = 0, sq = 0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    mean += ps.weights[i] * ps.particles[i].x;
    sq += ps.weights[i] * ps.particles[i].x * ps.particles[i].x;
  }
  const int trials = 1000;
  Rng rng(10);
  std::vector<double> means;
  for (int t = 0; t < trials; ++t) {
    const ParticleSet out = systematic_resample(ps, rng);
    double m = 0;
    for (const Pose2D& p : out.particles) m += p.x;
    means.push_back(m / static_cast<double>(out.size()));
  }
  const double avg = std::accumulate(means.begin(), means.end(), 0.0) / trials;
  double var = 0;
  for (double m : means) var += (m - avg) * (m - avg);
  const double se = std::sqrt(var / (trials - 1) / trials);
  EXPECT_LT(std::abs(avg - mean), 3 * se + 1e-12) << "avg " << avg << " mean " << mean << " se " << se;
  EXPECT_GT(sq - mean * mean, 0.0);
}

TEST(Estimate, Examples) {
  const PoseEstimate same = estimate(uniform_set(std::vector<Pose2D>(5, Pose2D{1, 2, 0.3})));
  for (const auto& row : same.covariance)
    for (double v : row) EXPECT_NEAR(v, 0.0, 1e-15);

  const PoseEstimate two = estimate(uniform_set({{0, 0, 0}, {2, 0, 0}}));
  EXPECT_NEAR(two.mean.x, 1.0, 1e-15);
  EXPECT_NEAR(two.mean.y, 0.0, 1e-15);
  EXPECT_NEAR(two.covariance[0][0], 1.0, 1e-12);

  const PoseEstimate wrap = estimate(uniform_set({{0, 0, 3.1}, {0, 0, -3.1}}));
  EXPECT_NEAR(std::abs(wrap.mean.yaw), pi, 1e-9);
  EXPECT_NEAR(wrap.covariance[2][2], std::pow(pi - 3.1, 2), 1e-9);
}

TEST(Estimate, CovarianceSymmetricPsd) {
  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    ParticleSet ps = make_particles({rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-pi, pi)}, 200,
                                    rng.uniform(0, 1), rng.uniform(0, 3), rng);
    double s = 0;
    for (double& w : ps.weights) s += (w = rng.uniform());
    for (double& w : ps.weights) w /= s;
    const PoseEstimate e = estimate(ps);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) EXPECT_NEAR(e.covariance[i][j], e.covariance[j][i], 1e-12);
    for (int k = 0; k < 200; ++k) {
      const double v[3] = {rng.normal(), rng.normal(), rng.normal()};
      double q = 0;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) q += v[i] * e.covariance[i][j] * v[j];
      EXPECT_GE(q, -1e-9);
    }
    EXPECT_GT(e.mean.yaw, -pi);
    EXPECT_LE(e.mean.yaw, pi);
  }
}

TEST(GridRay, DistanceToFirstOccupiedCell) {
  OccupancyGrid g(50, 50, 0.1, {0, 0});
  for (int r = 0; r < 50; ++r) g.set({30, r}, 4.0);
  const auto d = grid_ray_distance(g, {1.05, 2.55}, {1, 0}, 5.0);
  ASSERT_TRUE(d);
  EXPECT_NEAR(*d, 3.0 - 1.05, 1e-9);
  EXPECT_FALSE(grid_ray_distance(g, {1.05, 2.55}, {-1, 0}, 0.5));
}

}  // namespace
}  // namespace crawler
