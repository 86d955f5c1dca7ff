#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "crawler/execution.hpp"
#include "crawler/occupancy_grid.hpp"
#include "crawler/rng.hpp"
#include "crawler/sensors.hpp"
#include "crawler/vehicle.hpp"
#include "crawler/world.hpp"

namespace crawler {

struct ParticleSet {
  std::vector<Pose2D> particles;
  std::vector<double> weights;  ///< normalized

  std::size_t size() const { return particles.size(); }
};

/// n particles drawn around `center` (all identical when the sigmas are 0).
ParticleSet make_particles(const Pose2D& center, int n, double sigma_xy, double sigma_yaw, Rng& rng);

/// Process noise. The per-particle sigma on v is hypot(scale_v * |v|, floor_v),
/// likewise for omega, so a stationary crawler only spreads through the floor.
struct MotionNoise {
  double sigma_v_scale = 0.1;
  double sigma_omega_scale = 0.1;
  double floor_v = 0.0;
  double floor_omega = 0.0;
};

void predict(ParticleSet& ps, const VelocityCommand& cmd, double dt, const MotionNoise& noise, Rng& rng);

struct LikelihoodConfig {
  double sonar_sigma = 0.05;
  double lidar_sigma = 0.05;
  double outlier_weight = 0.1;
  int lidar_beam_stride = 20;  ///< every n-th beam is scored
};

/// What expected ranges are raycast against: the estimated grid (occupied
/// cells) or the ground-truth world.
struct MapView {
  const OccupancyGrid* grid = nullptr;
  const WorldModel* world = nullptr;
};

struct SonarObservation {
  std::span<const RangeReading> readings;
  const UltrasonicConfig* config = nullptr;
  double effective_range = 2.0;
};

struct LidarObservation {
  const LidarScan* scan = nullptr;
  const LidarConfig* config = nullptr;
  double effective_range = 10.0;
};

/// Distance to the first occupied cell along a ray (origin cell excluded).
std::optional<double> grid_ray_distance(const OccupancyGrid& grid, Vec2 origin, Vec2 dir,
                                        double max_range);

/// Expected (noiseless) sonar distance from a particle pose.
std::optional<double> expected_sonar_distance(const MapView& map, const Pose2D& sensor_pose,
                                              const UltrasonicConfig& cfg, double effective_range);

/// Log-likelihood of the observation for every particle. OpenMP over
/// particles; the serial path is the reference.
std::vector<double> particle_log_likelihoods(const ParticleSet& ps, const SonarObservation& obs,
                                             const MapView& map, const LikelihoodConfig& cfg,
                                             Execution exec = Execution::parallel);
std::vector<double> particle_log_likelihoods(const ParticleSet& ps, const LidarObservation& obs,
                                             const MapView& map, const LikelihoodConfig& cfg,
                                             Execution exec = Execution::parallel);

struct WeightUpdate {
  bool diverged = false;  ///< all weights underflowed; reset to uniform
};

/// Multiplies each weight by its likelihood and renormalizes.
WeightUpdate apply_log_likelihoods(ParticleSet& ps, std::span<const double> log_likelihoods);

WeightUpdate update_weights(ParticleSet& ps, const SonarObservation& obs, const MapView& map,
                            const LikelihoodConfig& cfg, Execution exec = Execution::parallel);
WeightUpdate update_weights(ParticleSet& ps, const LidarObservation& obs, const MapView& map,
                            const LikelihoodConfig& cfg, Execution exec = Execution::parallel);

/// 1 / sum(w^2).
double effective_sample_size(const ParticleSet& ps);

/// Low-variance resampling, unconditional. Weights come back uniform.
ParticleSet systematic_resample(const ParticleSet& ps, Rng& rng);

/// Resamples only when N_eff < N / 2; otherwise returns ps unchanged.
ParticleSet resample(const ParticleSet& ps, Rng& rng);

struct PoseEstimate {
  Pose2D mean;
  std::array<std::array<double, 3>, 3> covariance{};  ///< x, y, yaw

  double trace() const { return covariance[0][0] + covariance[1][1] + covariance[2][2]; }
};

/// Weighted mean (circular for yaw) and weighted covariance with wrapped yaw
/// residuals.
PoseEstimate estimate(const ParticleSet& ps);

}  // namespace crawler
