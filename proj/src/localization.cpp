#include "crawler/localization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "crawler/errors.hpp"

namespace crawler {

ParticleSet make_particles(const Pose2D& center, int n, double sigma_xy, double sigma_yaw, Rng& rng) {
  CRAWLER_EXPECTS(n > 0, "make_particles: need at least one particle");
  ParticleSet ps;
  ps.particles.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double dx = rng.normal(0.0, sigma_xy);
    const double dy = rng.normal(0.0, sigma_xy);
    const double dyaw = rng.normal(0.0, sigma_yaw);
    ps.particles.push_back({center.x + dx, center.y + dy, wrap_angle(center.yaw + dyaw)});
  }
  ps.weights.assign(static_cast<std::size_t>(n), 1.0 / n);
  return ps;
}

void predict(ParticleSet& ps, const VelocityCommand& cmd, double dt, const MotionNoise& noise, Rng& rng) {
  CRAWLER_EXPECTS(dt > 0.0, "predict: dt must be > 0");
  const double sigma_v = std::hypot(noise.sigma_v_scale * std::abs(cmd.v), noise.floor_v);
  const double sigma_w = std::hypot(noise.sigma_omega_scale * std::abs(cmd.omega), noise.floor_omega);
  for (Pose2D& p : ps.particles) {
    const double v = cmd.v + sigma_v * rng.normal();
    const double w = cmd.omega + sigma_w * rng.normal();
    if (v == 0.0 && w == 0.0) continue;
    p = step_kinematics(StateVector::from_pose(p), {v, w}, dt).pose();
  }
}

std::optional<double> grid_ray_distance(const OccupancyGrid& grid, Vec2 origin, Vec2 dir,
                                        double max_range) {
  std::optional<double> found;
  const GridIndex start = grid.index_of(origin);
  traverse_cells(grid, origin, origin + dir * max_range, [&](GridIndex c, double entry) {
    if (c == start) return true;
    if (grid.state(c) == CellState::occupied) {
      found = entry;
      return false;
    }
    return true;
  });
  return found;
}

std::optional<double> expected_sonar_distance(const MapView& map, const Pose2D& sensor_pose,
                                              const UltrasonicConfig& cfg, double effective_range) {
  if (map.world != nullptr) {
    if (!map.world->contains(sensor_pose.position())) return std::nullopt;
    return ultrasonic_echo(*map.world, sensor_pose, cfg);
  }
  const double half = deg_to_rad(cfg.beam_width_deg) / 2.0;
  std::optional<double> nearest;
  for (int j = 0; j < cfg.cone_rays; ++j) {
    const double offset = cfg.cone_rays == 1 ? 0.0 : half * (2.0 * j / (cfg.cone_rays - 1) - 1.0);
    const auto d = grid_ray_distance(*map.grid, sensor_pose.position(),
                                     unit_from_angle(sensor_pose.yaw + offset), effective_range);
    if (d && (!nearest || *d < *nearest)) nearest = d;
  }
  return nearest;
}

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

double gaussian(double x, double sigma) {
  const double z = x / sigma;
  return kInvSqrt2Pi / sigma * std::exp(-0.5 * z * z);
}

// P(return lands beyond `limit` | expected distance e).
double survival(double e, double limit, double sigma) {
  return 0.5 * std::erfc((limit - e) / (sigma * std::numbers::sqrt2));
}

double sonar_log_likelihood(const Pose2D& particle, const SonarObservation& obs, const MapView& map,
                            const LikelihoodConfig& cfg) {
  const UltrasonicConfig& sc = *obs.config;
  const double w = cfg.outlier_weight;
  const double sigma = cfg.sonar_sigma;
  double ll = 0.0;
  for (const RangeReading& r : obs.readings) {
    const Pose2D sensor = sonar_pose(particle, sc, r.sensor_index);
    const auto expected = expected_sonar_distance(map, sensor, sc, obs.effective_range);
    double p;
    if (r.distance) {
      const double e = expected.value_or(obs.effective_range);
      p = (1.0 - w) * gaussian(*r.distance - e, sigma) + w / sc.max_range;
    } else {
      const double s = expected ? survival(*expected, obs.effective_range, sigma) : 1.0;
      p = (1.0 - w) * s + w;
    }
    ll += std::log(p);
  }
  return ll;
}

double lidar_log_likelihood(const Pose2D& particle, const LidarObservation& obs, const MapView& map,
                            const LikelihoodConfig& cfg) {
  const LidarConfig& lc = *obs.config;
  const LidarScan& scan = *obs.scan;
  const double w = cfg.outlier_weight;
  const double sigma = cfg.lidar_sigma;
  const std::size_t stride = static_cast<std::size_t>(std::max(1, cfg.lidar_beam_stride));
  const bool in_world = map.world == nullptr || map.world->contains(particle.position());
  double ll = 0.0;
  for (std::size_t i = 0; i < scan.ranges.size(); i += stride) {
    const Vec2 dir = unit_from_angle(particle.yaw + scan.beam_angle(i));
    std::optional<double> expected;
    if (map.world != nullptr) {
      if (in_world) {
        if (const auto hit = raycast(*map.world, particle.position(), dir, lc.max_range))
          expected = hit->distance + lc.systematic_error;
      }
    } else {
      expected = grid_ray_distance(*map.grid, particle.position(), dir, lc.max_range);
    }
    if (expected && *expected > obs.effective_range) expected.reset();
    const LidarReturn& ret = scan.ranges[i];
    double p = 1.0;
    switch (ret.status) {
      case ReturnStatus::valid: {
        const double e = expected.value_or(obs.effective_range);
        p = (1.0 - w) * gaussian(ret.distance - e, sigma) + w / lc.max_range;
        break;
      }
      case ReturnStatus::max_range: {
        const double s = expected ? survival(*expected, obs.effective_range, sigma) : 1.0;
        p = (1.0 - w) * s + w;
        break;
      }
      case ReturnStatus::too_close: {
        const double s = expected ? 1.0 - survival(*expected, lc.min_range, sigma) : 0.0;
        p = (1.0 - w) * s + w;
        break;
      }
    }
    ll += std::log(p);
  }
  return ll;
}

template <class Score>
std::vector<double> score_particles(const ParticleSet& ps, Execution exec, Score&& score) {
  const long n = static_cast<long>(ps.size());
  std::vector<double> ll(ps.size());
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) ll[i] = score(ps.particles[i]);
  } else {
    for (long i = 0; i < n; ++i) ll[i] = score(ps.particles[i]);
  }
  return ll;
}

}  // namespace

std::vector<double> particle_log_likelihoods(const ParticleSet& ps, const SonarObservation& obs,
                                             const MapView& map, const LikelihoodConfig& cfg,
                                             Execution exec) {
  CRAWLER_EXPECTS(obs.config != nullptr, "sonar observation without config");
  CRAWLER_EXPECTS(map.grid != nullptr || map.world != nullptr, "no map to score against");
  return score_particles(ps, exec, [&](const Pose2D& p) { return sonar_log_likelihood(p, obs, map, cfg); });
}

std::vector<double> particle_log_likelihoods(const ParticleSet& ps, const LidarObservation& obs,
                                             const MapView& map, const LikelihoodConfig& cfg,
                                             Execution exec) {
  CRAWLER_EXPECTS(obs.config != nullptr && obs.scan != nullptr, "lidar observation without scan/config");
  CRAWLER_EXPECTS(map.grid != nullptr || map.world != nullptr, "no map to score against");
  return score_particles(ps, exec, [&](const Pose2D& p) { return lidar_log_likelihood(p, obs, map, cfg); });
}

WeightUpdate apply_log_likelihoods(ParticleSet& ps, std::span<const double> log_likelihoods) {
  const std::size_t n = ps.size();
  std::vector<double> lw(n);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    lw[i] = (ps.weights[i] > 0.0 ? std::log(ps.weights[i]) : -std::numeric_limits<double>::infinity()) +
            log_likelihoods[i];
    if (lw[i] > best) best = lw[i];
  }
  if (!std::isfinite(best)) {
    ps.weights.assign(n, 1.0 / static_cast<double>(n));
    return {true};
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lw[i] = std::exp(lw[i] - best);
    sum += lw[i];
  }
  for (std::size_t i = 0; i < n; ++i) ps.weights[i] = lw[i] / sum;
  return {false};
}

WeightUpdate update_weights(ParticleSet& ps, const SonarObservation& obs, const MapView& map,
                            const LikelihoodConfig& cfg, Execution exec) {
  const auto ll = particle_log_likelihoods(ps, obs, map, cfg, exec);
  return apply_log_likelihoods(ps, ll);
}

WeightUpdate update_weights(ParticleSet& ps, const LidarObservation& obs, const MapView& map,
                            const LikelihoodConfig& cfg, Execution exec) {
  const auto ll = particle_log_likelihoods(ps, obs, map, cfg, exec);
  return apply_log_likelihoods(ps, ll);
}

double effective_sample_size(const ParticleSet& ps) {
  double s = 0.0;
  for (double w : ps.weights) s += w * w;
  return s > 0.0 ? 1.0 / s : 0.0;
}

ParticleSet systematic_resample(const ParticleSet& ps, Rng& rng) {
  const std::size_t n = ps.size();
  ParticleSet out;
  out.particles.reserve(n);
  const double step = 1.0 / static_cast<double>(n);
  const double u0 = rng.uniform() * step;
  double cumulative = ps.weights[0];
  std::size_t i = 0;
  for (std::size_t m = 0; m < n; ++m) {
    const double u = u0 + static_cast<double>(m) * step;
    while (u > cumulative && i + 1 < n) cumulative += ps.weights[++i];
    out.particles.push_back(ps.particles[i]);
  }
  out.weights.assign(n, step);
  return out;
}

ParticleSet resample(const ParticleSet& ps, Rng& rng) {
  if (effective_sample_size(ps) >= static_cast<double>(ps.size()) / 2.0) return ps;
  return systematic_resample(ps, rng);
}

PoseEstimate estimate(const ParticleSet& ps) {
  PoseEstimate est;
  double mx = 0.0, my = 0.0, s = 0.0, c = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const double w = ps.weights[i];
    const Pose2D& p = ps.particles[i];
    mx += w * p.x;
    my += w * p.y;
    s += w * std::sin(p.yaw);
    c += w * std::cos(p.yaw);
  }
  est.mean = {mx, my, std::atan2(s, c)};
  auto& cov = est.covariance;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const double w = ps.weights[i];
    const Pose2D& p = ps.particles[i];
    const double r[3] = {p.x - mx, p.y - my, wrap_angle(p.yaw - est.mean.yaw)};
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) cov[a][b] += w * r[a] * r[b];
  }
  return est;
}

}  // namespace crawler
