#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crawler/execution.hpp"
#include "crawler/geometry.hpp"
#include "crawler/occupancy_grid.hpp"

namespace crawler {

enum class Material { reflective, absorbing };
enum class ShapeKind { polygon, segment };

struct Obstacle {
  ShapeKind kind = ShapeKind::polygon;
  std::vector<Vec2> vertices;
  Material material = Material::reflective;
  bool dynamic = false;
  double appear_at_s = 0.0;  ///< only meaningful for dynamic obstacles
};

struct MediumProperties {
  double sound_speed = 1500.0;                  ///< m/s, water
  double ultrasonic_attenuation_db_per_m = 2.5; ///< 10 kHz band midpoint
  double lidar_attenuation_per_m = 12.0;        ///< blue-green band midpoint
};

/// Axis-aligned enclosure [0, width] x [0, height].
struct Bounds {
  double width = 0.0;
  double height = 0.0;
};

struct Edge {
  Vec2 a;
  Vec2 b;
  Material material = Material::reflective;
  int obstacle = -1;  ///< -1 for the implicit boundary walls
};

struct RayHit {
  double distance = 0.0;
  Vec2 point;
  Vec2 surface_normal;  ///< unit, facing the incoming ray
  Material material = Material::reflective;
};

/// Static enclosed environment. Immutable after construction; dynamic
/// obstacles take part in geometric queries only once the model's clock
/// (see at_time) has reached their appearance time.
class WorldModel {
 public:
  WorldModel() = default;
  /// Validates every invariant, throws ValidationError naming the violation.
  WorldModel(std::string name, Bounds bounds, MediumProperties medium,
             std::vector<Obstacle> obstacles);

  const std::string& name() const { return name_; }
  const Bounds& bounds() const { return bounds_; }
  const MediumProperties& medium() const { return medium_; }
  const std::vector<Obstacle>& obstacles() const { return obstacles_; }
  double time() const { return time_s_; }

  bool is_active(std::size_t obstacle) const;
  /// Copy with the clock set to t seconds (activates scheduled obstacles).
  WorldModel at_time(double t) const;
  /// Copy with extra obstacles appended (validated).
  WorldModel with_obstacles(std::vector<Obstacle> extra) const;
  /// Edges of active obstacles followed by the four boundary walls.
  std::span<const Edge> edges() const { return edges_; }

  bool contains(Vec2 p) const {
    return p.x >= 0.0 && p.y >= 0.0 && p.x <= bounds_.width && p.y <= bounds_.height;
  }

 private:
  void rebuild_edges();

  std::string name_;
  Bounds bounds_;
  MediumProperties medium_;
  std::vector<Obstacle> obstacles_;
  double time_s_ = 0.0;
  std::vector<Edge> edges_;
};

/// Parses the JSON world format. ParseError carries line or field location;
/// ValidationError names the violated invariant.
WorldModel load_world(std::string_view text, std::string name = "world");
WorldModel load_world_file(const std::string& path);

/// Nearest intersection within max_range, or nullopt.
std::optional<RayHit> raycast(const WorldModel& world, Vec2 origin, Vec2 direction,
                              double max_range);

/// Batch raycast, one result per direction. The parallel path is an OpenMP
/// loop over rays; results are identical to the serial path.
std::vector<std::optional<RayHit>> raycast_many(const WorldModel& world, Vec2 origin,
                                                std::span<const Vec2> directions,
                                                double max_range,
                                                Execution exec = Execution::parallel);

/// Conservative ground-truth grid: a cell is occupied iff its square overlaps
/// a polygon with positive area or touches a segment or boundary wall.
/// Occupied cells hold l_max, all others l_min. Throws std::invalid_argument
/// when resolution would give fewer than 4 cells per side.
OccupancyGrid rasterize_ground_truth(const WorldModel& world, double resolution,
                                     Execution exec = Execution::parallel,
                                     LogOddsParams params = {});

/// Cell counts used for a world at a given resolution.
int grid_cells_for(double extent, double resolution);

}  // namespace crawler
