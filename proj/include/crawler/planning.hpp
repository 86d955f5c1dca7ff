#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "crawler/occupancy_grid.hpp"
#include "crawler/sensors.hpp"
#include "crawler/vehicle.hpp"

namespace crawler {

using Cell = GridIndex;

enum class UnknownPolicy { blocked, free };

struct PlanningConfig {
  UnknownPolicy unknown = UnknownPolicy::blocked;
  double inflation_margin = 0.25;  ///< added to the footprint radius before dilation
  double lookahead = 0.3;
  double heading_gain = 1.5;
  double stop_near = 0.25;
  double stop_far = 0.6;
  double front_cone_deg = 30.0;
  double safety_distance = 0.2;  ///< reading-to-path distance that triggers a replan
  double replan_horizon = 2.0;   ///< only path cells this far ahead are checked

  void validate() const;
};

/// Blocked/free lattice the point planner searches. Built from a classified
/// map by dilating blocked cells with a disc of the inflation radius.
class PlanningGrid {
 public:
  PlanningGrid() = default;
  PlanningGrid(int width, int height, std::vector<std::uint8_t> blocked, double resolution = 1.0,
               Vec2 origin = {});

  /// Occupied cells, unknown ones under UnknownPolicy::blocked, and the area
  /// outside the grid are dilated by ceil((footprint + margin) / resolution)
  /// cells.
  static PlanningGrid from_map(const OccupancyGrid& map, double footprint_radius,
                               const PlanningConfig& cfg);

  int width() const { return width_; }
  int height() const { return height_; }
  double resolution() const { return resolution_; }
  Vec2 origin() const { return origin_; }
  bool in_bounds(Cell c) const { return c.col >= 0 && c.row >= 0 && c.col < width_ && c.row < height_; }
  bool blocked(Cell c) const { return !in_bounds(c) || blocked_[index(c)] != 0; }
  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(c.col);
  }
  Vec2 center_of(Cell c) const {
    return {origin_.x + (c.col + 0.5) * resolution_, origin_.y + (c.row + 0.5) * resolution_};
  }
  Cell cell_of(Vec2 p) const {
    return {static_cast<int>(std::floor((p.x - origin_.x) / resolution_)),
            static_cast<int>(std::floor((p.y - origin_.y) / resolution_))};
  }
  std::span<const std::uint8_t> cells() const { return blocked_; }

 private:
  int width_ = 0;
  int height_ = 0;
  double resolution_ = 1.0;
  Vec2 origin_{};
  std::vector<std::uint8_t> blocked_;
};

struct GridPath {
  std::vector<Cell> cells;
  int cost = 0;
  std::vector<Vec2> world_waypoints;
};

enum class PlanStatus { ok, no_path, invalid_endpoint };

struct PlanResult {
  PlanStatus status = PlanStatus::no_path;
  GridPath path;
  std::size_t expanded = 0;

  bool ok() const { return status == PlanStatus::ok; }
};

/// |dcol| + |drow|.
int heuristic_manhattan(Cell p, Cell q);

/// Called for every cell A* closes, with its accumulated cost.
using ExpandHook = std::function<void(Cell, int)>;

/// A* over 4-connected free cells with unit steps and f = g + Manhattan.
/// Ties: lower f, then larger g, then row-major order.
PlanResult plan_global(const PlanningGrid& grid, Cell start, Cell goal, const ExpandHook& on_expand = {});

/// Uniform-cost search with the same move set; exact minimum cost.
PlanResult dijkstra_oracle(const PlanningGrid& grid, Cell start, Cell goal);

/// 4-adjacent, free, correct endpoints, cost = steps.
bool path_is_valid(const PlanningGrid& grid, const GridPath& path, Cell start, Cell goal);

/// Nearest free cell by breadth-first distance (4-connected through any
/// cell), used to leave an inflated zone the crawler has drifted into.
std::optional<Cell> nearest_free_cell(const PlanningGrid& grid, Cell from);

/// Re-inflates the latest map and plans from the crawler's cell.
PlanResult replan(const OccupancyGrid& map, const Pose2D& pose, Vec2 goal, double footprint_radius,
                  const PlanningConfig& cfg);

struct ReplanRequest {
  std::string reason;
};

/// Latest sensing as seen by the local planner.
struct SensorSnapshot {
  std::span<const RangeReading> sonar;
  const LidarScan* lidar = nullptr;
};

using LocalDecision = std::variant<VelocityCommand, ReplanRequest>;

/// Pure pursuit toward the first waypoint beyond the lookahead, with speed
/// cut linearly to zero as the nearest front-cone reading falls from
/// stop_far to stop_near. Emits ReplanRequest when a reading puts an obstacle
/// within safety_distance of the path ahead.
LocalDecision plan_local(const Pose2D& pose, const GridPath& path, Vec2 goal, const SensorSnapshot& sensing,
                         const VehicleConfig& vehicle, const PlanningConfig& cfg,
                         bool allow_replan_request = true);

/// Frontier: a free cell 4-adjacent to an unknown cell.
std::vector<std::uint8_t> frontier_mask(const OccupancyGrid& map);

/// Nearest (breadth-first over planning-free cells) cell at least
/// min_distance steps away from which a frontier cell not marked in
/// `excluded` lies between view_min and view_max cells. With view_max = 0 the
/// result is a frontier cell itself.
std::optional<Cell> nearest_frontier(const OccupancyGrid& map, const PlanningGrid& grid, Cell from,
                                     int min_distance, std::span<const std::uint8_t> excluded = {},
                                     int view_min = 0, int view_max = 0);

/// One "x,y" line per world waypoint.
std::string format_path(const GridPath& path);

}  // namespace crawler
