#include "crawler/planning.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <cstdio>
#include <deque>
#include <numbers>
#include <queue>
#include <stdexcept>
#include <tuple>

namespace crawler {

void PlanningConfig::validate() const {
  if (!(inflation_margin >= 0.0)) throw std::invalid_argument("planning: inflation_margin must be >= 0");
  if (!(lookahead > 0.0)) throw std::invalid_argument("planning: lookahead must be > 0");
  if (!(heading_gain > 0.0)) throw std::invalid_argument("planning: heading_gain must be > 0");
  if (!(stop_near >= 0.0 && stop_near < stop_far))
    throw std::invalid_argument("planning: need 0 <= stop_near < stop_far");
  if (!(front_cone_deg > 0.0 && front_cone_deg < 360.0))
    throw std::invalid_argument("planning: front_cone_deg must be in (0, 360)");
}

PlanningGrid::PlanningGrid(int width, int height, std::vector<std::uint8_t> blocked, double resolution,
                           Vec2 origin)
    : width_(width), height_(height), resolution_(resolution), origin_(origin), blocked_(std::move(blocked)) {
  if (width <= 0 || height <= 0 ||
      blocked_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw std::invalid_argument("PlanningGrid: size mismatch");
}

PlanningGrid PlanningGrid::from_map(const OccupancyGrid& map, double footprint_radius,
                                    const PlanningConfig& cfg) {
  const int w = map.width();
  const int h = map.height();
  const int k = static_cast<int>(std::ceil((footprint_radius + cfg.inflation_margin) / map.resolution() - 1e-9));
  std::vector<std::uint8_t> blocked(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0);
  std::vector<std::pair<int, int>> disc;
  for (int dy = -k; dy <= k; ++dy)
    for (int dx = -k; dx <= k; ++dx)
      if (dx * dx + dy * dy <= k * k) disc.emplace_back(dx, dy);

  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      const CellState s = map.state({col, row});
      const std::size_t i = static_cast<std::size_t>(row) * w + col;
      if (col < k || row < k || col >= w - k || row >= h - k) blocked[i] = 1;
      const bool lethal =
          s == CellState::occupied || (s == CellState::unknown && cfg.unknown == UnknownPolicy::blocked);
      if (!lethal) continue;
      for (auto [dx, dy] : disc) {
        const int c = col + dx;
        const int r = row + dy;
        if (c >= 0 && r >= 0 && c < w && r < h) blocked[static_cast<std::size_t>(r) * w + c] = 1;
      }
    }
  }
  return PlanningGrid(w, h, std::move(blocked), map.resolution(), map.origin());
}

int heuristic_manhattan(Cell p, Cell q) { return std::abs(p.col - q.col) + std::abs(p.row - q.row); }

namespace {

constexpr int kMoves[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};

GridPath build_path(const PlanningGrid& grid, const std::vector<int>& parent, int goal_idx, int cost) {
  GridPath path;
  for (int i = goal_idx; i >= 0; i = parent[static_cast<std::size_t>(i)])
    path.cells.push_back({i % grid.width(), i / grid.width()});
  std::reverse(path.cells.begin(), path.cells.end());
  path.cost = cost;
  for (const Cell& c : path.cells) path.world_waypoints.push_back(grid.center_of(c));
  return path;
}

// Best-first search shared by A* (use_heuristic) and Dijkstra.
PlanResult search(const PlanningGrid& grid, Cell start, Cell goal, bool use_heuristic,
                  const ExpandHook& on_expand) {
  PlanResult result;
  if (grid.blocked(start) || grid.blocked(goal)) {
    result.status = PlanStatus::invalid_endpoint;
    return result;
  }
  const std::size_t n = static_cast<std::size_t>(grid.width()) * static_cast<std::size_t>(grid.height());
  std::vector<int> g(n, INT_MAX);
  std::vector<int> parent(n, -1);
  std::vector<std::uint8_t> closed(n, 0);
  // (f, -g, row-major index): smallest f, then deepest, then lowest index.
  using Entry = std::tuple<int, int, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  const int s = static_cast<int>(grid.index(start));
  const int t = static_cast<int>(grid.index(goal));
  g[static_cast<std::size_t>(s)] = 0;
  open.emplace(use_heuristic ? heuristic_manhattan(start, goal) : 0, 0, s);
  while (!open.empty()) {
    const auto [f, neg_g, idx] = open.top();
    open.pop();
    const std::size_t ui = static_cast<std::size_t>(idx);
    if (closed[ui] || -neg_g != g[ui]) continue;
    closed[ui] = 1;
    ++result.expanded;
    const Cell c{idx % grid.width(), idx / grid.width()};
    if (on_expand) on_expand(c, g[ui]);
    if (idx == t) {
      result.status = PlanStatus::ok;
      result.path = build_path(grid, parent, t, g[ui]);
      return result;
    }
    for (const auto& m : kMoves) {
      const Cell nb{c.col + m[0], c.row + m[1]};
      if (grid.blocked(nb)) continue;
      const std::size_t ni = grid.index(nb);
      if (closed[ni]) continue;
      const int ng = g[ui] + 1;
      if (ng < g[ni]) {
        g[ni] = ng;
        parent[ni] = idx;
        open.emplace(ng + (use_heuristic ? heuristic_manhattan(nb, goal) : 0), -ng, static_cast<int>(ni));
      }
    }
  }
  result.status = PlanStatus::no_path;
  return result;
}

}  // namespace

PlanResult plan_global(const PlanningGrid& grid, Cell start, Cell goal, const ExpandHook& on_expand) {
  return search(grid, start, goal, true, on_expand);
}

PlanResult dijkstra_oracle(const PlanningGrid& grid, Cell start, Cell goal) {
  return search(grid, start, goal, false, {});
}

bool path_is_valid(const PlanningGrid& grid, const GridPath& path, Cell start, Cell goal) {
  if (path.cells.empty() || !(path.cells.front() == start) || !(path.cells.back() == goal)) return false;
  if (path.cost != static_cast<int>(path.cells.size()) - 1) return false;
  for (std::size_t i = 0; i < path.cells.size(); ++i) {
    if (grid.blocked(path.cells[i])) return false;
    if (i > 0 && heuristic_manhattan(path.cells[i - 1], path.cells[i]) != 1) return false;
  }
  return true;
}

std::optional<Cell> nearest_free_cell(const PlanningGrid& grid, Cell from) {
  if (!grid.in_bounds(from)) {
    from.col = std::clamp(from.col, 0, grid.width() - 1);
    from.row = std::clamp(from.row, 0, grid.height() - 1);
  }
  std::vector<std::uint8_t> seen(grid.cells().size(), 0);
  std::deque<Cell> queue{from};
  seen[grid.index(from)] = 1;
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    if (!grid.blocked(c)) return c;
    for (const auto& m : kMoves) {
      const Cell nb{c.col + m[0], c.row + m[1]};
      if (!grid.in_bounds(nb) || seen[grid.index(nb)]) continue;
      seen[grid.index(nb)] = 1;
      queue.push_back(nb);
    }
  }
  return std::nullopt;
}

PlanResult replan(const OccupancyGrid& map, const Pose2D& pose, Vec2 goal, double footprint_radius,
                  const PlanningConfig& cfg) {
  const PlanningGrid grid = PlanningGrid::from_map(map, footprint_radius, cfg);
  Cell start = grid.cell_of(pose.position());
  if (grid.blocked(start)) {
    const auto free = nearest_free_cell(grid, start);
    if (!free) return {PlanStatus::no_path, {}, 0};
    start = *free;
  }
  return plan_global(grid, start, grid.cell_of(goal));
}

namespace {

std::size_t closest_waypoint(const GridPath& path, Vec2 p) {
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

}  // namespace

LocalDecision plan_local(const Pose2D& pose, const GridPath& path, Vec2 goal, const SensorSnapshot& sensing,
                         const VehicleConfig& vehicle, const PlanningConfig& cfg, bool allow_replan_request) {
  const Vec2 p = pose.position();
  const auto& wps = path.world_waypoints;
  const std::size_t closest = wps.empty() ? 0 : closest_waypoint(path, p);

  // Obstacle hit points this tick.
  std::vector<Vec2> hits;
  double front = INFINITY;
  const double front_half = deg_to_rad(cfg.front_cone_deg) / 2.0;
  for (const RangeReading& r : sensing.sonar) {
    if (!r.distance) continue;
    const double axis = std::atan2(r.beam_axis_world.y, r.beam_axis_world.x);
    if (std::abs(wrap_angle(axis - pose.yaw)) <= front_half) front = std::min(front, *r.distance);
    if (!r.crosstalk_suspect) hits.push_back(p + r.beam_axis_world * *r.distance);
  }
  if (sensing.lidar != nullptr) {
    const LidarScan& scan = *sensing.lidar;
    for (std::size_t i = 0; i < scan.ranges.size(); ++i) {
      if (scan.ranges[i].status != ReturnStatus::valid) continue;
      const double bearing = scan.beam_angle(i);
      const double d = scan.ranges[i].distance;
      if (std::abs(wrap_angle(bearing)) <= front_half) front = std::min(front, d);
      hits.push_back(p + unit_from_angle(pose.yaw + bearing) * d);
    }
  }

  if (allow_replan_request && !wps.empty()) {
    double along = 0.0;
    for (std::size_t i = closest; i < wps.size() && along <= cfg.replan_horizon; ++i) {
      if (i > closest) along += norm(wps[i] - wps[i - 1]);
      for (const Vec2& h : hits)
        if (norm(h - wps[i]) < cfg.safety_distance) return ReplanRequest{"obstacle sensed near path"};
    }
  }

  Vec2 target = goal;
  bool final_leg = true;
  for (std::size_t i = closest; i < wps.size(); ++i) {
    if (i + 1 == wps.size()) break;
    if (norm(wps[i] - p) >= cfg.lookahead) {
      target = wps[i];
      final_leg = false;
      break;
    }
  }

  const Vec2 to = target - p;
  const double err = wrap_angle(std::atan2(to.y, to.x) - pose.yaw);
  VelocityCommand cmd;
  cmd.omega = std::clamp(cfg.heading_gain * err, -vehicle.omega_max, vehicle.omega_max);
  cmd.v = std::abs(err) >= std::numbers::pi / 2 ? 0.0 : vehicle.v_max * std::cos(err);
  // Keep the arc to the target within the turn-rate limit (curvature 2 sin(err) / L).
  const double sin_err = std::abs(std::sin(err));
  if (sin_err > 1e-9) cmd.v = std::min(cmd.v, vehicle.omega_max * norm(to) / (2.0 * sin_err));
  if (final_leg) cmd.v = std::min(cmd.v, norm(to));
  const double scale = std::clamp((front - cfg.stop_near) / (cfg.stop_far - cfg.stop_near), 0.0, 1.0);
  cmd.v *= scale;
  return cmd;
}

std::vector<std::uint8_t> frontier_mask(const OccupancyGrid& map) {
  const int w = map.width();
  const int h = map.height();
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0);
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      if (map.state({col, row}) != CellState::free) continue;
      for (const auto& m : kMoves) {
        const GridIndex nb{col + m[0], row + m[1]};
        if (map.in_bounds(nb) && map.state(nb) == CellState::unknown) {
          mask[map.linear({col, row})] = 1;
          break;
        }
      }
    }
  }
  return mask;
}

std::optional<Cell> nearest_frontier(const OccupancyGrid& map, const PlanningGrid& grid, Cell from,
                                     int min_distance, std::span<const std::uint8_t> excluded, int view_min,
                                     int view_max) {
  auto frontier = frontier_mask(map);
  if (!excluded.empty())
    for (std::size_t i = 0; i < frontier.size(); ++i)
      if (excluded[i]) frontier[i] = 0;
  std::vector<std::uint8_t> near = frontier;
  if (view_max > 0) {
    std::vector<std::pair<int, int>> ring;
    for (int dy = -view_max; dy <= view_max; ++dy)
      for (int dx = -view_max; dx <= view_max; ++dx) {
        const int d2 = dx * dx + dy * dy;
        if (d2 >= view_min * view_min && d2 <= view_max * view_max) ring.emplace_back(dx, dy);
      }
    std::fill(near.begin(), near.end(), 0);
    const int w = grid.width();
    const int h = grid.height();
    for (int row = 0; row < h; ++row)
      for (int col = 0; col < w; ++col) {
        if (!frontier[static_cast<std::size_t>(row) * w + col]) continue;
        for (auto [dx, dy] : ring) {
          const int c = col + dx;
          const int r = row + dy;
          if (c >= 0 && r >= 0 && c < w && r < h) near[static_cast<std::size_t>(r) * w + c] = 1;
        }
      }
  }
  if (grid.blocked(from)) {
    const auto free = nearest_free_cell(grid, from);
    if (!free) return std::nullopt;
    from = *free;
  }
  std::vector<int> dist(frontier.size(), -1);
  std::deque<Cell> queue{from};
  dist[grid.index(from)] = 0;
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    const std::size_t ci = grid.index(c);
    if (near[ci] && dist[ci] >= min_distance) return c;
    for (const auto& m : kMoves) {
      const Cell nb{c.col + m[0], c.row + m[1]};
      if (grid.blocked(nb) || dist[grid.index(nb)] >= 0) continue;
      dist[grid.index(nb)] = dist[ci] + 1;
      queue.push_back(nb);
    }
  }
  return std::nullopt;
}

std::string format_path(const GridPath& path) {
  std::string out;
  char buf[64];
  for (const Vec2& w : path.world_waypoints) {
    std::snprintf(buf, sizeof buf, "%.3f,%.3f\n", w.x, w.y);
    out += buf;
  }
  return out;
}

}  // namespace crawler
