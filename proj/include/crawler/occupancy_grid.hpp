#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "crawler/geometry.hpp"

namespace crawler {

/// Cell coordinates: col along +x, row along +y, (0,0) at the grid origin.
struct GridIndex {
  int col = 0;
  int row = 0;
  constexpr bool operator==(const GridIndex&) const = default;
};

enum class CellState : std::uint8_t { unknown, free, occupied };

struct LogOddsParams {
  double l_occ = 0.85;
  double l_free = -0.4;
  double l_min = -4.0;
  double l_max = 4.0;
  double occ_threshold = 1.0;
  double free_threshold = -1.0;
};

/// Log-odds cell lattice. Never-observed cells hold exactly 0.
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  OccupancyGrid(int width, int height, double resolution, Vec2 origin,
                LogOddsParams params = {});

  int width() const { return width_; }
  int height() const { return height_; }
  double resolution() const { return resolution_; }
  Vec2 origin() const { return origin_; }
  const LogOddsParams& params() const { return params_; }

  bool in_bounds(GridIndex c) const {
    return c.col >= 0 && c.row >= 0 && c.col < width_ && c.row < height_;
  }
  std::size_t linear(GridIndex c) const {
    return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(c.col);
  }

  /// Cell containing p (floor of the scaled offset), even if outside the grid.
  GridIndex index_of(Vec2 p) const {
    return {static_cast<int>(std::floor((p.x - origin_.x) / resolution_)),
            static_cast<int>(std::floor((p.y - origin_.y) / resolution_))};
  }
  std::optional<GridIndex> cell_of(Vec2 p) const {
    const GridIndex c = index_of(p);
    return in_bounds(c) ? std::optional<GridIndex>(c) : std::nullopt;
  }
  Vec2 center_of(GridIndex c) const {
    return {origin_.x + (c.col + 0.5) * resolution_, origin_.y + (c.row + 0.5) * resolution_};
  }

  double log_odds(GridIndex c) const { return cells_[linear(c)]; }
  /// Adds delta and clamps to [l_min, l_max].
  void add(GridIndex c, double delta);
  void set(GridIndex c, double value);

  CellState state(GridIndex c) const { return classify_value(cells_[linear(c)]); }
  CellState classify_value(double l) const {
    if (l >= params_.occ_threshold) return CellState::occupied;
    if (l <= params_.free_threshold) return CellState::free;
    return CellState::unknown;
  }

  std::span<const double> cells() const { return cells_; }
  bool same_geometry(const OccupancyGrid& o) const;
  bool operator==(const OccupancyGrid& o) const;

 private:
  int width_ = 0;
  int height_ = 0;
  double resolution_ = 0.1;
  Vec2 origin_{};
  LogOddsParams params_{};
  std::vector<double> cells_;
};

/// Ternary map, row-major like the grid.
std::vector<CellState> classify(const OccupancyGrid& grid);

/// Calls visit(cell, entry_distance) for every cell the segment from -> to
/// crosses, in order, starting with the cell containing `from`. Cells outside
/// the grid are skipped; traversal stops when visit returns false.
template <class Visit>
void traverse_cells(const OccupancyGrid& grid, Vec2 from, Vec2 to, Visit&& visit) {
  const double res = grid.resolution();
  const Vec2 d = to - from;
  const double length = norm(d);
  GridIndex c = grid.index_of(from);
  const GridIndex last = grid.index_of(to);
  const int step_x = d.x > 0 ? 1 : (d.x < 0 ? -1 : 0);
  const int step_y = d.y > 0 ? 1 : (d.y < 0 ? -1 : 0);
  const double inf = std::numeric_limits<double>::infinity();
  const Vec2 dir = length > 0 ? d * (1.0 / length) : Vec2{};
  auto boundary = [&](int idx, int step, double o) {
    return o + (step > 0 ? idx + 1 : idx) * res;
  };
  double t_max_x = step_x != 0 ? (boundary(c.col, step_x, grid.origin().x) - from.x) / dir.x : inf;
  double t_max_y = step_y != 0 ? (boundary(c.row, step_y, grid.origin().y) - from.y) / dir.y : inf;
  const double t_delta_x = step_x != 0 ? res / std::abs(dir.x) : inf;
  const double t_delta_y = step_y != 0 ? res / std::abs(dir.y) : inf;
  double entry = 0.0;
  const int max_steps = std::abs(last.col - c.col) + std::abs(last.row - c.row) + 1;
  for (int i = 0; i < max_steps; ++i) {
    if (grid.in_bounds(c) && !visit(c, entry)) return;
    if (c == last) return;
    if (t_max_x < t_max_y) {
      entry = t_max_x;
      c.col += step_x;
      t_max_x += t_delta_x;
    } else {
      entry = t_max_y;
      c.row += step_y;
      t_max_y += t_delta_y;
    }
    if (entry > length) return;
  }
}

}  // namespace crawler
