#include "crawler/occupancy_grid.hpp"

#include <algorithm>
#include <stdexcept>

namespace crawler {

OccupancyGrid::OccupancyGrid(int width, int height, double resolution, Vec2 origin,
                             LogOddsParams params)
    : width_(width), height_(height), resolution_(resolution), origin_(origin), params_(params) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("OccupancyGrid: empty dimensions");
  if (!(resolution > 0.0)) throw std::invalid_argument("OccupancyGrid: resolution must be > 0");
  if (!(params.l_min < 0.0 && params.l_max > 0.0 && params.free_threshold < 0.0 &&
        params.occ_threshold > 0.0 && params.occ_threshold <= params.l_max &&
        params.free_threshold >= params.l_min))
    throw std::invalid_argument("OccupancyGrid: inconsistent log-odds parameters");
  cells_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0.0);
}

void OccupancyGrid::add(GridIndex c, double delta) {
  double& v = cells_[linear(c)];
  v = std::clamp(v + delta, params_.l_min, params_.l_max);
}

void OccupancyGrid::set(GridIndex c, double value) {
  cells_[linear(c)] = std::clamp(value, params_.l_min, params_.l_max);
}

bool OccupancyGrid::same_geometry(const OccupancyGrid& o) const {
  return width_ == o.width_ && height_ == o.height_ && resolution_ == o.resolution_ &&
         origin_ == o.origin_;
}

bool OccupancyGrid::operator==(const OccupancyGrid& o) const {
  return same_geometry(o) && cells_ == o.cells_;
}

std::vector<CellState> classify(const OccupancyGrid& grid) {
  std::vector<CellState> out;
  out.reserve(grid.cells().size());
  for (double l : grid.cells()) out.push_back(grid.classify_value(l));
  return out;
}

}  // namespace crawler
