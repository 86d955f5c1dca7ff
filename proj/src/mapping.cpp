#include "crawler/mapping.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "crawler/errors.hpp"

namespace crawler {

namespace {
constexpr double kEdgeTolerance = 1e-6;
}  // namespace

void MappingConfig::validate() const {
  if (!(resolution > 0.0)) throw std::invalid_argument("mapping: resolution must be > 0");
  if (!(cell_band_factor > 0.0)) throw std::invalid_argument("mapping: cell_band_factor must be > 0");
  if (!(crosstalk_weight >= 0.0 && crosstalk_weight <= 1.0))
    throw std::invalid_argument("mapping: crosstalk_weight must be in [0, 1]");
  if (stale_window < 0) throw std::invalid_argument("mapping: stale_window must be >= 0");
}

OccupancyGrid make_map(const Bounds& bounds, const MappingConfig& cfg) {
  return OccupancyGrid(grid_cells_for(bounds.width, cfg.resolution),
                       grid_cells_for(bounds.height, cfg.resolution), cfg.resolution, {0.0, 0.0},
                       cfg.log_odds);
}

bool in_sonar_cone(const OccupancyGrid& grid, const Pose2D& sensor_pose, double beam_width_deg,
                   GridIndex cell) {
  const Vec2 d = grid.center_of(cell) - sensor_pose.position();
  const double r = norm(d);
  if (r < 1e-12) return true;
  const double offset = std::abs(wrap_angle(std::atan2(d.y, d.x) - sensor_pose.yaw));
  return offset <= deg_to_rad(beam_width_deg) / 2.0 + beam_spread(grid.resolution(), r) / 2.0;
}

void integrate_sonar_reading(OccupancyGrid& grid, const Pose2D& sensor_pose,
                             const RangeReading& reading, const MappingConfig& cfg,
                             double effective_range, Tick current_tick) {
  if (current_tick - reading.tick > cfg.stale_window)
    throw StaleReadingError("sonar reading from tick " + std::to_string(reading.tick) +
                            " is stale at tick " + std::to_string(current_tick));

  const auto& p = grid.params();
  const double weight = reading.crosstalk_suspect ? cfg.crosstalk_weight : 1.0;
  const double band = cfg.cell_band();
  const bool echo = reading.distance.has_value();
  const double d = echo ? *reading.distance : effective_range;
  const double reach = echo ? d + band : effective_range;

  const Vec2 apex = sensor_pose.position();
  const GridIndex lo = grid.index_of(apex - Vec2{reach, reach});
  const GridIndex hi = grid.index_of(apex + Vec2{reach, reach});
  for (int row = std::max(lo.row, 0); row <= std::min(hi.row, grid.height() - 1); ++row) {
    for (int col = std::max(lo.col, 0); col <= std::min(hi.col, grid.width() - 1); ++col) {
      const GridIndex c{col, row};
      const double r = norm(grid.center_of(c) - apex);
      if (r > reach) continue;
      if (!in_sonar_cone(grid, sensor_pose, reading.beam_width_deg, c)) continue;
      if (!echo || r < d - band) {
        grid.add(c, weight * p.l_free);
      } else {
        grid.add(c, weight * p.l_occ);
      }
    }
  }
}

void integrate_lidar_scan(OccupancyGrid& grid, const Pose2D& robot, const LidarScan& scan,
                          const MappingConfig& /*cfg*/, double effective_range) {
  const auto& p = grid.params();
  const Vec2 origin = robot.position();
  // Cells visited per beam, flagged when the cell holds that beam's return.
  // Every cell whose closed square holds the return point counts, so a point
  // on a cell edge (an enclosure wall on the grid border, say) marks both
  // neighbours.
  std::vector<std::vector<std::pair<GridIndex, bool>>> beams(scan.ranges.size());
  std::vector<std::uint8_t> hit(grid.cells().size(), 0);
  for (std::size_t i = 0; i < scan.ranges.size(); ++i) {
    const LidarReturn& ret = scan.ranges[i];
    if (ret.status == ReturnStatus::too_close) continue;
    const Vec2 dir = unit_from_angle(robot.yaw + scan.beam_angle(i));
    auto& cells = beams[i];
    if (ret.status == ReturnStatus::max_range) {
      traverse_cells(grid, origin, origin + dir * effective_range, [&](GridIndex c, double) {
        cells.emplace_back(c, false);
        return true;
      });
      continue;
    }
    const double d = ret.distance;
    std::vector<double> entry;
    traverse_cells(grid, origin, origin + dir * (d + kEdgeTolerance), [&](GridIndex c, double e) {
      cells.emplace_back(c, false);
      entry.push_back(e);
      return true;
    });
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const double exit = k + 1 < cells.size() ? entry[k + 1] : d + kEdgeTolerance;
      if (entry[k] <= d + kEdgeTolerance && exit >= d - kEdgeTolerance) {
        cells[k].second = true;
        hit[grid.linear(cells[k].first)] = 1;
      }
    }
  }
  // A beam grazing past a cell that holds another beam's return in the same
  // scan says nothing about it; only the return counts.
  for (const auto& cells : beams)
    for (const auto& [c, is_hit] : cells) {
      if (is_hit) grid.add(c, p.l_occ);
      else if (!hit[grid.linear(c)]) grid.add(c, p.l_free);
    }
}

std::vector<std::uint8_t> export_pgm(const OccupancyGrid& grid) {
  const std::string header =
      "P5 " + std::to_string(grid.width()) + " " + std::to_string(grid.height()) + " 255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + grid.cells().size());
  for (int row = grid.height() - 1; row >= 0; --row) {
    for (int col = 0; col < grid.width(); ++col) {
      switch (grid.state({col, row})) {
        case CellState::occupied: out.push_back(0); break;
        case CellState::unknown: out.push_back(128); break;
        case CellState::free: out.push_back(255); break;
      }
    }
  }
  return out;
}

GrayImage parse_pgm(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&](const char* field) {
    skip_space();
    long v = 0;
    const std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) v = v * 10 + (bytes[pos++] - '0');
    if (pos == start || v > 1000000) throw ParseError(std::string("pgm ") + field, "expected an integer");
    return static_cast<int>(v);
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
    throw ParseError("pgm header", "not a binary P5 graymap");
  pos = 2;
  GrayImage img;
  img.width = read_int("width");
  img.height = read_int("height");
  const int maxval = read_int("maxval");
  if (img.width <= 0 || img.height <= 0 || maxval != 255)
    throw ParseError("pgm header", "unsupported dimensions or maxval");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw ParseError("pgm header", "truncated");
  ++pos;
  const std::size_t n = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
  if (bytes.size() - pos < n) throw ParseError("pgm data", "truncated pixel data");
  img.pixels.assign(bytes.begin() + static_cast<long>(pos), bytes.begin() + static_cast<long>(pos + n));
  return img;
}

std::vector<std::string> ascii_rows(const OccupancyGrid& grid) {
  std::vector<std::string> rows;
  rows.reserve(static_cast<std::size_t>(grid.height()));
  for (int row = grid.height() - 1; row >= 0; --row) {
    std::string line(static_cast<std::size_t>(grid.width()), ' ');
    for (int col = 0; col < grid.width(); ++col) {
      const CellState s = grid.state({col, row});
      line[static_cast<std::size_t>(col)] = s == CellState::occupied ? '#' : (s == CellState::free ? '.' : ' ');
    }
    rows.push_back(std::move(line));
  }
  return rows;
}

}  // namespace crawler
