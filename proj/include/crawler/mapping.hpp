#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crawler/occupancy_grid.hpp"
#include "crawler/sensors.hpp"
#include "crawler/world.hpp"

namespace crawler {

struct MappingConfig {
  double resolution = 0.1;
  LogOddsParams log_odds{};
  double cell_band_factor = 1.5;  ///< occupied arc half-thickness, in cells
  double crosstalk_weight = 0.5;
  Tick stale_window = 1;          ///< ticks a sonar reading stays admissible

  double cell_band() const { return cell_band_factor * resolution; }
  void validate() const;
};

/// Empty (all-unknown) map covering the world bounds.
OccupancyGrid make_map(const Bounds& bounds, const MappingConfig& cfg);

/// Cell-in-beam test shared by the sonar update and its callers: the cell
/// center lies within the half beam width of the axis, widened by half the
/// angle the cell itself subtends at its range.
bool in_sonar_cone(const OccupancyGrid& grid, const Pose2D& sensor_pose, double beam_width_deg,
                   GridIndex cell);

/// Cone update for one echo. Cells short of the echo arc become free-leaning,
/// cells on the arc band occupied-leaning, everything else keeps its value.
/// Throws StaleReadingError when the reading falls outside the tick window.
void integrate_sonar_reading(OccupancyGrid& grid, const Pose2D& sensor_pose,
                             const RangeReading& reading, const MappingConfig& cfg,
                             double effective_range, Tick current_tick);

/// Ray update per beam: free before the hit cell, occupied at it. Max-range
/// beams carve free space out to the effective range; too-close beams are
/// skipped. A cell holding any return of the scan takes no free evidence from
/// the scan's other beams.
void integrate_lidar_scan(OccupancyGrid& grid, const Pose2D& robot, const LidarScan& scan,
                          const MappingConfig& cfg, double effective_range);

/// Binary P5 graymap: occupied 0, unknown 128, free 255, first row = max y.
std::vector<std::uint8_t> export_pgm(const OccupancyGrid& grid);

/// Decoded P5 image (used by the renderer).
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  ///< first row = top
};
/// Throws ParseError on malformed input.
GrayImage parse_pgm(const std::vector<std::uint8_t>& bytes);

/// One character per cell: '#' occupied, '.' free, ' ' unknown; top row = max y.
std::vector<std::string> ascii_rows(const OccupancyGrid& grid);

}  // namespace crawler
