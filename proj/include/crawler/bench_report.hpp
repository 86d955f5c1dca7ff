#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crawler/execution.hpp"
#include "crawler/occupancy_grid.hpp"
#include "crawler/sim_engine.hpp"

namespace crawler {

struct MapMetrics {
  double occupied_precision = 1.0;
  double occupied_recall = 1.0;
  double free_accuracy = 1.0;
  double coverage = 0.0;
  double localization_rmse = 0.0;
  double time_to_coverage = 0.0;  ///< ticks
  // Occupied recall split by distance from the trajectory (< 2 m, >= 2 m).
  double recall_near = 1.0;
  double recall_far = 1.0;

  // Vacuous ratios are reported as 1 and flagged here.
  bool precision_zero_support = false;
  bool recall_zero_support = false;
  bool free_zero_support = false;
  long true_positive = 0;
  long false_positive = 0;
  long false_negative = 0;
  long region_cells = 0;
};

/// Cells scored by map_accuracy: truth-free cells 4-connected to `start`
/// plus the truth-occupied cells bordering them. Without a start point every
/// cell counts.
std::vector<std::uint8_t> evaluation_region(const OccupancyGrid& truth, std::optional<Vec2> start);

/// Occupied precision/recall (unknown estimates are neither hits nor misses),
/// free accuracy over classified truth-free cells, and coverage = classified
/// fraction of the region. Throws MetricError on a geometry mismatch.
MapMetrics map_accuracy(const OccupancyGrid& est, const OccupancyGrid& truth,
                        std::optional<Vec2> start = std::nullopt);

/// Fills recall_near / recall_far of `m` from the trajectory.
void bucket_recall(MapMetrics& m, const OccupancyGrid& est, const OccupancyGrid& truth,
                   std::span<const std::uint8_t> region, std::span<const Vec2> trajectory,
                   double split_m = 2.0);

struct CostModel {
  long unit_cost = 0;
  long count = 0;
  long total = 0;
};

CostModel cost_model(long unit_cost, long count);
CostModel cost_model(const UltrasonicConfig& cfg);
CostModel cost_model(const LidarConfig& cfg);

/// 100000 -> "1,00,000" (lakh grouping, as the currency is written).
std::string indian_grouping(long v);

/// Static description of one suite, taken from its configuration.
struct SuiteSpec {
  Suite suite = Suite::ultrasonic;
  long sensor_count = 0;
  double samples_per_s = 0.0;
  double range_min = 0.0;
  double range_max = 0.0;
  double effective_range = 0.0;
  CostModel cost;
  std::string cost_label;
};

SuiteSpec describe_suite(Suite suite, const UltrasonicConfig& us, const LidarConfig& lidar,
                         const MediumProperties& medium);

struct RunRecord {
  std::string scenario;
  std::uint64_t seed = 0;
  std::string status;  ///< SimStatus name, or "error"
  std::string error;
  MapMetrics metrics;
};

struct SuiteRow {
  SuiteSpec spec;
  MapMetrics mean;  ///< over completed runs
  double coverage_min = 0.0;
  double coverage_max = 0.0;
  std::vector<RunRecord> runs;
  long failures = 0;
};

struct OrderingFlags {
  bool lidar_coverage_gt_ultrasonic = false;
  bool lidar_range_gt_ultrasonic = false;
  bool ultrasonic_cost_lt_lidar = false;
};

struct ComparisonReport {
  std::string set_name;
  std::vector<std::string> scenarios;
  std::vector<std::uint64_t> seeds;
  SuiteSpec static_lidar;
  SuiteSpec static_ultrasonic;
  std::vector<SuiteRow> rows;  ///< one per configured suite, in configured order
  std::optional<OrderingFlags> flags;  ///< when both ultrasonic and lidar rows exist

  bool all_completed() const;
};

struct BenchSet {
  std::string name;
  std::vector<std::string> scenario_paths;
  std::vector<Suite> suites{Suite::ultrasonic, Suite::lidar};
  std::uint64_t seed_base = 1;
  int seeds = 5;

  std::vector<std::uint64_t> seed_list() const;
};

BenchSet load_bench_set_file(const std::string& path);

/// Runs every (scenario, suite, seed) with the same tick budget, concurrently
/// when exec is parallel; results are folded in fixed order.
ComparisonReport compare_sensors(std::span<const ScenarioConfig> scenarios, std::span<const Suite> suites,
                                 std::span<const std::uint64_t> seeds, const std::string& set_name = "bench",
                                 Execution exec = Execution::parallel);

/// Aligned plain-text rows mirroring the published comparison table.
std::string format_static_table(const ComparisonReport& report);
std::string format_report_text(const ComparisonReport& report);
std::string format_report_json(const ComparisonReport& report);

/// Metrics of one finished run against the rasterized world.
MapMetrics score_run(const ScenarioConfig& cfg, const SimResult& r);

}  // namespace crawler
