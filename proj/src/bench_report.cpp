#include "crawler/bench_report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "crawler/errors.hpp"

namespace crawler {

std::vector<std::uint8_t> evaluation_region(const OccupancyGrid& truth, std::optional<Vec2> start) {
  const std::size_t n = truth.cells().size();
  if (!start) return std::vector<std::uint8_t>(n, 1);
  std::vector<std::uint8_t> region(n, 0);
  const auto s = truth.cell_of(*start);
  if (!s || truth.state(*s) == CellState::occupied) return region;
  std::deque<GridIndex> queue{*s};
  region[truth.linear(*s)] = 1;
  while (!queue.empty()) {
    const GridIndex c = queue.front();
    queue.pop_front();
    const GridIndex nbs[4] = {{c.col + 1, c.row}, {c.col - 1, c.row}, {c.col, c.row + 1}, {c.col, c.row - 1}};
    for (const GridIndex& nb : nbs) {
      if (!truth.in_bounds(nb) || region[truth.linear(nb)]) continue;
      region[truth.linear(nb)] = 1;
      // Occupied neighbors join the region but are not expanded.
      if (truth.state(nb) != CellState::occupied) queue.push_back(nb);
    }
  }
  return region;
}

MapMetrics map_accuracy(const OccupancyGrid& est, const OccupancyGrid& truth, std::optional<Vec2> start) {
  if (!est.same_geometry(truth))
    throw MetricError("map_accuracy: estimate is " + std::to_string(est.width()) + "x" + std::to_string(est.height()) +
                      ", truth is " + std::to_string(truth.width()) + "x" + std::to_string(truth.height()) +
                      " (resolution/origin must match too)");
  const auto region = evaluation_region(truth, start);
  MapMetrics m;
  long classified = 0, free_classified = 0, free_correct = 0;
  for (int row = 0; row < truth.height(); ++row) {
    for (int col = 0; col < truth.width(); ++col) {
      const GridIndex c{col, row};
      if (!region[truth.linear(c)]) continue;
      ++m.region_cells;
      const CellState e = est.state(c);
      const bool occ = truth.state(c) == CellState::occupied;
      if (e != CellState::unknown) ++classified;
      if (occ) {
        if (e == CellState::occupied) ++m.true_positive;
        if (e == CellState::free) ++m.false_negative;
      } else {
        if (e == CellState::occupied) ++m.false_positive;
        if (e != CellState::unknown) {
          ++free_classified;
          if (e == CellState::free) ++free_correct;
        }
      }
    }
  }
  auto ratio = [](long num, long den, bool& zero) {
    zero = den == 0;
    return zero ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  m.occupied_precision = ratio(m.true_positive, m.true_positive + m.false_positive, m.precision_zero_support);
  m.occupied_recall = ratio(m.true_positive, m.true_positive + m.false_negative, m.recall_zero_support);
  m.free_accuracy = ratio(free_correct, free_classified, m.free_zero_support);
  m.coverage = m.region_cells == 0 ? 0.0 : static_cast<double>(classified) / static_cast<double>(m.region_cells);
  return m;
}

void bucket_recall(MapMetrics& m, const OccupancyGrid& est, const OccupancyGrid& truth,
                   std::span<const std::uint8_t> region, std::span<const Vec2> trajectory, double split_m) {
  long hit[2] = {0, 0}, miss[2] = {0, 0};
  for (int row = 0; row < truth.height(); ++row) {
    for (int col = 0; col < truth.width(); ++col) {
      const GridIndex c{col, row};
      if (!region[truth.linear(c)] || truth.state(c) != CellState::occupied) continue;
      const CellState e = est.state(c);
      if (e == CellState::unknown) continue;
      const Vec2 p = truth.center_of(c);
      double d = INFINITY;
      for (const Vec2& q : trajectory) d = std::min(d, norm(p - q));
      const int b = d < split_m ? 0 : 1;
      (e == CellState::occupied ? hit : miss)[b]++;
    }
  }
  m.recall_near = hit[0] + miss[0] == 0 ? 1.0 : static_cast<double>(hit[0]) / static_cast<double>(hit[0] + miss[0]);
  m.recall_far = hit[1] + miss[1] == 0 ? 1.0 : static_cast<double>(hit[1]) / static_cast<double>(hit[1] + miss[1]);
}

CostModel cost_model(long unit_cost, long count) { return {unit_cost, count, unit_cost * count}; }
CostModel cost_model(const UltrasonicConfig& cfg) {
  return cost_model(cfg.unit_cost, static_cast<long>(cfg.mount_angles.size()));
}
CostModel cost_model(const LidarConfig& cfg) { return cost_model(cfg.unit_cost, 1); }

std::string indian_grouping(long v) {
  const bool neg = v < 0;
  std::string digits = std::to_string(neg ? -v : v);
  std::string out;
  if (digits.size() > 3) {
    std::string head = digits.substr(0, digits.size() - 3);
    const std::string tail = digits.substr(digits.size() - 3);
    std::string grouped;
    while (head.size() > 2) {
      grouped = "," + head.substr(head.size() - 2) + grouped;
      head.resize(head.size() - 2);
    }
    out = head + grouped + "," + tail;
  } else {
    out = digits;
  }
  return neg ? "-" + out : out;
}

namespace {

const char* kRupee = "₹";

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

SuiteSpec describe_suite(Suite suite, const UltrasonicConfig& us, const LidarConfig& lidar,
                         const MediumProperties& medium) {
  SuiteSpec s;
  s.suite = suite;
  const CostModel cu = cost_model(us);
  const CostModel cl = cost_model(lidar);
  const double ru = effective_range(us, medium);
  const double rl = effective_range(lidar, medium);
  const double lidar_rate = lidar.beams_per_scan * lidar.scan_rate_hz;
  switch (suite) {
    case Suite::ultrasonic:
      s.sensor_count = cu.count;
      s.samples_per_s = us.sample_rate_hz;
      s.range_min = us.min_range;
      s.range_max = us.max_range;
      s.effective_range = ru;
      s.cost = cu;
      s.cost_label = std::to_string(cu.count) + " x " + kRupee + indian_grouping(cu.unit_cost) + " = " + kRupee +
                     indian_grouping(cu.total);
      break;
    case Suite::lidar:
      s.sensor_count = 1;
      s.samples_per_s = lidar_rate;
      s.range_min = lidar.min_range;
      s.range_max = lidar.max_range;
      s.effective_range = rl;
      s.cost = cl;
      s.cost_label = std::string("Beyond ") + kRupee + indian_grouping(cl.total);
      break;
    case Suite::both:
      s.sensor_count = cu.count + 1;
      s.samples_per_s = us.sample_rate_hz + lidar_rate;
      s.range_min = std::min(us.min_range, lidar.min_range);
      s.range_max = std::max(us.max_range, lidar.max_range);
      s.effective_range = std::max(ru, rl);
      s.cost = {0, cu.count + 1, cu.total + cl.total};
      s.cost_label = kRupee + indian_grouping(s.cost.total);
      break;
  }
  return s;
}

bool ComparisonReport::all_completed() const {
  for (const SuiteRow& r : rows)
    if (r.failures > 0) return false;
  return true;
}

std::vector<std::uint64_t> BenchSet::seed_list() const {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < seeds; ++i) out.push_back(seed_base + static_cast<std::uint64_t>(i));
  return out;
}

BenchSet load_bench_set_file(const std::string& path) {
  using nlohmann::json;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read scenario set file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path, e.what());
  }
  BenchSet s;
  s.name = std::filesystem::path(path).stem().string();
  if (!j.is_object() || !j.contains("scenarios") || !j.at("scenarios").is_array())
    throw ParseError(path + ": scenarios", "expected an array of scenario paths");
  const auto base = std::filesystem::path(path).parent_path();
  for (const auto& p : j.at("scenarios")) {
    if (!p.is_string()) throw ParseError(path + ": scenarios", "expected strings");
    std::filesystem::path sp = p.get<std::string>();
    if (sp.is_relative()) sp = base / sp;
    s.scenario_paths.push_back(sp.lexically_normal().string());
  }
  if (j.contains("name")) s.name = j.at("name").get<std::string>();
  if (j.contains("suites")) {
    s.suites.clear();
    for (const auto& x : j.at("suites")) s.suites.push_back(parse_suite(x.get<std::string>()));
  }
  if (j.contains("seed_base")) s.seed_base = j.at("seed_base").get<std::uint64_t>();
  if (j.contains("seeds")) s.seeds = j.at("seeds").get<int>();
  if (s.seeds <= 0) throw ConfigError("seeds must be > 0");
  return s;
}

MapMetrics score_run(const ScenarioConfig& cfg, const SimResult& r) {
  const double t_end = static_cast<double>(r.ticks) * cfg.dt;
  const OccupancyGrid truth = rasterize_ground_truth(cfg.world.at_time(t_end), cfg.mapping.resolution,
                                                     Execution::serial, cfg.mapping.log_odds);
  MapMetrics m = map_accuracy(r.map, truth, cfg.start.position());
  const auto region = evaluation_region(truth, cfg.start.position());
  std::vector<Vec2> traj;
  traj.reserve(r.trace.size() + 1);
  for (const TraceRow& row : r.trace) traj.push_back(row.truth.position());
  traj.push_back(r.final_truth.position());
  bucket_recall(m, r.map, truth, region, traj);
  m.localization_rmse = localization_rmse(r);
  m.time_to_coverage = static_cast<double>(r.ticks);
  return m;
}

namespace {

RunRecord run_one(const ScenarioConfig& base, Suite suite, std::uint64_t seed) {
  RunRecord rec;
  rec.scenario = base.name;
  rec.seed = seed;
  try {
    ScenarioConfig cfg = base;
    cfg.suite = suite;
    cfg.seed = seed;
    const SimResult r = run_scenario(cfg);
    rec.status = std::string(to_string(r.status));
    rec.metrics = score_run(cfg, r);
  } catch (const std::exception& e) {
    rec.status = "error";
    rec.error = e.what();
  }
  return rec;
}

MapMetrics mean_of(const std::vector<RunRecord>& runs, double& cov_min, double& cov_max) {
  MapMetrics m;
  m.coverage = 0.0;
  long n = 0;
  cov_min = INFINITY;
  cov_max = -INFINITY;
  MapMetrics sum{};
  sum.occupied_precision = sum.occupied_recall = sum.free_accuracy = sum.coverage = 0.0;
  sum.recall_near = sum.recall_far = 0.0;
  for (const RunRecord& r : runs) {
    if (r.status == "error") continue;
    ++n;
    const MapMetrics& x = r.metrics;
    sum.occupied_precision += x.occupied_precision;
    sum.occupied_recall += x.occupied_recall;
    sum.free_accuracy += x.free_accuracy;
    sum.coverage += x.coverage;
    sum.localization_rmse += x.localization_rmse;
    sum.time_to_coverage += x.time_to_coverage;
    sum.recall_near += x.recall_near;
    sum.recall_far += x.recall_far;
    sum.precision_zero_support = sum.precision_zero_support || x.precision_zero_support;
    sum.recall_zero_support = sum.recall_zero_support || x.recall_zero_support;
    sum.free_zero_support = sum.free_zero_support || x.free_zero_support;
    sum.true_positive += x.true_positive;
    sum.false_positive += x.false_positive;
    sum.false_negative += x.false_negative;
    sum.region_cells += x.region_cells;
    cov_min = std::min(cov_min, x.coverage);
    cov_max = std::max(cov_max, x.coverage);
  }
  if (n == 0) {
    cov_min = cov_max = 0.0;
    return m;
  }
  const double d = static_cast<double>(n);
  m = sum;
  m.occupied_precision /= d;
  m.occupied_recall /= d;
  m.free_accuracy /= d;
  m.coverage /= d;
  m.localization_rmse /= d;
  m.time_to_coverage /= d;
  m.recall_near /= d;
  m.recall_far /= d;
  return m;
}

}  // namespace

ComparisonReport compare_sensors(std::span<const ScenarioConfig> scenarios, std::span<const Suite> suites,
                                 std::span<const std::uint64_t> seeds, const std::string& set_name,
                                 Execution exec) {
  CRAWLER_EXPECTS(!scenarios.empty(), "compare_sensors: no scenarios");
  ComparisonReport rep;
  rep.set_name = set_name;
  for (const ScenarioConfig& s : scenarios) rep.scenarios.push_back(s.name);
  rep.seeds.assign(seeds.begin(), seeds.end());
  const ScenarioConfig& first = scenarios.front();
  rep.static_lidar = describe_suite(Suite::lidar, first.ultrasonic, first.lidar, first.world.medium());
  rep.static_ultrasonic = describe_suite(Suite::ultrasonic, first.ultrasonic, first.lidar, first.world.medium());

  // Fixed slots: job = (suite, scenario, seed) in row-major order.
  const long n_sc = static_cast<long>(scenarios.size());
  const long n_seed = static_cast<long>(seeds.size());
  const long n_jobs = static_cast<long>(suites.size()) * n_sc * n_seed;
  std::vector<RunRecord> slots(static_cast<std::size_t>(n_jobs));
  auto job = [&](long i) {
    const long su = i / (n_sc * n_seed);
    const long sc = (i / n_seed) % n_sc;
    const long se = i % n_seed;
    slots[static_cast<std::size_t>(i)] = run_one(scenarios[static_cast<std::size_t>(sc)],
                                                 suites[static_cast<std::size_t>(su)],
                                                 seeds[static_cast<std::size_t>(se)]);
  };
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long i = 0; i < n_jobs; ++i) job(i);
  } else {
    for (long i = 0; i < n_jobs; ++i) job(i);
  }

  for (std::size_t su = 0; su < suites.size(); ++su) {
    SuiteRow row;
    row.spec = describe_suite(suites[su], first.ultrasonic, first.lidar, first.world.medium());
    const auto begin = slots.begin() + static_cast<long>(su) * n_sc * n_seed;
    row.runs.assign(begin, begin + n_sc * n_seed);
    for (const RunRecord& r : row.runs)
      if (r.status == "error") ++row.failures;
    row.mean = mean_of(row.runs, row.coverage_min, row.coverage_max);
    rep.rows.push_back(std::move(row));
  }

  const SuiteRow* us = nullptr;
  const SuiteRow* li = nullptr;
  for (const SuiteRow& r : rep.rows) {
    if (r.spec.suite == Suite::ultrasonic) us = &r;
    if (r.spec.suite == Suite::lidar) li = &r;
  }
  if (us && li) {
    OrderingFlags f;
    f.lidar_coverage_gt_ultrasonic = li->mean.coverage > us->mean.coverage;
    f.lidar_range_gt_ultrasonic = li->spec.effective_range > us->spec.effective_range;
    f.ultrasonic_cost_lt_lidar = us->spec.cost.total < li->spec.cost.total;
    rep.flags = f;
  }
  return rep;
}

namespace {

// Display width of UTF-8 text (one column per code point).
std::size_t columns(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

std::string pad(const std::string& s, std::size_t width) {
  const std::size_t w = columns(s);
  return w >= width ? s : s + std::string(width - w, ' ');
}

std::string table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& r : rows) {
    widths.resize(std::max(widths.size(), r.size()), 0);
    for (std::size_t i = 0; i < r.size(); ++i) widths[i] = std::max(widths[i], columns(r[i]));
  }
  std::string out;
  for (const auto& r : rows) {
    std::string line;
    for (std::size_t i = 0; i < r.size(); ++i) line += i + 1 == r.size() ? r[i] : pad(r[i], widths[i] + 2);
    out += line + "\n";
  }
  return out;
}

std::string fixed(double v, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string range_text(const SuiteSpec& s) { return num(s.range_min) + "-" + num(s.range_max) + " m"; }

}  // namespace

std::string format_static_table(const ComparisonReport& rep) {
  const SuiteSpec& l = rep.static_lidar;
  const SuiteSpec& u = rep.static_ultrasonic;
  return table({
      {"Properties", "LIDAR", "ULTRASONIC SENSOR"},
      {"No of sensors", std::to_string(l.sensor_count), std::to_string(u.sensor_count)},
      {"Samples per sec", num(l.samples_per_s), num(u.samples_per_s)},
      {"Range under water", range_text(l), range_text(u)},
      {"Accuracy (under water)", "better for longer distances", "better for short distances"},
      {"Cost", l.cost_label, u.cost_label},
  });
}

std::string format_report_text(const ComparisonReport& rep) {
  std::string out = "Sensor comparison: " + rep.set_name + "\nScenarios:";
  for (const auto& s : rep.scenarios) out += " " + s;
  out += "\nSeeds:";
  for (auto s : rep.seeds) out += " " + std::to_string(s);
  out += "\n\n" + format_static_table(rep) + "\n";

  std::vector<std::vector<std::string>> rows{{"Suite", "Sensors", "Samples/s", "Eff. range m", "Total cost",
                                              "Coverage", "Occ. precision", "Occ. recall", "Free acc.",
                                              "Recall <2m", "Recall >=2m", "Loc. RMSE m", "Ticks", "Failed"}};
  for (const SuiteRow& r : rep.rows) {
    rows.push_back({std::string(to_string(r.spec.suite)), std::to_string(r.spec.sensor_count),
                    num(r.spec.samples_per_s), fixed(r.spec.effective_range, 3),
                    kRupee + indian_grouping(r.spec.cost.total), fixed(r.mean.coverage, 4),
                    fixed(r.mean.occupied_precision, 4), fixed(r.mean.occupied_recall, 4),
                    fixed(r.mean.free_accuracy, 4), fixed(r.mean.recall_near, 4), fixed(r.mean.recall_far, 4),
                    fixed(r.mean.localization_rmse, 4), fixed(r.mean.time_to_coverage, 1),
                    std::to_string(r.failures)});
  }
  out += table(rows);
  if (rep.flags) {
    auto yn = [](bool b) { return b ? "yes" : "NO"; };
    out += "\nlidar coverage > ultrasonic coverage: ";
    out += yn(rep.flags->lidar_coverage_gt_ultrasonic);
    out += "\nlidar effective range > ultrasonic:   ";
    out += yn(rep.flags->lidar_range_gt_ultrasonic);
    out += "\nultrasonic cost < lidar cost:         ";
    out += yn(rep.flags->ultrasonic_cost_lt_lidar);
    out += "\n";
  }
  for (const SuiteRow& r : rep.rows)
    for (const RunRecord& run : r.runs)
      if (run.status == "error")
        out += "failed: " + std::string(to_string(r.spec.suite)) + " " + run.scenario + " seed " +
               std::to_string(run.seed) + ": " + run.error + "\n";
  return out;
}

namespace {

nlohmann::json metrics_json(const MapMetrics& m) {
  return {{"occupied_precision", m.occupied_precision},
          {"occupied_recall", m.occupied_recall},
          {"free_accuracy", m.free_accuracy},
          {"coverage", m.coverage},
          {"localization_rmse", m.localization_rmse},
          {"time_to_coverage", m.time_to_coverage},
          {"recall_near", m.recall_near},
          {"recall_far", m.recall_far},
          {"precision_zero_support", m.precision_zero_support},
          {"recall_zero_support", m.recall_zero_support},
          {"free_zero_support", m.free_zero_support}};
}

nlohmann::json spec_json(const SuiteSpec& s) {
  return {{"suite", std::string(to_string(s.suite))},
          {"sensor_count", s.sensor_count},
          {"samples_per_s", s.samples_per_s},
          {"range_min_m", s.range_min},
          {"range_max_m", s.range_max},
          {"effective_range_m", s.effective_range},
          {"unit_cost", s.cost.unit_cost},
          {"total_cost", s.cost.total},
          {"currency", "INR"},
          {"cost_label", s.cost_label}};
}

}  // namespace

std::string format_report_json(const ComparisonReport& rep) {
  using nlohmann::json;
  json j;
  j["set"] = rep.set_name;
  j["scenarios"] = rep.scenarios;
  j["seeds"] = rep.seeds;
  j["static_table"] = {{"lidar", spec_json(rep.static_lidar)}, {"ultrasonic", spec_json(rep.static_ultrasonic)}};
  json rows = json::array();
  for (const SuiteRow& r : rep.rows) {
    json row = spec_json(r.spec);
    row["metrics_mean"] = metrics_json(r.mean);
    row["coverage_min"] = r.coverage_min;
    row["coverage_max"] = r.coverage_max;
    row["failures"] = r.failures;
    json runs = json::array();
    for (const RunRecord& run : r.runs) {
      json x = {{"scenario", run.scenario}, {"seed", run.seed}, {"status", run.status}};
      if (run.status == "error") {
        x["error"] = run.error;
      } else {
        x["metrics"] = metrics_json(run.metrics);
      }
      runs.push_back(std::move(x));
    }
    row["runs"] = std::move(runs);
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  if (rep.flags) {
    j["ordering_flags"] = {{"lidar_coverage_gt_ultrasonic", rep.flags->lidar_coverage_gt_ultrasonic},
                           {"lidar_range_gt_ultrasonic", rep.flags->lidar_range_gt_ultrasonic},
                           {"ultrasonic_cost_lt_lidar", rep.flags->ultrasonic_cost_lt_lidar}};
  } else {
    j["ordering_flags"] = nullptr;
  }
  return j.dump(2) + "\n";
}

}  // namespace crawler
