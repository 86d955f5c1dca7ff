#include "crawler/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "crawler/bench_report.hpp"
#include "crawler/errors.hpp"
#include "crawler/execution.hpp"
#include "crawler/mapping.hpp"
#include "crawler/sim_engine.hpp"

namespace crawler {

namespace {

namespace fs = std::filesystem;

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string metrics_json(const MapMetrics& m) {
  nlohmann::json j = {{"metrics",
                       {{"coverage", m.coverage},
                        {"occupied_precision", m.occupied_precision},
                        {"occupied_recall", m.occupied_recall},
                        {"free_accuracy", m.free_accuracy},
                        {"recall_near", m.recall_near},
                        {"recall_far", m.recall_far}}}};
  return j.dump();
}

int status_code(const ScenarioConfig& cfg, SimStatus s) {
  switch (s) {
    case SimStatus::goal_reached:
    case SimStatus::coverage_complete:
      return exit_ok;
    case SimStatus::timeout:
      // A teleop script that plays to the end is the expected outcome.
      return cfg.mode == RunMode::teleop ? exit_ok : exit_failure;
    case SimStatus::no_path:
    case SimStatus::collision:
      return exit_failure;
  }
  return exit_failure;
}

int cmd_run(const std::string& scenario, std::optional<std::uint64_t> seed, const std::string& out_dir,
            std::ostream& out) {
  ScenarioConfig cfg = load_scenario_file(scenario);
  if (seed) cfg.seed = *seed;
  const SimResult r = run_scenario(cfg);
  const MapMetrics m = score_run(cfg, r);
  const fs::path dir(out_dir);
  ensure_dir(dir);
  write_file(dir / "result.json", format_result_json(r, metrics_json(m)));
  const auto pgm = export_pgm(r.map);
  write_file(dir / "map.pgm", std::string(pgm.begin(), pgm.end()));
  write_file(dir / "trace.csv", format_trace_csv(r));
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s: status=%s ticks=%lld coverage=%.4f replans=%d\n", cfg.name.c_str(),
                std::string(to_string(r.status)).c_str(), static_cast<long long>(r.ticks), m.coverage, r.replans);
  out << buf;
  return status_code(cfg, r.status);
}

int cmd_bench(const std::string& set_path, const std::string& suites, std::optional<int> seeds,
              const std::string& out_dir, std::ostream& out) {
  BenchSet set = load_bench_set_file(set_path);
  if (!suites.empty()) {
    set.suites.clear();
    std::stringstream ss(suites);
    std::string item;
    while (std::getline(ss, item, ',')) set.suites.push_back(parse_suite(item));
    if (set.suites.empty()) throw ConfigError("--suites is empty");
  }
  if (seeds) {
    if (*seeds <= 0) throw ConfigError("--seeds must be > 0");
    set.seeds = *seeds;
  }
  std::vector<ScenarioConfig> scenarios;
  for (const auto& p : set.scenario_paths) scenarios.push_back(load_scenario_file(p));
  configure_threads();
  const auto seed_list = set.seed_list();
  const ComparisonReport rep = compare_sensors(scenarios, set.suites, seed_list, set.name);
  const fs::path dir(out_dir);
  ensure_dir(dir);
  const std::string text = format_report_text(rep);
  write_file(dir / "comparison.json", format_report_json(rep));
  write_file(dir / "comparison.txt", text);
  out << text;
  return rep.all_completed() ? exit_ok : exit_failure;
}

// Character rows, top row first.
std::vector<std::string> load_render_rows(const std::string& path) {
  const std::string bytes = read_bytes(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') {
    const GrayImage img = parse_pgm(std::vector<std::uint8_t>(bytes.begin(), bytes.end()));
    std::vector<std::string> rows;
    for (int r = 0; r < img.height; ++r) {
      std::string line(static_cast<std::size_t>(img.width), ' ');
      for (int c = 0; c < img.width; ++c) {
        const std::uint8_t v = img.pixels[static_cast<std::size_t>(r) * img.width + c];
        line[static_cast<std::size_t>(c)] = v == 0 ? '#' : (v == 255 ? '.' : ' ');
      }
      rows.push_back(std::move(line));
    }
    return rows;
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path, std::string("neither a P5 map nor a result file: ") + e.what());
  }
  if (!j.is_object() || !j.contains("map") || !j["map"].contains("rows") || !j["map"]["rows"].is_array())
    throw ParseError(path + ": map.rows", "missing map rows");
  std::vector<std::string> rows;
  for (const auto& r : j["map"]["rows"]) {
    if (!r.is_string()) throw ParseError(path + ": map.rows", "expected strings");
    rows.push_back(r.get<std::string>());
  }
  for (const auto& r : rows)
    if (r.size() != rows.front().size() || r.find_first_not_of("#. ") != std::string::npos)
      throw ParseError(path + ": map.rows", "rows must be equal-length strings of '#', '.' and ' '");
  return rows;
}

int cmd_render(const std::string& path, int width_cap, std::ostream& out) {
  if (width_cap <= 0) throw ConfigError("--width must be > 0");
  const auto rows = load_render_rows(path);
  if (rows.empty()) return exit_ok;
  const std::size_t w = rows.front().size();
  const std::size_t h = rows.size();
  const std::size_t cap = static_cast<std::size_t>(width_cap);
  if (w <= cap) {
    for (const auto& r : rows) out << r << '\n';
    return exit_ok;
  }
  // Nearest neighbour, same factor on both axes.
  const std::size_t out_h = std::max<std::size_t>(1, h * cap / w);
  for (std::size_t r = 0; r < out_h; ++r) {
    const std::string& src = rows[r * h / out_h];
    std::string line(cap, ' ');
    for (std::size_t c = 0; c < cap; ++c) line[c] = src[c * w / cap];
    out << line << '\n';
  }
  return exit_ok;
}

int cmd_validate(const std::string& path, std::ostream& out) {
  const WorldModel w = load_world_file(path);
  std::size_t dynamic = 0;
  for (const Obstacle& o : w.obstacles()) dynamic += o.dynamic ? 1 : 0;
  char buf[200];
  std::snprintf(buf, sizeof buf, "ok: %s %gx%g m, %zu obstacles (%zu dynamic)\n", w.name().c_str(),
                w.bounds().width, w.bounds().height, w.obstacles().size(), dynamic);
  out << buf;
  return exit_ok;
}

int default_width() {
  if (const char* c = std::getenv("COLUMNS")) {
    const int v = std::atoi(c);
    if (v > 0) return v;
  }
  return 100;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Underwater crawler SLAM simulator"};
  app.require_subcommand(1);

  std::string scenario, run_out = ".";
  std::optional<std::uint64_t> seed;
  auto* run = app.add_subcommand("run", "Run one scenario and write result.json, map.pgm, trace.csv");
  run->add_option("scenario", scenario, "Scenario file")->required();
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--out", run_out, "Output directory");

  std::string set_path, suites, bench_out = ".";
  std::optional<int> seeds;
  auto* bench = app.add_subcommand("bench", "Compare sensor suites over a scenario set");
  bench->add_option("set", set_path, "Scenario set file")->required();
  bench->add_option("--suites", suites, "Comma-separated suites (ultrasonic,lidar,both)");
  bench->add_option("--seeds", seeds, "Number of seeds");
  bench->add_option("--out", bench_out, "Output directory");

  std::string render_path;
  int width = default_width();
  auto* render = app.add_subcommand("render", "Print a map (map.pgm or result.json) as ASCII");
  render->add_option("file", render_path, "Map or result file")->required();
  render->add_option("--width", width, "Maximum columns");

  std::string world_path;
  auto* validate = app.add_subcommand("validate", "Load and validate a world file");
  validate->add_option("world", world_path, "World file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_config;
  }

  try {
    if (*run) return cmd_run(scenario, seed, run_out, out);
    if (*bench) return cmd_bench(set_path, suites, seeds, bench_out, out);
    if (*render) return cmd_render(render_path, width, out);
    if (*validate) return cmd_validate(world_path, out);
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return exit_config;
  } catch (const ValidationError& e) {
    err << "invalid world: " << e.what() << '\n';
    return exit_config;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return exit_config;
  } catch (const std::invalid_argument& e) {
    err << "configuration error: " << e.what() << '\n';
    return exit_config;
  }
  return exit_config;
}

}  // namespace crawler
