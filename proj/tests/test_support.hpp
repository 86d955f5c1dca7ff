#pragma once

#include <filesystem>
#include <string>

#include "crawler/rng.hpp"
#include "crawler/sim_engine.hpp"
#include "crawler/world.hpp"

namespace crawler::testing {

inline std::string data_path(const std::string& rel) { return std::string(CRAWLER_DATA_DIR) + "/" + rel; }

// Medium with no absorption, so ranges are limited only by the sensors.
inline MediumProperties clear_medium() { return {1500.0, 0.0, 0.0}; }

inline WorldModel box_world(double w, double h, MediumProperties m = clear_medium()) {
  return WorldModel("box", {w, h}, m, {});
}

inline Obstacle polygon(std::vector<Vec2> v, Material m = Material::reflective) {
  Obstacle o;
  o.kind = ShapeKind::polygon;
  o.vertices = std::move(v);
  o.material = m;
  return o;
}

inline Obstacle segment(Vec2 a, Vec2 b, Material m = Material::reflective) {
  Obstacle o;
  o.kind = ShapeKind::segment;
  o.vertices = {a, b};
  o.material = m;
  return o;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("crawler_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace crawler::testing
