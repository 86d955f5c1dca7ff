#include "crawler/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "crawler/errors.hpp"
#include "json_detail.hpp"

namespace crawler {

namespace {

constexpr double kGeomEps = 1e-9;

int orientation(Vec2 a, Vec2 b, Vec2 c) {
  const double v = cross(b - a, c - a);
  if (std::abs(v) < 1e-12) return 0;
  return v > 0 ? 1 : -1;
}

bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
  return std::min(a.x, b.x) - 1e-12 <= p.x && p.x <= std::max(a.x, b.x) + 1e-12 &&
         std::min(a.y, b.y) - 1e-12 <= p.y && p.y <= std::max(a.y, b.y) + 1e-12;
}

bool segments_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

bool polygon_is_simple(const std::vector<Vec2>& v) {
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = v[i];
    const Vec2 b = v[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      const Vec2 c = v[j];
      const Vec2 d = v[(j + 1) % n];
      if (adjacent) {
        // Adjacent edges may only share their common vertex.
        const Vec2 shared = j == i + 1 ? b : a;
        const Vec2 other_far = j == i + 1 ? d : c;
        const Vec2 own_far = j == i + 1 ? a : b;
        if (orientation(own_far, shared, other_far) == 0 &&
            dot(own_far - shared, other_far - shared) > 0)
          return false;
        continue;
      }
      if (segments_intersect(a, b, c, d)) return false;
    }
  }
  return true;
}

bool point_in_polygon(Vec2 p, const std::vector<Vec2>& v) {
  bool inside = false;
  for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
    if ((v[i].y > p.y) != (v[j].y > p.y)) {
      const double x = v[j].x + (p.y - v[j].y) * (v[i].x - v[j].x) / (v[i].y - v[j].y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

// Liang-Barsky clip of segment a->b against [lo, hi]. Returns the clipped
// parameter interval, or false if disjoint.
bool clip_segment(Vec2 a, Vec2 b, Vec2 lo, Vec2 hi, double& t0, double& t1) {
  t0 = 0.0;
  t1 = 1.0;
  const Vec2 d = b - a;
  const double p[4] = {-d.x, d.x, -d.y, d.y};
  const double q[4] = {a.x - lo.x, hi.x - a.x, a.y - lo.y, hi.y - a.y};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;
      continue;
    }
    const double r = q[i] / p[i];
    if (p[i] < 0.0) {
      if (r > t1) return false;
      t0 = std::max(t0, r);
    } else {
      if (r < t0) return false;
      t1 = std::min(t1, r);
    }
  }
  return t0 <= t1;
}

bool segment_touches_box(Vec2 a, Vec2 b, Vec2 lo, Vec2 hi) {
  double t0, t1;
  return clip_segment(a, b, lo - Vec2{kGeomEps, kGeomEps}, hi + Vec2{kGeomEps, kGeomEps}, t0, t1);
}

bool polygon_overlaps_box(const std::vector<Vec2>& poly, Vec2 lo, Vec2 hi) {
  const Vec2 slo = lo + Vec2{kGeomEps, kGeomEps};
  const Vec2 shi = hi - Vec2{kGeomEps, kGeomEps};
  for (std::size_t i = 0; i < poly.size(); ++i) {
    double t0, t1;
    const Vec2 a = poly[i];
    const Vec2 b = poly[(i + 1) % poly.size()];
    if (clip_segment(a, b, slo, shi, t0, t1) && (t1 - t0) * norm(b - a) > kGeomEps) return true;
  }
  return point_in_polygon((lo + hi) * 0.5, poly);
}

void validate_obstacle(const Obstacle& o, std::size_t index, const Bounds& bounds) {
  const std::string where = "obstacles[" + std::to_string(index) + "]";
  for (const Vec2& v : o.vertices) {
    if (!std::isfinite(v.x) || !std::isfinite(v.y) || v.x < 0.0 || v.y < 0.0 ||
        v.x > bounds.width || v.y > bounds.height) {
      throw ValidationError(where + ": vertex (" + std::to_string(v.x) + ", " +
                            std::to_string(v.y) + ") lies outside bounds");
    }
  }
  if (o.kind == ShapeKind::segment) {
    if (o.vertices.size() != 2)
      throw ValidationError(where + ": segment needs exactly 2 vertices");
    if (norm(o.vertices[1] - o.vertices[0]) <= 0.0)
      throw ValidationError(where + ": segment has zero length");
  } else {
    if (o.vertices.size() < 3)
      throw ValidationError(where + ": polygon needs at least 3 vertices");
    if (!polygon_is_simple(o.vertices))
      throw ValidationError(where + ": polygon is not simple");
  }
  if (o.appear_at_s < 0.0) throw ValidationError(where + ": appear_at_s must be >= 0");
}

}  // namespace

WorldModel::WorldModel(std::string name, Bounds bounds, MediumProperties medium,
                       std::vector<Obstacle> obstacles)
    : name_(std::move(name)), bounds_(bounds), medium_(medium), obstacles_(std::move(obstacles)) {
  if (!(bounds_.width > 0.0) || !(bounds_.height > 0.0))
    throw ValidationError("bounds must have strictly positive width and height");
  if (!(medium_.sound_speed > 0.0)) throw ValidationError("medium.sound_speed must be > 0");
  if (!(medium_.ultrasonic_attenuation_db_per_m >= 0.0) ||
      !(medium_.lidar_attenuation_per_m >= 0.0))
    throw ValidationError("medium attenuation coefficients must be >= 0");
  for (std::size_t i = 0; i < obstacles_.size(); ++i)
    validate_obstacle(obstacles_[i], i, bounds_);
  rebuild_edges();
}

bool WorldModel::is_active(std::size_t i) const {
  const Obstacle& o = obstacles_[i];
  return !o.dynamic || o.appear_at_s <= time_s_ + 1e-12;
}

WorldModel WorldModel::at_time(double t) const {
  WorldModel copy = *this;
  copy.time_s_ = t;
  copy.rebuild_edges();
  return copy;
}

WorldModel WorldModel::with_obstacles(std::vector<Obstacle> extra) const {
  std::vector<Obstacle> all = obstacles_;
  all.insert(all.end(), std::make_move_iterator(extra.begin()),
             std::make_move_iterator(extra.end()));
  WorldModel w(name_, bounds_, medium_, std::move(all));
  return w.at_time(time_s_);
}

void WorldModel::rebuild_edges() {
  edges_.clear();
  for (std::size_t i = 0; i < obstacles_.size(); ++i) {
    if (!is_active(i)) continue;
    const Obstacle& o = obstacles_[i];
    const int id = static_cast<int>(i);
    if (o.kind == ShapeKind::segment) {
      edges_.push_back({o.vertices[0], o.vertices[1], o.material, id});
    } else {
      for (std::size_t k = 0; k < o.vertices.size(); ++k)
        edges_.push_back({o.vertices[k], o.vertices[(k + 1) % o.vertices.size()], o.material, id});
    }
  }
  const double w = bounds_.width;
  const double h = bounds_.height;
  edges_.push_back({{0, 0}, {w, 0}, Material::reflective, -1});
  edges_.push_back({{w, 0}, {w, h}, Material::reflective, -1});
  edges_.push_back({{w, h}, {0, h}, Material::reflective, -1});
  edges_.push_back({{0, h}, {0, 0}, Material::reflective, -1});
}

// ---------------------------------------------------------------------------
// Loading

using nlohmann::json;

std::string line_of(std::string_view text, std::size_t byte) {
  const std::size_t end = std::min(byte, text.size());
  const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(end), '\n');
  return "line " + std::to_string(line);
}

double number_at(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ParseError(where + "." + key, "missing field");
  if (!j.at(key).is_number()) throw ParseError(where + "." + key, "expected a number");
  return j.at(key).get<double>();
}

double number_or(const json& j, const std::string& key, double fallback, const std::string& where) {
  return j.contains(key) ? number_at(j, key, where) : fallback;
}

namespace {

Obstacle parse_obstacle(const json& j, const std::string& where) {
  if (!j.is_object()) throw ParseError(where, "expected an object");
  Obstacle o;
  const std::string type = j.value("type", "");
  if (type == "polygon") o.kind = ShapeKind::polygon;
  else if (type == "segment") o.kind = ShapeKind::segment;
  else throw ParseError(where + ".type", "expected \"polygon\" or \"segment\"");

  if (!j.contains("vertices") || !j.at("vertices").is_array())
    throw ParseError(where + ".vertices", "expected an array of [x, y] pairs");
  const json& verts = j.at("vertices");
  for (std::size_t k = 0; k < verts.size(); ++k) {
    const json& v = verts[k];
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      throw ParseError(where + ".vertices[" + std::to_string(k) + "]", "expected [x, y]");
    o.vertices.push_back({v[0].get<double>(), v[1].get<double>()});
  }

  const std::string material = j.value("material", "reflective");
  if (material == "reflective") o.material = Material::reflective;
  else if (material == "absorbing") o.material = Material::absorbing;
  else throw ParseError(where + ".material", "expected \"reflective\" or \"absorbing\"");

  if (j.contains("dynamic")) {
    if (!j.at("dynamic").is_boolean()) throw ParseError(where + ".dynamic", "expected a boolean");
    o.dynamic = j.at("dynamic").get<bool>();
  }
  if (j.contains("appear_at_s") && !j.at("appear_at_s").is_null())
    o.appear_at_s = number_at(j, "appear_at_s", where);
  return o;
}

}  // namespace

std::vector<Obstacle> parse_obstacle_list(const nlohmann::json& arr, const std::string& where) {
  if (!arr.is_array()) throw ParseError(where, "expected an array");
  std::vector<Obstacle> out;
  for (std::size_t i = 0; i < arr.size(); ++i)
    out.push_back(parse_obstacle(arr[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

WorldModel load_world(std::string_view text, std::string name) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(line_of(text, e.byte), e.what());
  }
  if (!j.is_object()) throw ParseError("line 1", "world file must be a JSON object");
  if (j.contains("name") && j.at("name").is_string()) name = j.at("name").get<std::string>();

  if (!j.contains("bounds") || !j.at("bounds").is_object())
    throw ParseError("bounds", "missing object {w, h}");
  Bounds bounds{number_at(j.at("bounds"), "w", "bounds"), number_at(j.at("bounds"), "h", "bounds")};

  MediumProperties medium;
  if (j.contains("medium")) {
    const json& m = j.at("medium");
    if (!m.is_object()) throw ParseError("medium", "expected an object");
    medium.sound_speed = number_or(m, "sound_speed", medium.sound_speed, "medium");
    medium.ultrasonic_attenuation_db_per_m =
        number_or(m, "us_atten_db_per_m", medium.ultrasonic_attenuation_db_per_m, "medium");
    medium.lidar_attenuation_per_m =
        number_or(m, "lidar_atten_per_m", medium.lidar_attenuation_per_m, "medium");
  }

  std::vector<Obstacle> obstacles;
  if (j.contains("obstacles")) obstacles = parse_obstacle_list(j.at("obstacles"), "obstacles");
  return WorldModel(std::move(name), bounds, medium, std::move(obstacles));
}

WorldModel load_world_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read world file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string stem = path;
  if (auto pos = stem.find_last_of('/'); pos != std::string::npos) stem = stem.substr(pos + 1);
  if (auto pos = stem.rfind(".json"); pos != std::string::npos) stem = stem.substr(0, pos);
  return load_world(ss.str(), stem);
}

// ---------------------------------------------------------------------------
// Queries

std::optional<RayHit> raycast(const WorldModel& world, Vec2 origin, Vec2 direction,
                              double max_range) {
  CRAWLER_EXPECTS(max_range > 0.0, "raycast: max_range must be > 0");
  CRAWLER_EXPECTS(std::abs(norm(direction) - 1.0) < 1e-6, "raycast: direction must be unit length");
  CRAWLER_EXPECTS(world.contains(origin), "raycast: origin outside world bounds");

  double best = std::numeric_limits<double>::infinity();
  const Edge* best_edge = nullptr;
  for (const Edge& e : world.edges()) {
    const Vec2 ev = e.b - e.a;
    const double denom = cross(direction, ev);
    if (std::abs(denom) < 1e-14) continue;  // parallel; collinear grazing is no echo
    const Vec2 ao = e.a - origin;
    const double t = cross(ao, ev) / denom;
    const double u = cross(ao, direction) / denom;
    if (t < 0.0 || u < -1e-12 || u > 1.0 + 1e-12) continue;
    if (t < best) {
      best = t;
      best_edge = &e;
    }
  }
  if (best_edge == nullptr || best > max_range) return std::nullopt;

  const Vec2 ev = best_edge->b - best_edge->a;
  Vec2 n = normalized(Vec2{-ev.y, ev.x});
  if (dot(n, direction) > 0.0) n = -n;
  return RayHit{best, origin + direction * best, n, best_edge->material};
}

std::vector<std::optional<RayHit>> raycast_many(const WorldModel& world, Vec2 origin,
                                                std::span<const Vec2> directions,
                                                double max_range, Execution exec) {
  std::vector<std::optional<RayHit>> hits(directions.size());
  const long n = static_cast<long>(directions.size());
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) hits[i] = raycast(world, origin, directions[i], max_range);
  } else {
    for (long i = 0; i < n; ++i) hits[i] = raycast(world, origin, directions[i], max_range);
  }
  return hits;
}

int grid_cells_for(double extent, double resolution) {
  return static_cast<int>(std::ceil(extent / resolution - 1e-9));
}

namespace {

bool cell_occupied(const WorldModel& world, Vec2 lo, Vec2 hi) {
  const Bounds& b = world.bounds();
  if (lo.x <= kGeomEps || lo.y <= kGeomEps || hi.x >= b.width - kGeomEps ||
      hi.y >= b.height - kGeomEps)
    return true;
  const auto& obstacles = world.obstacles();
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    if (!world.is_active(i)) continue;
    const Obstacle& o = obstacles[i];
    if (o.kind == ShapeKind::segment) {
      if (segment_touches_box(o.vertices[0], o.vertices[1], lo, hi)) return true;
    } else if (polygon_overlaps_box(o.vertices, lo, hi)) {
      return true;
    }
  }
  return false;
}

void rasterize_row(const WorldModel& world, OccupancyGrid& grid, int row) {
  const double res = grid.resolution();
  const auto& p = grid.params();
  for (int col = 0; col < grid.width(); ++col) {
    const Vec2 lo{col * res, row * res};
    const Vec2 hi{(col + 1) * res, (row + 1) * res};
    grid.set({col, row}, cell_occupied(world, lo, hi) ? p.l_max : p.l_min);
  }
}

}  // namespace

OccupancyGrid rasterize_ground_truth(const WorldModel& world, double resolution, Execution exec,
                                     LogOddsParams params) {
  const Bounds& b = world.bounds();
  if (!(resolution > 0.0) || resolution > std::min(b.width, b.height) / 4.0 + 1e-12)
    throw std::invalid_argument("rasterize_ground_truth: resolution too coarse (need >= 4 cells per side)");
  OccupancyGrid grid(grid_cells_for(b.width, resolution), grid_cells_for(b.height, resolution),
                     resolution, {0.0, 0.0}, params);
  const int rows = grid.height();
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r) rasterize_row(world, grid, r);
  } else {
    for (int r = 0; r < rows; ++r) rasterize_row(world, grid, r);
  }
  return grid;
}

}  // namespace crawler
