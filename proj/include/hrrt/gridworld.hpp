#pragma once

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hrrt/errors.hpp"
#include "hrrt/image.hpp"
#include "hrrt/random.hpp"

namespace hrrt {

// ───────────────────────── geometry ─────────────────────────

/// Continuous planar state in cell units. Cell (i, j) covers [i, i+1) x [j, j+1).
struct WorldPoint {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const WorldPoint&, const WorldPoint&) = default;
};

inline double distance(const WorldPoint& a, const WorldPoint& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

inline double squared_distance(const WorldPoint& a, const WorldPoint& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

struct CellIndex {
  int x = 0;
  int y = 0;
  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

inline CellIndex cell_of(const WorldPoint& p) {
  return {static_cast<int>(std::floor(p.x)), static_cast<int>(std::floor(p.y))};
}

inline WorldPoint cell_center(CellIndex c) { return {c.x + 0.5, c.y + 0.5}; }

// ───────────────────────── map ─────────────────────────

enum class MapKind { blocks, gaps, clutter, custom };

inline std::string_view to_string(MapKind k) {
  switch (k) {
    case MapKind::blocks: return "blocks";
    case MapKind::gaps: return "gaps";
    case MapKind::clutter: return "clutter";
    case MapKind::custom: return "custom";
  }
  return "custom";
}

inline MapKind parse_map_kind(std::string_view s) {
  if (s == "blocks") return MapKind::blocks;
  if (s == "gaps") return MapKind::gaps;
  if (s == "clutter") return MapKind::clutter;
  if (s == "custom") return MapKind::custom;
  throw ConfigError("unknown map kind '" + std::string(s) + "'");
}

inline constexpr int kMinMapSide = 16;
inline constexpr int kDefaultMapSide = 256;

/// Binary occupancy grid. Immutable once constructed; equality is geometric
/// (kind and seed only record provenance).
class GridMap {
 public:
  /// cells: row-major, nonzero = obstacle.
  GridMap(int width, int height, std::vector<std::uint8_t> cells, MapKind kind = MapKind::custom,
          std::uint64_t seed = 0)
      : width_(width), height_(height), cells_(std::move(cells)), kind_(kind), seed_(seed) {
    if (width < kMinMapSide || height < kMinMapSide)
      throw ConfigError("map dimensions must be at least 16x16");
    if (cells_.size() != static_cast<std::size_t>(width) * height)
      throw ConfigError("cell count does not match map dimensions");
    std::size_t free = 0;
    for (auto& c : cells_) {
      c = c ? 1 : 0;
      free += c == 0;
    }
    if (free == 0) throw ConfigError("map has no free cell");
    free_count_ = free;
  }

  /// All-free map.
  static GridMap empty(int width, int height) {
    return GridMap(width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, 0));
  }

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] MapKind kind() const { return kind_; }
  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] std::size_t cell_count() const { return cells_.size(); }
  [[nodiscard]] std::size_t free_count() const { return free_count_; }
  [[nodiscard]] double free_fraction() const {
    return static_cast<double>(free_count_) / static_cast<double>(cells_.size());
  }
  [[nodiscard]] const std::vector<std::uint8_t>& cells() const { return cells_; }

  [[nodiscard]] bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  [[nodiscard]] bool contains(const WorldPoint& p) const {
    return std::isfinite(p.x) && std::isfinite(p.y) && p.x >= 0.0 && p.y >= 0.0 && p.x < width_ &&
           p.y < height_;
  }
  [[nodiscard]] std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

  /// Unchecked occupancy lookup.
  [[nodiscard]] bool cell_free(int x, int y) const { return cells_[index(x, y)] == 0; }
  [[nodiscard]] bool cell_free(std::size_t idx) const { return cells_[idx] == 0; }

  friend bool operator==(const GridMap& a, const GridMap& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.cells_ == b.cells_;
  }

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> cells_;
  MapKind kind_;
  std::uint64_t seed_;
  std::size_t free_count_ = 0;
};

inline constexpr double kDefaultGoalRadius = 4.0;
inline constexpr int kMarkerRadius = 4;

struct PlanningQuery {
  WorldPoint start;
  WorldPoint goal;
  double goal_radius = kDefaultGoalRadius;

  [[nodiscard]] bool in_goal_region(const WorldPoint& p) const { return distance(p, goal) < goal_radius; }
};

// ───────────────────────── collision primitives ─────────────────────────

inline bool is_free(const GridMap& map, const WorldPoint& p) {
  if (!map.contains(p)) throw BoundsError("point outside map bounds");
  const auto c = cell_of(p);
  return map.cell_free(c.x, c.y);
}

inline constexpr double kDefaultCollisionSpacing = 0.5;

/// Supersampled straight-segment check, endpoints included. The endpoints are
/// put in a canonical order first so that the result is symmetric bit for bit.
inline bool segment_obstacle_free(const GridMap& map, WorldPoint a, WorldPoint b,
                                  double spacing = kDefaultCollisionSpacing) {
  if (!map.contains(a) || !map.contains(b)) throw BoundsError("segment endpoint outside map bounds");
  if (std::pair(b.x, b.y) < std::pair(a.x, a.y)) std::swap(a, b);
  const double len = distance(a, b);
  const auto steps = static_cast<long>(std::ceil(len / spacing));
  if (steps == 0) return is_free(map, a);
  for (long i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(steps);
    const WorldPoint p{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
    const auto c = cell_of(p);
    // t*(b-a) can round past b by one ulp at the far edge of the domain.
    const int cx = std::min(c.x, map.width() - 1);
    const int cy = std::min(c.y, map.height() - 1);
    if (!map.cell_free(cx, cy)) return false;
  }
  return true;
}

inline void validate_query(const GridMap& map, const PlanningQuery& q) {
  if (!(q.goal_radius > 0.0) || !std::isfinite(q.goal_radius)) throw ConfigError("goal radius must be positive");
  if (!is_free(map, q.start)) throw ConfigError("start lies in an obstacle cell");
  if (!is_free(map, q.goal)) throw ConfigError("goal lies in an obstacle cell");
}

/// Cells whose centers lie within `radius` of the center of p's cell, clipped
/// to the map. This is the rasterized start/goal marker.
inline std::vector<CellIndex> disk_cells(int width, int height, const WorldPoint& p, int radius = kMarkerRadius) {
  const auto c = cell_of(p);
  std::vector<CellIndex> out;
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx * dx + dy * dy > radius * radius) continue;
      const int x = c.x + dx, y = c.y + dy;
      if (x >= 0 && y >= 0 && x < width && y < height) out.push_back({x, y});
    }
  return out;
}

// ───────────────────────── random maps ─────────────────────────

namespace detail {

class Raster {
 public:
  Raster(int w, int h) : w_(w), h_(h), cells_(static_cast<std::size_t>(w) * h, 0) {}

  /// Number of currently-free cells the rectangle would cover.
  [[nodiscard]] std::size_t newly_covered(int x0, int y0, int x1, int y1) const {
    std::size_t n = 0;
    for (int y = std::max(0, y0); y < std::min(h_, y1); ++y)
      for (int x = std::max(0, x0); x < std::min(w_, x1); ++x) n += cells_[idx(x, y)] == 0;
    return n;
  }
  void fill(int x0, int y0, int x1, int y1, std::uint8_t v = 1) {
    for (int y = std::max(0, y0); y < std::min(h_, y1); ++y)
      for (int x = std::max(0, x0); x < std::min(w_, x1); ++x) {
        auto& c = cells_[idx(x, y)];
        obstacles_ += static_cast<std::size_t>(v != 0) - static_cast<std::size_t>(c != 0);
        c = v;
      }
  }
  [[nodiscard]] double obstacle_fraction() const {
    return static_cast<double>(obstacles_) / static_cast<double>(cells_.size());
  }
  [[nodiscard]] std::size_t size() const { return cells_.size(); }
  std::vector<std::uint8_t> release() && { return std::move(cells_); }

 private:
  [[nodiscard]] std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * w_ + x; }
  int w_, h_;
  std::vector<std::uint8_t> cells_;
  std::size_t obstacles_ = 0;
};

inline constexpr double kMaxObstacleFraction = 0.55;

inline void add_rectangles(Raster& r, Rng& rng, int w, int h, int count, int min_side, int max_side,
                           double target_fraction) {
  for (int i = 0; i < count * 4 && count > 0; ++i) {
    if (r.obstacle_fraction() >= target_fraction) break;
    const int rw = uniform_int(rng, min_side, max_side);
    const int rh = uniform_int(rng, min_side, max_side);
    const int x0 = uniform_int(rng, 0, std::max(0, w - rw));
    const int y0 = uniform_int(rng, 0, std::max(0, h - rh));
    const double after =
        r.obstacle_fraction() + static_cast<double>(r.newly_covered(x0, y0, x0 + rw, y0 + rh)) / r.size();
    if (after > kMaxObstacleFraction) continue;
    r.fill(x0, y0, x0 + rw, y0 + rh);
    --count;
  }
}

inline void generate_blocks(Raster& r, Rng& rng, int w, int h) {
  const int side = std::min(w, h);
  const int count = uniform_int(rng, 6, 12);
  const double target = 0.15 + 0.2 * uniform01(rng);
  add_rectangles(r, rng, w, h, count, std::max(1, side / 12), std::max(2, side / 4), target);
}

// Full-span walls, each pierced by one or two doors.
inline void generate_gaps(Raster& r, Rng& rng, int w, int h) {
  const bool vertical = uniform01(rng) < 0.5;
  const int along = vertical ? w : h;   // axis the walls are spaced along
  const int across = vertical ? h : w;  // axis each wall spans
  const int walls = uniform_int(rng, 3, 5);
  const int spacing = along / (walls + 1);
  for (int i = 1; i <= walls; ++i) {
    const int thickness = uniform_int(rng, std::max(1, along / 32), std::max(2, along / 16));
    const int jitter = std::max(1, spacing / 4);
    const int pos = std::clamp(i * spacing + uniform_int(rng, -jitter, jitter), 0, along - thickness);
    std::vector<std::uint8_t> solid(static_cast<std::size_t>(across), 1);
    const int doors = uniform_int(rng, 1, 2);
    for (int d = 0; d < doors; ++d) {
      const int width = uniform_int(rng, std::max(3, across / 16), std::max(4, across / 8));
      const int start = uniform_int(rng, 0, std::max(0, across - width));
      for (int k = start; k < std::min(across, start + width); ++k) solid[static_cast<std::size_t>(k)] = 0;
    }
    for (int k = 0; k < across; ++k) {
      if (!solid[static_cast<std::size_t>(k)]) continue;
      if (vertical)
        r.fill(pos, k, pos + thickness, k + 1);
      else
        r.fill(k, pos, k + 1, pos + thickness);
    }
  }
}

inline void generate_clutter(Raster& r, Rng& rng, int w, int h) {
  const int side = std::min(w, h);
  const double target = 0.15 + 0.15 * uniform01(rng);
  const int lo = std::max(1, side / 64);
  const int hi = std::max(lo + 1, side / 24);
  const double mean_area = 0.25 * (lo + hi) * (lo + hi);
  const int count = static_cast<int>(target * w * h / mean_area) + 1;
  for (int i = 0; i < count * 4; ++i) {
    if (r.obstacle_fraction() >= target) break;
    const int s = uniform_int(rng, lo, hi);
    const int x0 = uniform_int(rng, 0, w - s);
    const int y0 = uniform_int(rng, 0, h - s);
    r.fill(x0, y0, x0 + s, y0 + s);
  }
}

}  // namespace detail

/// Deterministic for a fixed (kind, width, height, seed). At least 45% of the
/// cells stay free; all obstacles are axis-aligned rectangles.
inline GridMap generate_random_map(MapKind kind, int width, int height, std::uint64_t seed) {
  if (width < kMinMapSide || height < kMinMapSide) throw ConfigError("map dimensions must be at least 16x16");
  Rng rng(splitmix64(seed ^ (static_cast<std::uint64_t>(kind) << 56)));
  detail::Raster raster(width, height);
  switch (kind) {
    case MapKind::blocks: detail::generate_blocks(raster, rng, width, height); break;
    case MapKind::gaps: detail::generate_gaps(raster, rng, width, height); break;
    case MapKind::clutter: detail::generate_clutter(raster, rng, width, height); break;
    case MapKind::custom: throw ConfigError("custom maps cannot be generated");
  }
  return GridMap(width, height, std::move(raster).release(), kind, seed);
}

// ───────────────────────── image codec ─────────────────────────

inline Image render_map_image(const GridMap& map) {
  Image img(map.width(), map.height(), 3);
  for (int y = 0; y < map.height(); ++y)
    for (int x = 0; x < map.width(); ++x)
      img.set_rgb(x, y, map.cell_free(x, y) ? colors::kFree : colors::kObstacle);
  return img;
}

/// Markers are annotation only: they are painted over free cells and leave
/// obstacle pixels untouched, so occupancy survives the round trip.
inline void paint_query_markers(Image& img, const GridMap& map, const PlanningQuery& q) {
  for (auto [p, color] : {std::pair{q.start, colors::kStart}, std::pair{q.goal, colors::kGoal}})
    for (auto c : disk_cells(map.width(), map.height(), p))
      if (map.cell_free(c.x, c.y)) img.set_rgb(c.x, c.y, color);
}

inline Bytes encode_map_image(const GridMap& map, const std::optional<PlanningQuery>& query = std::nullopt) {
  auto img = render_map_image(map);
  if (query) paint_query_markers(img, map, *query);
  return encode_png(img);
}

struct DecodedMap {
  GridMap map;
  std::optional<PlanningQuery> query;
};

namespace detail {

// Finds the cell whose rendered marker reproduces `pixels` exactly; falls back
// to the centroid when the marker was partially painted over.
inline WorldPoint recover_marker_center(const GridMap& map, const std::vector<CellIndex>& pixels) {
  double sx = 0, sy = 0;
  int x0 = pixels.front().x, x1 = x0, y0 = pixels.front().y, y1 = y0;
  for (auto p : pixels) {
    sx += p.x + 0.5;
    sy += p.y + 0.5;
    x0 = std::min(x0, p.x), x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y), y1 = std::max(y1, p.y);
  }
  const WorldPoint centroid{sx / pixels.size(), sy / pixels.size()};

  auto key = [&](CellIndex c) { return map.index(c.x, c.y); };
  std::vector<std::size_t> observed;
  observed.reserve(pixels.size());
  for (auto p : pixels) observed.push_back(key(p));
  std::sort(observed.begin(), observed.end());

  std::optional<WorldPoint> best;
  double best_d = 0;
  for (int cy = y0 - kMarkerRadius; cy <= y1 + kMarkerRadius; ++cy)
    for (int cx = x0 - kMarkerRadius; cx <= x1 + kMarkerRadius; ++cx) {
      if (!map.in_bounds(cx, cy) || !map.cell_free(cx, cy)) continue;
      std::vector<std::size_t> rendered;
      for (auto c : disk_cells(map.width(), map.height(), cell_center({cx, cy})))
        if (map.cell_free(c.x, c.y)) rendered.push_back(key(c));
      std::sort(rendered.begin(), rendered.end());
      if (rendered != observed) continue;
      const WorldPoint cand = cell_center({cx, cy});
      const double d = squared_distance(cand, centroid);
      if (!best || d < best_d) best = cand, best_d = d;
    }
  return best.value_or(centroid);
}

}  // namespace detail

/// Inverse of encode_map_image. Path-region pixels decode as free space.
inline DecodedMap decode_map_image(const Image& img) {
  if (img.channels != 3) throw DecodeError("map image must be RGB");
  std::vector<std::uint8_t> cells(static_cast<std::size_t>(img.width) * img.height, 0);
  std::vector<CellIndex> start_px, goal_px;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const Rgb c = img.rgb(x, y);
      if (c == colors::kObstacle)
        cells[static_cast<std::size_t>(y) * img.width + x] = 1;
      else if (c == colors::kStart)
        start_px.push_back({x, y});
      else if (c == colors::kGoal)
        goal_px.push_back({x, y});
      else if (!(c == colors::kFree || c == colors::kPathRegion))
        throw DecodeError("unknown pixel color (" + std::to_string(c.r) + "," + std::to_string(c.g) + "," +
                          std::to_string(c.b) + ") at " + std::to_string(x) + "," + std::to_string(y));
    }
  std::optional<GridMap> map;
  try {
    map.emplace(img.width, img.height, std::move(cells));
  } catch (const ConfigError& e) {
    throw DecodeError(std::string("invalid map image: ") + e.what());
  }
  if (start_px.empty() && goal_px.empty()) return {std::move(*map), std::nullopt};
  if (start_px.empty() || goal_px.empty()) throw DecodeError("map image has only one of the start/goal markers");
  PlanningQuery q{detail::recover_marker_center(*map, start_px), detail::recover_marker_center(*map, goal_px),
                  kDefaultGoalRadius};
  return {std::move(*map), q};
}

inline DecodedMap decode_map_image(const Bytes& png) { return decode_map_image(decode_png(png)); }

// ───────────────────────── metadata sidecar ─────────────────────────

/// JSON sidecar stored next to every map image.
struct MapMetadata {
  int width = kDefaultMapSide;
  int height = kDefaultMapSide;
  MapKind kind = MapKind::custom;
  std::uint64_t seed = 0;
  PlanningQuery query;
};

inline nlohmann::json to_json_value(const MapMetadata& m) {
  return nlohmann::json{{"width", m.width},
                        {"height", m.height},
                        {"kind", std::string(to_string(m.kind))},
                        {"seed", m.seed},
                        {"start", {m.query.start.x, m.query.start.y}},
                        {"goal", {m.query.goal.x, m.query.goal.y}},
                        {"goal_radius", m.query.goal_radius}};
}

inline MapMetadata metadata_from_json(const nlohmann::json& j) {
  try {
    MapMetadata m;
    m.width = j.at("width").get<int>();
    m.height = j.at("height").get<int>();
    m.kind = parse_map_kind(j.at("kind").get<std::string>());
    m.seed = j.at("seed").get<std::uint64_t>();
    const auto& s = j.at("start");
    const auto& g = j.at("goal");
    m.query.start = {s.at(0).get<double>(), s.at(1).get<double>()};
    m.query.goal = {g.at(0).get<double>(), g.at(1).get<double>()};
    m.query.goal_radius = j.at("goal_radius").get<double>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError(std::string("invalid map sidecar: ") + e.what());
  }
}

inline MapMetadata make_metadata(const GridMap& map, const PlanningQuery& q) {
  return {map.width(), map.height(), map.kind(), map.seed(), q};
}

}  // namespace hrrt
