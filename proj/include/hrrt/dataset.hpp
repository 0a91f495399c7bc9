#pragma once

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hrrt/errors.hpp"
#include "hrrt/gridworld.hpp"
#include "hrrt/image.hpp"
#include "hrrt/parallel.hpp"
#include "hrrt/planners.hpp"
#include "hrrt/random.hpp"
#include "hrrt/sampling.hpp"

namespace hrrt {

inline constexpr std::size_t kPathsPerMap = 50;
inline constexpr std::size_t kDefaultGroundTruthBudget = 20000;
inline constexpr int kStrokeWidth = 3;
/// Minimum green excess for a pixel to count as path region.
inline constexpr int kColorNoiseFloor = 64;

// ───────────────────────── ground truth ─────────────────────────

/// Cells covered by a polyline drawn with a square brush of kStrokeWidth,
/// restricted to free cells. Each cell appears once.
inline std::vector<std::size_t> rasterize_path(const GridMap& map, const std::vector<WorldPoint>& pts) {
  std::vector<std::uint8_t> hit(map.cell_count(), 0);
  std::vector<std::size_t> out;
  constexpr int half = kStrokeWidth / 2;
  auto stamp = [&](const WorldPoint& p) {
    const auto c = cell_of(p);
    for (int dy = -half; dy <= half; ++dy)
      for (int dx = -half; dx <= half; ++dx) {
        const int x = c.x + dx, y = c.y + dy;
        if (!map.in_bounds(x, y)) continue;
        const auto idx = map.index(x, y);
        if (hit[idx] || !map.cell_free(idx)) continue;
        hit[idx] = 1;
        out.push_back(idx);
      }
  };
  if (pts.size() == 1) stamp(pts.front());
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const auto& a = pts[i - 1];
    const auto& b = pts[i];
    const auto steps = std::max<long>(1, static_cast<long>(std::ceil(distance(a, b) / 0.25)));
    for (long s = 0; s <= steps; ++s) {
      const double t = static_cast<double>(s) / steps;
      stamp({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct GroundTruth {
  Heatmap heatmap;
  std::size_t num_paths_found = 0;
  /// Rasterized cell count of each successful path, in run order.
  std::vector<std::size_t> path_cell_counts;
};

/// Density of k independent RRT solutions. Run i uses seed base_seed + i.
/// Each found path adds one to every cell of its stroke; failed runs add nothing.
inline GroundTruth ground_truth_heatmap(const GridMap& map, const PlanningQuery& query, std::size_t k = kPathsPerMap,
                                        std::size_t budget = kDefaultGroundTruthBudget, std::uint64_t base_seed = 0) {
  if (k < 1) throw ConfigError("ground truth needs at least one run");
  PlannerConfig cfg;
  cfg.mode = PlannerMode::rrt;
  cfg.max_iterations = budget;
  std::vector<double> acc(map.cell_count(), 0.0);
  std::vector<std::size_t> counts;
  for (std::size_t i = 0; i < k; ++i) {
    Rng rng(base_seed + i);
    const auto res = rrt_plan(map, query, cfg, UniformSampler{&map}, rng);
    if (!res.best_path) continue;
    const auto cells = rasterize_path(map, res.best_path->waypoints);
    for (auto c : cells) acc[c] += 1.0;
    counts.push_back(cells.size());
  }
  if (counts.empty()) throw EmptyGroundTruthError("no RRT run reached the goal");
  const std::size_t found = counts.size();
  return {Heatmap(map.width(), map.height(), std::move(acc)), found, std::move(counts)};
}

// ───────────────────────── images ─────────────────────────

/// Map with the heatmap support painted green and the markers on top.
inline Image render_ground_truth(const GridMap& map, const PlanningQuery& q, const Heatmap& h) {
  Image img = render_map_image(map);
  for (int y = 0; y < map.height(); ++y)
    for (int x = 0; x < map.width(); ++x)
      if (h.at(x, y) > 0.0 && map.cell_free(x, y)) img.set_rgb(x, y, colors::kPathRegion);
  paint_query_markers(img, map, q);
  return img;
}

/// Gray images carry weights directly. RGB images go through the color
/// filter: weight = G - max(R, B), floored at kColorNoiseFloor; marker pixels
/// are excluded. Throws EmptyDistributionError when nothing survives.
inline Heatmap heatmap_from_image(const Image& img) {
  std::vector<double> w(static_cast<std::size_t>(img.width) * img.height, 0.0);
  if (img.channels == 1) {
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = img.data[i];
  } else if (img.channels == 3) {
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        const Rgb c = img.rgb(x, y);
        if (c == colors::kStart || c == colors::kGoal) continue;
        const int v = static_cast<int>(c.g) - std::max<int>(c.r, c.b);
        if (v >= kColorNoiseFloor) w[static_cast<std::size_t>(y) * img.width + x] = v;
      }
  } else {
    throw DecodeError("heatmap image must have 1 or 3 channels");
  }
  return Heatmap(img.width, img.height, std::move(w));
}

inline Heatmap load_heatmap_file(const std::filesystem::path& path) {
  return heatmap_from_image(decode_png(read_file(path)));
}

// ───────────────────────── corpus generation ─────────────────────────

/// True when the goal cell is reachable from the start cell through
/// 8-connected free cells. Continuous paths cannot do better, so a false
/// answer proves the query unsolvable.
inline bool cells_connected(const GridMap& map, const WorldPoint& a, const WorldPoint& b) {
  const auto s = cell_of(a), g = cell_of(b);
  std::vector<std::uint8_t> seen(map.cell_count(), 0);
  std::vector<CellIndex> stack{s};
  seen[map.index(s.x, s.y)] = 1;
  while (!stack.empty()) {
    const auto c = stack.back();
    stack.pop_back();
    if (c == g) return true;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int x = c.x + dx, y = c.y + dy;
        if (!map.in_bounds(x, y)) continue;
        const auto idx = map.index(x, y);
        if (seen[idx] || !map.cell_free(idx)) continue;
        seen[idx] = 1;
        stack.push_back({x, y});
      }
  }
  return false;
}

struct DatasetPair {
  std::string id;
  GridMap map;
  PlanningQuery query;
  Heatmap ground_truth;
  std::size_t num_paths_found = 0;
  std::uint64_t seed = 0;
  std::size_t attempts = 1;
};

struct DatasetOptions {
  std::size_t n_pairs = 1;
  std::vector<MapKind> kinds{MapKind::blocks, MapKind::gaps, MapKind::clutter};
  std::uint64_t base_seed = 0;
  int width = kDefaultMapSide;
  int height = kDefaultMapSide;
  std::size_t paths_per_pair = kPathsPerMap;
  std::size_t budget = kDefaultGroundTruthBudget;
  unsigned jobs = 1;
  std::size_t max_attempts = 200;
};

inline std::string pair_id(std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%05zu", index);
  return buf;
}

/// Start and goal at centers of uniformly drawn free cells, at least half the
/// smaller map side apart. Empty when 1000 draws fail to separate them.
inline std::optional<PlanningQuery> place_query(const GridMap& map, Rng& rng) {
  const double min_sep = 0.5 * std::min(map.width(), map.height());
  auto draw = [&] { return cell_center(cell_of(sample_uniform_free(map, rng))); };
  const WorldPoint start = draw();
  for (int i = 0; i < 1000; ++i) {
    const WorldPoint goal = draw();
    if (distance(start, goal) >= min_sep) return PlanningQuery{start, goal, kDefaultGoalRadius};
  }
  return std::nullopt;
}

/// Builds pair `index`; unsolvable draws are logged and resampled with the
/// next attempt seed.
inline DatasetPair make_dataset_pair(std::size_t index, const DatasetOptions& opt) {
  if (opt.kinds.empty()) throw ConfigError("no map kinds given");
  const MapKind kind = opt.kinds[index % opt.kinds.size()];
  const std::uint64_t pair_seed = derive_seed(opt.base_seed, index);
  for (std::size_t attempt = 0; attempt < opt.max_attempts; ++attempt) {
    const std::uint64_t seed = derive_seed(pair_seed, attempt);
    auto map = generate_random_map(kind, opt.width, opt.height, seed);
    Rng rng(splitmix64(seed));
    const auto query = place_query(map, rng);
    if (!query) {
      spdlog::debug("pair {} attempt {}: no separated start/goal, resampling", index, attempt);
      continue;
    }
    if (!cells_connected(map, query->start, query->goal)) {
      spdlog::info("pair {} attempt {}: start and goal disconnected, resampling", index, attempt);
      continue;
    }
    try {
      auto gt = ground_truth_heatmap(map, *query, opt.paths_per_pair, opt.budget, seed);
      return {pair_id(index), std::move(map), *query, std::move(gt.heatmap), gt.num_paths_found, seed, attempt + 1};
    } catch (const EmptyGroundTruthError&) {
      spdlog::info("pair {} attempt {}: no RRT path within budget, resampling", index, attempt);
    }
  }
  throw Error("pair " + std::to_string(index) + ": no solvable query after " + std::to_string(opt.max_attempts) +
              " attempts");
}

inline nlohmann::json pair_sidecar(const DatasetPair& p) {
  auto j = to_json_value(make_metadata(p.map, p.query));
  j["map_id"] = p.id;
  j["num_paths_found"] = p.num_paths_found;
  j["attempts"] = p.attempts;
  j["normalization"] = "max255";
  return j;
}

/// Writes maps/{id}_input.png, maps/{id}_truth.png, maps/{id}_heat.png,
/// maps/{id}.json.
inline void write_dataset_pair(const std::filesystem::path& out_dir, const DatasetPair& p) {
  const auto maps = out_dir / "maps";
  write_file(maps / (p.id + "_input.png"), encode_map_image(p.map, p.query));
  write_file(maps / (p.id + "_truth.png"), encode_png(render_ground_truth(p.map, p.query, p.ground_truth)));
  write_file(maps / (p.id + "_heat.png"), encode_heatmap_png(p.ground_truth));
  write_file(maps / (p.id + ".json"), pair_sidecar(p).dump(2) + "\n");
}

/// Generates and writes the corpus, then manifest.json. The manifest depends
/// only on the options (never on `jobs`).
inline nlohmann::json generate_dataset(const DatasetOptions& opt, const std::filesystem::path& out_dir) {
  if (opt.n_pairs < 1) throw ConfigError("n_pairs must be at least 1");
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "maps", ec);
  if (ec) throw Error("cannot create output directory " + (out_dir / "maps").string() + ": " + ec.message());

  std::vector<nlohmann::json> entries(opt.n_pairs);
  parallel_for(opt.n_pairs, opt.jobs, [&](std::size_t i) {
    const auto pair = make_dataset_pair(i, opt);
    write_dataset_pair(out_dir, pair);
    entries[i] = {{"id", pair.id},
                  {"kind", std::string(to_string(pair.map.kind()))},
                  {"seed", pair.seed},
                  {"attempts", pair.attempts},
                  {"num_paths_found", pair.num_paths_found}};
    spdlog::debug("pair {} written ({} paths)", pair.id, pair.num_paths_found);
  });

  nlohmann::json kinds = nlohmann::json::array();
  for (auto k : opt.kinds) kinds.push_back(std::string(to_string(k)));
  nlohmann::json manifest{{"base_seed", opt.base_seed},
                          {"width", opt.width},
                          {"height", opt.height},
                          {"paths_per_pair", opt.paths_per_pair},
                          {"budget", opt.budget},
                          {"kinds", kinds},
                          {"pairs", entries}};
  write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

struct LoadedPair {
  std::string id;
  GridMap map;
  PlanningQuery query;
};

/// Reads the input image and sidecar of one pair.
inline LoadedPair load_dataset_pair(const std::filesystem::path& dataset_dir, const std::string& id) {
  const auto maps = dataset_dir / "maps";
  auto decoded = decode_map_image(read_file(maps / (id + "_input.png")));
  const auto sidecar = nlohmann::json::parse(read_file(maps / (id + ".json")));
  const auto meta = metadata_from_json(sidecar);
  if (meta.width != decoded.map.width() || meta.height != decoded.map.height())
    throw DecodeError("sidecar dimensions disagree with the image for " + id);
  GridMap map(decoded.map.width(), decoded.map.height(), decoded.map.cells(), meta.kind, meta.seed);
  return {id, std::move(map), meta.query};
}

inline std::vector<std::string> manifest_ids(const std::filesystem::path& dataset_dir) {
  const auto manifest = nlohmann::json::parse(read_file(dataset_dir / "manifest.json"));
  std::vector<std::string> ids;
  for (const auto& p : manifest.at("pairs")) ids.push_back(p.at("id").get<std::string>());
  return ids;
}

}  // namespace hrrt
