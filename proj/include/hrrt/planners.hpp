#pragma once

#include <json.hpp>

#include <cassert>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hrrt/errors.hpp"
#include "hrrt/gridworld.hpp"
#include "hrrt/image.hpp"
#include "hrrt/random.hpp"
#include "hrrt/sampling.hpp"
#include "hrrt/tree.hpp"

namespace hrrt {

enum class PlannerMode { rrt, rrt_star, heatmap_rrt_star };

inline std::string_view to_string(PlannerMode m) {
  switch (m) {
    case PlannerMode::rrt: return "rrt";
    case PlannerMode::rrt_star: return "rrt_star";
    case PlannerMode::heatmap_rrt_star: return "heatmap_rrt_star";
  }
  return "rrt";
}

inline PlannerMode parse_planner_mode(std::string_view s) {
  if (s == "rrt") return PlannerMode::rrt;
  if (s == "rrt_star") return PlannerMode::rrt_star;
  if (s == "heatmap_rrt_star") return PlannerMode::heatmap_rrt_star;
  throw ConfigError("unknown planner mode '" + std::string(s) + "'");
}

struct PlannerConfig {
  double step_size = 6.0;
  std::size_t max_iterations = 5000;
  double rewire_radius = 12.0;
  double collision_spacing = kDefaultCollisionSpacing;
  PlannerMode mode = PlannerMode::rrt_star;

  void validate() const {
    if (!(step_size > 0.0)) throw ConfigError("step_size must be positive");
    if (!(rewire_radius >= step_size)) throw ConfigError("rewire_radius must be at least step_size");
    if (max_iterations < 1) throw ConfigError("max_iterations must be at least 1");
    if (!(collision_spacing > 0.0)) throw ConfigError("collision_spacing must be positive");
  }
};

struct Path {
  std::vector<WorldPoint> waypoints;
  double length = 0.0;
};

/// Sum of segment lengths, accumulated from the first waypoint so that it
/// matches the tree's cost-to-come exactly.
inline double path_length(const std::vector<WorldPoint>& pts) {
  double len = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) len += distance(pts[i - 1], pts[i]);
  return len;
}

inline Path make_path(std::vector<WorldPoint> pts) {
  const double len = path_length(pts);
  return {std::move(pts), len};
}

/// Checks every Path invariant against a map and query.
inline std::optional<std::string> check_path(const GridMap& map, const PlanningQuery& q, const Path& path,
                                             double spacing = kDefaultCollisionSpacing) {
  if (path.waypoints.empty()) return "path has no waypoints";
  if (!(path.waypoints.front() == q.start)) return "path does not start at the start state";
  if (!q.in_goal_region(path.waypoints.back())) return "path does not end inside the goal region";
  for (const auto& p : path.waypoints)
    if (!map.contains(p)) return "waypoint outside map bounds";
  for (std::size_t i = 1; i < path.waypoints.size(); ++i)
    if (!segment_obstacle_free(map, path.waypoints[i - 1], path.waypoints[i], spacing))
      return "segment " + std::to_string(i - 1) + " collides";
  if (std::abs(path_length(path.waypoints) - path.length) > 1e-9 * std::max(1.0, path.length))
    return "stored length disagrees with waypoints";
  if (path.length < distance(q.goal, q.start) - q.goal_radius - 1e-9) return "path shorter than the lower bound";
  return std::nullopt;
}

struct PlanResult {
  Tree tree;
  std::optional<Path> initial_path;
  std::optional<Path> best_path;
  std::size_t iterations_used = 0;
  std::optional<std::size_t> nodes_at_first_solution;
  double wall_time_s = 0.0;
  PlannerMode mode = PlannerMode::rrt;
};

// ───────────────────────── primitives ─────────────────────────

inline std::size_t nearest(const Tree& tree, const WorldPoint& x) { return tree.nearest(x); }

inline std::vector<std::size_t> near(const Tree& tree, const WorldPoint& x, double radius) {
  return tree.near(x, radius);
}

inline WorldPoint steer(const WorldPoint& from, const WorldPoint& to, double step_size) {
  const double d = distance(from, to);
  if (d <= step_size) return to;
  const double s = step_size / d;
  return {from.x + s * (to.x - from.x), from.y + s * (to.y - from.y)};
}

/// Hooks for tests and instrumentation; the default does nothing.
struct NullObserver {
  void on_rewire(std::size_t /*vertex*/, double /*old_cost*/, double /*new_cost*/) {}
  void on_iteration(std::size_t /*iteration*/, const Tree& /*tree*/, double /*best_length*/) {}
};

namespace detail {
using Clock = std::chrono::steady_clock;
inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}
}  // namespace detail

// ───────────────────────── RRT ─────────────────────────

/// Grows a tree by sample/nearest/steer/collision-check and stops at the first
/// vertex inside the goal region.
template <typename Sampler>
PlanResult rrt_plan(const GridMap& map, const PlanningQuery& query, const PlannerConfig& cfg, Sampler&& sampler,
                    Rng& rng) {
  cfg.validate();
  validate_query(map, query);
  const auto t0 = detail::Clock::now();
  PlanResult res{Tree(query.start, map.width(), map.height()), {}, {}, 0, {}, 0.0, PlannerMode::rrt};
  if (query.in_goal_region(query.start)) {
    res.initial_path = res.best_path = make_path({query.start});
    res.nodes_at_first_solution = 1;
    res.wall_time_s = detail::seconds_since(t0);
    return res;
  }
  Tree& tree = res.tree;
  for (std::size_t i = 1; i <= cfg.max_iterations; ++i) {
    res.iterations_used = i;
    const WorldPoint x_rand = sampler(rng);
    const std::size_t v_nearest = tree.nearest(x_rand);
    const WorldPoint x_nearest = tree[v_nearest].point;
    const WorldPoint x_new = steer(x_nearest, x_rand, cfg.step_size);
    if (x_new == x_nearest) continue;
    if (!segment_obstacle_free(map, x_nearest, x_new, cfg.collision_spacing)) continue;
    const std::size_t v_new = tree.add(x_new, v_nearest);
    if (query.in_goal_region(x_new)) {
      res.initial_path = res.best_path = make_path(tree.path_to(v_new));
      res.nodes_at_first_solution = tree.size();
      break;
    }
  }
  res.wall_time_s = detail::seconds_since(t0);
  return res;
}

// ───────────────────────── RRT* ─────────────────────────

/// Anytime RRT* with choose-parent and rewiring over a fixed-radius
/// neighborhood. Rewired costs propagate through the moved subtree. Runs the
/// whole iteration budget; reports the first and the best goal-reaching paths.
/// The sampler alone distinguishes plain RRT* from heatmap-guided RRT*.
template <typename Sampler, typename Observer = NullObserver>
PlanResult rrt_star_plan(const GridMap& map, const PlanningQuery& query, const PlannerConfig& cfg, Sampler&& sampler,
                         Rng& rng, Observer&& observer = {}) {
  cfg.validate();
  validate_query(map, query);
  const auto t0 = detail::Clock::now();
  PlanResult res{Tree(query.start, map.width(), map.height()), {}, {}, 0, {}, 0.0, cfg.mode};
  Tree& tree = res.tree;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> goal_vertices;
  std::size_t best_goal = kNoParent;
  if (query.in_goal_region(query.start)) {
    goal_vertices.push_back(0);
    best_goal = 0;
    res.initial_path = make_path({query.start});
    res.nodes_at_first_solution = 1;
  }

  // Collision results for the current neighborhood: -1 unknown, 0 blocked, 1 free.
  std::vector<signed char> edge_free;

  for (std::size_t i = 1; i <= cfg.max_iterations; ++i) {
    res.iterations_used = i;
    const WorldPoint x_rand = sampler(rng);
    const std::size_t v_nearest = tree.nearest(x_rand);
    const WorldPoint x_nearest = tree[v_nearest].point;
    const WorldPoint x_new = steer(x_nearest, x_rand, cfg.step_size);

    if (!(x_new == x_nearest) && segment_obstacle_free(map, x_nearest, x_new, cfg.collision_spacing)) {
      const auto neighbors = tree.near(x_new, cfg.rewire_radius);
      edge_free.assign(neighbors.size(), -1);
      auto free_edge = [&](std::size_t k) {
        if (edge_free[k] < 0)
          edge_free[k] = segment_obstacle_free(map, tree[neighbors[k]].point, x_new, cfg.collision_spacing) ? 1 : 0;
        return edge_free[k] == 1;
      };

      // Choose parent.
      std::size_t parent = v_nearest;
      double parent_cost = tree[v_nearest].cost + distance(x_nearest, x_new);
      for (std::size_t k = 0; k < neighbors.size(); ++k) {
        const std::size_t u = neighbors[k];
        if (u == v_nearest) {
          edge_free[k] = 1;
          continue;
        }
        const double c = tree[u].cost + distance(tree[u].point, x_new);
        if ((c < parent_cost || (c == parent_cost && u < parent)) && free_edge(k)) parent = u, parent_cost = c;
      }
      const std::size_t v_new = tree.add(x_new, parent);

      // Rewire.
      for (std::size_t k = 0; k < neighbors.size(); ++k) {
        const std::size_t u = neighbors[k];
        if (u == parent) continue;
        const double via_new = tree[v_new].cost + distance(x_new, tree[u].point);
        if (via_new < tree[u].cost && free_edge(k)) {
          const double old_cost = tree[u].cost;
          tree.reparent(u, v_new);
          observer.on_rewire(u, old_cost, tree[u].cost);
        }
      }

      if (query.in_goal_region(x_new)) {
        goal_vertices.push_back(v_new);
        if (!res.initial_path) {
          res.initial_path = make_path(tree.path_to(v_new));
          res.nodes_at_first_solution = tree.size();
        }
      }
    }

    double best_cost = kInf;
    for (std::size_t g : goal_vertices)
      if (tree[g].cost < best_cost) best_cost = tree[g].cost, best_goal = g;
    observer.on_iteration(i, tree, best_cost);

#ifndef NDEBUG
    if (i % 1000 == 0) assert(!check_tree(tree));
#endif
  }

  if (best_goal != kNoParent) res.best_path = make_path(tree.path_to(best_goal));
  res.wall_time_s = detail::seconds_since(t0);
  return res;
}

/// Heatmap-guided RRT*: builds the sampling distribution from the heatmap and
/// runs RRT* with the hybrid sampler.
template <typename Observer = NullObserver>
PlanResult cgan_rrt_star_plan(const GridMap& map, const PlanningQuery& query, PlannerConfig cfg,
                              const Heatmap& heatmap, const SamplerConfig& sampler_cfg, Rng& rng,
                              Observer&& observer = {}) {
  const auto t0 = detail::Clock::now();
  const auto dist = build_distribution(heatmap, map);
  cfg.mode = PlannerMode::heatmap_rrt_star;
  auto res = rrt_star_plan(map, query, cfg, HybridSampler(dist, map, sampler_cfg), rng,
                           std::forward<Observer>(observer));
  res.wall_time_s = detail::seconds_since(t0);
  return res;
}

// ───────────────────────── output ─────────────────────────

/// Result record. Waypoints are those of the best path when one exists.
inline nlohmann::json plan_result_to_json(const PlanResult& r, const std::string& map_id, std::uint64_t seed,
                                          bool include_wall_time = true) {
  nlohmann::json j;
  j["map_id"] = map_id;
  j["mode"] = std::string(to_string(r.mode));
  j["seed"] = seed;
  j["iterations"] = r.iterations_used;
  j["nodes_at_first_solution"] =
      r.nodes_at_first_solution ? nlohmann::json(*r.nodes_at_first_solution) : nlohmann::json(nullptr);
  if (include_wall_time) j["wall_time_s"] = r.wall_time_s;
  j["initial_length"] = r.initial_path ? nlohmann::json(r.initial_path->length) : nlohmann::json(nullptr);
  j["best_length"] = r.best_path ? nlohmann::json(r.best_path->length) : nlohmann::json(nullptr);
  auto pts = nlohmann::json::array();
  if (r.best_path)
    for (const auto& p : r.best_path->waypoints) pts.push_back({p.x, p.y});
  j["waypoints"] = std::move(pts);
  return j;
}

inline std::vector<WorldPoint> waypoints_from_json(const nlohmann::json& j) {
  std::vector<WorldPoint> out;
  for (const auto& p : j.at("waypoints")) out.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return out;
}

inline void draw_segment(Image& img, const WorldPoint& a, const WorldPoint& b, Rgb color) {
  const double len = distance(a, b);
  const auto steps = std::max<long>(1, static_cast<long>(std::ceil(len / 0.25)));
  for (long i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    const auto c = cell_of({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
    if (c.x >= 0 && c.y >= 0 && c.x < img.width && c.y < img.height) img.set_rgb(c.x, c.y, color);
  }
}

/// Map, optional heatmap support, tree edges, waypoint polyline, markers.
inline Image render_plan_image(const GridMap& map, const PlanningQuery& q, const Tree* tree,
                               const std::vector<WorldPoint>& waypoints, const Heatmap* heatmap = nullptr) {
  Image img = render_map_image(map);
  if (heatmap)
    for (int y = 0; y < map.height(); ++y)
      for (int x = 0; x < map.width(); ++x)
        if (heatmap->at(x, y) > 0.0 && map.cell_free(x, y)) img.set_rgb(x, y, colors::kPathRegion);
  if (tree)
    for (std::size_t v = 1; v < tree->size(); ++v)
      draw_segment(img, (*tree)[(*tree)[v].parent].point, (*tree)[v].point, colors::kTreeEdge);
  paint_query_markers(img, map, q);
  for (std::size_t i = 1; i < waypoints.size(); ++i) draw_segment(img, waypoints[i - 1], waypoints[i], colors::kPath);
  return img;
}

}  // namespace hrrt
