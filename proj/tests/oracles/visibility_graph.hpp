#pragma once

// Exact shortest paths among axis-aligned rectangular obstacles, by Dijkstra
// over the visibility graph of {start, goal, rectangle corners}. Independent
// of the library's collision checker: visibility is decided analytically.

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <utility>
#include <vector>

namespace oracle {

struct Pt {
  double x, y;
};

/// Obstacle covering [x0, x1) x [y0, y1) in cell units.
struct Rect {
  double x0, y0, x1, y1;
};

inline double dist(Pt a, Pt b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// True when the open segment a-b passes through the interior of r. Sliding
/// along an edge or touching a corner is allowed.
inline bool crosses_interior(Pt a, Pt b, const Rect& r) {
  // Liang-Barsky clip against the closed rectangle.
  double t0 = 0.0, t1 = 1.0;
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {a.x - r.x0, r.x1 - a.x, a.y - r.y0, r.y1 - a.y};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;
      continue;
    }
    const double t = q[i] / p[i];
    if (p[i] < 0.0)
      t0 = std::max(t0, t);
    else
      t1 = std::min(t1, t);
    if (t0 > t1) return false;
  }
  if (t1 - t0 <= 1e-12) return false;
  const double tm = 0.5 * (t0 + t1);
  const double mx = a.x + tm * dx, my = a.y + tm * dy;
  constexpr double eps = 1e-9;
  return mx > r.x0 + eps && mx < r.x1 - eps && my > r.y0 + eps && my < r.y1 - eps;
}

inline bool visible(Pt a, Pt b, const std::vector<Rect>& obstacles) {
  for (const auto& r : obstacles)
    if (crosses_interior(a, b, r)) return false;
  return true;
}

/// Adds four slabs around [0, width] x [0, height] so paths stay on the map.
/// Obstacles touching the map edge are pushed past it; otherwise a zero-width
/// slit would remain between them and the slab.
inline std::vector<Rect> with_bounds(std::vector<Rect> obstacles, double width, double height) {
  constexpr double big = 1e6;
  for (auto& r : obstacles) {
    if (r.x0 <= 0.0) r.x0 = -big;
    if (r.y0 <= 0.0) r.y0 = -big;
    if (r.x1 >= width) r.x1 = big;
    if (r.y1 >= height) r.y1 = big;
  }
  obstacles.push_back({-big, -big, big, 0.0});
  obstacles.push_back({-big, height, big, big});
  obstacles.push_back({-big, -big, 0.0, big});
  obstacles.push_back({width, -big, big, big});
  return obstacles;
}

/// Shortest obstacle-avoiding distance from start to goal, or +inf.
inline double shortest_path(Pt start, Pt goal, const std::vector<Rect>& obstacles) {
  std::vector<Pt> nodes{start, goal};
  for (const auto& r : obstacles) {
    nodes.push_back({r.x0, r.y0});
    nodes.push_back({r.x1, r.y0});
    nodes.push_back({r.x0, r.y1});
    nodes.push_back({r.x1, r.y1});
  }
  const std::size_t n = nodes.size();
  std::vector<double> d(n, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  d[0] = 0.0;
  pq.push({0.0, 0});
  while (!pq.empty()) {
    const auto [du, u] = pq.top();
    pq.pop();
    if (du > d[u]) continue;
    for (std::size_t v = 0; v < n; ++v) {
      if (v == u || !visible(nodes[u], nodes[v], obstacles)) continue;
      const double nd = du + dist(nodes[u], nodes[v]);
      if (nd < d[v]) {
        d[v] = nd;
        pq.push({nd, v});
      }
    }
  }
  return d[1];
}

/// Shortest distance from start to the open disk of radius r around goal,
/// assuming that disk is obstacle-free: truncate the point-to-point optimum.
inline double shortest_path_to_goal_region(Pt start, Pt goal, double r, const std::vector<Rect>& obstacles) {
  return std::max(0.0, shortest_path(start, goal, obstacles) - r);
}

}  // namespace oracle
