#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "hrrt/errors.hpp"
#include "hrrt/gridworld.hpp"

namespace hrrt {

inline constexpr std::size_t kNoParent = std::numeric_limits<std::size_t>::max();

struct Vertex {
  WorldPoint point;
  std::size_t parent = kNoParent;
  double cost = 0.0;  // path length from the root along parent links
};

/// Rooted search tree. Vertex 0 is the root. Edges are implicit in the parent
/// links. A uniform bucket grid over the map bounds accelerates Nearest/Near;
/// results are identical to a linear scan with lowest-index tie-breaking.
class Tree {
 public:
  Tree(WorldPoint root, int width, int height, double bucket_size = 8.0)
      : width_(width),
        height_(height),
        bucket_(bucket_size),
        nbx_(std::max(1, static_cast<int>(std::ceil(width / bucket_size)))),
        nby_(std::max(1, static_cast<int>(std::ceil(height / bucket_size)))),
        buckets_(static_cast<std::size_t>(nbx_) * nby_) {
    add_vertex(root, kNoParent, 0.0);
  }

  [[nodiscard]] std::size_t size() const { return vertices_.size(); }
  [[nodiscard]] const Vertex& operator[](std::size_t i) const { return vertices_[i]; }
  [[nodiscard]] const std::vector<Vertex>& vertices() const { return vertices_; }
  [[nodiscard]] const std::vector<std::size_t>& children(std::size_t i) const { return children_[i]; }

  /// Appends a vertex attached to `parent`; returns its index.
  std::size_t add(WorldPoint p, std::size_t parent) {
    if (parent >= vertices_.size()) throw InternalError("parent index out of range");
    return add_vertex(p, parent, vertices_[parent].cost + distance(vertices_[parent].point, p));
  }

  /// Moves v under new_parent and recomputes the costs of v's whole subtree.
  void reparent(std::size_t v, std::size_t new_parent) {
    if (v == 0 || v >= vertices_.size() || new_parent >= vertices_.size()) throw InternalError("bad reparent");
    auto& siblings = children_[vertices_[v].parent];
    siblings.erase(std::find(siblings.begin(), siblings.end(), v));
    vertices_[v].parent = new_parent;
    children_[new_parent].push_back(v);

    std::vector<std::size_t> stack{v};
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      const auto& par = vertices_[vertices_[u].parent];
      vertices_[u].cost = par.cost + distance(par.point, vertices_[u].point);
      stack.insert(stack.end(), children_[u].begin(), children_[u].end());
    }
  }

  /// Argmin of Euclidean distance; ties go to the lowest index.
  [[nodiscard]] std::size_t nearest(const WorldPoint& x) const {
    if (!(x.x >= 0 && x.y >= 0 && x.x < width_ && x.y < height_)) return nearest_linear(x);
    const int bx = bucket_x(x.x), by = bucket_y(x.y);
    std::size_t best = kNoParent;
    double best_d2 = std::numeric_limits<double>::infinity();
    auto visit = [&](int cx, int cy) {
      for (std::size_t i : buckets_[static_cast<std::size_t>(cy) * nbx_ + cx]) {
        const double d2 = squared_distance(vertices_[i].point, x);
        if (d2 < best_d2 || (d2 == best_d2 && i < best)) best = i, best_d2 = d2;
      }
    };
    const int max_ring = std::max(nbx_, nby_);
    for (int k = 0; k <= max_ring; ++k) {
      for (int cy = by - k; cy <= by + k; ++cy) {
        if (cy < 0 || cy >= nby_) continue;
        if (cy == by - k || cy == by + k) {
          for (int cx = std::max(0, bx - k); cx <= std::min(nbx_ - 1, bx + k); ++cx) visit(cx, cy);
        } else {
          if (bx - k >= 0) visit(bx - k, cy);
          if (k > 0 && bx + k < nbx_) visit(bx + k, cy);
        }
      }
      // Lower bound on the distance to anything outside the visited square.
      const double inf = std::numeric_limits<double>::infinity();
      const double left = bx - k > 0 ? x.x - (bx - k) * bucket_ : inf;
      const double right = bx + k + 1 < nbx_ ? (bx + k + 1) * bucket_ - x.x : inf;
      const double down = by - k > 0 ? x.y - (by - k) * bucket_ : inf;
      const double up = by + k + 1 < nby_ ? (by + k + 1) * bucket_ - x.y : inf;
      const double bound = std::min({left, right, down, up});
      if (bound == inf) break;
      if (best != kNoParent && best_d2 < bound * bound) break;
    }
    return best;
  }

  /// All vertices with distance <= radius, ascending index.
  [[nodiscard]] std::vector<std::size_t> near(const WorldPoint& x, double radius) const {
    std::vector<std::size_t> out;
    const double r2 = radius * radius;
    const int x0 = bucket_x(x.x - radius), x1 = bucket_x(x.x + radius);
    const int y0 = bucket_y(x.y - radius), y1 = bucket_y(x.y + radius);
    for (int cy = y0; cy <= y1; ++cy)
      for (int cx = x0; cx <= x1; ++cx)
        for (std::size_t i : buckets_[static_cast<std::size_t>(cy) * nbx_ + cx])
          if (squared_distance(vertices_[i].point, x) <= r2) out.push_back(i);
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Waypoints root -> v.
  [[nodiscard]] std::vector<WorldPoint> path_to(std::size_t v) const {
    std::vector<WorldPoint> pts;
    for (std::size_t u = v; u != kNoParent; u = vertices_[u].parent) {
      pts.push_back(vertices_[u].point);
      if (pts.size() > vertices_.size()) throw InternalError("cycle in tree");
    }
    std::reverse(pts.begin(), pts.end());
    return pts;
  }

 private:
  std::size_t add_vertex(WorldPoint p, std::size_t parent, double cost) {
    if (!(p.x >= 0 && p.y >= 0 && p.x < width_ && p.y < height_))
      throw BoundsError("tree vertex outside map bounds");
    const std::size_t idx = vertices_.size();
    vertices_.push_back({p, parent, cost});
    children_.emplace_back();
    if (parent != kNoParent) children_[parent].push_back(idx);
    buckets_[static_cast<std::size_t>(bucket_y(p.y)) * nbx_ + bucket_x(p.x)].push_back(idx);
    return idx;
  }

  [[nodiscard]] std::size_t nearest_linear(const WorldPoint& x) const {
    std::size_t best = 0;
    double best_d2 = squared_distance(vertices_[0].point, x);
    for (std::size_t i = 1; i < vertices_.size(); ++i) {
      const double d2 = squared_distance(vertices_[i].point, x);
      if (d2 < best_d2) best = i, best_d2 = d2;
    }
    return best;
  }

  [[nodiscard]] int bucket_x(double v) const {
    return std::clamp(static_cast<int>(std::floor(v / bucket_)), 0, nbx_ - 1);
  }
  [[nodiscard]] int bucket_y(double v) const {
    return std::clamp(static_cast<int>(std::floor(v / bucket_)), 0, nby_ - 1);
  }

  int width_, height_;
  double bucket_;
  int nbx_, nby_;
  std::vector<Vertex> vertices_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::vector<std::size_t>> buckets_;
};

/// Full structural audit: root shape, parent validity, acyclicity, and cost
/// coherence within `tol`. Returns a description of the first violation.
inline std::optional<std::string> check_tree(const Tree& tree, double tol = 1e-9) {
  if (tree.size() == 0) return "empty tree";
  if (tree[0].parent != kNoParent || tree[0].cost != 0.0) return "root must have no parent and zero cost";
  for (std::size_t v = 1; v < tree.size(); ++v) {
    const auto& vx = tree[v];
    if (vx.parent >= tree.size()) return "vertex " + std::to_string(v) + " has no valid parent";
    const auto& par = tree[vx.parent];
    const double expect = par.cost + distance(par.point, vx.point);
    if (std::abs(expect - vx.cost) > tol) return "cost incoherent at vertex " + std::to_string(v);
    std::size_t steps = 0;
    for (std::size_t u = v; u != 0; u = tree[u].parent)
      if (++steps > tree.size()) return "parent chain from " + std::to_string(v) + " does not reach the root";
  }
  return std::nullopt;
}

}  // namespace hrrt
