#pragma once

#include <cmath>
#include <vector>

#include "hrrt/hrrt.hpp"
#include "oracles/visibility_graph.hpp"

namespace test_support {

inline hrrt::GridMap map_with_rects(int w, int h, const std::vector<oracle::Rect>& rects) {
  std::vector<std::uint8_t> cells(static_cast<std::size_t>(w) * h, 0);
  for (const auto& r : rects)
    for (int y = static_cast<int>(r.y0); y < static_cast<int>(r.y1); ++y)
      for (int x = static_cast<int>(r.x0); x < static_cast<int>(r.x1); ++x)
        cells[static_cast<std::size_t>(y) * w + x] = 1;
  return hrrt::GridMap(w, h, std::move(cells));
}

inline hrrt::GridMap map_with_cells(int w, int h, const std::vector<hrrt::CellIndex>& obstacles) {
  std::vector<std::uint8_t> cells(static_cast<std::size_t>(w) * h, 0);
  for (auto c : obstacles) cells[static_cast<std::size_t>(c.y) * w + c.x] = 1;
  return hrrt::GridMap(w, h, std::move(cells));
}

/// Per-point supersampling at a fine spacing, written independently of the
/// library's canonical-order loop.
inline bool brute_segment_free(const hrrt::GridMap& m, hrrt::WorldPoint a, hrrt::WorldPoint b, double spacing = 0.1) {
  const double len = std::hypot(b.x - a.x, b.y - a.y);
  const int n = std::max(1, static_cast<int>(std::ceil(len / spacing)));
  for (int i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / n;
    const int cx = std::min(m.width() - 1, static_cast<int>(std::floor(a.x + t * (b.x - a.x))));
    const int cy = std::min(m.height() - 1, static_cast<int>(std::floor(a.y + t * (b.y - a.y))));
    if (!m.cell_free(cx, cy)) return false;
  }
  return true;
}

inline std::size_t brute_nearest(const hrrt::Tree& t, hrrt::WorldPoint x) {
  std::size_t best = 0;
  double bd = INFINITY;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double dx = t[i].point.x - x.x, dy = t[i].point.y - x.y;
    const double d = dx * dx + dy * dy;
    if (d < bd) bd = d, best = i;
  }
  return best;
}

inline hrrt::WorldPoint random_point(const hrrt::GridMap& m, hrrt::Rng& rng) {
  return {hrrt::uniform01(rng) * m.width(), hrrt::uniform01(rng) * m.height()};
}

}  // namespace test_support
