#include <gtest/gtest.h>

#include <boost/math/distributions/binomial.hpp>

#include "test_support.hpp"

using namespace hrrt;
using test_support::map_with_rects;

namespace {

PlannerConfig config(PlannerMode mode, std::size_t iters) {
  PlannerConfig c;
  c.mode = mode;
  c.max_iterations = iters;
  return c;
}

// Records every violation of rewire soundness and anytime monotonicity, and
// runs the full tree check on every iteration.
struct CheckingObserver {
  std::vector<double> last_costs;
  double last_best = INFINITY;
  std::size_t rewires = 0;
  std::vector<std::string> problems;

  void on_rewire(std::size_t v, double old_cost, double new_cost) {
    ++rewires;
    if (!(new_cost < old_cost)) problems.push_back("rewire of " + std::to_string(v) + " did not lower its cost");
  }
  void on_iteration(std::size_t it, const Tree& tree, double best) {
    if (auto err = check_tree(tree)) problems.push_back("iteration " + std::to_string(it) + ": " + *err);
    for (std::size_t v = 0; v < last_costs.size(); ++v)
      if (tree[v].cost > last_costs[v] + 1e-9)
        problems.push_back("cost of " + std::to_string(v) + " rose at iteration " + std::to_string(it));
    if (best > last_best) problems.push_back("best length rose at iteration " + std::to_string(it));
    last_best = best;
    last_costs.resize(tree.size());
    for (std::size_t v = 0; v < tree.size(); ++v) last_costs[v] = tree[v].cost;
  }
};

bool same_tree(const Tree& a, const Tree& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t v = 0; v < a.size(); ++v)
    if (!(a[v].point == b[v].point) || a[v].parent != b[v].parent || a[v].cost != b[v].cost) return false;
  return true;
}

}  // namespace

TEST(Nearest, Examples) {
  Tree t({0, 0}, 32, 32);
  EXPECT_EQ(nearest(t, {9, 9}), 0u);
  Tree t2({0, 0}, 32, 32);
  t2.add({10, 10}, 0);
  EXPECT_EQ(nearest(t2, {1, 1}), 0u);
  Tree t3({0, 0}, 32, 32);
  t3.add({2, 0}, 0);
  EXPECT_EQ(nearest(t3, {1, 0}), 0u);
}

TEST(Nearest, MatchesLinearScan) {
  Rng rng(8);
  const auto m = GridMap::empty(100, 60);
  Tree t(test_support::random_point(m, rng), 100, 60);
  for (int i = 0; i < 3000; ++i) {
    // Lattice points produce many exact ties.
    const WorldPoint p = i % 3 ? test_support::random_point(m, rng)
                               : WorldPoint{std::floor(uniform01(rng) * 100), std::floor(uniform01(rng) * 60)};
    t.add(p, uniform_index(rng, t.size()));
  }
  for (int i = 0; i < 3000; ++i) {
    WorldPoint q = i % 4 ? test_support::random_point(m, rng)
                         : WorldPoint{std::floor(uniform01(rng) * 100) + 0.5, std::floor(uniform01(rng) * 60)};
    if (i % 50 == 0) q = {-20.0 + 140 * uniform01(rng), -20.0 + 100 * uniform01(rng)};
    ASSERT_EQ(nearest(t, q), test_support::brute_nearest(t, q)) << q.x << "," << q.y;
  }
}

TEST(Near, Examples) {
  Tree t({0, 0}, 32, 32);
  t.add({5, 0}, 0);
  t.add({20, 0}, 1);
  EXPECT_EQ(near(t, {1, 0}, 6.0), (std::vector<std::size_t>{0, 1}));
  EXPECT_TRUE(near(t, {1, 0}, 0.0).empty());
  EXPECT_EQ(near(t, {5, 0}, 0.0), (std::vector<std::size_t>{1}));
}

TEST(Near, MatchesLinearScanAndContainsNearest) {
  Rng rng(21);
  const auto m = GridMap::empty(64, 64);
  Tree t(test_support::random_point(m, rng), 64, 64);
  for (int i = 0; i < 2000; ++i) t.add(test_support::random_point(m, rng), uniform_index(rng, t.size()));
  for (int i = 0; i < 500; ++i) {
    const auto q = test_support::random_point(m, rng);
    const double r = 12.0 * uniform01(rng);
    std::vector<std::size_t> expect;
    for (std::size_t v = 0; v < t.size(); ++v)
      if (squared_distance(t[v].point, q) <= r * r) expect.push_back(v);
    const auto got = near(t, q, r);
    ASSERT_EQ(got, expect);
    const auto n = nearest(t, q);
    if (distance(t[n].point, q) <= r) {
      ASSERT_TRUE(std::find(got.begin(), got.end(), n) != got.end());
    }
  }
}

TEST(Steer, Examples) {
  EXPECT_EQ(steer({0, 0}, {10, 0}, 6.0), (WorldPoint{6, 0}));
  EXPECT_EQ(steer({0, 0}, {3, 0}, 6.0), (WorldPoint{3, 0}));
  EXPECT_EQ(steer({4, 4}, {4, 4}, 6.0), (WorldPoint{4, 4}));
  const auto p = steer({1, 2}, {31, 42}, 6.0);
  EXPECT_NEAR(distance({1, 2}, p), 6.0, 1e-12);
}

TEST(Tree, ReparentPropagatesCost) {
  Tree t({0, 0}, 32, 32);
  const auto a = t.add({10, 0}, 0);
  const auto b = t.add({10, 10}, a);
  const auto c = t.add({20, 10}, b);
  const auto d = t.add({0, 10}, 0);
  t.reparent(b, d);
  EXPECT_DOUBLE_EQ(t[b].cost, 20.0);
  EXPECT_DOUBLE_EQ(t[c].cost, 30.0);
  EXPECT_FALSE(check_tree(t));
  EXPECT_TRUE(t.children(a).empty());
  EXPECT_THROW(t.add({40, 0}, 0), BoundsError);
}

TEST(PlannerConfig, Validation) {
  PlannerConfig c;
  EXPECT_NO_THROW(c.validate());
  c.rewire_radius = 5.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.step_size = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.max_iterations = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(parse_planner_mode("rrt_sharp"), ConfigError);
  EXPECT_EQ(parse_planner_mode("heatmap_rrt_star"), PlannerMode::heatmap_rrt_star);
}

TEST(RrtPlan, StartInsideGoalRegion) {
  const auto m = GridMap::empty(32, 32);
  Rng rng(1);
  const auto r = rrt_plan(m, {{10, 10}, {12, 11}, 4.0}, config(PlannerMode::rrt, 100), UniformSampler{&m}, rng);
  ASSERT_TRUE(r.best_path);
  EXPECT_EQ(r.best_path->waypoints.size(), 1u);
  EXPECT_EQ(r.tree.size(), 1u);
}

TEST(RrtPlan, EmptyMapAlwaysSucceeds) {
  const auto m = GridMap::empty(64, 64);
  const PlanningQuery q{{5, 5}, {58, 58}, 4.0};
  int solved = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const auto r = rrt_plan(m, q, config(PlannerMode::rrt, 5000), UniformSampler{&m}, rng);
    if (!r.best_path) continue;
    ++solved;
    EXPECT_FALSE(check_path(m, q, *r.best_path)) << seed;
    EXPECT_FALSE(check_tree(r.tree)) << seed;
    EXPECT_EQ(*r.nodes_at_first_solution, r.tree.size());
  }
  EXPECT_EQ(solved, 100);
}

TEST(RrtPlan, WalledOffGoalFails) {
  const auto m = map_with_rects(64, 64, {{40, 40, 64, 42}, {40, 42, 42, 64}});
  Rng rng(3);
  const auto r = rrt_plan(m, {{5, 5}, {55, 55}, 4.0}, config(PlannerMode::rrt, 3000), UniformSampler{&m}, rng);
  EXPECT_FALSE(r.best_path);
  EXPECT_EQ(r.iterations_used, 3000u);
  EXPECT_FALSE(check_tree(r.tree));
}

TEST(RrtStarPlan, InvariantsEveryIteration) {
  const MapKind kinds[] = {MapKind::blocks, MapKind::gaps, MapKind::clutter};
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto m = generate_random_map(kinds[seed % 3], 64, 64, seed);
    Rng qr(seed + 100);
    const PlanningQuery q{sample_uniform_free(m, qr), sample_uniform_free(m, qr), 4.0};
    CheckingObserver obs;
    Rng rng(seed);
    const auto r = rrt_star_plan(m, q, config(PlannerMode::rrt_star, 1500), UniformSampler{&m}, rng, obs);
    for (const auto& p : obs.problems) ADD_FAILURE() << "seed " << seed << ": " << p;
    EXPECT_EQ(r.iterations_used, 1500u);
    if (r.initial_path) {
      ASSERT_TRUE(r.best_path);
      EXPECT_FALSE(check_path(m, q, *r.initial_path));
      EXPECT_FALSE(check_path(m, q, *r.best_path));
      EXPECT_LE(r.best_path->length, r.initial_path->length);
    }
  }
}

TEST(RrtStarPlan, RewiresHappen) {
  const auto m = GridMap::empty(64, 64);
  CheckingObserver obs;
  Rng rng(4);
  rrt_star_plan(m, {{5, 5}, {58, 58}, 4.0}, config(PlannerMode::rrt_star, 2000), UniformSampler{&m}, rng, obs);
  EXPECT_GT(obs.rewires, 100u);
  EXPECT_TRUE(obs.problems.empty());
}

TEST(RrtStarPlan, Deterministic) {
  const auto m = generate_random_map(MapKind::clutter, 64, 64, 12);
  const PlanningQuery q{{2.5, 2.5}, {60.5, 60.5}, 4.0};
  auto run = [&] {
    Rng rng(77);
    return rrt_star_plan(m, q, config(PlannerMode::rrt_star, 3000), UniformSampler{&m}, rng);
  };
  if (!m.cell_free(2, 2) || !m.cell_free(60, 60)) GTEST_SKIP() << "query cells blocked";
  const auto a = run(), b = run();
  EXPECT_TRUE(same_tree(a.tree, b.tree));
}

TEST(VisibilityOracle, DetourAroundOneRectangle) {
  const std::vector<oracle::Rect> rects{{24, 16, 40, 48}};
  EXPECT_NEAR(oracle::shortest_path({8, 32}, {56, 32}, rects), 16 + 32 * std::sqrt(2.0), 1e-9);
  EXPECT_NEAR(oracle::shortest_path({8, 8}, {56, 8}, rects), 48.0, 1e-9);
  EXPECT_NEAR(oracle::shortest_path_to_goal_region({8, 32}, {56, 32}, 4.0, rects), 12 + 32 * std::sqrt(2.0), 1e-9);
  // A full-height wall splits the map only once the map boundary is an obstacle.
  const std::vector<oracle::Rect> wall{{24, -1, 40, 65}};
  EXPECT_NEAR(oracle::shortest_path({8, 32}, {56, 32}, wall), 2 * std::hypot(16.0, 33.0) + 16, 1e-9);
  EXPECT_TRUE(std::isinf(oracle::shortest_path({8, 32}, {56, 32}, oracle::with_bounds(wall, 64, 64))));
  // A wall flush with the bottom edge leaves no slit underneath it.
  const auto flush = oracle::with_bounds({{20, 0, 28, 44}}, 64, 64);
  EXPECT_NEAR(oracle::shortest_path({6, 10}, {50, 10}, flush), std::hypot(14.0, 34.0) + 8 + std::hypot(22.0, 34.0),
              1e-9);
}

TEST(RrtStarPlan, NotShorterThanVisibilityOracle) {
  const std::vector<oracle::Rect> rects{{24, 12, 40, 52}};
  const auto m = map_with_rects(64, 64, rects);
  const PlanningQuery q{{8.5, 32.5}, {56.5, 32.5}, 4.0};
  const double opt = oracle::shortest_path_to_goal_region({8.5, 32.5}, {56.5, 32.5}, 4.0, rects);
  std::vector<double> lens;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    Rng rng(seed);
    const auto r = rrt_star_plan(m, q, config(PlannerMode::rrt_star, 8000), UniformSampler{&m}, rng);
    ASSERT_TRUE(r.best_path) << seed;
    EXPECT_FALSE(check_path(m, q, *r.best_path));
    // The 0.5-cell collision check may shave an obstacle corner by a few hundredths.
    EXPECT_GE(r.best_path->length, opt - 0.05) << seed;
    lens.push_back(r.best_path->length);
  }
  EXPECT_LE(median(lens), 1.05 * opt) << median(lens) << " vs " << opt;
}

TEST(CganRrtStarPlan, MixZeroReproducesRrtStar) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto m = generate_random_map(static_cast<MapKind>(seed % 3), 64, 64, seed);
    Rng qr(seed);
    const PlanningQuery q{sample_uniform_free(m, qr), sample_uniform_free(m, qr), 4.0};
    std::vector<double> w(m.cell_count(), 0.0);
    for (std::size_t i = 0; i < w.size(); i += 7) w[i] = 1.0 + i % 5;
    const Heatmap h(64, 64, w);
    Rng a(seed), b(seed);
    const auto plain = rrt_star_plan(m, q, config(PlannerMode::rrt_star, 2000), UniformSampler{&m}, a);
    const auto guided = cgan_rrt_star_plan(m, q, config(PlannerMode::rrt_star, 2000), h, {0.0, seed}, b);
    EXPECT_TRUE(same_tree(plain.tree, guided.tree)) << seed;
    EXPECT_EQ(guided.mode, PlannerMode::heatmap_rrt_star);
  }
}

TEST(CganRrtStarPlan, InfeasibleHeatmapWithFullMix) {
  // Heatmap lies only in a pocket cut off from the start.
  const auto m = map_with_rects(64, 64, {{40, 0, 42, 30}, {40, 30, 64, 32}});
  std::vector<double> w(m.cell_count(), 0.0);
  for (int y = 5; y < 25; ++y)
    for (int x = 45; x < 60; ++x) w[m.index(x, y)] = 1.0;
  Rng rng(2);
  const PlanningQuery q{{5, 50}, {55, 55}, 4.0};
  const auto r = cgan_rrt_star_plan(m, q, config(PlannerMode::heatmap_rrt_star, 2000), Heatmap(64, 64, w),
                                    {1.0, 0}, rng);
  EXPECT_EQ(r.iterations_used, 2000u);
  EXPECT_FALSE(check_tree(r.tree));
  if (r.best_path) {
    EXPECT_FALSE(check_path(m, q, *r.best_path));
  }
}

TEST(CganRrtStarPlan, EmptyDistributionPropagates) {
  const auto m = map_with_rects(32, 32, {{0, 0, 4, 4}});
  std::vector<double> w(m.cell_count(), 0.0);
  w[m.index(1, 1)] = 1.0;
  Rng rng(0);
  EXPECT_THROW(cgan_rrt_star_plan(m, {{10, 10}, {25, 25}, 4.0}, config(PlannerMode::heatmap_rrt_star, 10),
                                  Heatmap(32, 32, w), {}, rng),
               EmptyDistributionError);
}

// Two-sided sign test on nodes at first solution; a uniform heatmap must not
// make a detectable difference.
TEST(CganRrtStarPlan, UniformHeatmapIndistinguishableFromRrtStar) {
  const auto m = generate_random_map(MapKind::blocks, 64, 64, 21);
  Rng qr(5);
  std::optional<PlanningQuery> q;
  while (!q) {
    const auto s = sample_uniform_free(m, qr), g = sample_uniform_free(m, qr);
    if (distance(s, g) > 40) q = PlanningQuery{s, g, 4.0};
  }
  const auto h = Heatmap::uniform(64, 64);
  int plus = 0, minus = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng a(seed), b(seed);
    const auto u = rrt_star_plan(m, *q, config(PlannerMode::rrt_star, 3000), UniformSampler{&m}, a);
    const auto g = cgan_rrt_star_plan(m, *q, config(PlannerMode::heatmap_rrt_star, 3000), h, {0.5, seed}, b);
    const auto nu = u.nodes_at_first_solution.value_or(u.tree.size());
    const auto ng = g.nodes_at_first_solution.value_or(g.tree.size());
    plus += ng < nu;
    minus += ng > nu;
  }
  const int n = plus + minus;
  boost::math::binomial dist(n, 0.5);
  const double p = std::min(1.0, 2 * boost::math::cdf(dist, std::min(plus, minus)));
  EXPECT_GT(p, 0.05) << plus << " vs " << minus;
}

TEST(PlanOutput, JsonAndRender) {
  const auto m = GridMap::empty(32, 32);
  const PlanningQuery q{{3, 3}, {28, 28}, 4.0};
  Rng rng(1);
  const auto r = rrt_star_plan(m, q, config(PlannerMode::rrt_star, 500), UniformSampler{&m}, rng);
  ASSERT_TRUE(r.best_path);
  const auto j = plan_result_to_json(r, "m0", 1, false);
  EXPECT_FALSE(j.contains("wall_time_s"));
  EXPECT_EQ(j.at("mode"), "rrt_star");
  EXPECT_EQ(j.at("iterations"), 500);
  EXPECT_EQ(waypoints_from_json(j), r.best_path->waypoints);
  EXPECT_TRUE(plan_result_to_json(r, "m0", 1).contains("wall_time_s"));

  const auto img = render_plan_image(m, q, &r.tree, r.best_path->waypoints);
  EXPECT_EQ(img.width, 32);
  bool path_pixel = false;
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) path_pixel |= img.rgb(x, y) == colors::kPath;
  EXPECT_TRUE(path_pixel);
}
