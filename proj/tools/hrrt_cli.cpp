// Command-line front end: map and dataset generation, planning, benchmarking,
// heatmap evaluation and rendering.

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "hrrt/hrrt.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Bad flag values detected after parsing. Maps to exit code 1.
struct UsageError : hrrt::Error {
  using Error::Error;
};

void configure_logging() {
  auto logger = spdlog::stderr_logger_mt("hrrt");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("HEATMAP_RRT_LOG");
  const std::string level = env ? env : "info";
  if (level == "error")
    spdlog::set_level(spdlog::level::err);
  else if (level == "debug")
    spdlog::set_level(spdlog::level::debug);
  else
    spdlog::set_level(spdlog::level::info);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
  } else {
    hrrt::write_file(out_path, text);
  }
}

json read_json(const fs::path& p) { return json::parse(hrrt::read_file(p)); }

/// Sibling files of a map image: "<dir>/<id>_input.png" or "<dir>/<id>.png"
/// pairs with "<dir>/<id>.json" and "<dir>/<id>_heat.png".
struct MapFiles {
  std::string id;
  fs::path image, sidecar, heat;
};

MapFiles map_files(const fs::path& image) {
  std::string id = image.stem().string();
  const std::string suffix = "_input";
  if (id.size() > suffix.size() && id.ends_with(suffix)) id.resize(id.size() - suffix.size());
  const auto dir = image.parent_path();
  return {id, image, dir / (id + ".json"), dir / (id + "_heat.png")};
}

/// Loads a map from a PNG (query from the sidecar when present, else from the
/// markers) or regenerates it from a sidecar JSON of a generated kind.
std::pair<hrrt::GridMap, std::optional<hrrt::PlanningQuery>> load_map(const fs::path& path,
                                                                     const std::string& query_path) {
  std::optional<hrrt::PlanningQuery> query;
  if (!query_path.empty()) query = hrrt::metadata_from_json(read_json(query_path)).query;
  if (path.extension() == ".json") {
    const auto meta = hrrt::metadata_from_json(read_json(path));
    auto map = hrrt::generate_random_map(meta.kind, meta.width, meta.height, meta.seed);
    return {std::move(map), query ? query : meta.query};
  }
  auto decoded = hrrt::decode_map_image(hrrt::read_file(path));
  if (!query) {
    const auto files = map_files(path);
    if (fs::exists(files.sidecar))
      query = hrrt::metadata_from_json(read_json(files.sidecar)).query;
    else
      query = decoded.query;
  }
  return {std::move(decoded.map), query};
}

struct PlannerFlags {
  std::size_t iterations = 5000;
  double step = 6.0;
  double rewire_radius = 12.0;
  double spacing = hrrt::kDefaultCollisionSpacing;
  double mix = hrrt::kDefaultMixProbability;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--iters", iterations, "Iteration budget")->capture_default_str();
    cmd->add_option("--step", step, "Steer step size (cells)")->capture_default_str();
    cmd->add_option("--rewire-radius", rewire_radius, "RRT* neighborhood radius")->capture_default_str();
    cmd->add_option("--spacing", spacing, "Collision-check sample spacing")->capture_default_str();
    cmd->add_option("--mix", mix, "Probability of drawing from the heatmap")->capture_default_str();
  }

  [[nodiscard]] hrrt::PlannerConfig config(hrrt::PlannerMode mode) const {
    hrrt::PlannerConfig cfg{step, iterations, rewire_radius, spacing, mode};
    try {
      cfg.validate();
      hrrt::SamplerConfig{mix, 0}.validate();
    } catch (const hrrt::ConfigError& e) {
      throw UsageError(e.what());
    }
    return cfg;
  }
};

// ───────────────────────── gen-maps ─────────────────────────

struct GenMapsArgs {
  std::string kinds = "blocks,gaps,clutter";
  std::size_t count = 1;
  int width = hrrt::kDefaultMapSide, height = hrrt::kDefaultMapSide;
  std::uint64_t seed = 0;
  std::string out;
};

std::vector<hrrt::MapKind> parse_kinds(const std::string& list) {
  std::vector<hrrt::MapKind> kinds;
  try {
    for (const auto& k : split_list(list)) {
      kinds.push_back(hrrt::parse_map_kind(k));
      if (kinds.back() == hrrt::MapKind::custom) throw hrrt::ConfigError("custom maps cannot be generated");
    }
  } catch (const hrrt::ConfigError& e) {
    throw UsageError(e.what());
  }
  if (kinds.empty()) throw UsageError("no map kinds given");
  return kinds;
}

int run_gen_maps(const GenMapsArgs& a) {
  const auto kinds = parse_kinds(a.kinds);
  if (a.width < hrrt::kMinMapSide || a.height < hrrt::kMinMapSide) throw UsageError("maps must be at least 16x16");
  fs::create_directories(a.out);
  for (std::size_t i = 0; i < a.count; ++i) {
    const auto seed = hrrt::derive_seed(a.seed, i);
    const auto map = hrrt::generate_random_map(kinds[i % kinds.size()], a.width, a.height, seed);
    hrrt::Rng rng(hrrt::splitmix64(seed));
    auto query = hrrt::place_query(map, rng);
    if (!query) {
      spdlog::info("map {}: no well-separated start/goal, using the nearest draw", i);
      query = hrrt::PlanningQuery{hrrt::sample_uniform_free(map, rng), hrrt::sample_uniform_free(map, rng)};
    }
    const auto id = "map_" + hrrt::pair_id(i);
    hrrt::write_file(fs::path(a.out) / (id + ".png"), hrrt::encode_map_image(map, query));
    hrrt::write_file(fs::path(a.out) / (id + ".json"), hrrt::to_json_value(hrrt::make_metadata(map, *query)).dump(2) + "\n");
  }
  spdlog::info("wrote {} maps to {}", a.count, a.out);
  return 0;
}

// ───────────────────────── gen-dataset ─────────────────────────

struct GenDatasetArgs {
  std::size_t pairs = 10;
  std::string kinds = "blocks,gaps,clutter";
  int width = hrrt::kDefaultMapSide, height = hrrt::kDefaultMapSide;
  std::size_t paths = hrrt::kPathsPerMap;
  std::size_t budget = hrrt::kDefaultGroundTruthBudget;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  std::string out;
};

int run_gen_dataset(const GenDatasetArgs& a) {
  hrrt::DatasetOptions opt;
  opt.n_pairs = a.pairs;
  opt.kinds = parse_kinds(a.kinds);
  opt.width = a.width;
  opt.height = a.height;
  opt.paths_per_pair = a.paths;
  opt.budget = a.budget;
  opt.base_seed = a.seed;
  opt.jobs = a.jobs;
  if (a.pairs < 1 || a.paths < 1 || a.budget < 1) throw UsageError("--pairs, --paths and --budget must be positive");
  if (a.width < hrrt::kMinMapSide || a.height < hrrt::kMinMapSide) throw UsageError("maps must be at least 16x16");
  const auto manifest = hrrt::generate_dataset(opt, a.out);
  spdlog::info("wrote {} pairs to {}", manifest.at("pairs").size(), a.out);
  return 0;
}

// ───────────────────────── plan ─────────────────────────

struct PlanArgs {
  std::string mode = "rrt_star";
  std::string map, query, heatmap, out, render, map_id;
  std::uint64_t seed = 0;
  bool omit_timing = false;
  PlannerFlags planner;
};

int run_plan(const PlanArgs& a) {
  hrrt::PlannerMode mode;
  try {
    mode = hrrt::parse_planner_mode(a.mode);
  } catch (const hrrt::ConfigError& e) {
    throw UsageError(e.what());
  }
  const auto cfg = a.planner.config(mode);
  auto [map, query] = load_map(a.map, a.query);
  if (!query) throw hrrt::Error("no start/goal: pass --query or use a map image with markers");
  const std::string map_id = a.map_id.empty() ? map_files(a.map).id : a.map_id;

  std::optional<hrrt::Heatmap> heat;
  if (mode == hrrt::PlannerMode::heatmap_rrt_star) {
    if (a.heatmap.empty()) throw UsageError("--heatmap is required for heatmap_rrt_star");
    heat = hrrt::load_heatmap_file(a.heatmap);
  }

  hrrt::Rng rng(a.seed);
  const auto result = [&] {
    switch (mode) {
      case hrrt::PlannerMode::rrt: return hrrt::rrt_plan(map, *query, cfg, hrrt::UniformSampler{&map}, rng);
      case hrrt::PlannerMode::rrt_star: return hrrt::rrt_star_plan(map, *query, cfg, hrrt::UniformSampler{&map}, rng);
      case hrrt::PlannerMode::heatmap_rrt_star:
        return hrrt::cgan_rrt_star_plan(map, *query, cfg, *heat, hrrt::SamplerConfig{a.planner.mix, a.seed}, rng);
    }
    throw hrrt::InternalError("unhandled mode");
  }();

  emit(hrrt::plan_result_to_json(result, map_id, a.seed, !a.omit_timing).dump(2) + "\n", a.out);
  if (!a.render.empty()) {
    const std::vector<hrrt::WorldPoint> pts = result.best_path ? result.best_path->waypoints : std::vector<hrrt::WorldPoint>{};
    hrrt::write_file(a.render, hrrt::encode_png(hrrt::render_plan_image(map, *query, &result.tree, pts,
                                                                        heat ? &*heat : nullptr)));
  }
  return 0;
}

// ───────────────────────── benchmark ─────────────────────────

struct BenchmarkArgs {
  std::string dataset;
  std::vector<std::string> maps;
  std::string planners = "rrt_star,heatmap_rrt_star";
  std::string heatmap_source = "oracle";
  std::string heatmap_dir;
  std::size_t trials = 5;
  std::size_t gt_paths = hrrt::kPathsPerMap;
  std::size_t gt_budget = hrrt::kDefaultGroundTruthBudget;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  std::string csv, summary;
  PlannerFlags planner;
};

int run_benchmark(const BenchmarkArgs& a) {
  if (a.trials < 1) throw UsageError("--trials must be positive");
  hrrt::HeatmapSource source;
  if (a.heatmap_source == "oracle")
    source = hrrt::HeatmapSource::oracle;
  else if (a.heatmap_source == "model")
    source = hrrt::HeatmapSource::model;
  else
    throw UsageError("--heatmap-source must be oracle or model");

  std::vector<hrrt::BenchmarkPlanner> planners;
  for (const auto& name : split_list(a.planners)) {
    hrrt::PlannerMode mode;
    try {
      mode = hrrt::parse_planner_mode(name);
    } catch (const hrrt::ConfigError& e) {
      throw UsageError(e.what());
    }
    const auto src = mode == hrrt::PlannerMode::heatmap_rrt_star ? source : hrrt::HeatmapSource::none;
    planners.push_back({name, a.planner.config(mode), src, a.planner.mix});
  }
  if (planners.empty()) throw UsageError("no planners given");
  const bool wants_heat = source == hrrt::HeatmapSource::oracle &&
                          std::any_of(planners.begin(), planners.end(),
                                      [](const auto& p) { return p.heatmap != hrrt::HeatmapSource::none; });

  std::vector<fs::path> images;
  if (!a.dataset.empty())
    for (const auto& id : hrrt::manifest_ids(a.dataset)) images.push_back(fs::path(a.dataset) / "maps" / (id + "_input.png"));
  for (const auto& m : a.maps) images.emplace_back(m);
  if (images.empty()) throw UsageError("give --dataset or at least one --map");

  std::vector<hrrt::BenchmarkMap> maps;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto files = map_files(images[i]);
    auto [map, query] = load_map(images[i], "");
    if (!query) throw hrrt::Error("map " + files.id + " has no start/goal");
    hrrt::BenchmarkMap bm{files.id, std::move(map), *query, std::nullopt, std::nullopt};
    if (wants_heat) {
      if (fs::exists(files.heat)) {
        bm.oracle_heatmap = hrrt::load_heatmap_file(files.heat);
      } else {
        spdlog::info("computing ground-truth heatmap for {}", files.id);
        bm.oracle_heatmap = hrrt::ground_truth_heatmap(bm.map, bm.query, a.gt_paths, a.gt_budget,
                                                       hrrt::derive_seed(a.seed, i)).heatmap;
      }
    }
    if (source == hrrt::HeatmapSource::model) {
      const fs::path dir = a.heatmap_dir.empty() ? images[i].parent_path() : fs::path(a.heatmap_dir);
      bm.model_heatmap = dir / (files.id + "_heat.png");
    }
    maps.push_back(std::move(bm));
  }

  const auto result = hrrt::run_benchmark(maps, planners, a.trials, a.seed, a.jobs);
  for (const auto& e : result.errors) spdlog::error("{} / {} / seed {}: {}", e.map_id, e.planner, e.seed, e.message);
  if (a.csv.empty() && a.summary.empty()) {
    std::cout << hrrt::emit_report(result, "csv");
  } else {
    if (!a.csv.empty()) emit(hrrt::emit_report(result, "csv"), a.csv);
    if (!a.summary.empty()) emit(hrrt::emit_report(result, "json"), a.summary);
  }
  return 0;
}

// ───────────────────────── eval-heatmap ─────────────────────────

struct EvalArgs {
  std::string dataset, heatmap_dir, suffix = "_heat.png", out;
  std::size_t budget = hrrt::kDefaultConnectivityBudget;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
};

int run_eval(const EvalArgs& a) {
  const auto ids = hrrt::manifest_ids(a.dataset);
  const fs::path heat_dir = a.heatmap_dir.empty() ? fs::path(a.dataset) / "maps" : fs::path(a.heatmap_dir);
  std::vector<json> rows(ids.size());
  std::vector<char> ok(ids.size(), 0);
  hrrt::parallel_for(ids.size(), a.jobs, [&](std::size_t i) {
    json row{{"id", ids[i]}};
    try {
      const auto pair = hrrt::load_dataset_pair(a.dataset, ids[i]);
      const auto heat = hrrt::load_heatmap_file(heat_dir / (ids[i] + a.suffix));
      const auto v = hrrt::connectivity_test(pair.map, pair.query, heat, a.budget, hrrt::derive_seed(a.seed, i), ids[i]);
      row["success"] = v.success;
      row["rrt_iterations_used"] = v.rrt_iterations_used;
      row["restricted_free_fraction"] = v.restricted_free_fraction;
      ok[i] = v.success;
    } catch (const std::exception& e) {
      row["success"] = false;
      row["error"] = e.what();
    }
    rows[i] = std::move(row);
  });
  std::size_t passed = 0;
  for (char c : ok) passed += c != 0;
  const json report{{"n", ids.size()},
                    {"successes", passed},
                    {"success_rate", ids.empty() ? 0.0 : static_cast<double>(passed) / ids.size()},
                    {"pairs", rows}};
  emit(report.dump(2) + "\n", a.out);
  spdlog::info("connectivity success {}/{}", passed, ids.size());
  return 0;
}

// ───────────────────────── render ─────────────────────────

struct RenderArgs {
  std::string map, query, heatmap, plan, out;
};

int run_render(const RenderArgs& a) {
  auto [map, query] = load_map(a.map, a.query);
  std::optional<hrrt::Heatmap> heat;
  if (!a.heatmap.empty()) heat = hrrt::load_heatmap_file(a.heatmap);
  std::vector<hrrt::WorldPoint> pts;
  if (!a.plan.empty()) pts = hrrt::waypoints_from_json(read_json(a.plan));
  hrrt::Image img;
  if (query) {
    img = hrrt::render_plan_image(map, *query, nullptr, pts, heat ? &*heat : nullptr);
  } else {
    img = hrrt::render_map_image(map);
    if (heat)
      for (int y = 0; y < map.height(); ++y)
        for (int x = 0; x < map.width(); ++x)
          if (heat->at(x, y) > 0 && map.cell_free(x, y)) img.set_rgb(x, y, hrrt::colors::kPathRegion);
    for (std::size_t i = 1; i < pts.size(); ++i) hrrt::draw_segment(img, pts[i - 1], pts[i], hrrt::colors::kPath);
  }
  hrrt::write_file(a.out, hrrt::encode_png(img));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Heatmap-guided RRT* planning toolkit"};
  app.require_subcommand(1);
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());

  GenMapsArgs gm;
  auto* gen_maps = app.add_subcommand("gen-maps", "Generate random occupancy maps");
  gen_maps->add_option("--kinds", gm.kinds, "Comma list of blocks,gaps,clutter")->capture_default_str();
  gen_maps->add_option("--count", gm.count)->capture_default_str();
  gen_maps->add_option("--width", gm.width)->capture_default_str();
  gen_maps->add_option("--height", gm.height)->capture_default_str();
  gen_maps->add_option("--seed", gm.seed)->capture_default_str();
  gen_maps->add_option("--out", gm.out, "Output directory")->required();

  GenDatasetArgs gd;
  auto* gen_dataset = app.add_subcommand("gen-dataset", "Generate map/ground-truth training pairs");
  gen_dataset->add_option("--pairs", gd.pairs)->capture_default_str();
  gen_dataset->add_option("--kinds", gd.kinds)->capture_default_str();
  gen_dataset->add_option("--width", gd.width)->capture_default_str();
  gen_dataset->add_option("--height", gd.height)->capture_default_str();
  gen_dataset->add_option("--paths", gd.paths, "RRT paths per ground truth")->capture_default_str();
  gen_dataset->add_option("--budget", gd.budget, "RRT iterations per ground-truth run")->capture_default_str();
  gen_dataset->add_option("--seed", gd.seed)->capture_default_str();
  gen_dataset->add_option("--jobs", gd.jobs)->default_val(hw);
  gen_dataset->add_option("--out", gd.out, "Output directory")->required();

  PlanArgs pl;
  auto* plan = app.add_subcommand("plan", "Run one planner on a map");
  plan->add_option("--mode", pl.mode, "rrt, rrt_star or heatmap_rrt_star")->capture_default_str();
  plan->add_option("--map", pl.map, "Map PNG or generated-map sidecar JSON")->required();
  plan->add_option("--query", pl.query, "Sidecar JSON with start/goal/goal_radius");
  plan->add_option("--heatmap", pl.heatmap, "Heatmap PNG (gray or RGB)");
  plan->add_option("--seed", pl.seed)->capture_default_str();
  plan->add_option("--map-id", pl.map_id);
  plan->add_option("--out", pl.out, "Result JSON (default stdout)");
  plan->add_option("--render", pl.render, "Also write a PNG of tree and path");
  plan->add_flag("--omit-timing", pl.omit_timing, "Leave wall_time_s out of the JSON");
  pl.planner.add_to(plan);

  BenchmarkArgs bm;
  auto* bench = app.add_subcommand("benchmark", "Compare planners over maps and seeds");
  bench->add_option("--dataset", bm.dataset, "Dataset directory with manifest.json");
  bench->add_option("--map", bm.maps, "Map PNG (repeatable)");
  bench->add_option("--planners", bm.planners)->capture_default_str();
  bench->add_option("--heatmap-source", bm.heatmap_source, "oracle or model")->capture_default_str();
  bench->add_option("--heatmap-dir", bm.heatmap_dir, "Directory of {id}_heat.png (model mode)");
  bench->add_option("--trials", bm.trials)->capture_default_str();
  bench->add_option("--gt-paths", bm.gt_paths)->capture_default_str();
  bench->add_option("--gt-budget", bm.gt_budget)->capture_default_str();
  bench->add_option("--seed", bm.seed)->capture_default_str();
  bench->add_option("--jobs", bm.jobs)->default_val(hw);
  bench->add_option("--csv", bm.csv, "Records CSV output");
  bench->add_option("--summary", bm.summary, "Summary JSON output");
  bm.planner.add_to(bench);

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval-heatmap", "Connectivity test of heatmaps over a dataset");
  eval->add_option("--dataset", ev.dataset)->required();
  eval->add_option("--heatmap-dir", ev.heatmap_dir, "Directory of predicted heatmaps (default: ground truth)");
  eval->add_option("--suffix", ev.suffix, "Heatmap file suffix after the pair id")->capture_default_str();
  eval->add_option("--budget", ev.budget)->capture_default_str();
  eval->add_option("--seed", ev.seed)->capture_default_str();
  eval->add_option("--jobs", ev.jobs)->default_val(hw);
  eval->add_option("--out", ev.out, "Report JSON (default stdout)");

  RenderArgs rd;
  auto* render = app.add_subcommand("render", "Render a map with optional heatmap and path");
  render->add_option("--map", rd.map, "Map PNG or generated-map sidecar JSON")->required();
  render->add_option("--query", rd.query);
  render->add_option("--heatmap", rd.heatmap);
  render->add_option("--plan", rd.plan, "Plan result JSON");
  render->add_option("--out", rd.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*gen_maps) return run_gen_maps(gm);
    if (*gen_dataset) return run_gen_dataset(gd);
    if (*plan) return run_plan(pl);
    if (*bench) return run_benchmark(bm);
    if (*eval) return run_eval(ev);
    if (*render) return run_render(rd);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 1;
}
