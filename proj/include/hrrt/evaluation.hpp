#pragma once

#include <boost/math/distributions/chi_squared.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "hrrt/dataset.hpp"
#include "hrrt/errors.hpp"
#include "hrrt/gridworld.hpp"
#include "hrrt/parallel.hpp"
#include "hrrt/planners.hpp"
#include "hrrt/sampling.hpp"

namespace hrrt {

// ───────────────────────── connectivity ─────────────────────────

inline constexpr std::size_t kDefaultConnectivityBudget = 5000;

/// Free space limited to the heatmap support plus the start and goal disks,
/// intersected with the original free space. Empty if nothing remains.
inline std::optional<GridMap> restricted_map(const GridMap& map, const PlanningQuery& q, const Heatmap& h) {
  if (h.width() != map.width() || h.height() != map.height())
    throw ConfigError("heatmap dimensions do not match the map");
  std::vector<std::uint8_t> cells(map.cell_count(), 1);
  for (int y = 0; y < map.height(); ++y)
    for (int x = 0; x < map.width(); ++x)
      if (h.at(x, y) > 0.0) cells[map.index(x, y)] = 0;
  for (const auto& p : {q.start, q.goal})
    for (auto c : disk_cells(map.width(), map.height(), p)) cells[map.index(c.x, c.y)] = 0;
  bool any_free = false;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!map.cell_free(i)) cells[i] = 1;
    any_free |= cells[i] == 0;
  }
  if (!any_free) return std::nullopt;
  return GridMap(map.width(), map.height(), std::move(cells), map.kind(), map.seed());
}

struct ConnectivityVerdict {
  std::string pair_id;
  bool success = false;
  std::size_t rrt_iterations_used = 0;
  double restricted_free_fraction = 0.0;
  std::optional<Path> path;
};

/// Re-plans with RRT inside the restricted free space; success iff a path is found.
inline ConnectivityVerdict connectivity_test(const GridMap& map, const PlanningQuery& q, const Heatmap& h,
                                             std::size_t budget = kDefaultConnectivityBudget, std::uint64_t seed = 0,
                                             std::string pair_id = {}) {
  ConnectivityVerdict v{std::move(pair_id), false, 0, 0.0, std::nullopt};
  const auto restricted = restricted_map(map, q, h);
  if (!restricted) return v;
  v.restricted_free_fraction = restricted->free_fraction();
  if (!restricted->cell_free(cell_of(q.start).x, cell_of(q.start).y) ||
      !restricted->cell_free(cell_of(q.goal).x, cell_of(q.goal).y))
    return v;
  PlannerConfig cfg;
  cfg.mode = PlannerMode::rrt;
  cfg.max_iterations = budget;
  Rng rng(seed);
  auto res = rrt_plan(*restricted, q, cfg, UniformSampler{&*restricted}, rng);
  v.rrt_iterations_used = res.iterations_used;
  v.success = res.best_path.has_value();
  v.path = std::move(res.best_path);
  return v;
}

// ───────────────────────── statistics ─────────────────────────

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct ChiSquareResult {
  double statistic = 0.0;
  std::size_t dof = 0;
  double p_value = 1.0;
};

/// Pearson goodness of fit of counts against cell probabilities. Cells with
/// zero probability must have zero counts (otherwise p = 0).
inline ChiSquareResult chi_square_test(const std::vector<std::size_t>& counts, const std::vector<double>& probs) {
  if (counts.size() != probs.size()) throw ConfigError("chi-square: size mismatch");
  std::size_t total = 0;
  for (auto c : counts) total += c;
  ChiSquareResult r;
  std::size_t cells = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (probs[i] <= 0.0) {
      if (counts[i] > 0) return {std::numeric_limits<double>::infinity(), 0, 0.0};
      continue;
    }
    const double expected = probs[i] * static_cast<double>(total);
    const double d = static_cast<double>(counts[i]) - expected;
    r.statistic += d * d / expected;
    ++cells;
  }
  if (cells < 2) return r;
  r.dof = cells - 1;
  boost::math::chi_squared dist(static_cast<double>(r.dof));
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

// ───────────────────────── benchmark ─────────────────────────

enum class HeatmapSource { none, oracle, model };

struct BenchmarkMap {
  std::string id;
  GridMap map;
  PlanningQuery query;
  std::optional<Heatmap> oracle_heatmap;           // oracle mode
  std::optional<std::filesystem::path> model_heatmap;  // model mode, loaded per run
};

struct BenchmarkPlanner {
  std::string name;
  PlannerConfig config;
  HeatmapSource heatmap = HeatmapSource::none;
  double mix_probability = kDefaultMixProbability;
};

struct BenchmarkRecord {
  std::string map_id;
  std::string planner;
  std::uint64_t seed = 0;
  double time_cost_s = 0.0;
  std::size_t node_count = 0;  // tree size at the first solution, or at exit when unsolved
  std::optional<double> initial_path_length;
  std::optional<double> optimal_path_length;

  friend bool operator==(const BenchmarkRecord&, const BenchmarkRecord&) = default;
};

struct BenchmarkError {
  std::string map_id;
  std::string planner;
  std::uint64_t seed = 0;
  std::string message;
};

struct CellSummary {
  std::string map_id;
  std::string planner;
  double median_time = 0.0;
  double median_nodes = 0.0;
  double median_init_len = 0.0;
  double median_opt_len = 0.0;
};

/// Heatmap planner vs uniform planner over matching (map, seed) runs.
struct PairedSummary {
  std::string heatmap_planner;
  std::string uniform_planner;
  double win_rate_nodes = 0.0;
  double win_rate_init_len = 0.0;
  std::size_t n_pairs = 0;
};

struct BenchmarkResult {
  std::vector<BenchmarkRecord> records;
  std::vector<BenchmarkError> errors;
  std::vector<CellSummary> per_cell;
  std::optional<PairedSummary> paired;
};

inline std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t trial) { return base_seed ^ trial; }

/// Runs one (map, planner, seed) cell. For heatmap planners the measured time
/// includes loading the heatmap and building its distribution.
inline BenchmarkRecord run_benchmark_cell(const BenchmarkMap& m, const BenchmarkPlanner& p, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(seed);
  PlanResult res = [&] {
    if (p.heatmap == HeatmapSource::none) {
      if (p.config.mode == PlannerMode::rrt) return rrt_plan(m.map, m.query, p.config, UniformSampler{&m.map}, rng);
      return rrt_star_plan(m.map, m.query, p.config, UniformSampler{&m.map}, rng);
    }
    std::optional<Heatmap> loaded;
    const Heatmap* h = nullptr;
    if (p.heatmap == HeatmapSource::oracle) {
      if (!m.oracle_heatmap) throw Error("no oracle heatmap for map " + m.id);
      h = &*m.oracle_heatmap;
    } else {
      if (!m.model_heatmap || !std::filesystem::exists(*m.model_heatmap))
        throw Error("missing model heatmap for map " + m.id);
      loaded = load_heatmap_file(*m.model_heatmap);
      h = &*loaded;
    }
    SamplerConfig sc{p.mix_probability, seed};
    return cgan_rrt_star_plan(m.map, m.query, p.config, *h, sc, rng);
  }();
  BenchmarkRecord r;
  r.map_id = m.id;
  r.planner = p.name;
  r.seed = seed;
  r.time_cost_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.node_count = res.nodes_at_first_solution.value_or(res.tree.size());
  if (res.initial_path) r.initial_path_length = res.initial_path->length;
  if (res.best_path) r.optimal_path_length = res.best_path->length;
  return r;
}

inline bool record_order(const BenchmarkRecord& a, const BenchmarkRecord& b) {
  return std::tie(a.map_id, a.planner, a.seed) < std::tie(b.map_id, b.planner, b.seed);
}

inline std::vector<CellSummary> summarize_cells(const std::vector<BenchmarkRecord>& records) {
  std::map<std::pair<std::string, std::string>, std::vector<const BenchmarkRecord*>> groups;
  for (const auto& r : records) groups[{r.map_id, r.planner}].push_back(&r);
  std::vector<CellSummary> out;
  for (const auto& [key, rs] : groups) {
    std::vector<double> t, n, il, ol;
    for (const auto* r : rs) {
      t.push_back(r->time_cost_s);
      n.push_back(static_cast<double>(r->node_count));
      if (r->initial_path_length) il.push_back(*r->initial_path_length);
      if (r->optimal_path_length) ol.push_back(*r->optimal_path_length);
    }
    out.push_back({key.first, key.second, median(t), median(n), median(il), median(ol)});
  }
  return out;
}

/// A heatmap run wins a pair when it solves and the uniform run does not, or
/// both solve and it is strictly better. Pairs where neither solves are skipped.
inline PairedSummary paired_win_rates(const std::vector<BenchmarkRecord>& records, const std::string& heatmap_planner,
                                      const std::string& uniform_planner) {
  std::map<std::pair<std::string, std::uint64_t>, const BenchmarkRecord*> uniform;
  for (const auto& r : records)
    if (r.planner == uniform_planner) uniform[{r.map_id, r.seed}] = &r;
  PairedSummary s{heatmap_planner, uniform_planner, 0.0, 0.0, 0};
  std::size_t node_wins = 0, len_wins = 0;
  for (const auto& h : records) {
    if (h.planner != heatmap_planner) continue;
    const auto it = uniform.find({h.map_id, h.seed});
    if (it == uniform.end()) continue;
    const auto& u = *it->second;
    const bool hs = h.initial_path_length.has_value(), us = u.initial_path_length.has_value();
    if (!hs && !us) continue;
    ++s.n_pairs;
    if (hs && (!us || h.node_count < u.node_count)) ++node_wins;
    if (hs && (!us || *h.initial_path_length < *u.initial_path_length)) ++len_wins;
  }
  if (s.n_pairs > 0) {
    s.win_rate_nodes = static_cast<double>(node_wins) / s.n_pairs;
    s.win_rate_init_len = static_cast<double>(len_wins) / s.n_pairs;
  }
  return s;
}

/// Every (map, planner, trial) cell, seeds base_seed ^ trial shared across
/// planners so that runs pair up. Cell failures are collected, not thrown.
inline BenchmarkResult run_benchmark(const std::vector<BenchmarkMap>& maps, const std::vector<BenchmarkPlanner>& planners,
                                     std::size_t trials, std::uint64_t base_seed, unsigned jobs = 1) {
  if (maps.empty() || planners.empty() || trials < 1)
    throw ConfigError("benchmark needs at least one map, planner and trial");
  for (const auto& p : planners) p.config.validate();
  const std::size_t n = maps.size() * planners.size() * trials;
  std::vector<std::optional<BenchmarkRecord>> slots(n);
  std::vector<std::optional<BenchmarkError>> failures(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    const auto& m = maps[i / (planners.size() * trials)];
    const auto& p = planners[(i / trials) % planners.size()];
    const auto seed = trial_seed(base_seed, i % trials);
    try {
      slots[i] = run_benchmark_cell(m, p, seed);
    } catch (const std::exception& e) {
      failures[i] = BenchmarkError{m.id, p.name, seed, e.what()};
    }
  });

  BenchmarkResult out;
  for (auto& s : slots)
    if (s) out.records.push_back(std::move(*s));
  for (auto& f : failures)
    if (f) out.errors.push_back(std::move(*f));
  std::sort(out.records.begin(), out.records.end(), record_order);
  out.per_cell = summarize_cells(out.records);

  const BenchmarkPlanner* heat = nullptr;
  const BenchmarkPlanner* unif = nullptr;
  for (const auto& p : planners) {
    if (!heat && p.heatmap != HeatmapSource::none) heat = &p;
    if (!unif && p.heatmap == HeatmapSource::none && p.config.mode == PlannerMode::rrt_star) unif = &p;
  }
  if (heat && unif) out.paired = paired_win_rates(out.records, heat->name, unif->name);
  return out;
}

// ───────────────────────── reports ─────────────────────────

inline constexpr std::string_view kCsvHeader = "map_id,planner,seed,time_cost_s,node_count,initial_len,optimal_len";

namespace detail {
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw DecodeError("bad number '" + std::string(s) + "'");
  return v;
}

template <typename Int>
Int parse_int(std::string_view s) {
  Int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw DecodeError("bad integer '" + std::string(s) + "'");
  return v;
}

inline nlohmann::json optional_number(double v) {
  return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v);
}
}  // namespace detail

/// One row per record, sorted by (map, planner, seed); missing lengths are empty fields.
inline std::string records_to_csv(std::vector<BenchmarkRecord> records) {
  std::sort(records.begin(), records.end(), record_order);
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : records) {
    out += r.map_id + ',' + r.planner + ',' + std::to_string(r.seed) + ',' + detail::format_double(r.time_cost_s) +
           ',' + std::to_string(r.node_count) + ',' +
           (r.initial_path_length ? detail::format_double(*r.initial_path_length) : "") + ',' +
           (r.optimal_path_length ? detail::format_double(*r.optimal_path_length) : "") + '\n';
  }
  return out;
}

inline std::vector<BenchmarkRecord> parse_records_csv(std::string_view text) {
  std::vector<BenchmarkRecord> out;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw DecodeError("unexpected CSV header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t pos = 0;
    for (;;) {
      const auto comma = line.find(',', pos);
      f.push_back(line.substr(pos, comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (f.size() != 7) throw DecodeError("CSV row must have 7 fields");
    BenchmarkRecord r;
    r.map_id = f[0];
    r.planner = f[1];
    r.seed = detail::parse_int<std::uint64_t>(f[2]);
    r.time_cost_s = detail::parse_double(f[3]);
    r.node_count = detail::parse_int<std::size_t>(f[4]);
    if (!f[5].empty()) r.initial_path_length = detail::parse_double(f[5]);
    if (!f[6].empty()) r.optimal_path_length = detail::parse_double(f[6]);
    out.push_back(std::move(r));
  }
  return out;
}

inline nlohmann::json summary_to_json(const BenchmarkResult& res) {
  auto cells = nlohmann::json::array();
  for (const auto& c : res.per_cell)
    cells.push_back({{"map", c.map_id},
                     {"planner", c.planner},
                     {"median_time", detail::optional_number(c.median_time)},
                     {"median_nodes", detail::optional_number(c.median_nodes)},
                     {"median_init_len", detail::optional_number(c.median_init_len)},
                     {"median_opt_len", detail::optional_number(c.median_opt_len)}});
  nlohmann::json paired = nullptr;
  if (res.paired)
    paired = {{"heatmap_planner", res.paired->heatmap_planner},
              {"uniform_planner", res.paired->uniform_planner},
              {"win_rate_nodes", res.paired->win_rate_nodes},
              {"win_rate_init_len", res.paired->win_rate_init_len},
              {"n_pairs", res.paired->n_pairs}};
  auto errors = nlohmann::json::array();
  for (const auto& e : res.errors)
    errors.push_back({{"map", e.map_id}, {"planner", e.planner}, {"seed", e.seed}, {"message", e.message}});
  return {{"per_cell", cells}, {"paired", paired}, {"errors", errors}};
}

/// format: "csv" (records) or "json" (summary).
inline std::string emit_report(const BenchmarkResult& res, std::string_view format) {
  if (format == "csv") return records_to_csv(res.records);
  if (format == "json") return summary_to_json(res).dump(2) + "\n";
  throw ConfigError("unknown report format '" + std::string(format) + "'");
}

}  // namespace hrrt
