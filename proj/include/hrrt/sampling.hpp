#pragma once

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hrrt/errors.hpp"
#include "hrrt/gridworld.hpp"
#include "hrrt/image.hpp"
#include "hrrt/random.hpp"

namespace hrrt {

/// Per-cell nonnegative weights over a map-sized raster with positive total mass.
class Heatmap {
 public:
  Heatmap(int width, int height, std::vector<double> weights) : width_(width), height_(height), w_(std::move(weights)) {
    if (width <= 0 || height <= 0 || w_.size() != static_cast<std::size_t>(width) * height)
      throw ConfigError("heatmap dimensions do not match weight count");
    double mass = 0;
    for (double v : w_) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("heatmap weights must be finite and nonnegative");
      mass += v;
    }
    if (!(mass > 0.0)) throw EmptyDistributionError("heatmap has zero total mass");
  }

  /// Uniform weight 1 on every cell.
  static Heatmap uniform(int width, int height) {
    return Heatmap(width, height, std::vector<double>(static_cast<std::size_t>(width) * height, 1.0));
  }

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] const std::vector<double>& weights() const { return w_; }
  [[nodiscard]] double at(int x, int y) const { return w_[static_cast<std::size_t>(y) * width_ + x]; }
  [[nodiscard]] double max_weight() const { return *std::max_element(w_.begin(), w_.end()); }
  [[nodiscard]] double total_mass() const {
    double m = 0;
    for (double v : w_) m += v;
    return m;
  }
  /// Cells with positive weight.
  [[nodiscard]] std::size_t support_size() const {
    return static_cast<std::size_t>(std::count_if(w_.begin(), w_.end(), [](double v) { return v > 0.0; }));
  }

  friend bool operator==(const Heatmap&, const Heatmap&) = default;

 private:
  int width_;
  int height_;
  std::vector<double> w_;
};

/// Discrete distribution over free cells, sampled by inverse CDF.
class SamplingDistribution {
 public:
  SamplingDistribution(int width, int height, std::vector<std::size_t> cells, std::vector<double> cumulative)
      : width_(width), height_(height), cells_(std::move(cells)), cumulative_(std::move(cumulative)) {}

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] double total_mass() const { return cumulative_.back(); }
  [[nodiscard]] std::size_t support_size() const { return cells_.size(); }
  /// Row-major cell indices with positive probability, ascending.
  [[nodiscard]] const std::vector<std::size_t>& support() const { return cells_; }

  [[nodiscard]] double probability_of_entry(std::size_t k) const {
    const double lo = k == 0 ? 0.0 : cumulative_[k - 1];
    return (cumulative_[k] - lo) / total_mass();
  }

  /// Probability of a row-major cell index; 0 outside the support.
  [[nodiscard]] double probability(std::size_t cell) const {
    const auto it = std::lower_bound(cells_.begin(), cells_.end(), cell);
    if (it == cells_.end() || *it != cell) return 0.0;
    return probability_of_entry(static_cast<std::size_t>(it - cells_.begin()));
  }

  /// Index into support() for a uniform variate u in [0, 1).
  [[nodiscard]] std::size_t locate(double u) const {
    const double target = u * total_mass();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    return std::min(static_cast<std::size_t>(it - cumulative_.begin()), cells_.size() - 1);
  }

 private:
  int width_;
  int height_;
  std::vector<std::size_t> cells_;
  std::vector<double> cumulative_;
};

/// Masks obstacle cells and builds the cumulative table.
inline SamplingDistribution build_distribution(const Heatmap& h, const GridMap& map) {
  if (h.width() != map.width() || h.height() != map.height())
    throw ConfigError("heatmap dimensions do not match the map");
  std::vector<std::size_t> cells;
  std::vector<double> cumulative;
  double running = 0.0;
  const auto& w = h.weights();
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] <= 0.0 || !map.cell_free(i)) continue;
    running += w[i];
    cells.push_back(i);
    cumulative.push_back(running);
  }
  if (cells.empty()) throw EmptyDistributionError("heatmap has no mass on free cells");
  return SamplingDistribution(map.width(), map.height(), std::move(cells), std::move(cumulative));
}

inline constexpr double kDefaultMixProbability = 0.5;

struct SamplerConfig {
  double mix_probability = kDefaultMixProbability;
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (!(mix_probability >= 0.0 && mix_probability <= 1.0))
      throw ConfigError("mix_probability must lie in [0, 1]");
  }
};

inline constexpr long kMaxRejectionTries = 1'000'000;

namespace detail {
inline double below(double v, int limit) {
  return v < limit ? v : std::nextafter(static_cast<double>(limit), 0.0);
}
}  // namespace detail

/// Rejection sampling over the bounding box; uniform over the free area.
inline WorldPoint sample_uniform_free(const GridMap& map, Rng& rng) {
  for (long i = 0; i < kMaxRejectionTries; ++i) {
    const WorldPoint p{detail::below(uniform01(rng) * map.width(), map.width()),
                       detail::below(uniform01(rng) * map.height(), map.height())};
    const auto c = cell_of(p);
    if (map.cell_free(c.x, c.y)) return p;
  }
  throw InternalError("uniform free-space sampling exceeded the rejection cap");
}

/// Inverse-CDF cell choice, then uniform placement within the cell.
inline WorldPoint sample_nonuniform(const SamplingDistribution& d, Rng& rng) {
  const std::size_t cell = d.support()[d.locate(uniform01(rng))];
  const auto cx = static_cast<int>(cell % static_cast<std::size_t>(d.width()));
  const auto cy = static_cast<int>(cell / static_cast<std::size_t>(d.width()));
  return {cx + uniform01(rng), cy + uniform01(rng)};
}

// Sampler objects. A planner calls `sampler(rng)` once per iteration.

struct UniformSampler {
  const GridMap* map;
  WorldPoint operator()(Rng& rng) const { return sample_uniform_free(*map, rng); }
};

struct NonuniformSampler {
  const SamplingDistribution* dist;
  WorldPoint operator()(Rng& rng) const { return sample_nonuniform(*dist, rng); }
};

/// Per call, one coin draw picks the heatmap with probability mix_probability
/// and uniform free space otherwise. The coin has its own stream (seeded from
/// SamplerConfig::rng_seed) so that the point stream drawn from the caller's
/// engine is exactly that of the chosen component sampler; with mix 0 or 1 the
/// hybrid reproduces the pure samplers draw for draw.
class HybridSampler {
 public:
  HybridSampler(const SamplingDistribution& dist, const GridMap& map, const SamplerConfig& cfg)
      : dist_(&dist), map_(&map), mix_(cfg.mix_probability), coin_(splitmix64(cfg.rng_seed ^ 0xC01Aull)) {
    cfg.validate();
    if (dist.width() != map.width() || dist.height() != map.height())
      throw ConfigError("distribution dimensions do not match the map");
  }

  WorldPoint operator()(Rng& rng) {
    if (uniform01(coin_) < mix_) return sample_nonuniform(*dist_, rng);
    return sample_uniform_free(*map_, rng);
  }

 private:
  const SamplingDistribution* dist_;
  const GridMap* map_;
  double mix_;
  Rng coin_;
};

/// Single-call form of the hybrid draw; `coin` supplies the Rand() variate.
inline WorldPoint sample_hybrid(const SamplingDistribution& d, const GridMap& map, const SamplerConfig& cfg, Rng& coin,
                                Rng& rng) {
  if (uniform01(coin) < cfg.mix_probability) return sample_nonuniform(d, rng);
  return sample_uniform_free(map, rng);
}

// ───────────────────────── heatmap exchange format ─────────────────────────

/// Grayscale raster, max weight -> 255, intensity proportional to weight.
inline Image heatmap_to_gray(const Heatmap& h) {
  Image img(h.width(), h.height(), 1);
  const double mx = h.max_weight();
  for (int y = 0; y < h.height(); ++y)
    for (int x = 0; x < h.width(); ++x)
      img.set_gray(x, y, static_cast<std::uint8_t>(std::lround(255.0 * h.at(x, y) / mx)));
  return img;
}

inline Bytes encode_heatmap_png(const Heatmap& h) { return encode_png(heatmap_to_gray(h)); }

inline nlohmann::json heatmap_sidecar(const std::string& map_id) {
  return {{"map_id", map_id}, {"normalization", "max255"}};
}

}  // namespace hrrt
