#include "loco/sim/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "loco/nn/rng.hpp"

namespace loco::sim {

double TerrainMap::height_at(double x, double y) const {
  const double fx = std::clamp((x - origin) / resolution, 0.0, static_cast<double>(cells - 1));
  const double fy = std::clamp((y - origin) / resolution, 0.0, static_cast<double>(cells - 1));
  const int ix = std::min(static_cast<int>(fx), cells - 2);
  const int iy = std::min(static_cast<int>(fy), cells - 2);
  const double tx = fx - ix;
  const double ty = fy - iy;
  const double h00 = heights[static_cast<std::size_t>(ix) * cells + iy];
  const double h10 = heights[static_cast<std::size_t>(ix + 1) * cells + iy];
  const double h01 = heights[static_cast<std::size_t>(ix) * cells + iy + 1];
  const double h11 = heights[static_cast<std::size_t>(ix + 1) * cells + iy + 1];
  return (1 - tx) * ((1 - ty) * h00 + ty * h01) + tx * ((1 - ty) * h10 + ty * h11);
}

double TerrainMap::max_abs_height() const {
  double m = 0.0;
  for (double h : heights) m = std::max(m, std::fabs(h));
  return m;
}

namespace {

double level_fraction(int level) { return static_cast<double>(level) / (kTerrainLevels - 1); }

void fill_incline(TerrainMap& map, double slope) {
  for (int ix = 0; ix < map.cells; ++ix) {
    const double x = map.origin + ix * map.resolution;
    for (int iy = 0; iy < map.cells; ++iy)
      map.heights[static_cast<std::size_t>(ix) * map.cells + iy] = slope * x;
  }
}

void add_rough_noise(TerrainMap& map, double amplitude, double cell, loco::nn::Rng& rng) {
  // noise on a coarser lattice, bilinearly spread onto the grid; the spawn
  // region stays untouched so resets are well defined
  const int lattice = static_cast<int>(std::ceil(map.cells * map.resolution / cell)) + 2;
  std::vector<double> noise(static_cast<std::size_t>(lattice) * lattice);
  for (double& v : noise) v = rng.uniform(-amplitude, amplitude);
  for (int ix = 0; ix < map.cells; ++ix) {
    const double x = map.origin + ix * map.resolution;
    const double fx = (x - map.origin) / cell;
    const int lx = std::min(static_cast<int>(fx), lattice - 2);
    const double tx = fx - lx;
    for (int iy = 0; iy < map.cells; ++iy) {
      const double y = map.origin + iy * map.resolution;
      if (std::fabs(x) < 0.5 && std::fabs(y) < 0.5) continue;
      const double fy = (y - map.origin) / cell;
      const int ly = std::min(static_cast<int>(fy), lattice - 2);
      const double ty = fy - ly;
      const double n00 = noise[static_cast<std::size_t>(lx) * lattice + ly];
      const double n10 = noise[static_cast<std::size_t>(lx + 1) * lattice + ly];
      const double n01 = noise[static_cast<std::size_t>(lx) * lattice + ly + 1];
      const double n11 = noise[static_cast<std::size_t>(lx + 1) * lattice + ly + 1];
      map.heights[static_cast<std::size_t>(ix) * map.cells + iy] +=
          (1 - tx) * ((1 - ty) * n00 + ty * n01) + tx * ((1 - ty) * n10 + ty * n11);
    }
  }
}

void fill_stairs(TerrainMap& map, double rise, double run, double pad) {
  for (int ix = 0; ix < map.cells; ++ix) {
    const double x = map.origin + ix * map.resolution;
    double h = 0.0;
    if (x > pad) h = rise * std::floor((x - pad) / run + 1.0);
    else if (x < -pad) h = -rise * std::floor((-x - pad) / run + 1.0);
    for (int iy = 0; iy < map.cells; ++iy)
      map.heights[static_cast<std::size_t>(ix) * map.cells + iy] = h;
  }
}

void add_blocks(TerrainMap& map, double height, int count, loco::nn::Rng& rng) {
  const double extent = -map.origin;
  for (int b = 0; b < count; ++b) {
    const double cx = rng.uniform(-extent, extent);
    const double cy = rng.uniform(-extent, extent);
    const double sx = rng.uniform(0.3, 1.2);
    const double sy = rng.uniform(0.3, 1.2);
    const double h = rng.uniform(0.5, 1.0) * height * (rng.bernoulli(0.5) ? 1.0 : -1.0);
    // keep the spawn pad clear
    if (std::fabs(cx) < 0.8 + sx / 2 && std::fabs(cy) < 0.8 + sy / 2) continue;
    const int x0 = std::max(0, static_cast<int>((cx - sx / 2 - map.origin) / map.resolution));
    const int x1 = std::min(map.cells - 1, static_cast<int>((cx + sx / 2 - map.origin) / map.resolution));
    const int y0 = std::max(0, static_cast<int>((cy - sy / 2 - map.origin) / map.resolution));
    const int y1 = std::min(map.cells - 1, static_cast<int>((cy + sy / 2 - map.origin) / map.resolution));
    for (int ix = x0; ix <= x1; ++ix)
      for (int iy = y0; iy <= y1; ++iy)
        map.heights[static_cast<std::size_t>(ix) * map.cells + iy] = h;
  }
}

}  // namespace

TerrainMap terrain_generate(TerrainKind kind, int level, std::uint64_t seed,
                            const TerrainConfig& config) {
  if (level < 0 || level >= kTerrainLevels)
    throw std::invalid_argument("terrain level must be in [0, 9]");
  TerrainMap map;
  map.kind = kind;
  map.level = level;
  map.resolution = kind == TerrainKind::Rough ? config.rough_cell : config.resolution;
  map.cells = static_cast<int>(std::round(2.0 * config.extent / map.resolution)) + 1;
  map.origin = -config.extent;
  map.heights.assign(static_cast<std::size_t>(map.cells) * map.cells, 0.0);
  map.friction = config.friction;
  map.restitution = config.restitution;

  loco::nn::Rng rng(loco::nn::Rng::mix(seed, static_cast<std::uint64_t>(kind) * 16 + level));
  const double f = level_fraction(level);
  const double slope = std::tan(kMaxInclineDeg * M_PI / 180.0 * f);

  switch (kind) {
    case TerrainKind::Smooth:
      fill_incline(map, slope);
      break;
    case TerrainKind::Rough:
      fill_incline(map, slope);
      add_rough_noise(map, config.rough_amp_min + f * (config.rough_amp_max - config.rough_amp_min),
                      config.rough_cell, rng);
      break;
    case TerrainKind::Discrete:
      add_blocks(map, config.block_height_min + f * (config.block_height_max - config.block_height_min),
                 config.block_count, rng);
      break;
    case TerrainKind::Stairs:
      fill_stairs(map, config.stair_rise_min + f * (config.stair_rise_max - config.stair_rise_min),
                  config.stair_run, config.stair_pad);
      break;
  }
  return map;
}

const char* terrain_kind_name(TerrainKind kind) {
  switch (kind) {
    case TerrainKind::Smooth:
      return "smooth";
    case TerrainKind::Rough:
      return "rough";
    case TerrainKind::Discrete:
      return "discrete";
    case TerrainKind::Stairs:
      return "stairs";
  }
  return "smooth";
}

TerrainKind terrain_kind_from_name(const std::string& name) {
  if (name == "smooth") return TerrainKind::Smooth;
  if (name == "rough") return TerrainKind::Rough;
  if (name == "discrete") return TerrainKind::Discrete;
  if (name == "stairs") return TerrainKind::Stairs;
  throw std::invalid_argument("unknown terrain kind: " + name);
}

}  // namespace loco::sim
