#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace loco::sim {

enum class TerrainKind { Smooth, Rough, Discrete, Stairs };

inline constexpr int kTerrainLevels = 10;  // difficulty 0..9
inline constexpr double kMaxInclineDeg = 22.0;

struct TerrainConfig {
  double extent = 8.0;            // half-size of the square patch, m
  double resolution = 0.05;       // grid spacing, m
  double rough_cell = 0.10;       // lattice pitch of the rough noise, m
  double rough_amp_min = 0.005;   // noise amplitude at level 0, m
  double rough_amp_max = 0.04;    // noise amplitude at level 9, m
  double stair_run = 0.30;        // tread depth, m
  double stair_rise_min = 0.02;   // riser at level 0, m
  double stair_rise_max = 0.155;  // riser at level 9, m
  double stair_pad = 1.2;         // flat spawn pad radius, m
  double block_height_min = 0.02; // discrete obstacle height at level 0, m
  double block_height_max = 0.14; // at level 9, m
  int block_count = 48;
  double friction = 0.8;
  double restitution = 0.0;
};

struct TerrainMap {
  TerrainKind kind = TerrainKind::Smooth;
  int level = 0;
  double resolution = 0.05;
  int cells = 0;                 // grid is cells x cells
  double origin = 0.0;           // world coordinate of grid index 0 (x and y)
  std::vector<double> heights;   // row-major, index = ix * cells + iy
  double friction = 0.8;
  double restitution = 0.0;

  // bilinear interpolation, clamped to the border outside the patch
  double height_at(double x, double y) const;
  double max_abs_height() const;
};

// Deterministic procedural generation: identical (kind, level, seed, config)
// yields an identical grid. level must be in [0, 9].
TerrainMap terrain_generate(TerrainKind kind, int level, std::uint64_t seed,
                            const TerrainConfig& config = {});

const char* terrain_kind_name(TerrainKind kind);
TerrainKind terrain_kind_from_name(const std::string& name);

}  // namespace loco::sim
