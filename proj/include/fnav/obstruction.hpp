#pragma once

#include "fnav/ground_filter.hpp"
#include "fnav/occupancy.hpp"

#include <span>
#include <vector>

namespace fnav {

/// How a ground column's voxel probabilities collapse to one score.
/// `weighted_mean` is the operating rule; `any_occupied`
/// (1 - prod(1 - p_i)) is kept only for comparison experiments.
enum class ScoreRule { weighted_mean, any_occupied };

struct ObstructionParams {
  int column_voxels = 4;
  std::vector<double> weights = {1.0, 2.0, 2.0, 2.0};
  ScoreRule rule = ScoreRule::weighted_mean;

  void validate() const;
};

/// 2D obstruction-score map over ground cells: score b in [0,1] per cell,
/// the ground heights it was built from, and the map-wide minimum score.
struct ObstructionMap {
  Vec2 origin = Vec2::Zero();
  double cell_size = 0.25;
  int width = 0, height = 0;
  std::vector<double> scores;
  GroundHeightMap ground;
  int column_voxels = 4;
  std::vector<double> weights = {1.0, 2.0, 2.0, 2.0};
  double b_min = 0.0;

  std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(ix) + static_cast<std::size_t>(width) * static_cast<std::size_t>(iy);
  }
  bool contains(const Cell2& c) const {
    return c.x() >= 0 && c.x() < width && c.y() >= 0 && c.y() < height;
  }
  double at(const Cell2& c) const { return scores[index(c.x(), c.y())]; }
  Vec2 cell_center(const Cell2& c) const {
    return origin + cell_size * Vec2(c.x() + 0.5, c.y() + 0.5);
  }
  double recompute_b_min() const;
};

/// Voxel indices of the n-voxel column above a ground cell, bottom first.
/// The first index is the voxel containing the cell's ground height.
/// Throws std::out_of_range if the cell lies outside the ground map.
std::vector<Cell3> column_indices(const GroundHeightMap& ground, const GridSpec& grid,
                                  const Cell2& cell, int n);

/// Weighted mean of the column voxels' occupancy probabilities (weights
/// normalized to sum 1). Column voxels outside the grid count as unobserved
/// (probability 0.5).
double obstruction_score(const OccupancyGrid& grid, const GroundHeightMap& ground,
                         const Cell2& cell, std::span<const double> weights,
                         ScoreRule rule = ScoreRule::weighted_mean);

/// Worst-case score over all cells whose center lies within `radius` meters
/// of the query cell's center; cells beyond the map edge count as fully
/// obstructed.
double footprint_score(const ObstructionMap& map, const Cell2& cell, double radius);

/// Scores every ground cell. Requires the occupancy grid and ground map to
/// share XY origin and resolution.
ObstructionMap build_obstruction_map(const OccupancyGrid& grid, const GroundHeightMap& ground,
                                     const ObstructionParams& params = {});

/// Center offsets (in cells) of a circular footprint of the given radius.
std::vector<Cell2> footprint_offsets(double radius, double cell_size);

}  // namespace fnav
