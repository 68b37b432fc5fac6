#include "fnav/obstruction.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fnav {

void ObstructionParams::validate() const {
  if (column_voxels < 1) throw std::invalid_argument("column must contain at least one voxel");
  if (weights.size() != static_cast<std::size_t>(column_voxels)) {
    throw std::invalid_argument("need one weight per column voxel");
  }
  for (double w : weights) {
    if (!(w > 0.0)) throw std::invalid_argument("column weights must be strictly positive");
  }
}

double ObstructionMap::recompute_b_min() const {
  double m = 1.0;
  for (double b : scores) m = std::min(m, b);
  return m;
}

std::vector<Cell3> column_indices(const GroundHeightMap& ground, const GridSpec& grid,
                                  const Cell2& cell, int n) {
  if (!ground.contains(cell)) {
    throw std::out_of_range("ground cell outside map bounds");
  }
  const double h = ground.at(cell);
  const Vec2 center = ground.cell_center(cell);
  const Cell3 base = grid.cell_of({center.x(), center.y(), h});
  std::vector<Cell3> column;
  column.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    column.push_back({base.x(), base.y(), base.z() + k});
  }
  return column;
}

double obstruction_score(const OccupancyGrid& grid, const GroundHeightMap& ground,
                         const Cell2& cell, std::span<const double> weights, ScoreRule rule) {
  const auto column = column_indices(ground, grid.spec(), cell, static_cast<int>(weights.size()));
  if (rule == ScoreRule::any_occupied) {
    double free_product = 1.0;
    for (const Cell3& c : column) {
      const double p = grid.spec().contains(c) ? grid.probability(c) : 0.5;
      free_product *= 1.0 - p;
    }
    return 1.0 - free_product;
  }
  double weight_sum = 0.0;
  for (double w : weights) weight_sum += w;
  double score = 0.0;
  for (std::size_t k = 0; k < column.size(); ++k) {
    const double p = grid.spec().contains(column[k]) ? grid.probability(column[k]) : 0.5;
    score += (weights[k] / weight_sum) * p;
  }
  return score;
}

std::vector<Cell2> footprint_offsets(double radius, double cell_size) {
  std::vector<Cell2> offsets;
  if (radius < 0.0) throw std::invalid_argument("footprint radius must be >= 0");
  const int reach = static_cast<int>(std::floor(radius / cell_size));
  const double r2 = radius * radius;
  for (int dy = -reach; dy <= reach; ++dy) {
    for (int dx = -reach; dx <= reach; ++dx) {
      const double d2 = (dx * cell_size) * (dx * cell_size) + (dy * cell_size) * (dy * cell_size);
      if (d2 <= r2) offsets.push_back({dx, dy});
    }
  }
  if (offsets.empty()) offsets.push_back({0, 0});
  return offsets;
}

double footprint_score(const ObstructionMap& map, const Cell2& cell, double radius) {
  const auto offsets = footprint_offsets(radius, map.cell_size);
  double worst = 0.0;
  for (const Cell2& d : offsets) {
    const Cell2 c = cell + d;
    if (!map.contains(c)) return 1.0;  // never plan off the mapped world
    worst = std::max(worst, map.at(c));
  }
  return worst;
}

ObstructionMap build_obstruction_map(const OccupancyGrid& grid, const GroundHeightMap& ground,
                                     const ObstructionParams& params) {
  params.validate();
  const GridSpec& spec = grid.spec();
  const double tol = 1e-9;
  if (std::abs(spec.voxel_size - ground.cell_size) > tol ||
      std::abs(spec.origin.x() - ground.origin.x()) > tol ||
      std::abs(spec.origin.y() - ground.origin.y()) > tol) {
    throw std::invalid_argument("occupancy grid and ground map are not aligned");
  }

  ObstructionMap map;
  map.origin = ground.origin;
  map.cell_size = ground.cell_size;
  map.width = ground.width;
  map.height = ground.height;
  map.ground = ground;
  map.column_voxels = params.column_voxels;
  map.weights = params.weights;
  map.scores.resize(static_cast<std::size_t>(map.width) * static_cast<std::size_t>(map.height));

  for (int iy = 0; iy < map.height; ++iy) {
    for (int ix = 0; ix < map.width; ++ix) {
      map.scores[map.index(ix, iy)] =
          obstruction_score(grid, ground, {ix, iy}, params.weights, params.rule);
    }
  }
  map.b_min = map.recompute_b_min();
  return map;
}

}  // namespace fnav
