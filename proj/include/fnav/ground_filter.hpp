#pragma once

#include "fnav/geometry.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace fnav {

enum class CellSource : uint8_t { measured = 0, virtual_ground = 1 };

/// Fixed 2D grid frame; when supplied, ground products use this geometry
/// instead of the cloud's XY bounding box (points outside are ignored).
struct GridFrame2D {
  Vec2 origin = Vec2::Zero();
  double cell_size = 0.25;
  int width = 0, height = 0;
};

/// Gridded 2D terrain height estimate. Cells without direct ground returns
/// carry the cloth height and are flagged virtual.
struct GroundHeightMap {
  Vec2 origin = Vec2::Zero();
  double cell_size = 0.25;
  int width = 0, height = 0;
  std::vector<double> heights;
  std::vector<CellSource> source;

  std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(ix) + static_cast<std::size_t>(width) * static_cast<std::size_t>(iy);
  }
  bool contains(const Cell2& c) const {
    return c.x() >= 0 && c.x() < width && c.y() >= 0 && c.y() < height;
  }
  double at(const Cell2& c) const { return heights[index(c.x(), c.y())]; }
  Vec2 cell_center(const Cell2& c) const {
    return origin + cell_size * Vec2(c.x() + 0.5, c.y() + 0.5);
  }
  Cell2 cell_of(const Vec2& p) const;
};

/// Cloth relaxation parameters. `rigidness` is the number of
/// internal-constraint passes per gravity step; `height_threshold` is the
/// point-to-cloth distance that still counts as ground.
struct ClothParams {
  int rigidness = 3;
  double height_threshold = 0.20;
  double cloth_resolution = 0.25;
  double gravity_step = 0.1;
  int max_iterations = 500;
  double convergence_eps = 0.005;

  void validate() const;
};

/// Relaxed cloth, reported in the original (un-inverted) frame: node values
/// approximate the terrain's supporting surface.
struct ClothGrid {
  Vec2 origin = Vec2::Zero();
  double resolution = 0.25;
  int width = 0, height = 0;
  std::vector<double> heights;

  std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(ix) + static_cast<std::size_t>(width) * static_cast<std::size_t>(iy);
  }
  double at(int ix, int iy) const { return heights[index(ix, iy)]; }
  Cell2 cell_of(const Vec2& p) const;
};

/// Drapes a semi-rigid cloth over the Z-inverted point cloud and returns the
/// resting node heights. Tension across unsupported cells bridges occluded
/// terrain.
ClothGrid simulate_cloth(std::span<const Vec3> points, const ClothParams& params,
                         const std::optional<GridFrame2D>& frame = {});

struct GroundSegmentation {
  std::vector<Vec3> ground_points;
  GroundHeightMap map;
};

/// Splits the cloud into ground / non-ground by cloth distance and grids the
/// per-cell minimum ground height. Cells without ground points fall back to
/// the cloth node as virtual ground.
GroundSegmentation segment_ground(std::span<const Vec3> points, const ClothParams& params,
                                  const std::optional<GridFrame2D>& frame = {});

}  // namespace fnav
