#include "fnav/ground_filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fnav {

namespace {

constexpr double kUnsupported = -std::numeric_limits<double>::infinity();
// Fraction of the height difference transferred per constraint pass.
constexpr double kSpringGain = 0.65;
constexpr double kDropHeight = 1.0;  // initial cloth clearance above the surface

struct Bounds2 {
  Vec2 min, max;
};

Bounds2 xy_bounds(std::span<const Vec3> points) {
  Bounds2 b{points[0].head<2>(), points[0].head<2>()};
  for (const Vec3& p : points) {
    b.min = b.min.cwiseMin(p.head<2>());
    b.max = b.max.cwiseMax(p.head<2>());
  }
  return b;
}

int grid_extent(double span, double res) {
  int n = static_cast<int>(std::ceil(span / res));
  return std::max(n, 1);
}

}  // namespace

Cell2 GroundHeightMap::cell_of(const Vec2& p) const {
  return {static_cast<int>(std::floor((p.x() - origin.x()) / cell_size)),
          static_cast<int>(std::floor((p.y() - origin.y()) / cell_size))};
}

Cell2 ClothGrid::cell_of(const Vec2& p) const {
  return {static_cast<int>(std::floor((p.x() - origin.x()) / resolution)),
          static_cast<int>(std::floor((p.y() - origin.y()) / resolution))};
}

void ClothParams::validate() const {
  if (rigidness < 1) throw std::invalid_argument("cloth rigidness must be >= 1");
  if (!(height_threshold > 0.0)) throw std::invalid_argument("height threshold must be > 0");
  if (!(cloth_resolution > 0.0)) throw std::invalid_argument("cloth resolution must be > 0");
  if (!(gravity_step > 0.0)) throw std::invalid_argument("gravity step must be > 0");
  if (max_iterations < 1) throw std::invalid_argument("max iterations must be >= 1");
  if (!(convergence_eps > 0.0)) throw std::invalid_argument("convergence eps must be > 0");
}

ClothGrid simulate_cloth(std::span<const Vec3> points, const ClothParams& params,
                         const std::optional<GridFrame2D>& frame) {
  params.validate();
  if (points.empty()) throw std::invalid_argument("cannot simulate cloth over an empty point set");

  ClothGrid cloth;
  if (frame) {
    cloth.origin = frame->origin;
    cloth.resolution = frame->cell_size;
    cloth.width = frame->width;
    cloth.height = frame->height;
  } else {
    const Bounds2 bounds = xy_bounds(points);
    cloth.origin = bounds.min;
    cloth.resolution = params.cloth_resolution;
    cloth.width = grid_extent(bounds.max.x() - bounds.min.x(), cloth.resolution);
    cloth.height = grid_extent(bounds.max.y() - bounds.min.y(), cloth.resolution);
  }
  const std::size_t n = static_cast<std::size_t>(cloth.width) * static_cast<std::size_t>(cloth.height);

  // Inverted-frame support surface: the highest -z in each node's cell.
  std::vector<double> support(n, kUnsupported);
  for (const Vec3& p : points) {
    Cell2 c = cloth.cell_of(p.head<2>());
    if (frame) {
      if (c.x() < 0 || c.x() >= cloth.width || c.y() < 0 || c.y() >= cloth.height) continue;
    } else {
      c.x() = std::clamp(c.x(), 0, cloth.width - 1);
      c.y() = std::clamp(c.y(), 0, cloth.height - 1);
    }
    const std::size_t i = cloth.index(c.x(), c.y());
    support[i] = std::max(support[i], -p.z());
  }
  double top = kUnsupported;
  for (double s : support) top = std::max(top, s);
  if (!std::isfinite(top)) {
    throw std::invalid_argument("no points fall inside the requested cloth frame");
  }

  std::vector<double> z(n, top + kDropHeight);
  std::vector<uint8_t> pinned(n, 0);

  auto settle = [&](std::size_t i, double value) {
    if (value <= support[i]) {
      z[i] = support[i];
      pinned[i] = 1;
    } else {
      z[i] = value;
    }
  };

  std::vector<double> prev(n);
  for (int iter = 0; iter < params.max_iterations; ++iter) {
    prev = z;

    for (std::size_t i = 0; i < n; ++i) {
      if (!pinned[i]) settle(i, z[i] - params.gravity_step);
    }

    for (int pass = 0; pass < params.rigidness; ++pass) {
      for (int iy = 0; iy < cloth.height; ++iy) {
        for (int ix = 0; ix < cloth.width; ++ix) {
          const std::size_t a = cloth.index(ix, iy);
          // Structural neighbors to the right and above; each grid edge is
          // visited once per pass.
          for (int nb = 0; nb < 2; ++nb) {
            const int jx = ix + (nb == 0 ? 1 : 0);
            const int jy = iy + (nb == 0 ? 0 : 1);
            if (jx >= cloth.width || jy >= cloth.height) continue;
            const std::size_t b = cloth.index(jx, jy);
            const double diff = z[a] - z[b];
            if (pinned[a] && pinned[b]) continue;
            if (!pinned[a] && !pinned[b]) {
              const double t = 0.5 * kSpringGain * diff;
              settle(a, z[a] - t);
              settle(b, z[b] + t);
            } else if (pinned[a]) {
              settle(b, z[b] + kSpringGain * diff);
            } else {
              settle(a, z[a] - kSpringGain * diff);
            }
          }
        }
      }
    }

    double max_change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      max_change = std::max(max_change, std::abs(z[i] - prev[i]));
    }
    if (max_change < params.convergence_eps) break;
  }

  cloth.heights.resize(n);
  for (std::size_t i = 0; i < n; ++i) cloth.heights[i] = -z[i];
  return cloth;
}

GroundSegmentation segment_ground(std::span<const Vec3> points, const ClothParams& params,
                                  const std::optional<GridFrame2D>& frame) {
  const ClothGrid cloth = simulate_cloth(points, params, frame);

  GroundSegmentation out;
  out.map.origin = cloth.origin;
  out.map.cell_size = cloth.resolution;
  out.map.width = cloth.width;
  out.map.height = cloth.height;
  const std::size_t n = cloth.heights.size();
  out.map.heights.assign(n, 0.0);
  out.map.source.assign(n, CellSource::virtual_ground);

  std::vector<double> min_ground(n, std::numeric_limits<double>::infinity());
  for (const Vec3& p : points) {
    Cell2 c = cloth.cell_of(p.head<2>());
    if (frame) {
      if (c.x() < 0 || c.x() >= cloth.width || c.y() < 0 || c.y() >= cloth.height) continue;
    } else {
      c.x() = std::clamp(c.x(), 0, cloth.width - 1);
      c.y() = std::clamp(c.y(), 0, cloth.height - 1);
    }
    const std::size_t i = cloth.index(c.x(), c.y());
    const double cloth_z = cloth.heights[i];
    // Points below the cloth are inversion artifacts; clamp them onto the
    // cloth so they cannot produce ground spikes.
    const double effective_z = std::max(p.z(), cloth_z);
    if (effective_z - cloth_z > params.height_threshold) continue;
    out.ground_points.push_back(p);
    min_ground[i] = std::min(min_ground[i], effective_z);
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (std::isfinite(min_ground[i])) {
      out.map.heights[i] = min_ground[i];
      out.map.source[i] = CellSource::measured;
    } else {
      out.map.heights[i] = cloth.heights[i];  // closest cloth node as virtual ground
      out.map.source[i] = CellSource::virtual_ground;
    }
  }
  return out;
}

}  // namespace fnav
