#include "fnav/simulation.hpp"

#include "fnav/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace fnav {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kRayEps = 1e-9;

std::optional<double> min_positive(std::optional<double> a, std::optional<double> b) {
  if (!a) return b;
  if (!b) return a;
  return std::min(*a, *b);
}

std::optional<double> ray_circle_2d(const Vec2& o, const Vec2& d, const Vec2& c, double r,
                                    double& t_far) {
  // 2D quadratic along the ray's XY projection; t is still the 3D parameter.
  const Vec2 rel = o - c;
  const double a = d.squaredNorm();
  if (a < 1e-18) {  // vertical ray: inside or outside for all t
    t_far = std::numeric_limits<double>::infinity();
    if (rel.squaredNorm() <= r * r) return 0.0;
    return std::nullopt;
  }
  const double b = 2.0 * rel.dot(d);
  const double c0 = rel.squaredNorm() - r * r;
  const double disc = b * b - 4.0 * a * c0;
  if (disc < 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  t_far = (-b + sq) / (2.0 * a);
  return (-b - sq) / (2.0 * a);
}

std::optional<double> ray_trunk(const Vec3& o, const Vec3& d, const Trunk& t) {
  double t_exit = 0.0;
  const auto t_enter = ray_circle_2d(o.head<2>(), d.head<2>(), t.center, t.radius, t_exit);
  if (!t_enter) return std::nullopt;
  std::optional<double> best;
  // Lateral surface.
  for (double tc : {*t_enter, t_exit}) {
    if (tc < kRayEps) continue;
    const double z = o.z() + tc * d.z();
    if (z >= t.z0 && z <= t.z1) best = min_positive(best, tc);
  }
  // End caps.
  if (std::abs(d.z()) > 1e-12) {
    for (double zc : {t.z0, t.z1}) {
      const double tc = (zc - o.z()) / d.z();
      if (tc < kRayEps) continue;
      const Vec2 p = o.head<2>() + tc * d.head<2>();
      if ((p - t.center).squaredNorm() <= t.radius * t.radius) best = min_positive(best, tc);
    }
  }
  return best;
}

std::optional<double> ray_ellipsoid(const Vec3& o, const Vec3& d, const Canopy& e) {
  const Vec3 q = (o - e.center).cwiseQuotient(e.radii);
  const Vec3 w = d.cwiseQuotient(e.radii);
  const double a = w.squaredNorm();
  const double b = 2.0 * q.dot(w);
  const double c0 = q.squaredNorm() - 1.0;
  const double disc = b * b - 4.0 * a * c0;
  if (disc < 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  const double t0 = (-b - sq) / (2.0 * a);
  const double t1 = (-b + sq) / (2.0 * a);
  if (t0 >= kRayEps) return t0;
  if (t1 >= kRayEps) return t1;
  return std::nullopt;
}

std::optional<double> ray_box(const Vec3& o, const Vec3& d, const LogObstacle& box) {
  double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-12) {
      if (o[a] < box.min[a] || o[a] > box.max[a]) return std::nullopt;
      continue;
    }
    double ta = (box.min[a] - o[a]) / d[a];
    double tb = (box.max[a] - o[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  if (t0 >= kRayEps) return t0;
  return std::nullopt;
}

std::optional<double> ray_sphere(const Vec3& o, const Vec3& d, const Vec3& c, double r) {
  const Vec3 rel = o - c;
  const double a = d.squaredNorm();
  const double b = 2.0 * rel.dot(d);
  const double c0 = rel.squaredNorm() - r * r;
  const double disc = b * b - 4.0 * a * c0;
  if (disc < 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  const double t0 = (-b - sq) / (2.0 * a);
  if (t0 >= kRayEps) return t0;
  const double t1 = (-b + sq) / (2.0 * a);
  if (t1 >= kRayEps) return t1;
  return std::nullopt;
}

bool interval_overlap(double a0, double a1, double b0, double b1) {
  return a0 <= b1 && b0 <= a1;
}

}  // namespace

double Terrain::height_at(double x, double y) const {
  if (kind == Kind::flat) return base_z;
  const double w = 2.0 * kPi / wavelength;
  return base_z + amplitude * std::sin(w * x) * std::sin(w * y);
}

double Terrain::max_slope() const {
  if (kind == Kind::flat) return 0.0;
  return std::numbers::sqrt2 * amplitude * 2.0 * kPi / wavelength;
}

std::optional<double> World::raycast(const Vec3& origin, const Vec3& dir, double max_range) const {
  std::optional<double> best;

  // Terrain.
  if (terrain.kind == Terrain::Kind::flat) {
    if (std::abs(dir.z()) > 1e-12) {
      const double t = (terrain.base_z - origin.z()) / dir.z();
      if (t >= kRayEps && t <= max_range) best = t;
    }
  } else {
    // Sphere tracing against the height field: the signed clearance above
    // the terrain shrinks at most at rate L per unit ray length.
    const double L =
        std::abs(dir.z()) + terrain.max_slope() * dir.head<2>().norm() + 1e-9;
    double t = 0.0;
    double prev_t = 0.0;
    double gap = origin.z() - terrain.height_at(origin.x(), origin.y());
    if (gap <= 0.0) {
      best = kRayEps;  // started at/below the surface
    } else {
      while (t <= max_range) {
        prev_t = t;
        t += std::max(gap / L, 1e-3);
        const Vec3 p = origin + t * dir;
        gap = p.z() - terrain.height_at(p.x(), p.y());
        if (gap <= 1e-9) {
          double lo = prev_t, hi = t;
          for (int i = 0; i < 48; ++i) {
            const double mid = 0.5 * (lo + hi);
            const Vec3 q = origin + mid * dir;
            if (q.z() - terrain.height_at(q.x(), q.y()) > 0.0) lo = mid;
            else hi = mid;
          }
          if (hi <= max_range) best = hi;
          break;
        }
      }
    }
  }

  for (const Primitive& prim : obstacles) {
    std::optional<double> t = std::visit(
        [&](const auto& p) -> std::optional<double> {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Trunk>) return ray_trunk(origin, dir, p);
          else if constexpr (std::is_same_v<T, Canopy>) return ray_ellipsoid(origin, dir, p);
          else if constexpr (std::is_same_v<T, LogObstacle>) return ray_box(origin, dir, p);
          else return ray_sphere(origin, dir, p.center, p.radius);
        },
        prim);
    if (t && *t <= max_range) best = min_positive(best, *t);
  }
  return best;
}

bool World::column_obstructed(double x, double y, double clearance) const {
  const double g = terrain.height_at(x, y);
  const double z0 = g;
  const double z1 = g + clearance;
  for (const Primitive& prim : obstacles) {
    const bool hit = std::visit(
        [&](const auto& p) -> bool {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Trunk>) {
            const double d2 = (Vec2(x, y) - p.center).squaredNorm();
            return d2 <= p.radius * p.radius && interval_overlap(p.z0, p.z1, z0, z1);
          } else if constexpr (std::is_same_v<T, Canopy>) {
            const double sx = (x - p.center.x()) / p.radii.x();
            const double sy = (y - p.center.y()) / p.radii.y();
            const double s2 = sx * sx + sy * sy;
            if (s2 > 1.0) return false;
            const double half = p.radii.z() * std::sqrt(1.0 - s2);
            return interval_overlap(p.center.z() - half, p.center.z() + half, z0, z1);
          } else if constexpr (std::is_same_v<T, LogObstacle>) {
            return x >= p.min.x() && x <= p.max.x() && y >= p.min.y() && y <= p.max.y() &&
                   interval_overlap(p.min.z(), p.max.z(), z0, z1);
          } else {
            const double d2 = (Vec2(x, y) - p.center.head<2>()).squaredNorm();
            if (d2 > p.radius * p.radius) return false;
            const double half = std::sqrt(p.radius * p.radius - d2);
            return interval_overlap(p.center.z() - half, p.center.z() + half, z0, z1);
          }
        },
        prim);
    if (hit) return true;
  }
  return false;
}

double World::max_obstacle_top() const {
  double top = max_terrain();
  for (const Primitive& prim : obstacles) {
    const double z = std::visit(
        [](const auto& p) -> double {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Trunk>) return p.z1;
          else if constexpr (std::is_same_v<T, Canopy>) return p.center.z() + p.radii.z();
          else if constexpr (std::is_same_v<T, LogObstacle>) return p.max.z();
          else return p.center.z() + p.radius;
        },
        prim);
    top = std::max(top, z);
  }
  return top;
}

double World::min_terrain() const {
  return terrain.kind == Terrain::Kind::flat ? terrain.base_z
                                             : terrain.base_z - terrain.amplitude;
}

double World::max_terrain() const {
  return terrain.kind == Terrain::Kind::flat ? terrain.base_z
                                             : terrain.base_z + terrain.amplitude;
}

World generate_forest(const ForestParams& params, uint64_t seed) {
  if (params.tree_density < 0.0 || params.log_density < 0.0 || params.bush_density < 0.0) {
    throw std::invalid_argument("densities must be >= 0");
  }
  if (params.size.x() <= 0.0 || params.size.y() <= 0.0) {
    throw std::invalid_argument("world size must be positive");
  }

  World world;
  world.terrain = params.terrain;
  world.size = params.size;
  world.seed = seed;

  Rng rng(seed);
  const double area = params.size.x() * params.size.y();

  auto poisson_count = [&](double density) -> int {
    const double lambda = density * area;
    if (lambda <= 0.0) return 0;
    std::poisson_distribution<int> d(lambda);
    return d(rng);
  };

  // Trees: Poisson count, dart-throwing placement with a minimum spacing.
  const int n_trees = poisson_count(params.tree_density);
  const double margin = params.canopy_radius_max;
  std::vector<Vec2> centers;
  centers.reserve(static_cast<std::size_t>(n_trees));
  for (int i = 0; i < n_trees; ++i) {
    Vec2 c;
    bool placed = false;
    for (int attempt = 0; attempt < 40 && !placed; ++attempt) {
      c = {uniform(rng, margin, params.size.x() - margin),
           uniform(rng, margin, params.size.y() - margin)};
      placed = true;
      for (const Vec2& other : centers) {
        if ((c - other).norm() < params.min_tree_spacing) {
          placed = false;
          break;
        }
      }
    }
    if (!placed) continue;
    centers.push_back(c);

    const double ground = world.terrain.height_at(c.x(), c.y());
    Trunk trunk;
    trunk.center = c;
    trunk.radius = uniform(rng, params.trunk_radius_min, params.trunk_radius_max);
    trunk.z0 = ground - 0.3;
    trunk.z1 = ground + uniform(rng, params.trunk_height_min, params.trunk_height_max);
    world.obstacles.emplace_back(trunk);

    Canopy canopy;
    const double rh = uniform(rng, params.canopy_radius_min, params.canopy_radius_max);
    canopy.center = {c.x(), c.y(), trunk.z1};
    canopy.radii = {rh, rh * uniform(rng, 0.8, 1.2), rh * uniform(rng, 0.4, 0.7)};
    world.obstacles.emplace_back(canopy);
  }

  const int n_logs = poisson_count(params.log_density);
  for (int i = 0; i < n_logs; ++i) {
    const double length = uniform(rng, 1.0, 3.0);
    const double width = uniform(rng, 0.25, 0.45);
    const double tall = uniform(rng, 0.3, 0.5);
    const bool along_x = uniform(rng, 0.0, 1.0) < 0.5;
    const double hx = along_x ? length * 0.5 : width * 0.5;
    const double hy = along_x ? width * 0.5 : length * 0.5;
    const double cx = uniform(rng, hx + 0.5, params.size.x() - hx - 0.5);
    const double cy = uniform(rng, hy + 0.5, params.size.y() - hy - 0.5);
    const double ground = world.terrain.height_at(cx, cy);
    LogObstacle box;
    box.min = {cx - hx, cy - hy, ground};
    box.max = {cx + hx, cy + hy, ground + tall};
    world.obstacles.emplace_back(box);
  }

  const int n_bushes = poisson_count(params.bush_density);
  for (int i = 0; i < n_bushes; ++i) {
    Bush bush;
    bush.radius = uniform(rng, 0.3, 1.0);
    const double cx = uniform(rng, bush.radius + 0.5, params.size.x() - bush.radius - 0.5);
    const double cy = uniform(rng, bush.radius + 0.5, params.size.y() - bush.radius - 0.5);
    const double ground = world.terrain.height_at(cx, cy);
    bush.center = {cx, cy, ground + 0.6 * bush.radius};
    world.obstacles.emplace_back(bush);
  }

  return world;
}

void FlightSpec::validate() const {
  if (waypoints.empty()) throw std::invalid_argument("flight needs at least one waypoint");
  if (!(speed > 0.0) || !(scan_rate > 0.0)) throw std::invalid_argument("speed and scan rate must be positive");
  if (beams < 1 || azimuth_steps < 1) throw std::invalid_argument("beam and azimuth counts must be >= 1");
  if (!(max_range > 0.0)) throw std::invalid_argument("max range must be positive");
  if (range_sigma < 0.0) throw std::invalid_argument("range sigma must be >= 0");
}

std::vector<Vec3> lawnmower_waypoints(const World& world, double altitude, double pass_spacing,
                                      double margin) {
  std::vector<Vec3> wp;
  const double x0 = margin, x1 = world.size.x() - margin;
  double y = margin;
  bool left_to_right = true;
  while (y <= world.size.y() - margin + 1e-9) {
    wp.push_back({left_to_right ? x0 : x1, y, altitude});
    wp.push_back({left_to_right ? x1 : x0, y, altitude});
    left_to_right = !left_to_right;
    y += pass_spacing;
  }
  return wp;
}

FlightResult simulate_flight(const World& world, const FlightSpec& spec, uint64_t seed) {
  spec.validate();
  Rng rng(seed);

  // Poses along the polyline at constant speed, one per scan tick.
  FlightResult out;
  std::vector<double> cum{0.0};
  for (std::size_t i = 1; i < spec.waypoints.size(); ++i) {
    cum.push_back(cum.back() + (spec.waypoints[i] - spec.waypoints[i - 1]).norm());
  }
  const double total = cum.back();
  const int n_poses = std::max(1, static_cast<int>(std::floor(total / spec.speed * spec.scan_rate)) + 1);
  for (int k = 0; k < n_poses; ++k) {
    const double t = k / spec.scan_rate;
    const double dist = std::min(spec.speed * t, total);
    std::size_t seg = 1;
    while (seg + 1 < cum.size() && cum[seg] < dist) ++seg;
    Pose pose;
    pose.t = t;
    if (spec.waypoints.size() == 1) {
      pose.position = spec.waypoints[0];
    } else {
      const Vec3& a = spec.waypoints[seg - 1];
      const Vec3& b = spec.waypoints[seg];
      const double seg_len = cum[seg] - cum[seg - 1];
      const double u = seg_len > 0.0 ? (dist - cum[seg - 1]) / seg_len : 0.0;
      pose.position = a + u * (b - a);
      const Vec3 heading = b - a;
      if (heading.head<2>().norm() > 1e-12) {
        pose.rpy.z() = std::atan2(heading.y(), heading.x());
      }
    }
    out.trajectory.poses.push_back(pose);
  }

  // Beam fan around the sensor's forward axis: elevation within the
  // vertical FOV, azimuth sweeping a full turn (down through both sides up).
  const double fov = spec.vertical_fov_deg * kPi / 180.0;
  std::vector<Vec3> beam_dirs;
  beam_dirs.reserve(static_cast<std::size_t>(spec.beams) * spec.azimuth_steps);
  for (int j = 0; j < spec.azimuth_steps; ++j) {
    const double az = 2.0 * kPi * j / spec.azimuth_steps;
    for (int i = 0; i < spec.beams; ++i) {
      const double el = spec.beams == 1 ? 0.0 : -0.5 * fov + fov * i / (spec.beams - 1);
      beam_dirs.push_back({std::sin(el), std::cos(el) * std::sin(az), -std::cos(el) * std::cos(az)});
    }
  }

  out.ideal.max_range = spec.max_range;
  out.noisy.max_range = spec.max_range;
  for (std::size_t pi = 0; pi < out.trajectory.poses.size(); ++pi) {
    const Pose& pose = out.trajectory.poses[pi];
    const Mat3 rot = pose.rotation();
    RayBundle ideal_bundle, noisy_bundle;
    ideal_bundle.pose_index = pi;
    noisy_bundle.pose_index = pi;
    ideal_bundle.rays.reserve(beam_dirs.size());
    noisy_bundle.rays.reserve(beam_dirs.size());
    for (const Vec3& dir_sensor : beam_dirs) {
      const Vec3 dir_world = rot * dir_sensor;
      const auto range = world.raycast(pose.position, dir_world, spec.max_range);
      if (!range) {
        ideal_bundle.rays.push_back({dir_sensor, true});
        noisy_bundle.rays.push_back({dir_sensor, true});
        continue;
      }
      ideal_bundle.rays.push_back({dir_sensor * *range, false});
      double noisy_range = *range + normal(rng, spec.range_sigma);
      noisy_range = std::clamp(noisy_range, 0.01, spec.max_range);
      noisy_bundle.rays.push_back({dir_sensor * noisy_range, false});
    }
    out.ideal.bundles.push_back(std::move(ideal_bundle));
    out.noisy.bundles.push_back(std::move(noisy_bundle));
  }
  return out;
}

GridSpec grid_spec_for_world(const World& world, double voxel_size, double z_margin) {
  const double z0 = world.min_terrain() - z_margin;
  const double z1 = world.max_obstacle_top() + z_margin;
  return GridSpec::from_bounds({0.0, 0.0, z0}, {world.size.x(), world.size.y(), z1}, voxel_size);
}

GroundTruth build_ground_truth_map(const World& world, const ScanSet& ideal_scans,
                                   const Trajectory& trajectory, const SensorModel& sensor,
                                   const GridSpec& spec, const ObstructionParams& params) {
  GroundTruth gt{OccupancyGrid(spec, sensor), {}, {}};
  gt.grid = build_standard_map(ideal_scans, trajectory, sensor, spec);

  gt.ground.origin = spec.origin.head<2>();
  gt.ground.cell_size = spec.voxel_size;
  gt.ground.width = spec.nx;
  gt.ground.height = spec.ny;
  const std::size_t n = static_cast<std::size_t>(spec.nx) * static_cast<std::size_t>(spec.ny);
  gt.ground.heights.resize(n);
  gt.ground.source.assign(n, CellSource::measured);
  for (int iy = 0; iy < spec.ny; ++iy) {
    for (int ix = 0; ix < spec.nx; ++ix) {
      const Vec2 c = gt.ground.cell_center({ix, iy});
      gt.ground.heights[gt.ground.index(ix, iy)] = world.terrain.height_at(c.x(), c.y());
    }
  }
  gt.obstruction = build_obstruction_map(gt.grid, gt.ground, params);
  return gt;
}

namespace {

class TruthCache {
 public:
  TruthCache(const World& world, const ObstructionMap& map, double clearance)
      : world_(world), map_(map), clearance_(clearance),
        state_(static_cast<std::size_t>(map.width) * static_cast<std::size_t>(map.height), -1) {}

  bool obstructed(const Cell2& cell) {
    const std::size_t i = map_.index(cell.x(), cell.y());
    if (state_[i] < 0) {
      const Vec2 c = map_.cell_center(cell);
      state_[i] = world_.column_obstructed(c.x(), c.y(), clearance_) ? 1 : 0;
    }
    return state_[i] == 1;
  }

 private:
  const World& world_;
  const ObstructionMap& map_;
  double clearance_;
  std::vector<int8_t> state_;
};

}  // namespace

MissionResult run_mission(const World& world, const ObstructionMap& prior,
                          const MissionSpec& spec) {
  if (!prior.contains(spec.start) || !prior.contains(spec.goal)) {
    throw std::invalid_argument("mission start/goal outside map");
  }
  TruthCache truth(world, prior, spec.clearance);
  if (truth.obstructed(spec.start) || truth.obstructed(spec.goal)) {
    throw std::invalid_argument("mission start/goal must be analytically traversable");
  }

  ObstructionMap working = prior;
  if (spec.mode == MissionMode::naive) {
    std::fill(working.scores.begin(), working.scores.end(), prior.b_min);
    working.b_min = prior.b_min;
  }

  const double eps = spec.cost.b_clamp_eps;
  const auto sense_offsets = footprint_offsets(spec.local_radius, working.cell_size);
  DStarLitePlanner planner(working, spec.footprint_radius, spec.start, spec.goal, spec.cost);

  auto sense = [&](const Cell2& at) {
    std::vector<CellChange> changes;
    for (const Cell2& d : sense_offsets) {
      const Cell2 c = at + d;
      if (!working.contains(c)) continue;
      const double target = truth.obstructed(c) ? 1.0 - eps : eps;
      if (planner.score(c) != target) changes.push_back({c, target});
    }
    return changes;
  };

  MissionResult result;
  Cell2 cur = spec.start;
  result.executed.push_back(cur);

  const int budget = spec.step_budget > 0
                         ? spec.step_budget
                         : static_cast<int>(std::ceil(20.0 * std::max(1.0, octile_distance(spec.start, spec.goal))));

  Path path = planner.update_and_replan(sense(cur), cur);
  int stall = 0;
  for (int tick = 0; tick < budget; ++tick) {
    if (cur == spec.goal) {
      result.success = true;
      break;
    }
    if (path.cells.size() < 2) break;
    const Cell2 next = path.cells[1];
    if (truth.obstructed(next)) {
      // The executor never enters an analytically obstructed cell. Nothing
      // changes while we wait, so give up after a few stalled ticks.
      if (++stall >= 3) break;
      continue;
    }
    stall = 0;
    result.length_m += octile_distance(cur, next) * working.cell_size;
    cur = next;
    result.executed.push_back(cur);
    if (cur == spec.goal) {
      result.success = true;
      break;
    }

    const std::vector<Cell2> expected_tail(path.cells.begin() + 1, path.cells.end());
    const auto changes = sense(cur);
    path = planner.update_and_replan(changes, cur);
    if (path.cells != expected_tail) ++result.replans;
  }

  const Vec2 a = working.cell_center(cur);
  const Vec2 b = working.cell_center(spec.goal);
  result.goal_distance_m = (a - b).norm();
  return result;
}

std::vector<std::pair<Cell2, Cell2>> sample_mission_pairs(const World& world,
                                                          const ObstructionMap& map, int count,
                                                          double min_separation_m,
                                                          double clearance, uint64_t seed) {
  Rng rng(seed);
  const int margin = static_cast<int>(std::ceil(0.5 / map.cell_size)) + 1;
  if (map.width <= 2 * margin || map.height <= 2 * margin) {
    throw std::invalid_argument("map too small to sample mission pairs");
  }

  auto draw_free = [&]() -> Cell2 {
    for (int attempt = 0; attempt < 20000; ++attempt) {
      std::uniform_int_distribution<int> dx(margin, map.width - 1 - margin);
      std::uniform_int_distribution<int> dy(margin, map.height - 1 - margin);
      const Cell2 c{dx(rng), dy(rng)};
      const Vec2 p = map.cell_center(c);
      if (!world.column_obstructed(p.x(), p.y(), clearance)) return c;
    }
    throw std::runtime_error("could not sample a free cell; world too dense");
  };

  std::vector<std::pair<Cell2, Cell2>> pairs;
  pairs.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    for (int attempt = 0;; ++attempt) {
      if (attempt >= 20000) throw std::runtime_error("could not sample a separated mission pair");
      const Cell2 s = draw_free();
      const Cell2 g = draw_free();
      if ((map.cell_center(s) - map.cell_center(g)).norm() >= min_separation_m) {
        pairs.emplace_back(s, g);
        break;
      }
    }
  }
  return pairs;
}

namespace {

using nlohmann::json;

json vec_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
Vec3 vec_from_json(const json& j) { return {j.at(0), j.at(1), j.at(2)}; }

}  // namespace

void save_world(const std::string& path, const World& world) {
  json j;
  j["size"] = {world.size.x(), world.size.y()};
  j["seed"] = world.seed;
  j["terrain"] = {{"kind", world.terrain.kind == Terrain::Kind::flat ? "flat" : "undulating"},
                  {"base_z", world.terrain.base_z},
                  {"amplitude", world.terrain.amplitude},
                  {"wavelength", world.terrain.wavelength}};
  json obs = json::array();
  for (const Primitive& prim : world.obstacles) {
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Trunk>) {
            obs.push_back({{"type", "trunk"},
                           {"center", {p.center.x(), p.center.y()}},
                           {"radius", p.radius},
                           {"z0", p.z0},
                           {"z1", p.z1}});
          } else if constexpr (std::is_same_v<T, Canopy>) {
            obs.push_back({{"type", "canopy"}, {"center", vec_to_json(p.center)}, {"radii", vec_to_json(p.radii)}});
          } else if constexpr (std::is_same_v<T, LogObstacle>) {
            obs.push_back({{"type", "log"}, {"min", vec_to_json(p.min)}, {"max", vec_to_json(p.max)}});
          } else {
            obs.push_back({{"type", "bush"}, {"center", vec_to_json(p.center)}, {"radius", p.radius}});
          }
        },
        prim);
  }
  j["obstacles"] = std::move(obs);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write world file: " + path);
  out << j.dump(2) << "\n";
}

World load_world(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open world file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed world file " + path + ": " + e.what());
  }

  World world;
  world.size = {j.at("size").at(0), j.at("size").at(1)};
  world.seed = j.value("seed", 0ULL);
  const json& t = j.at("terrain");
  world.terrain.kind = t.at("kind") == "flat" ? Terrain::Kind::flat : Terrain::Kind::undulating;
  world.terrain.base_z = t.at("base_z");
  world.terrain.amplitude = t.at("amplitude");
  world.terrain.wavelength = t.at("wavelength");
  for (const json& o : j.at("obstacles")) {
    const std::string type = o.at("type");
    if (type == "trunk") {
      Trunk p;
      p.center = {o.at("center").at(0), o.at("center").at(1)};
      p.radius = o.at("radius");
      p.z0 = o.at("z0");
      p.z1 = o.at("z1");
      world.obstacles.emplace_back(p);
    } else if (type == "canopy") {
      world.obstacles.emplace_back(Canopy{vec_from_json(o.at("center")), vec_from_json(o.at("radii"))});
    } else if (type == "log") {
      world.obstacles.emplace_back(LogObstacle{vec_from_json(o.at("min")), vec_from_json(o.at("max"))});
    } else if (type == "bush") {
      world.obstacles.emplace_back(Bush{vec_from_json(o.at("center")), o.at("radius")});
    } else {
      throw std::runtime_error("unknown obstacle type '" + type + "' in " + path);
    }
  }
  return world;
}

}  // namespace fnav
