#pragma once

#include "fnav/geometry.hpp"
#include "fnav/ground_filter.hpp"
#include "fnav/obstruction.hpp"
#include "fnav/occupancy.hpp"
#include "fnav/planner.hpp"

#include <optional>
#include <variant>
#include <vector>

namespace fnav {

/// Analytic ground surface: flat or a low-frequency sinusoidal undulation.
struct Terrain {
  enum class Kind { flat, undulating };

  Kind kind = Kind::flat;
  double base_z = 0.0;
  double amplitude = 0.0;
  double wavelength = 30.0;

  double height_at(double x, double y) const;
  double max_slope() const;
};

// World primitives. Trunks are vertical capped cylinders, canopies
// axis-aligned ellipsoids, logs axis-aligned boxes, bushes spheres.
struct Trunk {
  Vec2 center = Vec2::Zero();
  double radius = 0.15;
  double z0 = 0.0, z1 = 5.0;
};
struct Canopy {
  Vec3 center = Vec3::Zero();
  Vec3 radii = Vec3::Ones();
};
struct LogObstacle {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Ones();
};
struct Bush {
  Vec3 center = Vec3::Zero();
  double radius = 0.5;
};
using Primitive = std::variant<Trunk, Canopy, LogObstacle, Bush>;

/// Procedural world: terrain plus obstacle primitives inside
/// [0,size.x] x [0,size.y]. Deterministic for a fixed seed and parameters.
struct World {
  Terrain terrain;
  std::vector<Primitive> obstacles;
  Vec2 size = Vec2(60.0, 60.0);
  uint64_t seed = 0;

  /// Distance to the nearest surface along the ray, if within max_range.
  std::optional<double> raycast(const Vec3& origin, const Vec3& dir, double max_range) const;
  /// True when any primitive overlaps the vertical clearance segment above
  /// the terrain at (x, y). Exact per-primitive tests, no sampling.
  bool column_obstructed(double x, double y, double clearance) const;
  double max_obstacle_top() const;
  double min_terrain() const;
  double max_terrain() const;
};

struct ForestParams {
  Vec2 size = Vec2(60.0, 60.0);
  Terrain terrain;
  double tree_density = 0.02;   // trees / m^2, Poisson-disc placed
  double log_density = 0.0;     // ground logs / m^2
  double bush_density = 0.0;    // bushes / m^2
  double min_tree_spacing = 1.5;

  double trunk_radius_min = 0.12, trunk_radius_max = 0.30;
  double trunk_height_min = 4.0, trunk_height_max = 8.0;
  double canopy_radius_min = 1.5, canopy_radius_max = 3.0;
};

World generate_forest(const ForestParams& params, uint64_t seed);

/// Spinning multi-beam lidar carried along a waypoint polyline above the
/// canopy. The spin axis is the sensor's forward (x) axis, so each sweep
/// fans across-track and covers the ground below.
struct FlightSpec {
  std::vector<Vec3> waypoints;
  double speed = 4.0;      // m/s
  double scan_rate = 5.0;  // poses per second
  int beams = 16;
  double vertical_fov_deg = 30.0;  // total fan width across beams
  int azimuth_steps = 90;
  double max_range = 60.0;
  double range_sigma = 0.01;  // m

  void validate() const;
};

/// Serpentine coverage polyline over the world at the given altitude.
std::vector<Vec3> lawnmower_waypoints(const World& world, double altitude, double pass_spacing,
                                      double margin = 5.0);

struct FlightResult {
  Trajectory trajectory;  // true sensor poses
  ScanSet ideal;          // exact ray intersections
  ScanSet noisy;          // ranges perturbed by N(0, range_sigma^2)
};

FlightResult simulate_flight(const World& world, const FlightSpec& spec, uint64_t seed);

/// Grid spec covering the world's XY extent and the occupied height band,
/// XY-aligned with ground maps built over the same frame.
GridSpec grid_spec_for_world(const World& world, double voxel_size, double z_margin = 0.75);

struct GroundTruth {
  OccupancyGrid grid;      // standard mapping of the ideal scans
  GroundHeightMap ground;  // analytic terrain heights
  ObstructionMap obstruction;
};

GroundTruth build_ground_truth_map(const World& world, const ScanSet& ideal_scans,
                                   const Trajectory& trajectory, const SensorModel& sensor,
                                   const GridSpec& spec, const ObstructionParams& params = {});

enum class MissionMode { prior, naive };

struct MissionSpec {
  Cell2 start = Cell2::Zero();
  Cell2 goal = Cell2::Zero();
  MissionMode mode = MissionMode::prior;
  CostModel cost;
  double footprint_radius = 0.4;  // m
  double local_radius = 5.0;      // m, idealized sensing disc
  int step_budget = 0;            // 0 -> 20 * octile(start, goal)
  double clearance = 1.0;         // m, analytic obstruction height
};

struct MissionResult {
  std::vector<Cell2> executed;
  double length_m = 0.0;
  int replans = 0;
  bool success = false;
  double goal_distance_m = 0.0;
};

/// Executes one goal-directed run: sense the analytic world within
/// local_radius, repair the plan with D* Lite, step one cell, repeat.
/// In naive mode the prior's scores are replaced by a uniform b_min field,
/// so the initial plan is a straight line to the goal.
MissionResult run_mission(const World& world, const ObstructionMap& prior, const MissionSpec& spec);

/// Uniform rejection sampling of analytically free start/goal cells with a
/// minimum separation. Cells keep a small margin to the map border.
std::vector<std::pair<Cell2, Cell2>> sample_mission_pairs(const World& world,
                                                          const ObstructionMap& map, int count,
                                                          double min_separation_m,
                                                          double clearance, uint64_t seed);

// World artifact serialization (JSON).
void save_world(const std::string& path, const World& world);
World load_world(const std::string& path);

}  // namespace fnav
