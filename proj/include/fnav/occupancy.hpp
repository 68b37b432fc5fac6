#pragma once

#include "fnav/geometry.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace fnav {

/// Axis-aligned voxel grid extents. Voxel (i,j,k) spans
/// [origin + (i,j,k)*voxel_size, origin + (i+1,j+1,k+1)*voxel_size).
struct GridSpec {
  Vec3 origin = Vec3::Zero();
  double voxel_size = 0.25;
  int nx = 0, ny = 0, nz = 0;

  static GridSpec from_bounds(const Vec3& min, const Vec3& max, double voxel_size);

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
  }
  Cell3 cell_of(const Vec3& p) const;
  Vec3 cell_center(const Cell3& c) const;
  bool contains(const Cell3& c) const {
    return c.x() >= 0 && c.x() < nx && c.y() >= 0 && c.y() < ny && c.z() >= 0 && c.z() < nz;
  }
  std::size_t index(const Cell3& c) const {  // x-fastest
    return static_cast<std::size_t>(c.x()) +
           static_cast<std::size_t>(nx) * (static_cast<std::size_t>(c.y()) +
                                           static_cast<std::size_t>(ny) * static_cast<std::size_t>(c.z()));
  }
  bool aligned_with(const GridSpec& other, double tol = 1e-9) const;
};

/// Inverse-sensor update constants. p_hit/p_miss drive the per-ray log-odds
/// increments, p_min/p_max bound reported probabilities.
struct SensorModel {
  double p_hit = 0.7;
  double p_miss = 0.4;
  double p_min = 0.03;
  double p_max = 0.97;
  double max_range = 100.0;

  void validate() const;  // requires 0 < p_miss < 0.5 < p_hit < 1
  double logit_hit() const;
  double logit_miss() const;
  double logit_min() const;
  double logit_max() const;
};

/// 3D probabilistic occupancy grid stored as log-odds. The running log-odds
/// sum is kept unclamped so that updates commute; clamping to
/// [logit(p_min), logit(p_max)] is applied when probabilities are read or
/// the grid is exported. Unobserved voxels report probability 0.5 exactly.
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  OccupancyGrid(const GridSpec& spec, const SensorModel& sensor);

  const GridSpec& spec() const { return spec_; }
  const SensorModel& sensor() const { return sensor_; }

  bool observed(std::size_t i) const { return observed_[i] != 0; }
  bool observed(const Cell3& c) const { return observed_[spec_.index(c)]; }
  double probability(std::size_t i) const;
  double probability(const Cell3& c) const { return probability(spec_.index(c)); }
  /// Clamped log-odds; 0 for unobserved voxels.
  double log_odds(std::size_t i) const;

  void add_hit(std::size_t i);
  void add_miss(std::size_t i);
  /// Overwrites a voxel with an explicit probability (used when averaging
  /// sampled maps); marks it observed.
  void set_probability(std::size_t i, double p);
  void set_unobserved(std::size_t i);

  std::size_t observed_count() const;

  /// Raw unclamped log-odds sum, exposed for serialization and tests.
  const std::vector<double>& raw() const { return values_; }
  const std::vector<uint8_t>& observed_mask() const { return observed_; }

 private:
  GridSpec spec_;
  SensorModel sensor_;
  std::vector<double> values_;
  std::vector<uint8_t> observed_;
};

/// Voxel walk from the cell containing `origin` to the cell containing
/// `endpoint`. Consecutive cells are 6-adjacent, no cell repeats, ties at
/// corner crossings step x, then y, then z. Indices are relative to
/// `spec.origin` and may lie outside the grid extents.
std::vector<Cell3> traverse_ray(const GridSpec& spec, const Vec3& origin, const Vec3& endpoint);

/// One world-frame ray ready for integration.
struct WorldRay {
  Vec3 endpoint = Vec3::Zero();
  bool hit = true;
};

/// Applies hits and pass-throughs of rays from a common origin. Per ray each
/// voxel is updated at most once and the terminal voxel's hit takes
/// precedence over its pass-through. Segments are clipped to the grid.
void integrate_scan(OccupancyGrid& grid, const Vec3& origin, std::span<const WorldRay> rays);

/// Occupancy map for a fixed (assumed exact) trajectory.
OccupancyGrid build_standard_map(const ScanSet& scans, const Trajectory& trajectory,
                                 const SensorModel& sensor, const GridSpec& spec);

/// Distribution over the sensor trajectory used for uncertainty-aware
/// mapping.
struct TrajectoryPosterior {
  enum class Model { exact, gps_independent, slam_drift };

  Trajectory mean;
  Model model = Model::exact;
  NoiseSpec gps;               // gps_independent: per-pose marginal noise
  NoiseSpec drift;             // slam_drift: relative-transform noise
  NoiseSpec absolute;          // slam_drift: re-anchoring noise
  double correction_period = 120.0;  // seconds between absolute corrections

  static TrajectoryPosterior exact(Trajectory mean);
  static TrajectoryPosterior gps_independent(Trajectory mean, const NoiseSpec& noise);
  static TrajectoryPosterior slam_drift(Trajectory mean, const NoiseSpec& drift,
                                        const NoiseSpec& absolute, double correction_period);
  void validate() const;
  bool noise_free() const;
};

/// Draws one trajectory from the posterior. gps_independent perturbs each
/// pose component independently; slam_drift perturbs relative pose
/// transforms and composes them so error accumulates, re-anchoring with
/// absolute noise whenever a correction-period boundary is crossed.
/// Deterministic for a fixed seed.
Trajectory sample_trajectory(const TrajectoryPosterior& posterior, uint64_t seed);

/// Streaming probability-space average over per-sample occupancy maps; the
/// reduction core of uncertainty-aware mapping. Unobserved samples
/// contribute the 0.5 prior; a result voxel is observed iff observed in at
/// least one sample. Samples are reduced in the order they are added.
class UaAverage {
 public:
  UaAverage(const GridSpec& spec, const SensorModel& sensor);
  void add(const OccupancyGrid& sample);
  /// Mean of the added samples, stored back as log-odds.
  OccupancyGrid finalize() const;
  int count() const { return count_; }

 private:
  GridSpec spec_;
  SensorModel sensor_;
  std::vector<double> prob_sum_;
  std::vector<uint8_t> observed_any_;
  int count_ = 0;
};

/// Uncertainty-aware map: per-voxel arithmetic mean over `n_samples`
/// per-sample occupancy probabilities (mean taken in probability space, with
/// unobserved samples contributing 0.5), stored back as log-odds. Sample
/// maps may be built in parallel; the averaging always reduces in sample
/// order, so results do not depend on thread count.
OccupancyGrid build_ua_map(const ScanSet& scans, const TrajectoryPosterior& posterior,
                           int n_samples, const SensorModel& sensor, const GridSpec& spec,
                           uint64_t seed, int threads = 0);

}  // namespace fnav
