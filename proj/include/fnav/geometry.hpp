#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <vector>

namespace fnav {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Cell2 = Eigen::Vector2i;
using Cell3 = Eigen::Vector3i;

/// Rotation from roll-pitch-yaw, applied Z·Y·X (yaw, then pitch, then roll
/// about world axes). rpy = (roll, pitch, yaw).
Mat3 rpy_to_matrix(const Vec3& rpy);

/// Inverse of rpy_to_matrix. Pitch is reported in [-pi/2, pi/2].
Vec3 matrix_to_rpy(const Mat3& rot);

/// Timestamped 6-DoF sensor pose.
struct Pose {
  double t = 0.0;
  Vec3 position = Vec3::Zero();
  Vec3 rpy = Vec3::Zero();  // roll, pitch, yaw [rad]

  Mat3 rotation() const { return rpy_to_matrix(rpy); }
  Vec3 to_world(const Vec3& p_sensor) const { return rotation() * p_sensor + position; }
};

/// Ordered pose sequence with strictly increasing timestamps.
struct Trajectory {
  std::vector<Pose> poses;

  std::size_t size() const { return poses.size(); }
  /// Throws std::invalid_argument if empty or timestamps are not strictly
  /// monotone increasing, or any component is non-finite.
  void validate() const;
};

/// One lidar ray in the sensor frame. For a hit, `v` is the hit point; for a
/// miss (no return within max range), `v` is interpreted as the ray
/// direction and `miss` is set.
struct Ray {
  Vec3 v = Vec3::Zero();
  bool miss = false;

  /// Sensor-frame endpoint used for free-space integration: the hit point,
  /// or the direction scaled to max_range for a miss.
  Vec3 endpoint_sensor(double max_range) const;
};

/// Rays attributed to a single pose of the trajectory.
struct RayBundle {
  std::size_t pose_index = 0;
  std::vector<Ray> rays;
};

/// Lidar rays grouped by pose, in sensor-frame coordinates.
struct ScanSet {
  double max_range = 0.0;
  std::vector<RayBundle> bundles;

  std::size_t ray_count() const;
  /// Throws std::invalid_argument if a bundle references a pose outside the
  /// trajectory or a hit lies beyond max range.
  void validate(const Trajectory& trajectory) const;
};

/// Per-component additive Gaussian noise description:
/// sigma = (x, y, z [m], roll, pitch, yaw [rad]), plus range noise [m].
struct NoiseSpec {
  Vec6 sigma = Vec6::Zero();
  double range_sigma = 0.0;

  bool is_zero() const;
  void validate() const;  // throws std::invalid_argument on negative components

  static NoiseSpec iso(double pos_sigma, double ang_sigma, double range = 0.0);
  NoiseSpec scaled(double k) const;
};

/// World-frame hit points of one bundle (misses are skipped).
std::vector<Vec3> transform_to_world(const RayBundle& bundle, const Pose& pose);

/// World-frame hit points of the whole scan set.
std::vector<Vec3> aggregate_world_points(const ScanSet& scans, const Trajectory& trajectory);

}  // namespace fnav
