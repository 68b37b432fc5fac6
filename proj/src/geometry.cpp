#include "fnav/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace fnav {

Mat3 rpy_to_matrix(const Vec3& rpy) {
  const Eigen::AngleAxisd roll(rpy.x(), Vec3::UnitX());
  const Eigen::AngleAxisd pitch(rpy.y(), Vec3::UnitY());
  const Eigen::AngleAxisd yaw(rpy.z(), Vec3::UnitZ());
  return (yaw * pitch * roll).toRotationMatrix();
}

Vec3 matrix_to_rpy(const Mat3& rot) {
  // R = Rz(yaw) Ry(pitch) Rx(roll)
  const double pitch = std::asin(std::clamp(-rot(2, 0), -1.0, 1.0));
  double roll, yaw;
  if (std::abs(rot(2, 0)) < 1.0 - 1e-12) {
    roll = std::atan2(rot(2, 1), rot(2, 2));
    yaw = std::atan2(rot(1, 0), rot(0, 0));
  } else {
    // Gimbal lock: yaw and roll are coupled, report all rotation as roll.
    roll = std::atan2(-rot(1, 2), rot(1, 1));
    yaw = 0.0;
  }
  return {roll, pitch, yaw};
}

void Trajectory::validate() const {
  if (poses.empty()) {
    throw std::invalid_argument("trajectory is empty");
  }
  double prev_t = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const Pose& p = poses[i];
    if (!std::isfinite(p.t) || !p.position.allFinite() || !p.rpy.allFinite()) {
      throw std::invalid_argument("trajectory pose " + std::to_string(i) + " has non-finite components");
    }
    if (p.t <= prev_t) {
      throw std::invalid_argument("trajectory timestamps not strictly increasing at pose " + std::to_string(i));
    }
    prev_t = p.t;
  }
}

Vec3 Ray::endpoint_sensor(double max_range) const {
  if (!miss) return v;
  const double n = v.norm();
  if (n <= 0.0) return Vec3::Zero();
  return v * (max_range / n);
}

std::size_t ScanSet::ray_count() const {
  std::size_t n = 0;
  for (const auto& b : bundles) n += b.rays.size();
  return n;
}

void ScanSet::validate(const Trajectory& trajectory) const {
  const double tol = 1e-9;
  for (const auto& b : bundles) {
    if (b.pose_index >= trajectory.size()) {
      throw std::invalid_argument("scan bundle references pose " + std::to_string(b.pose_index) +
                                  " outside trajectory of size " + std::to_string(trajectory.size()));
    }
    for (const auto& r : b.rays) {
      if (!r.miss && r.v.norm() > max_range + tol) {
        throw std::invalid_argument("hit distance exceeds max range in bundle for pose " +
                                    std::to_string(b.pose_index));
      }
    }
  }
}

bool NoiseSpec::is_zero() const {
  return sigma.isZero(0.0) && range_sigma == 0.0;
}

void NoiseSpec::validate() const {
  for (int i = 0; i < 6; ++i) {
    if (!(sigma[i] >= 0.0)) throw std::invalid_argument("noise sigma components must be >= 0");
  }
  if (!(range_sigma >= 0.0)) throw std::invalid_argument("range sigma must be >= 0");
}

NoiseSpec NoiseSpec::iso(double pos_sigma, double ang_sigma, double range) {
  NoiseSpec n;
  n.sigma << pos_sigma, pos_sigma, pos_sigma, ang_sigma, ang_sigma, ang_sigma;
  n.range_sigma = range;
  return n;
}

NoiseSpec NoiseSpec::scaled(double k) const {
  NoiseSpec n = *this;
  n.sigma *= k;
  return n;
}

std::vector<Vec3> transform_to_world(const RayBundle& bundle, const Pose& pose) {
  const Mat3 rot = pose.rotation();
  std::vector<Vec3> out;
  out.reserve(bundle.rays.size());
  for (const auto& r : bundle.rays) {
    if (r.miss) continue;
    out.push_back(rot * r.v + pose.position);
  }
  return out;
}

std::vector<Vec3> aggregate_world_points(const ScanSet& scans, const Trajectory& trajectory) {
  std::vector<Vec3> out;
  for (const auto& b : scans.bundles) {
    const Pose& pose = trajectory.poses.at(b.pose_index);
    const Mat3 rot = pose.rotation();
    for (const auto& r : b.rays) {
      if (r.miss) continue;
      out.push_back(rot * r.v + pose.position);
    }
  }
  return out;
}

}  // namespace fnav
