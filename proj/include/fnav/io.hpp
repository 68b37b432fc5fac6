#pragma once

#include "fnav/geometry.hpp"

#include <stdexcept>
#include <string>

namespace fnav {

/// Raised for malformed or unreadable files; message carries the path and,
/// where available, the 1-based line number.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Trajectory CSV: header `t,x,y,z,roll,pitch,yaw`, one record per pose.
// Lines starting with '#' are skipped.
Trajectory load_trajectory(const std::string& path);
void save_trajectory(const std::string& path, const Trajectory& trajectory,
                     const std::string& comment = {});

// Scan CSV: header `pose_idx,sx,sy,sz,miss`. (sx,sy,sz) is the sensor-frame
// hit point; for miss=1 it is interpreted as the ray direction instead.
ScanSet load_scans(const std::string& path, const Trajectory& trajectory, double max_range);
void save_scans(const std::string& path, const ScanSet& scans, const std::string& comment = {});

// Binary little-endian PLY with per-vertex x,y,z and scalar pose_idx
// (sensor-frame hits; misses are not representable in this format).
ScanSet load_scans_ply(const std::string& path, const Trajectory& trajectory, double max_range);
void save_scans_ply(const std::string& path, const ScanSet& scans);

}  // namespace fnav
