#pragma once

#include "fnav/evaluation.hpp"
#include "fnav/ground_filter.hpp"
#include "fnav/obstruction.hpp"
#include "fnav/occupancy.hpp"
#include "fnav/planner.hpp"

#include <span>
#include <string>

namespace fnav {

// Occupancy grid binary format "UAOG1": magic, float64 origin[3], float64
// voxel_size, uint32 dims[3], sensor clamp bounds as float64 p_min/p_max,
// then nx*ny*nz float32 clamped log-odds (x-fastest) and the observed
// bitmask packed LSB-first.
void save_grid(const std::string& path, const OccupancyGrid& grid);
OccupancyGrid load_grid(const std::string& path, const SensorModel& sensor);

/// Debug CSV `(ix,iy,iz,probability)` of observed voxels; z_slice -1 dumps
/// every layer.
void save_grid_csv(const std::string& path, const OccupancyGrid& grid, int z_slice = -1,
                   const std::string& comment = {});

// Ground height map: 16-bit PGM (min..max height scaled to 0..65535, scale
// recorded in a header comment) and CSV `(ix,iy,height,source)`.
void save_ground_pgm(const std::string& path, const GroundHeightMap& map);
void save_ground_csv(const std::string& path, const GroundHeightMap& map,
                     const std::string& comment = {});

// Obstruction map: CSV `(ix,iy,b,ground_z)` with geometry in header
// comments, a compact binary form, and a false-color PNG
// (green = free, blue = uncertain, red = obstructed).
void save_obstruction_csv(const std::string& path, const ObstructionMap& map,
                          const std::string& comment = {});
ObstructionMap load_obstruction_csv(const std::string& path);
void save_obstruction_bin(const std::string& path, const ObstructionMap& map);
ObstructionMap load_obstruction_bin(const std::string& path);
void save_obstruction_png(const std::string& path, const ObstructionMap& map);

/// Path CSV `(ix,iy,world_x,world_y)`.
void save_path_csv(const std::string& path, const Path& p, const ObstructionMap& map,
                   const std::string& comment = {});

/// Mission ledger CSV `(run_id,mode,cost,length,replans,success)`.
void save_mission_csv(const std::string& path, std::span<const MissionRecord> records,
                      const std::string& comment = {});

void write_png_rgb8(const std::string& path, int width, int height,
                    std::span<const unsigned char> rgb);

}  // namespace fnav
