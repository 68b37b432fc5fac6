#include "fnav/occupancy.hpp"

#include "fnav/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace fnav {

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }
double sigmoid(double l) { return 1.0 / (1.0 + std::exp(-l)); }

}  // namespace

GridSpec GridSpec::from_bounds(const Vec3& min, const Vec3& max, double voxel_size) {
  if (voxel_size <= 0.0) throw std::invalid_argument("voxel size must be positive");
  GridSpec spec;
  spec.origin = min;
  spec.voxel_size = voxel_size;
  for (int i = 0; i < 3; ++i) {
    const double extent = max[i] - min[i];
    if (extent < 0.0) throw std::invalid_argument("grid bounds inverted");
    int n = static_cast<int>(std::ceil(extent / voxel_size));
    if (n == 0) n = 1;
    (&spec.nx)[i] = n;
  }
  return spec;
}

Cell3 GridSpec::cell_of(const Vec3& p) const {
  return {static_cast<int>(std::floor((p.x() - origin.x()) / voxel_size)),
          static_cast<int>(std::floor((p.y() - origin.y()) / voxel_size)),
          static_cast<int>(std::floor((p.z() - origin.z()) / voxel_size))};
}

Vec3 GridSpec::cell_center(const Cell3& c) const {
  return origin + voxel_size * Vec3(c.x() + 0.5, c.y() + 0.5, c.z() + 0.5);
}

bool GridSpec::aligned_with(const GridSpec& other, double tol) const {
  return std::abs(voxel_size - other.voxel_size) <= tol &&
         (origin - other.origin).cwiseAbs().maxCoeff() <= tol;
}

void SensorModel::validate() const {
  if (!(0.0 < p_miss && p_miss < 0.5 && 0.5 < p_hit && p_hit < 1.0)) {
    throw std::invalid_argument("sensor model requires 0 < p_miss < 0.5 < p_hit < 1");
  }
  if (!(0.0 < p_min && p_min < 0.5 && 0.5 < p_max && p_max < 1.0)) {
    throw std::invalid_argument("sensor model clamp bounds must satisfy 0 < p_min < 0.5 < p_max < 1");
  }
  if (!(max_range > 0.0)) throw std::invalid_argument("sensor max range must be positive");
}

double SensorModel::logit_hit() const { return logit(p_hit); }
double SensorModel::logit_miss() const { return logit(p_miss); }
double SensorModel::logit_min() const { return logit(p_min); }
double SensorModel::logit_max() const { return logit(p_max); }

OccupancyGrid::OccupancyGrid(const GridSpec& spec, const SensorModel& sensor)
    : spec_(spec), sensor_(sensor), values_(spec.voxel_count(), 0.0), observed_(spec.voxel_count(), 0) {
  sensor.validate();
}

double OccupancyGrid::probability(std::size_t i) const {
  if (!observed_[i]) return 0.5;
  return sigmoid(std::clamp(values_[i], sensor_.logit_min(), sensor_.logit_max()));
}

double OccupancyGrid::log_odds(std::size_t i) const {
  if (!observed_[i]) return 0.0;
  return std::clamp(values_[i], sensor_.logit_min(), sensor_.logit_max());
}

void OccupancyGrid::add_hit(std::size_t i) {
  values_[i] += sensor_.logit_hit();
  observed_[i] = 1;
}

void OccupancyGrid::add_miss(std::size_t i) {
  values_[i] += sensor_.logit_miss();
  observed_[i] = 1;
}

void OccupancyGrid::set_probability(std::size_t i, double p) {
  values_[i] = logit(p);
  observed_[i] = 1;
}

void OccupancyGrid::set_unobserved(std::size_t i) {
  values_[i] = 0.0;
  observed_[i] = 0;
}

std::size_t OccupancyGrid::observed_count() const {
  std::size_t n = 0;
  for (uint8_t o : observed_) n += o;
  return n;
}

std::vector<Cell3> traverse_ray(const GridSpec& spec, const Vec3& origin, const Vec3& endpoint) {
  const Cell3 start = spec.cell_of(origin);
  const Cell3 end = spec.cell_of(endpoint);
  const Cell3 delta = end - start;
  const long n_steps =
      std::abs(static_cast<long>(delta.x())) + std::abs(delta.y()) + std::abs(delta.z());
  if (n_steps >= 1000000) throw std::invalid_argument("ray segment spans too many voxels");

  std::vector<Cell3> cells;
  cells.reserve(static_cast<std::size_t>(n_steps) + 1);
  cells.push_back(start);
  if (n_steps == 0) return cells;

  const Vec3 dir = endpoint - origin;
  Cell3 cell = start;
  int step[3];
  double t_max[3], t_delta[3];
  for (int a = 0; a < 3; ++a) {
    step[a] = delta[a] > 0 ? 1 : (delta[a] < 0 ? -1 : 0);
    if (step[a] == 0 || dir[a] == 0.0) {
      t_max[a] = std::numeric_limits<double>::infinity();
      t_delta[a] = std::numeric_limits<double>::infinity();
      continue;
    }
    const double next_boundary =
        spec.origin[a] + (cell[a] + (step[a] > 0 ? 1 : 0)) * spec.voxel_size;
    t_max[a] = (next_boundary - origin[a]) / dir[a];
    t_delta[a] = spec.voxel_size / std::abs(dir[a]);
  }

  // One axis per step keeps the sequence 6-adjacent; marching exactly
  // |dx|+|dy|+|dz| steps toward the end cell guarantees termination under
  // floating-point noise at corner crossings.
  for (long s = 0; s < n_steps; ++s) {
    int axis = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
      if (cell[a] == end[a]) continue;
      if (t_max[a] < best) {
        best = t_max[a];
        axis = a;
      }
    }
    cell[axis] += step[axis];
    t_max[axis] += t_delta[axis];
    cells.push_back(cell);
  }
  return cells;
}

namespace {

// Liang-Barsky style clip of segment [o, e] against the grid box; returns
// false when the segment misses the box entirely.
bool clip_to_grid(const GridSpec& spec, const Vec3& o, const Vec3& e, Vec3& a, Vec3& b) {
  const Vec3 box_min = spec.origin;
  const Vec3 box_max = spec.origin + spec.voxel_size * Vec3(spec.nx, spec.ny, spec.nz);
  double t0 = 0.0, t1 = 1.0;
  const Vec3 d = e - o;
  for (int axis = 0; axis < 3; ++axis) {
    if (d[axis] == 0.0) {
      if (o[axis] < box_min[axis] || o[axis] > box_max[axis]) return false;
      continue;
    }
    double ta = (box_min[axis] - o[axis]) / d[axis];
    double tb = (box_max[axis] - o[axis]) / d[axis];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  a = o + t0 * d;
  b = o + t1 * d;
  return true;
}

}  // namespace

void integrate_scan(OccupancyGrid& grid, const Vec3& origin, std::span<const WorldRay> rays) {
  const GridSpec& spec = grid.spec();
  for (const WorldRay& ray : rays) {
    Vec3 a, b;
    if (!clip_to_grid(spec, origin, ray.endpoint, a, b)) continue;
    const Cell3 terminal = spec.cell_of(ray.endpoint);
    for (const Cell3& c : traverse_ray(spec, a, b)) {
      if (!spec.contains(c)) continue;
      const std::size_t i = spec.index(c);
      if (ray.hit && c == terminal) {
        grid.add_hit(i);
      } else {
        grid.add_miss(i);
      }
    }
  }
}

OccupancyGrid build_standard_map(const ScanSet& scans, const Trajectory& trajectory,
                                 const SensorModel& sensor, const GridSpec& spec) {
  trajectory.validate();
  scans.validate(trajectory);
  OccupancyGrid grid(spec, sensor);
  std::vector<WorldRay> world;
  for (const auto& bundle : scans.bundles) {
    const Pose& pose = trajectory.poses[bundle.pose_index];
    const Mat3 rot = pose.rotation();
    world.clear();
    world.reserve(bundle.rays.size());
    for (const Ray& r : bundle.rays) {
      if (r.miss && r.v.isZero(0.0)) continue;  // no direction to carve along
      world.push_back({rot * r.endpoint_sensor(scans.max_range) + pose.position, !r.miss});
    }
    integrate_scan(grid, pose.position, world);
  }
  return grid;
}

TrajectoryPosterior TrajectoryPosterior::exact(Trajectory mean) {
  TrajectoryPosterior p;
  p.mean = std::move(mean);
  p.model = Model::exact;
  return p;
}

TrajectoryPosterior TrajectoryPosterior::gps_independent(Trajectory mean, const NoiseSpec& noise) {
  TrajectoryPosterior p;
  p.mean = std::move(mean);
  p.model = Model::gps_independent;
  p.gps = noise;
  return p;
}

TrajectoryPosterior TrajectoryPosterior::slam_drift(Trajectory mean, const NoiseSpec& drift,
                                                    const NoiseSpec& absolute,
                                                    double correction_period) {
  TrajectoryPosterior p;
  p.mean = std::move(mean);
  p.model = Model::slam_drift;
  p.drift = drift;
  p.absolute = absolute;
  p.correction_period = correction_period;
  return p;
}

void TrajectoryPosterior::validate() const {
  mean.validate();
  gps.validate();
  drift.validate();
  absolute.validate();
  if (model == Model::slam_drift && !(correction_period > 0.0)) {
    throw std::invalid_argument("slam_drift correction period must be positive");
  }
}

bool TrajectoryPosterior::noise_free() const {
  switch (model) {
    case Model::exact:
      return true;
    case Model::gps_independent:
      return gps.sigma.isZero(0.0);
    case Model::slam_drift:
      return drift.sigma.isZero(0.0) && absolute.sigma.isZero(0.0);
  }
  return true;
}

namespace {

Vec6 draw_noise(Rng& rng, const NoiseSpec& spec) {
  Vec6 n;
  for (int i = 0; i < 6; ++i) n[i] = normal(rng, spec.sigma[i]);
  return n;
}

Pose perturb_pose(const Pose& p, const Vec6& noise) {
  Pose out = p;
  out.position += noise.head<3>();
  out.rpy += noise.tail<3>();
  return out;
}

}  // namespace

Trajectory sample_trajectory(const TrajectoryPosterior& posterior, uint64_t seed) {
  posterior.validate();
  if (posterior.noise_free()) return posterior.mean;

  Rng rng(seed);
  const auto& mean = posterior.mean.poses;
  Trajectory out;
  out.poses.reserve(mean.size());

  if (posterior.model == TrajectoryPosterior::Model::gps_independent) {
    for (const Pose& p : mean) {
      out.poses.push_back(perturb_pose(p, draw_noise(rng, posterior.gps)));
    }
    return out;
  }

  // slam_drift: perturbed relative transforms composed sequentially, with
  // absolute re-anchoring whenever the timestamp crosses a correction
  // boundary (and at the first pose).
  const double period = posterior.correction_period;
  out.poses.push_back(perturb_pose(mean[0], draw_noise(rng, posterior.absolute)));
  for (std::size_t k = 1; k < mean.size(); ++k) {
    const bool correction =
        std::floor(mean[k].t / period) != std::floor(mean[k - 1].t / period);
    if (correction) {
      out.poses.push_back(perturb_pose(mean[k], draw_noise(rng, posterior.absolute)));
      continue;
    }
    const Mat3 rot_prev = mean[k - 1].rotation();
    const Mat3 rel_rot = rot_prev.transpose() * mean[k].rotation();
    const Vec3 rel_pos = rot_prev.transpose() * (mean[k].position - mean[k - 1].position);
    const Vec6 noise = draw_noise(rng, posterior.drift);

    const Pose& prev = out.poses.back();
    const Mat3 prev_rot = prev.rotation();
    Pose next;
    next.t = mean[k].t;
    next.position = prev.position + prev_rot * (rel_pos + noise.head<3>());
    next.rpy = matrix_to_rpy(prev_rot * rel_rot * rpy_to_matrix(noise.tail<3>()));
    out.poses.push_back(next);
  }
  return out;
}

UaAverage::UaAverage(const GridSpec& spec, const SensorModel& sensor)
    : spec_(spec), sensor_(sensor), prob_sum_(spec.voxel_count(), 0.0),
      observed_any_(spec.voxel_count(), 0) {}

void UaAverage::add(const OccupancyGrid& sample) {
  if (sample.spec().voxel_count() != spec_.voxel_count() || !sample.spec().aligned_with(spec_)) {
    throw std::invalid_argument("sample grid does not match the averaging spec");
  }
  for (std::size_t i = 0; i < prob_sum_.size(); ++i) {
    prob_sum_[i] += sample.probability(i);
    observed_any_[i] |= sample.observed_mask()[i];
  }
  ++count_;
}

OccupancyGrid UaAverage::finalize() const {
  if (count_ < 1) throw std::logic_error("no sample maps were added");
  OccupancyGrid result(spec_, sensor_);
  const double inv_n = 1.0 / static_cast<double>(count_);
  for (std::size_t i = 0; i < prob_sum_.size(); ++i) {
    if (observed_any_[i]) result.set_probability(i, prob_sum_[i] * inv_n);
  }
  return result;
}

OccupancyGrid build_ua_map(const ScanSet& scans, const TrajectoryPosterior& posterior,
                           int n_samples, const SensorModel& sensor, const GridSpec& spec,
                           uint64_t seed, int threads) {
  if (n_samples < 1) throw std::invalid_argument("UA mapping requires at least one sample");
  posterior.validate();

  int batch = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  batch = std::clamp(batch, 1, n_samples);

  UaAverage average(spec, sensor);
  std::vector<OccupancyGrid> slots(static_cast<std::size_t>(batch));
  for (int first = 0; first < n_samples; first += batch) {
    const int count = std::min(batch, n_samples - first);
    auto build_one = [&](int slot) {
      const uint64_t sample_seed = derive_seed(seed, static_cast<uint64_t>(first + slot));
      const Trajectory sampled = sample_trajectory(posterior, sample_seed);
      slots[static_cast<std::size_t>(slot)] = build_standard_map(scans, sampled, sensor, spec);
    };
    if (count == 1) {
      build_one(0);
    } else {
      std::vector<std::thread> workers;
      workers.reserve(static_cast<std::size_t>(count));
      for (int s = 0; s < count; ++s) workers.emplace_back(build_one, s);
      for (auto& w : workers) w.join();
    }
    // Reduce strictly in sample order so results are independent of the
    // thread count.
    for (int s = 0; s < count; ++s) average.add(slots[static_cast<std::size_t>(s)]);
  }
  return average.finalize();
}

}  // namespace fnav
