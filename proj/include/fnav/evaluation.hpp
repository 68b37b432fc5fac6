#pragma once

#include "fnav/occupancy.hpp"

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fnav {

/// Ground-truth voxel classes by occupancy probability:
/// free < 0.45, occupied > 0.55, uncertain in between.
enum class VoxelClass { free_space, uncertain, occupied };

VoxelClass classify_voxel(double p_gt);

/// Bernoulli KL divergence in nats; both inputs are clamped into
/// [eps, 1-eps] before evaluation.
double bernoulli_kld(double p_gt, double p_est, double eps = 1e-4);

struct KldReport {
  double mean_overall = 0.0;
  double mean_free = 0.0;
  double mean_uncertain = 0.0;
  double mean_occupied = 0.0;
  std::size_t n_free = 0;
  std::size_t n_uncertain = 0;
  std::size_t n_occupied = 0;

  std::size_t total() const { return n_free + n_uncertain + n_occupied; }
};

/// Mean KLD per ground-truth class over voxels observed in the ground
/// truth. Voxels unobserved in the estimate predict 0.5.
KldReport mean_kld_per_class(const OccupancyGrid& gt, const OccupancyGrid& est, double eps = 1e-4);

struct UndefinedAucError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// ROC AUC of the estimate as a free/occupied classifier against the
/// ground-truth labels, computed with the Mann-Whitney rank statistic
/// (tied scores receive averaged ranks). Uncertain-class and gt-unobserved
/// voxels are excluded. Throws UndefinedAucError when either class is empty.
double roc_auc(const OccupancyGrid& gt, const OccupancyGrid& est);

/// AUC over raw (label, score) pairs; label true = positive/occupied.
double rank_auc(std::span<const std::pair<bool, double>> samples);

struct MissionRecord {
  std::string run_id;
  int pair_id = 0;
  std::string mode;  // "prior" | "naive"
  std::string cost;  // "logreach" | "expected5" | ...
  double length_m = 0.0;
  int replans = 0;
  bool success = true;
};

struct RatioStats {
  std::vector<double> ratios;  // one per successfully paired run
  double mean = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  int pairs_compared = 0;
  int failures_ours = 0;
  int failures_baseline = 0;
};

/// Executed-path-length ratios ours/baseline paired by pair_id. Pairs where
/// either run failed are excluded from the ratios and counted as failures.
/// Throws std::invalid_argument when the runs cannot be paired one-to-one.
RatioStats path_ratio_report(std::span<const MissionRecord> ours,
                             std::span<const MissionRecord> baseline);

double mean_of(std::span<const double> xs);
double stddev_of(std::span<const double> xs);  // sample std deviation
double quantile_of(std::vector<double> xs, double q);

}  // namespace fnav
