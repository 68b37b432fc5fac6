#include "fnav/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace fnav {

VoxelClass classify_voxel(double p_gt) {
  if (p_gt < 0.45) return VoxelClass::free_space;
  if (p_gt > 0.55) return VoxelClass::occupied;
  return VoxelClass::uncertain;
}

double bernoulli_kld(double p_gt, double p_est, double eps) {
  const double p = std::clamp(p_gt, eps, 1.0 - eps);
  const double q = std::clamp(p_est, eps, 1.0 - eps);
  return p * std::log(p / q) + (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
}

KldReport mean_kld_per_class(const OccupancyGrid& gt, const OccupancyGrid& est, double eps) {
  if (!gt.spec().aligned_with(est.spec()) || gt.spec().nx != est.spec().nx ||
      gt.spec().ny != est.spec().ny || gt.spec().nz != est.spec().nz) {
    throw std::invalid_argument("grids are not aligned");
  }

  double sum_free = 0.0, sum_unc = 0.0, sum_occ = 0.0;
  KldReport r;
  const std::size_t n = gt.spec().voxel_count();
  for (std::size_t i = 0; i < n; ++i) {
    if (!gt.observed(i)) continue;
    const double p = gt.probability(i);
    const double kld = bernoulli_kld(p, est.probability(i), eps);
    switch (classify_voxel(p)) {
      case VoxelClass::free_space:
        sum_free += kld;
        ++r.n_free;
        break;
      case VoxelClass::uncertain:
        sum_unc += kld;
        ++r.n_uncertain;
        break;
      case VoxelClass::occupied:
        sum_occ += kld;
        ++r.n_occupied;
        break;
    }
  }
  if (r.n_free > 0) r.mean_free = sum_free / static_cast<double>(r.n_free);
  if (r.n_uncertain > 0) r.mean_uncertain = sum_unc / static_cast<double>(r.n_uncertain);
  if (r.n_occupied > 0) r.mean_occupied = sum_occ / static_cast<double>(r.n_occupied);
  if (r.total() > 0) {
    r.mean_overall = (sum_free + sum_unc + sum_occ) / static_cast<double>(r.total());
  }
  return r;
}

double rank_auc(std::span<const std::pair<bool, double>> samples) {
  std::size_t n_pos = 0, n_neg = 0;
  for (const auto& [label, score] : samples) {
    (label ? n_pos : n_neg) += 1;
  }
  if (n_pos == 0 || n_neg == 0) {
    throw UndefinedAucError("AUC undefined: need at least one sample of each class");
  }

  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return samples[a].second < samples[b].second; });

  // Rank sum of positives with averaged ranks over tied scores.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && samples[order[j]].second == samples[order[i]].second) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
    for (std::size_t k = i; k < j; ++k) {
      if (samples[order[k]].first) rank_sum_pos += avg_rank;
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

double roc_auc(const OccupancyGrid& gt, const OccupancyGrid& est) {
  if (!gt.spec().aligned_with(est.spec()) || gt.spec().nx != est.spec().nx ||
      gt.spec().ny != est.spec().ny || gt.spec().nz != est.spec().nz) {
    throw std::invalid_argument("grids are not aligned");
  }
  std::vector<std::pair<bool, double>> samples;
  const std::size_t n = gt.spec().voxel_count();
  samples.reserve(n / 2);
  for (std::size_t i = 0; i < n; ++i) {
    if (!gt.observed(i)) continue;
    const VoxelClass cls = classify_voxel(gt.probability(i));
    if (cls == VoxelClass::uncertain) continue;
    samples.emplace_back(cls == VoxelClass::occupied, est.probability(i));
  }
  return rank_auc(samples);
}

RatioStats path_ratio_report(std::span<const MissionRecord> ours,
                             std::span<const MissionRecord> baseline) {
  std::map<int, const MissionRecord*> base_by_pair;
  for (const MissionRecord& r : baseline) {
    if (!base_by_pair.emplace(r.pair_id, &r).second) {
      throw std::invalid_argument("duplicate baseline pair_id " + std::to_string(r.pair_id));
    }
  }
  std::map<int, const MissionRecord*> ours_by_pair;
  for (const MissionRecord& r : ours) {
    if (!ours_by_pair.emplace(r.pair_id, &r).second) {
      throw std::invalid_argument("duplicate pair_id " + std::to_string(r.pair_id));
    }
  }
  if (ours_by_pair.size() != base_by_pair.size()) {
    throw std::invalid_argument("run sets are not paired one-to-one");
  }

  RatioStats stats;
  for (const auto& [pair_id, our] : ours_by_pair) {
    const auto it = base_by_pair.find(pair_id);
    if (it == base_by_pair.end()) {
      throw std::invalid_argument("unpaired run for pair_id " + std::to_string(pair_id));
    }
    const MissionRecord* base = it->second;
    if (!our->success) ++stats.failures_ours;
    if (!base->success) ++stats.failures_baseline;
    if (!our->success || !base->success) continue;
    if (base->length_m <= 0.0) continue;
    stats.ratios.push_back(our->length_m / base->length_m);
  }
  stats.pairs_compared = static_cast<int>(stats.ratios.size());
  if (!stats.ratios.empty()) {
    stats.mean = mean_of(stats.ratios);
    stats.median = quantile_of(stats.ratios, 0.5);
    stats.q1 = quantile_of(stats.ratios, 0.25);
    stats.q3 = quantile_of(stats.ratios, 0.75);
  }
  return stats;
}

double mean_of(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double stddev_of(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

double quantile_of(std::vector<double> xs, double q) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return xs[lo] * (1.0 - frac) + xs[hi] * frac;
}

}  // namespace fnav
