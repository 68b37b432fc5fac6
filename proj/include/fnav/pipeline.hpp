#pragma once

#include "fnav/evaluation.hpp"
#include "fnav/simulation.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fnav {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Everything one batch run needs, loadable from a JSON config file.
/// All randomness derives from the single root seed.
struct PipelineConfig {
  uint64_t seed = 1;
  std::string out_dir = "out";

  ForestParams forest;

  double flight_altitude = 22.0;
  double pass_spacing = 12.0;
  FlightSpec flight;  // waypoints filled from the lawnmower pattern when empty

  double voxel_size = 0.25;
  SensorModel sensor;
  int ua_samples = 20;
  std::string noise_model = "gps";  // exact | gps | slam
  double perturb_scale = 1.0;
  NoiseSpec gps_noise;
  NoiseSpec drift_noise;
  NoiseSpec abs_noise;
  double correction_period = 120.0;

  ObstructionParams obstruction;
  double footprint_radius = 0.4;

  CostModel cost;

  int mission_pairs = 40;
  double min_separation = 30.0;
  double local_radius = 5.0;
  double clearance = 1.0;
  int step_budget = 0;

  std::vector<int> perturb_levels = {1, 5, 10, 20};
  int repetitions = 10;
  NoiseSpec eval_base_noise;  // Table-style base sigma, scaled by the level

  static PipelineConfig defaults();
  /// Throws ConfigError when the file is missing or malformed.
  static PipelineConfig from_file(const std::string& path);
  void apply_override(const std::string& key, const std::string& value);

  std::string canonical_json() const;
  /// FNV-1a over the canonical JSON; embedded in every CSV artifact.
  std::string config_hash() const;
  TrajectoryPosterior make_posterior(const Trajectory& mean) const;
};

// Subcommand pipelines. Artifacts land in cfg.out_dir under fixed names:
//   world.json, trajectory.csv, scans_ideal.csv, scans_noisy.csv,
//   map_<mode>.uaog, ground.csv/.pgm, obstruction_<mode>.csv/.bin/.png,
//   path.csv, missions.csv, eval_*.csv
void cmd_gen_world(const PipelineConfig& cfg);
void cmd_fly(const PipelineConfig& cfg);
void cmd_map(const PipelineConfig& cfg, const std::string& mode);
void cmd_score(const PipelineConfig& cfg, const std::string& mode);
Path cmd_plan(const PipelineConfig& cfg, const std::string& mode, const Cell2& start,
              const Cell2& goal);
void cmd_mission(const PipelineConfig& cfg);
void cmd_evaluate(const PipelineConfig& cfg, const std::string& ablation);

/// One map-accuracy measurement: KLD/AUC of standard and UA maps against
/// the ground truth for a perturbation level and repetition.
struct MapAccuracyRow {
  int level = 1;
  int rep = 0;
  std::string method;  // "standard" | "ua"
  double kld_overall = 0.0, kld_free = 0.0, kld_uncertain = 0.0, kld_occupied = 0.0;
  double auc = 0.0;
};

/// Runs the perturbation protocol on one world/flight: for each level k and
/// repetition, the estimated trajectory is the true one perturbed by
/// k * base sigma, the standard map is built on it, and the UA map
/// marginalizes over the same noise model with `ua_samples` draws.
std::vector<MapAccuracyRow> evaluate_map_accuracy(const World& world, const FlightResult& flight,
                                                  const PipelineConfig& cfg, uint64_t seed,
                                                  int threads = 0);

struct RatioScenarioResult {
  std::string scenario;  // "gps" | "slam"
  std::string cost_name;
  std::string prior_kind;  // "ua" | "standard"
  RatioStats stats;
  std::vector<MissionRecord> ours;
  std::vector<MissionRecord> baseline;
};

/// Mission path-ratio study: builds UA and standard prior maps under the
/// configured noise scenario, then runs paired prior/naive missions over
/// sampled start/goal pairs for each requested cost function.
std::vector<RatioScenarioResult> evaluate_path_ratios(const World& world,
                                                      const FlightResult& flight,
                                                      const PipelineConfig& cfg,
                                                      const std::vector<std::string>& scenarios,
                                                      const std::vector<CostModel>& costs,
                                                      uint64_t seed);

std::string cost_name(const CostModel& cost);

}  // namespace fnav
