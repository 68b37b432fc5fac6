#include "fnav/pipeline.hpp"

#include "fnav/formats.hpp"
#include "fnav/io.hpp"
#include "fnav/rng.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <thread>

namespace fnav {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Seed streams per pipeline stage.
constexpr uint64_t kStreamWorld = 101;
constexpr uint64_t kStreamFlight = 102;
constexpr uint64_t kStreamMap = 103;
constexpr uint64_t kStreamEval = 104;
constexpr uint64_t kStreamMissions = 105;

NoiseSpec make_noise(const Vec3& pos_sigma_m, double ang_sigma_deg, double range_sigma = 0.0) {
  NoiseSpec n;
  n.sigma << pos_sigma_m.x(), pos_sigma_m.y(), pos_sigma_m.z(), ang_sigma_deg * kDegToRad,
      ang_sigma_deg * kDegToRad, ang_sigma_deg * kDegToRad;
  n.range_sigma = range_sigma;
  return n;
}

json noise_to_json(const NoiseSpec& n) {
  return json{{"sigma", {n.sigma[0], n.sigma[1], n.sigma[2], n.sigma[3], n.sigma[4], n.sigma[5]}},
              {"range_sigma", n.range_sigma}};
}

uint64_t fnv1a64(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

double jget(const json& j, const char* key, double fallback) {
  return j.contains(key) ? j.at(key).get<double>() : fallback;
}

int jget_int(const json& j, const char* key, int fallback) {
  return j.contains(key) ? j.at(key).get<int>() : fallback;
}

std::string jget_str(const json& j, const char* key, const std::string& fallback) {
  return j.contains(key) ? j.at(key).get<std::string>() : fallback;
}

}  // namespace

PipelineConfig PipelineConfig::defaults() {
  PipelineConfig cfg;
  cfg.forest.log_density = 0.004;
  cfg.forest.bush_density = 0.008;
  cfg.flight.speed = 4.0;
  cfg.flight.scan_rate = 5.0;
  cfg.flight.max_range = 60.0;
  cfg.gps_noise = make_noise({0.05, 0.05, 0.05}, 0.1);
  cfg.drift_noise = make_noise({0.009, 0.009, 0.002}, 0.0057);
  cfg.abs_noise = make_noise({0.05, 0.05, 0.05}, 0.1);
  cfg.eval_base_noise = make_noise({0.015, 0.015, 0.015}, 0.11);
  return cfg;
}

PipelineConfig PipelineConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed config " + path + ": " + e.what());
  }

  PipelineConfig cfg = defaults();
  try {
    cfg.seed = j.contains("seed") ? j.at("seed").get<uint64_t>() : cfg.seed;
    cfg.out_dir = jget_str(j, "out_dir", cfg.out_dir);

    if (j.contains("world")) {
      const json& w = j.at("world");
      if (w.contains("size")) cfg.forest.size = {w.at("size").at(0), w.at("size").at(1)};
      cfg.forest.tree_density = jget(w, "tree_density", cfg.forest.tree_density);
      cfg.forest.log_density = jget(w, "log_density", cfg.forest.log_density);
      cfg.forest.bush_density = jget(w, "bush_density", cfg.forest.bush_density);
      cfg.forest.min_tree_spacing = jget(w, "min_tree_spacing", cfg.forest.min_tree_spacing);
      if (w.contains("terrain")) {
        const json& t = w.at("terrain");
        cfg.forest.terrain.kind = jget_str(t, "kind", "flat") == "undulating"
                                      ? Terrain::Kind::undulating
                                      : Terrain::Kind::flat;
        cfg.forest.terrain.base_z = jget(t, "base_z", 0.0);
        cfg.forest.terrain.amplitude = jget(t, "amplitude", 0.0);
        cfg.forest.terrain.wavelength = jget(t, "wavelength", 30.0);
      }
    }
    if (j.contains("flight")) {
      const json& f = j.at("flight");
      cfg.flight_altitude = jget(f, "altitude", cfg.flight_altitude);
      cfg.pass_spacing = jget(f, "pass_spacing", cfg.pass_spacing);
      cfg.flight.speed = jget(f, "speed", cfg.flight.speed);
      cfg.flight.scan_rate = jget(f, "scan_rate", cfg.flight.scan_rate);
      cfg.flight.beams = jget_int(f, "beams", cfg.flight.beams);
      cfg.flight.vertical_fov_deg = jget(f, "vertical_fov_deg", cfg.flight.vertical_fov_deg);
      cfg.flight.azimuth_steps = jget_int(f, "azimuth_steps", cfg.flight.azimuth_steps);
      cfg.flight.max_range = jget(f, "max_range", cfg.flight.max_range);
      cfg.flight.range_sigma = jget(f, "range_sigma", cfg.flight.range_sigma);
    }
    if (j.contains("mapping")) {
      const json& m = j.at("mapping");
      cfg.voxel_size = jget(m, "voxel_size", cfg.voxel_size);
      cfg.ua_samples = jget_int(m, "samples", cfg.ua_samples);
      cfg.sensor.p_hit = jget(m, "p_hit", cfg.sensor.p_hit);
      cfg.sensor.p_miss = jget(m, "p_miss", cfg.sensor.p_miss);
      cfg.sensor.p_min = jget(m, "p_min", cfg.sensor.p_min);
      cfg.sensor.p_max = jget(m, "p_max", cfg.sensor.p_max);
      cfg.noise_model = jget_str(m, "noise_model", cfg.noise_model);
      cfg.perturb_scale = jget(m, "perturb", cfg.perturb_scale);
      const double gps_m = jget(m, "gps_sigma_m", 0.05);
      const double gps_deg = jget(m, "gps_sigma_deg", 0.1);
      cfg.gps_noise = make_noise({gps_m, gps_m, gps_m}, gps_deg);
      if (m.contains("drift_sigma_m")) {
        const json& d = m.at("drift_sigma_m");
        cfg.drift_noise = make_noise({d.at(0), d.at(1), d.at(2)}, jget(m, "drift_sigma_deg", 0.0057));
      }
      const double abs_m = jget(m, "abs_sigma_m", 0.05);
      cfg.abs_noise = make_noise({abs_m, abs_m, abs_m}, jget(m, "abs_sigma_deg", 0.1));
      cfg.correction_period = jget(m, "correction_period", cfg.correction_period);
    }
    if (j.contains("obstruction")) {
      const json& o = j.at("obstruction");
      cfg.obstruction.column_voxels = jget_int(o, "column_voxels", cfg.obstruction.column_voxels);
      if (o.contains("weights")) {
        cfg.obstruction.weights = o.at("weights").get<std::vector<double>>();
      }
      cfg.footprint_radius = jget(o, "footprint_radius", cfg.footprint_radius);
    }
    if (j.contains("cost")) {
      const json& c = j.at("cost");
      cfg.cost.mode = jget_str(c, "mode", "logreach") == "expected" ? CostModel::Mode::expected
                                                                    : CostModel::Mode::log_reach;
      cfg.cost.c_obst = jget(c, "c_obst", cfg.cost.c_obst);
      cfg.cost.b_clamp_eps = jget(c, "b_clamp_eps", cfg.cost.b_clamp_eps);
    }
    if (j.contains("missions")) {
      const json& m = j.at("missions");
      cfg.mission_pairs = jget_int(m, "pairs", cfg.mission_pairs);
      cfg.min_separation = jget(m, "min_separation", cfg.min_separation);
      cfg.local_radius = jget(m, "local_radius", cfg.local_radius);
      cfg.clearance = jget(m, "clearance", cfg.clearance);
      cfg.step_budget = jget_int(m, "step_budget", cfg.step_budget);
    }
    if (j.contains("evaluation")) {
      const json& e = j.at("evaluation");
      if (e.contains("perturb_levels")) {
        cfg.perturb_levels = e.at("perturb_levels").get<std::vector<int>>();
      }
      cfg.repetitions = jget_int(e, "repetitions", cfg.repetitions);
      const double bm = jget(e, "base_sigma_m", 0.015);
      cfg.eval_base_noise = make_noise({bm, bm, bm}, jget(e, "base_sigma_deg", 0.11));
    }
  } catch (const json::exception& e) {
    throw ConfigError("invalid config value in " + path + ": " + e.what());
  }
  return cfg;
}

void PipelineConfig::apply_override(const std::string& key, const std::string& value) {
  auto as_double = [&]() {
    double v = 0.0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
      throw ConfigError("invalid numeric value for --" + key + ": " + value);
    }
    return v;
  };
  if (key == "seed") {
    seed = static_cast<uint64_t>(as_double());
  } else if (key == "out") {
    out_dir = value;
  } else if (key == "samples") {
    ua_samples = static_cast<int>(as_double());
  } else if (key == "cost") {
    if (value == "expected") cost.mode = CostModel::Mode::expected;
    else if (value == "logreach") cost.mode = CostModel::Mode::log_reach;
    else throw ConfigError("unknown cost mode: " + value);
  } else if (key == "cobst") {
    cost.c_obst = as_double();
  } else if (key == "local-radius") {
    local_radius = as_double();
  } else if (key == "perturb" || key == "noise") {
    perturb_scale = as_double();
  } else {
    throw ConfigError("unknown override --" + key);
  }
}

std::string PipelineConfig::canonical_json() const {
  json j;
  j["seed"] = seed;
  j["out_dir"] = out_dir;
  j["world"] = {{"size", {forest.size.x(), forest.size.y()}},
                {"tree_density", forest.tree_density},
                {"log_density", forest.log_density},
                {"bush_density", forest.bush_density},
                {"min_tree_spacing", forest.min_tree_spacing},
                {"terrain",
                 {{"kind", forest.terrain.kind == Terrain::Kind::flat ? "flat" : "undulating"},
                  {"base_z", forest.terrain.base_z},
                  {"amplitude", forest.terrain.amplitude},
                  {"wavelength", forest.terrain.wavelength}}}};
  j["flight"] = {{"altitude", flight_altitude},   {"pass_spacing", pass_spacing},
                 {"speed", flight.speed},         {"scan_rate", flight.scan_rate},
                 {"beams", flight.beams},         {"vertical_fov_deg", flight.vertical_fov_deg},
                 {"azimuth_steps", flight.azimuth_steps}, {"max_range", flight.max_range},
                 {"range_sigma", flight.range_sigma}};
  j["mapping"] = {{"voxel_size", voxel_size},
                  {"samples", ua_samples},
                  {"p_hit", sensor.p_hit},
                  {"p_miss", sensor.p_miss},
                  {"p_min", sensor.p_min},
                  {"p_max", sensor.p_max},
                  {"noise_model", noise_model},
                  {"perturb", perturb_scale},
                  {"gps", noise_to_json(gps_noise)},
                  {"drift", noise_to_json(drift_noise)},
                  {"abs", noise_to_json(abs_noise)},
                  {"correction_period", correction_period}};
  j["obstruction"] = {{"column_voxels", obstruction.column_voxels},
                      {"weights", obstruction.weights},
                      {"footprint_radius", footprint_radius}};
  j["cost"] = {{"mode", cost.mode == CostModel::Mode::expected ? "expected" : "logreach"},
               {"c_obst", cost.c_obst},
               {"b_clamp_eps", cost.b_clamp_eps}};
  j["missions"] = {{"pairs", mission_pairs},
                   {"min_separation", min_separation},
                   {"local_radius", local_radius},
                   {"clearance", clearance},
                   {"step_budget", step_budget}};
  j["evaluation"] = {{"perturb_levels", perturb_levels},
                     {"repetitions", repetitions},
                     {"base", noise_to_json(eval_base_noise)}};
  return j.dump();
}

std::string PipelineConfig::config_hash() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_json())));
  return buf;
}

TrajectoryPosterior PipelineConfig::make_posterior(const Trajectory& mean) const {
  if (noise_model == "exact" || perturb_scale == 0.0) {
    return TrajectoryPosterior::exact(mean);
  }
  if (noise_model == "gps") {
    return TrajectoryPosterior::gps_independent(mean, gps_noise.scaled(perturb_scale));
  }
  if (noise_model == "slam") {
    return TrajectoryPosterior::slam_drift(mean, drift_noise.scaled(perturb_scale),
                                           abs_noise.scaled(perturb_scale), correction_period);
  }
  throw ConfigError("unknown noise model: " + noise_model);
}

namespace {

struct Paths {
  fs::path dir;
  explicit Paths(const PipelineConfig& cfg) : dir(cfg.out_dir) {}
  std::string world() const { return (dir / "world.json").string(); }
  std::string trajectory() const { return (dir / "trajectory.csv").string(); }
  std::string scans_ideal() const { return (dir / "scans_ideal.csv").string(); }
  std::string scans_noisy() const { return (dir / "scans_noisy.csv").string(); }
  std::string map(const std::string& mode) const { return (dir / ("map_" + mode + ".uaog")).string(); }
  std::string ground_csv() const { return (dir / "ground.csv").string(); }
  std::string ground_pgm() const { return (dir / "ground.pgm").string(); }
  std::string obstruction_csv(const std::string& m) const { return (dir / ("obstruction_" + m + ".csv")).string(); }
  std::string obstruction_bin(const std::string& m) const { return (dir / ("obstruction_" + m + ".bin")).string(); }
  std::string obstruction_png(const std::string& m) const { return (dir / ("obstruction_" + m + ".png")).string(); }
  std::string path_csv() const { return (dir / "path.csv").string(); }
  std::string missions() const { return (dir / "missions.csv").string(); }
  std::string eval_map(const std::string& ab) const { return (dir / ("eval_" + ab + ".csv")).string(); }
  std::string meta() const { return (dir / "run_meta.json").string(); }
};

void write_meta(const PipelineConfig& cfg) {
  const Paths paths(cfg);
  fs::create_directories(paths.dir);
  std::ofstream out(paths.meta(), std::ios::binary);
  if (!out) throw IoError("cannot write " + paths.meta());
  json j;
  j["config_hash"] = cfg.config_hash();
  j["config"] = json::parse(cfg.canonical_json());
  out << j.dump(2) << "\n";
}

std::string hash_comment(const PipelineConfig& cfg) { return "config_hash=" + cfg.config_hash(); }

ClothParams cloth_params_for(const PipelineConfig& cfg) {
  ClothParams cloth;
  cloth.cloth_resolution = cfg.voxel_size;
  return cloth;
}

FlightSpec flight_spec_for(const PipelineConfig& cfg, const World& world) {
  FlightSpec spec = cfg.flight;
  if (spec.waypoints.empty()) {
    spec.waypoints = lawnmower_waypoints(world, cfg.flight_altitude, cfg.pass_spacing);
  }
  return spec;
}

GroundHeightMap ground_from_scans(const PipelineConfig& cfg, const ScanSet& scans,
                                  const Trajectory& traj, const GridSpec& spec) {
  const auto points = aggregate_world_points(scans, traj);
  GridFrame2D frame{spec.origin.head<2>(), spec.voxel_size, spec.nx, spec.ny};
  return segment_ground(points, cloth_params_for(cfg), frame).map;
}

}  // namespace

void cmd_gen_world(const PipelineConfig& cfg) {
  const Paths paths(cfg);
  fs::create_directories(paths.dir);
  const World world = generate_forest(cfg.forest, derive_seed(cfg.seed, kStreamWorld));
  save_world(paths.world(), world);
  write_meta(cfg);
}

void cmd_fly(const PipelineConfig& cfg) {
  const Paths paths(cfg);
  fs::create_directories(paths.dir);
  const World world = load_world(paths.world());
  const FlightSpec spec = flight_spec_for(cfg, world);
  const FlightResult flight = simulate_flight(world, spec, derive_seed(cfg.seed, kStreamFlight));
  save_trajectory(paths.trajectory(), flight.trajectory, hash_comment(cfg));
  save_scans(paths.scans_ideal(), flight.ideal, hash_comment(cfg));
  save_scans(paths.scans_noisy(), flight.noisy, hash_comment(cfg));
  write_meta(cfg);
}

void cmd_map(const PipelineConfig& cfg, const std::string& mode) {
  if (mode != "standard" && mode != "ua") throw ConfigError("map mode must be standard or ua");
  const Paths paths(cfg);
  const World world = load_world(paths.world());
  const Trajectory traj = load_trajectory(paths.trajectory());
  const ScanSet scans = load_scans(paths.scans_noisy(), traj, cfg.flight.max_range);
  const GridSpec spec = grid_spec_for_world(world, cfg.voxel_size);

  OccupancyGrid grid;
  if (mode == "standard") {
    grid = build_standard_map(scans, traj, cfg.sensor, spec);
  } else {
    grid = build_ua_map(scans, cfg.make_posterior(traj), cfg.ua_samples, cfg.sensor, spec,
                        derive_seed(cfg.seed, kStreamMap));
  }
  save_grid(paths.map(mode), grid);
  write_meta(cfg);
}

void cmd_score(const PipelineConfig& cfg, const std::string& mode) {
  const Paths paths(cfg);
  const World world = load_world(paths.world());
  const Trajectory traj = load_trajectory(paths.trajectory());
  const ScanSet scans = load_scans(paths.scans_noisy(), traj, cfg.flight.max_range);
  const GridSpec spec = grid_spec_for_world(world, cfg.voxel_size);
  const OccupancyGrid grid = load_grid(paths.map(mode), cfg.sensor);

  const GroundHeightMap ground = ground_from_scans(cfg, scans, traj, spec);
  const ObstructionMap obst = build_obstruction_map(grid, ground, cfg.obstruction);

  save_ground_csv(paths.ground_csv(), ground, hash_comment(cfg));
  save_ground_pgm(paths.ground_pgm(), ground);
  save_obstruction_csv(paths.obstruction_csv(mode), obst, hash_comment(cfg));
  save_obstruction_bin(paths.obstruction_bin(mode), obst);
  save_obstruction_png(paths.obstruction_png(mode), obst);
  write_meta(cfg);
}

Path cmd_plan(const PipelineConfig& cfg, const std::string& mode, const Cell2& start,
              const Cell2& goal) {
  const Paths paths(cfg);
  const ObstructionMap map = load_obstruction_bin(paths.obstruction_bin(mode));
  const Path path = plan(map, cfg.footprint_radius, start, goal, cfg.cost);
  save_path_csv(paths.path_csv(), path, map, hash_comment(cfg));
  write_meta(cfg);
  return path;
}

std::string cost_name(const CostModel& cost) {
  if (cost.mode == CostModel::Mode::log_reach) return "logreach";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "expected%g", cost.c_obst);
  return buf;
}

void cmd_mission(const PipelineConfig& cfg) {
  const Paths paths(cfg);
  const World world = load_world(paths.world());
  const ObstructionMap map = load_obstruction_bin(paths.obstruction_bin("ua"));

  const auto pairs = sample_mission_pairs(world, map, cfg.mission_pairs, cfg.min_separation,
                                          cfg.clearance, derive_seed(cfg.seed, kStreamMissions));
  std::vector<MissionRecord> records;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (const MissionMode mode : {MissionMode::prior, MissionMode::naive}) {
      MissionSpec spec;
      spec.start = pairs[i].first;
      spec.goal = pairs[i].second;
      spec.mode = mode;
      spec.cost = cfg.cost;
      spec.footprint_radius = cfg.footprint_radius;
      spec.local_radius = cfg.local_radius;
      spec.clearance = cfg.clearance;
      spec.step_budget = cfg.step_budget;
      const MissionResult res = run_mission(world, map, spec);
      MissionRecord rec;
      rec.pair_id = static_cast<int>(i);
      rec.mode = mode == MissionMode::prior ? "prior" : "naive";
      rec.cost = cost_name(cfg.cost);
      rec.run_id = rec.mode + "_" + rec.cost + "_" + std::to_string(i);
      rec.length_m = res.length_m;
      rec.replans = res.replans;
      rec.success = res.success;
      records.push_back(rec);
    }
  }
  save_mission_csv(paths.missions(), records, hash_comment(cfg));
  write_meta(cfg);
}

std::vector<MapAccuracyRow> evaluate_map_accuracy(const World& world, const FlightResult& flight,
                                                  const PipelineConfig& cfg, uint64_t seed,
                                                  int threads) {
  const GridSpec spec = grid_spec_for_world(world, cfg.voxel_size);
  const OccupancyGrid gt = build_standard_map(flight.ideal, flight.trajectory, cfg.sensor, spec);

  struct Job {
    int level;
    int rep;
  };
  std::vector<Job> jobs;
  for (int level : cfg.perturb_levels) {
    for (int rep = 0; rep < cfg.repetitions; ++rep) jobs.push_back({level, rep});
  }
  std::vector<std::array<MapAccuracyRow, 2>> results(jobs.size());

  auto run_job = [&](std::size_t ji) {
    const auto [level, rep] = jobs[ji];
    const uint64_t job_seed = derive_seed(seed, static_cast<uint64_t>(level) * 1000 + rep);
    const NoiseSpec noise = cfg.eval_base_noise.scaled(level);

    // The estimated trajectory is the true one under one draw of the noise;
    // the UA mapper then marginalizes over the same noise level.
    const Trajectory est = sample_trajectory(
        TrajectoryPosterior::gps_independent(flight.trajectory, noise), derive_seed(job_seed, 1));
    const OccupancyGrid std_map = build_standard_map(flight.noisy, est, cfg.sensor, spec);
    const OccupancyGrid ua_map =
        build_ua_map(flight.noisy, TrajectoryPosterior::gps_independent(est, noise),
                     cfg.ua_samples, cfg.sensor, spec, derive_seed(job_seed, 2), 1);

    for (int m = 0; m < 2; ++m) {
      const OccupancyGrid& est_map = m == 0 ? std_map : ua_map;
      MapAccuracyRow row;
      row.level = level;
      row.rep = rep;
      row.method = m == 0 ? "standard" : "ua";
      const KldReport kld = mean_kld_per_class(gt, est_map);
      row.kld_overall = kld.mean_overall;
      row.kld_free = kld.mean_free;
      row.kld_uncertain = kld.mean_uncertain;
      row.kld_occupied = kld.mean_occupied;
      row.auc = roc_auc(gt, est_map);
      results[ji][m] = row;
    }
  };

  int n_threads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::clamp<int>(n_threads, 1, static_cast<int>(jobs.size()));
  if (n_threads <= 1) {
    for (std::size_t ji = 0; ji < jobs.size(); ++ji) run_job(ji);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (int t = 0; t < n_threads; ++t) {
      pool.emplace_back([&]() {
        for (std::size_t ji = next.fetch_add(1); ji < jobs.size(); ji = next.fetch_add(1)) {
          run_job(ji);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  std::vector<MapAccuracyRow> rows;
  rows.reserve(jobs.size() * 2);
  for (const auto& pair : results) {
    rows.push_back(pair[0]);
    rows.push_back(pair[1]);
  }
  return rows;
}

std::vector<RatioScenarioResult> evaluate_path_ratios(const World& world,
                                                      const FlightResult& flight,
                                                      const PipelineConfig& cfg,
                                                      const std::vector<std::string>& scenarios,
                                                      const std::vector<CostModel>& costs,
                                                      uint64_t seed) {
  const GridSpec spec = grid_spec_for_world(world, cfg.voxel_size);

  std::vector<RatioScenarioResult> out;
  for (const std::string& scenario : scenarios) {
    PipelineConfig scen_cfg = cfg;
    scen_cfg.noise_model = scenario;
    scen_cfg.perturb_scale = 1.0;
    const uint64_t scen_seed = derive_seed(seed, fnv1a64(scenario));

    // One draw of the scenario noise acts as the estimated trajectory.
    const Trajectory est = sample_trajectory(scen_cfg.make_posterior(flight.trajectory),
                                             derive_seed(scen_seed, 11));
    const OccupancyGrid std_map = build_standard_map(flight.noisy, est, cfg.sensor, spec);
    const OccupancyGrid ua_map =
        build_ua_map(flight.noisy, scen_cfg.make_posterior(est), cfg.ua_samples, cfg.sensor, spec,
                     derive_seed(scen_seed, 12));
    const GroundHeightMap ground = ground_from_scans(cfg, flight.noisy, est, spec);
    const ObstructionMap obst_std = build_obstruction_map(std_map, ground, cfg.obstruction);
    const ObstructionMap obst_ua = build_obstruction_map(ua_map, ground, cfg.obstruction);

    // Same start/goal pairs across scenarios, costs, and prior kinds.
    const auto pairs = sample_mission_pairs(world, obst_ua, cfg.mission_pairs,
                                            cfg.min_separation, cfg.clearance,
                                            derive_seed(seed, kStreamMissions));

    for (const CostModel& cost : costs) {
      std::vector<MissionRecord> naive_records;
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        MissionSpec mspec;
        mspec.start = pairs[i].first;
        mspec.goal = pairs[i].second;
        mspec.mode = MissionMode::naive;
        mspec.cost = cost;
        mspec.footprint_radius = cfg.footprint_radius;
        mspec.local_radius = cfg.local_radius;
        mspec.clearance = cfg.clearance;
        mspec.step_budget = cfg.step_budget;
        const MissionResult res = run_mission(world, obst_ua, mspec);
        MissionRecord rec;
        rec.pair_id = static_cast<int>(i);
        rec.mode = "naive";
        rec.cost = cost_name(cost);
        rec.run_id = scenario + "_naive_" + rec.cost + "_" + std::to_string(i);
        rec.length_m = res.length_m;
        rec.replans = res.replans;
        rec.success = res.success;
        naive_records.push_back(rec);
      }

      for (const std::string prior_kind : {"ua", "standard"}) {
        const ObstructionMap& prior = prior_kind == "ua" ? obst_ua : obst_std;
        RatioScenarioResult r;
        r.scenario = scenario;
        r.cost_name = cost_name(cost);
        r.prior_kind = prior_kind;
        r.baseline = naive_records;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
          MissionSpec mspec;
          mspec.start = pairs[i].first;
          mspec.goal = pairs[i].second;
          mspec.mode = MissionMode::prior;
          mspec.cost = cost;
          mspec.footprint_radius = cfg.footprint_radius;
          mspec.local_radius = cfg.local_radius;
          mspec.clearance = cfg.clearance;
          mspec.step_budget = cfg.step_budget;
          const MissionResult res = run_mission(world, prior, mspec);
          MissionRecord rec;
          rec.pair_id = static_cast<int>(i);
          rec.mode = "prior_" + std::string(prior_kind);
          rec.cost = cost_name(cost);
          rec.run_id = scenario + "_" + rec.mode + "_" + rec.cost + "_" + std::to_string(i);
          rec.length_m = res.length_m;
          rec.replans = res.replans;
          rec.success = res.success;
          r.ours.push_back(rec);
        }
        r.stats = path_ratio_report(r.ours, r.baseline);
        out.push_back(std::move(r));
      }
    }
  }
  return out;
}

namespace {

void append_csv_double(std::string& buf, double v) {
  char tmp[32];
  const int n = std::snprintf(tmp, sizeof(tmp), "%.9g", v);
  buf.append(tmp, static_cast<std::size_t>(n));
}

}  // namespace

void cmd_evaluate(const PipelineConfig& cfg, const std::string& ablation) {
  const Paths paths(cfg);
  fs::create_directories(paths.dir);

  const World world = generate_forest(cfg.forest, derive_seed(cfg.seed, kStreamWorld));
  const FlightSpec spec = flight_spec_for(cfg, world);
  const FlightResult flight = simulate_flight(world, spec, derive_seed(cfg.seed, kStreamFlight));

  if (ablation == "kld" || ablation == "auc") {
    const auto rows =
        evaluate_map_accuracy(world, flight, cfg, derive_seed(cfg.seed, kStreamEval));
    std::string buf = "# " + hash_comment(cfg) + "\n";
    buf += "level,rep,method,kld_overall,kld_free,kld_uncertain,kld_occupied,auc\n";
    for (const MapAccuracyRow& r : rows) {
      buf += std::to_string(r.level) + ',' + std::to_string(r.rep) + ',' + r.method + ',';
      append_csv_double(buf, r.kld_overall);
      buf += ',';
      append_csv_double(buf, r.kld_free);
      buf += ',';
      append_csv_double(buf, r.kld_uncertain);
      buf += ',';
      append_csv_double(buf, r.kld_occupied);
      buf += ',';
      append_csv_double(buf, r.auc);
      buf += '\n';
    }
    std::ofstream out(paths.eval_map(ablation), std::ios::binary);
    if (!out) throw IoError("cannot write " + paths.eval_map(ablation));
    out << buf;
  } else if (ablation == "ratio") {
    CostModel logreach;
    logreach.mode = CostModel::Mode::log_reach;
    CostModel exp5;
    exp5.mode = CostModel::Mode::expected;
    exp5.c_obst = 5.0;
    CostModel exp20;
    exp20.mode = CostModel::Mode::expected;
    exp20.c_obst = 20.0;
    const auto results = evaluate_path_ratios(world, flight, cfg, {"gps", "slam"},
                                              {logreach, exp5, exp20},
                                              derive_seed(cfg.seed, kStreamEval));
    std::string buf = "# " + hash_comment(cfg) + "\n";
    buf += "scenario,cost,prior,pairs,mean_ratio,median_ratio,q1,q3,failures_ours,failures_naive\n";
    for (const RatioScenarioResult& r : results) {
      buf += r.scenario + ',' + r.cost_name + ',' + r.prior_kind + ',' +
             std::to_string(r.stats.pairs_compared) + ',';
      append_csv_double(buf, r.stats.mean);
      buf += ',';
      append_csv_double(buf, r.stats.median);
      buf += ',';
      append_csv_double(buf, r.stats.q1);
      buf += ',';
      append_csv_double(buf, r.stats.q3);
      buf += ',' + std::to_string(r.stats.failures_ours) + ',' +
             std::to_string(r.stats.failures_baseline) + '\n';
    }
    std::ofstream out(paths.eval_map(ablation), std::ios::binary);
    if (!out) throw IoError("cannot write " + paths.eval_map(ablation));
    out << buf;
    // Full per-run ledger alongside the summary.
    std::vector<MissionRecord> all;
    for (const RatioScenarioResult& r : results) {
      all.insert(all.end(), r.ours.begin(), r.ours.end());
    }
    if (!results.empty()) {
      for (const RatioScenarioResult& r : results) {
        if (r.prior_kind == "ua") all.insert(all.end(), r.baseline.begin(), r.baseline.end());
      }
    }
    save_mission_csv(paths.missions(), all, hash_comment(cfg));
  } else {
    throw ConfigError("unknown ablation: " + ablation + " (expected kld, auc or ratio)");
  }
  write_meta(cfg);
}

}  // namespace fnav
