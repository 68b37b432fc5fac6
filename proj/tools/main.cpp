#include "fnav/formats.hpp"
#include "fnav/io.hpp"
#include "fnav/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::string> seed, out, samples, cost, cobst, local_radius, perturb, noise;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON run configuration");
  auto opt = [&](const char* flag, std::optional<std::string>& slot, const char* help) {
    cmd->add_option_function<std::string>(
        flag, [&slot](const std::string& v) { slot = v; }, help);
  };
  opt("--seed", args.seed, "root seed (overrides config)");
  opt("--out", args.out, "output directory");
  opt("--samples", args.samples, "UA trajectory samples N");
  opt("--cost", args.cost, "cost mode: expected | logreach");
  opt("--cobst", args.cobst, "expected-cost obstruction penalty");
  opt("--local-radius", args.local_radius, "mission sensing radius [m]");
  opt("--perturb", args.perturb, "noise scale multiplier k");
  opt("--noise", args.noise, "alias of --perturb");
}

fnav::PipelineConfig resolve_config(const CommonArgs& args) {
  fnav::PipelineConfig cfg = args.config_path.empty()
                                 ? fnav::PipelineConfig::defaults()
                                 : fnav::PipelineConfig::from_file(args.config_path);
  if (args.seed) cfg.apply_override("seed", *args.seed);
  if (args.out) cfg.apply_override("out", *args.out);
  if (args.samples) cfg.apply_override("samples", *args.samples);
  if (args.cost) cfg.apply_override("cost", *args.cost);
  if (args.cobst) cfg.apply_override("cobst", *args.cobst);
  if (args.local_radius) cfg.apply_override("local-radius", *args.local_radius);
  if (args.perturb) cfg.apply_override("perturb", *args.perturb);
  if (args.noise) cfg.apply_override("noise", *args.noise);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"aerial-lidar obstruction mapping and ground-robot planning toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string mode = "ua";
  std::string ablation = "kld";
  std::vector<int> start_cell{0, 0}, goal_cell{0, 0};

  CLI::App* c_world = app.add_subcommand("gen-world", "generate a procedural forest world");
  add_common(c_world, args);
  CLI::App* c_fly = app.add_subcommand("fly", "simulate the aerial lidar flight");
  add_common(c_fly, args);
  CLI::App* c_map = app.add_subcommand("map", "build an occupancy grid from the scans");
  add_common(c_map, args);
  c_map->add_option("--mode", mode, "standard | ua")->default_val("ua");
  CLI::App* c_score = app.add_subcommand("score", "ground filtering and obstruction scoring");
  add_common(c_score, args);
  c_score->add_option("--mode", mode, "which map to score: standard | ua")->default_val("ua");
  CLI::App* c_plan = app.add_subcommand("plan", "plan a path on the obstruction map");
  add_common(c_plan, args);
  c_plan->add_option("--mode", mode, "which obstruction map: standard | ua")->default_val("ua");
  c_plan->add_option("--start", start_cell, "start cell ix iy")->expected(2);
  c_plan->add_option("--goal", goal_cell, "goal cell ix iy")->expected(2);
  CLI::App* c_mission = app.add_subcommand("mission", "run the paired prior/naive mission batch");
  add_common(c_mission, args);
  CLI::App* c_eval = app.add_subcommand("evaluate", "run an ablation study");
  add_common(c_eval, args);
  c_eval->add_option("--ablation", ablation, "kld | auc | ratio")->default_val("kld");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "E_ARGS: " << e.what() << "\n";
    return 3;
  }

  try {
    const fnav::PipelineConfig cfg = resolve_config(args);
    if (c_world->parsed()) {
      fnav::cmd_gen_world(cfg);
    } else if (c_fly->parsed()) {
      fnav::cmd_fly(cfg);
    } else if (c_map->parsed()) {
      fnav::cmd_map(cfg, mode);
    } else if (c_score->parsed()) {
      fnav::cmd_score(cfg, mode);
    } else if (c_plan->parsed()) {
      const fnav::Path path = fnav::cmd_plan(cfg, mode, {start_cell[0], start_cell[1]},
                                             {goal_cell[0], goal_cell[1]});
      std::printf("planned %zu cells, cost %.6f\n", path.cells.size(), path.total_cost);
    } else if (c_mission->parsed()) {
      fnav::cmd_mission(cfg);
    } else if (c_eval->parsed()) {
      fnav::cmd_evaluate(cfg, ablation);
    }
  } catch (const fnav::ConfigError& e) {
    std::cerr << "E_CONFIG: " << e.what() << "\n";
    return 2;
  } catch (const fnav::IoError& e) {
    std::cerr << "E_IO: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "E_RUNTIME: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
