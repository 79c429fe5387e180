#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "twinpose/commands.hpp"
#include "twinpose/service.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"twinpose: monocular 6DoF pose labeling and evaluation"};
  app.require_subcommand(1);

  twinpose::EvalOptions eval;
  std::string weights_path, eval_out;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate predictions against ground truth");
  eval_cmd->add_option("--gt", eval.gt_dir, "Ground-truth dataset root")->required();
  eval_cmd->add_option("--pred", eval.pred_dir, "Prediction dataset root or frame directory")->required();
  eval_cmd->add_option("--preset", eval.preset, "Loss weight preset")
      ->check(CLI::IsMember({"kitti", "linemod"}));
  eval_cmd->add_option("--weights", weights_path, "key=value weights file (overrides --preset)");
  eval_cmd->add_option("--out", eval_out, "Write the JSON report here");
  eval_cmd->add_flag("--json", eval.json_stdout, "Print the JSON report instead of the table");

  fs::path stats_dataset;
  bool stats_json = false;
  auto* stats_cmd = app.add_subcommand("stats", "Dataset statistics");
  stats_cmd->add_option("--dataset", stats_dataset, "Dataset root")->required();
  stats_cmd->add_flag("--json", stats_json, "Machine-readable output");

  fs::path project_file;
  std::string project_registry, project_out;
  auto* project_cmd = app.add_subcommand("project", "Project annotated objects to wireframes");
  project_cmd->add_option("annotation", project_file, "Annotation file")->required();
  project_cmd->add_option("--registry", project_registry, "Model registry (default: <root>/models/registry.json)");
  project_cmd->add_option("--out", project_out, "Output file (default: stdout)");

  fs::path solve_request, solve_registry;
  auto* solve_cmd = app.add_subcommand("solve", "Solve a pose from 2D-3D correspondences");
  solve_cmd->add_option("request", solve_request, "Request JSON, same body as POST /solve")->required();
  solve_cmd->add_option("--registry", solve_registry, "Model registry")->required();

  twinpose::ServiceConfig serve_config;
  std::optional<int> port_flag;
  auto* serve_cmd = app.add_subcommand("serve", "Run the labeling HTTP service");
  serve_cmd->add_option("--dataset", serve_config.dataset_root, "Dataset root")->required();
  serve_cmd->add_option("--port", port_flag, "Port (default: $TWINPOSE_PORT or 8753)");
  serve_cmd->add_option("--host", serve_config.host, "Bind address");
  serve_cmd->add_flag("--readonly", serve_config.read_only, "Reject annotation writes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? twinpose::kExitOk : twinpose::kExitUsage;
  }

  if (*eval_cmd) {
    if (!weights_path.empty()) eval.weights_config = weights_path;
    if (!eval_out.empty()) eval.out = eval_out;
    return twinpose::cmd_eval(eval, std::cout, std::cerr);
  }
  if (*stats_cmd) return twinpose::cmd_stats(stats_dataset, stats_json, std::cout, std::cerr);
  if (*project_cmd) {
    std::optional<fs::path> registry, out;
    if (!project_registry.empty()) registry = project_registry;
    if (!project_out.empty()) out = project_out;
    return twinpose::cmd_project(project_file, registry, out, std::cout, std::cerr);
  }
  if (*solve_cmd) return twinpose::cmd_solve(solve_request, solve_registry, std::cout, std::cerr);

  try {
    serve_config.port = twinpose::resolve_port(port_flag);
    serve_config.validate();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return twinpose::kExitUsage;
  }
  return twinpose::serve(serve_config, std::cerr);
}
