#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gplace/cli.hpp"

namespace {

// Exit codes: 0 success, 2 usage/config error, 3 data error,
// 4 no placement for any target.
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNoPlacement = 4;

void apply_placement_flags(CLI::App* cmd, gplace::PlacementConfig& p) {
  cmd->add_option("--seed", p.seed, "random seed");
  cmd->add_option("--voxel-size", p.voxel_size, "voxel edge length in meters");
  cmd->add_option("--jitter-deg", p.jitter_deg, "max |azimuth jitter| in degrees");
  cmd->add_option("--num-placements", p.num_placements, "placements per target");
  cmd->add_option("--visibility-threshold", p.visibility_threshold,
                  "visibility score threshold");
  cmd->add_option("--margin-voxels", p.margin_voxels, "XY widening of the avatar mask");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scene augmentation with pointing avatars and geometric grounding evaluation"};
  app.require_subcommand(1);

  // impute
  auto* impute_cmd = app.add_subcommand("impute", "place pointing avatars into scenes");
  std::string config_path;
  impute_cmd->add_option("--config", config_path, "run config JSON")->required();
  int threads_override = -1;
  impute_cmd->add_option("--threads", threads_override, "worker pool size");
  gplace::PlacementConfig impute_flags;  // sentinel values detect explicit flags
  auto* seed_opt = impute_cmd->add_option("--seed", impute_flags.seed, "random seed");
  auto* voxel_opt = impute_cmd->add_option("--voxel-size", impute_flags.voxel_size, "voxel size m");
  auto* jitter_opt = impute_cmd->add_option("--jitter-deg", impute_flags.jitter_deg, "max jitter");
  auto* nplace_opt =
      impute_cmd->add_option("--num-placements", impute_flags.num_placements, "placements");
  auto* vis_opt = impute_cmd->add_option("--visibility-threshold",
                                         impute_flags.visibility_threshold, "threshold");
  auto* margin_opt =
      impute_cmd->add_option("--margin-voxels", impute_flags.margin_voxels, "mask widening");

  // score
  auto* score_cmd = app.add_subcommand("score", "rank proposals for a placement record");
  gplace::ScoreRequest score_req;
  score_cmd->add_option("--records", score_req.records_path, "records JSON")->required();
  score_cmd->add_option("--proposals", score_req.proposals_path, "proposals JSON")->required();
  score_cmd->add_option("--record-index", score_req.record_index, "record to score");
  score_cmd->add_option("--w-conf", score_req.w_confidence, "confidence weight");
  score_cmd->add_option("--w-bias", score_req.w_bias, "gesture bias weight");
  score_cmd->add_flag("--random-weights", score_req.random_weights,
                      "draw fusion weights uniformly on the simplex");
  score_cmd->add_option("--seed", score_req.seed, "seed for --random-weights");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "grounding accuracy report");
  gplace::EvalRequest eval_req;
  eval_cmd->add_option("--predictions", eval_req.predictions_path, "predictions JSON")->required();
  eval_cmd->add_option("--out", eval_req.report_path, "report JSON path");
  eval_cmd->add_option("--thresholds", eval_req.thresholds, "IoU thresholds");

  // inspect
  auto* inspect_cmd = app.add_subcommand("inspect", "dump grids for debugging");
  gplace::InspectRequest inspect_req;
  inspect_cmd->add_option("--scene", inspect_req.scene_ply, "scene PLY")->required();
  inspect_cmd->add_option("--seg", inspect_req.scene_seg, "segmentation JSON")->required();
  inspect_cmd->add_option("--what", inspect_req.what, "grid | visibility");
  inspect_cmd->add_option("--target", inspect_req.target_object_id, "target object id");
  inspect_cmd->add_option("--slice", inspect_req.slice_k, "z layer for visibility CSV");
  inspect_cmd->add_option("--out", inspect_req.out_path, "output path (default stdout)");
  apply_placement_flags(inspect_cmd, inspect_req.placement);

  // prompt
  auto* prompt_cmd = app.add_subcommand("prompt", "emit referring-expression prompts");
  gplace::PromptRequest prompt_req;
  prompt_cmd->add_option("--records", prompt_req.records_path, "records JSON")->required();
  prompt_cmd->add_option("--label", prompt_req.target_label, "target label")->required();
  prompt_cmd->add_option("--n", prompt_req.n_variants, "variants per record");
  prompt_cmd->add_option("--out", prompt_req.out_path, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (impute_cmd->parsed()) {
      gplace::RunConfig cfg = gplace::read_run_config(config_path);
      if (threads_override > 0) cfg.threads = threads_override;
      if (seed_opt->count()) cfg.placement.seed = impute_flags.seed;
      if (voxel_opt->count()) cfg.placement.voxel_size = impute_flags.voxel_size;
      if (jitter_opt->count()) cfg.placement.jitter_deg = impute_flags.jitter_deg;
      if (nplace_opt->count()) cfg.placement.num_placements = impute_flags.num_placements;
      if (vis_opt->count()) cfg.placement.visibility_threshold = impute_flags.visibility_threshold;
      if (margin_opt->count()) cfg.placement.margin_voxels = impute_flags.margin_voxels;
      gplace::run_impute(cfg, std::cout);
    } else if (score_cmd->parsed()) {
      gplace::run_score(score_req, std::cout);
    } else if (eval_cmd->parsed()) {
      gplace::run_eval(eval_req, std::cout);
    } else if (inspect_cmd->parsed()) {
      gplace::run_inspect(inspect_req, std::cout);
    } else if (prompt_cmd->parsed()) {
      gplace::run_prompt(prompt_req, std::cout);
    }
  } catch (const gplace::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const gplace::NoPlacement& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNoPlacement;
  } catch (const gplace::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
