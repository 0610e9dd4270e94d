#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "gplace/gesture_eval.hpp"
#include "gplace/placement_pose.hpp"

namespace gplace {

/// Batch run description: where scenes and avatars live, where outputs go,
/// and which (scene, object) pairs to process.
struct RunConfig {
  PlacementConfig placement;
  std::filesystem::path scenes_dir;
  std::filesystem::path avatars_dir;
  std::filesystem::path out_dir;
  std::string floor_label = "floor";
  std::vector<std::pair<std::string, int>> targets;  // (scene_id, object_id)
  int threads = 1;
};

RunConfig read_run_config(const std::filesystem::path& path);

/// Hash over every parameter that influences outputs; embedded in output
/// file names together with the seed.
std::uint64_t config_hash(const RunConfig& cfg);

/// Prompt texts for external referring-expression generation: each variant
/// names the target label and describes the pointing context from the
/// record. No network call is made anywhere.
std::vector<std::string> render_prompt(const ImputationRecord& record,
                                       const std::string& target_label, int n_variants = 3);

/// Subcommand runners; the binary is a thin argument-parsing wrapper.
/// run_impute returns the number of targets that produced placements and
/// throws NoPlacement only when every target failed.
int run_impute(const RunConfig& cfg, std::ostream& log);

struct ScoreRequest {
  std::filesystem::path records_path;
  std::filesystem::path proposals_path;
  int record_index = 0;
  double w_confidence = 0.5;
  double w_bias = 0.5;
  bool random_weights = false;  // draw fusion weights uniformly on the simplex
  std::uint64_t seed = 0;
};
int run_score(const ScoreRequest& req, std::ostream& out);

struct EvalRequest {
  std::filesystem::path predictions_path;
  std::filesystem::path report_path;  // empty = stdout only
  std::vector<double> thresholds{0.25, 0.5};
};
int run_eval(const EvalRequest& req, std::ostream& out);

struct InspectRequest {
  std::filesystem::path scene_ply;
  std::filesystem::path scene_seg;
  std::string what = "grid";  // "grid" (occupancy RLE) or "visibility" (score slice CSV)
  int target_object_id = -1;  // required for "visibility"
  int slice_k = -1;           // default: target center layer
  std::filesystem::path out_path;  // empty = stdout
  PlacementConfig placement;
};
int run_inspect(const InspectRequest& req, std::ostream& out);

struct PromptRequest {
  std::filesystem::path records_path;
  std::string target_label;
  int n_variants = 3;
  std::filesystem::path out_path;  // empty = stdout
};
int run_prompt(const PromptRequest& req, std::ostream& out);

}  // namespace gplace
