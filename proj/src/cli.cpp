#include "gplace/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "gplace/rng.hpp"

namespace gplace {

namespace {

std::string fmt_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace

RunConfig read_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config '" + path.string() + "': " + e.what());
  }

  RunConfig cfg;
  try {
    cfg.scenes_dir = j.at("scenes_dir").get<std::string>();
    cfg.avatars_dir = j.at("avatars_dir").get<std::string>();
    cfg.out_dir = j.at("out_dir").get<std::string>();
    cfg.floor_label = j.value("floor_label", cfg.floor_label);
    cfg.threads = j.value("threads", cfg.threads);

    PlacementConfig& p = cfg.placement;
    p.voxel_size = j.value("voxel_size", p.voxel_size);
    p.margin_voxels = j.value("margin_voxels", p.margin_voxels);
    p.floor_mean_offset_m = j.value("floor_mean_offset_m", p.floor_mean_offset_m);
    p.min_floor_voxel = j.value("min_floor_voxel", p.min_floor_voxel);
    p.visibility_threshold = j.value("visibility_threshold", p.visibility_threshold);
    p.jitter_deg = j.value("jitter_deg", p.jitter_deg);
    p.num_placements = j.value("num_placements", p.num_placements);
    p.seed = j.value("seed", p.seed);
    p.human_semantic_label = j.value("human_semantic_label", p.human_semantic_label);
    if (j.contains("visibility_probe")) {
      const auto probe = j.at("visibility_probe").get<std::string>();
      if (probe == "shoulder")
        p.visibility_probe = VisibilityProbe::GesturingShoulder;
      else if (probe == "foot")
        p.visibility_probe = VisibilityProbe::FootColumn;
      else
        throw UsageError("config: visibility_probe must be 'shoulder' or 'foot'");
    }
    if (j.contains("floor_height_override") && !j.at("floor_height_override").is_null())
      p.floor_height_override = j.at("floor_height_override").get<double>();

    for (const auto& t : j.at("targets"))
      cfg.targets.emplace_back(t.at("scene_id").get<std::string>(),
                               t.at("object_id").get<int>());
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config '" + path.string() + "': " + e.what());
  }
  if (cfg.targets.empty()) throw UsageError("config: no targets");
  if (cfg.threads < 1) throw UsageError("config: threads must be >= 1");
  // Processing and log order is (scene_id, object_id), independent of the
  // order targets were listed in.
  std::sort(cfg.targets.begin(), cfg.targets.end());
  return cfg;
}

std::uint64_t config_hash(const RunConfig& cfg) {
  const PlacementConfig& p = cfg.placement;
  std::ostringstream os;
  os << fmt_g9(p.voxel_size) << '|' << p.margin_voxels << '|' << fmt_g9(p.floor_mean_offset_m)
     << '|' << p.min_floor_voxel << '|' << fmt_g9(p.visibility_threshold) << '|'
     << fmt_g9(p.jitter_deg) << '|' << p.num_placements << '|' << p.seed << '|'
     << (p.visibility_probe == VisibilityProbe::GesturingShoulder ? "shoulder" : "foot") << '|'
     << p.human_semantic_label << '|'
     << (p.floor_height_override ? fmt_g9(*p.floor_height_override) : "none") << '|'
     << cfg.floor_label;
  for (const auto& [scene, object] : cfg.targets) os << '|' << scene << ':' << object;
  return hash_str(os.str());
}

std::vector<std::string> render_prompt(const ImputationRecord& record,
                                       const std::string& target_label, int n_variants) {
  if (target_label.empty()) throw UsageError("render_prompt: empty target label");
  if (n_variants < 1) throw UsageError("render_prompt: n_variants must be >= 1");

  std::ostringstream context;
  context << "In scene " << record.scene_id << ", a person is standing "
          << fmt_g9(record.distance_to_target_m) << " m away and pointing with their "
          << to_string(record.handedness) << " hand at object " << record.target_object_id
          << ", a " << target_label << ".";
  const std::string ctx = context.str();

  const std::string ask_by[] = {
      "Write one short referring expression that uniquely identifies the " + target_label +
          " being pointed at.",
      "Give a brief spoken instruction a person might say while pointing at that " + target_label +
          ".",
      "Phrase a concise request that picks out exactly the " + target_label +
          " the pointing gesture indicates.",
      "Describe the " + target_label + " at the end of the pointing direction in a single " +
          "sentence a listener could act on.",
      "Produce a minimal natural-language reference to the " + target_label +
          " consistent with the gesture.",
      "State one plain-language description that singles out the pointed-at " + target_label +
          " among similar objects.",
  };
  constexpr int n_templates = static_cast<int>(std::size(ask_by));

  std::vector<std::string> prompts;
  for (int v = 0; v < n_variants; ++v) {
    std::ostringstream os;
    os << ctx << " " << ask_by[v % n_templates];
    if (v >= n_templates) os << " (variant " << v + 1 << ")";
    prompts.push_back(os.str());
  }
  return prompts;
}

// --------------------------------------------------------------------------
// impute runner
// --------------------------------------------------------------------------

namespace {

std::string output_stem(const RunConfig& cfg, const std::string& scene_id, int object_id) {
  char tag[64];
  std::snprintf(tag, sizeof(tag), "h%016llx_s%llu",
                static_cast<unsigned long long>(config_hash(cfg)),
                static_cast<unsigned long long>(cfg.placement.seed));
  return scene_id + "__obj" + std::to_string(object_id) + "__" + tag;
}

struct JobResult {
  std::size_t index = 0;
  bool placed = false;
  std::string message;
};

}  // namespace

int run_impute(const RunConfig& cfg, std::ostream& log) {
  const std::vector<AvatarModel> library = load_avatar_library(cfg.avatars_dir);
  std::filesystem::create_directories(cfg.out_dir);

  // Jobs run in a deterministic per-target rng stream, so scheduling cannot
  // change any output byte.
  std::vector<JobResult> results(cfg.targets.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= cfg.targets.size()) return;
      const auto& [scene_id, object_id] = cfg.targets[idx];
      JobResult& result = results[idx];
      result.index = idx;
      try {
        const SceneData scene = load_scene(cfg.scenes_dir / (scene_id + ".ply"),
                                           cfg.scenes_dir / (scene_id + ".seg.json"));
        if (scene.floor_indices.empty()) {
          std::lock_guard<std::mutex> lock(log_mutex);
          log << "warning: scene '" << scene_id << "' has no floor-labeled object"
              << (cfg.placement.floor_height_override ? "; using the height override" : "")
              << "\n";
        }
        Rng rng = Rng(cfg.placement.seed)
                      .stream(scene_id)
                      .stream(static_cast<std::uint64_t>(object_id));
        const std::vector<Placement> placements =
            impute(scene, object_id, library, cfg.placement, rng);

        const std::string stem = output_stem(cfg, scene_id, object_id);
        std::vector<ImputationRecord> records;
        for (std::size_t p = 0; p < placements.size(); ++p) {
          records.push_back(placements[p].record);
          write_ply(placements[p].augmented,
                    cfg.out_dir / (stem + "__p" + std::to_string(p) + ".ply"),
                    PlyEncoding::BinaryLittleEndian);
        }
        write_text_file(cfg.out_dir / (stem + ".records.json"), records_to_json(records));
        result.placed = true;
        result.message = scene_id + " obj " + std::to_string(object_id) + ": " +
                         std::to_string(placements.size()) + " placement(s)";
      } catch (const NoPlacement& e) {
        result.message = std::string("no placement: ") + e.what();
      }
      // Other errors (missing files, format problems) abort the run; a
      // misconfigured batch should fail loudly, not quietly skip targets.
    }
  };

  const int n_threads = std::max(1, std::min(cfg.threads, static_cast<int>(cfg.targets.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    for (int t = 0; t < n_threads; ++t)
      pool.emplace_back([&] {
        try {
          worker();
        } catch (...) {
          std::lock_guard<std::mutex> lock(log_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  int placed = 0;
  for (const auto& result : results) {
    log << result.message << "\n";
    if (result.placed) ++placed;
  }
  if (placed == 0)
    throw NoPlacement("no target produced a placement");
  return placed;
}

// --------------------------------------------------------------------------
// score runner
// --------------------------------------------------------------------------

int run_score(const ScoreRequest& req, std::ostream& out) {
  std::ifstream rec_in(req.records_path);
  if (!rec_in) throw IoError("cannot open '" + req.records_path.string() + "'");
  std::stringstream rec_buf;
  rec_buf << rec_in.rdbuf();
  const std::vector<ImputationRecord> records = parse_records_json(rec_buf.str());
  if (records.empty()) throw EmptyInput("score: records file is empty");
  if (req.record_index < 0 || static_cast<std::size_t>(req.record_index) >= records.size())
    throw UsageError("score: record index out of range");
  const ImputationRecord& rec = records[req.record_index];

  std::ifstream prop_in(req.proposals_path);
  if (!prop_in) throw IoError("cannot open '" + req.proposals_path.string() + "'");
  nlohmann::json j;
  try {
    prop_in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("proposals '" + req.proposals_path.string() + "': " + e.what());
  }

  std::vector<BoundingBox3D> proposals;
  std::vector<double> confidence;
  HandednessWeights w_lr = HandednessWeights::one_hot(rec.handedness);
  try {
    for (const auto& b : j.at("proposals")) {
      if (!b.is_array() || b.size() != 6) throw FormatError("proposals: box is not 6 numbers");
      proposals.emplace_back(Vec3(b[0].get<double>(), b[1].get<double>(), b[2].get<double>()),
                             Vec3(b[3].get<double>(), b[4].get<double>(), b[5].get<double>()));
    }
    for (const auto& s : j.at("s_conf")) confidence.push_back(s.get<double>());
    if (j.contains("w_lr")) {
      w_lr.left = j.at("w_lr").at(0).get<double>();
      w_lr.right = j.at("w_lr").at(1).get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("proposals '" + req.proposals_path.string() + "': " + e.what());
  }

  FusionWeights w_score{req.w_confidence, req.w_bias};
  if (req.random_weights) {
    // Uniform over the 2-simplex, for experiments with randomized fusion.
    Rng rng(req.seed);
    const double u = rng.uniform01();
    w_score = FusionWeights{u, 1.0 - u};
  }

  // The record carries the gesturing arm; mirror it onto the other side so
  // a non-one-hot handedness weighting still has a defined input.
  PointingRays rays;
  rays.left_shoulder = rays.right_shoulder = rec.shoulder_world;
  rays.left_fingertip = rays.right_fingertip = rec.fingertip_world;

  const ProposalScores scores = score_proposals(rays, proposals, confidence, w_lr, w_score);

  out << "{\"record_index\":" << req.record_index << ",\"scene_id\":\"" << rec.scene_id
      << "\",\"target_object_id\":" << rec.target_object_id << ",\"w_score\":["
      << fmt_g9(w_score.confidence) << "," << fmt_g9(w_score.bias) << "],\"w_lr\":["
      << fmt_g9(w_lr.left) << "," << fmt_g9(w_lr.right) << "],\"best_index\":"
      << scores.best_index << ",\"s_final\":[";
  for (std::size_t i = 0; i < scores.final_scores.size(); ++i)
    out << (i ? "," : "") << fmt_g9(scores.final_scores[i]);
  out << "],\"s_bias_final\":[";
  for (std::size_t i = 0; i < scores.bias_final.size(); ++i)
    out << (i ? "," : "") << fmt_g9(scores.bias_final[i]);
  out << "]}\n";
  return scores.best_index;
}

// --------------------------------------------------------------------------
// eval / inspect / prompt runners
// --------------------------------------------------------------------------

int run_eval(const EvalRequest& req, std::ostream& out) {
  const std::vector<EvalSample> samples = read_eval_samples(req.predictions_path);
  const EvalReport report = evaluate(samples, req.thresholds);
  out << report_table(report);
  const std::string json = report_to_json(report);
  if (req.report_path.empty())
    out << json << "\n";
  else
    write_text_file(req.report_path, json + "\n");
  return 0;
}

int run_inspect(const InspectRequest& req, std::ostream& out) {
  const SceneData scene = load_scene(req.scene_ply, req.scene_seg);
  std::string text;
  if (req.what == "grid") {
    const OccupancyGrid grid = voxelize(scene.cloud, req.placement.voxel_size, 0);
    text = grid_to_rle_json(grid) + "\n";
  } else if (req.what == "visibility") {
    if (req.target_object_id < 0) throw UsageError("inspect: --target is required for visibility");
    const SceneGrids grids = build_scene_grids(scene, req.target_object_id, req.placement);
    const ScoreGrid scores = visibility_grid(grids.scene_no_target, grids.target_center_voxel);
    const int k = req.slice_k >= 0 ? req.slice_k : grids.target_center_voxel.z();
    text = score_slice_csv(scores, k);
  } else {
    throw UsageError("inspect: --what must be 'grid' or 'visibility'");
  }
  if (req.out_path.empty())
    out << text;
  else
    write_text_file(req.out_path, text);
  return 0;
}

int run_prompt(const PromptRequest& req, std::ostream& out) {
  std::ifstream in(req.records_path);
  if (!in) throw IoError("cannot open '" + req.records_path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::vector<ImputationRecord> records = parse_records_json(buf.str());
  if (records.empty()) throw EmptyInput("prompt: records file is empty");

  std::ostringstream text;
  for (std::size_t r = 0; r < records.size(); ++r) {
    for (const std::string& prompt : render_prompt(records[r], req.target_label, req.n_variants))
      text << prompt << "\n";
  }
  if (req.out_path.empty())
    out << text.str();
  else
    write_text_file(req.out_path, text.str());
  return 0;
}

}  // namespace gplace
