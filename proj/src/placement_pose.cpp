#include "gplace/placement_pose.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

namespace gplace {

namespace {

constexpr double kDegPerRad = 180.0 / std::numbers::pi;

std::string fmt_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string vec_json(const Vec3& v) {
  return "[" + fmt_g9(v.x()) + "," + fmt_g9(v.y()) + "," + fmt_g9(v.z()) + "]";
}

double wrap_angle(double rad) {
  while (rad > std::numbers::pi) rad -= 2.0 * std::numbers::pi;
  while (rad <= -std::numbers::pi) rad += 2.0 * std::numbers::pi;
  return rad;
}

}  // namespace

std::string records_to_json(const std::vector<ImputationRecord>& records) {
  std::ostringstream os;
  os << "[";
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    os << (r ? ",\n" : "\n");
    os << "{\"scene_id\":\"" << rec.scene_id << "\""
       << ",\"target_object_id\":" << rec.target_object_id
       << ",\"avatar_id\":\"" << rec.avatar_id << "\""
       << ",\"handedness\":\"" << to_string(rec.handedness) << "\""
       << ",\"foot_position_world\":" << vec_json(rec.foot_position_world)
       << ",\"yaw_deg\":" << fmt_g9(rec.yaw_deg)
       << ",\"jitter_deg\":" << fmt_g9(rec.jitter_deg)
       << ",\"pointing_elevation_deg\":" << fmt_g9(rec.pointing_elevation_deg)
       << ",\"shoulder_world\":" << vec_json(rec.shoulder_world)
       << ",\"fingertip_world\":" << vec_json(rec.fingertip_world)
       << ",\"distance_to_target_m\":" << fmt_g9(rec.distance_to_target_m)
       << ",\"rng_seed\":" << rec.rng_seed << "}";
  }
  os << "\n]\n";
  return os.str();
}

std::vector<ImputationRecord> parse_records_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("records: ") + e.what());
  }
  std::vector<ImputationRecord> records;
  try {
    for (const auto& item : j) {
      ImputationRecord rec;
      rec.scene_id = item.at("scene_id").get<std::string>();
      rec.target_object_id = item.at("target_object_id").get<int>();
      rec.avatar_id = item.at("avatar_id").get<std::string>();
      const auto hand = item.at("handedness").get<std::string>();
      if (hand == "left")
        rec.handedness = Hand::Left;
      else if (hand == "right")
        rec.handedness = Hand::Right;
      else
        throw FormatError("records: handedness must be 'left' or 'right'");
      auto vec = [](const nlohmann::json& a) {
        return Vec3(a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>());
      };
      rec.foot_position_world = vec(item.at("foot_position_world"));
      rec.yaw_deg = item.at("yaw_deg").get<double>();
      rec.jitter_deg = item.at("jitter_deg").get<double>();
      rec.pointing_elevation_deg = item.at("pointing_elevation_deg").get<double>();
      rec.shoulder_world = vec(item.at("shoulder_world"));
      rec.fingertip_world = vec(item.at("fingertip_world"));
      rec.distance_to_target_m = item.at("distance_to_target_m").get<double>();
      rec.rng_seed = item.at("rng_seed").get<std::uint64_t>();
      records.push_back(std::move(rec));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("records: ") + e.what());
  }
  return records;
}

std::vector<Vec2i> feasible_points(const BoundaryMask& boundary, const FootprintSet& footprints,
                                   const ScoreGrid& scores, const AvatarVolume& avatar,
                                   int floor_k, double tau, VisibilityProbe probe) {
  std::vector<Vec2i> result;
  for (const auto& cell : footprints.cells) {
    const int foot_i = cell.x() + avatar.foot_offset.x();
    const int foot_j = cell.y() + avatar.foot_offset.y();
    if (!boundary.at(foot_i, foot_j)) continue;

    Index3 probe_voxel;
    if (probe == VisibilityProbe::GesturingShoulder) {
      const Index3& off = avatar.gesturing_shoulder_offset();
      probe_voxel = Index3(cell.x() + off.x(), cell.y() + off.y(), floor_k + off.z());
    } else {
      probe_voxel = Index3(foot_i, foot_j, floor_k);
    }
    if (!scores.in_bounds(probe_voxel) || !(scores.at(probe_voxel) > tau)) continue;
    result.push_back(cell);
  }
  return result;  // footprint cells are already sorted
}

PoseResult pose_avatar(const AvatarModel& avatar, const Vec3& foot_world,
                       const Vec3& target_center, double jitter_deg_max, Rng& rng) {
  const Vec3 arm = avatar.gesturing_fingertip() - avatar.gesturing_shoulder();
  if (arm.head<2>().norm() < 1e-12)
    throw DegeneratePointing("pose_avatar: pre-posed arm has no horizontal component");
  const double arm_azimuth = std::atan2(arm.y(), arm.x());

  // One jitter draw per call keeps the stream layout fixed.
  const double jitter_deg = rng.uniform(-jitter_deg_max, jitter_deg_max);
  const double jitter_rad = jitter_deg / kDegPerRad;

  // Solve for the yaw that makes the pointing azimuth differ from the
  // target azimuth by exactly the jitter. The shoulder rides on a circle
  // around the foot axis, so in the frame rotated back by the (unknown) yaw
  // the target must land on the ray from the shoulder along the jittered
  // arm direction; that is a ray/circle intersection, solvable in closed
  // form. An uncorrected single rotation would leave an azimuth error that
  // grows as the target gets close.
  const Eigen::Vector2d shoulder_xy = (avatar.gesturing_shoulder() - avatar.foot).head<2>();
  const Eigen::Vector2d to_target_xy = (target_center - foot_world).head<2>();
  const double target_dist_xy = to_target_xy.norm();
  if (target_dist_xy < 1e-12)
    throw DegeneratePointing("pose_avatar: target directly above the foot pivot");

  const Eigen::Vector2d ray_dir(std::cos(arm_azimuth - jitter_rad),
                                std::sin(arm_azimuth - jitter_rad));
  const double along = shoulder_xy.dot(ray_dir);
  const double disc = along * along + target_dist_xy * target_dist_xy - shoulder_xy.squaredNorm();
  if (disc < 0.0)
    throw DegeneratePointing("pose_avatar: target inside the shoulder pivot circle");
  const double reach = -along + std::sqrt(disc);
  if (reach < 1e-12)
    throw DegeneratePointing("pose_avatar: target on the shoulder axis");
  const Eigen::Vector2d rotated_back = shoulder_xy + reach * ray_dir;
  const double yaw = wrap_angle(std::atan2(to_target_xy.y(), to_target_xy.x()) -
                                std::atan2(rotated_back.y(), rotated_back.x()));

  PoseResult pose;
  pose.transform = RigidTransform::Identity();
  pose.transform.linear() = Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
  pose.transform.translation() = foot_world - pose.transform.linear() * avatar.foot;
  pose.yaw_deg = yaw * kDegPerRad;
  pose.jitter_deg = jitter_deg;
  pose.foot_world = foot_world;
  pose.shoulder_world = pose.transform * avatar.gesturing_shoulder();
  pose.fingertip_world = pose.transform * avatar.gesturing_fingertip();

  const Vec3 to_target = target_center - pose.shoulder_world;
  pose.distance_m = to_target.norm();
  pose.elevation_deg = std::atan2(to_target.z(), to_target.head<2>().norm()) * kDegPerRad;
  return pose;
}

namespace {

// Index of the entry whose arm elevation is nearest to the request; one
// uniform draw resolves exact ties and keeps the stream layout fixed.
template <typename Elevation>
std::size_t select_variant_index(std::size_t n, Elevation elevation_of, double elevation_deg,
                                 Rng& rng) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    best = std::min(best, std::abs(elevation_of(i) - elevation_deg));
  std::vector<std::size_t> minimizers;
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(elevation_of(i) - elevation_deg) <= best + 1e-12) minimizers.push_back(i);
  return minimizers[rng.below(minimizers.size())];
}

}  // namespace

const AvatarModel& select_avatar_variant(const std::vector<AvatarModel>& library,
                                         double elevation_deg, Rng& rng) {
  if (library.empty()) throw EmptyLibrary("select_avatar_variant: empty library");
  const std::size_t idx = select_variant_index(
      library.size(), [&](std::size_t i) { return library[i].arm_elevation_deg; }, elevation_deg,
      rng);
  return library[idx];
}

SceneGrids build_scene_grids(const SceneData& scene, int target_object_id,
                             const PlacementConfig& cfg, int min_height_voxels) {
  const SceneObject& target = scene.object_by_id(target_object_id);

  // Pad the grid in XY (so near-edge footprints are judged by collisions,
  // not by grid bounds) but never below the scene: the floor-layer clamp
  // counts voxels from the grid bottom, so the origin must sit at the
  // scene's lowest point.
  const OccupancyGrid base = voxelize(scene.cloud, cfg.voxel_size, 0);
  const int pad = cfg.margin_voxels;
  const Vec3 origin = base.origin - cfg.voxel_size * Vec3(pad, pad, 0);

  SceneGrids grids;
  grids.target_box = object_bbox(scene.cloud, target);

  FloorEstimate floor;
  {
    // Floor height only depends on origin z and voxel size; estimate it on a
    // throwaway grid with the final origin, then size the real grid.
    OccupancyGrid probe(origin, cfg.voxel_size, Index3::Ones());
    if (!scene.floor_indices.empty()) {
      floor = estimate_floor(scene.cloud, scene.floor_indices, probe, cfg.floor_mean_offset_m,
                             cfg.min_floor_voxel);
    } else if (cfg.floor_height_override) {
      floor = floor_from_height(*cfg.floor_height_override, probe, cfg.min_floor_voxel);
    } else {
      throw MissingFloor("scene '" + scene.scene_id +
                         "': no floor-labeled points; set a floor height override");
    }
  }
  grids.floor = floor;

  Index3 dims(base.dims.x() + 2 * pad, base.dims.y() + 2 * pad,
              std::max(base.dims.z(), floor.clamped_floor_voxel + min_height_voxels));
  grids.scene = voxelize_extent(scene.cloud, cfg.voxel_size, origin, dims);
  grids.scene_no_target = erase_object(grids.scene, scene.cloud, target);
  grids.boundary = boundary_mask(project_xy(grids.scene));
  grids.target_center_voxel = world_to_voxel(grids.scene, box_center(grids.target_box));
  return grids;
}

namespace {

// Collision re-check of a posed avatar against the full scene, using the
// same float arithmetic as compose_scene so validated cells match the
// composed output bit for bit.
bool posed_avatar_collides(const OccupancyGrid& scene, const AvatarModel& avatar,
                           const RigidTransform& transform) {
  const Eigen::Matrix3f rot = transform.linear().cast<float>();
  const Vec3f trans = transform.translation().cast<float>();
  for (const auto& p : avatar.cloud.points) {
    const Vec3 q = (rot * p + trans).cast<double>();
    if (!scene.contains_world(q)) return true;  // outside the grid = outside the scene
    if (scene.at(world_to_voxel(scene, q))) return true;
  }
  return false;
}

}  // namespace

std::vector<Placement> impute(const SceneData& scene, int target_object_id,
                              const std::vector<AvatarModel>& library,
                              const PlacementConfig& cfg, Rng& rng) {
  if (library.empty()) throw EmptyLibrary("impute: empty avatar library");
  if (cfg.num_placements < 1) throw UsageError("impute: num_placements must be >= 1");

  // Stable avatar order regardless of how the caller assembled the library.
  std::vector<std::size_t> order(library.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return library[a].avatar_id < library[b].avatar_id;
  });
  std::vector<const AvatarModel*> sorted_library;
  for (std::size_t i : order) sorted_library.push_back(&library[i]);

  std::vector<AvatarVolume> volumes;
  int max_height = 0;
  for (const AvatarModel* av : sorted_library) {
    volumes.push_back(voxelize_avatar(*av, cfg.voxel_size, cfg.margin_voxels));
    max_height = std::max(max_height, volumes.back().height_voxels);
  }

  // +1 layer of headroom: the realized pose anchors the foot at the feet
  // cell's center, half a voxel above the search alignment.
  SceneGrids grids = build_scene_grids(scene, target_object_id, cfg, max_height + 1);
  const int floor_k = grids.floor.clamped_floor_voxel;
  const Vec3 target_center = box_center(grids.target_box);

  // The collision search runs with the first avatar's widened volume as a
  // proxy for the library; every accepted placement of the actually selected
  // variant is re-validated against the full grid below.
  const AvatarVolume& search_volume = volumes.front();
  const FootprintSet footprints = find_noncollide(grids.scene, search_volume, floor_k);
  const ScoreGrid scores = visibility_grid(grids.scene_no_target, grids.target_center_voxel);
  const std::vector<Vec2i> feasible =
      feasible_points(grids.boundary, footprints, scores, search_volume, floor_k,
                      cfg.visibility_threshold, cfg.visibility_probe);
  if (feasible.empty())
    throw NoPlacement("scene '" + scene.scene_id + "' target " +
                      std::to_string(target_object_id) + ": no feasible avatar position");

  // Sample candidates without replacement (partial Fisher-Yates); a
  // candidate that fails post-pose validation is discarded and the next one
  // drawn.
  std::vector<std::size_t> candidates(feasible.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) candidates[i] = i;

  std::vector<Placement> placements;
  const auto want = static_cast<std::size_t>(cfg.num_placements);
  std::size_t drawn = 0;
  while (placements.size() < want && drawn < candidates.size()) {
    const std::size_t pick = drawn + rng.below(candidates.size() - drawn);
    std::swap(candidates[drawn], candidates[pick]);
    const Vec2i corner = feasible[candidates[drawn]];
    ++drawn;

    // Feet cell checked during the search; every variant anchors its foot
    // keypoint at this cell's center. Mid-cell anchoring keeps the foot's
    // voxel assignment stable against rounding, where the exact grid-corner
    // alignment would sit on a cell boundary; the margin and the
    // re-validation below absorb the sub-voxel shift.
    const int foot_i = corner.x() + search_volume.foot_offset.x();
    const int foot_j = corner.y() + search_volume.foot_offset.y();
    const Vec3 foot_world = voxel_center(grids.scene, Index3(foot_i, foot_j, floor_k));

    // Provisional elevation from the search avatar's unrotated shoulder; the
    // final angle is recomputed from the posed shoulder.
    const AvatarModel& search_model = *sorted_library.front();
    const Vec3 shoulder_est =
        foot_world + (search_model.gesturing_shoulder() - search_model.foot);
    const Vec3 to_target_est = target_center - shoulder_est;
    const double elevation_est =
        std::atan2(to_target_est.z(), to_target_est.head<2>().norm()) * kDegPerRad;

    const std::size_t variant_idx = select_variant_index(
        sorted_library.size(),
        [&](std::size_t i) { return sorted_library[i]->arm_elevation_deg; }, elevation_est, rng);
    const AvatarModel& variant = *sorted_library[variant_idx];

    PoseResult pose;
    try {
      pose = pose_avatar(variant, foot_world, target_center, cfg.jitter_deg, rng);
    } catch (const DegeneratePointing&) {
      continue;
    }
    if (posed_avatar_collides(grids.scene, variant, pose.transform)) continue;
    if (!grids.boundary.at(foot_i, foot_j)) continue;

    Placement placement;
    placement.augmented =
        compose_scene(scene.cloud, variant, pose.transform, cfg.human_semantic_label);
    ImputationRecord& rec = placement.record;
    rec.scene_id = scene.scene_id;
    rec.target_object_id = target_object_id;
    rec.avatar_id = variant.avatar_id;
    rec.handedness = variant.gesturing_hand;
    rec.foot_position_world = pose.foot_world;
    rec.yaw_deg = pose.yaw_deg;
    rec.jitter_deg = pose.jitter_deg;
    rec.pointing_elevation_deg = pose.elevation_deg;
    rec.shoulder_world = pose.shoulder_world;
    rec.fingertip_world = pose.fingertip_world;
    rec.distance_to_target_m = pose.distance_m;
    rec.rng_seed = cfg.seed;
    placements.push_back(std::move(placement));
  }

  if (placements.empty())
    throw NoPlacement("scene '" + scene.scene_id + "' target " +
                      std::to_string(target_object_id) +
                      ": every candidate failed post-pose validation");
  return placements;
}

}  // namespace gplace
