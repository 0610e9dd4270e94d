#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gplace/boundary_floor.hpp"
#include "gplace/occupancy_search.hpp"
#include "gplace/rng.hpp"
#include "gplace/scene_model.hpp"
#include "gplace/types.hpp"
#include "gplace/visibility.hpp"
#include "gplace/voxel_core.hpp"

namespace gplace {

/// Where the visibility condition is probed for a candidate placement:
/// at the gesturing shoulder voxel (the pointing ray origin) or at the foot
/// cell on the floor layer.
enum class VisibilityProbe { GesturingShoulder, FootColumn };

struct PlacementConfig {
  double voxel_size = 0.025;       // m
  int margin_voxels = 10;          // XY widening of the avatar mask
  double floor_mean_offset_m = 0.04;
  int min_floor_voxel = 4;
  double visibility_threshold = 0.33;
  double jitter_deg = 9.0;         // max |azimuth jitter|
  int num_placements = 5;
  std::uint64_t seed = 0;
  VisibilityProbe visibility_probe = VisibilityProbe::GesturingShoulder;
  std::int32_t human_semantic_label = 40;
  std::optional<double> floor_height_override;  // world z, for scenes without a floor label
};

/// One accepted placement of one avatar in one scene.
struct ImputationRecord {
  std::string scene_id;
  int target_object_id = -1;
  std::string avatar_id;
  Hand handedness = Hand::Right;
  Vec3 foot_position_world = Vec3::Zero();
  double yaw_deg = 0.0;     // rotation about the vertical axis, degrees
  double jitter_deg = 0.0;  // signed azimuth error actually applied
  double pointing_elevation_deg = 0.0;
  Vec3 shoulder_world = Vec3::Zero();
  Vec3 fingertip_world = Vec3::Zero();
  double distance_to_target_m = 0.0;
  std::uint64_t rng_seed = 0;
};

/// Fixed on-disk format: array of records, floats with 9 significant digits,
/// field order as declared above. Byte-stable for identical inputs.
std::string records_to_json(const std::vector<ImputationRecord>& records);
std::vector<ImputationRecord> parse_records_json(const std::string& text);

/// Candidate footprint corners passing all placement conditions: the foot
/// cell lies inside the scene boundary, the corner is collision-free, and
/// the visibility score at the probe voxel exceeds tau. Sorted
/// lexicographically.
std::vector<Vec2i> feasible_points(const BoundaryMask& boundary, const FootprintSet& footprints,
                                   const ScoreGrid& scores, const AvatarVolume& avatar,
                                   int floor_k, double tau,
                                   VisibilityProbe probe = VisibilityProbe::GesturingShoulder);

struct PoseResult {
  RigidTransform transform = RigidTransform::Identity();
  double yaw_deg = 0.0;
  double jitter_deg = 0.0;
  double elevation_deg = 0.0;
  double distance_m = 0.0;
  Vec3 foot_world = Vec3::Zero();
  Vec3 shoulder_world = Vec3::Zero();
  Vec3 fingertip_world = Vec3::Zero();
};

/// Rigid placement of the avatar: feet anchored at foot_world, rotated about
/// the vertical axis so that the azimuth of the pointing ray differs from
/// the azimuth toward the target by exactly the drawn jitter. The avatar
/// stays upright; the elevation angle toward the target is recorded, not
/// applied.
PoseResult pose_avatar(const AvatarModel& avatar, const Vec3& foot_world,
                       const Vec3& target_center, double jitter_deg_max, Rng& rng);

/// Library entry whose pre-posed arm elevation is nearest to the requested
/// one; exact ties resolved by a reproducible uniform draw.
const AvatarModel& select_avatar_variant(const std::vector<AvatarModel>& library,
                                         double elevation_deg, Rng& rng);

/// Scene-level grids shared by placement and inspection.
struct SceneGrids {
  OccupancyGrid scene;            // full scene occupancy
  OccupancyGrid scene_no_target;  // target object erased, for visibility
  BoundaryMask boundary;
  FloorEstimate floor;
  BoundingBox3D target_box;
  Index3 target_center_voxel = Index3::Zero();
};

/// Voxelize, erase the target, find the scene boundary and the floor layer.
/// The grid gets `margin_voxels` of free padding on every side and is grown
/// upward if `min_height_voxels` above the floor layer would not fit.
SceneGrids build_scene_grids(const SceneData& scene, int target_object_id,
                             const PlacementConfig& cfg, int min_height_voxels = 0);

struct Placement {
  PointCloud augmented;
  ImputationRecord record;
};

/// Full placement pipeline for one scene/target. Deterministic given the
/// config and the rng stream.
std::vector<Placement> impute(const SceneData& scene, int target_object_id,
                              const std::vector<AvatarModel>& library,
                              const PlacementConfig& cfg, Rng& rng);

}  // namespace gplace
