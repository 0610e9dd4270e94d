#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gplace/types.hpp"

namespace gplace {

enum class PlyEncoding { Ascii, BinaryLittleEndian };

/// Read a vertex cloud from an ascii or binary_little_endian PLY file.
/// Vertex properties x,y,z are required (float32/float64); red,green,blue
/// and nx,ny,nz are picked up when present; unknown elements and properties
/// are skipped. Labels in the result are unset (-1).
PointCloud read_ply(const std::filesystem::path& path);

/// Write a vertex-only PLY. Binary output round-trips bit-exactly; ascii
/// uses fixed 6-decimal coordinates (read-back within 5e-7 m).
void write_ply(const PointCloud& cloud, const std::filesystem::path& path, PlyEncoding encoding);

/// Instance segmentation carrier: per-object point-index lists.
struct Segmentation {
  std::vector<SceneObject> objects;
  std::string floor_label;
};

Segmentation read_segmentation_json(const std::filesystem::path& path);
std::string segmentation_to_json(const Segmentation& seg);

/// A loaded scene: cloud with labels applied, its objects, and the union of
/// floor-labeled point indices (empty when the scene has no floor object —
/// floor estimation then needs an explicit height override).
struct SceneData {
  std::string scene_id;
  PointCloud cloud;
  std::vector<SceneObject> objects;
  std::vector<std::size_t> floor_indices;
  std::vector<std::string> semantic_names;  // semantic label id -> name

  const SceneObject& object_by_id(int object_id) const;
};

SceneData load_scene(const std::filesystem::path& ply_path,
                     const std::filesystem::path& seg_path);

/// Apply a segmentation to a raw cloud: per-point labels, deterministic
/// semantic ids (distinct names sorted), floor index union.
SceneData assemble_scene(std::string scene_id, PointCloud cloud, const Segmentation& seg);

/// Axis-aligned bounds over one object's points.
BoundingBox3D object_bbox(const PointCloud& cloud, const SceneObject& obj);

/// Scene points followed by the rigidly transformed avatar points. Avatar
/// points get a fresh instance label and the given semantic label; scene
/// points and labels are preserved untouched. The transform must be a
/// rotation about the world vertical axis plus a translation.
PointCloud compose_scene(const PointCloud& scene, const AvatarModel& avatar,
                         const RigidTransform& transform, std::int32_t human_semantic_label);

/// Avatar metadata JSON + the point cloud it references (path relative to
/// the metadata file).
AvatarModel read_avatar(const std::filesystem::path& json_path);

/// All avatars under a directory (files matching *.json), sorted by id.
std::vector<AvatarModel> load_avatar_library(const std::filesystem::path& dir);

}  // namespace gplace
