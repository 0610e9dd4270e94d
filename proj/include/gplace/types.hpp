#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gplace {

using Vec3 = Eigen::Vector3d;
using Vec3f = Eigen::Vector3f;
using Vec2i = Eigen::Vector2i;
using Index3 = Eigen::Vector3i;
using Color3 = Eigen::Matrix<std::uint8_t, 3, 1>;
using BoundingBox3D = Eigen::AlignedBox3d;
using RigidTransform = Eigen::Isometry3d;

// Error taxonomy. The CLI maps these onto process exit codes; everything
// else just throws and lets the caller decide.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UsageError : Error { using Error::Error; };          // bad flags / config
struct FormatError : Error { using Error::Error; };         // malformed input file
struct IoError : Error { using Error::Error; };             // filesystem failure
struct OutOfBounds : Error { using Error::Error; };         // point / index outside a grid
struct EmptyCloud : Error { using Error::Error; };
struct EmptyScene : Error { using Error::Error; };
struct MissingFloor : Error { using Error::Error; };
struct NotFound : Error { using Error::Error; };            // unknown object / scene / avatar id
struct CenterOccupied : Error { using Error::Error; };      // visibility seed voxel not free
struct TooLarge : Error { using Error::Error; };            // enumeration bound exceeded
struct DegeneratePointing : Error { using Error::Error; };  // target on the shoulder axis
struct DegenerateRay : Error { using Error::Error; };       // zero-length pointing vector
struct EmptyLibrary : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };
struct NoPlacement : Error { using Error::Error; };         // no feasible avatar position

enum class Hand { Left, Right };

inline const char* to_string(Hand h) { return h == Hand::Left ? "left" : "right"; }

/// Colored point cloud with optional normals and per-point labels.
/// All parallel arrays have identical length; `normals` is either empty or
/// full length. instance/semantic label -1 means unlabeled.
struct PointCloud {
  std::vector<Vec3f> points;
  std::vector<Color3> colors;
  std::vector<Vec3f> normals;
  std::vector<std::int32_t> instance_labels;
  std::vector<std::int32_t> semantic_labels;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_normals() const { return !normals.empty(); }

  static PointCloud with_size(std::size_t n, bool with_normals = false) {
    PointCloud c;
    c.points.resize(n, Vec3f::Zero());
    c.colors.resize(n, Color3::Zero());
    if (with_normals) c.normals.resize(n, Vec3f::UnitZ());
    c.instance_labels.assign(n, -1);
    c.semantic_labels.assign(n, -1);
    return c;
  }

  void check_consistent() const;
};

/// One labeled instance: a named subset of points in the owning cloud.
struct SceneObject {
  int object_id = -1;
  std::string semantic_name;
  std::vector<std::size_t> point_indices;
};

/// Pre-posed human point set with annotated keypoints, in an avatar-local
/// frame where +Z is up and the foot keypoint is the lowest point.
struct AvatarModel {
  std::string avatar_id;
  PointCloud cloud;
  Vec3 left_shoulder = Vec3::Zero();
  Vec3 right_shoulder = Vec3::Zero();
  Vec3 left_fingertip = Vec3::Zero();
  Vec3 right_fingertip = Vec3::Zero();
  Vec3 foot = Vec3::Zero();
  Hand gesturing_hand = Hand::Right;
  double arm_elevation_deg = 0.0;
  std::string gender_tag;

  const Vec3& shoulder(Hand h) const { return h == Hand::Left ? left_shoulder : right_shoulder; }
  const Vec3& fingertip(Hand h) const { return h == Hand::Left ? left_fingertip : right_fingertip; }
  const Vec3& gesturing_shoulder() const { return shoulder(gesturing_hand); }
  const Vec3& gesturing_fingertip() const { return fingertip(gesturing_hand); }

  void check_valid() const;
};

inline Vec3 box_center(const BoundingBox3D& b) { return 0.5 * (b.min() + b.max()); }

}  // namespace gplace
