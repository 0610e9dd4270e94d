#pragma once

#include <vector>

#include "gplace/types.hpp"
#include "gplace/voxel_core.hpp"

namespace gplace {

/// Avatar-local occupancy mask plus the voxel offsets of its keypoints.
/// With a positive margin the mask is widened in x and y only (the margin
/// models shoulder width, not height), so dims grow by 2*margin per XY axis
/// and keypoint offsets shift by the margin.
struct AvatarVolume {
  OccupancyGrid mask;       // origin at the avatar-local min corner minus the margin
  int height_voxels = 0;    // == mask.dims.z()
  Index3 foot_offset = Index3::Zero();  // foot_offset.z() == 0
  Index3 left_shoulder_offset = Index3::Zero();
  Index3 right_shoulder_offset = Index3::Zero();
  Index3 left_fingertip_offset = Index3::Zero();
  Index3 right_fingertip_offset = Index3::Zero();
  int margin_voxels = 0;
  Hand gesturing_hand = Hand::Right;

  const Index3& shoulder_offset(Hand h) const {
    return h == Hand::Left ? left_shoulder_offset : right_shoulder_offset;
  }
  const Index3& gesturing_shoulder_offset() const { return shoulder_offset(gesturing_hand); }
};

AvatarVolume voxelize_avatar(const AvatarModel& avatar, double voxel_size, int margin_voxels = 10);

/// Collision-free footprint corners: placing the avatar mask with its XY min
/// corner at scene cell (i,j) and its bottom layer at floor_k overlaps no
/// occupied scene cell, and the whole volume is inside the grid.
struct FootprintSet {
  std::vector<Vec2i> cells;  // sorted lexicographically

  bool contains(int i, int j) const;
  bool empty() const { return cells.empty(); }
  std::size_t size() const { return cells.size(); }
};

FootprintSet find_noncollide(const OccupancyGrid& scene, const AvatarVolume& avatar, int floor_k);

}  // namespace gplace
