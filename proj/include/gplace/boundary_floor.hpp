#pragma once

#include "gplace/types.hpp"
#include "gplace/voxel_core.hpp"

namespace gplace {

/// In-scene region: the largest 4-connected component of the projected
/// occupancy, with its enclosed holes filled. Depends only on (x,y) and is
/// broadcast over z by the callers that need a volume.
struct BoundaryMask {
  BitMask2D mask;

  bool at(int i, int j) const { return mask.in_bounds(i, j) && mask.at(i, j); }
};

BoundaryMask boundary_mask(const BitMask2D& xy_occupancy);

/// Floor level, in world meters and in voxel layers of the scene grid.
struct FloorEstimate {
  double floor_height_m = 0.0;  // world z of the floor surface
  int floor_voxel = 0;          // that height converted to a grid layer
  int clamped_floor_voxel = 0;  // max(min_floor_voxel, floor_voxel)
};

/// Floor height = min(mean(z) + mean_offset_m, 85th percentile of z) over the
/// floor-labeled points, using the nearest-rank percentile. The voxel layer
/// is clamped from below to tolerate reconstruction artifacts near z = 0.
FloorEstimate estimate_floor(const PointCloud& cloud, const std::vector<std::size_t>& floor_indices,
                             const OccupancyGrid& grid, double mean_offset_m = 0.04,
                             int min_floor_voxel = 4);

/// Same clamping rule applied to an explicitly supplied floor height, for
/// scenes without floor-labeled points.
FloorEstimate floor_from_height(double floor_height_m, const OccupancyGrid& grid,
                                int min_floor_voxel = 4);

}  // namespace gplace
