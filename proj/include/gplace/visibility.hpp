#pragma once

#include <string>
#include <vector>

#include "gplace/types.hpp"
#include "gplace/voxel_core.hpp"

namespace gplace {

/// Path-counting visibility scores from a source voxel, over the same extent
/// as the scene grid. Each score is the obstacle-surviving weight of the
/// monotone lattice paths from the source to the cell, in [0,1].
struct ScoreGrid {
  Index3 origin_index = Index3::Zero();  // source voxel
  Vec3 origin = Vec3::Zero();
  double voxel_size = 0.0;
  Index3 dims = Index3::Zero();
  std::vector<double> scores;  // z fastest

  std::size_t linear(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * dims.y() + j) * dims.z() + k;
  }
  double at(int i, int j, int k) const { return scores[linear(i, j, k)]; }
  double at(const Index3& idx) const { return at(idx.x(), idx.y(), idx.z()); }
  bool in_bounds(const Index3& idx) const {
    return (idx.array() >= 0).all() && (idx.array() < dims.array()).all();
  }
};

/// Evaluate the visibility recurrence over the free-space mask of
/// `scene_no_target` (the scene grid with the target object removed), per
/// octant around `center`. The source cell must be free.
ScoreGrid visibility_grid(const OccupancyGrid& scene_no_target, const Index3& center);

/// Region of visibility: cells with score strictly above tau (1 = visible).
OccupancyGrid threshold_region(const ScoreGrid& scores, double tau);

/// Independent oracle for one cell: enumerate every monotone lattice path
/// from the source to the cell, weight each by its per-step coordinate
/// fractions, and keep only paths whose cells are all free. Long-double
/// arithmetic; refuses cells farther than `max_path_len` steps.
double path_enum_oracle(const OccupancyGrid& scene_no_target, const Index3& center,
                        const Index3& cell, int max_path_len = 12);

/// Geometric line-of-sight oracle: true iff every voxel strictly between a's
/// and b's voxels along the segment is free (amortized grid traversal;
/// endpoint voxels excluded).
bool raycast_clear(const OccupancyGrid& grid, const Vec3& a, const Vec3& b);

/// One z-slice of the score grid as CSV (row i per line, columns j).
std::string score_slice_csv(const ScoreGrid& scores, int k);

}  // namespace gplace
