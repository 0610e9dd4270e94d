#include "gplace/visibility.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace gplace {

ScoreGrid visibility_grid(const OccupancyGrid& scene_no_target, const Index3& center) {
  const OccupancyGrid& g = scene_no_target;
  if (!g.in_bounds(center)) throw OutOfBounds("visibility_grid: center outside grid");
  if (g.at(center))
    throw CenterOccupied("visibility_grid: source voxel is occupied (target not erased?)");

  ScoreGrid s;
  s.origin_index = center;
  s.origin = g.origin;
  s.voxel_size = g.voxel_size;
  s.dims = g.dims;
  s.scores.assign(g.cell_count(), 0.0);
  s.scores[s.linear(center.x(), center.y(), center.z())] = 1.0;

  // Each octant propagates outward from the center; a cell's score mixes its
  // three predecessors one step toward the center, weighted by the local
  // coordinates, and is zeroed by an occupied cell. Cells on shared axis
  // planes get identical values in every adjacent octant (zero coordinates
  // carry zero weight), so recomputing them is harmless.
  for (int sx = -1; sx <= 1; sx += 2) {
    const int x_end = sx > 0 ? g.dims.x() : -1;
    for (int sy = -1; sy <= 1; sy += 2) {
      const int y_end = sy > 0 ? g.dims.y() : -1;
      for (int sz = -1; sz <= 1; sz += 2) {
        const int z_end = sz > 0 ? g.dims.z() : -1;
        for (int x = center.x(); x != x_end; x += sx) {
          const int u = std::abs(x - center.x());
          for (int y = center.y(); y != y_end; y += sy) {
            const int v = std::abs(y - center.y());
            for (int z = center.z(); z != z_end; z += sz) {
              const int w = std::abs(z - center.z());
              const int total = u + v + w;
              if (total == 0) continue;  // seed
              double acc = 0.0;
              if (g.at(x, y, z)) {
                s.scores[s.linear(x, y, z)] = 0.0;
                continue;
              }
              if (u > 0) acc += u * s.at(x - sx, y, z);
              if (v > 0) acc += v * s.at(x, y - sy, z);
              if (w > 0) acc += w * s.at(x, y, z - sz);
              s.scores[s.linear(x, y, z)] = acc / total;
            }
          }
        }
      }
    }
  }
  return s;
}

OccupancyGrid threshold_region(const ScoreGrid& scores, double tau) {
  OccupancyGrid out(scores.origin, scores.voxel_size, scores.dims);
  for (int i = 0; i < scores.dims.x(); ++i)
    for (int j = 0; j < scores.dims.y(); ++j)
      for (int k = 0; k < scores.dims.z(); ++k)
        if (scores.at(i, j, k) > tau) out.set(i, j, k);
  return out;
}

double path_enum_oracle(const OccupancyGrid& scene_no_target, const Index3& center,
                        const Index3& cell, int max_path_len) {
  const OccupancyGrid& g = scene_no_target;
  if (!g.in_bounds(center) || !g.in_bounds(cell))
    throw OutOfBounds("path_enum_oracle: index outside grid");

  const Index3 delta = cell - center;
  const Index3 span = delta.cwiseAbs();
  const int len = span.sum();
  if (len > max_path_len) throw TooLarge("path_enum_oracle: path length exceeds bound");
  if (g.at(center)) return 0.0;
  if (len == 0) return 1.0;

  const Index3 step(delta.x() >= 0 ? 1 : -1, delta.y() >= 0 ? 1 : -1, delta.z() >= 0 ? 1 : -1);

  // Multiset of axis moves; next_permutation walks every distinct ordering.
  std::vector<int> moves;
  for (int a = 0; a < 3; ++a) moves.insert(moves.end(), span[a], a);

  long double total = 0.0L;
  do {
    long double weight = 1.0L;
    Index3 local = Index3::Zero();
    for (int t = 0; t < len; ++t) {
      const int axis = moves[t];
      local[axis] += 1;
      // Weight of this step, read from the cell just reached: its coordinate
      // along the stepped axis over its coordinate sum.
      weight *= static_cast<long double>(local[axis]) / static_cast<long double>(t + 1);
      const Index3 pos = center + (local.array() * step.array()).matrix();
      if (g.at(pos)) {
        weight = 0.0L;
        break;
      }
    }
    total += weight;
  } while (std::next_permutation(moves.begin(), moves.end()));

  return static_cast<double>(total);
}

bool raycast_clear(const OccupancyGrid& grid, const Vec3& a, const Vec3& b) {
  if (!grid.contains_world(a) || !grid.contains_world(b))
    throw OutOfBounds("raycast_clear: endpoint outside grid");

  const Index3 start = world_to_voxel(grid, a);
  const Index3 goal = world_to_voxel(grid, b);
  if (start == goal) return true;

  // Amortized traversal: repeatedly advance along the axis whose next cell
  // boundary is nearest in ray parameter t.
  Index3 cur = start;
  Index3 step = Index3::Zero();
  Vec3 t_max = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 t_delta = Vec3::Constant(std::numeric_limits<double>::infinity());
  const Vec3 dir = b - a;
  for (int axis = 0; axis < 3; ++axis) {
    if (dir[axis] > 0) {
      step[axis] = 1;
      const double boundary = grid.origin[axis] + (cur[axis] + 1) * grid.voxel_size;
      t_max[axis] = (boundary - a[axis]) / dir[axis];
      t_delta[axis] = grid.voxel_size / dir[axis];
    } else if (dir[axis] < 0) {
      step[axis] = -1;
      const double boundary = grid.origin[axis] + cur[axis] * grid.voxel_size;
      t_max[axis] = (boundary - a[axis]) / dir[axis];
      t_delta[axis] = -grid.voxel_size / dir[axis];
    }
  }

  while (true) {
    int axis = 0;
    if (t_max[1] < t_max[axis]) axis = 1;
    if (t_max[2] < t_max[axis]) axis = 2;
    const double t_enter = t_max[axis];
    cur[axis] += step[axis];
    t_max[axis] += t_delta[axis];
    // Entering at parameter >= 1 means the segment ended inside the previous
    // voxel; a corner-grazing ray can step around the goal voxel itself.
    if (t_enter >= 1.0 || cur == goal) return true;
    if (!grid.in_bounds(cur)) return true;
    if (grid.at(cur)) return false;
  }
}

std::string score_slice_csv(const ScoreGrid& scores, int k) {
  if (k < 0 || k >= scores.dims.z()) throw OutOfBounds("score_slice_csv: slice outside grid");
  std::ostringstream os;
  char buf[40];
  for (int i = 0; i < scores.dims.x(); ++i) {
    for (int j = 0; j < scores.dims.y(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.9g", scores.at(i, j, k));
      os << (j ? "," : "") << buf;
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace gplace
