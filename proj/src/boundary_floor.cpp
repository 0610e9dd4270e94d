#include "gplace/boundary_floor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace gplace {

namespace {

constexpr int kNeighbors[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};

// 4-connected flood from a seed set over cells where `admit` is true.
template <typename Admit, typename Seed>
void flood4(int nx, int ny, std::vector<std::uint8_t>& visited, Seed seed_cells, Admit admit) {
  std::vector<int> stack;
  seed_cells([&](int i, int j) {
    const std::size_t id = static_cast<std::size_t>(i) * ny + j;
    if (!visited[id] && admit(i, j)) {
      visited[id] = 1;
      stack.push_back(static_cast<int>(id));
    }
  });
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const int i = id / ny, j = id % ny;
    for (const auto& d : kNeighbors) {
      const int ni = i + d[0], nj = j + d[1];
      if (ni < 0 || ni >= nx || nj < 0 || nj >= ny) continue;
      const std::size_t nid = static_cast<std::size_t>(ni) * ny + nj;
      if (!visited[nid] && admit(ni, nj)) {
        visited[nid] = 1;
        stack.push_back(static_cast<int>(nid));
      }
    }
  }
}

}  // namespace

BoundaryMask boundary_mask(const BitMask2D& xy_occupancy) {
  const int nx = xy_occupancy.nx, ny = xy_occupancy.ny;
  const std::size_t total = static_cast<std::size_t>(nx) * ny;

  // Largest 4-connected component of occupied cells.
  std::vector<std::int32_t> label(total, -1);
  std::int32_t n_labels = 0;
  std::int32_t best_label = -1;
  std::size_t best_size = 0;
  std::vector<int> stack;
  for (int i0 = 0; i0 < nx; ++i0) {
    for (int j0 = 0; j0 < ny; ++j0) {
      const std::size_t id0 = static_cast<std::size_t>(i0) * ny + j0;
      if (!xy_occupancy.at(i0, j0) || label[id0] >= 0) continue;
      const std::int32_t cur = n_labels++;
      std::size_t size = 0;
      label[id0] = cur;
      stack.push_back(static_cast<int>(id0));
      while (!stack.empty()) {
        const int id = stack.back();
        stack.pop_back();
        ++size;
        const int i = id / ny, j = id % ny;
        for (const auto& d : kNeighbors) {
          const int ni = i + d[0], nj = j + d[1];
          if (ni < 0 || ni >= nx || nj < 0 || nj >= ny) continue;
          const std::size_t nid = static_cast<std::size_t>(ni) * ny + nj;
          if (xy_occupancy.at(ni, nj) && label[nid] < 0) {
            label[nid] = cur;
            stack.push_back(static_cast<int>(nid));
          }
        }
      }
      if (size > best_size) {
        best_size = size;
        best_label = cur;
      }
    }
  }
  if (best_label < 0) throw EmptyScene("boundary_mask: no occupied cell");

  // Fill holes: cells not in the component and not reachable from the mask
  // border are enclosed by the component's outer contour.
  const auto in_component = [&](int i, int j) {
    return label[static_cast<std::size_t>(i) * ny + j] == best_label;
  };
  std::vector<std::uint8_t> outside(total, 0);
  flood4(
      nx, ny, outside,
      [&](auto push) {
        for (int i = 0; i < nx; ++i) {
          push(i, 0);
          push(i, ny - 1);
        }
        for (int j = 0; j < ny; ++j) {
          push(0, j);
          push(nx - 1, j);
        }
      },
      [&](int i, int j) { return !in_component(i, j); });

  BoundaryMask out;
  out.mask = BitMask2D(nx, ny);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      if (in_component(i, j) || !outside[static_cast<std::size_t>(i) * ny + j])
        out.mask.set(i, j);
  return out;
}

FloorEstimate estimate_floor(const PointCloud& cloud, const std::vector<std::size_t>& floor_indices,
                             const OccupancyGrid& grid, double mean_offset_m,
                             int min_floor_voxel) {
  if (floor_indices.empty())
    throw MissingFloor("estimate_floor: no floor-labeled points and no override");

  std::vector<double> zs;
  zs.reserve(floor_indices.size());
  for (std::size_t idx : floor_indices) {
    if (idx >= cloud.size()) throw OutOfBounds("estimate_floor: floor index out of range");
    zs.push_back(static_cast<double>(cloud.points[idx].z()));
  }
  // Sorting first makes both the percentile and the mean independent of the
  // input permutation (fp addition is order-sensitive).
  std::sort(zs.begin(), zs.end());
  const double mean = std::accumulate(zs.begin(), zs.end(), 0.0) / static_cast<double>(zs.size());
  const std::size_t rank =
      static_cast<std::size_t>(std::ceil(0.85 * static_cast<double>(zs.size())));  // 1-based
  const double p85 = zs[rank - 1];
  return floor_from_height(std::min(mean + mean_offset_m, p85), grid, min_floor_voxel);
}

FloorEstimate floor_from_height(double floor_height_m, const OccupancyGrid& grid,
                                int min_floor_voxel) {
  FloorEstimate est;
  est.floor_height_m = floor_height_m;
  est.floor_voxel =
      static_cast<int>(std::floor((floor_height_m - grid.origin.z()) / grid.voxel_size));
  est.clamped_floor_voxel = std::max(min_floor_voxel, est.floor_voxel);
  return est;
}

}  // namespace gplace
