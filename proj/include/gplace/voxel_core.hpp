#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gplace/types.hpp"

namespace gplace {

/// 2D bit mask over the grid's XY footprint.
struct BitMask2D {
  int nx = 0;
  int ny = 0;
  std::vector<std::uint64_t> words;  // row-major, j fastest, rows word-aligned

  BitMask2D() = default;
  BitMask2D(int nx_, int ny_)
      : nx(nx_), ny(ny_), words(static_cast<std::size_t>(nx_) * words_per_row(ny_), 0) {}

  static int words_per_row(int ny) { return (ny + 63) / 64; }
  int words_per_row() const { return words_per_row(ny); }

  bool in_bounds(int i, int j) const { return i >= 0 && i < nx && j >= 0 && j < ny; }

  bool at(int i, int j) const {
    return (words[static_cast<std::size_t>(i) * words_per_row() + (j >> 6)] >> (j & 63)) & 1u;
  }

  void set(int i, int j, bool v = true) {
    auto& w = words[static_cast<std::size_t>(i) * words_per_row() + (j >> 6)];
    const std::uint64_t bit = 1ull << (j & 63);
    w = v ? (w | bit) : (w & ~bit);
  }

  std::size_t count() const;
};

/// Dense axis-aligned boolean voxel grid. `origin` is the world position of
/// the min corner of voxel (0,0,0); cells are half-open boxes
/// [origin + idx*s, origin + (idx+1)*s). Bits are packed per (i,j) column
/// with z fastest and each column word-aligned, so a z-window of a column is
/// a cheap masked read.
struct OccupancyGrid {
  Vec3 origin = Vec3::Zero();
  double voxel_size = 0.0;
  Index3 dims = Index3::Zero();
  std::vector<std::uint64_t> words;

  OccupancyGrid() = default;
  OccupancyGrid(const Vec3& origin_, double voxel_size_, const Index3& dims_);

  int words_per_column() const { return (dims.z() + 63) / 64; }
  std::size_t cell_count() const {
    return static_cast<std::size_t>(dims.x()) * dims.y() * dims.z();
  }

  bool in_bounds(const Index3& idx) const {
    return (idx.array() >= 0).all() && (idx.array() < dims.array()).all();
  }

  const std::uint64_t* column(int i, int j) const {
    return words.data() + (static_cast<std::size_t>(i) * dims.y() + j) * words_per_column();
  }

  bool at(int i, int j, int k) const { return (column(i, j)[k >> 6] >> (k & 63)) & 1u; }
  bool at(const Index3& idx) const { return at(idx.x(), idx.y(), idx.z()); }

  void set(int i, int j, int k, bool v = true) {
    auto& w = words[(static_cast<std::size_t>(i) * dims.y() + j) * words_per_column() + (k >> 6)];
    const std::uint64_t bit = 1ull << (k & 63);
    w = v ? (w | bit) : (w & ~bit);
  }
  void set(const Index3& idx, bool v = true) { set(idx.x(), idx.y(), idx.z(), v); }

  std::size_t occupied_count() const;

  bool contains_world(const Vec3& p) const;
};

/// Bin a cloud into an occupancy grid. The grid covers the cloud's bounding
/// box plus `padding_voxels` free cells on every side.
OccupancyGrid voxelize(const PointCloud& cloud, double voxel_size, int padding_voxels = 0);

/// Same binning rule over an explicit extent; points outside are ignored.
/// `exclude` (optional, cloud-sized) drops flagged points.
OccupancyGrid voxelize_extent(const PointCloud& cloud, double voxel_size, const Vec3& origin,
                              const Index3& dims, const std::vector<bool>* exclude = nullptr);

/// floor((p - origin)/voxel_size) per axis; throws OutOfBounds for points
/// outside the grid. Upper-boundary ties go to the higher cell.
Index3 world_to_voxel(const OccupancyGrid& grid, const Vec3& p);

/// Center of a voxel in world coordinates; exact inverse of world_to_voxel
/// in the sense world_to_voxel(voxel_center(idx)) == idx.
Vec3 voxel_center(const OccupancyGrid& grid, const Index3& idx);

/// Recompute occupancy with one object's points excluded. Cells shared with
/// other geometry stay occupied; clearing cells directly would punch holes.
OccupancyGrid erase_object(const OccupancyGrid& grid, const PointCloud& cloud,
                           const SceneObject& obj);

/// mask(i,j) = 1 iff any z-layer of column (i,j) is occupied.
BitMask2D project_xy(const OccupancyGrid& grid);

/// Run-length-encoded debug dump; format is fixed for snapshot tests.
/// Runs alternate starting with a zero-run over linear order (i*ny+j)*nz+k.
std::string grid_to_rle_json(const OccupancyGrid& grid);
OccupancyGrid grid_from_rle_json(const std::string& text);

}  // namespace gplace
