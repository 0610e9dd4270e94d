#include "gplace/occupancy_search.hpp"

#include <algorithm>
#include <cmath>

namespace gplace {

namespace {

Index3 keypoint_offset(const OccupancyGrid& mask, const Vec3& keypoint) {
  Index3 idx;
  for (int a = 0; a < 3; ++a)
    idx[a] = static_cast<int>(std::floor((keypoint[a] - mask.origin[a]) / mask.voxel_size));
  // Annotated keypoints can sit epsilon outside the point hull; clamp into it.
  return idx.cwiseMax(Index3::Zero()).cwiseMin(mask.dims - Index3::Ones());
}

// Separable square dilation of the XY footprint, z layers independent.
OccupancyGrid dilate_xy(const OccupancyGrid& in, int margin) {
  const Index3 dims(in.dims.x() + 2 * margin, in.dims.y() + 2 * margin, in.dims.z());
  const Vec3 origin = in.origin - margin * in.voxel_size * Vec3(1, 1, 0);
  OccupancyGrid shifted(origin, in.voxel_size, dims);
  for (int i = 0; i < in.dims.x(); ++i)
    for (int j = 0; j < in.dims.y(); ++j)
      for (int k = 0; k < in.dims.z(); ++k)
        if (in.at(i, j, k)) shifted.set(i + margin, j + margin, k);

  OccupancyGrid pass_x(origin, in.voxel_size, dims);
  for (int i = 0; i < dims.x(); ++i)
    for (int di = -margin; di <= margin; ++di) {
      const int si = i + di;
      if (si < 0 || si >= dims.x()) continue;
      for (int j = 0; j < dims.y(); ++j)
        for (int k = 0; k < dims.z(); ++k)
          if (shifted.at(si, j, k)) pass_x.set(i, j, k);
    }
  OccupancyGrid out(origin, in.voxel_size, dims);
  for (int j = 0; j < dims.y(); ++j)
    for (int dj = -margin; dj <= margin; ++dj) {
      const int sj = j + dj;
      if (sj < 0 || sj >= dims.y()) continue;
      for (int i = 0; i < dims.x(); ++i)
        for (int k = 0; k < dims.z(); ++k)
          if (pass_x.at(i, sj, k)) out.set(i, j, k);
    }
  return out;
}

}  // namespace

AvatarVolume voxelize_avatar(const AvatarModel& avatar, double voxel_size, int margin_voxels) {
  if (avatar.cloud.empty()) throw EmptyCloud("voxelize_avatar: empty avatar cloud");
  AvatarVolume vol;
  vol.margin_voxels = margin_voxels;
  vol.gesturing_hand = avatar.gesturing_hand;
  vol.mask = voxelize(avatar.cloud, voxel_size, 0);
  if (margin_voxels > 0) vol.mask = dilate_xy(vol.mask, margin_voxels);
  vol.height_voxels = vol.mask.dims.z();
  vol.foot_offset = keypoint_offset(vol.mask, avatar.foot);
  vol.left_shoulder_offset = keypoint_offset(vol.mask, avatar.left_shoulder);
  vol.right_shoulder_offset = keypoint_offset(vol.mask, avatar.right_shoulder);
  vol.left_fingertip_offset = keypoint_offset(vol.mask, avatar.left_fingertip);
  vol.right_fingertip_offset = keypoint_offset(vol.mask, avatar.right_fingertip);
  return vol;
}

bool FootprintSet::contains(int i, int j) const {
  return std::binary_search(cells.begin(), cells.end(), Vec2i(i, j),
                            [](const Vec2i& a, const Vec2i& b) {
                              return a.x() != b.x() ? a.x() < b.x() : a.y() < b.y();
                            });
}

FootprintSet find_noncollide(const OccupancyGrid& scene, const AvatarVolume& avatar, int floor_k) {
  const OccupancyGrid& mask = avatar.mask;
  if (floor_k < 0 || floor_k + avatar.height_voxels > scene.dims.z())
    throw OutOfBounds("find_noncollide: avatar volume exceeds grid height");

  const int h = avatar.height_voxels;
  const int wpc = (h + 63) / 64;
  const int nx = scene.dims.x(), ny = scene.dims.y();
  const int mx = mask.dims.x(), my = mask.dims.y();

  // Avatar columns as z-bitsets; skip all-empty columns up front.
  struct MaskColumn {
    int u, v;
    std::vector<std::uint64_t> bits;
  };
  std::vector<MaskColumn> mask_columns;
  for (int u = 0; u < mx; ++u)
    for (int v = 0; v < my; ++v) {
      MaskColumn col{u, v, std::vector<std::uint64_t>(wpc, 0)};
      bool any = false;
      for (int k = 0; k < h; ++k)
        if (mask.at(u, v, k)) {
          col.bits[k >> 6] |= 1ull << (k & 63);
          any = true;
        }
      if (any) mask_columns.push_back(std::move(col));
    }

  FootprintSet result;
  if (mask_columns.empty() || mx > nx || my > ny) return result;

  // Scene columns shifted down by floor_k so both sides index z from the
  // avatar's bottom layer.
  const int scene_wpc = scene.words_per_column();
  const int shift_word = floor_k >> 6;
  const int shift_bit = floor_k & 63;
  std::vector<std::uint64_t> windows(static_cast<std::size_t>(nx) * ny * wpc, 0);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      const std::uint64_t* col = scene.column(i, j);
      std::uint64_t* win = windows.data() + (static_cast<std::size_t>(i) * ny + j) * wpc;
      for (int t = 0; t < wpc; ++t) {
        std::uint64_t w = 0;
        if (t + shift_word < scene_wpc) w = col[t + shift_word] >> shift_bit;
        if (shift_bit != 0 && t + shift_word + 1 < scene_wpc)
          w |= col[t + shift_word + 1] << (64 - shift_bit);
        win[t] = w;
      }
    }

  for (int i = 0; i + mx <= nx; ++i) {
    for (int j = 0; j + my <= ny; ++j) {
      bool collides = false;
      for (const auto& col : mask_columns) {
        const std::uint64_t* win =
            windows.data() + (static_cast<std::size_t>(i + col.u) * ny + (j + col.v)) * wpc;
        for (int t = 0; t < wpc; ++t)
          if (col.bits[t] & win[t]) {
            collides = true;
            break;
          }
        if (collides) break;
      }
      if (!collides) result.cells.emplace_back(i, j);
    }
  }
  return result;  // scan order is already lexicographic
}

}  // namespace gplace
