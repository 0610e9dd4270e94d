#include "gplace/voxel_core.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

namespace gplace {

namespace {

inline int bin(double p, double origin, double s) {
  return static_cast<int>(std::floor((p - origin) / s));
}

std::string fmt_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

std::size_t BitMask2D::count() const {
  std::size_t n = 0;
  for (auto w : words) n += std::popcount(w);
  return n;
}

OccupancyGrid::OccupancyGrid(const Vec3& origin_, double voxel_size_, const Index3& dims_)
    : origin(origin_), voxel_size(voxel_size_), dims(dims_) {
  if (voxel_size <= 0.0) throw Error("voxel_size must be positive");
  if ((dims.array() <= 0).any()) throw Error("grid dims must be positive");
  words.assign(static_cast<std::size_t>(dims.x()) * dims.y() * words_per_column(), 0);
}

std::size_t OccupancyGrid::occupied_count() const {
  std::size_t n = 0;
  for (auto w : words) n += std::popcount(w);
  return n;
}

bool OccupancyGrid::contains_world(const Vec3& p) const {
  const Vec3 upper = origin + voxel_size * dims.cast<double>();
  return (p.array() >= origin.array()).all() && (p.array() < upper.array()).all();
}

OccupancyGrid voxelize(const PointCloud& cloud, double voxel_size, int padding_voxels) {
  if (cloud.empty()) throw EmptyCloud("voxelize: empty cloud");
  if (voxel_size <= 0.0) throw Error("voxelize: voxel_size must be positive");

  Vec3 lo = cloud.points.front().cast<double>();
  Vec3 hi = lo;
  for (const auto& pf : cloud.points) {
    const Vec3 p = pf.cast<double>();
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec3 origin = lo - padding_voxels * voxel_size * Vec3::Ones();
  Index3 dims;
  for (int a = 0; a < 3; ++a) {
    // The max point bins to floor((hi-lo)/s) relative to lo, so cover it +1.
    dims[a] = bin(hi[a], lo[a], voxel_size) + 1 + 2 * padding_voxels;
  }
  return voxelize_extent(cloud, voxel_size, origin, dims);
}

OccupancyGrid voxelize_extent(const PointCloud& cloud, double voxel_size, const Vec3& origin,
                              const Index3& dims, const std::vector<bool>* exclude) {
  OccupancyGrid grid(origin, voxel_size, dims);
  for (std::size_t n = 0; n < cloud.size(); ++n) {
    if (exclude && (*exclude)[n]) continue;
    const Vec3 p = cloud.points[n].cast<double>();
    Index3 idx;
    for (int a = 0; a < 3; ++a) idx[a] = bin(p[a], origin[a], voxel_size);
    if (grid.in_bounds(idx)) grid.set(idx);
  }
  return grid;
}

Index3 world_to_voxel(const OccupancyGrid& grid, const Vec3& p) {
  if (!grid.contains_world(p)) {
    std::ostringstream os;
    os << "world_to_voxel: point (" << p.transpose() << ") outside grid";
    throw OutOfBounds(os.str());
  }
  Index3 idx;
  for (int a = 0; a < 3; ++a) idx[a] = bin(p[a], grid.origin[a], grid.voxel_size);
  // A point epsilon-below the upper face can bin to dims on that axis.
  idx = idx.cwiseMin(grid.dims - Index3::Ones()).cwiseMax(Index3::Zero());
  return idx;
}

Vec3 voxel_center(const OccupancyGrid& grid, const Index3& idx) {
  return grid.origin + grid.voxel_size * (idx.cast<double>() + 0.5 * Vec3::Ones());
}

OccupancyGrid erase_object(const OccupancyGrid& grid, const PointCloud& cloud,
                           const SceneObject& obj) {
  std::vector<bool> exclude(cloud.size(), false);
  for (std::size_t idx : obj.point_indices) {
    if (idx >= cloud.size()) throw OutOfBounds("erase_object: point index out of range");
    exclude[idx] = true;
  }
  return voxelize_extent(cloud, grid.voxel_size, grid.origin, grid.dims, &exclude);
}

BitMask2D project_xy(const OccupancyGrid& grid) {
  BitMask2D mask(grid.dims.x(), grid.dims.y());
  const int wpc = grid.words_per_column();
  for (int i = 0; i < grid.dims.x(); ++i) {
    for (int j = 0; j < grid.dims.y(); ++j) {
      const std::uint64_t* col = grid.column(i, j);
      for (int t = 0; t < wpc; ++t) {
        if (col[t]) {
          mask.set(i, j);
          break;
        }
      }
    }
  }
  return mask;
}

std::string grid_to_rle_json(const OccupancyGrid& grid) {
  std::ostringstream os;
  os << "{\"dims\":[" << grid.dims.x() << "," << grid.dims.y() << "," << grid.dims.z() << "]"
     << ",\"voxel_size\":" << fmt_g9(grid.voxel_size) << ",\"origin\":["
     << fmt_g9(grid.origin.x()) << "," << fmt_g9(grid.origin.y()) << ","
     << fmt_g9(grid.origin.z()) << "],\"rle\":[";
  // Alternating run lengths starting with a zero-run (possibly 0).
  std::uint64_t run = 0;
  bool run_value = false;
  bool first = true;
  auto flush = [&] {
    os << (first ? "" : ",") << run;
    first = false;
  };
  for (int i = 0; i < grid.dims.x(); ++i) {
    for (int j = 0; j < grid.dims.y(); ++j) {
      for (int k = 0; k < grid.dims.z(); ++k) {
        const bool v = grid.at(i, j, k);
        if (v == run_value) {
          ++run;
        } else {
          flush();
          run_value = v;
          run = 1;
        }
      }
    }
  }
  if (run > 0) flush();
  os << "]}";
  return os.str();
}

OccupancyGrid grid_from_rle_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("grid RLE parse: ") + e.what());
  }
  try {
    const auto dims_v = j.at("dims");
    const auto origin_v = j.at("origin");
    OccupancyGrid grid(Vec3(origin_v.at(0), origin_v.at(1), origin_v.at(2)),
                       j.at("voxel_size").get<double>(),
                       Index3(dims_v.at(0), dims_v.at(1), dims_v.at(2)));
    std::size_t pos = 0;
    bool value = false;
    const std::size_t total = grid.cell_count();
    const int ny = grid.dims.y(), nz = grid.dims.z();
    for (const auto& run_v : j.at("rle")) {
      const std::uint64_t run = run_v.get<std::uint64_t>();
      for (std::uint64_t t = 0; t < run; ++t, ++pos) {
        if (pos >= total) throw FormatError("grid RLE longer than dims");
        if (value) {
          const int k = static_cast<int>(pos % nz);
          const int ij = static_cast<int>(pos / nz);
          grid.set(ij / ny, ij % ny, k);
        }
      }
      value = !value;
    }
    if (pos != total) throw FormatError("grid RLE shorter than dims");
    return grid;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("grid RLE fields: ") + e.what());
  }
}

}  // namespace gplace
