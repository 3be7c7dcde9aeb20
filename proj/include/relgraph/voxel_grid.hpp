#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include "relgraph/geometry.hpp"

namespace relgraph {

struct VoxelCoord {
  std::int32_t x = 0;
  std::int32_t y = 0;
  std::int32_t z = 0;

  auto operator<=>(const VoxelCoord&) const = default;
};

struct VoxelCoordHash {
  std::size_t operator()(const VoxelCoord& c) const noexcept {
    // large primes, as in the usual spatial hashing schemes
    const auto h = static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.x)) * 73856093ULL ^
                   static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.y)) * 19349663ULL ^
                   static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.z)) * 83492791ULL;
    return static_cast<std::size_t>(h * 0x9E3779B97F4A7C15ULL >> 17);
  }
};

/// Maps integer voxel coordinates to world space. Voxel (i,j,k) covers
/// [origin + i*res, origin + (i+1)*res) along each axis.
struct GridFrame {
  double resolution = 0.01;
  Vec3 origin = Vec3::Zero();

  [[nodiscard]] VoxelCoord cell_of(const Vec3& p) const {
    const Vec3 q = (p - origin) / resolution;
    return {static_cast<std::int32_t>(std::floor(q.x())), static_cast<std::int32_t>(std::floor(q.y())),
            static_cast<std::int32_t>(std::floor(q.z()))};
  }
  [[nodiscard]] Vec3 corner(const VoxelCoord& c) const {
    return origin + resolution * Vec3(c.x, c.y, c.z);
  }
  [[nodiscard]] Vec3 center(const VoxelCoord& c) const {
    return origin + resolution * Vec3(c.x + 0.5, c.y + 0.5, c.z + 0.5);
  }
  [[nodiscard]] Aabb cell_bounds(const VoxelCoord& c) const {
    const Vec3 lo = corner(c);
    return {lo, lo + Vec3::Constant(resolution)};
  }
  [[nodiscard]] double diagonal() const { return std::sqrt(3.0) * resolution; }

  bool operator==(const GridFrame& o) const {
    return resolution == o.resolution && origin == o.origin;
  }
};

class GridMismatch : public Error {
 public:
  GridMismatch() : Error("voxel grids have different resolution or origin") {}
};

/// Payload of pure occupancy grids.
struct Occupied {
  bool operator==(const Occupied&) const = default;
};

/// Sparse voxel grid: a hash map from voxel coordinates to a payload.
template <typename T>
class VoxelGrid {
 public:
  using value_type = T;
  using map_type = std::unordered_map<VoxelCoord, T, VoxelCoordHash>;

  VoxelGrid() = default;
  explicit VoxelGrid(GridFrame frame) : frame_(frame) {
    if (!(frame.resolution > 0.0)) throw Error("voxel resolution must be positive");
  }

  [[nodiscard]] const GridFrame& frame() const { return frame_; }
  [[nodiscard]] std::size_t size() const { return cells_.size(); }
  [[nodiscard]] bool empty() const { return cells_.empty(); }
  [[nodiscard]] bool contains(const VoxelCoord& c) const { return cells_.count(c) != 0; }

  [[nodiscard]] const T* find(const VoxelCoord& c) const {
    auto it = cells_.find(c);
    return it == cells_.end() ? nullptr : &it->second;
  }

  void set(const VoxelCoord& c, T value = T{}) { cells_.insert_or_assign(c, std::move(value)); }

  /// Keeps the smaller of the stored and the offered value.
  void merge_min(const VoxelCoord& c, T value) {
    auto [it, inserted] = cells_.try_emplace(c, value);
    if (!inserted && value < it->second) it->second = value;
  }

  bool erase(const VoxelCoord& c) { return cells_.erase(c) != 0; }
  void reserve(std::size_t n) { cells_.reserve(n); }

  [[nodiscard]] auto begin() const { return cells_.begin(); }
  [[nodiscard]] auto end() const { return cells_.end(); }

  /// Cells in lexicographic (x, y, z) order.
  [[nodiscard]] std::vector<std::pair<VoxelCoord, T>> sorted() const {
    std::vector<std::pair<VoxelCoord, T>> out(cells_.begin(), cells_.end());
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
  }

  /// Bounds of the occupied cells in world space.
  [[nodiscard]] Aabb world_bounds() const {
    Aabb box;
    for (const auto& [c, v] : cells_) box.extend(frame_.cell_bounds(c));
    return box;
  }

  bool operator==(const VoxelGrid& other) const {
    return frame_ == other.frame_ && cells_ == other.cells_;
  }

 private:
  GridFrame frame_;
  map_type cells_;
};

using OccupancyGrid = VoxelGrid<Occupied>;
using ScalarGrid = VoxelGrid<float>;

inline void require_same_frame(const GridFrame& a, const GridFrame& b) {
  if (!(a == b)) throw GridMismatch();
}

/// Occupancy view of any grid.
template <typename T>
OccupancyGrid occupancy(const VoxelGrid<T>& grid) {
  OccupancyGrid out(grid.frame());
  out.reserve(grid.size());
  for (const auto& [c, v] : grid) out.set(c);
  return out;
}

}  // namespace relgraph
