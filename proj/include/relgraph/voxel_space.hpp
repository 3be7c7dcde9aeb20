#pragma once

#include <optional>
#include <span>
#include <vector>

#include "relgraph/scene.hpp"
#include "relgraph/voxel_grid.hpp"

namespace relgraph {

/// Separating-axis test between a triangle and a closed axis-aligned box.
/// Touching counts as overlap.
bool triangle_box_overlap(const Triangle& tri, const Aabb& box);

struct VoxelizeStats {
  std::size_t degenerate_skipped = 0;
};

/// Surface voxelization: marks every cell whose closed box intersects a mesh
/// triangle. Interiors are not filled. Throws when nothing is occupied.
OccupancyGrid voxelize(std::span<const Triangle> mesh, const GridFrame& frame,
                       VoxelizeStats* stats = nullptr);
OccupancyGrid voxelize(const Instance& instance, const GridFrame& frame,
                       VoxelizeStats* stats = nullptr);
/// Grid anchored at the world origin.
OccupancyGrid voxelize(const Instance& instance, double resolution);

/// Shared grid frame of a scene: one voxel of padding below the scene bounds.
GridFrame scene_grid_frame(const Scene& scene, double resolution);

/// Static k-d tree over 3D points with nearest-neighbour queries.
class KdTree {
 public:
  struct Nearest {
    std::size_t index = 0;  // into points()
    double distance_sq = kInf;
  };

  KdTree() = default;
  explicit KdTree(std::vector<Vec3> points);

  [[nodiscard]] std::size_t size() const { return points_.size(); }
  [[nodiscard]] const std::vector<Vec3>& points() const { return points_; }

  /// Nearest point strictly closer than sqrt(max_distance_sq), if any.
  [[nodiscard]] std::optional<Nearest> nearest(const Vec3& query,
                                               double max_distance_sq = kInf) const;

 private:
  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint8_t axis = 0;
    double split = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void search(std::int32_t node, const Vec3& q, Nearest& best) const;

  std::vector<Vec3> points_;
  std::vector<Node> nodes_;
};

/// Spatial index over the occupied voxel centers of one instance.
class DistanceIndex {
 public:
  DistanceIndex() = default;
  explicit DistanceIndex(const OccupancyGrid& grid);

  [[nodiscard]] const GridFrame& frame() const { return frame_; }
  [[nodiscard]] const KdTree& tree() const { return tree_; }
  /// Bounds of the voxel centers.
  [[nodiscard]] const Aabb& center_bounds() const { return bounds_; }
  [[nodiscard]] std::size_t size() const { return tree_.size(); }

 private:
  GridFrame frame_;
  KdTree tree_;
  Aabb bounds_;
};

/// Closest pair of voxel centers between two grids.
struct ClosestPair {
  Vec3 from_a;
  Vec3 from_b;
  double center_distance = kInf;
};

ClosestPair closest_voxel_centers(const DistanceIndex& a, const DistanceIndex& b);

/// Center distance reduced by one voxel diagonal and clamped at zero, so
/// that abutting voxels report 0.
inline double clamp_voxel_distance(double center_distance, const GridFrame& frame) {
  return std::max(0.0, center_distance - frame.diagonal());
}

/// Shortest distance in meters between two voxelized objects (symmetric).
double shortest_distance(const DistanceIndex& a, const DistanceIndex& b);
double shortest_distance(const OccupancyGrid& a, const OccupancyGrid& b);

bool touching(const DistanceIndex& a, const DistanceIndex& b);
bool touching(const OccupancyGrid& a, const OccupancyGrid& b);

}  // namespace relgraph
