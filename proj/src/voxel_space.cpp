#include "relgraph/voxel_space.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>

namespace relgraph {

namespace {

constexpr std::uint32_t kLeafSize = 8;

bool separated_on_axis(const Vec3& axis, const Vec3& v0, const Vec3& v1, const Vec3& v2,
                       const Vec3& half) {
  const double p0 = axis.dot(v0);
  const double p1 = axis.dot(v1);
  const double p2 = axis.dot(v2);
  const double r = half.dot(axis.cwiseAbs());
  return std::min({p0, p1, p2}) > r || std::max({p0, p1, p2}) < -r;
}

bool degenerate(const Triangle& t) {
  const double longest = std::max({(t.b - t.a).squaredNorm(), (t.c - t.b).squaredNorm(),
                                   (t.a - t.c).squaredNorm()});
  return longest == 0.0 || t.scaled_normal().norm() <= 1e-12 * longest;
}

double aabb_point_distance_sq(const Aabb& box, const Vec3& p) {
  return (box.lo - p).cwiseMax(p - box.hi).cwiseMax(0.0).squaredNorm();
}

}  // namespace

bool triangle_box_overlap(const Triangle& tri, const Aabb& box) {
  const Vec3 c = box.center();
  const Vec3 half = 0.5 * box.extent();
  const Vec3 v0 = tri.a - c;
  const Vec3 v1 = tri.b - c;
  const Vec3 v2 = tri.c - c;

  // box face normals
  for (int i = 0; i < 3; ++i) {
    if (std::min({v0[i], v1[i], v2[i]}) > half[i] || std::max({v0[i], v1[i], v2[i]}) < -half[i]) {
      return false;
    }
  }
  // triangle plane
  const Vec3 n = (v1 - v0).cross(v2 - v0);
  if (std::abs(n.dot(v0)) > half.dot(n.cwiseAbs())) return false;

  // edge cross products
  const Vec3 edges[3] = {v1 - v0, v2 - v1, v0 - v2};
  for (const Vec3& e : edges) {
    for (int i = 0; i < 3; ++i) {
      const Vec3 axis = Vec3::Unit(i).cross(e);
      if (separated_on_axis(axis, v0, v1, v2, half)) return false;
    }
  }
  return true;
}

OccupancyGrid voxelize(std::span<const Triangle> mesh, const GridFrame& frame, VoxelizeStats* stats) {
  OccupancyGrid grid(frame);
  std::size_t skipped = 0;
  for (const Triangle& tri : mesh) {
    if (degenerate(tri)) {
      ++skipped;
      continue;
    }
    const Aabb tb = tri.bounds();
    const Vec3 qlo = (tb.lo - frame.origin) / frame.resolution;
    const Vec3 qhi = (tb.hi - frame.origin) / frame.resolution;
    // closed cells: a bound lying exactly on a cell face touches both neighbours
    VoxelCoord lo{static_cast<std::int32_t>(std::ceil(qlo.x())) - 1,
                  static_cast<std::int32_t>(std::ceil(qlo.y())) - 1,
                  static_cast<std::int32_t>(std::ceil(qlo.z())) - 1};
    VoxelCoord hi{static_cast<std::int32_t>(std::floor(qhi.x())),
                  static_cast<std::int32_t>(std::floor(qhi.y())),
                  static_cast<std::int32_t>(std::floor(qhi.z()))};
    for (std::int32_t x = lo.x; x <= hi.x; ++x) {
      for (std::int32_t y = lo.y; y <= hi.y; ++y) {
        for (std::int32_t z = lo.z; z <= hi.z; ++z) {
          const VoxelCoord c{x, y, z};
          if (grid.contains(c)) continue;
          if (triangle_box_overlap(tri, frame.cell_bounds(c))) grid.set(c);
        }
      }
    }
  }
  if (stats) stats->degenerate_skipped = skipped;
  if (grid.empty()) throw Error("voxelization produced no occupied voxels");
  return grid;
}

OccupancyGrid voxelize(const Instance& instance, const GridFrame& frame, VoxelizeStats* stats) {
  try {
    return voxelize(std::span<const Triangle>(instance.mesh), frame, stats);
  } catch (const Error& e) {
    throw Error("instance " + std::to_string(instance.id) + ": " + e.what());
  }
}

OccupancyGrid voxelize(const Instance& instance, double resolution) {
  return voxelize(instance, GridFrame{resolution, Vec3::Zero()});
}

GridFrame scene_grid_frame(const Scene& scene, double resolution) {
  if (!(resolution > 0.0)) throw Error("voxel resolution must be positive");
  return GridFrame{resolution, scene.bounds.lo - Vec3::Constant(resolution)};
}

// ---------------------------------------------------------------------------

KdTree::KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    build(0, static_cast<std::uint32_t>(points_.size()));
  }
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= kLeafSize) return id;

  Aabb box;
  for (std::uint32_t i = begin; i < end; ++i) box.extend(points_[i]);
  Eigen::Index axis = 0;
  box.extent().maxCoeff(&axis);
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(points_.begin() + begin, points_.begin() + mid, points_.begin() + end,
                   [axis](const Vec3& a, const Vec3& b) { return a[axis] < b[axis]; });
  nodes_[static_cast<std::size_t>(id)].axis = static_cast<std::uint8_t>(axis);
  nodes_[static_cast<std::size_t>(id)].split = points_[mid][axis];
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

void KdTree::search(std::int32_t node_id, const Vec3& q, Nearest& best) const {
  const Node& node = nodes_[static_cast<std::size_t>(node_id)];
  if (node.left < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const double d = (points_[i] - q).squaredNorm();
      if (d < best.distance_sq) best = {i, d};
    }
    return;
  }
  const double delta = q[node.axis] - node.split;
  const std::int32_t near = delta < 0 ? node.left : node.right;
  const std::int32_t far = delta < 0 ? node.right : node.left;
  search(near, q, best);
  if (delta * delta < best.distance_sq) search(far, q, best);
}

std::optional<KdTree::Nearest> KdTree::nearest(const Vec3& query, double max_distance_sq) const {
  if (points_.empty()) return std::nullopt;
  Nearest best{points_.size(), max_distance_sq};
  search(0, query, best);
  if (best.index == points_.size()) return std::nullopt;
  return best;
}

// ---------------------------------------------------------------------------

DistanceIndex::DistanceIndex(const OccupancyGrid& grid) : frame_(grid.frame()) {
  std::vector<Vec3> centers;
  centers.reserve(grid.size());
  for (const auto& [c, v] : grid.sorted()) centers.push_back(frame_.center(c));
  for (const Vec3& p : centers) bounds_.extend(p);
  tree_ = KdTree(std::move(centers));
}

ClosestPair closest_voxel_centers(const DistanceIndex& a, const DistanceIndex& b) {
  require_same_frame(a.frame(), b.frame());
  if (a.size() == 0 || b.size() == 0) throw Error("shortest_distance: empty voxel grid");

  // Iterate the smaller side; the choice depends only on the unordered pair.
  auto key = [](const DistanceIndex& d) {
    const Aabb& bb = d.center_bounds();
    return std::tuple(d.size(), bb.lo.x(), bb.lo.y(), bb.lo.z(), bb.hi.x(), bb.hi.y(), bb.hi.z());
  };
  const bool swap = key(b) < key(a);
  const DistanceIndex& outer = swap ? b : a;
  const DistanceIndex& inner = swap ? a : b;

  const auto& pts = outer.tree().points();
  std::vector<std::pair<double, std::uint32_t>> order(pts.size());
  for (std::uint32_t i = 0; i < pts.size(); ++i) {
    order[i] = {aabb_point_distance_sq(inner.center_bounds(), pts[i]), i};
  }
  std::sort(order.begin(), order.end());

  double best_sq = kInf;
  std::size_t best_outer = 0;
  std::size_t best_inner = 0;
  for (const auto& [lower_bound, i] : order) {
    if (lower_bound >= best_sq) break;
    if (auto hit = inner.tree().nearest(pts[i], best_sq)) {
      best_sq = hit->distance_sq;
      best_outer = i;
      best_inner = hit->index;
    }
  }
  const Vec3& po = pts[best_outer];
  const Vec3& pi = inner.tree().points()[best_inner];
  ClosestPair out;
  out.from_a = swap ? pi : po;
  out.from_b = swap ? po : pi;
  out.center_distance = std::sqrt(best_sq);
  return out;
}

double shortest_distance(const DistanceIndex& a, const DistanceIndex& b) {
  return clamp_voxel_distance(closest_voxel_centers(a, b).center_distance, a.frame());
}

double shortest_distance(const OccupancyGrid& a, const OccupancyGrid& b) {
  return shortest_distance(DistanceIndex(a), DistanceIndex(b));
}

bool touching(const DistanceIndex& a, const DistanceIndex& b) {
  return shortest_distance(a, b) == 0.0;
}

bool touching(const OccupancyGrid& a, const OccupancyGrid& b) {
  return shortest_distance(a, b) == 0.0;
}

}  // namespace relgraph
