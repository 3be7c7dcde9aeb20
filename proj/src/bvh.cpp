#include "relgraph/bvh.hpp"

#include <numeric>

namespace relgraph {

namespace {

constexpr std::uint32_t kMaxLeaf = 4;
constexpr int kBins = 16;
constexpr double kEdgeEps = 1e-12;
constexpr double kBoxPad = 1e-9;

double surface_area(const Aabb& b) {
  if (b.empty()) return 0.0;
  const Vec3 e = b.extent();
  return 2.0 * (e.x() * e.y() + e.y() * e.z() + e.z() * e.x());
}

}  // namespace

std::optional<double> intersect_triangle(const Ray& ray, const Triangle& tri) {
  const Vec3 e1 = tri.b - tri.a;
  const Vec3 e2 = tri.c - tri.a;
  const Vec3 p = ray.direction.cross(e2);
  const double det = e1.dot(p);
  if (std::abs(det) <= 1e-14 * e1.norm() * e2.norm()) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 s = ray.origin - tri.a;
  const double u = s.dot(p) * inv;
  if (u < -kEdgeEps || u > 1.0 + kEdgeEps) return std::nullopt;
  const Vec3 q = s.cross(e1);
  const double v = ray.direction.dot(q) * inv;
  if (v < -kEdgeEps || u + v > 1.0 + kEdgeEps) return std::nullopt;
  const double t = e2.dot(q) * inv;
  if (t < 0.0 || t > ray.max_t) return std::nullopt;
  return t;
}

Bvh::Bvh(std::vector<Triangle> triangles, std::vector<int> instance_ids)
    : triangles_(std::move(triangles)), instance_ids_(std::move(instance_ids)) {
  if (triangles_.empty()) throw Error("cannot build a BVH over an empty mesh");
  if (instance_ids_.size() != triangles_.size()) throw Error("BVH: one instance id per triangle");
  for (const Triangle& t : triangles_) bounds_.extend(t.bounds());
  nodes_.reserve(2 * triangles_.size());
  build(0, static_cast<std::uint32_t>(triangles_.size()), 0);
}

Bvh::Bvh(std::vector<Triangle> triangles, int instance_id)
    : Bvh(std::vector<Triangle>(triangles),
          std::vector<int>(triangles.size(), instance_id)) {}

std::uint32_t Bvh::build(std::uint32_t begin, std::uint32_t end, int depth) {
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();
  Aabb box;
  Aabb centroids;
  for (std::uint32_t i = begin; i < end; ++i) {
    box.extend(triangles_[i].bounds());
    centroids.extend(triangles_[i].centroid());
  }
  nodes_[id].box = box.inflated(kBoxPad);

  const std::uint32_t count = end - begin;
  auto make_leaf = [&] {
    nodes_[id].first = begin;
    nodes_[id].count = count;
    return id;
  };
  if (count <= kMaxLeaf || depth >= kMaxBvhDepth) return make_leaf();

  Eigen::Index axis = 0;
  const double span = centroids.extent().maxCoeff(&axis);
  if (span <= 0.0) return make_leaf();

  // binned SAH along the widest centroid axis
  struct Bin {
    Aabb box;
    std::uint32_t n = 0;
  };
  std::array<Bin, kBins> bins{};
  const double lo = centroids.lo[axis];
  auto bin_of = [&](const Triangle& t) {
    const int b = static_cast<int>(kBins * (t.centroid()[axis] - lo) / span);
    return std::clamp(b, 0, kBins - 1);
  };
  for (std::uint32_t i = begin; i < end; ++i) {
    Bin& b = bins[static_cast<std::size_t>(bin_of(triangles_[i]))];
    b.box.extend(triangles_[i].bounds());
    ++b.n;
  }
  std::array<double, kBins - 1> cost{};
  {
    Aabb acc;
    std::uint32_t n = 0;
    for (int i = 0; i < kBins - 1; ++i) {
      acc.extend(bins[static_cast<std::size_t>(i)].box);
      n += bins[static_cast<std::size_t>(i)].n;
      cost[static_cast<std::size_t>(i)] = surface_area(acc) * n;
    }
    acc = Aabb();
    n = 0;
    for (int i = kBins - 1; i > 0; --i) {
      acc.extend(bins[static_cast<std::size_t>(i)].box);
      n += bins[static_cast<std::size_t>(i)].n;
      cost[static_cast<std::size_t>(i - 1)] += surface_area(acc) * n;
    }
  }
  const auto best = static_cast<int>(std::min_element(cost.begin(), cost.end()) - cost.begin());

  auto first = triangles_.begin() + begin;
  // partition triangles and ids together through an index permutation
  std::vector<std::uint32_t> perm(count);
  std::iota(perm.begin(), perm.end(), begin);
  auto split_it = std::stable_partition(perm.begin(), perm.end(), [&](std::uint32_t i) {
    return bin_of(triangles_[i]) <= best;
  });
  auto mid = static_cast<std::uint32_t>(split_it - perm.begin());
  if (mid == 0 || mid == count) {
    // SAH failed to separate: fall back to a median split
    std::sort(perm.begin(), perm.end(), [&](std::uint32_t a, std::uint32_t b) {
      return triangles_[a].centroid()[axis] < triangles_[b].centroid()[axis];
    });
    mid = count / 2;
  }
  std::vector<Triangle> tris(count);
  std::vector<int> ids(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    tris[k] = triangles_[perm[k]];
    ids[k] = instance_ids_[perm[k]];
  }
  std::copy(tris.begin(), tris.end(), first);
  std::copy(ids.begin(), ids.end(), instance_ids_.begin() + begin);

  nodes_[id].axis = static_cast<std::uint8_t>(axis);
  build(begin, begin + mid, depth + 1);
  const std::uint32_t right = build(begin + mid, end, depth + 1);
  nodes_[id].first = right;
  nodes_[id].count = 0;
  return id;
}

bool Bvh::slab(const Aabb& box, const Vec3& origin, const Vec3& inv_dir, double t_max,
               double& t_entry) {
  double t0 = 0.0;
  double t1 = t_max;
  for (int i = 0; i < 3; ++i) {
    if (std::isinf(inv_dir[i])) {
      if (origin[i] < box.lo[i] || origin[i] > box.hi[i]) return false;
      continue;
    }
    double a = (box.lo[i] - origin[i]) * inv_dir[i];
    double b = (box.hi[i] - origin[i]) * inv_dir[i];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
    if (t0 > t1) return false;
  }
  t_entry = t0;
  return true;
}

}  // namespace relgraph
