#pragma once

#include <array>
#include <optional>
#include <vector>

#include "relgraph/geometry.hpp"

namespace relgraph {

inline constexpr int kMaxBvhDepth = 60;

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitX();  // unit length
  double max_t = kInf;
};

struct Hit {
  double t = kInf;
  std::uint32_t triangle = 0;
  int instance = -1;
  [[nodiscard]] Vec3 point(const Ray& ray) const { return ray.origin + t * ray.direction; }
};

/// Moller-Trumbore test with inclusive edges. Returns the ray parameter of
/// the intersection in [0, ray.max_t], or nullopt.
std::optional<double> intersect_triangle(const Ray& ray, const Triangle& tri);

/// Bounding volume hierarchy over a triangle soup. Each triangle carries the
/// id of the instance it belongs to. Immutable after construction and safe
/// to query from many threads.
class Bvh {
 public:
  Bvh() = default;
  Bvh(std::vector<Triangle> triangles, std::vector<int> instance_ids);
  Bvh(std::vector<Triangle> triangles, int instance_id);

  [[nodiscard]] const Aabb& bounds() const { return bounds_; }
  [[nodiscard]] std::size_t triangle_count() const { return triangles_.size(); }
  [[nodiscard]] const Triangle& triangle(std::size_t i) const { return triangles_[i]; }
  [[nodiscard]] int instance_of(std::size_t i) const { return instance_ids_[i]; }

  /// Nearest hit accepted by `accept(instance_id, t)`.
  template <typename Accept>
  [[nodiscard]] std::optional<Hit> intersect(const Ray& ray, Accept&& accept) const;

  [[nodiscard]] std::optional<Hit> intersect(const Ray& ray) const {
    return intersect(ray, [](int, double) { return true; });
  }

 private:
  struct Node {
    Aabb box;
    std::uint32_t first = 0;  // leaf: first triangle; inner: right child
    std::uint32_t count = 0;  // leaf: triangle count; inner: 0
    std::uint8_t axis = 0;
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end, int depth);
  static bool slab(const Aabb& box, const Vec3& origin, const Vec3& inv_dir, double t_max,
                   double& t_entry);

  std::vector<Triangle> triangles_;
  std::vector<int> instance_ids_;
  std::vector<Node> nodes_;
  Aabb bounds_;
};

template <typename Accept>
std::optional<Hit> Bvh::intersect(const Ray& ray, Accept&& accept) const {
  if (nodes_.empty()) return std::nullopt;
  const Vec3 inv_dir = ray.direction.cwiseInverse();
  Hit best;
  best.t = ray.max_t;
  bool found = false;

  std::array<std::uint32_t, 2 * kMaxBvhDepth + 2> stack{};
  std::size_t top = 0;
  double entry = 0.0;
  if (!slab(nodes_[0].box, ray.origin, inv_dir, best.t, entry)) return std::nullopt;
  stack[top++] = 0;
  while (top > 0) {
    const std::uint32_t id = stack[--top];
    const Node& node = nodes_[id];
    if (node.count > 0) {
      for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
        Ray bounded = ray;
        bounded.max_t = best.t;
        const auto t = intersect_triangle(bounded, triangles_[i]);
        if (t && (*t < best.t || !found) && accept(instance_ids_[i], *t)) {
          best.t = *t;
          best.triangle = i;
          best.instance = instance_ids_[i];
          found = true;
        }
      }
      continue;
    }
    const std::uint32_t left = id + 1;
    const std::uint32_t right = node.first;
    double t_left = 0.0;
    double t_right = 0.0;
    const bool hit_left = slab(nodes_[left].box, ray.origin, inv_dir, best.t, t_left);
    const bool hit_right = slab(nodes_[right].box, ray.origin, inv_dir, best.t, t_right);
    // push the farther child first so the nearer one is popped next
    if (hit_left && hit_right) {
      if (t_left <= t_right) {
        stack[top++] = right;
        stack[top++] = left;
      } else {
        stack[top++] = left;
        stack[top++] = right;
      }
    } else if (hit_left) {
      stack[top++] = left;
    } else if (hit_right) {
      stack[top++] = right;
    }
  }
  if (!found) return std::nullopt;
  return best;
}

}  // namespace relgraph
