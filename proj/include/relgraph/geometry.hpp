#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace relgraph {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat34 = Eigen::Matrix<double, 3, 4>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Base for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double to_degrees(double rad) { return rad * 180.0 / std::numbers::pi; }
inline double to_radians(double deg) { return deg * std::numbers::pi / 180.0; }

/// Shortest text form of a double that parses back to the same value.
inline std::string format_double(double value) {
  if (value == 0.0) value = 0.0;  // drop the sign of negative zero
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), end);
}

/// Angle between two unit vectors in degrees, robust near 0 and 180.
inline double angle_between_deg(const Vec3& a, const Vec3& b) {
  return to_degrees(std::atan2(a.cross(b).norm(), a.dot(b)));
}

struct Aabb {
  Vec3 lo = Vec3::Constant(kInf);
  Vec3 hi = Vec3::Constant(-kInf);

  Aabb() = default;
  Aabb(const Vec3& lo_in, const Vec3& hi_in) : lo(lo_in), hi(hi_in) {}

  [[nodiscard]] bool empty() const {
    return lo.x() > hi.x() || lo.y() > hi.y() || lo.z() > hi.z();
  }
  void extend(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void extend(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  [[nodiscard]] Vec3 center() const { return 0.5 * (lo + hi); }
  [[nodiscard]] Vec3 extent() const { return hi - lo; }
  [[nodiscard]] double diagonal() const { return empty() ? 0.0 : extent().norm(); }
  [[nodiscard]] bool contains(const Vec3& p, double tol = 0.0) const {
    return (p.array() >= lo.array() - tol).all() && (p.array() <= hi.array() + tol).all();
  }
  [[nodiscard]] Aabb inflated(double d) const {
    return {lo - Vec3::Constant(d), hi + Vec3::Constant(d)};
  }
  [[nodiscard]] Vec3 corner(int i) const {
    return {(i & 1) ? hi.x() : lo.x(), (i & 2) ? hi.y() : lo.y(), (i & 4) ? hi.z() : lo.z()};
  }
  bool operator==(const Aabb&) const = default;
};

/// Euclidean gap between two boxes; 0 when they touch or overlap.
inline double distance(const Aabb& a, const Aabb& b) {
  const Vec3 gap = (a.lo - b.hi).cwiseMax(b.lo - a.hi).cwiseMax(0.0);
  return gap.norm();
}

struct Triangle {
  Vec3 a, b, c;

  [[nodiscard]] Vec3 scaled_normal() const { return (b - a).cross(c - a); }
  [[nodiscard]] double area() const { return 0.5 * scaled_normal().norm(); }
  [[nodiscard]] Aabb bounds() const {
    Aabb box;
    box.extend(a);
    box.extend(b);
    box.extend(c);
    return box;
  }
  [[nodiscard]] Vec3 centroid() const { return (a + b + c) / 3.0; }
  [[nodiscard]] bool finite() const {
    return a.allFinite() && b.allFinite() && c.allFinite();
  }
};

/// Deterministic orthonormal pair spanning the plane orthogonal to unit `v`.
/// For axis-aligned `v` both vectors are axis-aligned.
inline void orthonormal_basis(const Vec3& v, Vec3& e1, Vec3& e2) {
  int axis = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(v[i]) < std::abs(v[axis])) axis = i;
  }
  Vec3 helper = Vec3::Zero();
  helper[axis] = 1.0;
  e1 = v.cross(helper).normalized();
  e2 = v.cross(e1).normalized();
}

}  // namespace relgraph
