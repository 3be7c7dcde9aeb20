#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "relgraph/scene.hpp"

namespace relgraph {

/// Closed-form shortest distance between two axis-aligned boxes.
double box_distance(const Aabb& a, const Aabb& b);

/// Closed-form minimum connection angle (degrees) of `sbj` seen from `obj`
/// along the signed world axis (`axis` in 0..2, `sign` = +1/-1).
///
/// Connections run from the face of `obj` facing the direction to the face of
/// `sbj` facing back. The angle is 0 when the lateral projections overlap and
/// otherwise the angle to the nearest edge pair. Returns nullopt when `sbj`
/// does not lie entirely beyond `obj` along the direction.
std::optional<double> box_min_angle_deg(const Aabb& sbj, const Aabb& obj, int axis, int sign);

/// Same as above for an axis-aligned unit vector; nullopt for other directions.
std::optional<double> box_min_angle_deg(const Aabb& sbj, const Aabb& obj, const Vec3& v);

/// 12-triangle outward-facing box mesh.
std::vector<Triangle> box_mesh(const Aabb& box);

/// Instance wrapping `box_mesh`.
Instance make_box_instance(int id, const Aabb& box, std::string label = "box",
                           std::optional<Pose> pose = std::nullopt);

struct BoxSceneOptions {
  std::uint64_t seed = 1;
  int n_boxes = 5;
  Aabb bounds{Vec3(0, 0, 0), Vec3(4, 4, 2.5)};
  double min_size = 0.2;
  double max_size = 0.7;
  /// Every pair of boxes is either separated by at least this much along each
  /// axis or overlaps by at least this much, so no configuration sits on a
  /// degenerate boundary.
  double clearance = 0.05;
  int max_retries = 5000;
  /// Fraction of boxes that receive an axis-aligned canonical pose.
  double directional_fraction = 0.5;
  /// Cameras looking along +y, -y, +x, -x (in that order), at most 4.
  int cameras = 1;
};

/// Analytic ground truth for a generated box scene, indexed by instance id.
struct BoxOracle {
  std::vector<Aabb> boxes;

  [[nodiscard]] double distance(int a, int b) const { return box_distance(boxes.at(a), boxes.at(b)); }
  [[nodiscard]] std::optional<double> angle_deg(int sbj, int obj, const Vec3& v) const {
    return box_min_angle_deg(boxes.at(sbj), boxes.at(obj), v);
  }
};

struct BoxScene {
  Scene scene;
  BoxOracle oracle;
};

/// Deterministic random scene of non-interpenetrating boxes with ids 0..n-1.
/// Throws when the boxes cannot be placed within the retry budget.
BoxScene generate_box_scene(const BoxSceneOptions& options);

/// JSON document with analytic distances and per-axis angles for every ordered pair.
std::string oracle_json(const BoxScene& scene);

}  // namespace relgraph
