#include "relgraph/box_scene.hpp"

#include <nlohmann/json.hpp>

#include <random>

namespace relgraph {

double box_distance(const Aabb& a, const Aabb& b) { return distance(a, b); }

std::optional<double> box_min_angle_deg(const Aabb& sbj, const Aabb& obj, int axis, int sign) {
  const double gap = sign > 0 ? sbj.lo[axis] - obj.hi[axis] : obj.lo[axis] - sbj.hi[axis];
  if (gap < 0.0) return std::nullopt;
  double lateral_sq = 0.0;
  for (int i = 0; i < 3; ++i) {
    if (i == axis) continue;
    const double g = std::max({0.0, sbj.lo[i] - obj.hi[i], obj.lo[i] - sbj.hi[i]});
    lateral_sq += g * g;
  }
  return to_degrees(std::atan2(std::sqrt(lateral_sq), gap));
}

std::optional<double> box_min_angle_deg(const Aabb& sbj, const Aabb& obj, const Vec3& v) {
  for (int axis = 0; axis < 3; ++axis) {
    if (std::abs(std::abs(v[axis]) - 1.0) < 1e-12) {
      return box_min_angle_deg(sbj, obj, axis, v[axis] > 0 ? 1 : -1);
    }
  }
  return std::nullopt;
}

std::vector<Triangle> box_mesh(const Aabb& b) {
  // Corner i has x = hi when bit 0 is set, y when bit 1, z when bit 2.
  auto c = [&](int i) { return b.corner(i); };
  // Each quad listed counter-clockwise seen from outside.
  constexpr int quads[6][4] = {
      {0, 2, 3, 1},  // -z
      {4, 5, 7, 6},  // +z
      {0, 1, 5, 4},  // -y
      {2, 6, 7, 3},  // +y
      {0, 4, 6, 2},  // -x
      {1, 3, 7, 5},  // +x
  };
  std::vector<Triangle> mesh;
  mesh.reserve(12);
  for (const auto& q : quads) {
    mesh.push_back({c(q[0]), c(q[1]), c(q[2])});
    mesh.push_back({c(q[0]), c(q[2]), c(q[3])});
  }
  return mesh;
}

Instance make_box_instance(int id, const Aabb& box, std::string label, std::optional<Pose> pose) {
  Instance inst;
  inst.id = id;
  inst.class_label = std::move(label);
  inst.mesh = box_mesh(box);
  inst.canonical_pose = pose;
  inst.directional_capable = pose.has_value();
  return inst;
}

namespace {

bool well_separated(const Aabb& a, const Aabb& b, double clearance) {
  bool apart = false;
  for (int i = 0; i < 3; ++i) {
    const double s = std::max(a.lo[i] - b.hi[i], b.lo[i] - a.hi[i]);
    if (std::abs(s) < clearance) return false;
    if (s > 0) apart = true;
  }
  return apart;
}

}  // namespace

BoxScene generate_box_scene(const BoxSceneOptions& opt) {
  if (opt.n_boxes < 1) throw Error("generate_box_scene: need at least one box");
  if (opt.bounds.empty() || (opt.bounds.extent().array() <= opt.max_size).any()) {
    throw Error("generate_box_scene: bounds are degenerate or smaller than the largest box");
  }
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> size_dist(opt.min_size, opt.max_size);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> yaw_dist(0, 3);

  BoxOracle oracle;
  std::vector<Instance> instances;
  for (int id = 0; id < opt.n_boxes; ++id) {
    bool placed = false;
    for (int attempt = 0; attempt < opt.max_retries && !placed; ++attempt) {
      Vec3 size(size_dist(rng), size_dist(rng), size_dist(rng));
      Vec3 lo;
      for (int i = 0; i < 3; ++i) {
        lo[i] = opt.bounds.lo[i] + unit(rng) * (opt.bounds.extent()[i] - size[i]);
      }
      const Aabb box(lo, lo + size);
      placed = std::all_of(oracle.boxes.begin(), oracle.boxes.end(),
                           [&](const Aabb& other) { return well_separated(box, other, opt.clearance); });
      if (placed) oracle.boxes.push_back(box);
    }
    if (!placed) {
      throw Error("generate_box_scene: could not place box " + std::to_string(id) + " after " +
                  std::to_string(opt.max_retries) + " retries");
    }
    std::optional<Pose> pose;
    if (unit(rng) < opt.directional_fraction) {
      static const Vec3 fronts[4] = {Vec3::UnitX(), Vec3::UnitY(), -Vec3::UnitX(), -Vec3::UnitY()};
      Pose p;
      p.front = fronts[yaw_dist(rng)];
      p.up = Vec3::UnitZ();
      p.right = p.front.cross(p.up);
      pose = p;
    }
    instances.push_back(make_box_instance(id, oracle.boxes.back(), "box", pose));
  }

  std::vector<CameraView> cameras;
  const Vec3 c = opt.bounds.center();
  const Vec3 looks[4] = {Vec3::UnitY(), -Vec3::UnitY(), Vec3::UnitX(), -Vec3::UnitX()};
  const double back_off = opt.bounds.diagonal();
  for (int i = 0; i < std::min(opt.cameras, 4); ++i) {
    Vec3 pos = c - looks[i] * back_off;
    pos.z() = c.z();
    cameras.push_back(CameraView::look_along(i, pos, looks[i]));
  }
  return {make_scene(std::move(instances), std::move(cameras), Vec3::UnitZ(), opt.bounds),
          std::move(oracle)};
}

std::string oracle_json(const BoxScene& bs) {
  static const char* names[6] = {"+x", "-x", "+y", "-y", "+z", "-z"};
  nlohmann::json doc;
  doc["version"] = 1;
  doc["pairs"] = nlohmann::json::array();
  const auto& boxes = bs.oracle.boxes;
  for (std::size_t a = 0; a < boxes.size(); ++a) {
    for (std::size_t b = 0; b < boxes.size(); ++b) {
      if (a == b) continue;
      nlohmann::json jp;
      jp["sbj"] = a;
      jp["obj"] = b;
      jp["distance"] = box_distance(boxes[a], boxes[b]);
      nlohmann::json angles = nlohmann::json::object();
      for (int d = 0; d < 6; ++d) {
        const auto ang = box_min_angle_deg(boxes[a], boxes[b], d / 2, d % 2 == 0 ? 1 : -1);
        angles[names[d]] = ang ? nlohmann::json(*ang) : nlohmann::json(nullptr);
      }
      jp["angle_deg"] = angles;
      doc["pairs"].push_back(jp);
    }
  }
  return doc.dump(2);
}

}  // namespace relgraph
