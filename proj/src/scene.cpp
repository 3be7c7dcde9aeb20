#include "relgraph/scene.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace relgraph {

namespace {

constexpr double kOrthoTol = 1e-6;

std::string instance_tag(int id) { return "instance " + std::to_string(id) + ": "; }
std::string camera_tag(int id) { return "camera " + std::to_string(id) + ": "; }

bool is_orthonormal(const Mat3& m) {
  const Mat3 gram = m * m.transpose();
  return (gram - Mat3::Identity()).cwiseAbs().maxCoeff() <= kOrthoTol &&
         std::abs(m.determinant() - 1.0) <= kOrthoTol;
}

void validate_pose(const Instance& inst) {
  const Pose& p = *inst.canonical_pose;
  for (const Vec3* axis : {&p.front, &p.right, &p.up}) {
    if (!axis->allFinite() || std::abs(axis->norm() - 1.0) > kOrthoTol) {
      throw SceneError(instance_tag(inst.id) + "canonical pose axes must be unit vectors");
    }
  }
  if (std::abs(p.front.dot(p.right)) > kOrthoTol || std::abs(p.front.dot(p.up)) > kOrthoTol ||
      std::abs(p.right.dot(p.up)) > kOrthoTol) {
    throw SceneError(instance_tag(inst.id) + "canonical pose is not orthonormal");
  }
}

Vec3 horizontal(const Vec3& v, const Vec3& up, const char* what) {
  const Vec3 h = v - v.dot(up) * up;
  const double n = h.norm();
  if (n < 1e-9) {
    throw SceneError(std::string("camera ") + what + " axis is parallel to world up");
  }
  return h / n;
}

Vec3 json_vec3(const nlohmann::json& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != 3) throw SceneError(ctx + "expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

Aabb Instance::bounds() const {
  Aabb box;
  for (const Triangle& t : mesh) box.extend(t.bounds());
  return box;
}

CameraView CameraView::from_extrinsics(int id, const Mat34& extrinsics) {
  const Mat3 r = extrinsics.leftCols<3>();
  if (!extrinsics.allFinite() || !is_orthonormal(r)) {
    throw SceneError(camera_tag(id) + "rotation block of extrinsics is not orthonormal");
  }
  CameraView view;
  view.id = id;
  view.extrinsics = extrinsics;
  view.right = r.row(0).transpose();
  view.up = -r.row(1).transpose();
  view.forward = r.row(2).transpose();
  view.center = -r.transpose() * extrinsics.col(3);
  return view;
}

CameraView CameraView::look_along(int id, const Vec3& position, const Vec3& forward,
                                  const Vec3& world_up) {
  const Vec3 f = forward.normalized();
  const Vec3 r = f.cross(world_up).normalized();
  const Vec3 down = f.cross(r);
  Mat3 rot;
  rot.row(0) = r.transpose();
  rot.row(1) = down.transpose();
  rot.row(2) = f.transpose();
  Mat34 ext;
  ext.leftCols<3>() = rot;
  ext.col(3) = -rot * position;
  return from_extrinsics(id, ext);
}

const Instance& Scene::instance(int id) const { return instances[index_of(id)]; }

std::size_t Scene::index_of(int id) const {
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (instances[i].id == id) return i;
  }
  throw SceneError(instance_tag(id) + "unknown instance id");
}

const CameraView& Scene::camera(int id) const {
  for (const CameraView& c : cameras) {
    if (c.id == id) return c;
  }
  throw SceneError(camera_tag(id) + "unknown camera id");
}

Scene make_scene(std::vector<Instance> instances, std::vector<CameraView> cameras,
                 const Vec3& world_up, std::optional<Aabb> bounds) {
  if (!world_up.allFinite() || std::abs(world_up.norm() - 1.0) > kOrthoTol) {
    throw SceneError("world up must be a unit vector");
  }
  std::set<int> ids;
  Aabb computed;
  for (const Instance& inst : instances) {
    if (!ids.insert(inst.id).second) throw SceneError(instance_tag(inst.id) + "duplicate id");
    if (inst.mesh.empty()) throw SceneError(instance_tag(inst.id) + "mesh is empty");
    for (const Triangle& t : inst.mesh) {
      if (!t.finite()) throw SceneError(instance_tag(inst.id) + "mesh has non-finite coordinates");
      computed.extend(t.bounds());
    }
    if (inst.directional_capable && !inst.canonical_pose) {
      throw SceneError(instance_tag(inst.id) + "directional instance needs a canonical pose");
    }
    if (inst.canonical_pose) validate_pose(inst);
  }
  std::set<int> cam_ids;
  for (const CameraView& cam : cameras) {
    if (!cam_ids.insert(cam.id).second) throw SceneError(camera_tag(cam.id) + "duplicate id");
  }
  Scene scene;
  scene.instances = std::move(instances);
  scene.cameras = std::move(cameras);
  scene.world_up = world_up.normalized();
  if (bounds) {
    if (!computed.empty() && !(bounds->contains(computed.lo, 1e-9) && bounds->contains(computed.hi, 1e-9))) {
      throw SceneError("scene bounds do not contain every mesh vertex");
    }
    scene.bounds = *bounds;
  } else {
    scene.bounds = computed;
  }
  return scene;
}

// ---------------------------------------------------------------------------

bool PredicateClass::valid() const {
  if (directional()) return frame != Frame::frame_free;
  return frame == Frame::frame_free;
}

PredicateClass make_predicate(PredicateKind kind, Frame frame) {
  PredicateClass p{kind, frame};
  if (!p.valid()) {
    throw Error("predicate " + std::string(to_string(kind)) + " does not admit frame " +
                std::string(to_string(frame)));
  }
  return p;
}

std::string_view to_string(PredicateKind kind) {
  switch (kind) {
    case PredicateKind::front: return "front";
    case PredicateKind::behind: return "behind";
    case PredicateKind::left: return "left";
    case PredicateKind::right: return "right";
    case PredicateKind::above: return "above";
    case PredicateKind::below: return "below";
    case PredicateKind::next_to: return "next_to";
    case PredicateKind::touching: return "touching";
    case PredicateKind::on: return "on";
  }
  return "?";
}

std::string_view to_string(Frame frame) {
  switch (frame) {
    case Frame::camera_dependent: return "cam";
    case Frame::object_dependent: return "obj";
    case Frame::frame_free: return "free";
  }
  return "?";
}

std::string to_string(const PredicateClass& pred) {
  std::string out(to_string(pred.kind));
  if (pred.frame != Frame::frame_free) {
    out += '@';
    out += to_string(pred.frame);
  }
  return out;
}

std::optional<PredicateKind> parse_kind(std::string_view text) {
  for (int k = 0; k <= static_cast<int>(PredicateKind::on); ++k) {
    const auto kind = static_cast<PredicateKind>(k);
    if (to_string(kind) == text) return kind;
  }
  return std::nullopt;
}

std::optional<Frame> parse_frame(std::string_view text) {
  if (text == "cam" || text == "camera_dependent") return Frame::camera_dependent;
  if (text == "obj" || text == "object_dependent") return Frame::object_dependent;
  if (text == "free" || text == "frame_free") return Frame::frame_free;
  return std::nullopt;
}

std::optional<PredicateClass> parse_predicate(std::string_view token) {
  const auto at = token.find('@');
  const auto kind = parse_kind(token.substr(0, at));
  if (!kind) return std::nullopt;
  Frame frame = Frame::frame_free;
  if (at != std::string_view::npos) {
    const auto f = parse_frame(token.substr(at + 1));
    if (!f) return std::nullopt;
    frame = *f;
  }
  PredicateClass p{*kind, frame};
  if (!p.valid()) return std::nullopt;
  return p;
}

PredicateKind opposite(PredicateKind kind) {
  switch (kind) {
    case PredicateKind::front: return PredicateKind::behind;
    case PredicateKind::behind: return PredicateKind::front;
    case PredicateKind::left: return PredicateKind::right;
    case PredicateKind::right: return PredicateKind::left;
    case PredicateKind::above: return PredicateKind::below;
    case PredicateKind::below: return PredicateKind::above;
    default: return kind;
  }
}

// ---------------------------------------------------------------------------

Vec3 camera_direction(const CameraView& view, PredicateKind kind, const Vec3& world_up) {
  switch (kind) {
    case PredicateKind::right: return horizontal(view.right, world_up, "right");
    case PredicateKind::left: return -horizontal(view.right, world_up, "right");
    case PredicateKind::front: return -horizontal(view.forward, world_up, "forward");
    case PredicateKind::behind: return horizontal(view.forward, world_up, "forward");
    case PredicateKind::above: return world_up.normalized();
    case PredicateKind::below: return -world_up.normalized();
    default: throw Error("camera_direction: predicate is not directional");
  }
}

Vec3 object_direction(const Instance& obj, PredicateKind kind) {
  if (!obj.directional_capable || !obj.canonical_pose) {
    throw SceneError(instance_tag(obj.id) + "not directional capable");
  }
  const Pose& p = *obj.canonical_pose;
  switch (kind) {
    case PredicateKind::front: return p.front.normalized();
    case PredicateKind::behind: return -p.front.normalized();
    case PredicateKind::right: return p.right.normalized();
    case PredicateKind::left: return -p.right.normalized();
    case PredicateKind::above: return p.up.normalized();
    case PredicateKind::below: return -p.up.normalized();
    default: throw Error("object_direction: predicate is not directional");
  }
}

// ---------------------------------------------------------------------------
// OBJ meshes: `v x y z` and `f a b c ...` records, polygons fan-triangulated.

std::vector<Triangle> read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SceneError("cannot open mesh file " + path.string());
  std::vector<Vec3> vertices;
  std::vector<Triangle> mesh;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ss >> p.x() >> p.y() >> p.z())) {
        throw SceneError(path.string() + ":" + std::to_string(line_no) + ": malformed vertex");
      }
      vertices.push_back(p);
    } else if (tag == "f") {
      std::vector<std::size_t> idx;
      std::string item;
      while (ss >> item) {
        const long raw = std::stol(item.substr(0, item.find('/')));
        const long resolved = raw < 0 ? static_cast<long>(vertices.size()) + raw : raw - 1;
        if (resolved < 0 || resolved >= static_cast<long>(vertices.size())) {
          throw SceneError(path.string() + ":" + std::to_string(line_no) + ": face index out of range");
        }
        idx.push_back(static_cast<std::size_t>(resolved));
      }
      if (idx.size() < 3) {
        throw SceneError(path.string() + ":" + std::to_string(line_no) + ": face needs 3 vertices");
      }
      for (std::size_t i = 1; i + 1 < idx.size(); ++i) {
        mesh.push_back({vertices[idx[0]], vertices[idx[i]], vertices[idx[i + 1]]});
      }
    }
  }
  return mesh;
}

void write_obj(const std::vector<Triangle>& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write mesh file " + path.string());
  auto key = [](const Vec3& p) { return std::array<double, 3>{p.x(), p.y(), p.z()}; };
  std::map<std::array<double, 3>, std::size_t> index;
  std::vector<Vec3> order;
  for (const Triangle& t : mesh) {
    for (const Vec3* p : {&t.a, &t.b, &t.c}) {
      if (index.emplace(key(*p), order.size() + 1).second) order.push_back(*p);
    }
  }
  for (const Vec3& p : order) {
    out << "v " << format_double(p.x()) << ' ' << format_double(p.y()) << ' '
        << format_double(p.z()) << '\n';
  }
  for (const Triangle& t : mesh) {
    out << "f " << index.at(key(t.a)) << ' ' << index.at(key(t.b)) << ' ' << index.at(key(t.c))
        << '\n';
  }
}

// ---------------------------------------------------------------------------
// Manifest

Scene load_scene(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw SceneError("cannot open manifest " + manifest_path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SceneError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }
  const auto base = manifest_path.parent_path();
  try {
    if (doc.value("version", 1) != 1) throw SceneError("unsupported manifest version");
    Vec3 up = Vec3::UnitZ();
    if (doc.contains("up")) up = json_vec3(doc["up"], "up: ");

    std::vector<Instance> instances;
    for (const auto& ji : doc.at("instances")) {
      Instance inst;
      inst.id = ji.at("id").get<int>();
      const std::string tag = instance_tag(inst.id);
      inst.class_label = ji.value("label", std::string{});
      inst.directional_capable = ji.value("directional", false);
      if (ji.contains("pose") && !ji["pose"].is_null()) {
        const auto& jp = ji["pose"];
        if (!jp.is_array() || jp.size() != 3) throw SceneError(tag + "pose must be a 3x3 matrix");
        inst.canonical_pose = Pose{json_vec3(jp[0], tag), json_vec3(jp[1], tag), json_vec3(jp[2], tag)};
      }
      const std::filesystem::path mesh_path = base / ji.at("mesh").get<std::string>();
      if (!std::filesystem::exists(mesh_path)) {
        throw SceneError(tag + "mesh file not found: " + mesh_path.string());
      }
      inst.mesh = read_obj(mesh_path);
      instances.push_back(std::move(inst));
    }

    std::vector<CameraView> cameras;
    if (doc.contains("cameras")) {
      for (const auto& jc : doc["cameras"]) {
        const int id = jc.at("id").get<int>();
        const auto& je = jc.at("extrinsics");
        std::vector<double> flat;
        for (const auto& row : je) {
          if (row.is_array()) {
            for (const auto& x : row) flat.push_back(x.get<double>());
          } else {
            flat.push_back(row.get<double>());
          }
        }
        if (flat.size() != 12) throw SceneError(camera_tag(id) + "extrinsics must hold 12 values");
        Mat34 ext;
        for (int r = 0; r < 3; ++r) {
          for (int c = 0; c < 4; ++c) ext(r, c) = flat[static_cast<std::size_t>(r * 4 + c)];
        }
        cameras.push_back(CameraView::from_extrinsics(id, ext));
      }
    }

    std::optional<Aabb> bounds;
    if (doc.contains("bounds")) {
      const auto& jb = doc["bounds"];
      bounds = Aabb(json_vec3(jb.at(0), "bounds: "), json_vec3(jb.at(1), "bounds: "));
    }
    return make_scene(std::move(instances), std::move(cameras), up, bounds);
  } catch (const nlohmann::json::exception& e) {
    throw SceneError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }
}

void write_scene(const Scene& scene, const std::filesystem::path& manifest_path,
                 const std::filesystem::path& mesh_dir) {
  std::filesystem::create_directories(mesh_dir);
  const auto base = manifest_path.parent_path().empty() ? std::filesystem::path(".")
                                                        : manifest_path.parent_path();
  auto vec = [](const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); };
  nlohmann::json doc;
  doc["version"] = 1;
  doc["units"] = "meters";
  doc["up"] = vec(scene.world_up);
  doc["bounds"] = nlohmann::json::array({vec(scene.bounds.lo), vec(scene.bounds.hi)});
  doc["instances"] = nlohmann::json::array();
  for (const Instance& inst : scene.instances) {
    const auto mesh_path = mesh_dir / ("instance_" + std::to_string(inst.id) + ".obj");
    write_obj(inst.mesh, mesh_path);
    nlohmann::json ji;
    ji["id"] = inst.id;
    ji["label"] = inst.class_label;
    ji["mesh"] = std::filesystem::relative(mesh_path, base).generic_string();
    ji["directional"] = inst.directional_capable;
    if (inst.canonical_pose) {
      const Pose& p = *inst.canonical_pose;
      ji["pose"] = nlohmann::json::array({vec(p.front), vec(p.right), vec(p.up)});
    }
    doc["instances"].push_back(ji);
  }
  doc["cameras"] = nlohmann::json::array();
  for (const CameraView& cam : scene.cameras) {
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < 3; ++r) {
      rows.push_back({cam.extrinsics(r, 0), cam.extrinsics(r, 1), cam.extrinsics(r, 2),
                      cam.extrinsics(r, 3)});
    }
    doc["cameras"].push_back({{"id", cam.id}, {"extrinsics", rows}});
  }
  std::ofstream out(manifest_path);
  if (!out) throw Error("cannot write manifest " + manifest_path.string());
  out << doc.dump(2) << '\n';
}

}  // namespace relgraph
