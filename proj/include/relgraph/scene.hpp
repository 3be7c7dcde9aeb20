#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "relgraph/geometry.hpp"

namespace relgraph {

/// Canonical orientation of an object: three mutually orthogonal unit axes.
struct Pose {
  Vec3 front = Vec3::UnitX();
  Vec3 right = -Vec3::UnitY();
  Vec3 up = Vec3::UnitZ();
};

struct Instance {
  int id = 0;
  std::string class_label;
  std::vector<Triangle> mesh;  // world frame, meters
  std::optional<Pose> canonical_pose;
  bool directional_capable = false;

  [[nodiscard]] Aabb bounds() const;
};

/// A camera described by its world-to-camera extrinsics [R | t].
///
/// The camera frame follows the usual computer-vision convention: +x points
/// right in the image, +y points down, +z looks forward. The derived world
/// vectors are therefore right = R.row(0), up = -R.row(1) and
/// forward = R.row(2).
struct CameraView {
  int id = 0;
  Mat34 extrinsics = Mat34::Zero();
  Vec3 forward = Vec3::UnitZ();
  Vec3 right = Vec3::UnitX();
  Vec3 up = -Vec3::UnitY();
  Vec3 center = Vec3::Zero();

  /// Validates the rotation block and derives the world-frame axes.
  static CameraView from_extrinsics(int id, const Mat34& extrinsics);
  /// Camera at `position` looking along `forward`, without roll relative to `world_up`.
  static CameraView look_along(int id, const Vec3& position, const Vec3& forward,
                               const Vec3& world_up = Vec3::UnitZ());
};

struct Scene {
  std::vector<Instance> instances;
  std::vector<CameraView> cameras;
  Aabb bounds;
  Vec3 world_up = Vec3::UnitZ();

  [[nodiscard]] const Instance& instance(int id) const;
  [[nodiscard]] const CameraView& camera(int id) const;
  /// Position of instance `id` in `instances`.
  [[nodiscard]] std::size_t index_of(int id) const;
};

/// Validates all invariants, computes bounds when they are empty and returns the scene.
/// Throws SceneError naming the offending entity.
Scene make_scene(std::vector<Instance> instances, std::vector<CameraView> cameras,
                 const Vec3& world_up = Vec3::UnitZ(), std::optional<Aabb> bounds = std::nullopt);

class SceneError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Predicates

enum class PredicateKind : std::uint8_t {
  front,
  behind,
  left,
  right,
  above,
  below,
  next_to,
  touching,
  on,
};

enum class Frame : std::uint8_t {
  camera_dependent,
  object_dependent,
  frame_free,
};

inline constexpr PredicateKind kDirectionalKinds[] = {
    PredicateKind::front, PredicateKind::behind, PredicateKind::left,
    PredicateKind::right, PredicateKind::above,  PredicateKind::below,
};

[[nodiscard]] constexpr bool is_directional(PredicateKind k) {
  return k <= PredicateKind::below;
}
[[nodiscard]] constexpr bool is_distance_based(PredicateKind k) {
  return k == PredicateKind::next_to || k == PredicateKind::touching;
}

struct PredicateClass {
  PredicateKind kind = PredicateKind::next_to;
  Frame frame = Frame::frame_free;

  [[nodiscard]] constexpr bool directional() const { return is_directional(kind); }
  [[nodiscard]] constexpr bool distance_based() const { return is_distance_based(kind); }
  /// Directional and distance-based predicates carry a parameter; `on` does not.
  [[nodiscard]] constexpr bool parametric() const { return directional() || distance_based(); }
  [[nodiscard]] bool valid() const;

  auto operator<=>(const PredicateClass&) const = default;
};

/// Builds a predicate, throwing when the kind/frame combination is not admissible.
PredicateClass make_predicate(PredicateKind kind, Frame frame);

std::string_view to_string(PredicateKind kind);
std::string_view to_string(Frame frame);
/// Compact token: `right@cam`, `front@obj`, `next_to`, `on`.
std::string to_string(const PredicateClass& pred);
std::optional<PredicateKind> parse_kind(std::string_view text);
std::optional<Frame> parse_frame(std::string_view text);
std::optional<PredicateClass> parse_predicate(std::string_view token);

/// The opposite direction kind (left <-> right, front <-> behind, above <-> below).
PredicateKind opposite(PredicateKind kind);

// ---------------------------------------------------------------------------
// Test directions

/// Camera-dependent test direction in world frame.
///
/// left/right follow the camera right axis and front/behind the camera forward
/// axis, both with their vertical component removed; front points towards the
/// camera. above/below follow `world_up`. Throws when the horizontal
/// projection degenerates.
Vec3 camera_direction(const CameraView& view, PredicateKind kind,
                      const Vec3& world_up = Vec3::UnitZ());

/// Object-dependent test direction taken from the object's canonical pose.
Vec3 object_direction(const Instance& obj, PredicateKind kind);

// ---------------------------------------------------------------------------
// Files

/// Reads a manifest (see docs in README) and all referenced meshes.
Scene load_scene(const std::filesystem::path& manifest_path);

/// Writes `scene` as a manifest plus one OBJ file per instance under `mesh_dir`
/// (paths in the manifest are stored relative to the manifest directory).
void write_scene(const Scene& scene, const std::filesystem::path& manifest_path,
                 const std::filesystem::path& mesh_dir);

std::vector<Triangle> read_obj(const std::filesystem::path& path);
void write_obj(const std::vector<Triangle>& mesh, const std::filesystem::path& path);

}  // namespace relgraph
