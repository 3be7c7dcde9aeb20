#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "relgraph/bvh.hpp"
#include "relgraph/scene.hpp"

namespace relgraph {

/// Which geometry can stop a ray travelling from the object towards a subject.
enum class Occlusion : std::uint8_t {
  scene,  // every instance; a third object in between terminates the ray
  pair,   // only the subject and the object themselves
};

struct SweepConfig {
  /// Lateral spacing of the back-surface sweep grid (meters).
  double spacing = 0.01;
  /// Polar step of the corner fans (degrees). The azimuthal spacing on every
  /// ring is at most this step as well.
  double fan_step_deg = 0.5;
  /// Azimuthal oversampling: adjacent rays on a ring are at most
  /// fan_step_deg / azimuth_factor apart. Power of two.
  std::uint32_t azimuth_factor = 4;
  /// Largest deviation from the test direction covered by the fans.
  double max_fan_deg = 90.0;
  /// Tolerance of the front-surface check (meters).
  double margin = 0.01;
  Occlusion occlusion = Occlusion::scene;
};

void validate(const SweepConfig& cfg);

/// Acceleration structures for ray queries over an immutable scene.
class RayScene {
 public:
  explicit RayScene(const Scene& scene);

  [[nodiscard]] const Scene& scene() const { return *scene_; }
  [[nodiscard]] const Bvh& scene_bvh() const { return scene_bvh_; }
  [[nodiscard]] const Bvh& instance_bvh(int id) const { return instance_bvhs_.at(scene_->index_of(id)); }
  [[nodiscard]] const Aabb& instance_bounds(int id) const { return instance_bounds_.at(scene_->index_of(id)); }
  /// Upper bound on any useful ray length inside the scene.
  [[nodiscard]] double max_range() const { return max_range_; }
  /// Offset applied to ray origins that start on a surface.
  [[nodiscard]] double surface_epsilon() const { return epsilon_; }
  /// +1 / -1 for closed, consistently wound meshes (outward / inward normals), 0 otherwise.
  [[nodiscard]] int orientation(int id) const { return orientation_.at(scene_->index_of(id)); }
  /// Bounds of the triangles of `id` that can be the first hit of a ray
  /// travelling along `v` from outside the instance. Empty when none can.
  [[nodiscard]] Aabb facing_bounds(int id, const Vec3& v) const;

 private:
  const Scene* scene_;
  Bvh scene_bvh_;
  std::vector<Bvh> instance_bvhs_;
  std::vector<Aabb> instance_bounds_;
  std::vector<int> orientation_;
  double max_range_ = 0.0;
  double epsilon_ = 1e-7;
};

struct SurfaceSample {
  Vec3 point = Vec3::Zero();
  int instance_id = -1;
  /// Deviation of the generating ray from the test direction (degrees).
  double incident_angle = 0.0;
  /// Cell of the sweep grid the sample came from.
  std::int32_t cell_u = 0;
  std::int32_t cell_v = 0;
};

/// Orthonormal frame of a sweep: the test direction plus a fixed lateral basis.
struct SweepFrame {
  Vec3 v;
  Vec3 e1;
  Vec3 e2;

  explicit SweepFrame(const Vec3& direction);
  [[nodiscard]] Vec3 direction(double polar_rad, double azimuth_rad) const;
};

/// Back surface of `obj` along `v`: the first hits of a grid of parallel rays
/// launched from beyond the scene on the +v side and travelling along -v.
/// Grid cells have centers at ((i + 0.5) * spacing, (j + 0.5) * spacing) in the
/// lateral basis. Throws when the object is never hit.
std::vector<SurfaceSample> back_surface(const RayScene& rays, int obj, const Vec3& v, double spacing);

/// Samples whose sweep cell has at least one empty 4-neighbour.
std::vector<SurfaceSample> corner_points(std::span<const SurfaceSample> samples);

/// One ring of the corner fan: rays at a fixed polar angle.
struct FanRing {
  double polar_deg = 0.0;
  std::uint32_t azimuth_count = 1;  // power of two
};

/// Rings 1..K of the fan for `cfg`: polar angles k * step up to max_fan_deg,
/// each with 2^n azimuths so that halving the step yields a superset.
std::vector<FanRing> fan_rings(const SweepConfig& cfg);

/// Result of a sweep from one object.
struct SweepResult {
  /// Minimum verified deviation (degrees) per subject that was reached.
  std::map<int, double> angles;
  std::size_t rays_cast = 0;
};

/// Sweeps rays from the back surface of `obj` along `v` (plus corner fans) and
/// returns, for each subject in `subjects`, the smallest deviation of a ray
/// that reaches the subject's front surface.
SweepResult directional_sweep(const RayScene& rays, int obj, const Vec3& v, const SweepConfig& cfg,
                              std::span<const int> subjects);

/// Minimum angle (degrees) between the test direction and any verified
/// connection from the back surface of `obj` to the front surface of `sbj`.
std::optional<double> directional_angle(const RayScene& rays, int sbj, int obj, const Vec3& v,
                                        const SweepConfig& cfg);

/// Invokes `visit(ray, deviation_deg, hit)` for every ray of the sweep from
/// `obj` along `v` (back-surface rays and full corner fans), where `hit` is
/// the first scene hit after leaving the object's surface, if any.
void for_each_sweep_ray(const RayScene& rays, int obj, const Vec3& v, const SweepConfig& cfg,
                        const std::function<void(const Ray&, double, const std::optional<Hit>&)>& visit);

}  // namespace relgraph
