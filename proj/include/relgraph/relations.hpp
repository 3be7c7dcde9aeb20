#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "relgraph/ray_engine.hpp"
#include "relgraph/scene.hpp"
#include "relgraph/voxel_space.hpp"

namespace relgraph {

/// One parametric scene-graph edge: `sbj pred obj`, e.g. "cup right of table".
struct Relation {
  int sbj = 0;
  int obj = 0;
  PredicateClass pred;
  /// Degrees for directional, meters for distance-based, absent for `on`.
  std::optional<double> alpha;
  /// Present iff the predicate is camera-dependent.
  std::optional<int> cam;
  /// Unit test direction in world frame.
  Vec3 v = Vec3::Zero();

  bool operator==(const Relation&) const = default;
};

/// Canonical order: (sbj, obj, pred, cam), absent camera first.
bool relation_less(const Relation& a, const Relation& b);

/// Throws when the relation violates its invariants.
void validate(const Relation& r);

struct InstanceInfo {
  int id = 0;
  std::string class_label;
  bool directional_capable = false;
  bool operator==(const InstanceInfo&) const = default;
};

struct SceneGraph {
  std::vector<InstanceInfo> instances;
  /// Camera id -> sorted ids of the instances visible in that view.
  std::map<int, std::vector<int>> visibility;
  /// Sorted by `relation_less`.
  std::vector<Relation> relations;

  bool operator==(const SceneGraph&) const = default;
};

struct ExtractionConfig {
  double resolution = 0.01;
  SweepConfig sweep;
  /// Largest deviation from straight down for a contact to count as support.
  double on_support_deg = 30.0;
  /// Worker threads (0 = hardware concurrency).
  int threads = 0;
  bool camera_dependent = true;
  bool object_dependent = true;
};

/// Everything derived from a scene that extraction needs: ray acceleration
/// structures plus per-instance voxel grids and distance indices on the
/// shared scene grid. Immutable after construction.
class SceneContext {
 public:
  SceneContext(const Scene& scene, double resolution, int threads = 0);

  [[nodiscard]] const Scene& scene() const { return *scene_; }
  [[nodiscard]] const GridFrame& frame() const { return frame_; }
  [[nodiscard]] const RayScene& rays() const { return *rays_; }
  [[nodiscard]] const OccupancyGrid& grid(int id) const { return grids_.at(scene_->index_of(id)); }
  [[nodiscard]] const DistanceIndex& index(int id) const { return indices_.at(scene_->index_of(id)); }

 private:
  const Scene* scene_;
  GridFrame frame_;
  std::unique_ptr<RayScene> rays_;
  std::vector<OccupancyGrid> grids_;
  std::vector<DistanceIndex> indices_;
};

/// next_to for every ordered pair, plus touching where the distance is 0.
std::vector<Relation> extract_distance_relations(const SceneContext& ctx, int threads = 0);

/// Camera-dependent relations for every ordered pair when `view` is given,
/// otherwise object-dependent relations for every directional-capable object.
std::vector<Relation> extract_directional_relations(const SceneContext& ctx,
                                                    const std::optional<CameraView>& view,
                                                    const ExtractionConfig& cfg);

/// `sbj on obj`: touching, and obj reachable straight below sbj within
/// `cfg.on_support_deg`.
std::vector<Relation> extract_on_relations(const SceneContext& ctx, const ExtractionConfig& cfg);

/// Camera id -> instances with at least one unoccluded bounding-box sample point.
std::map<int, std::vector<int>> compute_visibility(const RayScene& rays);

/// Full graph: distance, `on`, object-dependent and per-view camera-dependent
/// relations, visibility, in canonical order.
SceneGraph extract_scene_graph(const SceneContext& ctx, const ExtractionConfig& cfg);
SceneGraph extract_scene_graph(const Scene& scene, const ExtractionConfig& cfg);

}  // namespace relgraph
