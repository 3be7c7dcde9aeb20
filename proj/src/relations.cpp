#include "relgraph/relations.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <tuple>

#include "relgraph/parallel.hpp"

namespace relgraph {

namespace {

std::tuple<int, PredicateClass, int> order_key(const Relation& r) {
  return {r.obj, r.pred, r.cam.value_or(-1)};
}

/// One directional query: relations `* kind obj` along `v`.
struct DirectionalTask {
  int obj = 0;
  PredicateClass pred;
  std::optional<int> cam;
  Vec3 v;
};

/// Sweeps are shared by every task with the same object and bit-identical direction.
using SweepKey = std::tuple<int, std::uint64_t, std::uint64_t, std::uint64_t>;

SweepKey sweep_key(int obj, const Vec3& v) {
  return {obj, std::bit_cast<std::uint64_t>(v.x()), std::bit_cast<std::uint64_t>(v.y()),
          std::bit_cast<std::uint64_t>(v.z())};
}

class SweepTable {
 public:
  SweepTable(const SceneContext& ctx, const SweepConfig& cfg) : ctx_(ctx), cfg_(cfg) {
    for (const Instance& inst : ctx.scene().instances) subjects_.push_back(inst.id);
  }

  void request(int obj, const Vec3& v) {
    const SweepKey key = sweep_key(obj, v);
    if (!results_.contains(key)) {
      results_.emplace(key, SweepResult{});
      pending_.emplace_back(obj, v);
    }
  }

  void run(int threads) {
    std::vector<SweepResult> out(pending_.size());
    parallel_for(pending_.size(), threads, [&](std::size_t i) {
      out[i] = directional_sweep(ctx_.rays(), pending_[i].first, pending_[i].second, cfg_, subjects_);
    });
    for (std::size_t i = 0; i < pending_.size(); ++i) {
      results_[sweep_key(pending_[i].first, pending_[i].second)] = std::move(out[i]);
    }
    pending_.clear();
  }

  [[nodiscard]] const SweepResult& get(int obj, const Vec3& v) const { return results_.at(sweep_key(obj, v)); }

 private:
  const SceneContext& ctx_;
  SweepConfig cfg_;
  std::vector<int> subjects_;
  std::map<SweepKey, SweepResult> results_;
  std::vector<std::pair<int, Vec3>> pending_;
};

std::vector<DirectionalTask> camera_tasks(const Scene& scene, const CameraView& view) {
  std::vector<DirectionalTask> tasks;
  for (const PredicateKind kind : kDirectionalKinds) {
    const Vec3 v = camera_direction(view, kind, scene.world_up);
    for (const Instance& obj : scene.instances) {
      tasks.push_back({obj.id, make_predicate(kind, Frame::camera_dependent), view.id, v});
    }
  }
  return tasks;
}

std::vector<DirectionalTask> object_tasks(const Scene& scene) {
  std::vector<DirectionalTask> tasks;
  for (const Instance& obj : scene.instances) {
    if (!obj.directional_capable) continue;
    for (const PredicateKind kind : kDirectionalKinds) {
      tasks.push_back({obj.id, make_predicate(kind, Frame::object_dependent), std::nullopt,
                       object_direction(obj, kind)});
    }
  }
  return tasks;
}

void emit(const SweepTable& table, const DirectionalTask& task, std::vector<Relation>& out) {
  for (const auto& [sbj, angle] : table.get(task.obj, task.v).angles) {
    out.push_back({sbj, task.obj, task.pred, angle, task.cam, task.v});
  }
}

struct ContactPair {
  int a = 0;
  int b = 0;
};

std::vector<ContactPair> touching_pairs(const std::vector<Relation>& distance) {
  std::vector<ContactPair> pairs;
  for (const Relation& r : distance) {
    if (r.pred.kind == PredicateKind::touching && r.sbj < r.obj) pairs.push_back({r.sbj, r.obj});
  }
  return pairs;
}

std::vector<Relation> on_from_contacts(const SweepTable& table, const Scene& scene,
                                       const std::vector<ContactPair>& contacts, double support_deg) {
  std::vector<Relation> out;
  const Vec3 down = -scene.world_up;
  const PredicateClass on = make_predicate(PredicateKind::on, Frame::frame_free);
  for (const ContactPair& c : contacts) {
    for (const auto& [sbj, obj] : {std::pair{c.a, c.b}, std::pair{c.b, c.a}}) {
      // obj must be reachable below sbj: a sweep from sbj's underside along -up
      const auto& angles = table.get(sbj, down).angles;
      if (const auto it = angles.find(obj); it != angles.end() && it->second <= support_deg) {
        out.push_back({sbj, obj, on, std::nullopt, std::nullopt, scene.world_up});
      }
    }
  }
  return out;
}

void sort_relations(std::vector<Relation>& rels) {
  std::sort(rels.begin(), rels.end(), relation_less);
}

}  // namespace

bool relation_less(const Relation& a, const Relation& b) {
  if (a.sbj != b.sbj) return a.sbj < b.sbj;
  return order_key(a) < order_key(b);
}

void validate(const Relation& r) {
  if (r.sbj == r.obj) throw Error("relation subject and object must differ");
  if (!r.pred.valid()) throw Error("relation has an inadmissible predicate");
  if (r.cam.has_value() != (r.pred.frame == Frame::camera_dependent)) {
    throw Error("relation camera must be present exactly for camera-dependent predicates");
  }
  if (r.pred.parametric() != r.alpha.has_value()) {
    throw Error("relation parameter must be present exactly for parametric predicates");
  }
  if (r.alpha) {
    if (!std::isfinite(*r.alpha) || *r.alpha < 0.0) throw Error("relation parameter must be finite and >= 0");
    if (r.pred.directional() && *r.alpha > 90.0) throw Error("relation angle exceeds 90 degrees");
  }
  if (!r.v.allFinite() || std::abs(r.v.norm() - 1.0) > 1e-9) throw Error("relation direction must be a unit vector");
}

SceneContext::SceneContext(const Scene& scene, double resolution, int threads)
    : scene_(&scene), frame_(scene_grid_frame(scene, resolution)),
      rays_(std::make_unique<RayScene>(scene)) {
  const std::size_t n = scene.instances.size();
  grids_.resize(n);
  indices_.resize(n);
  parallel_for(n, threads, [&](std::size_t i) {
    grids_[i] = voxelize(scene.instances[i], frame_);
    indices_[i] = DistanceIndex(grids_[i]);
  });
}

std::vector<Relation> extract_distance_relations(const SceneContext& ctx, int threads) {
  const Scene& scene = ctx.scene();
  const std::size_t n = scene.instances.size();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  std::vector<std::vector<Relation>> per_pair(pairs.size());
  const PredicateClass next_to = make_predicate(PredicateKind::next_to, Frame::frame_free);
  const PredicateClass touching = make_predicate(PredicateKind::touching, Frame::frame_free);
  parallel_for(pairs.size(), threads, [&](std::size_t p) {
    const Instance& a = scene.instances[pairs[p].first];
    const Instance& b = scene.instances[pairs[p].second];
    const ClosestPair cp = closest_voxel_centers(ctx.index(a.id), ctx.index(b.id));
    const double alpha = clamp_voxel_distance(cp.center_distance, ctx.frame());
    // direction from b to a along the closest approach, with fallbacks for coincident centers
    Vec3 v = cp.from_a - cp.from_b;
    if (v.norm() == 0.0) v = a.bounds().center() - b.bounds().center();
    v = v.norm() > 0.0 ? Vec3(v.normalized()) : scene.world_up;
    auto& out = per_pair[p];
    out.push_back({a.id, b.id, next_to, alpha, std::nullopt, v});
    out.push_back({b.id, a.id, next_to, alpha, std::nullopt, -v});
    if (alpha == 0.0) {
      out.push_back({a.id, b.id, touching, 0.0, std::nullopt, v});
      out.push_back({b.id, a.id, touching, 0.0, std::nullopt, -v});
    }
  });
  std::vector<Relation> rels;
  for (auto& r : per_pair) rels.insert(rels.end(), r.begin(), r.end());
  sort_relations(rels);
  return rels;
}

std::vector<Relation> extract_directional_relations(const SceneContext& ctx, const std::optional<CameraView>& view,
                                                    const ExtractionConfig& cfg) {
  const auto tasks = view ? camera_tasks(ctx.scene(), *view) : object_tasks(ctx.scene());
  SweepTable table(ctx, cfg.sweep);
  for (const auto& t : tasks) table.request(t.obj, t.v);
  table.run(cfg.threads);
  std::vector<Relation> rels;
  for (const auto& t : tasks) emit(table, t, rels);
  sort_relations(rels);
  return rels;
}

std::vector<Relation> extract_on_relations(const SceneContext& ctx, const ExtractionConfig& cfg) {
  const auto contacts = touching_pairs(extract_distance_relations(ctx, cfg.threads));
  SweepTable table(ctx, cfg.sweep);
  const Vec3 down = -ctx.scene().world_up;
  for (const auto& c : contacts) {
    table.request(c.a, down);
    table.request(c.b, down);
  }
  table.run(cfg.threads);
  auto rels = on_from_contacts(table, ctx.scene(), contacts, cfg.on_support_deg);
  sort_relations(rels);
  return rels;
}

std::map<int, std::vector<int>> compute_visibility(const RayScene& rays) {
  const Scene& scene = rays.scene();
  std::map<int, std::vector<int>> out;
  for (const CameraView& cam : scene.cameras) {
    auto& visible = out[cam.id];
    for (const Instance& inst : scene.instances) {
      const Aabb& box = rays.instance_bounds(inst.id);
      bool seen = false;
      // corners, edge midpoints and face centres of the bounding box
      for (int k = 0; k < 27 && !seen; ++k) {
        if (k == 13) continue;
        const Vec3 w(k % 3 * 0.5, k / 3 % 3 * 0.5, k / 9 * 0.5);
        const Vec3 p = box.lo + w.cwiseProduct(box.extent());
        const Vec3 d = p - cam.center;
        const double dist = d.norm();
        if (cam.forward.dot(d) <= 0.0 || dist == 0.0) continue;
        const Ray ray{cam.center, d / dist, dist};
        const auto hit = rays.scene_bvh().intersect(ray);
        seen = !hit || hit->instance == inst.id || hit->t >= dist - 1e-9 * std::max(1.0, dist);
      }
      if (seen) visible.push_back(inst.id);
    }
  }
  return out;
}

SceneGraph extract_scene_graph(const SceneContext& ctx, const ExtractionConfig& cfg) {
  const Scene& scene = ctx.scene();
  SceneGraph graph;
  for (const Instance& inst : scene.instances) graph.instances.push_back({inst.id, inst.class_label, inst.directional_capable});
  std::sort(graph.instances.begin(), graph.instances.end(),
            [](const InstanceInfo& a, const InstanceInfo& b) { return a.id < b.id; });

  std::vector<Relation> rels = extract_distance_relations(ctx, cfg.threads);
  const auto contacts = touching_pairs(rels);

  std::vector<DirectionalTask> tasks;
  if (cfg.object_dependent) tasks = object_tasks(scene);
  if (cfg.camera_dependent) {
    for (const CameraView& cam : scene.cameras) {
      auto more = camera_tasks(scene, cam);
      tasks.insert(tasks.end(), more.begin(), more.end());
    }
  }
  SweepTable table(ctx, cfg.sweep);
  for (const auto& t : tasks) table.request(t.obj, t.v);
  const Vec3 down = -scene.world_up;
  for (const auto& c : contacts) {
    table.request(c.a, down);
    table.request(c.b, down);
  }
  table.run(cfg.threads);

  for (const auto& t : tasks) emit(table, t, rels);
  const auto on = on_from_contacts(table, scene, contacts, cfg.on_support_deg);
  rels.insert(rels.end(), on.begin(), on.end());
  sort_relations(rels);
  graph.relations = std::move(rels);
  graph.visibility = compute_visibility(ctx.rays());
  return graph;
}

SceneGraph extract_scene_graph(const Scene& scene, const ExtractionConfig& cfg) {
  const SceneContext ctx(scene, cfg.resolution, cfg.threads);
  return extract_scene_graph(ctx, cfg);
}

}  // namespace relgraph
