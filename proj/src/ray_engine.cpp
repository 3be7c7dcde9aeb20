#include "relgraph/ray_engine.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numbers>
#include <set>

namespace relgraph {

namespace {

using EdgeKey = std::array<double, 6>;

EdgeKey edge_key(const Vec3& a, const Vec3& b) { return {a.x(), a.y(), a.z(), b.x(), b.y(), b.z()}; }

// Closed and consistently wound: every directed edge appears once, and so does its reverse.
int mesh_orientation(const std::vector<Triangle>& mesh) {
  std::map<EdgeKey, int> edges;
  double volume = 0.0;
  for (const Triangle& t : mesh) {
    for (const auto& [p, q] : {std::pair{t.a, t.b}, std::pair{t.b, t.c}, std::pair{t.c, t.a}}) {
      if (++edges[edge_key(p, q)] > 1) return 0;
    }
    volume += t.a.dot(t.b.cross(t.c));
  }
  for (const auto& [key, n] : edges) {
    const EdgeKey reverse{key[3], key[4], key[5], key[0], key[1], key[2]};
    if (!edges.contains(reverse)) return 0;
  }
  if (volume == 0.0) return 0;
  return volume > 0.0 ? 1 : -1;
}

double max_along(const Aabb& box, const Vec3& v) {
  double m = -kInf;
  for (int i = 0; i < 8; ++i) m = std::max(m, v.dot(box.corner(i)));
  return m;
}

double min_along(const Aabb& box, const Vec3& v) {
  double m = kInf;
  for (int i = 0; i < 8; ++i) m = std::min(m, v.dot(box.corner(i)));
  return m;
}

struct Target {
  int id = -1;
  const Bvh* bvh = nullptr;
  Aabb box;
  bool resolved = false;
  double angle = 0.0;
};

/// Cone of fan directions from one origin that can reach a target box:
/// polar limits plus an azimuth interval in the sweep frame.
struct Window {
  std::size_t target = 0;
  double polar_lo = 0.0;
  double polar_hi = 0.0;
  bool all_azimuths = true;
  double azimuth_lo = 0.0;
  double azimuth_hi = 0.0;
};

// The box is projected onto the lateral plane of the sweep. Its lateral
// rectangle bounds every hit point, so the limits are conservative.
std::optional<Window> reach_window(const SweepFrame& frame, const Vec3& origin, const Aabb& box, double pad) {
  double a_lo = kInf, a_hi = -kInf, b_lo = kInf, b_hi = -kInf, h_lo = kInf, h_hi = -kInf;
  for (int i = 0; i < 8; ++i) {
    const Vec3 d = box.corner(i) - origin;
    const double a = d.dot(frame.e1);
    const double b = d.dot(frame.e2);
    const double h = d.dot(frame.v);
    a_lo = std::min(a_lo, a), a_hi = std::max(a_hi, a);
    b_lo = std::min(b_lo, b), b_hi = std::max(b_hi, b);
    h_lo = std::min(h_lo, h), h_hi = std::max(h_hi, h);
  }
  if (h_hi < -pad) return std::nullopt;
  a_lo -= pad, a_hi += pad, b_lo -= pad, b_hi += pad;
  const double da = std::max({a_lo, -a_hi, 0.0});
  const double db = std::max({b_lo, -b_hi, 0.0});
  const double lat_min = std::hypot(da, db);
  const double lat_max = std::hypot(std::max(-a_lo, a_hi), std::max(-b_lo, b_hi));
  Window w;
  w.polar_lo = std::atan2(lat_min, std::max(h_hi + pad, 0.0)) - 1e-9;
  w.polar_hi = h_lo > pad ? std::atan2(lat_max, h_lo - pad) + 1e-9 : std::numbers::pi / 2;
  if (lat_min > 0.0) {
    w.all_azimuths = false;
    const double center = std::atan2(0.5 * (b_lo + b_hi), 0.5 * (a_lo + a_hi));
    double lo = 0.0, hi = 0.0;
    for (const double a : {a_lo, a_hi}) {
      for (const double b : {b_lo, b_hi}) {
        double delta = std::atan2(b, a) - center;
        if (delta > std::numbers::pi) delta -= 2 * std::numbers::pi;
        if (delta < -std::numbers::pi) delta += 2 * std::numbers::pi;
        lo = std::min(lo, delta), hi = std::max(hi, delta);
      }
    }
    w.azimuth_lo = center + lo - 1e-9;
    w.azimuth_hi = center + hi + 1e-9;
  }
  return w;
}

/// Shared machinery of a sweep from one object along one direction.
class Sweep {
 public:
  Sweep(const RayScene& rays, int obj, const Vec3& v, const SweepConfig& cfg)
      : rays_(rays), obj_(obj), frame_(v), cfg_(cfg), eps_(rays.surface_epsilon()) {
    samples_ = back_surface(rays, obj, frame_.v, cfg.spacing);
    corners_ = corner_points(samples_);
    min_sample_v_ = kInf;
    for (const auto& s : samples_) min_sample_v_ = std::min(min_sample_v_, frame_.v.dot(s.point));
  }

  [[nodiscard]] const SweepFrame& frame() const { return frame_; }
  [[nodiscard]] const std::vector<SurfaceSample>& samples() const { return samples_; }
  [[nodiscard]] const std::vector<SurfaceSample>& corners() const { return corners_; }
  [[nodiscard]] double min_sample_v() const { return min_sample_v_; }
  [[nodiscard]] double epsilon() const { return eps_; }
  [[nodiscard]] Vec3 origin_of(const SurfaceSample& s) const { return s.point - eps_ * frame_.v; }

  [[nodiscard]] Ray make_ray(const Vec3& origin, const Vec3& dir) const {
    return Ray{origin, dir, rays_.max_range() + 2.0 * eps_};
  }

  /// First hit ignoring the sheet of the object's own surface the ray starts on.
  [[nodiscard]] std::optional<Hit> cast_scene(const Ray& ray, double cos_polar) const {
    const double skip = 2.0 * eps_;
    return rays_.scene_bvh().intersect(ray, [&](int inst, double t) {
      return !(inst == obj_ && t * cos_polar <= skip);
    });
  }

  [[nodiscard]] std::optional<Hit> cast_pair(const Ray& ray, double cos_polar, const Target& target) const {
    const double skip = 2.0 * eps_;
    auto own = rays_.instance_bvh(obj_).intersect(ray, [&](int, double t) { return t * cos_polar > skip; });
    auto other = target.bvh->intersect(ray);
    if (own && (!other || own->t < other->t)) return own;
    return other;
  }

  /// Front-surface check: the first hit on the target along v must lie within
  /// the margin of `point`.
  [[nodiscard]] bool on_front_surface(const Target& target, const Vec3& point) const {
    const double reach = rays_.max_range() + cfg_.spacing + 1.0;
    const Ray probe{point - reach * frame_.v, frame_.v, reach + cfg_.margin + eps_};
    const auto hit = target.bvh->intersect(probe);
    return hit && reach - hit->t <= cfg_.margin;
  }

 private:
  const RayScene& rays_;
  int obj_;
  SweepFrame frame_;
  SweepConfig cfg_;
  double eps_;
  std::vector<SurfaceSample> samples_;
  std::vector<SurfaceSample> corners_;
  double min_sample_v_ = 0.0;
};

SweepResult run_sweep(const Sweep& sweep, const SweepConfig& cfg,
                      std::vector<Target> targets) {
  SweepResult result;
  const SweepFrame& frame = sweep.frame();
  const bool pair_mode = cfg.occlusion == Occlusion::pair;
  std::size_t unresolved = targets.size();

  auto process_hit = [&](const Ray& ray, const std::optional<Hit>& hit, double polar_deg) {
    if (!hit) return;
    for (Target& t : targets) {
      if (t.id != hit->instance || t.resolved) continue;
      if (sweep.on_front_surface(t, hit->point(ray))) {
        t.resolved = true;
        t.angle = polar_deg;
        --unresolved;
      }
    }
  };
  auto collect = [&] {
    for (const Target& t : targets) {
      if (t.resolved) result.angles[t.id] = t.angle;
    }
    return result;
  };
  auto cast = [&](const Ray& ray, double cos_polar) {
    ++result.rays_cast;
    return pair_mode ? sweep.cast_pair(ray, cos_polar, targets.front()) : sweep.cast_scene(ray, cos_polar);
  };

  const double pad = 10.0 * sweep.epsilon();

  // rays along v from the whole back surface
  for (const SurfaceSample& s : sweep.samples()) {
    if (unresolved == 0) break;
    const Vec3 o = sweep.origin_of(s);
    const bool useful = std::any_of(targets.begin(), targets.end(), [&](const Target& t) {
      if (t.resolved) return false;
      const auto w = reach_window(frame, o, t.box, pad);
      return w && w->all_azimuths;
    });
    if (!useful) continue;
    const Ray ray = sweep.make_ray(o, frame.v);
    process_hit(ray, cast(ray, 1.0), 0.0);
  }
  if (unresolved == 0) return collect();

  const auto& corners = sweep.corners();
  std::vector<std::vector<Window>> windows(corners.size());
  for (std::size_t c = 0; c < corners.size(); ++c) {
    for (std::size_t t = 0; t < targets.size(); ++t) {
      if (targets[t].resolved) continue;
      if (auto w = reach_window(frame, sweep.origin_of(corners[c]), targets[t].box, pad)) {
        w->target = t;
        windows[c].push_back(*w);
      }
    }
  }

  // corner fans, ring by ring so the first verified ring is the minimum
  std::vector<std::int64_t> indices;
  for (const FanRing& ring : fan_rings(cfg)) {
    if (unresolved == 0) break;
    const double polar = to_radians(ring.polar_deg);
    const double cos_polar = std::cos(polar);
    const auto count = static_cast<std::int64_t>(ring.azimuth_count);
    const double step = 2.0 * std::numbers::pi / static_cast<double>(count);
    for (std::size_t c = 0; c < corners.size(); ++c) {
      if (unresolved == 0) break;
      indices.clear();
      for (const Window& w : windows[c]) {
        if (targets[w.target].resolved || polar < w.polar_lo || polar > w.polar_hi) continue;
        std::int64_t lo = 0;
        std::int64_t hi = count - 1;
        if (!w.all_azimuths) {
          lo = static_cast<std::int64_t>(std::ceil(w.azimuth_lo / step));
          hi = static_cast<std::int64_t>(std::floor(w.azimuth_hi / step));
          if (hi - lo + 1 >= count) lo = 0, hi = count - 1;
        }
        for (std::int64_t j = lo; j <= hi; ++j) indices.push_back(((j % count) + count) % count);
      }
      if (indices.empty()) continue;
      std::sort(indices.begin(), indices.end());
      indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
      const Vec3 o = sweep.origin_of(corners[c]);
      for (const std::int64_t j : indices) {
        const double azimuth = (2.0 * std::numbers::pi * static_cast<double>(j)) / static_cast<double>(count);
        const Ray ray = sweep.make_ray(o, frame.direction(polar, azimuth));
        process_hit(ray, cast(ray, cos_polar), ring.polar_deg);
      }
    }
  }
  return collect();
}

}  // namespace

void validate(const SweepConfig& cfg) {
  if (!(cfg.spacing > 0.0)) throw Error("sweep spacing must be positive");
  if (!(cfg.fan_step_deg > 0.0) || cfg.fan_step_deg > 90.0) throw Error("fan step must be in (0, 90] degrees");
  if (!(cfg.max_fan_deg >= 0.0) || cfg.max_fan_deg > 90.0) throw Error("fan extent must be in [0, 90] degrees");
  if (!(cfg.margin >= 0.0)) throw Error("front-surface margin must be non-negative");
  if (!std::has_single_bit(cfg.azimuth_factor)) throw Error("azimuth factor must be a power of two");
}

RayScene::RayScene(const Scene& scene) : scene_(&scene) {
  if (scene.instances.empty()) throw Error("scene has no instances");
  std::vector<Triangle> all;
  std::vector<int> ids;
  for (const Instance& inst : scene.instances) {
    all.insert(all.end(), inst.mesh.begin(), inst.mesh.end());
    ids.insert(ids.end(), inst.mesh.size(), inst.id);
    instance_bvhs_.emplace_back(inst.mesh, inst.id);
    instance_bounds_.push_back(inst.bounds());
    orientation_.push_back(mesh_orientation(inst.mesh));
  }
  scene_bvh_ = Bvh(std::move(all), std::move(ids));
  Aabb box = scene.bounds;
  box.extend(scene_bvh_.bounds());
  max_range_ = box.diagonal();
  epsilon_ = 1e-7 * std::max(1.0, max_range_);
}

Aabb RayScene::facing_bounds(int id, const Vec3& v) const {
  const std::size_t index = scene_->index_of(id);
  const int sign = orientation_[index];
  Aabb box;
  for (const Triangle& t : scene_->instances[index].mesh) {
    const Vec3 n = t.scaled_normal();
    const double along = n.dot(v);
    // rays parallel to a triangle never register a hit on it
    if (std::abs(along) <= 1e-15 * (t.b - t.a).norm() * (t.c - t.a).norm()) continue;
    if (sign != 0 && sign * along > 0.0) continue;
    box.extend(t.bounds());
  }
  return box;
}

SweepFrame::SweepFrame(const Vec3& direction) : v(direction.normalized()) {
  if (!direction.allFinite() || std::abs(direction.norm() - 1.0) > 1e-6) {
    throw Error("test direction must be a unit vector");
  }
  orthonormal_basis(v, e1, e2);
}

Vec3 SweepFrame::direction(double polar_rad, double azimuth_rad) const {
  return std::cos(polar_rad) * v +
         std::sin(polar_rad) * (std::cos(azimuth_rad) * e1 + std::sin(azimuth_rad) * e2);
}

std::vector<SurfaceSample> back_surface(const RayScene& rays, int obj, const Vec3& v, double spacing) {
  if (!(spacing > 0.0)) throw Error("sweep spacing must be positive");
  const SweepFrame frame(v);
  const Aabb& box = rays.instance_bounds(obj);
  double u_lo = kInf, u_hi = -kInf, w_lo = kInf, w_hi = -kInf;
  for (int i = 0; i < 8; ++i) {
    const Vec3 c = box.corner(i);
    u_lo = std::min(u_lo, c.dot(frame.e1));
    u_hi = std::max(u_hi, c.dot(frame.e1));
    w_lo = std::min(w_lo, c.dot(frame.e2));
    w_hi = std::max(w_hi, c.dot(frame.e2));
  }
  Aabb all = rays.scene().bounds;
  all.extend(rays.scene_bvh().bounds());
  const double launch = max_along(all, frame.v) + spacing;
  const double reach = launch - min_along(box, frame.v) + spacing;

  const auto i_lo = static_cast<std::int32_t>(std::floor(u_lo / spacing));
  const auto i_hi = static_cast<std::int32_t>(std::floor(u_hi / spacing));
  const auto j_lo = static_cast<std::int32_t>(std::floor(w_lo / spacing));
  const auto j_hi = static_cast<std::int32_t>(std::floor(w_hi / spacing));
  const Bvh& bvh = rays.instance_bvh(obj);
  std::vector<SurfaceSample> samples;
  for (std::int32_t i = i_lo; i <= i_hi; ++i) {
    for (std::int32_t j = j_lo; j <= j_hi; ++j) {
      const Vec3 origin = (i + 0.5) * spacing * frame.e1 + (j + 0.5) * spacing * frame.e2 + launch * frame.v;
      const Ray ray{origin, -frame.v, reach};
      if (auto hit = bvh.intersect(ray)) {
        samples.push_back({hit->point(ray), obj, 0.0, i, j});
      }
    }
  }
  if (samples.empty()) {
    throw Error("instance " + std::to_string(obj) + ": empty back surface");
  }
  return samples;
}

std::vector<SurfaceSample> corner_points(std::span<const SurfaceSample> samples) {
  std::set<std::pair<std::int32_t, std::int32_t>> cells;
  for (const auto& s : samples) cells.emplace(s.cell_u, s.cell_v);
  std::vector<SurfaceSample> out;
  for (const auto& s : samples) {
    const bool interior = cells.count({s.cell_u - 1, s.cell_v}) && cells.count({s.cell_u + 1, s.cell_v}) &&
                          cells.count({s.cell_u, s.cell_v - 1}) && cells.count({s.cell_u, s.cell_v + 1});
    if (!interior) out.push_back(s);
  }
  return out;
}

std::vector<FanRing> fan_rings(const SweepConfig& cfg) {
  validate(cfg);
  std::vector<FanRing> rings;
  const auto k_max = static_cast<int>(std::floor(cfg.max_fan_deg / cfg.fan_step_deg + 1e-9));
  for (int k = 1; k <= k_max; ++k) {
    FanRing ring;
    ring.polar_deg = k * cfg.fan_step_deg;
    const double needed = std::ceil(360.0 * cfg.azimuth_factor * std::sin(to_radians(ring.polar_deg)) / cfg.fan_step_deg);
    ring.azimuth_count = std::bit_ceil(static_cast<std::uint32_t>(std::max(1.0, needed)));
    rings.push_back(ring);
  }
  return rings;
}

SweepResult directional_sweep(const RayScene& rays, int obj, const Vec3& v, const SweepConfig& cfg,
                              std::span<const int> subjects) {
  validate(cfg);
  std::optional<Sweep> sweep;
  try {
    sweep.emplace(rays, obj, v, cfg);
  } catch (const Error&) {
    return {};  // object has no back surface along v: no relations
  }
  std::vector<Target> targets;
  for (const int id : subjects) {
    if (id == obj) continue;
    // verified hits lie within the margin behind a facing triangle
    const Aabb facing = rays.facing_bounds(id, sweep->frame().v);
    if (facing.empty()) continue;
    Aabb box = facing;
    box.extend(facing.lo + cfg.margin * sweep->frame().v);
    box.extend(facing.hi + cfg.margin * sweep->frame().v);
    if (max_along(box, sweep->frame().v) < sweep->min_sample_v() - 4.0 * rays.surface_epsilon()) continue;
    Target t;
    t.id = id;
    t.bvh = &rays.instance_bvh(id);
    t.box = box;
    targets.push_back(t);
  }
  if (targets.empty()) return {};
  if (cfg.occlusion == Occlusion::scene || targets.size() == 1) {
    return run_sweep(*sweep, cfg, std::move(targets));
  }
  SweepResult merged;
  for (const Target& t : targets) {
    SweepResult one = run_sweep(*sweep, cfg, {t});
    merged.rays_cast += one.rays_cast;
    merged.angles.insert(one.angles.begin(), one.angles.end());
  }
  return merged;
}

std::optional<double> directional_angle(const RayScene& rays, int sbj, int obj, const Vec3& v,
                                        const SweepConfig& cfg) {
  if (sbj == obj) throw Error("directional_angle: subject and object must differ");
  const int subjects[] = {sbj};
  const SweepResult r = directional_sweep(rays, obj, v, cfg, subjects);
  if (auto it = r.angles.find(sbj); it != r.angles.end()) return it->second;
  return std::nullopt;
}

void for_each_sweep_ray(const RayScene& rays, int obj, const Vec3& v, const SweepConfig& cfg,
                        const std::function<void(const Ray&, double, const std::optional<Hit>&)>& visit) {
  validate(cfg);
  const Sweep sweep(rays, obj, v, cfg);
  const SweepFrame& frame = sweep.frame();
  for (const SurfaceSample& s : sweep.samples()) {
    const Ray ray = sweep.make_ray(sweep.origin_of(s), frame.v);
    visit(ray, 0.0, sweep.cast_scene(ray, 1.0));
  }
  for (const FanRing& ring : fan_rings(cfg)) {
    const double polar = to_radians(ring.polar_deg);
    const double cos_polar = std::cos(polar);
    for (const SurfaceSample& c : sweep.corners()) {
      const Vec3 o = sweep.origin_of(c);
      for (std::uint32_t j = 0; j < ring.azimuth_count; ++j) {
        const double azimuth = (2.0 * std::numbers::pi * static_cast<double>(j)) /
                               static_cast<double>(ring.azimuth_count);
        const Ray ray = sweep.make_ray(o, frame.direction(polar, azimuth));
        visit(ray, ring.polar_deg, sweep.cast_scene(ray, cos_polar));
      }
    }
  }
}

}  // namespace relgraph
