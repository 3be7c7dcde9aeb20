#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "relgraph/relations.hpp"
#include "relgraph/voxel_grid.hpp"

namespace relgraph {

enum class ScalarKind : std::uint32_t {
  occupancy = 0,
  angle = 1,     // degrees
  distance = 2,  // meters
};

/// Volume of space where a hypothetical object would satisfy `pred` with `anchor`.
struct ProtoRelation {
  /// -1 for derived volumes (CSG results) that have no single anchor.
  int anchor = -1;
  std::optional<PredicateClass> pred;
  /// Camera id for camera-dependent predicates.
  std::optional<int> camera;
  ScalarKind kind = ScalarKind::occupancy;
  ScalarGrid volume;

  bool operator==(const ProtoRelation&) const = default;
};

struct ProtoConfig {
  SweepConfig sweep;
  /// Distance volumes only keep voxels up to this distance (meters).
  std::optional<double> max_distance;
};

/// Calls `visit(cell)` for every cell of `frame` crossed by the segment
/// origin + t * direction, t in [t_begin, t_end], clipped to `clip`, in order.
/// Exact grid stepping: consecutive cells share a face.
template <typename Visit>
void traverse_voxels(const GridFrame& frame, const Aabb& clip, const Vec3& origin, const Vec3& direction,
                     double t_begin, double t_end, Visit&& visit);

/// Directional: minimum fan deviation of any sweep ray crossing each voxel,
/// rays stopping at their first scene hit. Distance-based: distance from
/// each voxel to the anchor's nearest occupied voxel. Voxels of the anchor
/// itself are never stored.
ProtoRelation extract_proto(const SceneContext& ctx, int anchor, const PredicateClass& pred,
                            const std::optional<CameraView>& view, const ProtoConfig& cfg);

/// Occupancy of the voxels whose value is <= max_value.
OccupancyGrid threshold(const ProtoRelation& proto, double max_value);
OccupancyGrid threshold(const ScalarGrid& volume, double max_value);

enum class CsgOp { union_, intersection, difference };

/// Set algebra on voxel keys. For scalar grids a union keeps the minimum, an
/// intersection the maximum (both volumes must admit the voxel) and a
/// difference the values of `a`.
OccupancyGrid csg(const OccupancyGrid& a, const OccupancyGrid& b, CsgOp op);
ScalarGrid csg(const ScalarGrid& a, const ScalarGrid& b, CsgOp op);

/// Whether `candidate` shares at least one voxel with threshold(proto, max_value).
bool placement_test(const ProtoRelation& proto, const OccupancyGrid& candidate, double max_value);

/// Binary sparse volume format; see README for the byte layout.
inline constexpr std::uint32_t kProtoFormatVersion = 1;
inline constexpr std::size_t kProtoHeaderBytes = 64;
inline constexpr std::size_t kProtoRecordBytes = 16;

void write_proto(const ProtoRelation& proto, const std::filesystem::path& path);
ProtoRelation read_proto(const std::filesystem::path& path);
std::string encode_proto(const ProtoRelation& proto);
ProtoRelation decode_proto(const std::string& bytes);

// ---------------------------------------------------------------------------

template <typename Visit>
void traverse_voxels(const GridFrame& frame, const Aabb& clip, const Vec3& origin, const Vec3& direction,
                     double t_begin, double t_end, Visit&& visit) {
  double t0 = t_begin;
  double t1 = t_end;
  for (int i = 0; i < 3; ++i) {
    if (direction[i] == 0.0) {
      if (origin[i] < clip.lo[i] || origin[i] > clip.hi[i]) return;
      continue;
    }
    double a = (clip.lo[i] - origin[i]) / direction[i];
    double b = (clip.hi[i] - origin[i]) / direction[i];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
  }
  if (t0 > t1) return;

  const double res = frame.resolution;
  const VoxelCoord lo_cell = frame.cell_of(clip.lo);
  const VoxelCoord hi_cell = frame.cell_of(clip.hi);
  VoxelCoord cell = frame.cell_of(origin + t0 * direction);
  std::int32_t* c[3] = {&cell.x, &cell.y, &cell.z};
  const std::int32_t lo[3] = {lo_cell.x, lo_cell.y, lo_cell.z};
  const std::int32_t hi[3] = {hi_cell.x, hi_cell.y, hi_cell.z};
  int step[3];
  double t_max[3];
  double t_delta[3];
  for (int i = 0; i < 3; ++i) {
    *c[i] = std::clamp(*c[i], lo[i], hi[i]);
    if (direction[i] > 0.0) {
      step[i] = 1;
      t_max[i] = (frame.origin[i] + (*c[i] + 1) * res - origin[i]) / direction[i];
      t_delta[i] = res / direction[i];
    } else if (direction[i] < 0.0) {
      step[i] = -1;
      t_max[i] = (frame.origin[i] + *c[i] * res - origin[i]) / direction[i];
      t_delta[i] = -res / direction[i];
    } else {
      step[i] = 0;
      t_max[i] = kInf;
      t_delta[i] = kInf;
    }
  }
  while (true) {
    visit(static_cast<const VoxelCoord&>(cell));
    int axis = 0;
    if (t_max[1] < t_max[axis]) axis = 1;
    if (t_max[2] < t_max[axis]) axis = 2;
    if (t_max[axis] > t1) break;
    *c[axis] += step[axis];
    if (*c[axis] < lo[axis] || *c[axis] > hi[axis]) break;
    t_max[axis] += t_delta[axis];
  }
}

}  // namespace relgraph
