#include "relgraph/proto.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

namespace relgraph {

namespace {

constexpr char kMagic[4] = {'R', 'G', 'P', 'V'};
constexpr std::uint16_t kNone16 = 0xFFFF;
constexpr std::size_t kMaxDenseCells = std::size_t{1} << 27;

/// Dense scratch volume covering the scene box inflated by one voxel.
class DenseVolume {
 public:
  DenseVolume(const GridFrame& frame, const Aabb& clip) : frame_(frame), clip_(clip) {
    lo_ = frame.cell_of(clip.lo);
    const VoxelCoord hi = frame.cell_of(clip.hi);
    nx_ = static_cast<std::size_t>(hi.x - lo_.x + 1);
    ny_ = static_cast<std::size_t>(hi.y - lo_.y + 1);
    nz_ = static_cast<std::size_t>(hi.z - lo_.z + 1);
    if (nx_ * ny_ * nz_ > kMaxDenseCells) {
      throw Error("proto volume too large for the voxel resolution; use a coarser grid");
    }
    values_.assign(nx_ * ny_ * nz_, std::numeric_limits<float>::infinity());
  }

  [[nodiscard]] const Aabb& clip() const { return clip_; }
  [[nodiscard]] std::size_t size() const { return values_.size(); }

  [[nodiscard]] std::size_t index(const VoxelCoord& c) const {
    return (static_cast<std::size_t>(c.x - lo_.x) * ny_ + static_cast<std::size_t>(c.y - lo_.y)) * nz_ +
           static_cast<std::size_t>(c.z - lo_.z);
  }
  [[nodiscard]] VoxelCoord coord(std::size_t i) const {
    const auto z = static_cast<std::int32_t>(i % nz_);
    const auto y = static_cast<std::int32_t>(i / nz_ % ny_);
    const auto x = static_cast<std::int32_t>(i / (nz_ * ny_));
    return {lo_.x + x, lo_.y + y, lo_.z + z};
  }

  float& operator[](std::size_t i) { return values_[i]; }

  /// Finite entries outside `exclude`.
  [[nodiscard]] ScalarGrid to_grid(const OccupancyGrid& exclude) const {
    ScalarGrid grid(frame_);
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) continue;
      const VoxelCoord c = coord(i);
      if (!exclude.contains(c)) grid.set(c, values_[i]);
    }
    return grid;
  }

 private:
  GridFrame frame_;
  Aabb clip_;
  VoxelCoord lo_;
  std::size_t nx_ = 0, ny_ = 0, nz_ = 0;
  std::vector<float> values_;
};

Aabb proto_clip(const SceneContext& ctx) {
  Aabb box = ctx.scene().bounds;
  box.extend(ctx.rays().scene_bvh().bounds());
  return box.inflated(ctx.frame().resolution);
}

Vec3 proto_direction(const SceneContext& ctx, int anchor, const PredicateClass& pred,
                     const std::optional<CameraView>& view) {
  if (pred.frame == Frame::camera_dependent) {
    if (!view) throw Error("camera-dependent proto-relation needs a camera view");
    return camera_direction(*view, pred.kind, ctx.scene().world_up);
  }
  return object_direction(ctx.scene().instance(anchor), pred.kind);
}

ScalarGrid directional_volume(const SceneContext& ctx, int anchor, const Vec3& v, const SweepConfig& cfg) {
  DenseVolume dense(ctx.frame(), proto_clip(ctx));
  for_each_sweep_ray(ctx.rays(), anchor, v, cfg,
                     [&](const Ray& ray, double deviation, const std::optional<Hit>& hit) {
                       const auto value = static_cast<float>(deviation);
                       const double t_end = hit ? hit->t : ray.max_t;
                       traverse_voxels(ctx.frame(), dense.clip(), ray.origin, ray.direction, 0.0, t_end,
                                       [&](const VoxelCoord& c) {
                                         float& slot = dense[dense.index(c)];
                                         slot = std::min(slot, value);
                                       });
                     });
  return dense.to_grid(ctx.grid(anchor));
}

ScalarGrid distance_volume(const SceneContext& ctx, int anchor, const std::optional<double>& max_distance) {
  DenseVolume dense(ctx.frame(), proto_clip(ctx));
  const DistanceIndex& index = ctx.index(anchor);
  const GridFrame& frame = ctx.frame();
  double limit_sq = kInf;
  if (max_distance) {
    if (!(*max_distance >= 0.0)) throw Error("max distance must be non-negative");
    const double reach = *max_distance + frame.diagonal();
    limit_sq = std::nextafter(reach * reach, kInf);
  }
  for (std::size_t i = 0; i < dense.size(); ++i) {
    const auto nearest = index.tree().nearest(frame.center(dense.coord(i)), limit_sq);
    if (!nearest) continue;
    const double d = clamp_voxel_distance(std::sqrt(nearest->distance_sq), frame);
    if (max_distance && d > *max_distance) continue;
    dense[i] = static_cast<float>(d);
  }
  return dense.to_grid(ctx.grid(anchor));
}

// little-endian encoding helpers
template <typename T>
void put(std::string& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
  auto bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<char>(bits & 0xFF));
    bits = static_cast<U>(bits >> 8);
  }
}

template <typename T>
T get(const std::string& in, std::size_t offset) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bits = static_cast<U>(bits | static_cast<U>(static_cast<U>(static_cast<unsigned char>(in[offset + i])) << (8 * i)));
  }
  return std::bit_cast<T>(bits);
}

}  // namespace

ProtoRelation extract_proto(const SceneContext& ctx, int anchor, const PredicateClass& pred,
                            const std::optional<CameraView>& view, const ProtoConfig& cfg) {
  if (!pred.valid()) throw Error("inadmissible predicate");
  if (!pred.parametric()) throw Error("proto-relations need a parametric predicate, got " + to_string(pred));
  (void)ctx.scene().instance(anchor);
  ProtoRelation proto;
  proto.anchor = anchor;
  proto.pred = pred;
  if (pred.directional()) {
    const Vec3 v = proto_direction(ctx, anchor, pred, view);
    if (pred.frame == Frame::camera_dependent) proto.camera = view->id;
    proto.kind = ScalarKind::angle;
    proto.volume = directional_volume(ctx, anchor, v, cfg.sweep);
  } else {
    proto.kind = ScalarKind::distance;
    std::optional<double> limit = cfg.max_distance;
    if (pred.kind == PredicateKind::touching) limit = 0.0;
    proto.volume = distance_volume(ctx, anchor, limit);
  }
  return proto;
}

OccupancyGrid threshold(const ScalarGrid& volume, double max_value) {
  OccupancyGrid out(volume.frame());
  for (const auto& [c, value] : volume) {
    if (value <= max_value) out.set(c);
  }
  return out;
}

OccupancyGrid threshold(const ProtoRelation& proto, double max_value) {
  return threshold(proto.volume, max_value);
}

namespace {

template <typename T, typename Combine>
VoxelGrid<T> csg_impl(const VoxelGrid<T>& a, const VoxelGrid<T>& b, CsgOp op, Combine&& both) {
  require_same_frame(a.frame(), b.frame());
  VoxelGrid<T> out(a.frame());
  switch (op) {
    case CsgOp::union_:
      for (const auto& [c, v] : a) out.set(c, v);
      for (const auto& [c, v] : b) {
        if (const T* mine = a.find(c)) {
          out.set(c, both(*mine, v, true));
        } else {
          out.set(c, v);
        }
      }
      break;
    case CsgOp::intersection:
      for (const auto& [c, v] : a) {
        if (const T* other = b.find(c)) out.set(c, both(v, *other, false));
      }
      break;
    case CsgOp::difference:
      for (const auto& [c, v] : a) {
        if (!b.contains(c)) out.set(c, v);
      }
      break;
  }
  return out;
}

}  // namespace

OccupancyGrid csg(const OccupancyGrid& a, const OccupancyGrid& b, CsgOp op) {
  return csg_impl(a, b, op, [](Occupied, Occupied, bool) { return Occupied{}; });
}

ScalarGrid csg(const ScalarGrid& a, const ScalarGrid& b, CsgOp op) {
  return csg_impl(a, b, op, [](float x, float y, bool is_union) { return is_union ? std::min(x, y) : std::max(x, y); });
}

bool placement_test(const ProtoRelation& proto, const OccupancyGrid& candidate, double max_value) {
  require_same_frame(proto.volume.frame(), candidate.frame());
  for (const auto& [c, occupied] : candidate) {
    if (const float* value = proto.volume.find(c); value && *value <= max_value) return true;
  }
  return false;
}

std::string encode_proto(const ProtoRelation& proto) {
  std::string out;
  const auto cells = proto.volume.sorted();
  out.reserve(kProtoHeaderBytes + kProtoRecordBytes * cells.size());
  out.append(kMagic, 4);
  put(out, kProtoFormatVersion);
  put(out, proto.volume.frame().resolution);
  for (int i = 0; i < 3; ++i) put(out, proto.volume.frame().origin[i]);
  put(out, static_cast<std::uint32_t>(proto.kind));
  put(out, static_cast<std::int32_t>(proto.anchor));
  put(out, proto.pred ? static_cast<std::uint16_t>(proto.pred->kind) : kNone16);
  put(out, proto.pred ? static_cast<std::uint16_t>(proto.pred->frame) : kNone16);
  put(out, static_cast<std::int32_t>(proto.camera.value_or(-1)));
  put(out, static_cast<std::uint64_t>(cells.size()));
  for (const auto& [c, value] : cells) {
    put(out, c.x);
    put(out, c.y);
    put(out, c.z);
    put(out, value);
  }
  return out;
}

ProtoRelation decode_proto(const std::string& bytes) {
  if (bytes.size() < kProtoHeaderBytes) throw Error("proto file truncated: missing header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw Error("not a proto volume file (bad magic)");
  if (const auto version = get<std::uint32_t>(bytes, 4); version != kProtoFormatVersion) {
    throw Error("unsupported proto format version " + std::to_string(version));
  }
  GridFrame frame;
  frame.resolution = get<double>(bytes, 8);
  frame.origin = Vec3(get<double>(bytes, 16), get<double>(bytes, 24), get<double>(bytes, 32));
  if (!(frame.resolution > 0.0) || !frame.origin.allFinite()) throw Error("proto file has an invalid grid frame");
  const auto kind = get<std::uint32_t>(bytes, 40);
  if (kind > 2) throw Error("proto file has an unknown scalar kind");
  ProtoRelation proto;
  proto.kind = static_cast<ScalarKind>(kind);
  proto.anchor = get<std::int32_t>(bytes, 44);
  const auto pred_kind = get<std::uint16_t>(bytes, 48);
  const auto pred_frame = get<std::uint16_t>(bytes, 50);
  if (pred_kind != kNone16) {
    if (pred_kind > static_cast<std::uint16_t>(PredicateKind::on) ||
        pred_frame > static_cast<std::uint16_t>(Frame::frame_free)) {
      throw Error("proto file has an unknown predicate");
    }
    proto.pred = make_predicate(static_cast<PredicateKind>(pred_kind), static_cast<Frame>(pred_frame));
  }
  if (const auto cam = get<std::int32_t>(bytes, 52); cam >= 0) proto.camera = cam;
  const auto count = get<std::uint64_t>(bytes, 56);
  const std::size_t payload = bytes.size() - kProtoHeaderBytes;
  if (payload % kProtoRecordBytes != 0 || payload / kProtoRecordBytes != count) {
    throw Error("proto file truncated: expected " + std::to_string(count) + " records");
  }
  proto.volume = ScalarGrid(frame);
  proto.volume.reserve(count);
  VoxelCoord previous{};
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t at = kProtoHeaderBytes + i * kProtoRecordBytes;
    const VoxelCoord c{get<std::int32_t>(bytes, at), get<std::int32_t>(bytes, at + 4),
                       get<std::int32_t>(bytes, at + 8)};
    if (i > 0 && !(previous < c)) throw Error("proto records unsorted or duplicated at record " + std::to_string(i));
    const auto value = get<float>(bytes, at + 12);
    if (!std::isfinite(value)) throw Error("proto record " + std::to_string(i) + " is not finite");
    proto.volume.set(c, value);
    previous = c;
  }
  return proto;
}

void write_proto(const ProtoRelation& proto, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  const std::string bytes = encode_proto(proto);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

ProtoRelation read_proto(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_proto(bytes);
}

}  // namespace relgraph
