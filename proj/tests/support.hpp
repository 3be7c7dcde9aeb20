#pragma once

#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "relgraph/box_scene.hpp"
#include "relgraph/relations.hpp"

namespace relgraph::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("relgraph_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }
  [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline Aabb box(double x0, double y0, double z0, double x1, double y1, double z1) {
  return {Vec3(x0, y0, z0), Vec3(x1, y1, z1)};
}

/// Scene of axis-aligned boxes with ids 0..n-1 and optional cameras.
inline Scene box_scene(const std::vector<Aabb>& boxes, std::vector<CameraView> cameras = {}) {
  std::vector<Instance> instances;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    instances.push_back(make_box_instance(static_cast<int>(i), boxes[i]));
  }
  return make_scene(std::move(instances), std::move(cameras));
}

/// Random valid scene graph: mixed predicates, optional cameras, awkward labels.
inline SceneGraph random_graph(std::mt19937_64& rng, int max_instances = 8) {
  static const char* labels[] = {"chair", "table", "tv, 55\"", "lamp\nshade", "book", "cup"};
  std::uniform_int_distribution<int> n_inst(2, max_instances);
  std::uniform_int_distribution<int> n_cams(0, 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g;
  SceneGraph graph;
  const int n = n_inst(rng);
  const int cams = n_cams(rng);
  for (int i = 0; i < n; ++i) {
    graph.instances.push_back({i * 3 + 1, labels[rng() % 6], u(rng) < 0.5});
  }
  for (int c = 0; c < cams; ++c) {
    auto& vis = graph.visibility[c * 2];
    for (const auto& inst : graph.instances) {
      if (u(rng) < 0.7) vis.push_back(inst.id);
    }
  }
  for (const auto& s : graph.instances) {
    for (const auto& o : graph.instances) {
      if (s.id == o.id) continue;
      const auto random_v = [&] { return Vec3(Vec3(g(rng), g(rng), g(rng)).normalized()); };
      Relation r;
      r.sbj = s.id;
      r.obj = o.id;
      r.pred = make_predicate(PredicateKind::next_to, Frame::frame_free);
      r.alpha = u(rng) < 0.2 ? 0.0 : 3.0 * u(rng);
      r.v = random_v();
      graph.relations.push_back(r);
      if (*r.alpha == 0.0) {
        r.pred = make_predicate(PredicateKind::touching, Frame::frame_free);
        graph.relations.push_back(r);
        if (u(rng) < 0.5) {
          r.pred = make_predicate(PredicateKind::on, Frame::frame_free);
          r.alpha.reset();
          graph.relations.push_back(r);
        }
      }
      for (const PredicateKind k : kDirectionalKinds) {
        if (o.directional_capable && u(rng) < 0.3) {
          Relation d;
          d.sbj = s.id;
          d.obj = o.id;
          d.pred = make_predicate(k, Frame::object_dependent);
          d.alpha = 90.0 * u(rng);
          d.v = random_v();
          graph.relations.push_back(d);
        }
        for (const auto& [cam, vis] : graph.visibility) {
          if (u(rng) < 0.2) {
            Relation d;
            d.sbj = s.id;
            d.obj = o.id;
            d.pred = make_predicate(k, Frame::camera_dependent);
            d.alpha = 90.0 * u(rng);
            d.cam = cam;
            d.v = random_v();
            graph.relations.push_back(d);
          }
        }
      }
    }
  }
  std::sort(graph.relations.begin(), graph.relations.end(), relation_less);
  return graph;
}

}  // namespace relgraph::testing
