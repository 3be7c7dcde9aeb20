#include <gtest/gtest.h>

#include <random>

#include "relgraph/box_scene.hpp"
#include "support.hpp"

namespace relgraph {
namespace {

using testing::box;
using testing::TempDir;

TEST(Predicates, TokensRoundTrip) {
  for (const PredicateKind k : kDirectionalKinds) {
    for (const Frame f : {Frame::camera_dependent, Frame::object_dependent}) {
      const PredicateClass p = make_predicate(k, f);
      EXPECT_EQ(parse_predicate(to_string(p)), p);
    }
  }
  for (const PredicateKind k : {PredicateKind::next_to, PredicateKind::touching, PredicateKind::on}) {
    const PredicateClass p = make_predicate(k, Frame::frame_free);
    EXPECT_EQ(parse_predicate(to_string(p)), p);
  }
  EXPECT_EQ(to_string(make_predicate(PredicateKind::right, Frame::camera_dependent)), "right@cam");
  EXPECT_FALSE(parse_predicate("sideways@cam"));
  EXPECT_FALSE(parse_predicate("right"));
}

TEST(Predicates, InadmissibleFramesThrow) {
  EXPECT_THROW(make_predicate(PredicateKind::right, Frame::frame_free), Error);
  EXPECT_THROW(make_predicate(PredicateKind::next_to, Frame::camera_dependent), Error);
  EXPECT_THROW(make_predicate(PredicateKind::on, Frame::object_dependent), Error);
}

TEST(Predicates, ParametricFlags) {
  EXPECT_TRUE(make_predicate(PredicateKind::above, Frame::object_dependent).parametric());
  EXPECT_TRUE(make_predicate(PredicateKind::touching, Frame::frame_free).parametric());
  EXPECT_FALSE(make_predicate(PredicateKind::on, Frame::frame_free).parametric());
}

TEST(Camera, LookingAlongNegativeXHasRightAlongPositiveY) {
  // right = forward x up for a right-handed, z-up world
  const auto cam = CameraView::look_along(0, Vec3(5, 0, 1), Vec3(-1, 0, 0));
  EXPECT_TRUE(camera_direction(cam, PredicateKind::right).isApprox(Vec3(0, 1, 0), 1e-12));
  EXPECT_TRUE(camera_direction(cam, PredicateKind::above).isApprox(Vec3(0, 0, 1), 1e-12));
  // front points back towards the camera
  EXPECT_TRUE(camera_direction(cam, PredicateKind::front).isApprox(Vec3(1, 0, 0), 1e-12));
}

TEST(Camera, HandBuiltExtrinsicsFollowVisionConvention) {
  Mat34 ext = Mat34::Zero();
  // camera x -> world +y, camera y (down) -> world -z, camera z -> world -x
  ext.row(0) << 0, 1, 0, 0;
  ext.row(1) << 0, 0, -1, 0;
  ext.row(2) << -1, 0, 0, 0;
  const auto cam = CameraView::from_extrinsics(3, ext);
  EXPECT_TRUE(cam.right.isApprox(Vec3(0, 1, 0)));
  EXPECT_TRUE(cam.up.isApprox(Vec3(0, 0, 1)));
  EXPECT_TRUE(cam.forward.isApprox(Vec3(-1, 0, 0)));
}

TEST(Camera, NonOrthonormalRotationRejected) {
  Mat34 ext = Mat34::Zero();
  ext.leftCols<3>() = 2.0 * Mat3::Identity();
  EXPECT_THROW(CameraView::from_extrinsics(0, ext), SceneError);
  ext.leftCols<3>() = -Mat3::Identity();  // reflection
  EXPECT_THROW(CameraView::from_extrinsics(0, ext), SceneError);
}

TEST(Camera, PitchedCameraFrontIsHorizontalProjection) {
  const double pitch = to_radians(30.0);
  const Vec3 fwd(std::cos(pitch), 0, -std::sin(pitch));
  const auto cam = CameraView::look_along(1, Vec3::Zero(), fwd);
  EXPECT_TRUE(camera_direction(cam, PredicateKind::front).isApprox(Vec3(-1, 0, 0), 1e-12));
  EXPECT_TRUE(camera_direction(cam, PredicateKind::behind).isApprox(Vec3(1, 0, 0), 1e-12));
}

TEST(Camera, StraightDownForwardIsRejected) {
  Mat34 ext = Mat34::Zero();
  ext.row(0) << 1, 0, 0, 0;
  ext.row(1) << 0, -1, 0, 0;
  ext.row(2) << 0, 0, -1, 0;
  const auto cam = CameraView::from_extrinsics(0, ext);
  EXPECT_THROW(camera_direction(cam, PredicateKind::front), SceneError);
  EXPECT_NO_THROW(camera_direction(cam, PredicateKind::right));
}

TEST(Camera, DirectionsAreOppositeAndUnitForRandomViews) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    Vec3 f(u(rng), u(rng), 0.6 * u(rng));
    if (f.head<2>().norm() < 0.1) continue;
    const auto cam = CameraView::look_along(i, Vec3(u(rng), u(rng), u(rng)), f);
    const auto d = [&](PredicateKind k) { return camera_direction(cam, k); };
    EXPECT_EQ(d(PredicateKind::left), Vec3(-d(PredicateKind::right)));
    EXPECT_EQ(d(PredicateKind::front), Vec3(-d(PredicateKind::behind)));
    EXPECT_EQ(d(PredicateKind::above), Vec3(-d(PredicateKind::below)));
    for (const PredicateKind k : kDirectionalKinds) EXPECT_NEAR(d(k).norm(), 1.0, 1e-9);
  }
}

TEST(ObjectDirection, FollowsCanonicalPose) {
  Pose pose;  // front +x
  const Instance obj = make_box_instance(0, box(0, 0, 0, 1, 1, 1), "shelf", pose);
  EXPECT_EQ(object_direction(obj, PredicateKind::front), Vec3(1, 0, 0));
  EXPECT_EQ(object_direction(obj, PredicateKind::behind), Vec3(-1, 0, 0));

  // rotate 90 degrees about z
  const Mat3 rz = Eigen::AngleAxisd(std::numbers::pi / 2, Vec3::UnitZ()).toRotationMatrix();
  Pose turned{rz * pose.front, rz * pose.right, rz * pose.up};
  const Instance obj2 = make_box_instance(1, box(0, 0, 0, 1, 1, 1), "shelf", turned);
  EXPECT_TRUE(object_direction(obj2, PredicateKind::right).isApprox(rz * pose.right, 1e-12));
  EXPECT_TRUE(object_direction(obj2, PredicateKind::front).isApprox(Vec3(0, 1, 0), 1e-12));

  const Instance plain = make_box_instance(2, box(0, 0, 0, 1, 1, 1));
  EXPECT_THROW(object_direction(plain, PredicateKind::front), SceneError);
}

TEST(MakeScene, DuplicateIdsAndMissingPose) {
  std::vector<Instance> dup{make_box_instance(7, box(0, 0, 0, 1, 1, 1)), make_box_instance(7, box(2, 0, 0, 3, 1, 1))};
  try {
    make_scene(dup, {});
    FAIL() << "expected duplicate id error";
  } catch (const SceneError& e) {
    EXPECT_NE(std::string(e.what()).find("duplicate id"), std::string::npos);
  }
  Instance no_pose = make_box_instance(1, box(0, 0, 0, 1, 1, 1));
  no_pose.directional_capable = true;
  EXPECT_THROW(make_scene({no_pose}, {}), SceneError);

  Instance empty;
  empty.id = 3;
  EXPECT_THROW(make_scene({empty}, {}), SceneError);

  Instance nan = make_box_instance(4, box(0, 0, 0, 1, 1, 1));
  nan.mesh[0].a.x() = std::nan("");
  EXPECT_THROW(make_scene({nan}, {}), SceneError);

  EXPECT_THROW(make_scene({make_box_instance(0, box(0, 0, 0, 1, 1, 1))}, {}, Vec3::UnitZ(), box(0, 0, 0, 0.5, 1, 1)),
               SceneError);
}

TEST(MakeScene, BoundsCoverAllInstances) {
  const Scene s = testing::box_scene({box(0, 0, 0, 1, 1, 1), box(2, -1, 0, 3, 0, 4)});
  EXPECT_TRUE(s.bounds.contains(Vec3(0, -1, 0)));
  EXPECT_TRUE(s.bounds.contains(Vec3(3, 1, 4)));
  EXPECT_THROW(static_cast<void>(s.instance(9)), SceneError);
  EXPECT_EQ(s.index_of(1), 1u);
}

TEST(Manifest, RoundTripThroughFiles) {
  TempDir dir("manifest");
  Pose pose;
  std::vector<Instance> inst{make_box_instance(0, box(0, 0, 0, 1, 1, 1), "cube"),
                             make_box_instance(5, box(2, 0, 0, 3, 1, 1), "cube, with comma", pose)};
  const Scene scene = make_scene(inst, {CameraView::look_along(2, Vec3(1, -5, 1), Vec3(0, 1, 0))});
  write_scene(scene, dir / "m.json", dir / "meshes");
  const Scene back = load_scene(dir / "m.json");
  ASSERT_EQ(back.instances.size(), 2u);
  ASSERT_EQ(back.cameras.size(), 1u);
  EXPECT_EQ(back.instances[1].id, 5);
  EXPECT_EQ(back.instances[1].class_label, "cube, with comma");
  EXPECT_TRUE(back.instances[1].directional_capable);
  EXPECT_EQ(back.instances[0].bounds(), scene.instances[0].bounds());
  EXPECT_EQ(back.instances[1].mesh.size(), 12u);
  EXPECT_TRUE(back.cameras[0].extrinsics.isApprox(scene.cameras[0].extrinsics, 1e-15));
  EXPECT_EQ(back.bounds, scene.bounds);
}

TEST(Manifest, InvalidDocumentsAreRejected) {
  TempDir dir("manifest_bad");
  write_obj(box_mesh(box(0, 0, 0, 1, 1, 1)), dir / "cube.obj");
  testing::spit(dir / "dup.json",
                R"({"instances":[{"id":7,"mesh":"cube.obj"},{"id":7,"mesh":"cube.obj"}]})");
  try {
    load_scene(dir / "dup.json");
    FAIL();
  } catch (const SceneError& e) {
    EXPECT_NE(std::string(e.what()).find("duplicate id"), std::string::npos);
  }
  testing::spit(dir / "nopose.json", R"({"instances":[{"id":1,"mesh":"cube.obj","directional":true}]})");
  EXPECT_THROW(load_scene(dir / "nopose.json"), SceneError);
  testing::spit(dir / "missing.json", R"({"instances":[{"id":1,"mesh":"nope.obj"}]})");
  EXPECT_THROW(load_scene(dir / "missing.json"), SceneError);
  testing::spit(dir / "garbage.json", "{not json");
  EXPECT_THROW(load_scene(dir / "garbage.json"), SceneError);
  testing::spit(dir / "version.json", R"({"version":2,"instances":[]})");
  EXPECT_THROW(load_scene(dir / "version.json"), SceneError);
  EXPECT_THROW(load_scene(dir / "absent.json"), SceneError);
}

TEST(Obj, MalformedFacesRejected) {
  TempDir dir("obj");
  testing::spit(dir / "a.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 4\n");
  EXPECT_THROW(read_obj(dir / "a.obj"), SceneError);
  testing::spit(dir / "b.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1/1 2//3 3 4\n# quad\n");
  EXPECT_EQ(read_obj(dir / "b.obj").size(), 2u);
  testing::spit(dir / "c.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n");
  EXPECT_EQ(read_obj(dir / "c.obj").size(), 1u);
}

TEST(BoxOracle, ClosedFormExamples) {
  const Aabb a = box(0, 0, 0, 1, 1, 1);
  EXPECT_DOUBLE_EQ(box_distance(a, box(2, 0, 0, 3, 1, 1)), 1.0);
  EXPECT_DOUBLE_EQ(*box_min_angle_deg(box(2, 0, 0, 3, 1, 1), a, 0, +1), 0.0);
  EXPECT_DOUBLE_EQ(box_distance(a, box(2, 2, 0, 3, 3, 1)), std::sqrt(2.0));
  EXPECT_NEAR(*box_min_angle_deg(box(2, 2, 0, 3, 3, 1), a, 0, +1), 45.0, 1e-12);
  EXPECT_FALSE(box_min_angle_deg(box(2, 2, 0, 3, 3, 1), a, 0, -1));
  EXPECT_FALSE(box_min_angle_deg(box(0.5, 2, 0, 3, 3, 1), a, 0, +1));  // not beyond
  EXPECT_FALSE(box_min_angle_deg(a, box(2, 0, 0, 3, 1, 1), Vec3(1, 1, 0).normalized()));
}

TEST(BoxOracle, SymmetryProperties) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    BoxSceneOptions o;
    o.seed = seed;
    o.n_boxes = 8;
    const BoxScene bs = generate_box_scene(o);
    for (int a = 0; a < 8; ++a) {
      for (int b = 0; b < 8; ++b) {
        EXPECT_EQ(bs.oracle.distance(a, b), bs.oracle.distance(b, a));
        for (int axis = 0; axis < 3; ++axis) {
          Vec3 v = Vec3::Zero();
          v[axis] = 1.0;
          EXPECT_EQ(bs.oracle.angle_deg(a, b, v), bs.oracle.angle_deg(b, a, -v));
        }
      }
    }
  }
}

TEST(BoxGenerator, DeterministicAndSeparated) {
  BoxSceneOptions o;
  o.seed = 1;
  o.n_boxes = 2;
  const BoxScene a = generate_box_scene(o);
  const BoxScene b = generate_box_scene(o);
  EXPECT_EQ(a.oracle.boxes, b.oracle.boxes);
  EXPECT_EQ(oracle_json(a), oracle_json(b));
  o.seed = 2;
  EXPECT_NE(generate_box_scene(o).oracle.boxes, a.oracle.boxes);

  o.n_boxes = 12;
  o.cameras = 4;
  const BoxScene c = generate_box_scene(o);
  EXPECT_EQ(c.scene.cameras.size(), 4u);
  for (int i = 0; i < 12; ++i) {
    EXPECT_TRUE(o.bounds.contains(c.oracle.boxes[i].lo) && o.bounds.contains(c.oracle.boxes[i].hi));
    for (int j = i + 1; j < 12; ++j) {
      // never interpenetrating
      const Aabb& p = c.oracle.boxes[i];
      const Aabb& q = c.oracle.boxes[j];
      const Vec3 overlap = p.hi.cwiseMin(q.hi) - p.lo.cwiseMax(q.lo);
      EXPECT_LE(overlap.minCoeff(), 0.0);
    }
  }
}

}  // namespace
}  // namespace relgraph
