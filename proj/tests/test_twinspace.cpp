#include <gtest/gtest.h>

#include <random>

#include "support/oracles.hpp"
#include "twinpose/twinspace.hpp"

using namespace twinpose;

namespace {

const CameraIntrinsics kKitti{721.5377, 609.5593, 172.854, 1242, 375};

CameraIntrinsics random_intrinsics(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int w = 200 + static_cast<int>(rng() % 1800);
  const int h = 100 + static_cast<int>(rng() % 1000);
  return {100.0 + 2000.0 * u(rng), w * (0.3 + 0.4 * u(rng)), h * (0.3 + 0.4 * u(rng)), w, h};
}

}  // namespace

TEST(TwinScene, DistanceFillsWidth) {
  const TwinScene scene({1242.0, 621.0, 187.5, 1242, 375});
  EXPECT_DOUBLE_EQ(scene.twin_distance(), 1.0);
  EXPECT_DOUBLE_EQ(scene.image_plane().width, 1.0);
  EXPECT_DOUBLE_EQ(scene.image_plane().height, 375.0 / 1242.0);
}

TEST(TwinScene, PlaneCornersProjectToPixelCorners) {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 20; ++trial) {
    const CameraIntrinsics k = trial == 0 ? kKitti : random_intrinsics(rng);
    const TwinScene scene(k);
    const double w = k.width, h = k.height;
    const Pixel expected[4] = {{0, 0}, {w, 0}, {0, h}, {w, h}};
    for (int c = 0; c < 4; ++c) {
      const Pixel px = scene.world_to_pixel(scene.image_plane().corners[c]);
      EXPECT_NEAR(px.u, expected[c].u, 1e-9);
      EXPECT_NEAR(px.v, expected[c].v, 1e-9);
      EXPECT_EQ(scene.image_plane().corners[c].z(), 0.0);
    }
    const auto& cs = scene.image_plane().corners;
    EXPECT_NEAR((cs[1] - cs[0]).norm(), 1.0, 1e-12);
    EXPECT_NEAR((cs[2] - cs[0]).norm(), h / w, 1e-12);
  }
}

TEST(TwinScene, CenteredPlane) {
  const CameraIntrinsics k{900.0, 400.0, 150.0, 800, 300};
  const TwinScene scene(k);
  EXPECT_LT(scene.image_plane().center.norm(), 1e-15);
  const Pixel px = scene.world_to_pixel(scene.image_plane().center);
  EXPECT_NEAR(px.u, 400.0, 1e-9);
  EXPECT_NEAR(px.v, 150.0, 1e-9);
  EXPECT_LT(scene.pixel_to_plane({400.0, 150.0}).norm(), 1e-15);
  const Vec3 corner = scene.pixel_to_plane({0.0, 0.0});
  EXPECT_NEAR(corner.x(), -0.5, 1e-15);
  EXPECT_NEAR(corner.y(), 300.0 / (2 * 800.0), 1e-15);
  EXPECT_EQ(corner.z(), 0.0);
}

TEST(TwinScene, PixelPlaneRoundTrip) {
  std::mt19937_64 rng(52);
  const TwinScene scene(kKitti);
  std::uniform_real_distribution<double> u(0, 1242), v(0, 375);
  for (int i = 0; i < 100; ++i) {
    const Pixel p{u(rng), v(rng)};
    const Pixel back = scene.world_to_pixel(scene.pixel_to_plane(p));
    EXPECT_NEAR(back.u, p.u, 1e-9);
    EXPECT_NEAR(back.v, p.v, 1e-9);
  }
}

TEST(TwinScene, PlaceAndExtract) {
  TwinScene scene(kKitti);
  scene.register_model("cube", oracle::unit_cube());
  const RigidPose p{{0.3, -0.2, -4.0}, {0.1, 0.2, 0.3}};
  const auto h = scene.place_model("cube", {1, 1, 1}, p);
  const RigidPose w = scene.world_pose(h);
  EXPECT_EQ(w.translation, p.translation);
  EXPECT_EQ(w.rotation.rx, p.rotation.rx);
  EXPECT_EQ(w.rotation.ry, p.rotation.ry);
  EXPECT_EQ(w.rotation.rz, p.rotation.rz);
  const RigidPose back = to_world_frame(scene.extract_pose(h), scene.twin_distance());
  EXPECT_LT((back.translation - p.translation).norm(), 1e-12);
  EXPECT_LT(rotation_angle_between(back.rotation_matrix(), p.rotation_matrix()), 1e-12);

  const auto h2 = scene.place_model("cube", {2, 2, 2}, p);
  EXPECT_NE(h, h2);
  EXPECT_EQ(scene.instance_count(), 2u);
  EXPECT_EQ(scene.instance(h).scale, Vec3::Ones());
  EXPECT_EQ(scene.instance(h2).scale, Vec3::Constant(2.0));
}

TEST(TwinScene, ExtractedPoseOfOrigin) {
  CameraIntrinsics k = kKitti;
  k.f = 10.0 * k.width;
  TwinScene scene(k);
  scene.register_model("cube", oracle::unit_cube());
  const auto h = scene.place_model("cube", {1, 1, 1}, RigidPose{});
  const RigidPose c = scene.extract_pose(h);
  EXPECT_NEAR((c.translation - Vec3(0, 0, 10)).norm(), 0.0, 1e-12);
  EXPECT_TRUE(c.rotation_matrix().isApprox(camera_convention_rotation(), 1e-15));
}

TEST(TwinScene, PlacementErrors) {
  TwinScene scene(kKitti);
  scene.register_model("cube", oracle::unit_cube());
  const double d = scene.twin_distance();
  EXPECT_THROW(scene.place_model("cube", {1, 1, 1}, RigidPose{{0, 0, d}, {}}), TwinSpaceError);
  EXPECT_THROW(scene.place_model("cube", {1, 1, 1}, RigidPose{{0, 0, d + 1}, {}}), TwinSpaceError);
  EXPECT_THROW(scene.place_model("nope", {1, 1, 1}, RigidPose{}), TwinSpaceError);
  EXPECT_THROW(scene.place_model("cube", {1, 0, 1}, RigidPose{}), TwinSpaceError);
  EXPECT_THROW(scene.instance(5), TwinSpaceError);
}

TEST(SecondaryProject, CubeSymmetricAboutPrincipalPoint) {
  const CameraIntrinsics k{700.0, 350.0, 200.0, 700, 400};
  TwinScene scene(k);
  scene.register_model("cube", oracle::unit_cube());
  const auto h = scene.place_model("cube", {1, 1, 1}, RigidPose{{0, 0, -3}, {}});
  const Wireframe w = scene.secondary_project(h);
  ASSERT_EQ(w.vertices_px.size(), 8u);
  EXPECT_TRUE(w.behind.empty());
  EXPECT_EQ(w.edges.size(), 18u);
  double su = 0, sv = 0;
  for (const Pixel& p : w.vertices_px) {
    su += p.u - k.cx;
    sv += p.v - k.cy;
    // Mirror vertex (-x, -y, z) projects to the point reflection.
    bool found = false;
    for (const Pixel& q : w.vertices_px) {
      found = found || (std::abs((q.u - k.cx) + (p.u - k.cx)) < 1e-9 && std::abs((q.v - k.cy) + (p.v - k.cy)) < 1e-9);
    }
    EXPECT_TRUE(found);
  }
  EXPECT_NEAR(su, 0.0, 1e-9);
  EXPECT_NEAR(sv, 0.0, 1e-9);
}

TEST(SecondaryProject, PlusXMovesPixelsRight) {
  TwinScene scene(kKitti);
  scene.register_model("cube", oracle::unit_cube());
  const auto a = scene.place_model("cube", {1, 1, 1}, RigidPose{{0, 0, -5}, {0.2, 0.3, 0.1}});
  const auto b = scene.place_model("cube", {1, 1, 1}, RigidPose{{0.25, 0, -5}, {0.2, 0.3, 0.1}});
  const Wireframe wa = scene.secondary_project(a), wb = scene.secondary_project(b);
  for (std::size_t i = 0; i < wa.vertices_px.size(); ++i) EXPECT_GT(wb.vertices_px[i].u, wa.vertices_px[i].u);
}

TEST(SecondaryProject, MatchesHomogeneousChain) {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const CameraIntrinsics k = random_intrinsics(rng);
    TwinScene scene(k);
    TriMesh m = oracle::random_mesh(rng, 50);
    scene.register_model("m", m);
    const Vec3 scale(0.5 + std::abs(u(rng)), 0.5 + std::abs(u(rng)), 0.5 + std::abs(u(rng)));
    const RigidPose p{{u(rng), u(rng), -3.0 - 2 * std::abs(u(rng))}, {u(rng), u(rng), u(rng)}};
    const auto h = scene.place_model("m", scale, p);
    const Wireframe w = scene.secondary_project(h);
    const Mat4 t = oracle::twin_world_to_camera(scene.twin_distance()) *
                   oracle::homogeneous(oracle::euler_columns(p.rotation.rx, p.rotation.ry, p.rotation.rz),
                                       p.translation);
    const ObjectToImage chain = object_to_image(k, p, scene.twin_distance());
    for (std::size_t i = 0; i < m.vertices.size(); ++i) {
      const Vec3 v = m.vertices[i].cwiseProduct(scale);
      const auto expected = oracle::project_chain(k.f, k.cx, k.cy, t, v);
      EXPECT_NEAR(w.vertices_px[i].u, expected[0], 1e-9);
      EXPECT_NEAR(w.vertices_px[i].v, expected[1], 1e-9);
      const Pixel c = chain(v);
      EXPECT_NEAR(w.vertices_px[i].u, c.u, 1e-9);
      EXPECT_NEAR(w.vertices_px[i].v, c.v, 1e-9);
    }
  }
}

TEST(ProjectWireframe, BehindVerticesDropEdges) {
  // Camera-frame pose with the cube straddling the image plane z = 0.
  const Wireframe w = project_wireframe(oracle::unit_cube(), kKitti, RigidPose{{0, 0, 0.2}, {}});
  EXPECT_EQ(w.behind, (std::vector<std::uint32_t>{0, 1, 2, 3}));
  for (const auto& e : w.edges) {
    EXPECT_FALSE(w.is_behind(e[0]));
    EXPECT_FALSE(w.is_behind(e[1]));
  }
  // Only the front face's edges survive (4 sides + 1 diagonal).
  EXPECT_EQ(w.edges.size(), 5u);
}
