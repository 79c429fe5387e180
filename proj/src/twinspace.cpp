#include "twinpose/twinspace.hpp"

#include <algorithm>

#include "twinpose/simd/kernels.hpp"

namespace twinpose {

bool Wireframe::is_behind(std::uint32_t vertex) const {
  return std::binary_search(behind.begin(), behind.end(), vertex);
}

Wireframe project_wireframe(const TriMesh& mesh, const CameraIntrinsics& k, const RigidPose& camera_pose) {
  k.validate();
  const Mat3 r = camera_pose.rotation_matrix();
  simd::RigidTransform tf{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) tf.r[3 * i + j] = r(i, j);
    tf.t[i] = camera_pose.translation[i];
  }
  const auto buffer = simd::PointBuffer::from(mesh.vertices);
  const std::size_t n = mesh.vertices.size();
  std::vector<double> u(n), v(n), depth(n);
  simd::rigid_project(buffer.view(), tf, {k.f, k.cx, k.cy}, u, v, depth);

  Wireframe out;
  out.vertices_px.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (depth[i] > 1e-12) {
      out.vertices_px[i] = {u[i], v[i]};
    } else {
      out.behind.push_back(static_cast<std::uint32_t>(i));
    }
  }
  for (const Edge& e : edges(mesh)) {
    if (!out.is_behind(e.a) && !out.is_behind(e.b)) out.edges.push_back({e.a, e.b});
  }
  return out;
}

TwinScene::TwinScene(const CameraIntrinsics& k) : camera_(k) {
  camera_.validate();
  distance_ = camera_.f / static_cast<double>(camera_.width);
  const double w = camera_.width, h = camera_.height;
  plane_.width = 1.0;
  plane_.height = h / w;
  plane_.corners = {pixel_to_plane({0.0, 0.0}), pixel_to_plane({w, 0.0}), pixel_to_plane({0.0, h}),
                    pixel_to_plane({w, h})};
  plane_.center = pixel_to_plane({w / 2.0, h / 2.0});
}

Vec3 TwinScene::pixel_to_plane(const Pixel& px) const {
  // Plane point (x, y, 0) sits at camera-frame (x, -y, d).
  const double scale = distance_ / camera_.f;
  return {(px.u - camera_.cx) * scale, -(px.v - camera_.cy) * scale, 0.0};
}

Pixel TwinScene::world_to_pixel(const Vec3& p_w) const {
  const Mat4 tf = world_to_camera(distance_);
  const Vec3 p_c = tf.topLeftCorner<3, 3>() * p_w + tf.topRightCorner<3, 1>();
  return project_point(camera_, p_c);
}

void TwinScene::register_model(const std::string& id, TriMesh mesh) {
  mesh.validate();
  models_[id] = std::make_shared<const TriMesh>(std::move(mesh));
}

bool TwinScene::has_model(const std::string& id) const { return models_.contains(id); }

TwinScene::InstanceHandle TwinScene::place_model(const std::string& model_id, const Vec3& scale,
                                                 const RigidPose& world_pose) {
  if (!has_model(model_id)) throw TwinSpaceError("unknown model '" + model_id + "'");
  if (!(scale.array() > 0.0).all()) throw TwinSpaceError("model scale components must be positive");
  const double depth = to_camera_frame(world_pose, distance_).translation.z();
  if (!(depth > 1e-12)) {
    throw TwinSpaceError("model '" + model_id + "' placed at or behind the camera (camera-frame depth " +
                         std::to_string(depth) + " m)");
  }
  instances_.push_back({model_id, scale, world_pose});
  return instances_.size() - 1;
}

const TwinScene::Instance& TwinScene::instance(InstanceHandle h) const {
  if (h >= instances_.size()) throw TwinSpaceError("invalid instance handle");
  return instances_[h];
}

RigidPose TwinScene::extract_pose(InstanceHandle h) const { return to_camera_frame(instance(h).world_pose, distance_); }

TriMesh TwinScene::instance_mesh(InstanceHandle h) const {
  const Instance& inst = instance(h);
  return models_.at(inst.model_id)->scaled(inst.scale);
}

Wireframe TwinScene::secondary_project(InstanceHandle h) const {
  return project_wireframe(instance_mesh(h), camera_, extract_pose(h));
}

}  // namespace twinpose
