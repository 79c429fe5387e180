#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "twinpose/geometry.hpp"
#include "twinpose/mesh.hpp"

namespace twinpose {

class TwinSpaceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Captured image placed in the X_w O_w Y_w plane, one world unit wide.
/// Corners are ordered as the pixel corners (0,0), (w,0), (0,h), (w,h).
struct ImagePlane {
  double width = 1.0;
  double height = 0.0;
  Vec3 center = Vec3::Zero();
  std::array<Vec3, 4> corners;
};

/// Projected wireframe of one mesh. Vertices behind the camera keep an
/// unspecified pixel and are listed in `behind`; edges touching them are
/// dropped.
struct Wireframe {
  std::vector<Pixel> vertices_px;
  std::vector<std::array<std::uint32_t, 2>> edges;
  std::vector<std::uint32_t> behind;

  bool is_behind(std::uint32_t vertex) const;
};

/// Projects every vertex of an (already scaled) mesh posed in the camera
/// frame, through the batch kernel.
Wireframe project_wireframe(const TriMesh& mesh, const CameraIntrinsics& k, const RigidPose& camera_pose);

/// The virtual twin space: a camera at (0, 0, d) looking down -Z_w whose
/// field of view is exactly filled by the one-unit-wide image plane at z = 0.
class TwinScene {
 public:
  using InstanceHandle = std::size_t;

  struct Instance {
    std::string model_id;
    Vec3 scale = Vec3::Ones();
    RigidPose world_pose;
  };

  /// d = f / width.
  explicit TwinScene(const CameraIntrinsics& k);

  const CameraIntrinsics& camera() const { return camera_; }
  double twin_distance() const { return distance_; }
  const ImagePlane& image_plane() const { return plane_; }

  /// Back-projects a pixel onto the image plane (z = 0).
  Vec3 pixel_to_plane(const Pixel& px) const;
  /// Projects a world point through the twin camera.
  Pixel world_to_pixel(const Vec3& p_w) const;

  void register_model(const std::string& id, TriMesh mesh);
  bool has_model(const std::string& id) const;

  /// Throws TwinSpaceError for unknown models or a center at/behind the camera.
  InstanceHandle place_model(const std::string& model_id, const Vec3& scale, const RigidPose& world_pose);
  const Instance& instance(InstanceHandle h) const;
  std::size_t instance_count() const { return instances_.size(); }

  /// Pose in the virtual-camera frame.
  RigidPose extract_pose(InstanceHandle h) const;
  RigidPose world_pose(InstanceHandle h) const { return instance(h).world_pose; }

  Wireframe secondary_project(InstanceHandle h) const;
  /// The instance's mesh after scaling, in the object frame.
  TriMesh instance_mesh(InstanceHandle h) const;

 private:
  CameraIntrinsics camera_;
  double distance_;
  ImagePlane plane_;
  std::map<std::string, std::shared_ptr<const TriMesh>> models_;
  std::vector<Instance> instances_;
};

}  // namespace twinpose
