#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace twinpose {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat34 = Eigen::Matrix<double, 3, 4>;

inline constexpr double kPi = 3.14159265358979323846;

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a point sits at or behind the camera plane (depth <= 1e-12).
class BehindCameraError : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

/// Rotation about x, then y, then z in the matrix product Rx * Ry * Rz.
/// Radians; canonical storage range is (-pi, pi].
struct EulerAngles {
  double rx = 0.0;
  double ry = 0.0;
  double rz = 0.0;

  EulerAngles canonical() const;
};

/// Unit quaternion, canonical sign w >= 0.
struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const;
  Quaternion canonical() const;
};

struct RigidPose {
  Vec3 translation = Vec3::Zero();
  EulerAngles rotation;

  Mat3 rotation_matrix() const;
  Quaternion quaternion() const;
  /// x -> R x + t
  Vec3 apply(const Vec3& p) const;
};

struct CameraIntrinsics {
  double f = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  /// Throws GeometryError unless f > 0, width/height >= 1 and all finite.
  void validate() const;
};

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

Mat3 rotation_x(double a);
Mat3 rotation_y(double a);
Mat3 rotation_z(double a);

Mat3 euler_to_matrix(const EulerAngles& e);
/// Inverse of euler_to_matrix for a proper rotation. At gimbal lock
/// (|ry| = pi/2) rz is set to zero.
EulerAngles matrix_to_euler(const Mat3& r);

Quaternion euler_to_quaternion(const EulerAngles& e);
/// Throws GeometryError if |q| deviates from 1 by more than 1e-6.
EulerAngles quaternion_to_euler(const Quaternion& q);
Mat3 quaternion_to_matrix(const Quaternion& q);
Quaternion matrix_to_quaternion(const Mat3& r);

/// Pinhole projection of a camera-frame point; the scale factor of the
/// homogeneous projection is the camera-frame depth p_c.z().
Pixel project_point(const CameraIntrinsics& k, const Vec3& p_c);

/// Twin-space camera orientation: optical axis along -Z_w, image v along -Y_w.
Mat3 camera_convention_rotation();

/// Homogeneous world -> camera transform for the twin camera placed at
/// (0, 0, d) looking down -Z_w.
Mat4 world_to_camera(double d);
Mat4 camera_to_world(double d);

/// diag(1,1,-1) * A * A with A = [0 1 0; -1 0 0; 0 0 1]. Evaluates to
/// -I, a reflection (det -1), so it is never used for projection. Exposed
/// for audits of the convention choice.
Mat3 literal_world_to_camera_rotation();

/// World-frame (twin-space) pose to the camera frame of the twin camera.
RigidPose to_camera_frame(const RigidPose& world_pose, double d);
RigidPose to_world_frame(const RigidPose& camera_pose, double d);

/// Object-frame point -> pixel for one object pose, with the chain
/// rotation/translation into the camera frame folded into (rotation, translation).
class ObjectToImage {
 public:
  ObjectToImage(const CameraIntrinsics& k, const Mat3& rotation, const Vec3& translation);

  /// Throws BehindCameraError when the transformed point has depth <= 1e-12.
  Pixel operator()(const Vec3& p_o) const;
  Vec3 to_camera(const Vec3& p_o) const;

  const CameraIntrinsics& camera() const { return camera_; }
  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

 private:
  CameraIntrinsics camera_;
  Mat3 rotation_;
  Vec3 translation_;
};

/// Mapping for an object posed in the twin-space world frame, seen by the
/// twin camera at distance d.
ObjectToImage object_to_image(const CameraIntrinsics& k, const RigidPose& world_pose, double d);

/// Mapping for an object whose pose is already expressed in the camera frame.
ObjectToImage object_to_image_camera_frame(const CameraIntrinsics& k, const RigidPose& camera_pose);

/// Geodesic angle between two rotations, in [0, pi].
double rotation_angle_between(const Mat3& a, const Mat3& b);

bool is_finite(const Vec3& v);

}  // namespace twinpose
