#include "twinpose/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace twinpose {

namespace {

constexpr double kMinDepth = 1e-12;

Quaternion multiply(const Quaternion& a, const Quaternion& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

}  // namespace

double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  if (r > kPi) r -= 2.0 * kPi;
  return r;
}

EulerAngles EulerAngles::canonical() const { return {wrap_angle(rx), wrap_angle(ry), wrap_angle(rz)}; }

double Quaternion::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

Quaternion Quaternion::canonical() const {
  // q and -q are the same rotation; pick w >= 0, breaking w == 0 ties on the
  // first non-zero vector component.
  bool flip = w < 0.0;
  if (w == 0.0) {
    if (x != 0.0) {
      flip = x < 0.0;
    } else if (y != 0.0) {
      flip = y < 0.0;
    } else {
      flip = z < 0.0;
    }
  }
  return flip ? Quaternion{-w, -x, -y, -z} : *this;
}

Mat3 RigidPose::rotation_matrix() const { return euler_to_matrix(rotation); }

Quaternion RigidPose::quaternion() const { return euler_to_quaternion(rotation); }

Vec3 RigidPose::apply(const Vec3& p) const { return rotation_matrix() * p + translation; }

void CameraIntrinsics::validate() const {
  if (!std::isfinite(f) || !std::isfinite(cx) || !std::isfinite(cy)) {
    throw GeometryError("camera intrinsics must be finite");
  }
  if (!(f > 0.0)) throw GeometryError("focal length must be positive");
  if (width < 1 || height < 1) throw GeometryError("image width and height must be >= 1");
}

Mat3 rotation_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << 1, 0, 0, 0, c, -s, 0, s, c;
  return r;
}

Mat3 rotation_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << c, 0, s, 0, 1, 0, -s, 0, c;
  return r;
}

Mat3 rotation_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

Mat3 euler_to_matrix(const EulerAngles& e) { return rotation_x(e.rx) * rotation_y(e.ry) * rotation_z(e.rz); }

EulerAngles matrix_to_euler(const Mat3& r) {
  // R = Rx Ry Rz:  R(0,2) = sin ry, R(1,2) = -sin rx cos ry, R(2,2) = cos rx cos ry,
  //                R(0,1) = -cos ry sin rz, R(0,0) = cos ry cos rz.
  const double cy = std::hypot(r(0, 0), r(0, 1));
  EulerAngles e;
  e.ry = std::atan2(r(0, 2), cy);
  if (cy > 1e-12) {
    e.rx = std::atan2(-r(1, 2), r(2, 2));
    e.rz = std::atan2(-r(0, 1), r(0, 0));
  } else {
    e.rz = 0.0;
    e.rx = std::atan2(r(2, 1), r(1, 1));
  }
  return e.canonical();
}

Quaternion euler_to_quaternion(const EulerAngles& e) {
  const Quaternion qx{std::cos(e.rx / 2), std::sin(e.rx / 2), 0, 0};
  const Quaternion qy{std::cos(e.ry / 2), 0, std::sin(e.ry / 2), 0};
  const Quaternion qz{std::cos(e.rz / 2), 0, 0, std::sin(e.rz / 2)};
  return multiply(multiply(qx, qy), qz).canonical();
}

Mat3 quaternion_to_matrix(const Quaternion& q) {
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),  //
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),   //
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

Quaternion matrix_to_quaternion(const Mat3& r) {
  Quaternion q;
  const double trace = r.trace();
  if (trace > 0.0) {
    const double s = 2.0 * std::sqrt(1.0 + trace);
    q = {0.25 * s, (r(2, 1) - r(1, 2)) / s, (r(0, 2) - r(2, 0)) / s, (r(1, 0) - r(0, 1)) / s};
  } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2));
    q = {(r(2, 1) - r(1, 2)) / s, 0.25 * s, (r(0, 1) + r(1, 0)) / s, (r(0, 2) + r(2, 0)) / s};
  } else if (r(1, 1) > r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2));
    q = {(r(0, 2) - r(2, 0)) / s, (r(0, 1) + r(1, 0)) / s, 0.25 * s, (r(1, 2) + r(2, 1)) / s};
  } else {
    const double s = 2.0 * std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1));
    q = {(r(1, 0) - r(0, 1)) / s, (r(0, 2) + r(2, 0)) / s, (r(1, 2) + r(2, 1)) / s, 0.25 * s};
  }
  const double n = q.norm();
  return Quaternion{q.w / n, q.x / n, q.y / n, q.z / n}.canonical();
}

EulerAngles quaternion_to_euler(const Quaternion& q) {
  const double n = q.norm();
  if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-6) {
    throw GeometryError("quaternion is not unit norm (|q| = " + std::to_string(n) + ")");
  }
  return matrix_to_euler(quaternion_to_matrix({q.w / n, q.x / n, q.y / n, q.z / n}));
}

Pixel project_point(const CameraIntrinsics& k, const Vec3& p_c) {
  const double depth = p_c.z();
  if (!(depth > kMinDepth)) throw BehindCameraError("point at or behind the camera plane");
  return {k.f * p_c.x() / depth + k.cx, k.f * p_c.y() / depth + k.cy};
}

Mat3 camera_convention_rotation() { return Vec3(1.0, -1.0, -1.0).asDiagonal(); }

Mat4 world_to_camera(double d) {
  const Mat3 r = camera_convention_rotation();
  Mat4 t = Mat4::Identity();
  t.topLeftCorner<3, 3>() = r;
  t.topRightCorner<3, 1>() = -(r * Vec3(0.0, 0.0, d));
  return t;
}

Mat4 camera_to_world(double d) {
  const Mat3 r = camera_convention_rotation();
  Mat4 t = Mat4::Identity();
  t.topLeftCorner<3, 3>() = r.transpose();
  t.topRightCorner<3, 1>() = Vec3(0.0, 0.0, d);
  return t;
}

Mat3 literal_world_to_camera_rotation() {
  Mat3 flip, quarter;
  flip << 1, 0, 0, 0, 1, 0, 0, 0, -1;
  quarter << 0, 1, 0, -1, 0, 0, 0, 0, 1;
  return flip * quarter * quarter;
}

RigidPose to_camera_frame(const RigidPose& world_pose, double d) {
  const Mat3 r = camera_convention_rotation();
  RigidPose out;
  out.translation = r * (world_pose.translation - Vec3(0.0, 0.0, d));
  out.rotation = matrix_to_euler(r * world_pose.rotation_matrix());
  return out;
}

RigidPose to_world_frame(const RigidPose& camera_pose, double d) {
  const Mat3 rt = camera_convention_rotation().transpose();
  RigidPose out;
  out.translation = rt * camera_pose.translation + Vec3(0.0, 0.0, d);
  out.rotation = matrix_to_euler(rt * camera_pose.rotation_matrix());
  return out;
}

ObjectToImage::ObjectToImage(const CameraIntrinsics& k, const Mat3& rotation, const Vec3& translation)
    : camera_(k), rotation_(rotation), translation_(translation) {
  camera_.validate();
}

Vec3 ObjectToImage::to_camera(const Vec3& p_o) const { return rotation_ * p_o + translation_; }

Pixel ObjectToImage::operator()(const Vec3& p_o) const { return project_point(camera_, to_camera(p_o)); }

ObjectToImage object_to_image(const CameraIntrinsics& k, const RigidPose& world_pose, double d) {
  const Mat3 r = camera_convention_rotation();
  return ObjectToImage(k, r * world_pose.rotation_matrix(), r * (world_pose.translation - Vec3(0.0, 0.0, d)));
}

ObjectToImage object_to_image_camera_frame(const CameraIntrinsics& k, const RigidPose& camera_pose) {
  return ObjectToImage(k, camera_pose.rotation_matrix(), camera_pose.translation);
}

double rotation_angle_between(const Mat3& a, const Mat3& b) {
  const double c = std::clamp(((a.transpose() * b).trace() - 1.0) / 2.0, -1.0, 1.0);
  // acos loses precision near 0; recover small angles from the skew part.
  const Mat3 rel = a.transpose() * b;
  const Vec3 axis(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
  return std::atan2(axis.norm() / 2.0, c);
}

bool is_finite(const Vec3& v) { return v.allFinite(); }

}  // namespace twinpose
