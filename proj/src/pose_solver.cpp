#include "twinpose/pose_solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>

namespace twinpose {

namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

constexpr double kMinDepth = 1e-12;
constexpr double kGimbalMargin = 1e-3;

Vec6 to_params(const RigidPose& p) {
  Vec6 x;
  x << p.translation, p.rotation.rx, p.rotation.ry, p.rotation.rz;
  return x;
}

RigidPose from_params(const Vec6& x) { return {x.head<3>(), {x[3], x[4], x[5]}}; }

Mat3 d_rotation_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << 0, 0, 0, 0, -s, -c, 0, c, -s;
  return r;
}

Mat3 d_rotation_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << -s, 0, c, 0, 0, 0, -c, 0, -s;
  return r;
}

Mat3 d_rotation_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << -s, -c, 0, c, -s, 0, 0, 0, 0;
  return r;
}

// Sum of squared residuals; +inf when any point is at/behind the camera.
double cost_at(const Vec6& x, std::span<const Correspondence> corrs, const CameraIntrinsics& k,
               const SolveFrame& frame) {
  const RigidPose pose = from_params(x);
  const Mat3 r = frame.rotation * pose.rotation_matrix();
  const Vec3 t = frame.rotation * pose.translation + frame.translation;
  double cost = 0.0;
  for (const auto& c : corrs) {
    const Vec3 p = r * c.object_point + t;
    if (!(p.z() > kMinDepth)) return std::numeric_limits<double>::infinity();
    const double du = k.f * p.x() / p.z() + k.cx - c.image_point.u;
    const double dv = k.f * p.y() / p.z() + k.cy - c.image_point.v;
    cost += du * du + dv * dv;
  }
  return cost;
}

// Residuals (2n) and analytic Jacobian (2n x 6).
void linearize(const Vec6& x, std::span<const Correspondence> corrs, const CameraIntrinsics& k,
               const SolveFrame& frame, Eigen::VectorXd& residual, Eigen::MatrixXd& jacobian) {
  const Mat3 rx = rotation_x(x[3]), ry = rotation_y(x[4]), rz = rotation_z(x[5]);
  const Mat3 rot = rx * ry * rz;
  const std::array<Mat3, 3> d_rot = {frame.rotation * d_rotation_x(x[3]) * ry * rz,
                                     frame.rotation * rx * d_rotation_y(x[4]) * rz,
                                     frame.rotation * rx * ry * d_rotation_z(x[5])};
  const Mat3 r = frame.rotation * rot;
  const Vec3 t = frame.rotation * x.head<3>() + frame.translation;
  const auto n = corrs.size();
  residual.resize(2 * n);
  jacobian.resize(2 * n, 6);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& po = corrs[i].object_point;
    const Vec3 p = r * po + t;
    const double iz = 1.0 / p.z();
    residual[2 * i] = k.f * p.x() / p.z() + k.cx - corrs[i].image_point.u;
    residual[2 * i + 1] = k.f * p.y() / p.z() + k.cy - corrs[i].image_point.v;
    Eigen::Matrix<double, 2, 3> dpix;
    dpix << k.f * iz, 0.0, -k.f * p.x() * iz * iz, 0.0, k.f * iz, -k.f * p.y() * iz * iz;
    jacobian.block<2, 3>(2 * i, 0) = dpix * frame.rotation;
    for (int a = 0; a < 3; ++a) jacobian.block<2, 1>(2 * i, 3 + a) = dpix * (d_rot[a] * po);
  }
}

void check_solvable(std::span<const Correspondence> corrs) {
  if (corrs.size() < kMinCorrespondences) {
    throw InsufficientConstraintsError("pose solving needs at least " + std::to_string(kMinCorrespondences) +
                                       " correspondences, got " + std::to_string(corrs.size()));
  }
  for (const auto& c : corrs) {
    if (!is_finite(c.object_point) || !std::isfinite(c.image_point.u) || !std::isfinite(c.image_point.v)) {
      throw SolverError("correspondences must be finite");
    }
  }
  // Collinear object points leave the rotation about their line free.
  const Vec3& a = corrs.front().object_point;
  std::size_t far = 0;
  double far_d = 0.0;
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    const double d = (corrs[i].object_point - a).norm();
    if (d > far_d) {
      far_d = d;
      far = i;
    }
  }
  if (far_d <= 1e-9) throw SolverError("object points are coincident");
  const Vec3 dir = (corrs[far].object_point - a) / far_d;
  const bool collinear = std::all_of(corrs.begin(), corrs.end(), [&](const Correspondence& c) {
    return (c.object_point - a).cross(dir).norm() <= 1e-9 * std::max(1.0, far_d);
  });
  if (collinear) throw SolverError("object points are collinear");
}

RigidPose canonical_pose(const RigidPose& p) { return {p.translation, matrix_to_euler(p.rotation_matrix())}; }

}  // namespace

SolveFrame SolveFrame::twin(double d) {
  const Mat4 tf = world_to_camera(d);
  return {tf.topLeftCorner<3, 3>(), tf.topRightCorner<3, 1>()};
}

SolveFrame SolveFrame::camera() { return {}; }

double reprojection_rmse(const RigidPose& pose, std::span<const Correspondence> corrs, const CameraIntrinsics& k,
                         const SolveFrame& frame) {
  if (corrs.empty()) throw SolverError("reprojection error needs at least one correspondence");
  const ObjectToImage map(k, frame.rotation * pose.rotation_matrix(),
                          frame.rotation * pose.translation + frame.translation);
  double sum = 0.0;
  for (const auto& c : corrs) {
    const Pixel px = map(c.object_point);
    const double du = px.u - c.image_point.u, dv = px.v - c.image_point.v;
    sum += du * du + dv * dv;
  }
  return std::sqrt(sum / static_cast<double>(corrs.size()));
}

double reprojection_rmse(const RigidPose& pose, std::span<const Correspondence> corrs, const CameraIntrinsics& k,
                         double d) {
  return reprojection_rmse(pose, corrs, k, SolveFrame::twin(d));
}

SolveReport solve_pose(std::span<const Correspondence> corrs, const CameraIntrinsics& k, const SolveFrame& frame,
                       const RigidPose& init, const SolverOptions& options) {
  k.validate();
  check_solvable(corrs);
  if (!is_finite(init.translation) || !std::isfinite(init.rotation.rx) || !std::isfinite(init.rotation.ry) ||
      !std::isfinite(init.rotation.rz)) {
    throw SolverError("initial pose must be finite");
  }

  Vec6 x = to_params(canonical_pose(init));
  // Keep the start away from the Euler singularity at ry = +-pi/2.
  if (std::abs(std::abs(x[4]) - kPi / 2) < kGimbalMargin) x[4] -= std::copysign(2.0 * kGimbalMargin, x[4]);

  const auto n = static_cast<double>(corrs.size());
  double cost = cost_at(x, corrs, k, frame);
  if (!std::isfinite(cost)) throw BehindCameraError("initial pose places correspondences behind the camera");

  SolveReport report;
  report.rmse_trace.push_back(std::sqrt(cost / n));
  double lambda = options.initial_damping;
  Eigen::VectorXd residual;
  Eigen::MatrixXd jacobian;
  bool done = false;
  while (!done && report.iterations < options.max_iterations) {
    if (std::sqrt(cost / n) < options.rmse_tolerance) {
      report.converged = true;
      break;
    }
    linearize(x, corrs, k, frame, residual, jacobian);
    const Mat6 normal = jacobian.transpose() * jacobian;
    const Vec6 gradient = jacobian.transpose() * residual;
    while (report.iterations < options.max_iterations) {
      Mat6 damped = normal;
      for (int i = 0; i < 6; ++i) damped(i, i) += lambda * std::max(normal(i, i), 1e-12);
      const Vec6 step = damped.ldlt().solve(-gradient);
      if (!step.allFinite()) {
        lambda *= options.damping_up;
        ++report.iterations;
        continue;
      }
      if (step.norm() < options.step_tolerance) {
        report.converged = true;
        done = true;
        break;
      }
      const Vec6 candidate = x + step;
      const double candidate_cost = cost_at(candidate, corrs, k, frame);
      ++report.iterations;
      if (candidate_cost < cost) {
        x = candidate;
        cost = candidate_cost;
        report.rmse_trace.push_back(std::sqrt(cost / n));
        lambda = std::max(lambda / options.damping_down, 1e-15);
        break;
      }
      lambda *= options.damping_up;
      if (lambda > 1e20) {
        // No descent direction left at machine precision.
        report.converged = true;
        done = true;
        break;
      }
    }
  }
  if (!report.converged && std::sqrt(cost / n) < options.rmse_tolerance) report.converged = true;
  report.pose = canonical_pose(from_params(x));
  report.rmse = std::sqrt(cost / n);
  return report;
}

SolveReport solve_pose(std::span<const Correspondence> corrs, const CameraIntrinsics& k, double d,
                       const RigidPose& init, const SolverOptions& options) {
  return solve_pose(corrs, k, SolveFrame::twin(d), init, options);
}

std::vector<std::vector<std::size_t>> point_set_symmetries(std::span<const Vec3> points, double tol) {
  const std::size_t n = points.size();
  std::vector<std::vector<std::size_t>> out;
  if (n < 3) return out;

  // Reference triple: p0, the point farthest from it, and the point farthest
  // from that line.
  std::size_t i1 = 0, i2 = 0;
  double best = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    if (const double d = (points[i] - points[0]).norm(); d > best) {
      best = d;
      i1 = i;
    }
  }
  if (best <= tol) return out;
  const Vec3 axis = (points[i1] - points[0]).normalized();
  best = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    if (const double d = (points[i] - points[0]).cross(axis).norm(); d > best) {
      best = d;
      i2 = i;
    }
  }
  if (best <= tol) return out;  // collinear sets have a continuous symmetry; not handled

  const auto frame_of = [&](std::size_t a, std::size_t b, std::size_t c) {
    const Vec3 e0 = (points[b] - points[a]).normalized();
    const Vec3 e1 = (points[c] - points[a] - (points[c] - points[a]).dot(e0) * e0).normalized();
    Mat3 f;
    f << e0, e1, e0.cross(e1);
    return f;
  };
  const Mat3 ref = frame_of(0, i1, i2);
  const double d01 = (points[i1] - points[0]).norm();
  const double d02 = (points[i2] - points[0]).norm();
  const double d12 = (points[i2] - points[i1]).norm();
  const double dist_tol = 4.0 * tol;

  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (b == a || std::abs((points[b] - points[a]).norm() - d01) > dist_tol) continue;
      for (std::size_t c = 0; c < n; ++c) {
        if (c == a || c == b) continue;
        if (std::abs((points[c] - points[a]).norm() - d02) > dist_tol ||
            std::abs((points[c] - points[b]).norm() - d12) > dist_tol) {
          continue;
        }
        const Mat3 rot = frame_of(a, b, c) * ref.transpose();
        const Vec3 trans = points[a] - rot * points[0];
        std::vector<std::size_t> perm(n);
        std::vector<bool> used(n, false);
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) {
          const Vec3 q = rot * points[i] + trans;
          ok = false;
          for (std::size_t j = 0; j < n; ++j) {
            if (!used[j] && (points[j] - q).norm() <= tol * 10.0) {
              perm[i] = j;
              used[j] = true;
              ok = true;
              break;
            }
          }
        }
        if (!ok) continue;
        bool identity = true;
        for (std::size_t i = 0; i < n; ++i) identity = identity && perm[i] == i;
        if (!identity && std::find(out.begin(), out.end(), perm) == out.end()) out.push_back(std::move(perm));
      }
    }
  }
  return out;
}

bool is_asymmetric(std::span<const Vec3> points, double tol) { return point_set_symmetries(points, tol).empty(); }

UniquenessResult uniqueness_probe(std::span<const Vec3> object_points, const RigidPose& pose,
                                  const CameraIntrinsics& k, double d, std::size_t restarts, std::uint64_t seed,
                                  const UniquenessOptions& options) {
  if (restarts == 0) throw SolverError("uniqueness probe needs at least one restart");
  if (object_points.size() < kMinCorrespondences) {
    throw InsufficientConstraintsError("uniqueness probe needs at least " + std::to_string(kMinCorrespondences) +
                                       " points");
  }
  const ObjectToImage map = object_to_image(k, pose, d);
  std::vector<Pixel> observed;
  observed.reserve(object_points.size());
  for (const auto& p : object_points) observed.push_back(map(p));

  std::vector<std::vector<std::size_t>> labelings;
  std::vector<std::size_t> identity(object_points.size());
  for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = i;
  labelings.push_back(identity);
  for (auto& s : point_set_symmetries(object_points)) labelings.push_back(std::move(s));

  const double true_depth = to_camera_frame(pose, d).translation.z();
  const SolveFrame frame = SolveFrame::twin(d);

  std::vector<SolveReport> runs(restarts);
  for (std::size_t r = 0; r < restarts; ++r) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(r)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto& labeling = labelings[r % labelings.size()];
    std::vector<Correspondence> corrs(object_points.size());
    for (std::size_t i = 0; i < corrs.size(); ++i) corrs[i] = {object_points[i], observed[labeling[i]]};

    // Random start inside the frustum: a random pixel back-projected to a
    // depth within [0.5, 1.5] of the true depth, with a random orientation.
    const double depth = true_depth * (0.5 + unit(rng));
    const double u = unit(rng) * k.width, v = unit(rng) * k.height;
    RigidPose init_cam;
    init_cam.translation = {(u - k.cx) * depth / k.f, (v - k.cy) * depth / k.f, depth};
    init_cam.rotation = {kPi * (2.0 * unit(rng) - 1.0), 0.5 * kPi * (2.0 * unit(rng) - 1.0) * 0.98,
                         kPi * (2.0 * unit(rng) - 1.0)};
    try {
      runs[r] = solve_pose(corrs, k, frame, to_world_frame(init_cam, d), options.solver);
    } catch (const BehindCameraError&) {
      runs[r].converged = false;
      runs[r].rmse = std::numeric_limits<double>::infinity();
    }
  }

  UniquenessResult result;
  result.restarts = restarts;
  double best_rmse = std::numeric_limits<double>::infinity();
  std::size_t best = restarts;
  for (std::size_t r = 0; r < restarts; ++r) {
    if (runs[r].converged && runs[r].rmse < best_rmse) {
      best_rmse = runs[r].rmse;
      best = r;
    }
  }
  if (best == restarts) throw SolverError("uniqueness probe: every restart diverged");

  const Mat3 best_rot = runs[best].pose.rotation_matrix();
  for (std::size_t r = 0; r < restarts; ++r) {
    const SolveReport& run = runs[r];
    if (!run.converged || run.rmse > best_rmse + options.solution_rmse_margin) continue;
    ++result.solutions;
    const Mat3 rot = run.pose.rotation_matrix();
    result.translation_spread =
        std::max(result.translation_spread, (run.pose.translation - runs[best].pose.translation).norm());
    result.rotation_spread = std::max(result.rotation_spread, rotation_angle_between(rot, best_rot));
    const bool known = std::any_of(result.cluster_poses.begin(), result.cluster_poses.end(), [&](const RigidPose& c) {
      return (c.translation - run.pose.translation).norm() <= options.cluster_translation_tol &&
             rotation_angle_between(c.rotation_matrix(), rot) <= options.cluster_rotation_tol;
    });
    if (!known) result.cluster_poses.push_back(run.pose);
  }
  result.clusters = result.cluster_poses.size();
  result.unique = result.clusters == 1;
  return result;
}

}  // namespace twinpose
