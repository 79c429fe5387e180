#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "twinpose/geometry.hpp"

namespace twinpose {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fewer than the five correspondences required for a unique pose.
class InsufficientConstraintsError : public SolverError {
 public:
  using SolverError::SolverError;
};

struct Correspondence {
  Vec3 object_point;
  Pixel image_point;
};

struct SolveReport {
  RigidPose pose;
  double rmse = 0.0;  ///< pixels
  int iterations = 0;
  bool converged = false;
  /// rmse at the start and after every accepted step.
  std::vector<double> rmse_trace;
};

struct SolverOptions {
  double initial_damping = 1e-3;
  double damping_up = 10.0;
  double damping_down = 10.0;
  int max_iterations = 200;
  double step_tolerance = 1e-12;
  double rmse_tolerance = 1e-10;
};

inline constexpr std::size_t kMinCorrespondences = 5;

/// Fixed world -> camera transform in which the solved pose is expressed.
/// `twin(d)` solves world-frame poses of the twin camera; `camera()` solves
/// camera-frame poses directly.
struct SolveFrame {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static SolveFrame twin(double d);
  static SolveFrame camera();
};

double reprojection_rmse(const RigidPose& pose, std::span<const Correspondence> corrs, const CameraIntrinsics& k,
                         const SolveFrame& frame);
double reprojection_rmse(const RigidPose& pose, std::span<const Correspondence> corrs, const CameraIntrinsics& k,
                         double d);

/// Levenberg-Marquardt over (translation, Euler angles) minimizing the sum of
/// squared pixel residuals. Throws InsufficientConstraintsError below five
/// correspondences and SolverError for collinear object points.
SolveReport solve_pose(std::span<const Correspondence> corrs, const CameraIntrinsics& k, const SolveFrame& frame,
                       const RigidPose& init, const SolverOptions& options = {});
SolveReport solve_pose(std::span<const Correspondence> corrs, const CameraIntrinsics& k, double d,
                       const RigidPose& init, const SolverOptions& options = {});

/// Permutations of `points` induced by non-identity proper rigid motions
/// that map the set onto itself within `tol`. Brute force over motions
/// determined by pairings of a fixed non-collinear triple.
std::vector<std::vector<std::size_t>> point_set_symmetries(std::span<const Vec3> points, double tol = 1e-6);
bool is_asymmetric(std::span<const Vec3> points, double tol = 1e-6);

struct UniquenessResult {
  bool unique = false;
  std::size_t restarts = 0;
  std::size_t solutions = 0;  ///< converged restarts reaching the minimal rmse
  std::size_t clusters = 0;
  double translation_spread = 0.0;  ///< max distance to the best solution, m
  double rotation_spread = 0.0;     ///< max geodesic angle to the best solution, rad
  std::vector<RigidPose> cluster_poses;
};

struct UniquenessOptions {
  double cluster_translation_tol = 1e-4;
  double cluster_rotation_tol = 1e-4;
  /// A converged restart counts as a solution if its rmse is within this
  /// many pixels of the best restart.
  double solution_rmse_margin = 1e-6;
  SolverOptions solver;
};

/// Multi-start check that the projection of `object_points` under `pose`
/// (world frame of the twin camera at distance d) determines the pose. The
/// image is treated as an unlabeled point set: restarts cycle through the
/// identity labeling and every labeling induced by a self-symmetry of the
/// point set. Restart r uses seed (seed, r). Throws SolverError when no
/// restart converges.
UniquenessResult uniqueness_probe(std::span<const Vec3> object_points, const RigidPose& pose,
                                  const CameraIntrinsics& k, double d, std::size_t restarts, std::uint64_t seed,
                                  const UniquenessOptions& options = {});

}  // namespace twinpose
