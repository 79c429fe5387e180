#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>

#include "twinpose/geometry.hpp"
#include "twinpose/mesh.hpp"

namespace twinpose {

class LossError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Weights of the model loss (alpha1..alpha5) and the pose loss (gamma1, gamma2).
struct LossWeights {
  double alpha1 = 0.0;  ///< point scales and centers
  double alpha2 = 0.0;  ///< chamfer
  double alpha3 = 0.0;  ///< mesh edge
  double alpha4 = 0.0;  ///< normal consistency
  double alpha5 = 0.0;  ///< Laplacian smoothing
  double gamma1 = 0.0;  ///< classification
  double gamma2 = 0.0;  ///< 6DoF

  static LossWeights kitti();
  static LossWeights linemod();
  /// "kitti" or "linemod"; throws LossError otherwise.
  static LossWeights preset(const std::string& name);

  /// Throws LossError unless every weight is finite and non-negative.
  void validate() const;

  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

/// key=value lines, '#' comments. `preset` (kitti|linemod) sets the base;
/// alpha1..alpha5, gamma1, gamma2 override individual weights.
LossWeights parse_weights_config(std::istream& in);
LossWeights parse_weights_config(const std::string& text);
std::string format_weights_config(const LossWeights& w);

/// Decoder-side description of one model.
struct ModelPrediction {
  SampledCloud points;
  Vec3 scale = Vec3::Ones();
  Vec3 center = Vec3::Zero();
  TriMesh mesh;
};

/// Terms of the model loss, unweighted.
struct ModelLossTerms {
  double psc = 0.0;
  double chamfer = 0.0;
  double edge = 0.0;
  double normal = 0.0;
  double laplacian = 0.0;
};

/// Mean squared nearest-neighbor distance in both directions.
double chamfer(std::span<const Vec3> g, std::span<const Vec3> p);
double chamfer(const SampledCloud& g, const SampledCloud& p);

/// Mean squared edge length.
double mesh_edge_loss(const TriMesh& m);
double mesh_edge_loss(std::span<const Vec3> vertices, std::span<const Edge> edge_set);
/// Mean of 1 - cos(n_i, n_j) over faces sharing an edge.
double normal_consistency_loss(const TriMesh& m);
/// Sum over vertices of the L2 norm of the mean neighbor offset.
double laplacian_smoothing_loss(const TriMesh& m);
/// One vertex's term: |mean_j (n_j - v)|. Throws for an empty neighbor list.
double laplacian_term(const Vec3& vertex, std::span<const Vec3> neighbors);

/// Mean absolute difference over each model's (scale, center) 6-vector,
/// averaged over models.
double psc_loss(std::span<const ModelPrediction> pred, std::span<const ModelPrediction> gt);

/// All five terms for matched predictions (mesh terms on the predicted meshes).
ModelLossTerms model_loss_terms(std::span<const ModelPrediction> pred, std::span<const ModelPrediction> gt);
double model_loss(const ModelLossTerms& terms, const LossWeights& w);

inline constexpr std::size_t kDefaultFpsPoints = 8;

/// Mean distance between the k farthest-point-sampled vertices of the model
/// under the two poses.
double fps_loss(const TriMesh& gt_model, const RigidPose& pose_p, const RigidPose& pose_g,
                std::size_t k = kDefaultFpsPoints);
/// fps_loss + |t_p - t_g|_1 + |q_p - q_g|_1 with sign-canonical quaternions.
double sixdof_loss(const TriMesh& gt_model, const RigidPose& pose_p, const RigidPose& pose_g,
                   std::size_t k = kDefaultFpsPoints);

/// -log(p[label]) after clamping entries to >= 1e-12. The distribution must
/// be non-negative and sum to 1 within 1e-9.
double cross_entropy(std::span<const double> distribution, std::size_t label);
double pose_loss(double classification, double sixdof, const LossWeights& w);
double total_loss(double detection, double model, double pose);

}  // namespace twinpose
