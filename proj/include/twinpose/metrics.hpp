#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "twinpose/annodata.hpp"
#include "twinpose/geometry.hpp"
#include "twinpose/json_format.hpp"

namespace twinpose {

/// Per-axis labeling agreement: exp(-|dt|) for translation and cos(dr) for
/// rotation.
struct LabelingScores {
  double iota_x = 1.0, iota_y = 1.0, iota_z = 1.0;
  double alpha_rx = 1.0, alpha_ry = 1.0, alpha_rz = 1.0;
};

LabelingScores labeling_scores(const RigidPose& label, const RigidPose& gt);

/// exp(-|p - g|).
double gaussian_translation(const Vec3& predicted, const Vec3& ground_truth);

/// Minimal absolute angular difference in [0, pi].
double angular_difference(double a, double b);

struct EulerErrors {
  double rx = 0.0, ry = 0.0, rz = 0.0;
};

EulerErrors euler_abs_errors(const EulerAngles& predicted, const EulerAngles& ground_truth);

inline constexpr double kAddThresholdFraction = 0.1;

/// Average distance between model points under the two poses.
double add_distance(std::span<const Vec3> points, const RigidPose& pose_p, const RigidPose& pose_g);
/// add < 10% of the diameter.
bool add_accept(double add, double diameter);

struct PoseErrorRecord {
  std::string class_name;
  double iota = 1.0;
  double eta_rx = 0.0, eta_ry = 0.0, eta_rz = 0.0;
  double translation_error = 0.0;  ///< meters
  double add = 0.0;
  bool add_accepted = true;
  double l6d = 0.0;  ///< 6DoF loss of the prediction
};

/// Scores a predicted pose against ground truth on a (scaled) model mesh.
PoseErrorRecord evaluate_pose(const std::string& class_name, const TriMesh& model, const RigidPose& predicted,
                              const RigidPose& ground_truth);

struct ReportRow {
  std::string name;
  double iota = 0.0;
  double eta_rx = 0.0, eta_ry = 0.0, eta_rz = 0.0;
  double add = 0.0;
  double add_accuracy = 0.0;  ///< percent of records accepted
  double l6d = 0.0;
  std::size_t count = 0;
};

struct MetricsReport {
  std::vector<ReportRow> classes;  ///< sorted by class name
  ReportRow mean;                  ///< over all records, not over classes
};

/// Throws std::invalid_argument for an empty record list.
MetricsReport aggregate_report(std::span<const PoseErrorRecord> records);

Json report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const Json& j);
std::string format_report_table(const MetricsReport& report);

struct DatasetStats {
  std::size_t frames = 0;
  std::size_t objects = 0;
  double max_diameter = 0.0;         ///< meters
  double max_camera_distance = 0.0;  ///< meters
};

/// Throws DataError for model ids missing from the registry.
DatasetStats dataset_stats(std::span<const AnnotationSet> annotations, const ModelRegistry& registry);
Json stats_to_json(const DatasetStats& stats);

}  // namespace twinpose
