#include "twinpose/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

#include "twinpose/losses.hpp"
#include "twinpose/simd/kernels.hpp"

namespace twinpose {

LabelingScores labeling_scores(const RigidPose& label, const RigidPose& gt) {
  const Vec3 d = label.translation - gt.translation;
  return {std::exp(-std::abs(d.x())),
          std::exp(-std::abs(d.y())),
          std::exp(-std::abs(d.z())),
          std::cos(gt.rotation.rx - label.rotation.rx),
          std::cos(gt.rotation.ry - label.rotation.ry),
          std::cos(gt.rotation.rz - label.rotation.rz)};
}

double gaussian_translation(const Vec3& predicted, const Vec3& ground_truth) {
  return std::exp(-(predicted - ground_truth).norm());
}

double angular_difference(double a, double b) { return std::abs(wrap_angle(a - b)); }

EulerErrors euler_abs_errors(const EulerAngles& p, const EulerAngles& g) {
  return {angular_difference(g.rx, p.rx), angular_difference(g.ry, p.ry), angular_difference(g.rz, p.rz)};
}

double add_distance(std::span<const Vec3> points, const RigidPose& pose_p, const RigidPose& pose_g) {
  if (points.empty()) throw std::invalid_argument("ADD needs a non-empty point set");
  const Mat3 a = pose_p.rotation_matrix() - pose_g.rotation_matrix();
  const Vec3 b = pose_p.translation - pose_g.translation;
  simd::RigidTransform affine{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) affine.r[3 * i + j] = a(i, j);
    affine.t[i] = b[i];
  }
  const auto buffer = simd::PointBuffer::from(points);
  return simd::affine_norm_sum(buffer.view(), affine) / static_cast<double>(points.size());
}

bool add_accept(double add, double diameter) { return add < kAddThresholdFraction * diameter; }

PoseErrorRecord evaluate_pose(const std::string& class_name, const TriMesh& model, const RigidPose& predicted,
                              const RigidPose& ground_truth) {
  PoseErrorRecord r;
  r.class_name = class_name;
  r.translation_error = (predicted.translation - ground_truth.translation).norm();
  r.iota = gaussian_translation(predicted.translation, ground_truth.translation);
  const EulerErrors eta = euler_abs_errors(predicted.rotation, ground_truth.rotation);
  r.eta_rx = eta.rx;
  r.eta_ry = eta.ry;
  r.eta_rz = eta.rz;
  r.add = add_distance(model.vertices, predicted, ground_truth);
  r.add_accepted = add_accept(r.add, diameter(model));
  r.l6d = sixdof_loss(model, predicted, ground_truth, std::min(kDefaultFpsPoints, model.vertices.size()));
  return r;
}

namespace {

ReportRow mean_row(const std::string& name, const std::vector<const PoseErrorRecord*>& rs) {
  ReportRow row;
  row.name = name;
  row.count = rs.size();
  std::size_t accepted = 0;
  for (const auto* r : rs) {
    row.iota += r->iota;
    row.eta_rx += r->eta_rx;
    row.eta_ry += r->eta_ry;
    row.eta_rz += r->eta_rz;
    row.add += r->add;
    row.l6d += r->l6d;
    accepted += r->add_accepted ? 1 : 0;
  }
  const auto n = static_cast<double>(rs.size());
  row.iota /= n;
  row.eta_rx /= n;
  row.eta_ry /= n;
  row.eta_rz /= n;
  row.add /= n;
  row.l6d /= n;
  row.add_accuracy = 100.0 * static_cast<double>(accepted) / n;
  return row;
}

Json row_to_json(const ReportRow& r) {
  return {{"name", r.name},     {"iota", r.iota}, {"eta_rx", r.eta_rx},
          {"eta_ry", r.eta_ry}, {"eta_rz", r.eta_rz}, {"add", r.add},
          {"add_accuracy", r.add_accuracy}, {"l6d", r.l6d}, {"count", r.count}};
}

ReportRow row_from_json(const Json& j) {
  ReportRow r;
  r.name = j.at("name").get<std::string>();
  r.iota = j.at("iota").get<double>();
  r.eta_rx = j.at("eta_rx").get<double>();
  r.eta_ry = j.at("eta_ry").get<double>();
  r.eta_rz = j.at("eta_rz").get<double>();
  r.add = j.at("add").get<double>();
  r.add_accuracy = j.at("add_accuracy").get<double>();
  r.l6d = j.value("l6d", 0.0);
  r.count = j.at("count").get<std::size_t>();
  return r;
}

}  // namespace

MetricsReport aggregate_report(std::span<const PoseErrorRecord> records) {
  if (records.empty()) throw std::invalid_argument("cannot aggregate an empty record list");
  std::map<std::string, std::vector<const PoseErrorRecord*>> by_class;
  std::vector<const PoseErrorRecord*> all;
  for (const auto& r : records) {
    by_class[r.class_name].push_back(&r);
    all.push_back(&r);
  }
  MetricsReport report;
  for (const auto& [name, rs] : by_class) report.classes.push_back(mean_row(name, rs));
  report.mean = mean_row("Mean", all);
  return report;
}

Json report_to_json(const MetricsReport& report) {
  Json classes = Json::array();
  for (const auto& r : report.classes) classes.push_back(row_to_json(r));
  return {{"classes", classes}, {"mean", row_to_json(report.mean)}};
}

MetricsReport report_from_json(const Json& j) {
  MetricsReport report;
  for (const auto& c : j.at("classes")) report.classes.push_back(row_from_json(c));
  report.mean = row_from_json(j.at("mean"));
  return report;
}

std::string format_report_table(const MetricsReport& report) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-14s %9s %9s %9s %9s %9s %9s %9s %6s\n", "Class", "iota", "eta_RX", "eta_RY",
                "eta_RZ", "ADD", "ADD-acc%", "L6d", "N");
  out += line;
  const auto emit = [&](const ReportRow& r) {
    std::snprintf(line, sizeof line, "%-14s %9.6f %9.6f %9.6f %9.6f %9.6f %9.3f %9.6f %6zu\n", r.name.c_str(), r.iota,
                  r.eta_rx, r.eta_ry, r.eta_rz, r.add, r.add_accuracy, r.l6d, r.count);
    out += line;
  };
  for (const auto& r : report.classes) emit(r);
  emit(report.mean);
  return out;
}

DatasetStats dataset_stats(std::span<const AnnotationSet> annotations, const ModelRegistry& registry) {
  DatasetStats s;
  s.frames = annotations.size();
  std::map<std::string, double> diameters;
  for (const auto& set : annotations) {
    for (const auto& o : set.objects) {
      ++s.objects;
      if (!registry.contains(o.model_id)) throw DataError("unresolved model reference '" + o.model_id + "'");
      auto it = diameters.find(o.model_id);
      if (it == diameters.end()) it = diameters.emplace(o.model_id, diameter(*registry.mesh(o.model_id))).first;
      s.max_diameter = std::max(s.max_diameter, it->second);
      s.max_camera_distance = std::max(s.max_camera_distance, o.translation.norm());
    }
  }
  return s;
}

Json stats_to_json(const DatasetStats& s) {
  return {{"frames", s.frames},
          {"objects", s.objects},
          {"max_diameter", s.max_diameter},
          {"max_camera_distance", s.max_camera_distance}};
}

}  // namespace twinpose
