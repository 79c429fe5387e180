#include "twinpose/losses.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <sstream>
#include <vector>

#include "twinpose/simd/kernels.hpp"

namespace twinpose {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double mean_nearest(std::span<const Vec3> from, std::span<const Vec3> to) {
  const auto a = simd::PointBuffer::from(from);
  const auto b = simd::PointBuffer::from(to);
  std::vector<double> d2(from.size());
  simd::nearest_squared_distances(a.view(), b.view(), d2);
  double sum = 0.0;
  for (double v : d2) sum += v;
  return sum / static_cast<double>(from.size());
}

}  // namespace

LossWeights LossWeights::kitti() { return {6.0, 100.0, 100.0, 1.0, 10.0, 0.5, 3.0}; }

LossWeights LossWeights::linemod() { return {90.0, 50.0, 50.0, 0.5, 5.0, 0.5, 10.0}; }

LossWeights LossWeights::preset(const std::string& name) {
  if (name == "kitti") return kitti();
  if (name == "linemod") return linemod();
  throw LossError("unknown weight preset '" + name + "' (expected kitti or linemod)");
}

void LossWeights::validate() const {
  for (double w : {alpha1, alpha2, alpha3, alpha4, alpha5, gamma1, gamma2}) {
    if (!std::isfinite(w) || w < 0.0) throw LossError("loss weights must be finite and non-negative");
  }
}

LossWeights parse_weights_config(std::istream& in) {
  LossWeights w = LossWeights::kitti();
  std::vector<std::pair<std::string, double>> overrides;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw LossError("line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "preset") {
      w = LossWeights::preset(value);
      continue;
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != value.size()) {
      throw LossError("line " + std::to_string(line_no) + ": invalid number '" + value + "'");
    }
    overrides.emplace_back(key, v);
  }
  // Explicit weights win over the preset regardless of line order.
  for (const auto& [key, v] : overrides) {
    if (key == "alpha1") w.alpha1 = v;
    else if (key == "alpha2") w.alpha2 = v;
    else if (key == "alpha3") w.alpha3 = v;
    else if (key == "alpha4") w.alpha4 = v;
    else if (key == "alpha5") w.alpha5 = v;
    else if (key == "gamma1") w.gamma1 = v;
    else if (key == "gamma2") w.gamma2 = v;
    else throw LossError("unknown weight key '" + key + "'");
  }
  w.validate();
  return w;
}

LossWeights parse_weights_config(const std::string& text) {
  std::istringstream in(text);
  return parse_weights_config(in);
}

std::string format_weights_config(const LossWeights& w) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "alpha1=" << w.alpha1 << "\nalpha2=" << w.alpha2 << "\nalpha3=" << w.alpha3 << "\nalpha4=" << w.alpha4
      << "\nalpha5=" << w.alpha5 << "\ngamma1=" << w.gamma1 << "\ngamma2=" << w.gamma2 << "\n";
  return out.str();
}

double chamfer(std::span<const Vec3> g, std::span<const Vec3> p) {
  if (g.empty() || p.empty()) throw LossError("chamfer distance needs two non-empty clouds");
  return mean_nearest(g, p) + mean_nearest(p, g);
}

double chamfer(const SampledCloud& g, const SampledCloud& p) { return chamfer(g.points, p.points); }

double mesh_edge_loss(std::span<const Vec3> vertices, std::span<const Edge> edge_set) {
  if (edge_set.empty()) throw LossError("mesh edge loss needs at least one edge");
  double sum = 0.0;
  for (const Edge& e : edge_set) {
    if (e.a >= vertices.size() || e.b >= vertices.size()) throw LossError("edge index out of range");
    sum += (vertices[e.a] - vertices[e.b]).squaredNorm();
  }
  return sum / static_cast<double>(edge_set.size());
}

double mesh_edge_loss(const TriMesh& m) {
  const auto es = edges(m);
  return mesh_edge_loss(m.vertices, es);
}

double normal_consistency_loss(const TriMesh& m) {
  const auto pairs = face_pairs(m);
  if (pairs.empty()) throw LossError("normal consistency loss needs at least one pair of adjacent faces");
  double sum = 0.0;
  for (const FacePair& fp : pairs) sum += 1.0 - fp.first_normal.dot(fp.second_normal);
  return sum / static_cast<double>(pairs.size());
}

double laplacian_term(const Vec3& vertex, std::span<const Vec3> neighbors) {
  if (neighbors.empty()) throw LossError("laplacian term needs at least one neighbor");
  Vec3 offset = Vec3::Zero();
  for (const Vec3& n : neighbors) offset += n - vertex;
  return (offset / static_cast<double>(neighbors.size())).norm();
}

double laplacian_smoothing_loss(const TriMesh& m) {
  const auto nbrs = adjacency(m);
  double sum = 0.0;
  std::vector<Vec3> ring;
  for (std::size_t i = 0; i < nbrs.size(); ++i) {
    if (nbrs[i].empty()) throw LossError("vertex " + std::to_string(i) + " has no neighbors");
    ring.clear();
    for (auto j : nbrs[i]) ring.push_back(m.vertices[j]);
    sum += laplacian_term(m.vertices[i], ring);
  }
  return sum;
}

double psc_loss(std::span<const ModelPrediction> pred, std::span<const ModelPrediction> gt) {
  if (pred.size() != gt.size()) throw LossError("psc loss: prediction and ground-truth model counts differ");
  if (pred.empty()) throw LossError("psc loss needs at least one model");
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double s = (pred[i].scale - gt[i].scale).cwiseAbs().sum() + (pred[i].center - gt[i].center).cwiseAbs().sum();
    total += s / 6.0;
  }
  return total / static_cast<double>(pred.size());
}

ModelLossTerms model_loss_terms(std::span<const ModelPrediction> pred, std::span<const ModelPrediction> gt) {
  ModelLossTerms t;
  t.psc = psc_loss(pred, gt);
  const auto n = static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    t.chamfer += chamfer(gt[i].points, pred[i].points) / n;
    t.edge += mesh_edge_loss(pred[i].mesh) / n;
    t.normal += normal_consistency_loss(pred[i].mesh) / n;
    t.laplacian += laplacian_smoothing_loss(pred[i].mesh) / n;
  }
  return t;
}

double model_loss(const ModelLossTerms& t, const LossWeights& w) {
  for (double v : {t.psc, t.chamfer, t.edge, t.normal, t.laplacian}) {
    if (!std::isfinite(v)) throw LossError("model loss terms must be finite");
  }
  return w.alpha1 * t.psc + w.alpha2 * t.chamfer + w.alpha3 * t.edge + w.alpha4 * t.normal + w.alpha5 * t.laplacian;
}

double fps_loss(const TriMesh& gt_model, const RigidPose& pose_p, const RigidPose& pose_g, std::size_t k) {
  if (k < 1 || k > gt_model.vertices.size()) {
    throw LossError("fps loss: k must be in [1, vertex count]");
  }
  const auto idx = farthest_point_sample(gt_model.vertices, k);
  const Mat3 rp = pose_p.rotation_matrix(), rg = pose_g.rotation_matrix();
  double sum = 0.0;
  for (auto i : idx) {
    const Vec3& x = gt_model.vertices[i];
    sum += ((rp * x + pose_p.translation) - (rg * x + pose_g.translation)).norm();
  }
  return sum / static_cast<double>(k);
}

double sixdof_loss(const TriMesh& gt_model, const RigidPose& pose_p, const RigidPose& pose_g, std::size_t k) {
  const Quaternion qp = pose_p.quaternion().canonical(), qg = pose_g.quaternion().canonical();
  const double quat_l1 = std::abs(qp.w - qg.w) + std::abs(qp.x - qg.x) + std::abs(qp.y - qg.y) + std::abs(qp.z - qg.z);
  return fps_loss(gt_model, pose_p, pose_g, k) + (pose_p.translation - pose_g.translation).cwiseAbs().sum() + quat_l1;
}

double cross_entropy(std::span<const double> distribution, std::size_t label) {
  if (label >= distribution.size()) throw LossError("class label out of range");
  double sum = 0.0;
  for (double p : distribution) {
    if (!std::isfinite(p) || p < 0.0) throw LossError("class distribution entries must be finite and non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw LossError("class distribution must sum to 1");
  return -std::log(std::max(distribution[label], 1e-12));
}

double pose_loss(double classification, double sixdof, const LossWeights& w) {
  return w.gamma1 * classification + w.gamma2 * sixdof;
}

double total_loss(double detection, double model, double pose) { return detection + model + pose; }

}  // namespace twinpose
