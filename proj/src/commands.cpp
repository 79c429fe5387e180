#include "twinpose/commands.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>

#include "twinpose/pose_solver.hpp"

namespace twinpose {

namespace fs = std::filesystem;

namespace {

const Json& field(const Json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object()) throw RequestError(where + ": expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw RequestError(where + "/" + key + ": missing required key");
  return *it;
}

double number(const Json& v, const std::string& where) {
  if (!v.is_number()) throw RequestError(where + ": expected a number");
  return v.get<double>();
}

template <int N>
Eigen::Matrix<double, N, 1> vector_field(const Json& obj, const std::string& key, const std::string& where) {
  const Json& v = field(obj, key, where);
  if (!v.is_array() || v.size() != N) {
    throw RequestError(where + "/" + key + ": expected an array of " + std::to_string(N) + " numbers");
  }
  Eigen::Matrix<double, N, 1> out;
  for (int i = 0; i < N; ++i) out[i] = number(v[static_cast<std::size_t>(i)], where + "/" + key + "/" + std::to_string(i));
  return out;
}

CameraIntrinsics camera_field(const Json& body) {
  const Json& cam = field(body, "camera", "");
  CameraIntrinsics k;
  k.f = number(field(cam, "f", "/camera"), "/camera/f");
  k.cx = number(field(cam, "cx", "/camera"), "/camera/cx");
  k.cy = number(field(cam, "cy", "/camera"), "/camera/cy");
  const Json& w = field(cam, "width", "/camera");
  const Json& h = field(cam, "height", "/camera");
  if (!w.is_number_integer() || !h.is_number_integer()) throw RequestError("/camera: width/height must be integers");
  k.width = w.get<int>();
  k.height = h.get<int>();
  try {
    k.validate();
  } catch (const GeometryError& e) {
    throw RequestError(std::string("/camera: ") + e.what());
  }
  return k;
}

RigidPose pose_field(const Json& obj, const std::string& key) {
  const Json& p = field(obj, key, "");
  const std::string where = "/" + key;
  const Vec3 r = vector_field<3>(p, "rotation_euler", where);
  return {vector_field<3>(p, "translation", where), {r.x(), r.y(), r.z()}};
}

std::string model_field(const Json& body, const ModelRegistry& registry) {
  const Json& id = field(body, "model_id", "");
  if (!id.is_string()) throw RequestError("/model_id: expected a string");
  const std::string model_id = id.get<std::string>();
  if (!registry.contains(model_id)) throw RequestError("/model_id: unknown model '" + model_id + "'");
  return model_id;
}

Json pose_to_json(const RigidPose& p) {
  return {{"translation", Json::array({p.translation.x(), p.translation.y(), p.translation.z()})},
          {"rotation_euler", Json::array({p.rotation.rx, p.rotation.ry, p.rotation.rz})}};
}

// Greedy per-frame matching: each ground-truth object, in order, takes the
// nearest unmatched prediction of the same model id.
std::vector<std::pair<std::size_t, std::size_t>> match_objects(const AnnotationSet& gt, const AnnotationSet& pred) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::vector<bool> used(pred.objects.size(), false);
  for (std::size_t g = 0; g < gt.objects.size(); ++g) {
    std::size_t best = pred.objects.size();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < pred.objects.size(); ++p) {
      if (used[p] || pred.objects[p].model_id != gt.objects[g].model_id) continue;
      const double d = (pred.objects[p].translation - gt.objects[g].translation).norm();
      if (d < best_d) {
        best_d = d;
        best = p;
      }
    }
    if (best < pred.objects.size()) {
      used[best] = true;
      out.emplace_back(g, best);
    }
  }
  return out;
}

void write_output(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_text_atomic(path, text);
}

}  // namespace

Json wireframe_to_json(const Wireframe& w) {
  Json vertices = Json::array();
  for (std::size_t i = 0; i < w.vertices_px.size(); ++i) {
    if (w.is_behind(static_cast<std::uint32_t>(i))) {
      vertices.push_back(nullptr);
    } else {
      vertices.push_back(Json::array({w.vertices_px[i].u, w.vertices_px[i].v}));
    }
  }
  Json edge_list = Json::array();
  for (const auto& e : w.edges) edge_list.push_back(Json::array({e[0], e[1]}));
  return {{"vertices_px", vertices}, {"edges", edge_list}, {"behind", w.behind}};
}

Json handle_project(const Json& body, const ModelRegistry& registry) {
  const std::string model_id = model_field(body, registry);
  const CameraIntrinsics k = camera_field(body);
  const RigidPose pose = pose_field(body, "pose");
  Vec3 scale = Vec3::Ones();
  if (body.contains("scale")) scale = vector_field<3>(body, "scale", "");
  if (!(scale.array() > 0.0).all()) throw RequestError("/scale: components must be positive");
  if (!pose.translation.allFinite()) throw RequestError("/pose: translation must be finite");
  return wireframe_to_json(project_wireframe(registry.mesh(model_id)->scaled(scale), k, pose));
}

Json handle_solve(const Json& body, const ModelRegistry& registry) {
  model_field(body, registry);
  const CameraIntrinsics k = camera_field(body);
  const RigidPose init = pose_field(body, "init");
  const Json& list = field(body, "correspondences", "");
  if (!list.is_array()) throw RequestError("/correspondences: expected an array");
  std::vector<Correspondence> corrs;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string where = "/correspondences/" + std::to_string(i);
    const Vec3 object_point = vector_field<3>(list[i], "object_point", where);
    const Eigen::Vector2d image_point = vector_field<2>(list[i], "image_point", where);
    corrs.push_back({object_point, {image_point.x(), image_point.y()}});
  }
  SolveReport report;
  try {
    report = solve_pose(corrs, k, SolveFrame::camera(), init);
  } catch (const SolverError& e) {
    throw RequestError(e.what());
  } catch (const GeometryError& e) {
    throw RequestError(e.what());
  }
  return {{"pose", pose_to_json(report.pose)},
          {"rmse", report.rmse},
          {"iterations", report.iterations},
          {"converged", report.converged}};
}

EvalResult evaluate(const Dataset& gt, const fs::path& pred_dir, const LossWeights& weights,
                    const std::string& preset_name) {
  EvalResult result;
  const PairingResult pairing = pair_predictions(gt.frames, pred_dir);
  for (const auto& id : pairing.missing_predictions) result.problems.push_back("no prediction for frame " + id);
  for (const auto& id : pairing.unmatched_predictions) {
    result.problems.push_back("prediction " + id + " matches no ground-truth frame");
  }

  std::vector<PoseErrorRecord> records;
  for (const auto& pair : pairing.pairs) {
    const AnnotationSet& g = pair.ground_truth.annotations;
    const AnnotationSet& p = pair.prediction.annotations;
    const auto matches = match_objects(g, p);
    result.unmatched_objects += g.objects.size() - matches.size();
    for (const auto& [gi, pi] : matches) {
      const AnnotatedObject& go = g.objects[gi];
      records.push_back(evaluate_pose(go.class_name, *gt.registry.mesh(go.model_id), p.objects[pi].pose(), go.pose()));
    }
  }
  if (records.empty()) throw DataError("no matched objects to evaluate");
  result.report = aggregate_report(records);
  result.json = report_to_json(result.report);
  result.json["preset"] = preset_name;
  result.json["pose_loss"] = pose_loss(0.0, result.report.mean.l6d, weights);
  result.json["unmatched_objects"] = result.unmatched_objects;
  return result;
}

int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err) {
  try {
    LossWeights weights;
    std::string preset_name = options.preset;
    if (options.weights_config) {
      std::ifstream in(*options.weights_config);
      if (!in) {
        err << "error: cannot open weights config " << options.weights_config->string() << "\n";
        return kExitInvalid;
      }
      weights = parse_weights_config(in);
      preset_name = options.weights_config->filename().string();
    } else {
      weights = LossWeights::preset(options.preset);
    }
    if (!fs::is_directory(options.pred_dir)) {
      err << "error: prediction directory not found: " << options.pred_dir.string() << "\n";
      return kExitInvalid;
    }
    const Dataset gt = load_dataset(options.gt_dir);
    bool invalid = false;
    for (const auto& frame : gt.frames) {
      for (const auto& d : validate(frame.annotations, gt.registry)) {
        err << frame.id << ": " << d.to_string() << "\n";
        invalid = invalid || d.severity == Severity::kError;
      }
    }
    if (invalid) return kExitInvalid;

    const EvalResult result = evaluate(gt, options.pred_dir, weights, preset_name);
    for (const auto& p : result.problems) err << "error: " << p << "\n";
    if (result.unmatched_objects > 0) {
      err << "warning: " << result.unmatched_objects << " ground-truth objects have no matching prediction\n";
    }
    const std::string text = dump_fixed(result.json, 6, 2) + "\n";
    if (options.out) write_output(*options.out, text);
    if (options.json_stdout) {
      out << text;
    } else {
      out << format_report_table(result.report);
    }
    return result.problems.empty() ? kExitOk : kExitInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
}

int cmd_stats(const fs::path& dataset, bool json, std::ostream& out, std::ostream& err) {
  try {
    const Dataset ds = load_dataset(dataset);
    std::vector<AnnotationSet> sets;
    for (const auto& f : ds.frames) sets.push_back(f.annotations);
    const DatasetStats s = dataset_stats(sets, ds.registry);
    if (json) {
      out << dump_fixed(stats_to_json(s), 6, 2) << "\n";
    } else {
      char buf[256];
      std::snprintf(buf, sizeof buf, "Frames  %zu\nO.N.    %zu\nO.D.    %.6f\nC.O.D.  %.6f\n", s.frames, s.objects,
                    s.max_diameter, s.max_camera_distance);
      out << buf;
    }
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
}

Json project_annotations(const AnnotationSet& set, const ModelRegistry& registry) {
  set.camera.validate();
  Json objects = Json::array();
  for (std::size_t i = 0; i < set.objects.size(); ++i) {
    const AnnotatedObject& o = set.objects[i];
    const Wireframe w = project_wireframe(*registry.mesh(o.model_id), set.camera, o.pose());
    objects.push_back({{"index", i},
                       {"model_id", o.model_id},
                       {"behind_camera", !w.behind.empty()},
                       {"projection", wireframe_to_json(w)}});
  }
  return {{"image", set.image}, {"objects", objects}};
}

int cmd_project(const fs::path& annotation, const std::optional<fs::path>& registry,
                const std::optional<fs::path>& out_path, std::ostream& out, std::ostream& err) {
  try {
    const AnnotationSet set = read_annotations(annotation);
    const fs::path registry_path =
        registry ? *registry : annotation.parent_path().parent_path() / "models" / "registry.json";
    const ModelRegistry reg = ModelRegistry::load(registry_path);
    bool invalid = false;
    for (const auto& d : validate(set, reg)) {
      // Behind-camera objects are still projected and flagged per object.
      if (d.message.find("behind the camera") != std::string::npos) {
        err << "warning: " << d.to_string() << "\n";
        continue;
      }
      err << d.to_string() << "\n";
      invalid = invalid || d.severity == Severity::kError;
    }
    if (invalid) return kExitInvalid;
    const std::string text = dump_fixed(project_annotations(set, reg)) + "\n";
    if (out_path) {
      write_output(*out_path, text);
    } else {
      out << text;
    }
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
}

int cmd_solve(const fs::path& request, const fs::path& registry, std::ostream& out, std::ostream& err) {
  try {
    std::ifstream in(request);
    if (!in) {
      err << "error: cannot open " << request.string() << "\n";
      return kExitInvalid;
    }
    const Json body = Json::parse(in);
    out << dump_fixed(handle_solve(body, ModelRegistry::load(registry)), 6, 2) << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
}

}  // namespace twinpose
