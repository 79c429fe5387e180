#include "twinpose/annodata.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace twinpose {

namespace fs = std::filesystem;

namespace {

std::string child(const std::string& ptr, const std::string& key) { return ptr + "/" + key; }
std::string child(const std::string& ptr, std::size_t i) { return ptr + "/" + std::to_string(i); }

const Json& require(const Json& obj, const std::string& ptr, const std::string& key) {
  if (!obj.is_object()) throw SchemaError(ptr.empty() ? "/" : ptr, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(child(ptr, key), "missing required key '" + key + "'");
  return *it;
}

double require_number(const Json& obj, const std::string& ptr, const std::string& key) {
  const Json& v = require(obj, ptr, key);
  if (!v.is_number()) throw SchemaError(child(ptr, key), "expected a number");
  return v.get<double>();
}

long long require_integer(const Json& obj, const std::string& ptr, const std::string& key) {
  const Json& v = require(obj, ptr, key);
  if (!v.is_number_integer()) throw SchemaError(child(ptr, key), "expected an integer");
  return v.get<long long>();
}

std::string require_string(const Json& obj, const std::string& ptr, const std::string& key) {
  const Json& v = require(obj, ptr, key);
  if (!v.is_string()) throw SchemaError(child(ptr, key), "expected a string");
  return v.get<std::string>();
}

Vec3 require_vec3(const Json& obj, const std::string& ptr, const std::string& key) {
  const Json& v = require(obj, ptr, key);
  const std::string p = child(ptr, key);
  if (!v.is_array() || v.size() != 3) throw SchemaError(p, "expected an array of 3 numbers");
  Vec3 out;
  for (std::size_t i = 0; i < 3; ++i) {
    if (!v[i].is_number()) throw SchemaError(child(p, i), "expected a number");
    out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  }
  return out;
}

Json vec3_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Json parse_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw DataError(path.string() + ": invalid JSON: " + e.what());
  }
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

SchemaError::SchemaError(std::string pointer, const std::string& what)
    : DataError(pointer + ": " + what), pointer_(std::move(pointer)) {}

ModelRegistry::ModelRegistry(std::vector<ModelRecord> records, fs::path base_dir)
    : records_(std::move(records)), base_dir_(std::move(base_dir)) {
  std::set<std::string> ids;
  for (const auto& r : records_) {
    if (!ids.insert(r.id).second) throw DataError("duplicate model id '" + r.id + "' in registry");
    if (!(r.scale.array() > 0.0).all() || !r.scale.allFinite()) {
      throw DataError("model '" + r.id + "' must have finite positive scale");
    }
  }
}

ModelRegistry ModelRegistry::from_json(const Json& j, fs::path base_dir) {
  const Json& models = require(j, "", "models");
  if (!models.is_array()) throw SchemaError("/models", "expected an array");
  std::vector<ModelRecord> records;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const std::string ptr = child("/models", i);
    ModelRecord r;
    r.id = require_string(models[i], ptr, "id");
    r.class_name = require_string(models[i], ptr, "class");
    r.mesh = require_string(models[i], ptr, "mesh");
    r.scale = require_vec3(models[i], ptr, "scale");
    records.push_back(std::move(r));
  }
  return ModelRegistry(std::move(records), std::move(base_dir));
}

ModelRegistry ModelRegistry::load(const fs::path& registry_json) {
  return from_json(parse_json_file(registry_json), registry_json.parent_path());
}

Json ModelRegistry::to_json() const {
  Json models = Json::array();
  for (const auto& r : records_) {
    models.push_back({{"id", r.id}, {"class", r.class_name}, {"mesh", r.mesh}, {"scale", vec3_json(r.scale)}});
  }
  return {{"models", models}};
}

const ModelRecord* ModelRegistry::find(const std::string& id) const {
  const auto it = std::find_if(records_.begin(), records_.end(), [&](const ModelRecord& r) { return r.id == id; });
  return it == records_.end() ? nullptr : &*it;
}

std::shared_ptr<const TriMesh> ModelRegistry::mesh(const std::string& id) const {
  const ModelRecord* rec = find(id);
  if (rec == nullptr) throw DataError("unknown model id '" + id + "'");
  std::lock_guard lock(cache_->mutex);
  if (auto it = cache_->meshes.find(id); it != cache_->meshes.end()) return it->second;
  TriMesh m;
  try {
    m = load_mesh(base_dir_ / rec->mesh).scaled(rec->scale);
  } catch (const MeshError& e) {
    throw DataError("model '" + id + "': " + e.what());
  }
  auto ptr = std::make_shared<const TriMesh>(std::move(m));
  cache_->meshes[id] = ptr;
  return ptr;
}

void ModelRegistry::add(ModelRecord record, TriMesh mesh) {
  mesh.validate();
  auto scaled = std::make_shared<const TriMesh>(mesh.scaled(record.scale));
  {
    std::lock_guard lock(cache_->mutex);
    cache_->meshes[record.id] = std::move(scaled);
  }
  if (auto it = std::find_if(records_.begin(), records_.end(), [&](const ModelRecord& r) { return r.id == record.id; });
      it != records_.end()) {
    *it = std::move(record);
  } else {
    records_.push_back(std::move(record));
  }
}

AnnotationSet annotations_from_json(const Json& j) {
  if (!j.is_object()) throw SchemaError("/", "expected an object");
  AnnotationSet set;
  const long long version = require_integer(j, "", "version");
  if (version != kAnnotationVersion) {
    throw UnsupportedVersionError("unsupported annotation version " + std::to_string(version) + " (supported: " +
                                  std::to_string(kAnnotationVersion) + ")");
  }
  set.version = static_cast<int>(version);
  set.image = require_string(j, "", "image");
  const Json& cam = require(j, "", "camera");
  if (!cam.is_object()) throw SchemaError("/camera", "expected an object");
  set.camera.f = require_number(cam, "/camera", "f");
  set.camera.cx = require_number(cam, "/camera", "cx");
  set.camera.cy = require_number(cam, "/camera", "cy");
  set.camera.width = static_cast<int>(require_integer(cam, "/camera", "width"));
  set.camera.height = static_cast<int>(require_integer(cam, "/camera", "height"));
  const Json& objects = require(j, "", "objects");
  if (!objects.is_array()) throw SchemaError("/objects", "expected an array");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string ptr = child("/objects", i);
    AnnotatedObject o;
    o.model_id = require_string(objects[i], ptr, "model_id");
    o.class_name = require_string(objects[i], ptr, "class");
    o.translation = require_vec3(objects[i], ptr, "translation");
    const Vec3 r = require_vec3(objects[i], ptr, "rotation_euler");
    o.rotation = {r.x(), r.y(), r.z()};
    set.objects.push_back(std::move(o));
  }
  return set;
}

Json annotations_to_json(const AnnotationSet& set) {
  Json objects = Json::array();
  for (const auto& o : set.objects) {
    objects.push_back({{"model_id", o.model_id},
                       {"class", o.class_name},
                       {"translation", vec3_json(o.translation)},
                       {"rotation_euler", Json::array({o.rotation.rx, o.rotation.ry, o.rotation.rz})}});
  }
  return {{"version", set.version},
          {"image", set.image},
          {"camera",
           {{"f", set.camera.f},
            {"cx", set.camera.cx},
            {"cy", set.camera.cy},
            {"width", set.camera.width},
            {"height", set.camera.height}}},
          {"objects", objects}};
}

AnnotationSet read_annotations(const fs::path& path) {
  const Json j = parse_json_file(path);
  try {
    return annotations_from_json(j);
  } catch (const SchemaError& e) {
    throw SchemaError(e.pointer(), path.string() + ": " + e.what());
  }
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw DataError("failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw DataError("cannot replace " + path.string() + ": " + ec.message());
  }
}

void write_annotations(const AnnotationSet& set, const fs::path& path) {
  // Default serialization keeps the shortest round-trip representation.
  write_text_atomic(path, annotations_to_json(set).dump(2) + "\n");
}

std::string Diagnostic::to_string() const {
  std::ostringstream out;
  out << (severity == Severity::kError ? "error" : "warning");
  if (object_index) out << " [object " << *object_index << "]";
  out << ": " << message;
  return out.str();
}

std::vector<Diagnostic> validate(const AnnotationSet& set, const ModelRegistry& registry) {
  std::vector<Diagnostic> out;
  if (set.version != kAnnotationVersion) {
    out.push_back({Severity::kError, std::nullopt, "unsupported version " + std::to_string(set.version)});
  }
  try {
    set.camera.validate();
  } catch (const GeometryError& e) {
    out.push_back({Severity::kError, std::nullopt, std::string("camera: ") + e.what()});
  }
  for (std::size_t i = 0; i < set.objects.size(); ++i) {
    const AnnotatedObject& o = set.objects[i];
    const ModelRecord* rec = registry.find(o.model_id);
    if (rec == nullptr) {
      out.push_back({Severity::kError, i, "unregistered model id '" + o.model_id + "'"});
    } else if (rec->class_name != o.class_name) {
      out.push_back({Severity::kWarning, i,
                     "class '" + o.class_name + "' differs from registry class '" + rec->class_name + "'"});
    }
    const bool finite = o.translation.allFinite() && std::isfinite(o.rotation.rx) && std::isfinite(o.rotation.ry) &&
                        std::isfinite(o.rotation.rz);
    if (!finite) {
      out.push_back({Severity::kError, i, "pose is not finite"});
    } else if (!(o.translation.z() > 0.0)) {
      out.push_back({Severity::kError, i, "object is at or behind the camera (depth " +
                                              std::to_string(o.translation.z()) + " m)"});
    }
  }
  return out;
}

std::vector<Diagnostic> validate_registry(const ModelRegistry& registry) {
  std::vector<Diagnostic> out;
  for (const auto& r : registry.records()) {
    try {
      if (!has_consistent_winding(*registry.mesh(r.id))) {
        out.push_back({Severity::kWarning, std::nullopt, "model '" + r.id + "' has inconsistent face winding"});
      }
    } catch (const DataError& e) {
      out.push_back({Severity::kError, std::nullopt, e.what()});
    }
  }
  return out;
}

bool has_errors(const std::vector<Diagnostic>& diags) {
  return std::any_of(diags.begin(), diags.end(), [](const Diagnostic& d) { return d.severity == Severity::kError; });
}

std::vector<Frame> load_frames(const fs::path& frames_dir) {
  if (!fs::is_directory(frames_dir)) throw DataError("frames directory not found: " + frames_dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(frames_dir)) {
    if (entry.is_regular_file() && lower(entry.path().extension().string()) == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  std::vector<Frame> frames;
  std::set<std::string> ids, images;
  for (const auto& f : files) {
    Frame frame{f.stem().string(), f, read_annotations(f)};
    if (!ids.insert(frame.id).second) throw DataError("duplicate frame id '" + frame.id + "' in " + frames_dir.string());
    if (!images.insert(frame.annotations.image).second) {
      throw DataError("duplicate image path '" + frame.annotations.image + "' in " + frames_dir.string());
    }
    frames.push_back(std::move(frame));
  }
  std::stable_sort(frames.begin(), frames.end(), [](const Frame& a, const Frame& b) { return a.id < b.id; });
  return frames;
}

Dataset load_dataset(const fs::path& root) {
  if (!fs::is_directory(root)) throw DataError("dataset directory not found: " + root.string());
  Dataset ds;
  ds.root = root;
  ds.registry = ModelRegistry::load(root / "models" / "registry.json");
  for (const auto& r : ds.registry.records()) ds.registry.mesh(r.id);
  ds.frames = load_frames(root / "frames");
  return ds;
}

PairingResult pair_predictions(const std::vector<Frame>& ground_truth, const fs::path& pred_dir) {
  const fs::path dir = fs::is_directory(pred_dir / "frames") ? pred_dir / "frames" : pred_dir;
  std::vector<Frame> preds = load_frames(dir);
  PairingResult result;
  std::vector<bool> used(preds.size(), false);
  for (const auto& gt : ground_truth) {
    const auto it = std::find_if(preds.begin(), preds.end(),
                                 [&](const Frame& p) { return p.annotations.image == gt.annotations.image; });
    if (it == preds.end()) {
      result.missing_predictions.push_back(gt.id);
      continue;
    }
    used[static_cast<std::size_t>(it - preds.begin())] = true;
    result.pairs.push_back({gt, *it});
  }
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (!used[i]) result.unmatched_predictions.push_back(preds[i].id);
  }
  return result;
}

}  // namespace twinpose
