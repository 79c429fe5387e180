#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "twinpose/geometry.hpp"
#include "twinpose/json_format.hpp"
#include "twinpose/mesh.hpp"

namespace twinpose {

inline constexpr int kAnnotationVersion = 1;

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Schema violation; pointer is a JSON pointer such as "/objects/0/translation".
class SchemaError : public DataError {
 public:
  SchemaError(std::string pointer, const std::string& what);
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

class UnsupportedVersionError : public DataError {
 public:
  using DataError::DataError;
};

struct ModelRecord {
  std::string id;
  std::string class_name;
  std::string mesh;  ///< path relative to the registry file's directory
  Vec3 scale = Vec3::Ones();
};

/// Model registry (models/registry.json). Meshes load lazily and are cached
/// with the registry scale applied.
class ModelRegistry {
 public:
  ModelRegistry() = default;
  ModelRegistry(std::vector<ModelRecord> records, std::filesystem::path base_dir);

  static ModelRegistry load(const std::filesystem::path& registry_json);
  static ModelRegistry from_json(const Json& j, std::filesystem::path base_dir);
  Json to_json() const;

  const std::vector<ModelRecord>& records() const { return records_; }
  const ModelRecord* find(const std::string& id) const;
  bool contains(const std::string& id) const { return find(id) != nullptr; }

  /// Scaled mesh; throws DataError for unknown ids or unreadable meshes.
  std::shared_ptr<const TriMesh> mesh(const std::string& id) const;
  /// Adds (or replaces) an in-memory model; used by tests and tools.
  void add(ModelRecord record, TriMesh mesh);

 private:
  struct MeshCache {
    std::mutex mutex;
    std::map<std::string, std::shared_ptr<const TriMesh>> meshes;
  };

  std::vector<ModelRecord> records_;
  std::filesystem::path base_dir_;
  std::shared_ptr<MeshCache> cache_ = std::make_shared<MeshCache>();
};

struct AnnotatedObject {
  std::string model_id;
  std::string class_name;
  Vec3 translation = Vec3::Zero();  ///< camera frame, meters
  EulerAngles rotation;             ///< camera frame, radians

  RigidPose pose() const { return {translation, rotation}; }
};

/// One labeled frame; poses are in the virtual-camera frame.
struct AnnotationSet {
  int version = kAnnotationVersion;
  std::string image;
  CameraIntrinsics camera;
  std::vector<AnnotatedObject> objects;
};

/// Same schema as AnnotationSet; paired to ground truth by image path.
using PredictionSet = AnnotationSet;

AnnotationSet annotations_from_json(const Json& j);
Json annotations_to_json(const AnnotationSet& set);
AnnotationSet read_annotations(const std::filesystem::path& path);
/// Atomic: writes a sibling temporary file then renames it over `path`.
void write_annotations(const AnnotationSet& set, const std::filesystem::path& path);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

enum class Severity { kError, kWarning };

struct Diagnostic {
  Severity severity = Severity::kError;
  std::optional<std::size_t> object_index;
  std::string message;

  std::string to_string() const;
};

std::vector<Diagnostic> validate(const AnnotationSet& set, const ModelRegistry& registry);
/// Mesh-level checks: unreadable meshes (error), inconsistent winding (warning).
std::vector<Diagnostic> validate_registry(const ModelRegistry& registry);
bool has_errors(const std::vector<Diagnostic>& diags);

struct Frame {
  std::string id;  ///< frame file stem
  std::filesystem::path path;
  AnnotationSet annotations;
};

struct Dataset {
  std::filesystem::path root;
  ModelRegistry registry;
  std::vector<Frame> frames;  ///< lexicographic by id
};

/// Reads a directory of frame files (*.json, any case) sorted by stem.
/// Throws DataError on duplicate stems or duplicate image paths.
std::vector<Frame> load_frames(const std::filesystem::path& frames_dir);

/// dataset_root/{models/registry.json, frames/*.json}
Dataset load_dataset(const std::filesystem::path& root);

struct FramePair {
  Frame ground_truth;
  Frame prediction;
};

struct PairingResult {
  std::vector<FramePair> pairs;                     ///< ground-truth order
  std::vector<std::string> unmatched_predictions;   ///< prediction frame ids
  std::vector<std::string> missing_predictions;     ///< ground-truth frame ids
};

/// Pairs frames by identical image path. `pred_dir` may be a dataset root
/// (with frames/) or a flat directory of frame files.
PairingResult pair_predictions(const std::vector<Frame>& ground_truth, const std::filesystem::path& pred_dir);

}  // namespace twinpose
