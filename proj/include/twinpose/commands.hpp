#pragma once

// Batch entry points behind the `twinpose` CLI, plus the request handlers
// shared with the HTTP service so both produce identical JSON.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "twinpose/annodata.hpp"
#include "twinpose/json_format.hpp"
#include "twinpose/losses.hpp"
#include "twinpose/metrics.hpp"
#include "twinpose/twinspace.hpp"

namespace twinpose {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitInvalid = 2;

/// Raised by request handlers for malformed input (HTTP 400).
class RequestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Json wireframe_to_json(const Wireframe& w);

/// {model_id, scale?, pose:{translation, rotation_euler}, camera} ->
/// {vertices_px, edges, behind}. The pose is in the camera frame; scale
/// defaults to [1,1,1] and multiplies the registry scale.
Json handle_project(const Json& body, const ModelRegistry& registry);

/// {model_id, camera, correspondences:[{object_point, image_point}], init} ->
/// {pose:{translation, rotation_euler}, rmse, iterations, converged}.
/// Poses are in the camera frame.
Json handle_solve(const Json& body, const ModelRegistry& registry);

struct EvalOptions {
  std::filesystem::path gt_dir;
  std::filesystem::path pred_dir;
  std::string preset = "kitti";
  std::optional<std::filesystem::path> weights_config;
  std::optional<std::filesystem::path> out;
  bool json_stdout = false;
};

struct EvalResult {
  MetricsReport report;
  Json json;
  std::vector<std::string> problems;  ///< pairing or validation failures
  std::size_t unmatched_objects = 0;
};

/// Throws DataError when nothing can be evaluated.
EvalResult evaluate(const Dataset& gt, const std::filesystem::path& pred_dir, const LossWeights& weights,
                    const std::string& preset_name);

int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err);
int cmd_stats(const std::filesystem::path& dataset, bool json, std::ostream& out, std::ostream& err);

/// Resolves the registry for an annotation file at <root>/frames/<id>.json
/// as <root>/models/registry.json when `registry` is empty.
int cmd_project(const std::filesystem::path& annotation, const std::optional<std::filesystem::path>& registry,
                const std::optional<std::filesystem::path>& out_path, std::ostream& out, std::ostream& err);
Json project_annotations(const AnnotationSet& set, const ModelRegistry& registry);

int cmd_solve(const std::filesystem::path& request, const std::filesystem::path& registry, std::ostream& out,
              std::ostream& err);

}  // namespace twinpose
