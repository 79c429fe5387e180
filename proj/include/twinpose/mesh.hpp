#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "twinpose/geometry.hpp"

namespace twinpose {

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// OBJ parse failure; line is 1-based (0 when not tied to a line).
class MeshParseError : public MeshError {
 public:
  MeshParseError(const std::string& source, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

using Face = std::array<std::uint32_t, 3>;

/// Triangle mesh, 0-based indices, counter-clockwise winding.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;

  /// Index range, non-degenerate faces (area > 1e-15) and finite vertices.
  void validate() const;

  Vec3 face_normal(std::size_t f) const;  ///< unit normal from CCW winding
  double face_area(std::size_t f) const;
  double total_area() const;

  /// Per-axis scale about the object origin.
  TriMesh scaled(const Vec3& scale) const;
  TriMesh transformed(const Mat3& rotation, const Vec3& translation) const;
};

struct SampledCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
};

/// Unordered vertex pair, stored with a < b.
struct Edge {
  std::uint32_t a;
  std::uint32_t b;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Two faces sharing an edge, with their unit normals.
struct FacePair {
  std::uint32_t first;
  std::uint32_t second;
  Vec3 first_normal;
  Vec3 second_normal;
};

inline constexpr std::size_t kDefaultSampleCount = 2048;

TriMesh parse_obj(std::istream& in, const std::string& source_name = "<stream>");
TriMesh load_mesh(const std::filesystem::path& path);

/// Area-weighted uniform surface sampling; normals are the sampled faces'
/// normals. Deterministic for a given (mesh, n, seed).
SampledCloud sample_uniform(const TriMesh& mesh, std::size_t n, std::uint64_t seed);

/// Greedy max-min selection starting at `start`; ties go to the lowest index.
std::vector<std::size_t> farthest_point_sample(std::span<const Vec3> points, std::size_t k, std::size_t start = 0);

/// Unique undirected edges, sorted.
std::vector<Edge> edges(const TriMesh& mesh);
/// Sorted neighbor lists; j in adjacency[i] iff i in adjacency[j].
std::vector<std::vector<std::uint32_t>> adjacency(const TriMesh& mesh);
/// Every pair of faces sharing an edge (all pairs for non-manifold edges).
std::vector<FacePair> face_pairs(const TriMesh& mesh);

/// True when each interior edge is traversed in opposite directions by its
/// two faces.
bool has_consistent_winding(const TriMesh& mesh);

/// Largest pairwise vertex distance.
double diameter(const TriMesh& mesh);
double diameter(std::span<const Vec3> points);

}  // namespace twinpose
