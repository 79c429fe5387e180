#include "twinpose/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "twinpose/simd/kernels.hpp"

namespace twinpose {

namespace {

constexpr double kMinFaceArea = 1e-15;

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Vec3 face_cross(const TriMesh& m, std::size_t f) {
  const Face& t = m.faces[f];
  return (m.vertices[t[1]] - m.vertices[t[0]]).cross(m.vertices[t[2]] - m.vertices[t[0]]);
}

// Parses the leading integer of an OBJ face token such as "7", "7/2" or "7//3".
bool parse_face_index(std::string_view token, long& out) {
  const auto slash = token.find('/');
  const std::string_view head = token.substr(0, slash);
  const auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), out);
  return ec == std::errc() && ptr == head.data() + head.size();
}

}  // namespace

MeshParseError::MeshParseError(const std::string& source, std::size_t line, const std::string& what)
    : MeshError(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + what), line_(line) {}

void TriMesh::validate() const {
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    if (!is_finite(vertices[i])) throw MeshError("vertex " + std::to_string(i) + " is not finite");
  }
  for (std::size_t f = 0; f < faces.size(); ++f) {
    for (auto idx : faces[f]) {
      if (idx >= vertices.size()) {
        throw MeshError("face " + std::to_string(f) + " references vertex " + std::to_string(idx) + " out of range");
      }
    }
    if (!(face_area(f) > kMinFaceArea)) throw MeshError("face " + std::to_string(f) + " is degenerate");
  }
}

Vec3 TriMesh::face_normal(std::size_t f) const { return face_cross(*this, f).normalized(); }

double TriMesh::face_area(std::size_t f) const { return 0.5 * face_cross(*this, f).norm(); }

double TriMesh::total_area() const {
  double a = 0.0;
  for (std::size_t f = 0; f < faces.size(); ++f) a += face_area(f);
  return a;
}

TriMesh TriMesh::scaled(const Vec3& scale) const {
  TriMesh out = *this;
  for (auto& v : out.vertices) v = v.cwiseProduct(scale);
  return out;
}

TriMesh TriMesh::transformed(const Mat3& rotation, const Vec3& translation) const {
  TriMesh out = *this;
  for (auto& v : out.vertices) v = rotation * v + translation;
  return out;
}

TriMesh parse_obj(std::istream& in, const std::string& source_name) {
  TriMesh mesh;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::pair<std::size_t, std::vector<long>>> polygons;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) throw MeshParseError(source_name, line_no, "malformed vertex");
      mesh.vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<long> idx;
      std::string token;
      while (ls >> token) {
        long value = 0;
        if (!parse_face_index(token, value)) {
          throw MeshParseError(source_name, line_no, "malformed face index '" + token + "'");
        }
        if (value == 0) throw MeshParseError(source_name, line_no, "face index 0 is invalid (indices are 1-based)");
        idx.push_back(value);
      }
      if (idx.size() < 3) throw MeshParseError(source_name, line_no, "face needs at least 3 vertices");
      // Negative indices are relative to the vertices read so far.
      for (auto& v : idx) {
        if (v < 0) v = static_cast<long>(mesh.vertices.size()) + v + 1;
        if (v < 1 || static_cast<std::size_t>(v) > mesh.vertices.size()) {
          throw MeshParseError(source_name, line_no, "face index out of range");
        }
      }
      polygons.emplace_back(line_no, std::move(idx));
    }
  }
  for (const auto& [ln, poly] : polygons) {
    for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
      mesh.faces.push_back({static_cast<std::uint32_t>(poly[0] - 1), static_cast<std::uint32_t>(poly[k] - 1),
                            static_cast<std::uint32_t>(poly[k + 1] - 1)});
      if (!(mesh.face_area(mesh.faces.size() - 1) > kMinFaceArea)) {
        throw MeshParseError(source_name, ln, "degenerate face");
      }
    }
  }
  if (mesh.faces.empty()) throw MeshParseError(source_name, 0, "mesh has no faces");
  mesh.validate();
  return mesh;
}

TriMesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file " + path.string());
  return parse_obj(in, path.string());
}

SampledCloud sample_uniform(const TriMesh& mesh, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw MeshError("sample count must be >= 1");
  std::vector<double> cumulative(mesh.faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    total += mesh.face_area(f);
    cumulative[f] = total;
  }
  if (!(total > 0.0)) throw MeshError("cannot sample a mesh with zero surface area");

  std::mt19937_64 rng(seed);
  SampledCloud cloud;
  cloud.points.reserve(n);
  cloud.normals.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double target = unit_uniform(rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    if (it == cumulative.end()) --it;
    const auto f = static_cast<std::size_t>(it - cumulative.begin());
    const double s = std::sqrt(unit_uniform(rng));
    const double r = unit_uniform(rng);
    const Face& t = mesh.faces[f];
    cloud.points.push_back((1.0 - s) * mesh.vertices[t[0]] + s * (1.0 - r) * mesh.vertices[t[1]] +
                           s * r * mesh.vertices[t[2]]);
    cloud.normals.push_back(mesh.face_normal(f));
  }
  return cloud;
}

std::vector<std::size_t> farthest_point_sample(std::span<const Vec3> points, std::size_t k, std::size_t start) {
  if (k < 1 || k > points.size()) {
    throw MeshError("farthest point sample size " + std::to_string(k) + " out of range [1, " +
                    std::to_string(points.size()) + "]");
  }
  if (start >= points.size()) throw MeshError("farthest point sample start index out of range");
  const auto buffer = simd::PointBuffer::from(points);
  std::vector<double> min_d2(points.size(), std::numeric_limits<double>::infinity());
  std::vector<std::size_t> selected{start};
  selected.reserve(k);
  std::size_t current = start;
  while (selected.size() < k) {
    min_d2[current] = -1.0;
    const double pivot[3] = {points[current].x(), points[current].y(), points[current].z()};
    current = simd::fps_update(buffer.view(), pivot, min_d2);
    min_d2[current] = -1.0;
    selected.push_back(current);
  }
  return selected;
}

std::vector<Edge> edges(const TriMesh& mesh) {
  std::vector<Edge> out;
  out.reserve(mesh.faces.size() * 3);
  for (const Face& f : mesh.faces) {
    for (int k = 0; k < 3; ++k) {
      const auto a = f[k], b = f[(k + 1) % 3];
      out.push_back({std::min(a, b), std::max(a, b)});
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::vector<std::uint32_t>> adjacency(const TriMesh& mesh) {
  std::vector<std::vector<std::uint32_t>> nbrs(mesh.vertices.size());
  for (const Edge& e : edges(mesh)) {
    nbrs[e.a].push_back(e.b);
    nbrs[e.b].push_back(e.a);
  }
  for (auto& n : nbrs) std::sort(n.begin(), n.end());
  return nbrs;
}

std::vector<FacePair> face_pairs(const TriMesh& mesh) {
  std::map<Edge, std::vector<std::uint32_t>> edge_faces;
  for (std::uint32_t f = 0; f < mesh.faces.size(); ++f) {
    const Face& t = mesh.faces[f];
    for (int k = 0; k < 3; ++k) {
      const auto a = t[k], b = t[(k + 1) % 3];
      edge_faces[{std::min(a, b), std::max(a, b)}].push_back(f);
    }
  }
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (const auto& [edge, fs] : edge_faces) {
    for (std::size_t i = 0; i < fs.size(); ++i) {
      for (std::size_t j = i + 1; j < fs.size(); ++j) pairs.emplace_back(std::min(fs[i], fs[j]), std::max(fs[i], fs[j]));
    }
  }
  // Faces sharing two edges would appear twice.
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  std::vector<FacePair> out;
  out.reserve(pairs.size());
  for (const auto& [a, b] : pairs) out.push_back({a, b, mesh.face_normal(a), mesh.face_normal(b)});
  return out;
}

bool has_consistent_winding(const TriMesh& mesh) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> directed;
  for (const Face& t : mesh.faces) {
    for (int k = 0; k < 3; ++k) {
      if (++directed[{t[k], t[(k + 1) % 3]}] > 1) return false;
    }
  }
  return true;
}

double diameter(std::span<const Vec3> points) {
  if (points.size() < 2) throw MeshError("diameter needs at least 2 points");
  double best = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) best = std::max(best, (points[i] - points[j]).squaredNorm());
  }
  return std::sqrt(best);
}

double diameter(const TriMesh& mesh) { return diameter(std::span<const Vec3>(mesh.vertices)); }

}  // namespace twinpose
