#pragma once

// Data-parallel inner loops shared by the mesh, loss, metric and projection
// code. Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2 variant chosen at runtime. Variants agree bit-for-bit on per-element
// outputs (minima, argmax, projected pixels); reductions that sum across
// elements may differ in the last few ulps because lanes accumulate
// separately.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace twinpose::simd {

/// Structure-of-arrays view over n points.
struct PointsView {
  const double* x = nullptr;
  const double* y = nullptr;
  const double* z = nullptr;
  std::size_t size = 0;
};

/// Owning structure-of-arrays point buffer.
class PointBuffer {
 public:
  PointBuffer() = default;
  explicit PointBuffer(std::size_t n) : x_(n), y_(n), z_(n) {}

  template <typename Range>
  static PointBuffer from(const Range& points) {
    PointBuffer b(std::size(points));
    std::size_t i = 0;
    for (const auto& p : points) {
      b.x_[i] = p[0];
      b.y_[i] = p[1];
      b.z_[i] = p[2];
      ++i;
    }
    return b;
  }

  std::size_t size() const { return x_.size(); }
  PointsView view() const { return {x_.data(), y_.data(), z_.data(), x_.size()}; }

 private:
  std::vector<double> x_, y_, z_;
};

/// Row-major 3x3 rotation plus translation.
struct RigidTransform {
  double r[9];
  double t[3];
};

struct PinholeParams {
  double f;
  double cx;
  double cy;
};

enum class Backend { kScalar, kAvx2 };

std::string_view backend_name(Backend b);
bool backend_supported(Backend b);
Backend active_backend();
/// Returns false (and leaves the active backend unchanged) if unsupported.
bool set_backend(Backend b);

/// out[i] = min_j |q_i - r_j|^2. refs must be non-empty.
void nearest_squared_distances(PointsView queries, PointsView refs, std::span<double> out);

/// One farthest-point-sampling step: min_d2[i] = min(min_d2[i], |p_i - pivot|^2)
/// and returns the index of the largest non-negative min_d2 (lowest index on
/// ties). Entries holding a negative value are treated as already selected
/// and keep their value. Returns size() if no entry is eligible.
std::size_t fps_update(PointsView points, const double pivot[3], std::span<double> min_d2);

/// Camera-frame transform followed by pinhole projection:
/// c = R p + t;  u = f * c.x / c.z + cx;  v = f * c.y / c.z + cy;  depth = c.z.
/// u and v are unspecified where depth <= 0; callers check depth.
void rigid_project(PointsView points, const RigidTransform& tf, const PinholeParams& cam, std::span<double> u,
                   std::span<double> v, std::span<double> depth);

/// sum_i |A p_i + b|, used for average-distance metrics with A = R1 - R2.
double affine_norm_sum(PointsView points, const RigidTransform& affine);

// Per-backend entry points, exposed for equivalence testing.
namespace scalar {
void nearest_squared_distances(PointsView queries, PointsView refs, std::span<double> out);
std::size_t fps_update(PointsView points, const double pivot[3], std::span<double> min_d2);
void rigid_project(PointsView points, const RigidTransform& tf, const PinholeParams& cam, std::span<double> u,
                   std::span<double> v, std::span<double> depth);
double affine_norm_sum(PointsView points, const RigidTransform& affine);
}  // namespace scalar

namespace avx2 {
void nearest_squared_distances(PointsView queries, PointsView refs, std::span<double> out);
std::size_t fps_update(PointsView points, const double pivot[3], std::span<double> min_d2);
void rigid_project(PointsView points, const RigidTransform& tf, const PinholeParams& cam, std::span<double> u,
                   std::span<double> v, std::span<double> depth);
double affine_norm_sum(PointsView points, const RigidTransform& affine);
}  // namespace avx2

}  // namespace twinpose::simd
