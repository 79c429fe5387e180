#include <atomic>
#include <cstdlib>
#include <string>

#include "twinpose/simd/kernels.hpp"

namespace twinpose::simd {

#ifndef TWINPOSE_HAVE_AVX2
// Without the AVX2 translation unit the entry points exist but report
// unsupported through backend_supported(); they fall back to scalar.
namespace avx2 {
void nearest_squared_distances(PointsView q, PointsView r, std::span<double> out) {
  scalar::nearest_squared_distances(q, r, out);
}
std::size_t fps_update(PointsView p, const double pivot[3], std::span<double> d) {
  return scalar::fps_update(p, pivot, d);
}
void rigid_project(PointsView p, const RigidTransform& tf, const PinholeParams& cam, std::span<double> u,
                   std::span<double> v, std::span<double> depth) {
  scalar::rigid_project(p, tf, cam, u, v, depth);
}
double affine_norm_sum(PointsView p, const RigidTransform& a) { return scalar::affine_norm_sum(p, a); }
}  // namespace avx2
#endif

namespace {

struct KernelTable {
  void (*nearest)(PointsView, PointsView, std::span<double>);
  std::size_t (*fps)(PointsView, const double*, std::span<double>);
  void (*project)(PointsView, const RigidTransform&, const PinholeParams&, std::span<double>, std::span<double>,
                  std::span<double>);
  double (*affine_norm)(PointsView, const RigidTransform&);
};

constexpr KernelTable kScalarTable{scalar::nearest_squared_distances, scalar::fps_update, scalar::rigid_project,
                                   scalar::affine_norm_sum};
constexpr KernelTable kAvx2Table{avx2::nearest_squared_distances, avx2::fps_update, avx2::rigid_project,
                                 avx2::affine_norm_sum};

bool cpu_has_avx2() {
#if defined(TWINPOSE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Backend initial_backend() {
  // TWINPOSE_SIMD=scalar forces the reference kernels.
  if (const char* env = std::getenv("TWINPOSE_SIMD"); env != nullptr && std::string(env) == "scalar") {
    return Backend::kScalar;
  }
  return cpu_has_avx2() ? Backend::kAvx2 : Backend::kScalar;
}

std::atomic<Backend>& backend_slot() {
  static std::atomic<Backend> slot{initial_backend()};
  return slot;
}

const KernelTable& table() { return backend_slot().load(std::memory_order_relaxed) == Backend::kAvx2 ? kAvx2Table : kScalarTable; }

}  // namespace

std::string_view backend_name(Backend b) { return b == Backend::kAvx2 ? "avx2" : "scalar"; }

bool backend_supported(Backend b) { return b == Backend::kScalar || cpu_has_avx2(); }

Backend active_backend() { return backend_slot().load(); }

bool set_backend(Backend b) {
  if (!backend_supported(b)) return false;
  backend_slot().store(b);
  return true;
}

void nearest_squared_distances(PointsView queries, PointsView refs, std::span<double> out) {
  table().nearest(queries, refs, out);
}

std::size_t fps_update(PointsView points, const double pivot[3], std::span<double> min_d2) {
  return table().fps(points, pivot, min_d2);
}

void rigid_project(PointsView points, const RigidTransform& tf, const PinholeParams& cam, std::span<double> u,
                   std::span<double> v, std::span<double> depth) {
  table().project(points, tf, cam, u, v, depth);
}

double affine_norm_sum(PointsView points, const RigidTransform& affine) { return table().affine_norm(points, affine); }

}  // namespace twinpose::simd
