#include <cmath>
#include <limits>

#include "twinpose/simd/kernels.hpp"

namespace twinpose::simd::scalar {

void nearest_squared_distances(PointsView queries, PointsView refs, std::span<double> out) {
  for (std::size_t i = 0; i < queries.size; ++i) {
    const double qx = queries.x[i], qy = queries.y[i], qz = queries.z[i];
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < refs.size; ++j) {
      const double dx = qx - refs.x[j];
      const double dy = qy - refs.y[j];
      const double dz = qz - refs.z[j];
      const double d2 = dx * dx + dy * dy + dz * dz;
      best = d2 < best ? d2 : best;
    }
    out[i] = best;
  }
}

std::size_t fps_update(PointsView points, const double pivot[3], std::span<double> min_d2) {
  std::size_t best_index = points.size;
  double best = -1.0;
  for (std::size_t i = 0; i < points.size; ++i) {
    const double dx = points.x[i] - pivot[0];
    const double dy = points.y[i] - pivot[1];
    const double dz = points.z[i] - pivot[2];
    const double d2 = dx * dx + dy * dy + dz * dz;
    const double m = d2 < min_d2[i] ? d2 : min_d2[i];
    min_d2[i] = m;
    if (m > best) {
      best = m;
      best_index = i;
    }
  }
  return best_index;
}

void rigid_project(PointsView points, const RigidTransform& tf, const PinholeParams& cam, std::span<double> u,
                   std::span<double> v, std::span<double> depth) {
  const double* r = tf.r;
  for (std::size_t i = 0; i < points.size; ++i) {
    const double px = points.x[i], py = points.y[i], pz = points.z[i];
    const double cx = r[0] * px + r[1] * py + r[2] * pz + tf.t[0];
    const double cy = r[3] * px + r[4] * py + r[5] * pz + tf.t[1];
    const double cz = r[6] * px + r[7] * py + r[8] * pz + tf.t[2];
    u[i] = cam.f * cx / cz + cam.cx;
    v[i] = cam.f * cy / cz + cam.cy;
    depth[i] = cz;
  }
}

double affine_norm_sum(PointsView points, const RigidTransform& a) {
  double sum = 0.0;
  for (std::size_t i = 0; i < points.size; ++i) {
    const double px = points.x[i], py = points.y[i], pz = points.z[i];
    const double ex = a.r[0] * px + a.r[1] * py + a.r[2] * pz + a.t[0];
    const double ey = a.r[3] * px + a.r[4] * py + a.r[5] * pz + a.t[1];
    const double ez = a.r[6] * px + a.r[7] * py + a.r[8] * pz + a.t[2];
    sum += std::sqrt(ex * ex + ey * ey + ez * ez);
  }
  return sum;
}

}  // namespace twinpose::simd::scalar
