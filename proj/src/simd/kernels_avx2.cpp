// Compiled with -mavx2 only (no -mfma): each lane must round exactly like the
// scalar reference.

#include <immintrin.h>

#include <cmath>
#include <limits>

#include "twinpose/simd/kernels.hpp"

namespace twinpose::simd::avx2 {

namespace {

inline double hmin(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d m = _mm_min_pd(lo, hi);
  const __m128d s = _mm_min_pd(m, _mm_unpackhi_pd(m, m));
  return _mm_cvtsd_f64(s);
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// ((r0*x + r1*y) + r2*z) + t, same association as the scalar code.
inline __m256d affine_row(__m256d r0, __m256d r1, __m256d r2, __m256d t, __m256d x, __m256d y, __m256d z) {
  __m256d acc = _mm256_mul_pd(r0, x);
  acc = _mm256_add_pd(acc, _mm256_mul_pd(r1, y));
  acc = _mm256_add_pd(acc, _mm256_mul_pd(r2, z));
  return _mm256_add_pd(acc, t);
}

inline __m256d squared_norm(__m256d dx, __m256d dy, __m256d dz) {
  __m256d acc = _mm256_mul_pd(dx, dx);
  acc = _mm256_add_pd(acc, _mm256_mul_pd(dy, dy));
  return _mm256_add_pd(acc, _mm256_mul_pd(dz, dz));
}

}  // namespace

void nearest_squared_distances(PointsView queries, PointsView refs, std::span<double> out) {
  const std::size_t n = refs.size;
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < queries.size; ++i) {
    const double qx = queries.x[i], qy = queries.y[i], qz = queries.z[i];
    const __m256d vqx = _mm256_set1_pd(qx);
    const __m256d vqy = _mm256_set1_pd(qy);
    const __m256d vqz = _mm256_set1_pd(qz);
    __m256d vbest = _mm256_set1_pd(std::numeric_limits<double>::infinity());
    for (std::size_t j = 0; j < n4; j += 4) {
      const __m256d dx = _mm256_sub_pd(vqx, _mm256_loadu_pd(refs.x + j));
      const __m256d dy = _mm256_sub_pd(vqy, _mm256_loadu_pd(refs.y + j));
      const __m256d dz = _mm256_sub_pd(vqz, _mm256_loadu_pd(refs.z + j));
      vbest = _mm256_min_pd(squared_norm(dx, dy, dz), vbest);
    }
    double best = hmin(vbest);
    for (std::size_t j = n4; j < n; ++j) {
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
  const std::size_t n = points.size;
  const std::size_t n4 = n - n % 4;
  const __m256d px = _mm256_set1_pd(pivot[0]);
  const __m256d py = _mm256_set1_pd(pivot[1]);
  const __m256d pz = _mm256_set1_pd(pivot[2]);
  __m256d best = _mm256_set1_pd(-1.0);
  __m256d best_idx = _mm256_set1_pd(static_cast<double>(n));
  __m256d idx = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);
  const __m256d four = _mm256_set1_pd(4.0);
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(points.x + i), px);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(points.y + i), py);
    const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(points.z + i), pz);
    const __m256d m = _mm256_min_pd(squared_norm(dx, dy, dz), _mm256_loadu_pd(min_d2.data() + i));
    _mm256_storeu_pd(min_d2.data() + i, m);
    const __m256d gt = _mm256_cmp_pd(m, best, _CMP_GT_OQ);
    best = _mm256_blendv_pd(best, m, gt);
    best_idx = _mm256_blendv_pd(best_idx, idx, gt);
    idx = _mm256_add_pd(idx, four);
  }
  alignas(32) double vals[4];
  alignas(32) double inds[4];
  _mm256_store_pd(vals, best);
  _mm256_store_pd(inds, best_idx);
  double best_val = -1.0;
  std::size_t best_index = n;
  for (int l = 0; l < 4; ++l) {
    const auto li = static_cast<std::size_t>(inds[l]);
    if (vals[l] > best_val || (vals[l] == best_val && li < best_index)) {
      best_val = vals[l];
      best_index = li;
    }
  }
  for (std::size_t i = n4; i < n; ++i) {
    const double dx = points.x[i] - pivot[0];
    const double dy = points.y[i] - pivot[1];
    const double dz = points.z[i] - pivot[2];
    const double d2 = dx * dx + dy * dy + dz * dz;
    const double m = d2 < min_d2[i] ? d2 : min_d2[i];
    min_d2[i] = m;
    if (m > best_val) {
      best_val = m;
      best_index = i;
    }
  }
  return best_index;
}

void rigid_project(PointsView points, const RigidTransform& tf, const PinholeParams& cam, std::span<double> u,
                   std::span<double> v, std::span<double> depth) {
  const std::size_t n = points.size;
  const std::size_t n4 = n - n % 4;
  __m256d r[9];
  for (int k = 0; k < 9; ++k) r[k] = _mm256_set1_pd(tf.r[k]);
  const __m256d t0 = _mm256_set1_pd(tf.t[0]);
  const __m256d t1 = _mm256_set1_pd(tf.t[1]);
  const __m256d t2 = _mm256_set1_pd(tf.t[2]);
  const __m256d f = _mm256_set1_pd(cam.f);
  const __m256d ccx = _mm256_set1_pd(cam.cx);
  const __m256d ccy = _mm256_set1_pd(cam.cy);
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d x = _mm256_loadu_pd(points.x + i);
    const __m256d y = _mm256_loadu_pd(points.y + i);
    const __m256d z = _mm256_loadu_pd(points.z + i);
    const __m256d cx = affine_row(r[0], r[1], r[2], t0, x, y, z);
    const __m256d cy = affine_row(r[3], r[4], r[5], t1, x, y, z);
    const __m256d cz = affine_row(r[6], r[7], r[8], t2, x, y, z);
    _mm256_storeu_pd(u.data() + i, _mm256_add_pd(_mm256_div_pd(_mm256_mul_pd(f, cx), cz), ccx));
    _mm256_storeu_pd(v.data() + i, _mm256_add_pd(_mm256_div_pd(_mm256_mul_pd(f, cy), cz), ccy));
    _mm256_storeu_pd(depth.data() + i, cz);
  }
  if (n4 < n) {
    PointsView tail{points.x + n4, points.y + n4, points.z + n4, n - n4};
    scalar::rigid_project(tail, tf, cam, u.subspan(n4), v.subspan(n4), depth.subspan(n4));
  }
}

double affine_norm_sum(PointsView points, const RigidTransform& a) {
  const std::size_t n = points.size;
  const std::size_t n4 = n - n % 4;
  __m256d r[9];
  for (int k = 0; k < 9; ++k) r[k] = _mm256_set1_pd(a.r[k]);
  const __m256d t0 = _mm256_set1_pd(a.t[0]);
  const __m256d t1 = _mm256_set1_pd(a.t[1]);
  const __m256d t2 = _mm256_set1_pd(a.t[2]);
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d x = _mm256_loadu_pd(points.x + i);
    const __m256d y = _mm256_loadu_pd(points.y + i);
    const __m256d z = _mm256_loadu_pd(points.z + i);
    const __m256d ex = affine_row(r[0], r[1], r[2], t0, x, y, z);
    const __m256d ey = affine_row(r[3], r[4], r[5], t1, x, y, z);
    const __m256d ez = affine_row(r[6], r[7], r[8], t2, x, y, z);
    acc = _mm256_add_pd(acc, _mm256_sqrt_pd(squared_norm(ex, ey, ez)));
  }
  double sum = hsum(acc);
  if (n4 < n) {
    PointsView tail{points.x + n4, points.y + n4, points.z + n4, n - n4};
    sum += scalar::affine_norm_sum(tail, a);
  }
  return sum;
}

}  // namespace twinpose::simd::avx2
