#pragma once

#include <cmath>
#include <optional>

#include "admgs/camera.hpp"
#include "admgs/errors.hpp"
#include "admgs/vec.hpp"

namespace admgs {

// Adjoint-layout helpers for symmetric matrices in unique-entry storage.
// Stored off-diagonal adjoints count both mirror positions; the full-matrix
// form used by generic matrix calculus carries half in each slot.
template <class T>
Mat3<T> sym3_bar_to_full(const Sym3<T>& b) {
  Mat3<T> f;
  f.m[0][0] = b.xx;
  f.m[1][1] = b.yy;
  f.m[2][2] = b.zz;
  f.m[0][1] = f.m[1][0] = b.xy / T(2);
  f.m[0][2] = f.m[2][0] = b.xz / T(2);
  f.m[1][2] = f.m[2][1] = b.yz / T(2);
  return f;
}

template <class T>
Sym3<T> full_to_sym3_bar(const Mat3<T>& f) {
  Sym3<T> b;
  b.xx = f.m[0][0];
  b.yy = f.m[1][1];
  b.zz = f.m[2][2];
  b.xy = f.m[0][1] + f.m[1][0];
  b.xz = f.m[0][2] + f.m[2][0];
  b.yz = f.m[1][2] + f.m[2][1];
  return b;
}

// Σ = R · diag(exp(log_scale))² · Rᵀ. The quaternion is normalized
// internally; covariance_from_backward chains through that normalization,
// so a slightly drifted parameter quaternion is handled exactly.
template <class T>
Sym3<T> covariance_from_unchecked(const Vec3<T>& log_scale,
                                  const Quat<T>& rotation) {
  const Mat3<T> r = rotation.to_matrix();
  const Vec3<T> d{std::exp(T(2) * log_scale.x), std::exp(T(2) * log_scale.y),
                  std::exp(T(2) * log_scale.z)};
  Mat3<T> rd = r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) rd.m[i][j] *= d[j];
  return Sym3<T>::from_full(rd * r.transposed());
}

// Checked variant enforcing the unit-norm precondition.
template <class T>
Sym3<T> covariance_from(const Vec3<T>& log_scale, const Quat<T>& rotation) {
  if (std::abs(double(rotation.norm()) - 1.0) > 1e-6) {
    throw InvalidArgument("covariance_from: quaternion must be unit-norm");
  }
  return covariance_from_unchecked(log_scale, rotation);
}

// Adjoints of covariance_from; accumulates into *log_scale_bar and *q_bar.
template <class T>
void covariance_from_backward(const Vec3<T>& log_scale, const Quat<T>& rotation,
                              const Sym3<T>& sigma_bar, Vec3<T>* log_scale_bar,
                              Quat<T>* q_bar) {
  const Mat3<T> r = rotation.to_matrix();
  const Vec3<T> d{std::exp(T(2) * log_scale.x), std::exp(T(2) * log_scale.y),
                  std::exp(T(2) * log_scale.z)};
  const Mat3<T> sb = sym3_bar_to_full(sigma_bar);
  // R̄ = 2 S̄ R D (S̄ symmetric).
  Mat3<T> rd = r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) rd.m[i][j] *= d[j];
  const Mat3<T> r_bar = (sb * rd) * T(2);
  // D̄ = diag(Rᵀ S̄ R); log_scalē_k = D̄_kk · 2 e^{2 ls_k}.
  const Mat3<T> rtsr = r.transposed() * sb * r;
  for (int k = 0; k < 3; ++k) {
    (*log_scale_bar)[k] += rtsr.m[k][k] * T(2) * d[k];
  }
  const Quat<T> qb = quat_to_matrix_backward(rotation, r_bar);
  q_bar->w += qb.w;
  q_bar->x += qb.x;
  q_bar->y += qb.y;
  q_bar->z += qb.z;
}

// Index of the shortest axis; equal scales resolve to the lowest index.
template <class T>
int shortest_axis_index(const Vec3<T>& log_scale) {
  int k = 0;
  if (log_scale.y < log_scale[k]) k = 1;
  if (log_scale.z < log_scale[k]) k = 2;
  return k;
}

// Geometric normal of a splat: the rotation column of the shortest axis,
// oriented toward the camera.
template <class T>
struct NormalResult {
  Vec3<T> n;
  int axis;
  T sign;
};

template <class T>
NormalResult<T> shortest_axis_normal(const Vec3<T>& log_scale,
                                     const Quat<T>& rotation,
                                     const Vec3<T>& gaussian_center,
                                     const Vec3<T>& camera_center) {
  const Vec3<T> to_camera = camera_center - gaussian_center;
  if (to_camera.squared_norm() == T(0)) {
    throw DegenerateGeometry(
        "shortest_axis_normal: camera coincides with the Gaussian center");
  }
  const int axis = shortest_axis_index(log_scale);
  const Vec3<T> u = rotation.to_matrix().col(axis);
  const T sign = u.dot(to_camera) >= T(0) ? T(1) : T(-1);
  return {u * sign, axis, sign};
}

// Accumulates the quaternion adjoint of shortest_axis_normal. The axis
// choice and orientation sign are treated as locally constant.
template <class T>
void shortest_axis_normal_backward(const Quat<T>& rotation, int axis, T sign,
                                   const Vec3<T>& n_bar, Quat<T>* q_bar) {
  Mat3<T> r_bar{};
  r_bar.m[0][axis] = sign * n_bar.x;
  r_bar.m[1][axis] = sign * n_bar.y;
  r_bar.m[2][axis] = sign * n_bar.z;
  const Quat<T> qb = quat_to_matrix_backward(rotation, r_bar);
  q_bar->w += qb.w;
  q_bar->x += qb.x;
  q_bar->y += qb.y;
  q_bar->z += qb.z;
}

// 2D screen-space splat produced by EWA projection.
template <class T>
struct Splat2D {
  Vec2<T> mean;   // pixel coordinates
  Sym2<T> cov2d;  // includes the low-pass term
  T depth{};      // camera-frame z
};

struct ProjectionOptions {
  double near_plane = 0.01;  // cull at or below this camera-frame depth
  double lowpass = 0.3;      // λ_lp added to both cov2d diagonals, px²
};

template <class T>
struct ProjectionCache {
  Vec3<T> t_cam;  // camera-frame center
};

// First-order (EWA) projection of a world-space Gaussian. Returns nullopt
// when the center is culled by the near plane.
template <class T>
std::optional<Splat2D<T>> project_gaussian(const Vec3<T>& center,
                                           const Sym3<T>& cov,
                                           const Camera<T>& camera,
                                           const ProjectionOptions& opts = {},
                                           ProjectionCache<T>* cache = nullptr) {
  const Vec3<T> t = camera.world_to_camera.apply(center);
  if (!(t.z > T(opts.near_plane))) return std::nullopt;
  if (cache) cache->t_cam = t;

  Splat2D<T> s;
  s.depth = t.z;
  s.mean = {camera.fx * t.x / t.z + camera.cx,
            camera.fy * t.y / t.z + camera.cy};

  const Mat3<T>& w = camera.world_to_camera.rotation;
  const Mat3<T> m = w * cov.full() * w.transposed();
  const T iz = T(1) / t.z;
  const T iz2 = iz * iz;
  // J = d(pixel)/d(camera point), 2x3, evaluated at the center.
  const T j00 = camera.fx * iz, j02 = -camera.fx * t.x * iz2;
  const T j11 = camera.fy * iz, j12 = -camera.fy * t.y * iz2;
  // cov2d = J M Jᵀ + λ_lp I.
  const T a = j00 * (j00 * m.m[0][0] + j02 * m.m[2][0]) +
              j02 * (j00 * m.m[0][2] + j02 * m.m[2][2]);
  const T b = j00 * (j11 * m.m[0][1] + j12 * m.m[0][2]) +
              j02 * (j11 * m.m[2][1] + j12 * m.m[2][2]);
  const T c = j11 * (j11 * m.m[1][1] + j12 * m.m[2][1]) +
              j12 * (j11 * m.m[1][2] + j12 * m.m[2][2]);
  s.cov2d = {a + T(opts.lowpass), b, c + T(opts.lowpass)};
  return s;
}

// Adjoints of project_gaussian. cov2d_bar is in unique-entry storage
// (its b component counts both off-diagonal slots). Accumulates into
// *center_bar and *sigma_bar.
template <class T>
void project_gaussian_backward(const Sym3<T>& cov, const Camera<T>& camera,
                               const ProjectionCache<T>& cache,
                               const Vec2<T>& mean_bar, const Sym2<T>& cov2d_bar,
                               T depth_bar, Vec3<T>* center_bar,
                               Sym3<T>* sigma_bar) {
  const Vec3<T>& t = cache.t_cam;
  const Mat3<T>& w = camera.world_to_camera.rotation;
  const Mat3<T> m = w * cov.full() * w.transposed();
  const T iz = T(1) / t.z;
  const T iz2 = iz * iz;
  const T j00 = camera.fx * iz, j02 = -camera.fx * t.x * iz2;
  const T j11 = camera.fy * iz, j12 = -camera.fy * t.y * iz2;

  // Full-matrix adjoint of cov2d (symmetric halves).
  const T g00 = cov2d_bar.a, g01 = cov2d_bar.b / T(2), g11 = cov2d_bar.c;

  // M̄ = Jᵀ Ḡ J with J rows (j00, 0, j02) and (0, j11, j12).
  Mat3<T> m_bar{};
  m_bar.m[0][0] = j00 * g00 * j00;
  m_bar.m[0][1] = j00 * g01 * j11;
  m_bar.m[0][2] = j00 * (g00 * j02 + g01 * j12);
  m_bar.m[1][0] = j11 * g01 * j00;
  m_bar.m[1][1] = j11 * g11 * j11;
  m_bar.m[1][2] = j11 * (g01 * j02 + g11 * j12);
  m_bar.m[2][0] = j02 * g00 * j00 + j12 * g01 * j00;
  m_bar.m[2][1] = j02 * g01 * j11 + j12 * g11 * j11;
  m_bar.m[2][2] = j02 * (g00 * j02 + g01 * j12) + j12 * (g01 * j02 + g11 * j12);

  // Σ̄ = Wᵀ M̄ W.
  const Mat3<T> sig_full = w.transposed() * m_bar * w;
  const Sym3<T> sig_add = full_to_sym3_bar(sig_full);
  sigma_bar->xx += sig_add.xx;
  sigma_bar->xy += sig_add.xy;
  sigma_bar->xz += sig_add.xz;
  sigma_bar->yy += sig_add.yy;
  sigma_bar->yz += sig_add.yz;
  sigma_bar->zz += sig_add.zz;

  // J̄ = 2 Ḡ J M  (Ḡ, M symmetric). Only the four nonzero J entries matter.
  const T row0[3] = {j00 * m.m[0][0] + j02 * m.m[2][0],
                     j00 * m.m[0][1] + j02 * m.m[2][1],
                     j00 * m.m[0][2] + j02 * m.m[2][2]};
  const T row1[3] = {j11 * m.m[1][0] + j12 * m.m[2][0],
                     j11 * m.m[1][1] + j12 * m.m[2][1],
                     j11 * m.m[1][2] + j12 * m.m[2][2]};
  const T jbar00 = T(2) * (g00 * row0[0] + g01 * row1[0]);
  const T jbar02 = T(2) * (g00 * row0[2] + g01 * row1[2]);
  const T jbar11 = T(2) * (g01 * row0[1] + g11 * row1[1]);
  const T jbar12 = T(2) * (g01 * row0[2] + g11 * row1[2]);

  // t̄ through J, the mean, and the depth.
  Vec3<T> t_bar{};
  const T iz3 = iz2 * iz;
  t_bar.x += jbar02 * (-camera.fx * iz2);
  t_bar.y += jbar12 * (-camera.fy * iz2);
  t_bar.z += jbar00 * (-camera.fx * iz2) + jbar11 * (-camera.fy * iz2) +
             jbar02 * (T(2) * camera.fx * t.x * iz3) +
             jbar12 * (T(2) * camera.fy * t.y * iz3);
  t_bar.x += mean_bar.x * camera.fx * iz;
  t_bar.y += mean_bar.y * camera.fy * iz;
  t_bar.z += -mean_bar.x * camera.fx * t.x * iz2 -
             mean_bar.y * camera.fy * t.y * iz2;
  t_bar.z += depth_bar;

  *center_bar += w.transposed_times(t_bar);
}

}  // namespace admgs
