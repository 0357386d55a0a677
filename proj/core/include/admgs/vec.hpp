#pragma once

#include <cmath>
#include <cstddef>

#include "admgs/errors.hpp"

namespace admgs {

template <class T>
struct Vec2 {
  T x{}, y{};

  Vec2() = default;
  Vec2(T x_, T y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(T s) const { return {x * s, y * s}; }
  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  T dot(const Vec2& o) const { return x * o.x + y * o.y; }
};

template <class T>
struct Vec3 {
  T x{}, y{}, z{};

  Vec3() = default;
  Vec3(T x_, T y_, T z_) : x(x_), y(y_), z(z_) {}

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  Vec3 operator*(T s) const { return {x * s, y * s, z * s}; }
  friend Vec3 operator*(T s, const Vec3& v) { return v * s; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  Vec3& operator*=(T s) {
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }
  // Componentwise (Hadamard) product.
  Vec3 cwise(const Vec3& o) const { return {x * o.x, y * o.y, z * o.z}; }

  T dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  T squared_norm() const { return dot(*this); }
  T norm() const { return std::sqrt(squared_norm()); }
  Vec3 normalized() const {
    const T n = norm();
    if (n == T(0)) throw DegenerateGeometry("cannot normalize a zero vector");
    return {x / n, y / n, z / n};
  }
  T operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  T& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  T max_component() const { return std::max(x, std::max(y, z)); }
};

// Adjoint of v = u.normalized() : given v̄ returns ū.
template <class T>
Vec3<T> normalize_backward(const Vec3<T>& u, const Vec3<T>& v_bar) {
  const T n = u.norm();
  const T inv = T(1) / n;
  const Vec3<T> v = u * inv;
  const T proj = v.dot(v_bar);
  return (v_bar - v * proj) * inv;
}

// Row-major 3x3 matrix.
template <class T>
struct Mat3 {
  T m[3][3]{};

  static Mat3 identity() {
    Mat3 r;
    r.m[0][0] = r.m[1][1] = r.m[2][2] = T(1);
    return r;
  }

  Vec3<T> operator*(const Vec3<T>& v) const {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
  }
  Mat3 operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        T s = T(0);
        for (int k = 0; k < 3; ++k) s += m[i][k] * o.m[k][j];
        r.m[i][j] = s;
      }
    return r;
  }
  Mat3 operator+(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.m[i][j] = m[i][j] + o.m[i][j];
    return r;
  }
  Mat3 operator*(T s) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.m[i][j] = m[i][j] * s;
    return r;
  }
  Mat3 transposed() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.m[i][j] = m[j][i];
    return r;
  }
  Vec3<T> transposed_times(const Vec3<T>& v) const {
    return {m[0][0] * v.x + m[1][0] * v.y + m[2][0] * v.z,
            m[0][1] * v.x + m[1][1] * v.y + m[2][1] * v.z,
            m[0][2] * v.x + m[1][2] * v.y + m[2][2] * v.z};
  }
  Vec3<T> col(int j) const { return {m[0][j], m[1][j], m[2][j]}; }
  T det() const {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  }
};

// Symmetric 3x3 matrix, unique-entry storage so Σ = Σᵀ holds exactly.
template <class T>
struct Sym3 {
  T xx{}, xy{}, xz{}, yy{}, yz{}, zz{};

  static Sym3 from_full(const Mat3<T>& a) {
    // Off-diagonals are averaged; callers pass matrices that are
    // symmetric up to round-off.
    Sym3 s;
    s.xx = a.m[0][0];
    s.yy = a.m[1][1];
    s.zz = a.m[2][2];
    s.xy = (a.m[0][1] + a.m[1][0]) / T(2);
    s.xz = (a.m[0][2] + a.m[2][0]) / T(2);
    s.yz = (a.m[1][2] + a.m[2][1]) / T(2);
    return s;
  }
  Mat3<T> full() const {
    Mat3<T> a;
    a.m[0][0] = xx;
    a.m[0][1] = xy;
    a.m[0][2] = xz;
    a.m[1][0] = xy;
    a.m[1][1] = yy;
    a.m[1][2] = yz;
    a.m[2][0] = xz;
    a.m[2][1] = yz;
    a.m[2][2] = zz;
    return a;
  }
  Vec3<T> operator*(const Vec3<T>& v) const {
    return {xx * v.x + xy * v.y + xz * v.z, xy * v.x + yy * v.y + yz * v.z,
            xz * v.x + yz * v.y + zz * v.z};
  }
};

// Symmetric 2x2 matrix [[a, b], [b, c]].
template <class T>
struct Sym2 {
  T a{}, b{}, c{};

  T det() const { return a * c - b * b; }
  Sym2 inverse() const {
    const T d = det();
    if (!(d > T(0))) {
      throw DegenerateGeometry("2x2 covariance is not positive definite");
    }
    return {c / d, -b / d, a / d};
  }
  // dᵀ M d
  T quad(const Vec2<T>& d) const {
    return a * d.x * d.x + T(2) * b * d.x * d.y + c * d.y * d.y;
  }
  // Largest eigenvalue (for the 3σ screen-space extent).
  T max_eigenvalue() const {
    const T mid = (a + c) / T(2);
    const T disc = std::sqrt(std::max(T(0), mid * mid - det()));
    return mid + disc;
  }
  T min_eigenvalue() const {
    const T mid = (a + c) / T(2);
    const T disc = std::sqrt(std::max(T(0), mid * mid - det()));
    return mid - disc;
  }
};

// Unit quaternion (w, x, y, z).
template <class T>
struct Quat {
  T w{1}, x{}, y{}, z{};

  Quat() = default;
  Quat(T w_, T x_, T y_, T z_) : w(w_), x(x_), y(y_), z(z_) {}

  T norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
  Quat normalized() const {
    const T n = norm();
    if (n == T(0)) throw DegenerateGeometry("cannot normalize a zero quaternion");
    return {w / n, x / n, y / n, z / n};
  }
  Quat operator*(const Quat& o) const {
    return {w * o.w - x * o.x - y * o.y - z * o.z,
            w * o.x + x * o.w + y * o.z - z * o.y,
            w * o.y - x * o.z + y * o.w + z * o.x,
            w * o.z + x * o.y - y * o.x + z * o.w};
  }
  T dot(const Quat& o) const { return w * o.w + x * o.x + y * o.y + z * o.z; }

  // Rotation matrix of the *normalized* quaternion.
  Mat3<T> to_matrix() const {
    const Quat q = normalized();
    Mat3<T> r;
    const T xx = q.x * q.x, yy = q.y * q.y, zz = q.z * q.z;
    const T xy = q.x * q.y, xz = q.x * q.z, yz = q.y * q.z;
    const T wx = q.w * q.x, wy = q.w * q.y, wz = q.w * q.z;
    r.m[0][0] = T(1) - T(2) * (yy + zz);
    r.m[0][1] = T(2) * (xy - wz);
    r.m[0][2] = T(2) * (xz + wy);
    r.m[1][0] = T(2) * (xy + wz);
    r.m[1][1] = T(1) - T(2) * (xx + zz);
    r.m[1][2] = T(2) * (yz - wx);
    r.m[2][0] = T(2) * (xz - wy);
    r.m[2][1] = T(2) * (yz + wx);
    r.m[2][2] = T(1) - T(2) * (xx + yy);
    return r;
  }

  static Quat from_axis_angle(const Vec3<T>& axis, T angle) {
    const Vec3<T> u = axis.normalized();
    const T h = angle / T(2);
    const T s = std::sin(h);
    return {std::cos(h), u.x * s, u.y * s, u.z * s};
  }

  Vec3<T> rotate(const Vec3<T>& v) const { return to_matrix() * v; }
};

// Adjoint of R = q.normalized().to_matrix() : accumulates into q̄ from R̄.
// Derivation: dR/dq̂ of the standard quaternion-to-matrix map, then the
// projection step for q̂ = q / ‖q‖.
template <class T>
Quat<T> quat_to_matrix_backward(const Quat<T>& q_raw, const Mat3<T>& r_bar) {
  const Quat<T> q = q_raw.normalized();
  const T w = q.w, x = q.x, y = q.y, z = q.z;
  // Partial of each matrix entry with respect to (w, x, y, z) of q̂.
  auto g = [&](int i, int j) { return r_bar.m[i][j]; };
  Quat<T> qb_hat{T(0), T(0), T(0), T(0)};
  // Row 0
  qb_hat.y += T(-4) * y * g(0, 0);
  qb_hat.z += T(-4) * z * g(0, 0);
  qb_hat.x += T(2) * y * g(0, 1);
  qb_hat.y += T(2) * x * g(0, 1);
  qb_hat.w += T(-2) * z * g(0, 1);
  qb_hat.z += T(-2) * w * g(0, 1);
  qb_hat.x += T(2) * z * g(0, 2);
  qb_hat.z += T(2) * x * g(0, 2);
  qb_hat.w += T(2) * y * g(0, 2);
  qb_hat.y += T(2) * w * g(0, 2);
  // Row 1
  qb_hat.x += T(2) * y * g(1, 0);
  qb_hat.y += T(2) * x * g(1, 0);
  qb_hat.w += T(2) * z * g(1, 0);
  qb_hat.z += T(2) * w * g(1, 0);
  qb_hat.x += T(-4) * x * g(1, 1);
  qb_hat.z += T(-4) * z * g(1, 1);
  qb_hat.y += T(2) * z * g(1, 2);
  qb_hat.z += T(2) * y * g(1, 2);
  qb_hat.w += T(-2) * x * g(1, 2);
  qb_hat.x += T(-2) * w * g(1, 2);
  // Row 2
  qb_hat.x += T(2) * z * g(2, 0);
  qb_hat.z += T(2) * x * g(2, 0);
  qb_hat.w += T(-2) * y * g(2, 0);
  qb_hat.y += T(-2) * w * g(2, 0);
  qb_hat.y += T(2) * z * g(2, 1);
  qb_hat.z += T(2) * y * g(2, 1);
  qb_hat.w += T(2) * x * g(2, 1);
  qb_hat.x += T(2) * w * g(2, 1);
  qb_hat.x += T(-4) * x * g(2, 2);
  qb_hat.y += T(-4) * y * g(2, 2);
  // Through normalization: q̄ = (q̄̂ - (q̄̂·q̂) q̂) / ‖q‖.
  const T n = q_raw.norm();
  const T proj = qb_hat.dot(q);
  return {(qb_hat.w - proj * w) / n, (qb_hat.x - proj * x) / n,
          (qb_hat.y - proj * y) / n, (qb_hat.z - proj * z) / n};
}

// Adjoint of p = a ⊗ b with respect to b, for unit a: b̄ = conj(a) ⊗ p̄.
template <class T>
Quat<T> quat_premultiply_backward(const Quat<T>& a, const Quat<T>& p_bar) {
  const Quat<T> conj{a.w, -a.x, -a.y, -a.z};
  return conj * p_bar;
}

// Rotation matrix to quaternion (Shepperd's method); input must be a
// proper rotation.
template <class T>
Quat<T> quat_from_matrix(const Mat3<T>& m) {
  Quat<T> q;
  const T tr = m.m[0][0] + m.m[1][1] + m.m[2][2];
  if (tr > T(0)) {
    const T s = std::sqrt(tr + T(1)) * T(2);
    q.w = s / T(4);
    q.x = (m.m[2][1] - m.m[1][2]) / s;
    q.y = (m.m[0][2] - m.m[2][0]) / s;
    q.z = (m.m[1][0] - m.m[0][1]) / s;
  } else if (m.m[0][0] > m.m[1][1] && m.m[0][0] > m.m[2][2]) {
    const T s = std::sqrt(T(1) + m.m[0][0] - m.m[1][1] - m.m[2][2]) * T(2);
    q.w = (m.m[2][1] - m.m[1][2]) / s;
    q.x = s / T(4);
    q.y = (m.m[0][1] + m.m[1][0]) / s;
    q.z = (m.m[0][2] + m.m[2][0]) / s;
  } else if (m.m[1][1] > m.m[2][2]) {
    const T s = std::sqrt(T(1) + m.m[1][1] - m.m[0][0] - m.m[2][2]) * T(2);
    q.w = (m.m[0][2] - m.m[2][0]) / s;
    q.x = (m.m[0][1] + m.m[1][0]) / s;
    q.y = s / T(4);
    q.z = (m.m[1][2] + m.m[2][1]) / s;
  } else {
    const T s = std::sqrt(T(1) + m.m[2][2] - m.m[0][0] - m.m[1][1]) * T(2);
    q.w = (m.m[1][0] - m.m[0][1]) / s;
    q.x = (m.m[0][2] + m.m[2][0]) / s;
    q.y = (m.m[1][2] + m.m[2][1]) / s;
    q.z = s / T(4);
  }
  return q.normalized();
}

// Spherical linear interpolation along the shorter arc.
template <class T>
Quat<T> slerp(const Quat<T>& a_in, const Quat<T>& b_in, T t) {
  const Quat<T> a = a_in.normalized();
  Quat<T> b = b_in.normalized();
  T d = a.dot(b);
  if (d < T(0)) {
    b = {-b.w, -b.x, -b.y, -b.z};
    d = -d;
  }
  if (d > T(0.9995)) {
    // Nearly parallel: normalized lerp.
    Quat<T> r{a.w + t * (b.w - a.w), a.x + t * (b.x - a.x),
              a.y + t * (b.y - a.y), a.z + t * (b.z - a.z)};
    return r.normalized();
  }
  const T theta = std::acos(std::min(T(1), d));
  const T s = std::sin(theta);
  const T wa = std::sin((T(1) - t) * theta) / s;
  const T wb = std::sin(t * theta) / s;
  return {wa * a.w + wb * b.w, wa * a.x + wb * b.x, wa * a.y + wb * b.y,
          wa * a.z + wb * b.z};
}

template <class T>
T clamp01(T v) {
  return v < T(0) ? T(0) : (v > T(1) ? T(1) : v);
}

}  // namespace admgs
