#pragma once

#include <cmath>
#include <vector>

#include "admgs/errors.hpp"
#include "admgs/vec.hpp"

namespace admgs {

// Real, fully orthonormalized spherical harmonics up to degree 4,
// ∫ Y_lm Y_l'm' dω = δ. Values are emitted for all l ≤ degree in
// (l, m) lexicographic order, m from -l to l, so a degree-k encoding
// has (k+1)² entries.

inline constexpr int kShMaxDegree = 4;

constexpr int sh_basis_size(int degree) { return (degree + 1) * (degree + 1); }

namespace shc {
// Normalization constants.
inline constexpr double k00 = 0.28209479177387814;   // 1/(2√π)
inline constexpr double k1 = 0.4886025119029199;     // √(3/4π)
inline constexpr double k2_2 = 1.0925484305920792;   // ½√(15/π)
inline constexpr double k2_0 = 0.31539156525252005;  // ¼√(5/π)
inline constexpr double k2_2h = 0.5462742152960396;  // ¼√(15/π)
inline constexpr double k3_3 = 0.5900435899266435;   // ¼√(35/2π)
inline constexpr double k3_2 = 2.890611442640554;    // ½√(105/π)
inline constexpr double k3_1 = 0.4570457994644658;   // ¼√(21/2π)
inline constexpr double k3_0 = 0.3731763325901154;   // ¼√(7/π)
inline constexpr double k3_2h = 1.445305721320277;   // ¼√(105/π)
inline constexpr double k4_4 = 2.5033429417967046;   // ¾√(35/π)
inline constexpr double k4_3 = 1.7701307697799304;   // ¾√(35/2π)
inline constexpr double k4_2 = 0.9461746957575601;   // ¾√(5/π)
inline constexpr double k4_1 = 0.6690465435572892;   // ¾√(5/2π)
inline constexpr double k4_0 = 0.10578554691520431;  // 3/16·√(1/π)
inline constexpr double k4_2h = 0.47308734787878004; // ⅜√(5/π)
inline constexpr double k4_4h = 0.6258357354491761;  // 3/16·√(35/π)
}  // namespace shc

// Polynomial evaluation without the unit-norm precondition check. The
// polynomial extensions below agree with Y_lm on the unit sphere; their
// ambient gradients are what the reverse pass chains through (upstream
// direction derivatives are tangential, so the radial component of the
// extension choice never contributes).
template <class T>
void sh_basis_unchecked(const Vec3<T>& d, int degree, T* out) {
  using namespace shc;
  const T x = d.x, y = d.y, z = d.z;
  out[0] = T(k00);
  if (degree < 1) return;
  out[1] = T(k1) * y;
  out[2] = T(k1) * z;
  out[3] = T(k1) * x;
  if (degree < 2) return;
  const T xx = x * x, yy = y * y, zz = z * z;
  out[4] = T(k2_2) * x * y;
  out[5] = T(k2_2) * y * z;
  out[6] = T(k2_0) * (T(3) * zz - T(1));
  out[7] = T(k2_2) * x * z;
  out[8] = T(k2_2h) * (xx - yy);
  if (degree < 3) return;
  out[9] = T(k3_3) * y * (T(3) * xx - yy);
  out[10] = T(k3_2) * x * y * z;
  out[11] = T(k3_1) * y * (T(5) * zz - T(1));
  out[12] = T(k3_0) * z * (T(5) * zz - T(3));
  out[13] = T(k3_1) * x * (T(5) * zz - T(1));
  out[14] = T(k3_2h) * z * (xx - yy);
  out[15] = T(k3_3) * x * (xx - T(3) * yy);
  if (degree < 4) return;
  out[16] = T(k4_4) * x * y * (xx - yy);
  out[17] = T(k4_3) * y * z * (T(3) * xx - yy);
  out[18] = T(k4_2) * x * y * (T(7) * zz - T(1));
  out[19] = T(k4_1) * y * z * (T(7) * zz - T(3));
  out[20] = T(k4_0) * (T(35) * zz * zz - T(30) * zz + T(3));
  out[21] = T(k4_1) * x * z * (T(7) * zz - T(3));
  out[22] = T(k4_2h) * (xx - yy) * (T(7) * zz - T(1));
  out[23] = T(k4_3) * x * z * (xx - T(3) * yy);
  out[24] = T(k4_4h) * (xx * xx - T(6) * xx * yy + yy * yy);
}

// Ambient gradients ∇Y_i of the polynomial extensions above.
template <class T>
void sh_basis_gradient_unchecked(const Vec3<T>& d, int degree, Vec3<T>* grad) {
  using namespace shc;
  const T x = d.x, y = d.y, z = d.z;
  grad[0] = {T(0), T(0), T(0)};
  if (degree < 1) return;
  grad[1] = {T(0), T(k1), T(0)};
  grad[2] = {T(0), T(0), T(k1)};
  grad[3] = {T(k1), T(0), T(0)};
  if (degree < 2) return;
  const T xx = x * x, yy = y * y, zz = z * z;
  grad[4] = {T(k2_2) * y, T(k2_2) * x, T(0)};
  grad[5] = {T(0), T(k2_2) * z, T(k2_2) * y};
  grad[6] = {T(0), T(0), T(k2_0) * T(6) * z};
  grad[7] = {T(k2_2) * z, T(0), T(k2_2) * x};
  grad[8] = {T(k2_2h) * T(2) * x, T(-k2_2h) * T(2) * y, T(0)};
  if (degree < 3) return;
  grad[9] = {T(k3_3) * T(6) * x * y, T(k3_3) * T(3) * (xx - yy), T(0)};
  grad[10] = {T(k3_2) * y * z, T(k3_2) * x * z, T(k3_2) * x * y};
  grad[11] = {T(0), T(k3_1) * (T(5) * zz - T(1)), T(k3_1) * T(10) * y * z};
  grad[12] = {T(0), T(0), T(k3_0) * (T(15) * zz - T(3))};
  grad[13] = {T(k3_1) * (T(5) * zz - T(1)), T(0), T(k3_1) * T(10) * x * z};
  grad[14] = {T(k3_2h) * T(2) * x * z, T(-k3_2h) * T(2) * y * z,
              T(k3_2h) * (xx - yy)};
  grad[15] = {T(k3_3) * T(3) * (xx - yy), T(-k3_3) * T(6) * x * y, T(0)};
  if (degree < 4) return;
  grad[16] = {T(k4_4) * y * (T(3) * xx - yy), T(k4_4) * x * (xx - T(3) * yy),
              T(0)};
  grad[17] = {T(k4_3) * T(6) * x * y * z, T(k4_3) * T(3) * z * (xx - yy),
              T(k4_3) * y * (T(3) * xx - yy)};
  grad[18] = {T(k4_2) * y * (T(7) * zz - T(1)), T(k4_2) * x * (T(7) * zz - T(1)),
              T(k4_2) * T(14) * x * y * z};
  grad[19] = {T(0), T(k4_1) * z * (T(7) * zz - T(3)),
              T(k4_1) * y * (T(21) * zz - T(3))};
  grad[20] = {T(0), T(0), T(k4_0) * (T(140) * zz * z - T(60) * z)};
  grad[21] = {T(k4_1) * z * (T(7) * zz - T(3)), T(0),
              T(k4_1) * x * (T(21) * zz - T(3))};
  grad[22] = {T(k4_2h) * T(2) * x * (T(7) * zz - T(1)),
              T(-k4_2h) * T(2) * y * (T(7) * zz - T(1)),
              T(k4_2h) * T(14) * z * (xx - yy)};
  grad[23] = {T(k4_3) * T(3) * z * (xx - yy), T(-k4_3) * T(6) * x * y * z,
              T(k4_3) * x * (xx - T(3) * yy)};
  grad[24] = {T(k4_4h) * (T(4) * xx * x - T(12) * x * yy),
              T(k4_4h) * (T(4) * yy * y - T(12) * xx * y), T(0)};
}

// Checked evaluation: requires degree in [0, 4] and a direction within
// 1e-6 of unit norm.
template <class T>
std::vector<T> sh_basis(const Vec3<T>& dir, int degree) {
  if (degree < 0 || degree > kShMaxDegree) {
    throw InvalidArgument("sh_basis: degree must be in [0, 4], got " +
                          std::to_string(degree));
  }
  const T n = dir.norm();
  if (std::abs(double(n) - 1.0) > 1e-6) {
    throw InvalidArgument("sh_basis: direction must be unit-norm");
  }
  std::vector<T> out(std::size_t(sh_basis_size(degree)));
  sh_basis_unchecked(dir, degree, out.data());
  return out;
}

// Reflection of the view direction about the normal: r = 2(n·v)n − v.
// For unit inputs the result is unit by construction.
template <class T>
Vec3<T> reflect(const Vec3<T>& n, const Vec3<T>& v) {
  const T d = n.dot(v);
  return n * (T(2) * d) - v;
}

// Adjoint of reflect: accumulates n̄ and v̄ from r̄.
template <class T>
void reflect_backward(const Vec3<T>& n, const Vec3<T>& v, const Vec3<T>& r_bar,
                      Vec3<T>* n_bar, Vec3<T>* v_bar) {
  const T d = n.dot(v);
  const T rn = r_bar.dot(n);
  *n_bar += v * (T(2) * rn) + r_bar * (T(2) * d);
  *v_bar += n * (T(2) * rn) - r_bar;
}

}  // namespace admgs
