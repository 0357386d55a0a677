#pragma once

#include <cstddef>
#include <vector>

#include "admgs/vec.hpp"

namespace admgs {

// A parameter block: values plus a same-shaped gradient accumulator.
// Logically rows×cols, stored row-major.
template <class T>
struct Tensor {
  std::vector<T> v;
  std::vector<T> g;
  std::size_t rows = 0, cols = 1;

  Tensor() = default;
  Tensor(std::size_t r, std::size_t c) { resize(r, c); }

  void resize(std::size_t r, std::size_t c) {
    rows = r;
    cols = c;
    v.assign(r * c, T(0));
    g.assign(r * c, T(0));
  }
  std::size_t size() const { return v.size(); }
  void zero_grad() { std::fill(g.begin(), g.end(), T(0)); }

  T& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
  const T& at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
  T* row(std::size_t r) { return v.data() + r * cols; }
  const T* row(std::size_t r) const { return v.data() + r * cols; }
  T* grad_row(std::size_t r) { return g.data() + r * cols; }
  const T* grad_row(std::size_t r) const { return g.data() + r * cols; }

  Vec3<T> vec3(std::size_t r) const {
    const T* p = row(r);
    return {p[0], p[1], p[2]};
  }
  void set_vec3(std::size_t r, const Vec3<T>& x) {
    T* p = row(r);
    p[0] = x.x;
    p[1] = x.y;
    p[2] = x.z;
  }
  void add_grad3(std::size_t r, const Vec3<T>& x) {
    T* p = grad_row(r);
    p[0] += x.x;
    p[1] += x.y;
    p[2] += x.z;
  }
  Quat<T> quat(std::size_t r) const {
    const T* p = row(r);
    return {p[0], p[1], p[2], p[3]};
  }
  void set_quat(std::size_t r, const Quat<T>& q) {
    T* p = row(r);
    p[0] = q.w;
    p[1] = q.x;
    p[2] = q.y;
    p[3] = q.z;
  }
  void add_grad_quat(std::size_t r, const Quat<T>& q) {
    T* p = grad_row(r);
    p[0] += q.w;
    p[1] += q.x;
    p[2] += q.y;
    p[3] += q.z;
  }

  template <class U>
  Tensor<U> cast() const {
    Tensor<U> t(rows, cols);
    for (std::size_t i = 0; i < v.size(); ++i) t.v[i] = U(v[i]);
    return t;
  }
};

}  // namespace admgs
