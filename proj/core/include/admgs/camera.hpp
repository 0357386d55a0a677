#pragma once

#include <cmath>

#include "admgs/errors.hpp"
#include "admgs/vec.hpp"

namespace admgs {

// Rigid world-to-camera transform: x_cam = R x_world + t.
template <class T>
struct RigidTransform {
  Mat3<T> rotation = Mat3<T>::identity();
  Vec3<T> translation{};

  Vec3<T> apply(const Vec3<T>& p) const { return rotation * p + translation; }

  RigidTransform inverse() const {
    RigidTransform r;
    r.rotation = rotation.transposed();
    r.translation = -(r.rotation * translation);
    return r;
  }

  // Composition: (this ∘ other)(p) = this(other(p)).
  RigidTransform compose(const RigidTransform& other) const {
    RigidTransform r;
    r.rotation = rotation * other.rotation;
    r.translation = rotation * other.translation + translation;
    return r;
  }

  static RigidTransform from_quat(const Quat<T>& q, const Vec3<T>& t) {
    return {q.to_matrix(), t};
  }

  // Orthonormality with determinant +1, within tol.
  bool is_rotation(T tol) const {
    const Mat3<T> should_be_i = rotation.transposed() * rotation;
    T err = T(0);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const T target = (i == j) ? T(1) : T(0);
        err = std::max(err, std::abs(should_be_i.m[i][j] - target));
      }
    err = std::max(err, std::abs(rotation.det() - T(1)));
    return err <= tol;
  }
};

// Pinhole camera. Pixel (u, v) has its center at (u + 0.5, v + 0.5) in the
// continuous image plane; projection maps camera-frame points to that
// continuous plane.
template <class T>
struct Camera {
  T fx{}, fy{}, cx{}, cy{};
  int width = 0, height = 0;
  RigidTransform<T> world_to_camera;

  void validate() const {
    if (!(fx > T(0)) || !(fy > T(0))) {
      throw InvalidArgument("camera: focal lengths must be positive");
    }
    if (!(cx >= T(0)) || !(cx < T(width)) || !(cy >= T(0)) ||
        !(cy < T(height))) {
      throw InvalidArgument("camera: principal point outside the image");
    }
    if (width <= 0 || height <= 0) {
      throw InvalidArgument("camera: image size must be positive");
    }
    if (!world_to_camera.is_rotation(T(1e-9))) {
      throw InvalidArgument("camera: world_to_camera rotation is not in SO(3)");
    }
  }

  Vec3<T> center() const {
    return -(world_to_camera.rotation.transposed_times(
        world_to_camera.translation));
  }

  template <class U>
  Camera<U> cast() const {
    Camera<U> c;
    c.fx = U(fx);
    c.fy = U(fy);
    c.cx = U(cx);
    c.cy = U(cy);
    c.width = width;
    c.height = height;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        c.world_to_camera.rotation.m[i][j] = U(world_to_camera.rotation.m[i][j]);
    c.world_to_camera.translation = {U(world_to_camera.translation.x),
                                     U(world_to_camera.translation.y),
                                     U(world_to_camera.translation.z)};
    return c;
  }

  // Look-at constructor: camera at `eye`, +z toward `target`, image up
  // opposite to `up` (y grows downward in pixel space).
  static Camera look_at(const Vec3<T>& eye, const Vec3<T>& target,
                        const Vec3<T>& up, T fx, T fy, int width, int height) {
    const Vec3<T> fwd = (target - eye).normalized();
    Vec3<T> right = fwd.cross(up);
    if (right.norm() < T(1e-9)) {
      throw DegenerateGeometry("look_at: view direction parallel to up");
    }
    right = right.normalized();
    const Vec3<T> down = fwd.cross(right);
    Camera c;
    c.fx = fx;
    c.fy = fy;
    c.width = width;
    c.height = height;
    c.cx = T(width) / T(2);
    c.cy = T(height) / T(2);
    // Rows of R are the camera axes expressed in world coordinates.
    c.world_to_camera.rotation.m[0][0] = right.x;
    c.world_to_camera.rotation.m[0][1] = right.y;
    c.world_to_camera.rotation.m[0][2] = right.z;
    c.world_to_camera.rotation.m[1][0] = down.x;
    c.world_to_camera.rotation.m[1][1] = down.y;
    c.world_to_camera.rotation.m[1][2] = down.z;
    c.world_to_camera.rotation.m[2][0] = fwd.x;
    c.world_to_camera.rotation.m[2][1] = fwd.y;
    c.world_to_camera.rotation.m[2][2] = fwd.z;
    c.world_to_camera.translation = -(c.world_to_camera.rotation * eye);
    return c;
  }
};

}  // namespace admgs
