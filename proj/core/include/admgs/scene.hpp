#pragma once

#include <optional>
#include <vector>

#include "admgs/errors.hpp"
#include "admgs/fields.hpp"
#include "admgs/rng.hpp"
#include "admgs/tensor.hpp"
#include "admgs/vec.hpp"

namespace admgs {

// One anisotropic splat, value view over the SoA storage below.
template <class T>
struct GaussianPrimitive {
  Vec3<T> position;
  Vec3<T> log_scale;
  Quat<T> rotation;
  T opacity_logit{};
  std::vector<T> f_geo;
};

// SoA storage for a node's primitives; each field is a parameter tensor
// with a co-located gradient accumulator.
template <class T>
struct PrimitiveBlock {
  Tensor<T> position;       // N×3
  Tensor<T> log_scale;      // N×3
  Tensor<T> rotation;       // N×4, (w,x,y,z)
  Tensor<T> opacity_logit;  // N×1
  Tensor<T> f_geo;          // N×D_geo

  void resize(std::size_t n, std::size_t d_geo) {
    position.resize(n, 3);
    log_scale.resize(n, 3);
    rotation.resize(n, 4);
    for (std::size_t i = 0; i < n; ++i) rotation.at(i, 0) = T(1);
    opacity_logit.resize(n, 1);
    f_geo.resize(n, d_geo);
  }
  std::size_t count() const { return position.rows; }
  std::size_t d_geo() const { return f_geo.cols; }

  GaussianPrimitive<T> get(std::size_t i) const {
    GaussianPrimitive<T> p;
    p.position = position.vec3(i);
    p.log_scale = log_scale.vec3(i);
    p.rotation = rotation.quat(i);
    p.opacity_logit = opacity_logit.v[i];
    p.f_geo.assign(f_geo.row(i), f_geo.row(i) + f_geo.cols);
    return p;
  }
  void set(std::size_t i, const GaussianPrimitive<T>& p) {
    position.set_vec3(i, p.position);
    log_scale.set_vec3(i, p.log_scale);
    rotation.set_quat(i, p.rotation);
    opacity_logit.v[i] = p.opacity_logit;
    std::copy(p.f_geo.begin(), p.f_geo.end(), f_geo.row(i));
  }
  void zero_grad() {
    position.zero_grad();
    log_scale.zero_grad();
    rotation.zero_grad();
    opacity_logit.zero_grad();
    f_geo.zero_grad();
  }
};

template <class T>
struct StaticNode {
  PrimitiveBlock<T> prims;
};

// Far-field sphere backdrop. Geometry is fixed at construction so the
// on-sphere invariant holds for the lifetime of the scene; appearance
// comes from the sky field.
template <class T>
struct SkyNode {
  PrimitiveBlock<T> prims;
  T radius{};
};

struct TrajectoryKeyframe {
  double timestamp = 0;  // seconds
  Quat<double> rotation;
  Vec3<double> translation;
};

struct ObjectPose {
  Quat<double> rotation;
  Vec3<double> translation;
};

template <class T>
struct ObjectNode {
  PrimitiveBlock<T> prims;  // canonical frame; f_geo[0..2] doubles as the
                            // color logit for direct per-Gaussian color
  Tensor<T> feature;        // 1×D_obj
  std::vector<TrajectoryKeyframe> trajectory;

  void validate() const {
    for (std::size_t i = 1; i < trajectory.size(); ++i) {
      if (!(trajectory[i].timestamp > trajectory[i - 1].timestamp)) {
        throw InvalidArgument(
            "object trajectory timestamps must be strictly increasing");
      }
    }
  }
};

template <class T>
struct TraversalTable {
  Tensor<T> embedding;     // M×D_emb
  Tensor<T> affine_scale;  // M×3, initialized to 1
  Tensor<T> affine_bias;   // M×3, initialized to 0

  void resize(std::size_t m, std::size_t d_emb) {
    embedding.resize(m, d_emb);
    affine_scale.resize(m, 3);
    affine_bias.resize(m, 3);
    for (std::size_t i = 0; i < m; ++i) {
      affine_scale.set_vec3(i, {T(1), T(1), T(1)});
    }
  }
  std::size_t count() const { return embedding.rows; }
  void require(int m) const {
    if (m < 0 || std::size_t(m) >= count()) throw MissingTraversal(m);
  }
};

template <class T>
struct SceneGraph {
  StaticNode<T> static_node;
  SkyNode<T> sky_node;
  std::vector<ObjectNode<T>> objects;
  TraversalTable<T> traversals;
};

// Pose lookup with linear translation and slerp rotation between
// keyframes. nullopt signals the object is absent at τ.
inline std::optional<ObjectPose> object_pose_at(
    const std::vector<TrajectoryKeyframe>& trajectory, double tau) {
  if (trajectory.empty()) {
    throw InvalidArgument("object_pose_at: empty trajectory");
  }
  if (tau < trajectory.front().timestamp || tau > trajectory.back().timestamp) {
    return std::nullopt;
  }
  std::size_t hi = 0;
  while (hi < trajectory.size() && trajectory[hi].timestamp < tau) ++hi;
  if (hi < trajectory.size() && trajectory[hi].timestamp == tau) {
    return ObjectPose{trajectory[hi].rotation, trajectory[hi].translation};
  }
  const auto& a = trajectory[hi - 1];
  const auto& b = trajectory[hi];
  const double t = (tau - a.timestamp) / (b.timestamp - a.timestamp);
  ObjectPose p;
  p.translation = a.translation + (b.translation - a.translation) * t;
  p.rotation = slerp(a.rotation, b.rotation, t);
  return p;
}

// Normalized time within the trajectory span, used by the deformation
// field's sinusoidal encoding.
inline double trajectory_normalized_time(
    const std::vector<TrajectoryKeyframe>& trajectory, double tau) {
  const double t0 = trajectory.front().timestamp;
  const double t1 = trajectory.back().timestamp;
  return t1 > t0 ? (tau - t0) / (t1 - t0) : 0.0;
}

enum class NodeTag { Static, Sky, Object };

template <class T>
struct WorldSplat {
  Vec3<T> position;
  Vec3<T> log_scale;
  Quat<T> rotation;
  T opacity_logit{};
  NodeTag tag = NodeTag::Static;
  int object_index = -1;  // index into scene.objects for Object splats
  int prim_index = 0;     // row in the source node's block
};

// Per-object forward state needed by the reverse pass.
template <class T>
struct ComposedObject {
  int object_index = -1;
  Quat<T> pose_rotation;
  Vec3<T> pose_translation;
  Mat3<T> pose_matrix;
  T t_norm{};
  std::vector<MlpTape<T>> deform_tapes;  // one per canonical primitive
  std::vector<Vec3<T>> offsets;
};

template <class T>
struct ComposeResult {
  std::vector<WorldSplat<T>> splats;
  std::vector<ComposedObject<T>> objects;  // only objects present at τ
};

struct ComposeOptions {
  bool rigid_objects = false;  // skip the deformation field
};

// Flattens the scene into world-space splats for (traversal m, time τ).
// Order: static, objects (node order), sky. Objects whose trajectory
// does not cover τ are excluded.
template <class T>
ComposeResult<T> compose_world(const SceneGraph<T>& scene, int m, double tau,
                               const FieldSet<T>& fields,
                               const ComposeOptions& opts = {}) {
  scene.traversals.require(m);
  ComposeResult<T> out;
  const std::size_t n_static = scene.static_node.prims.count();
  const std::size_t n_sky = scene.sky_node.prims.count();
  out.splats.reserve(n_static + n_sky);

  for (std::size_t i = 0; i < n_static; ++i) {
    const auto& b = scene.static_node.prims;
    out.splats.push_back({b.position.vec3(i), b.log_scale.vec3(i), b.rotation.quat(i),
                          b.opacity_logit.v[i], NodeTag::Static, -1, int(i)});
  }

  for (std::size_t oi = 0; oi < scene.objects.size(); ++oi) {
    const auto& obj = scene.objects[oi];
    const auto pose = object_pose_at(obj.trajectory, tau);
    if (!pose) continue;
    ComposedObject<T> comp;
    comp.object_index = int(oi);
    comp.pose_rotation = {T(pose->rotation.w), T(pose->rotation.x),
                          T(pose->rotation.y), T(pose->rotation.z)};
    comp.pose_translation = {T(pose->translation.x), T(pose->translation.y),
                             T(pose->translation.z)};
    comp.pose_matrix = comp.pose_rotation.to_matrix();
    comp.t_norm = T(trajectory_normalized_time(obj.trajectory, tau));
    const std::size_t n = obj.prims.count();
    comp.deform_tapes.resize(n);
    comp.offsets.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      Vec3<T> offset{};
      if (!opts.rigid_objects) {
        offset = deform_forward(fields, obj.prims.position.vec3(i), comp.t_norm,
                                obj.feature.row(0), comp.deform_tapes[i]);
      }
      comp.offsets[i] = offset;
      const Vec3<T> canonical = obj.prims.position.vec3(i) + offset;
      WorldSplat<T> s;
      s.position = comp.pose_matrix * canonical + comp.pose_translation;
      s.log_scale = obj.prims.log_scale.vec3(i);
      // Raw Hamilton product; consumers normalize, which keeps the
      // reverse chain w.r.t. the canonical rotation simple.
      s.rotation = comp.pose_rotation * obj.prims.rotation.quat(i);
      s.opacity_logit = obj.prims.opacity_logit.v[i];
      s.tag = NodeTag::Object;
      s.object_index = int(oi);
      s.prim_index = int(i);
      out.splats.push_back(std::move(s));
    }
    out.objects.push_back(std::move(comp));
  }

  for (std::size_t i = 0; i < n_sky; ++i) {
    const auto& b = scene.sky_node.prims;
    out.splats.push_back({b.position.vec3(i), b.log_scale.vec3(i), b.rotation.quat(i),
                          b.opacity_logit.v[i], NodeTag::Sky, -1, int(i)});
  }
  return out;
}

// Per-primitive canonical-frame offsets for one object at τ. Rigid mode
// returns zeros without touching the field.
template <class T>
std::vector<Vec3<T>> apply_deformation(const ObjectNode<T>& object, double tau,
                                       const FieldSet<T>& fields,
                                       bool rigid_mode = false) {
  std::vector<Vec3<T>> offsets(object.prims.count());
  if (rigid_mode) return offsets;
  const T t_norm = T(trajectory_normalized_time(object.trajectory, tau));
  for (std::size_t i = 0; i < object.prims.count(); ++i) {
    MlpTape<T> tape;
    offsets[i] = deform_forward(fields, object.prims.position.vec3(i), t_norm,
                                object.feature.row(0), tape);
  }
  return offsets;
}

struct SkyPlacementOptions {
  double overlap_factor = 1.5;    // tangential σ = factor × lattice spacing
  double radial_thinness = 100.0; // radial σ = tangential / this
  double opacity = 0.8;
};

// Deterministic Fibonacci-sphere backdrop of `count` splats at radius
// R_sky. The seed rotates the whole lattice; scales are set so that
// neighbors overlap.
template <class T>
SkyNode<T> sky_placement(T r_sky, int count, std::uint64_t seed,
                         std::size_t d_geo = 16,
                         const SkyPlacementOptions& opts = {}) {
  if (count < 1) throw InvalidArgument("sky_placement: count must be >= 1");
  if (!(r_sky > T(0))) throw InvalidArgument("sky_placement: radius must be > 0");
  SkyNode<T> node;
  node.radius = r_sky;
  node.prims.resize(std::size_t(count), d_geo);

  Rng rng(seed ^ 0x736b79ULL);
  const Quat<double> lattice_rot =
      count > 1 ? Quat<double>{rng.normal(), rng.normal(), rng.normal(),
                               rng.normal()}
                      .normalized()
                : Quat<double>{1, 0, 0, 0};
  const Mat3<double> rot = lattice_rot.to_matrix();

  // Mean angular spacing of a `count`-point lattice.
  const double spacing = std::sqrt(4.0 * 3.14159265358979323846 / count);
  const double tangential = opts.overlap_factor * spacing * double(r_sky);
  const double radial = tangential / opts.radial_thinness;
  const double golden_angle = 2.399963229728653;  // π(3−√5)

  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / count;
    const double rxy = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden_angle * i;
    const Vec3<double> dir =
        rot * Vec3<double>{rxy * std::cos(phi), rxy * std::sin(phi), z};
    node.prims.position.set_vec3(std::size_t(i),
                                 {T(dir.x * double(r_sky)),
                                  T(dir.y * double(r_sky)),
                                  T(dir.z * double(r_sky))});
    // Local frame with the radial direction on the shortest (z) axis.
    Vec3<double> up = std::abs(dir.z) < 0.9 ? Vec3<double>{0, 0, 1}
                                            : Vec3<double>{1, 0, 0};
    const Vec3<double> t1 = dir.cross(up).normalized();
    const Vec3<double> t2 = dir.cross(t1);
    Mat3<double> frame;
    for (int r = 0; r < 3; ++r) {
      frame.m[r][0] = t1[r];
      frame.m[r][1] = t2[r];
      frame.m[r][2] = dir[r];
    }
    const Quat<double> q = quat_from_matrix(frame);
    node.prims.rotation.set_quat(std::size_t(i),
                                 {T(q.w), T(q.x), T(q.y), T(q.z)});
    node.prims.log_scale.set_vec3(std::size_t(i),
                                  {T(std::log(tangential)),
                                   T(std::log(tangential)),
                                   T(std::log(radial))});
    const double logit = std::log(opts.opacity / (1.0 - opts.opacity));
    node.prims.opacity_logit.v[std::size_t(i)] = T(logit);
  }
  return node;
}

}  // namespace admgs
