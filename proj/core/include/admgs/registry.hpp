#pragma once

#include <string>
#include <vector>

#include "admgs/fields.hpp"
#include "admgs/scene.hpp"
#include "admgs/tensor.hpp"

namespace admgs {

// Learning-rate groups.
enum class ParamGroup {
  Position,
  Scale,
  Rotation,
  Opacity,
  Feature,
  Mlp,
  Embedding,
  Affine,
};

inline const char* param_group_name(ParamGroup g) {
  switch (g) {
    case ParamGroup::Position: return "position";
    case ParamGroup::Scale: return "scale";
    case ParamGroup::Rotation: return "rotation";
    case ParamGroup::Opacity: return "opacity";
    case ParamGroup::Feature: return "feature";
    case ParamGroup::Mlp: return "mlp";
    case ParamGroup::Embedding: return "embedding";
    case ParamGroup::Affine: return "affine";
  }
  return "?";
}

template <class T>
struct TensorRef {
  std::string name;
  Tensor<T>* tensor = nullptr;
  ParamGroup group = ParamGroup::Mlp;
  bool trainable = true;
};

template <class T>
struct ParamRegistry {
  std::vector<TensorRef<T>> entries;

  void add(std::string name, Tensor<T>* t, ParamGroup g, bool trainable) {
    entries.push_back({std::move(name), t, g, trainable});
  }
  void zero_grad() {
    for (auto& e : entries) {
      if (e.trainable) e.tensor->zero_grad();
    }
  }
  std::size_t trainable_count() const {
    std::size_t n = 0;
    for (const auto& e : entries) {
      if (e.trainable) n += e.tensor->size();
    }
    return n;
  }
  const TensorRef<T>* find(const std::string& name) const {
    for (const auto& e : entries) {
      if (e.name == name) return &e;
    }
    return nullptr;
  }
};

namespace detail {
template <class T>
void add_block(ParamRegistry<T>& r, const std::string& prefix,
               PrimitiveBlock<T>& b, bool trainable) {
  r.add(prefix + ".position", &b.position, ParamGroup::Position, trainable);
  r.add(prefix + ".log_scale", &b.log_scale, ParamGroup::Scale, trainable);
  r.add(prefix + ".rotation", &b.rotation, ParamGroup::Rotation, trainable);
  r.add(prefix + ".opacity_logit", &b.opacity_logit, ParamGroup::Opacity,
        trainable);
  r.add(prefix + ".f_geo", &b.f_geo, ParamGroup::Feature, trainable);
}

template <class T>
void add_mlp(ParamRegistry<T>& r, const std::string& prefix, Mlp<T>& m) {
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    r.add(prefix + "." + std::to_string(l) + ".weight", &m.layers[l].weight,
          ParamGroup::Mlp, true);
    r.add(prefix + "." + std::to_string(l) + ".bias", &m.layers[l].bias,
          ParamGroup::Mlp, true);
  }
}
}  // namespace detail

// Stable enumeration of every parameter tensor. Sky geometry is
// registered non-trainable: it stays on the far-field sphere.
template <class T>
ParamRegistry<T> collect_params(SceneGraph<T>& scene, FieldSet<T>& fields) {
  ParamRegistry<T> r;
  detail::add_block(r, "static", scene.static_node.prims, true);
  detail::add_block(r, "sky", scene.sky_node.prims, false);
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const std::string prefix = "object" + std::to_string(i);
    detail::add_block(r, prefix, scene.objects[i].prims, true);
    r.add(prefix + ".feature", &scene.objects[i].feature, ParamGroup::Feature,
          true);
  }
  r.add("traversal.embedding", &scene.traversals.embedding,
        ParamGroup::Embedding, true);
  r.add("traversal.affine_scale", &scene.traversals.affine_scale,
        ParamGroup::Affine, true);
  r.add("traversal.affine_bias", &scene.traversals.affine_bias,
        ParamGroup::Affine, true);
  detail::add_mlp(r, "mlp.material", fields.material);
  detail::add_mlp(r, "mlp.light", fields.light);
  detail::add_mlp(r, "mlp.sky", fields.sky);
  detail::add_mlp(r, "mlp.gate", fields.gate);
  detail::add_mlp(r, "mlp.deform", fields.deform);
  return r;
}

}  // namespace admgs
