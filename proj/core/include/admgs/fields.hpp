#pragma once

#include <cstddef>
#include <vector>

#include "admgs/mlp.hpp"
#include "admgs/sh.hpp"
#include "admgs/vec.hpp"

namespace admgs {

// Layout of the light-field input vector. With geometric inputs enabled
// the blocks are [γ₁(n), γ₄(r), γ₃(v), f_geo, e_m]; the ablation arm
// without normal/reflection cues drops the first two blocks.
struct LightInputLayout {
  bool geo_inputs = true;
  int d_geo = 16;
  int d_emb = 16;

  int enc_n_offset() const { return 0; }
  int enc_n_size() const { return geo_inputs ? 4 : 0; }
  int enc_r_offset() const { return enc_n_size(); }
  int enc_r_size() const { return geo_inputs ? 25 : 0; }
  int enc_v_offset() const { return enc_r_offset() + enc_r_size(); }
  int enc_v_size() const { return 16; }
  int f_geo_offset() const { return enc_v_offset() + enc_v_size(); }
  int e_m_offset() const { return f_geo_offset() + d_geo; }
  int total() const { return e_m_offset() + d_emb; }
};

struct FieldConfig {
  int d_geo = 16;  // per-Gaussian geometric feature width
  int d_emb = 16;  // traversal embedding width
  int d_obj = 8;   // object feature width
  bool light_geo_inputs = true;

  LightInputLayout light_layout() const {
    return {light_geo_inputs, d_geo, d_emb};
  }
  int deform_input_dim() const { return 3 + 8 + d_obj; }
};

inline constexpr double kLightFloor = 1e-4;  // ε_L added to softplus output

// The five networks: material (traversal-invariant), light
// (traversal-conditioned, frequency-separated inputs), sky, opacity
// gate, and object deformation.
template <class T>
struct FieldSet {
  FieldConfig config;
  Mlp<T> material;  // f_geo -> 3, sigmoid head
  Mlp<T> light;     // light input -> 3, softplus + ε_L head
  Mlp<T> sky;       // [γ₃(v), e_m] -> 3, sigmoid head
  Mlp<T> gate;      // [f_geo, e_m] -> 1, sigmoid head
  Mlp<T> deform;    // [pos, time enc, object feature] -> 3, linear

  static FieldSet make(const FieldConfig& cfg, Rng& rng) {
    FieldSet f;
    f.config = cfg;
    f.material = Mlp<T>::make({cfg.d_geo, 64, 64, 3}, rng);
    f.light = Mlp<T>::make({cfg.light_layout().total(), 128, 128, 128, 3}, rng);
    f.sky = Mlp<T>::make({16 + cfg.d_emb, 64, 64, 3}, rng);
    f.gate = Mlp<T>::make({cfg.d_geo + cfg.d_emb, 32, 32, 1}, rng);
    f.deform = Mlp<T>::make({cfg.deform_input_dim(), 64, 64, 3}, rng);
    // The gate starts open (attenuation sigmoid(4) ≈ 0.982 for every
    // input) and objects start rigid.
    f.gate.zero_final_layer();
    f.gate.set_final_bias(T(4));
    f.deform.zero_final_layer();
    return f;
  }
};

// ---- Material field: M(x) = sigmoid(MLP(f_geo)) ∈ (0,1)³. The signature
// admits no view, reflection, or traversal input.

template <class T>
Vec3<T> material_forward(const FieldSet<T>& f, const T* f_geo,
                         MlpTape<T>& tape) {
  T raw[3];
  mlp_forward(f.material, f_geo, raw, tape);
  return {sigmoid(raw[0]), sigmoid(raw[1]), sigmoid(raw[2])};
}

template <class T>
void material_backward(const FieldSet<T>& f, MlpTape<T>& tape,
                       const Vec3<T>& m_value, const Vec3<T>& m_bar,
                       T* f_geo_bar, MlpGrad<T>& grads) {
  const T raw_bar[3] = {m_bar.x * m_value.x * (T(1) - m_value.x),
                        m_bar.y * m_value.y * (T(1) - m_value.y),
                        m_bar.z * m_value.z * (T(1) - m_value.z)};
  mlp_backward(f.material, tape, raw_bar, f_geo_bar, grads);
}

// ---- Light field input assembly.

template <class T>
void build_light_input(const LightInputLayout& lay, const Vec3<T>& n,
                       const Vec3<T>& r, const Vec3<T>& v, const T* f_geo,
                       const T* e_m, T* out) {
  if (lay.geo_inputs) {
    sh_basis_unchecked(n, 1, out + lay.enc_n_offset());
    sh_basis_unchecked(r, 4, out + lay.enc_r_offset());
  }
  sh_basis_unchecked(v, 3, out + lay.enc_v_offset());
  std::copy(f_geo, f_geo + lay.d_geo, out + lay.f_geo_offset());
  std::copy(e_m, e_m + lay.d_emb, out + lay.e_m_offset());
}

// Splits an input-vector adjoint back into direction/feature adjoints.
template <class T>
void light_input_backward(const LightInputLayout& lay, const Vec3<T>& n,
                          const Vec3<T>& r, const Vec3<T>& v, const T* in_bar,
                          Vec3<T>* n_bar, Vec3<T>* r_bar, Vec3<T>* v_bar,
                          T* f_geo_bar, T* e_m_bar) {
  Vec3<T> grad[25];
  if (lay.geo_inputs) {
    sh_basis_gradient_unchecked(n, 1, grad);
    for (int i = 0; i < 4; ++i) {
      *n_bar += grad[i] * in_bar[lay.enc_n_offset() + i];
    }
    sh_basis_gradient_unchecked(r, 4, grad);
    for (int i = 0; i < 25; ++i) {
      *r_bar += grad[i] * in_bar[lay.enc_r_offset() + i];
    }
  }
  sh_basis_gradient_unchecked(v, 3, grad);
  for (int i = 0; i < 16; ++i) {
    *v_bar += grad[i] * in_bar[lay.enc_v_offset() + i];
  }
  for (int i = 0; i < lay.d_geo; ++i) {
    f_geo_bar[i] += in_bar[lay.f_geo_offset() + i];
  }
  for (int i = 0; i < lay.d_emb; ++i) {
    e_m_bar[i] += in_bar[lay.e_m_offset() + i];
  }
}

// ---- Light field: L = softplus(MLP(f_in)) + ε_L, strictly positive.
// The raw pre-head outputs are stored by the caller for the reverse pass.

template <class T>
Vec3<T> light_forward(const FieldSet<T>& f, const T* input, MlpTape<T>& tape,
                      T raw_out[3]) {
  mlp_forward(f.light, input, raw_out, tape);
  return {softplus(raw_out[0]) + T(kLightFloor),
          softplus(raw_out[1]) + T(kLightFloor),
          softplus(raw_out[2]) + T(kLightFloor)};
}

template <class T>
void light_backward(const FieldSet<T>& f, MlpTape<T>& tape, const T raw[3],
                    const Vec3<T>& l_bar, T* input_bar, MlpGrad<T>& grads) {
  const T raw_bar[3] = {l_bar.x * softplus_derivative(raw[0]),
                        l_bar.y * softplus_derivative(raw[1]),
                        l_bar.z * softplus_derivative(raw[2])};
  mlp_backward(f.light, tape, raw_bar, input_bar, grads);
}

// ---- Opacity gate: attenuation = sigmoid(MLP([f_geo, e_m])) ∈ (0,1).

template <class T>
T gate_forward(const FieldSet<T>& f, const T* f_geo, const T* e_m,
               MlpTape<T>& tape) {
  T in[kMlpMaxWidth];
  std::copy(f_geo, f_geo + f.config.d_geo, in);
  std::copy(e_m, e_m + f.config.d_emb, in + f.config.d_geo);
  T raw;
  mlp_forward(f.gate, in, &raw, tape);
  return sigmoid(raw);
}

template <class T>
void gate_backward(const FieldSet<T>& f, MlpTape<T>& tape, T attenuation,
                   T att_bar, T* f_geo_bar, T* e_m_bar, MlpGrad<T>& grads) {
  const T raw_bar = att_bar * attenuation * (T(1) - attenuation);
  T in_bar[kMlpMaxWidth] = {};
  mlp_backward(f.gate, tape, &raw_bar, in_bar, grads);
  for (int i = 0; i < f.config.d_geo; ++i) f_geo_bar[i] += in_bar[i];
  for (int i = 0; i < f.config.d_emb; ++i) {
    e_m_bar[i] += in_bar[f.config.d_geo + i];
  }
}

// ---- Sky field: color = sigmoid(MLP([γ₃(v), e_m])).

template <class T>
Vec3<T> sky_forward(const FieldSet<T>& f, const Vec3<T>& v, const T* e_m,
                    MlpTape<T>& tape) {
  T in[kMlpMaxWidth];
  sh_basis_unchecked(v, 3, in);
  std::copy(e_m, e_m + f.config.d_emb, in + 16);
  T raw[3];
  mlp_forward(f.sky, in, raw, tape);
  return {sigmoid(raw[0]), sigmoid(raw[1]), sigmoid(raw[2])};
}

template <class T>
void sky_backward(const FieldSet<T>& f, MlpTape<T>& tape, const Vec3<T>& color,
                  const Vec3<T>& c_bar, T* e_m_bar, MlpGrad<T>& grads) {
  const T raw_bar[3] = {c_bar.x * color.x * (T(1) - color.x),
                        c_bar.y * color.y * (T(1) - color.y),
                        c_bar.z * color.z * (T(1) - color.z)};
  T in_bar[kMlpMaxWidth] = {};
  mlp_backward(f.sky, tape, raw_bar, in_bar, grads);
  // Sky geometry is frozen, so the γ₃(v) block has no trainable upstream.
  for (int i = 0; i < f.config.d_emb; ++i) e_m_bar[i] += in_bar[16 + i];
}

// ---- Object deformation field: canonical-frame offsets from
// (canonical position, sinusoidal time features, object feature).

template <class T>
void deform_time_encoding(T t_norm, T* out8) {
  const T pi = T(3.14159265358979323846);
  T freq = pi;
  for (int k = 0; k < 4; ++k) {
    out8[2 * k] = std::sin(freq * t_norm);
    out8[2 * k + 1] = std::cos(freq * t_norm);
    freq *= T(2);
  }
}

template <class T>
Vec3<T> deform_forward(const FieldSet<T>& f, const Vec3<T>& canonical_pos,
                       T t_norm, const T* object_feature, MlpTape<T>& tape) {
  T in[kMlpMaxWidth];
  in[0] = canonical_pos.x;
  in[1] = canonical_pos.y;
  in[2] = canonical_pos.z;
  deform_time_encoding(t_norm, in + 3);
  std::copy(object_feature, object_feature + f.config.d_obj, in + 11);
  T out[3];
  mlp_forward(f.deform, in, out, tape);
  return {out[0], out[1], out[2]};
}

template <class T>
void deform_backward(const FieldSet<T>& f, MlpTape<T>& tape,
                     const Vec3<T>& offset_bar, Vec3<T>* pos_bar,
                     T* feature_bar, MlpGrad<T>& grads) {
  const T out_bar[3] = {offset_bar.x, offset_bar.y, offset_bar.z};
  T in_bar[kMlpMaxWidth] = {};
  mlp_backward(f.deform, tape, out_bar, in_bar, grads);
  if (pos_bar) {
    pos_bar->x += in_bar[0];
    pos_bar->y += in_bar[1];
    pos_bar->z += in_bar[2];
  }
  if (feature_bar) {
    for (int i = 0; i < f.config.d_obj; ++i) feature_bar[i] += in_bar[11 + i];
  }
}

// ---- Composition: observed static color c = M ⊙ L.

template <class T>
Vec3<T> static_color(const Vec3<T>& m, const Vec3<T>& l) {
  return m.cwise(l);
}

template <class T>
void static_color_backward(const Vec3<T>& m, const Vec3<T>& l,
                           const Vec3<T>& c_bar, Vec3<T>* m_bar,
                           Vec3<T>* l_bar) {
  *m_bar += c_bar.cwise(l);
  *l_bar += c_bar.cwise(m);
}

}  // namespace admgs
