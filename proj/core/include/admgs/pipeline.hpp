#pragma once

#include <vector>

#include "admgs/camera.hpp"
#include "admgs/fields.hpp"
#include "admgs/gaussian.hpp"
#include "admgs/image.hpp"
#include "admgs/losses.hpp"
#include "admgs/parallel.hpp"
#include "admgs/raster.hpp"
#include "admgs/scene.hpp"

namespace admgs {

// One training/evaluation observation with its supervision layers. The
// mask images are prebuilt from the dataset's ground-truth static mask
// and layer validity; empty images disable the corresponding loss.
template <class T>
struct Observation {
  int traversal = 0;
  int camera_id = 0;
  double timestamp = 0;
  Camera<double> camera;
  Image<T> rgb;
  Image<T> gt_normal;
  Image<T> gt_material;
  Image<T> mask_normal;    // H×W×1
  Image<T> mask_material;  // H×W×1
};

struct PipelineOptions {
  ProjectionOptions projection;
  RasterOptions raster;
  ComposeOptions compose;
  bool enable_gating = true;
  bool clamp_output = true;
  bool supervise_material = true;
  bool supervise_normal = true;
  std::size_t shade_chunk = 256;
};

// Which traversal conditions each stage uses. A plain render uses the
// same id everywhere; relighting keeps the source traversal's gating
// (its geometry) while borrowing the target's illumination, sky, and
// sensor affine.
struct TraversalRoles {
  int gate = 0;
  int light = 0;
  int affine = 0;

  static TraversalRoles uniform(int m) { return {m, m, m}; }
  static TraversalRoles relight(int m_material, int m_light) {
    return {m_material, m_light, m_light};
  }
};

// ---- Per-traversal affine sensor alignment: Î = clamp(s_m ⊙ I + b_m).

template <class T>
Image<T> apply_traversal_affine(const Image<T>& render, int m,
                                const TraversalTable<T>& table,
                                bool clamp = true) {
  table.require(m);
  if (render.channels != 3) {
    throw InvalidArgument("apply_traversal_affine: expected a 3-channel image");
  }
  const Vec3<T> s = table.affine_scale.vec3(std::size_t(m));
  const Vec3<T> b = table.affine_bias.vec3(std::size_t(m));
  const T sc[3] = {s.x, s.y, s.z};
  const T bc[3] = {b.x, b.y, b.z};
  Image<T> out(render.width, render.height, 3);
  for (int y = 0; y < render.height; ++y) {
    for (int x = 0; x < render.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const T v = sc[c] * render.at(y, x, c) + bc[c];
        out.at(y, x, c) = clamp ? clamp01(v) : v;
      }
    }
  }
  return out;
}

// Adjoints of the affine map. Saturated pixels (clamped to 0 or 1) pass
// no gradient. Scale/bias adjoints go straight into the traversal table.
template <class T>
void apply_traversal_affine_backward(const Image<T>& render, int m,
                                     TraversalTable<T>& table,
                                     const Image<T>& out_bar,
                                     Image<T>& render_bar, bool clamp = true) {
  const Vec3<T> s = table.affine_scale.vec3(std::size_t(m));
  const Vec3<T> b = table.affine_bias.vec3(std::size_t(m));
  const T sc[3] = {s.x, s.y, s.z};
  const T bc[3] = {b.x, b.y, b.z};
  T* sg = table.affine_scale.grad_row(std::size_t(m));
  T* bg = table.affine_bias.grad_row(std::size_t(m));
  for (int y = 0; y < render.height; ++y) {
    for (int x = 0; x < render.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const T pre = sc[c] * render.at(y, x, c) + bc[c];
        if (clamp && (pre <= T(0) || pre >= T(1))) continue;
        const T gbar = out_bar.at(y, x, c);
        sg[c] += gbar * render.at(y, x, c);
        bg[c] += gbar;
        render_bar.at(y, x, c) += gbar * sc[c];
      }
    }
  }
}

// ---- Forward bundle: everything the reverse pass needs.

template <class T>
struct StaticShade {
  NormalResult<T> normal;
  Vec3<T> view_raw;  // camera_center − position
  Vec3<T> view;      // normalized
  Vec3<T> refl;
  Vec3<T> material;
  Vec3<T> light;
  T light_raw[3] = {};
  T gate = T(1);
  T sig_opacity = T(0);
  MlpTape<T> mat_tape, light_tape, gate_tape;
  std::vector<T> light_input;
};

template <class T>
struct SkyShade {
  Vec3<T> view;
  Vec3<T> color;
  T sig_opacity = T(0);
  MlpTape<T> tape;
};

template <class T>
struct ForwardBundle {
  TraversalRoles roles;
  double timestamp = 0;
  Camera<T> camera;
  PipelineOptions opts;
  ComposeResult<T> compose;
  // Projection results for retained (non-culled) splats.
  std::vector<int> world_index;             // retained -> compose.splats idx
  std::vector<ProjectionCache<T>> proj;
  std::vector<Sym3<T>> cov3d;
  std::vector<ShadedSplat<T>> shaded;
  std::vector<int> shade_slot;              // retained -> kind-local index
  std::vector<StaticShade<T>> static_shade;
  std::vector<SkyShade<T>> sky_shade;
  RasterCache<T> raster_cache;
  RenderOutput<T> render;
  Image<T> affine_rgb;  // post-affine (clamped) image
};

// Renders one view, filling `bundle` (reused across calls to amortize
// tape allocations).
template <class T>
void render_view(const SceneGraph<T>& scene, const FieldSet<T>& fields,
                 const Camera<double>& camera_in, const TraversalRoles& roles,
                 double tau, const PipelineOptions& opts,
                 ForwardBundle<T>& bundle) {
  scene.traversals.require(roles.gate);
  scene.traversals.require(roles.light);
  scene.traversals.require(roles.affine);
  bundle.roles = roles;
  bundle.timestamp = tau;
  bundle.opts = opts;
  bundle.camera = camera_in.cast<T>();
  bundle.camera.validate();
  bundle.compose = compose_world(scene, roles.light, tau, fields, opts.compose);

  const auto& splats = bundle.compose.splats;
  const std::size_t n = splats.size();
  bundle.world_index.clear();
  bundle.proj.clear();
  bundle.cov3d.clear();
  bundle.shaded.clear();
  bundle.world_index.reserve(n);

  // Project; cull by the near plane.
  for (std::size_t i = 0; i < n; ++i) {
    const auto& w = splats[i];
    const Sym3<T> cov = covariance_from_unchecked(w.log_scale, w.rotation);
    ProjectionCache<T> cache;
    const auto s2d = project_gaussian(w.position, cov, bundle.camera,
                                      opts.projection, &cache);
    if (!s2d) continue;
    bundle.world_index.push_back(int(i));
    bundle.proj.push_back(cache);
    bundle.cov3d.push_back(cov);
    ShadedSplat<T> sh;
    sh.mean = s2d->mean;
    sh.cov2d = s2d->cov2d;
    sh.depth = s2d->depth;
    sh.source = int(i);
    bundle.shaded.push_back(sh);
  }

  const std::size_t n_ret = bundle.shaded.size();
  bundle.shade_slot.assign(n_ret, -1);
  // Count per kind first so the kind-local caches can be indexed stably.
  std::size_t n_static = 0, n_sky = 0;
  for (std::size_t k = 0; k < n_ret; ++k) {
    const auto& w = splats[std::size_t(bundle.world_index[k])];
    if (w.tag == NodeTag::Static) {
      bundle.shade_slot[k] = int(n_static++);
    } else if (w.tag == NodeTag::Sky) {
      bundle.shade_slot[k] = int(n_sky++);
    }
  }
  bundle.static_shade.resize(n_static);
  bundle.sky_shade.resize(n_sky);

  const Vec3<T> cam_center = bundle.camera.center();
  const T* e_light = scene.traversals.embedding.row(std::size_t(roles.light));
  const T* e_gate = scene.traversals.embedding.row(std::size_t(roles.gate));
  const LightInputLayout layout = fields.config.light_layout();

  parallel_chunks(n_ret, opts.shade_chunk, [&](std::size_t, std::size_t begin,
                                               std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const auto& w = splats[std::size_t(bundle.world_index[k])];
      ShadedSplat<T>& sh = bundle.shaded[k];
      if (w.tag == NodeTag::Static) {
        StaticShade<T>& sc = bundle.static_shade[std::size_t(bundle.shade_slot[k])];
        const T* f_geo = scene.static_node.prims.f_geo.row(std::size_t(w.prim_index));
        sc.normal = shortest_axis_normal(w.log_scale, w.rotation, w.position,
                                         cam_center);
        sc.view_raw = cam_center - w.position;
        sc.view = sc.view_raw.normalized();
        sc.refl = reflect(sc.normal.n, sc.view);
        sc.material = material_forward(fields, f_geo, sc.mat_tape);
        sc.light_input.resize(std::size_t(layout.total()));
        build_light_input(layout, sc.normal.n, sc.refl, sc.view, f_geo,
                          e_light, sc.light_input.data());
        sc.light = light_forward(fields, sc.light_input.data(), sc.light_tape,
                                 sc.light_raw);
        sc.gate = opts.enable_gating
                      ? gate_forward(fields, f_geo, e_gate, sc.gate_tape)
                      : T(1);
        sc.sig_opacity = sigmoid(w.opacity_logit);
        sh.color = static_color(sc.material, sc.light);
        sh.eff_opacity = sc.sig_opacity * sc.gate;
        sh.is_static = true;
        sh.normal = sc.normal.n;
        sh.material = sc.material;
      } else if (w.tag == NodeTag::Sky) {
        SkyShade<T>& sc = bundle.sky_shade[std::size_t(bundle.shade_slot[k])];
        sc.view = (w.position - cam_center).normalized();
        sc.color = sky_forward(fields, sc.view, e_light, sc.tape);
        sc.sig_opacity = sigmoid(w.opacity_logit);
        sh.color = sc.color;
        sh.eff_opacity = sc.sig_opacity;
        sh.is_static = false;
      } else {
        // Object: direct per-Gaussian color from the first three feature
        // channels.
        const auto& obj = scene.objects[std::size_t(w.object_index)];
        const T* f_geo = obj.prims.f_geo.row(std::size_t(w.prim_index));
        sh.color = {sigmoid(f_geo[0]), sigmoid(f_geo[1]), sigmoid(f_geo[2])};
        sh.eff_opacity = sigmoid(w.opacity_logit);
        sh.is_static = false;
      }
    }
  });

  bundle.render = rasterize_forward(bundle.shaded, bundle.camera.width,
                                    bundle.camera.height, opts.raster,
                                    &bundle.raster_cache);
  bundle.affine_rgb = apply_traversal_affine(bundle.render.rgb, roles.affine,
                                             scene.traversals,
                                             opts.clamp_output);
}

// Plain render: one traversal condition everywhere.
template <class T>
void render_view(const SceneGraph<T>& scene, const FieldSet<T>& fields,
                 const Camera<double>& camera_in, int m, double tau,
                 const PipelineOptions& opts, ForwardBundle<T>& bundle) {
  render_view(scene, fields, camera_in, TraversalRoles::uniform(m), tau, opts,
              bundle);
}

// ---- Loss evaluation over a forward bundle.

template <class T>
struct LossCaches {
  SsimCache<T> ssim;
};

template <class T>
LossBreakdown<T> compute_losses(const ForwardBundle<T>& bundle,
                                const SceneGraph<T>& scene,
                                const Observation<T>& obs,
                                const LossWeights& weights,
                                double lambda_decomp_effective,
                                LossCaches<T>* caches = nullptr,
                                long long iteration = -1) {
  LossBreakdown<T> parts;
  parts.photometric = photometric_loss(bundle.affine_rgb, obs.rgb,
                                       T(weights.lambda_ssim),
                                       caches ? &caches->ssim : nullptr,
                                       &parts.ssim_value);
  if (bundle.opts.supervise_material && !obs.gt_material.data.empty() &&
      !obs.mask_material.data.empty()) {
    parts.material = masked_l1_loss(bundle.render.material_map, obs.gt_material,
                                    obs.mask_material);
  }
  if (bundle.opts.supervise_normal && !obs.gt_normal.data.empty() &&
      !obs.mask_normal.data.empty()) {
    parts.normal = masked_l1_loss(bundle.render.normal_map, obs.gt_normal,
                                  obs.mask_normal);
  }
  parts.scale = scale_flatness_loss(scene.static_node.prims.log_scale,
                                    T(weights.delta));
  parts.total = total_loss(parts, weights, lambda_decomp_effective, iteration);
  return parts;
}

// Per-chunk accumulators for gradients of parameters shared across
// splats; merged in chunk order for bitwise-reproducible reductions.
template <class T>
struct SharedGradChunk {
  MlpGrad<T> material, light, sky, gate, deform;
  std::vector<T> e_m;     // light-role embedding row, d_emb
  std::vector<T> e_gate;  // gate-role embedding row, d_emb
  std::vector<std::vector<T>> obj_feature;  // per object, d_obj

  SharedGradChunk(const FieldSet<T>& f, std::size_t n_objects)
      : material(f.material), light(f.light), sky(f.sky), gate(f.gate),
        deform(f.deform), e_m(std::size_t(f.config.d_emb), T(0)),
        e_gate(std::size_t(f.config.d_emb), T(0)),
        obj_feature(n_objects, std::vector<T>(std::size_t(f.config.d_obj), T(0))) {}
};

// Full reverse pass: losses -> affine -> rasterizer -> shading -> geometry,
// accumulating into the .g buffers of scene and fields. The caller zeroes
// gradients before the pass.
template <class T>
void backward_losses(ForwardBundle<T>& bundle, SceneGraph<T>& scene,
                     FieldSet<T>& fields, const Observation<T>& obs,
                     const LossWeights& weights,
                     double lambda_decomp_effective,
                     const LossCaches<T>& caches) {
  const int W = bundle.camera.width, H = bundle.camera.height;

  // Loss layer -> image adjoints.
  Image<T> affine_bar(W, H, 3);
  photometric_loss_backward(bundle.affine_rgb, obs.rgb, T(weights.lambda_ssim),
                            caches.ssim, T(1), affine_bar);

  RenderAdjoints<T> adj;
  adj.rgb = Image<T>(W, H, 3);
  apply_traversal_affine_backward(bundle.render.rgb, bundle.roles.affine,
                                  scene.traversals, affine_bar, adj.rgb,
                                  bundle.opts.clamp_output);

  if (lambda_decomp_effective > 0) {
    if (bundle.opts.supervise_material && !obs.gt_material.data.empty() &&
        !obs.mask_material.data.empty()) {
      adj.material_map = Image<T>(W, H, 3);
      masked_l1_loss_backward(bundle.render.material_map, obs.gt_material,
                              obs.mask_material, T(lambda_decomp_effective),
                              adj.material_map);
    }
    if (bundle.opts.supervise_normal && !obs.gt_normal.data.empty() &&
        !obs.mask_normal.data.empty()) {
      adj.normal_map = Image<T>(W, H, 3);
      masked_l1_loss_backward(bundle.render.normal_map, obs.gt_normal,
                              obs.mask_normal, T(lambda_decomp_effective),
                              adj.normal_map);
    }
  }

  if (weights.lambda_scale > 0) {
    scale_flatness_loss_backward(scene.static_node.prims.log_scale,
                                 T(weights.delta), T(weights.lambda_scale));
  }

  // Rasterizer adjoints.
  GradientBuffers<T> g =
      rasterize_backward(bundle.shaded, adj, bundle.raster_cache);

  // Shading + geometry backward.
  const auto& splats = bundle.compose.splats;
  const std::size_t n_ret = bundle.shaded.size();
  const LightInputLayout layout = fields.config.light_layout();

  const std::size_t chunk = bundle.opts.shade_chunk;
  const std::size_t n_chunks = chunk_count(n_ret, chunk);
  std::vector<SharedGradChunk<T>> shared;
  shared.reserve(n_chunks);
  for (std::size_t c = 0; c < n_chunks; ++c) {
    shared.emplace_back(fields, scene.objects.size());
  }

  // Map compose-level object index -> ComposedObject slot.
  std::vector<int> comp_slot(scene.objects.size(), -1);
  for (std::size_t s = 0; s < bundle.compose.objects.size(); ++s) {
    comp_slot[std::size_t(bundle.compose.objects[s].object_index)] = int(s);
  }

  parallel_chunks(n_ret, chunk, [&](std::size_t ci, std::size_t begin,
                                    std::size_t end) {
    SharedGradChunk<T>& sg = shared[ci];
    for (std::size_t k = begin; k < end; ++k) {
      const auto& w = splats[std::size_t(bundle.world_index[k])];
      const std::size_t prim = std::size_t(w.prim_index);

      Vec3<T> center_bar{};
      Sym3<T> sigma_bar{};
      Vec3<T> ls_bar{};
      Quat<T> q_bar{T(0), T(0), T(0), T(0)};

      if (w.tag == NodeTag::Static) {
        auto& prims = scene.static_node.prims;
        StaticShade<T>& sc = bundle.static_shade[std::size_t(bundle.shade_slot[k])];
        T* f_geo_bar = prims.f_geo.grad_row(prim);

        // Color payload: c = M ⊙ L.
        Vec3<T> m_bar{}, l_bar{};
        static_color_backward(sc.material, sc.light, g.color[k], &m_bar, &l_bar);
        m_bar += g.material[k];  // material-map payload

        material_backward(fields, sc.mat_tape, sc.material, m_bar, f_geo_bar,
                          sg.material);

        Vec3<T> n_bar = g.normal[k];  // normal-map payload
        Vec3<T> v_bar{}, r_bar{};
        {
          std::vector<T> in_bar(sc.light_input.size(), T(0));
          light_backward(fields, sc.light_tape, sc.light_raw, l_bar,
                         in_bar.data(), sg.light);
          light_input_backward(layout, sc.normal.n, sc.refl, sc.view,
                               in_bar.data(), &n_bar, &r_bar, &v_bar, f_geo_bar,
                               sg.e_m.data());
        }
        reflect_backward(sc.normal.n, sc.view, r_bar, &n_bar, &v_bar);

        // Effective opacity = sigmoid(logit) · gate.
        const T eff_bar = g.eff_opacity[k];
        const T sig = sc.sig_opacity;
        T sig_bar = eff_bar * sc.gate;
        if (bundle.opts.enable_gating) {
          const T gate_bar = eff_bar * sig;
          gate_backward(fields, sc.gate_tape, sc.gate, gate_bar, f_geo_bar,
                        sg.e_gate.data(), sg.gate);
        }
        prims.opacity_logit.g[prim] += sig_bar * sig * (T(1) - sig);

        // Normal -> rotation; view -> position.
        shortest_axis_normal_backward(w.rotation, sc.normal.axis,
                                      sc.normal.sign, n_bar, &q_bar);
        const Vec3<T> vraw_bar = normalize_backward(sc.view_raw, v_bar);
        center_bar -= vraw_bar;  // view_raw = cam − position

        // Projection -> center & covariance.
        project_gaussian_backward(bundle.cov3d[k], bundle.camera, bundle.proj[k],
                                  g.mean[k], g.cov2d[k], g.depth[k],
                                  &center_bar, &sigma_bar);
        covariance_from_backward(w.log_scale, w.rotation, sigma_bar, &ls_bar,
                                 &q_bar);

        prims.position.add_grad3(prim, center_bar);
        prims.log_scale.add_grad3(prim, ls_bar);
        prims.rotation.add_grad_quat(prim, q_bar);
      } else if (w.tag == NodeTag::Sky) {
        // Sky geometry is frozen; only the sky field and e_m learn.
        SkyShade<T>& sc = bundle.sky_shade[std::size_t(bundle.shade_slot[k])];
        sky_backward(fields, sc.tape, sc.color, g.color[k], sg.e_m.data(),
                     sg.sky);
      } else {
        auto& obj = scene.objects[std::size_t(w.object_index)];
        auto& prims = obj.prims;
        const T* f_geo = prims.f_geo.row(prim);
        T* f_geo_bar = prims.f_geo.grad_row(prim);
        // Direct color head.
        for (int c = 0; c < 3; ++c) {
          const T s = sigmoid(f_geo[c]);
          f_geo_bar[c] += g.color[k][c] * s * (T(1) - s);
        }
        const T eff_bar = g.eff_opacity[k];
        const T sig = sigmoid(w.opacity_logit);
        prims.opacity_logit.g[prim] += eff_bar * sig * (T(1) - sig);

        project_gaussian_backward(bundle.cov3d[k], bundle.camera, bundle.proj[k],
                                  g.mean[k], g.cov2d[k], g.depth[k],
                                  &center_bar, &sigma_bar);
        covariance_from_backward(w.log_scale, w.rotation, sigma_bar, &ls_bar,
                                 &q_bar);

        ComposedObject<T>& comp =
            bundle.compose.objects[std::size_t(comp_slot[std::size_t(w.object_index)])];
        // p_world = R_obj (p_can + Δ) + t_obj.
        const Vec3<T> can_bar = comp.pose_matrix.transposed_times(center_bar);
        Vec3<T> pos_bar = can_bar;
        if (!bundle.opts.compose.rigid_objects) {
          deform_backward(fields, comp.deform_tapes[prim], can_bar, &pos_bar,
                          sg.obj_feature[std::size_t(w.object_index)].data(),
                          sg.deform);
        }
        prims.position.add_grad3(prim, pos_bar);
        prims.log_scale.add_grad3(prim, ls_bar);
        // q_world = q_obj ⊗ q_can (raw product).
        const Quat<T> qc_bar =
            quat_premultiply_backward(comp.pose_rotation, q_bar);
        prims.rotation.add_grad_quat(prim, qc_bar);
      }
    }
  });

  // Deterministic merge of shared-parameter gradients, chunk order.
  T* e_light_grad =
      scene.traversals.embedding.grad_row(std::size_t(bundle.roles.light));
  T* e_gate_grad =
      scene.traversals.embedding.grad_row(std::size_t(bundle.roles.gate));
  for (std::size_t c = 0; c < n_chunks; ++c) {
    shared[c].material.add_to(fields.material);
    shared[c].light.add_to(fields.light);
    shared[c].sky.add_to(fields.sky);
    shared[c].gate.add_to(fields.gate);
    shared[c].deform.add_to(fields.deform);
    for (int i = 0; i < fields.config.d_emb; ++i) {
      e_light_grad[i] += shared[c].e_m[std::size_t(i)];
      e_gate_grad[i] += shared[c].e_gate[std::size_t(i)];
    }
    for (std::size_t oi = 0; oi < scene.objects.size(); ++oi) {
      T* fg = scene.objects[oi].feature.grad_row(0);
      for (int i = 0; i < fields.config.d_obj; ++i) {
        fg[i] += shared[c].obj_feature[oi][std::size_t(i)];
      }
    }
  }
}

}  // namespace admgs
