#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "admgs/errors.hpp"
#include "admgs/gaussian.hpp"
#include "admgs/image.hpp"
#include "admgs/vec.hpp"

namespace admgs {

// A projected splat ready for compositing. Static splats carry normal and
// material payloads; sky/object splats carry color only.
template <class T>
struct ShadedSplat {
  Vec2<T> mean;
  Sym2<T> cov2d;
  T depth{};
  T eff_opacity{};  // sigmoid(opacity_logit) × gate attenuation
  Vec3<T> color;
  bool is_static = false;
  Vec3<T> normal;    // valid when is_static
  Vec3<T> material;  // valid when is_static
  int source = 0;    // stable primitive id; depth tie-break key
};

template <class T>
struct RenderOutput {
  Image<T> rgb;          // H×W×3
  Image<T> alpha;        // H×W
  Image<T> depth;        // H×W, alpha-weighted expected depth
  Image<T> normal_map;   // H×W×3, composited over static splats only
  Image<T> material_map; // H×W×3, static only
  Image<T> static_mask;  // H×W, accumulated static alpha

  RenderOutput() = default;
  RenderOutput(int w, int h)
      : rgb(w, h, 3), alpha(w, h, 1), depth(w, h, 1), normal_map(w, h, 3),
        material_map(w, h, 3), static_mask(w, h, 1) {}
};

struct RasterOptions {
  int tile = 16;
  // Compositing semantics shared by the tiled and reference renderers:
  // a splat's footprint ends at `extent_sigma` standard deviations, the
  // per-splat alpha is capped, and once transmittance falls below
  // `stop_transmittance` the remaining splats contribute nothing (the
  // tiled renderer exploits this by terminating the pixel).
  double extent_sigma = 3.0;
  double alpha_cap = 0.999;
  double stop_transmittance = 1e-4;
  Vec3<double> background{0, 0, 0};
};

// Forward cache consumed by rasterize_backward.
template <class T>
struct RasterCache {
  int width = 0, height = 0;
  RasterOptions opts;
  std::vector<Sym2<T>> conic;   // cov2d inverses
  std::vector<T> extent;        // screen-space footprint radius, px
  std::vector<int> order;       // splat ids sorted by (depth, source)
  std::vector<std::vector<int>> tile_splats;  // per tile, sorted ids
  int tiles_x = 0, tiles_y = 0;
  bool valid = false;
};

// Adjoints of every ShadedSplat field the loss can reach, scatter-aligned
// with the forward splat array.
template <class T>
struct GradientBuffers {
  std::vector<Vec2<T>> mean;
  std::vector<Sym2<T>> cov2d;  // unique-entry adjoints (b counts both slots)
  std::vector<T> depth;
  std::vector<T> eff_opacity;
  std::vector<Vec3<T>> color;
  std::vector<Vec3<T>> normal;
  std::vector<Vec3<T>> material;

  explicit GradientBuffers(std::size_t n)
      : mean(n), cov2d(n), depth(n, T(0)), eff_opacity(n, T(0)), color(n),
        normal(n), material(n) {}
};

// Per-layer output adjoints; empty images are treated as zero.
template <class T>
struct RenderAdjoints {
  Image<T> rgb, alpha, depth, normal_map, material_map, static_mask;
};

namespace detail {

template <class T>
struct SplatOrderLess {
  const std::vector<ShadedSplat<T>>* splats;
  bool operator()(int a, int b) const {
    const auto& sa = (*splats)[a];
    const auto& sb = (*splats)[b];
    if (sa.depth != sb.depth) return sa.depth < sb.depth;
    return sa.source < sb.source;
  }
};

// Composites one pixel given splat ids in front-to-back order. Fn is
// called as fn(splat_id, alpha, transmittance_before) for every splat
// with a nonzero contribution.
template <class T, class Fn>
void walk_pixel(const std::vector<ShadedSplat<T>>& splats,
                const std::vector<Sym2<T>>& conic, const std::vector<int>& ids,
                const Vec2<T>& px, const RasterOptions& opts, Fn&& fn) {
  const T cutoff2 = T(opts.extent_sigma * opts.extent_sigma);
  T transmittance = T(1);
  for (int id : ids) {
    if (!(transmittance >= T(opts.stop_transmittance))) break;
    const auto& s = splats[std::size_t(id)];
    const Vec2<T> d{px.x - s.mean.x, px.y - s.mean.y};
    const T d2 = conic[std::size_t(id)].quad(d);
    if (d2 > cutoff2) continue;
    T alpha = s.eff_opacity * std::exp(T(-0.5) * d2);
    if (alpha > T(opts.alpha_cap)) alpha = T(opts.alpha_cap);
    fn(id, alpha, transmittance);
    transmittance *= (T(1) - alpha);
  }
}

template <class T>
void accumulate_pixel(const std::vector<ShadedSplat<T>>& splats,
                      const std::vector<Sym2<T>>& conic,
                      const std::vector<int>& ids, int x, int y,
                      const RasterOptions& opts, RenderOutput<T>& out) {
  const Vec2<T> px{T(x) + T(0.5), T(y) + T(0.5)};
  T acc_rgb[3] = {};
  T acc_alpha = T(0), acc_depth = T(0), acc_smask = T(0);
  T acc_normal[3] = {}, acc_material[3] = {};
  T transmittance_end = T(1);
  walk_pixel(splats, conic, ids, px, opts,
             [&](int id, T alpha, T transmittance) {
               const auto& s = splats[std::size_t(id)];
               const T w = alpha * transmittance;
               acc_rgb[0] += s.color.x * w;
               acc_rgb[1] += s.color.y * w;
               acc_rgb[2] += s.color.z * w;
               acc_alpha += w;
               acc_depth += s.depth * w;
               if (s.is_static) {
                 acc_normal[0] += s.normal.x * w;
                 acc_normal[1] += s.normal.y * w;
                 acc_normal[2] += s.normal.z * w;
                 acc_material[0] += s.material.x * w;
                 acc_material[1] += s.material.y * w;
                 acc_material[2] += s.material.z * w;
                 acc_smask += w;
               }
               transmittance_end = transmittance * (T(1) - alpha);
             });
  acc_rgb[0] += T(opts.background.x) * transmittance_end;
  acc_rgb[1] += T(opts.background.y) * transmittance_end;
  acc_rgb[2] += T(opts.background.z) * transmittance_end;
  for (int c = 0; c < 3; ++c) {
    out.rgb.at(y, x, c) = acc_rgb[c];
    out.normal_map.at(y, x, c) = acc_normal[c];
    out.material_map.at(y, x, c) = acc_material[c];
  }
  out.alpha.at(y, x) = acc_alpha;
  out.depth.at(y, x) = acc_depth;
  out.static_mask.at(y, x) = acc_smask;
}

template <class T>
void prepare_splats(const std::vector<ShadedSplat<T>>& splats,
                    const RasterOptions& opts, RasterCache<T>& cache) {
  const std::size_t n = splats.size();
  cache.conic.resize(n);
  cache.extent.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    cache.conic[i] = splats[i].cov2d.inverse();
    cache.extent[i] =
        T(opts.extent_sigma) * std::sqrt(splats[i].cov2d.max_eigenvalue());
  }
}

}  // namespace detail

// Tile-binned front-to-back alpha compositing. Splats are binned by the
// axis-aligned box of their footprint; inside a tile the footprint test
// is the exact Mahalanobis ellipse, so output does not depend on tiling.
template <class T>
RenderOutput<T> rasterize_forward(const std::vector<ShadedSplat<T>>& splats,
                                  int width, int height,
                                  const RasterOptions& opts = {},
                                  RasterCache<T>* cache_out = nullptr) {
  if (width <= 0 || height <= 0) {
    throw InvalidArgument("rasterize_forward: image size must be positive");
  }
  RasterCache<T> local_cache;
  RasterCache<T>& cache = cache_out ? *cache_out : local_cache;
  cache.width = width;
  cache.height = height;
  cache.opts = opts;
  detail::prepare_splats(splats, opts, cache);

  const int tile = std::max(1, opts.tile);
  cache.tiles_x = (width + tile - 1) / tile;
  cache.tiles_y = (height + tile - 1) / tile;
  cache.tile_splats.assign(std::size_t(cache.tiles_x) * cache.tiles_y, {});

  for (std::size_t i = 0; i < splats.size(); ++i) {
    const auto& s = splats[i];
    const T r = cache.extent[i];
    const int x0 = std::max(0, int(std::floor((s.mean.x - r))) / tile);
    const int y0 = std::max(0, int(std::floor((s.mean.y - r))) / tile);
    const int x1 = std::min(cache.tiles_x - 1, int(std::floor(s.mean.x + r)) / tile);
    const int y1 = std::min(cache.tiles_y - 1, int(std::floor(s.mean.y + r)) / tile);
    if (s.mean.x + r < T(0) || s.mean.y + r < T(0) || x0 >= cache.tiles_x ||
        y0 >= cache.tiles_y) {
      continue;
    }
    for (int ty = y0; ty <= y1; ++ty) {
      for (int tx = x0; tx <= x1; ++tx) {
        cache.tile_splats[std::size_t(ty) * cache.tiles_x + tx].push_back(int(i));
      }
    }
  }
  const detail::SplatOrderLess<T> less{&splats};
  for (auto& ids : cache.tile_splats) std::sort(ids.begin(), ids.end(), less);
  cache.valid = true;

  RenderOutput<T> out(width, height);
  for (int ty = 0; ty < cache.tiles_y; ++ty) {
    for (int tx = 0; tx < cache.tiles_x; ++tx) {
      const auto& ids = cache.tile_splats[std::size_t(ty) * cache.tiles_x + tx];
      const int yend = std::min(height, (ty + 1) * tile);
      const int xend = std::min(width, (tx + 1) * tile);
      for (int y = ty * tile; y < yend; ++y) {
        for (int x = tx * tile; x < xend; ++x) {
          detail::accumulate_pixel(splats, cache.conic, ids, x, y, opts, out);
        }
      }
    }
  }
  return out;
}

// Brute-force oracle: every pixel walks the full globally sorted splat
// list with the same compositing semantics, no tiling.
template <class T>
RenderOutput<T> reference_render(const std::vector<ShadedSplat<T>>& splats,
                                 int width, int height,
                                 const RasterOptions& opts = {}) {
  if (width <= 0 || height <= 0) {
    throw InvalidArgument("reference_render: image size must be positive");
  }
  RasterCache<T> cache;
  detail::prepare_splats(splats, opts, cache);
  std::vector<int> ids(splats.size());
  for (std::size_t i = 0; i < splats.size(); ++i) ids[i] = int(i);
  std::sort(ids.begin(), ids.end(), detail::SplatOrderLess<T>{&splats});

  RenderOutput<T> out(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      detail::accumulate_pixel(splats, cache.conic, ids, x, y, opts, out);
    }
  }
  return out;
}

// Exact adjoints of rasterize_forward. `cache` must come from the
// matching forward pass over the same splat array.
template <class T>
GradientBuffers<T> rasterize_backward(const std::vector<ShadedSplat<T>>& splats,
                                      const RenderAdjoints<T>& adj,
                                      const RasterCache<T>& cache) {
  if (!cache.valid) {
    throw ContractViolation("rasterize_backward: cache does not match a forward pass");
  }
  const int width = cache.width, height = cache.height;
  auto check = [&](const Image<T>& im, int ch, const char* name) {
    if (im.data.empty()) return;
    if (im.width != width || im.height != height || im.channels != ch) {
      throw ContractViolation(std::string("rasterize_backward: adjoint '") +
                              name + "' shape mismatch");
    }
  };
  check(adj.rgb, 3, "rgb");
  check(adj.alpha, 1, "alpha");
  check(adj.depth, 1, "depth");
  check(adj.normal_map, 3, "normal_map");
  check(adj.material_map, 3, "material_map");
  check(adj.static_mask, 1, "static_mask");

  GradientBuffers<T> g(splats.size());
  const RasterOptions& opts = cache.opts;
  const int tile = std::max(1, opts.tile);

  struct Step {
    int id;
    T alpha;
    T transmittance;
  };
  std::vector<Step> steps;
  steps.reserve(64);

  for (int ty = 0; ty < cache.tiles_y; ++ty) {
    for (int tx = 0; tx < cache.tiles_x; ++tx) {
      const auto& ids = cache.tile_splats[std::size_t(ty) * cache.tiles_x + tx];
      if (ids.empty()) continue;
      const int yend = std::min(height, (ty + 1) * tile);
      const int xend = std::min(width, (tx + 1) * tile);
      for (int y = ty * tile; y < yend; ++y) {
        for (int x = tx * tile; x < xend; ++x) {
          const Vec2<T> px{T(x) + T(0.5), T(y) + T(0.5)};
          steps.clear();
          T t_end = T(1);
          detail::walk_pixel(splats, cache.conic, ids, px, opts,
                             [&](int id, T alpha, T transmittance) {
                               steps.push_back({id, alpha, transmittance});
                               t_end = transmittance * (T(1) - alpha);
                             });
          if (steps.empty()) continue;

          const T rb[3] = {adj.rgb.data.empty() ? T(0) : adj.rgb.at(y, x, 0),
                           adj.rgb.data.empty() ? T(0) : adj.rgb.at(y, x, 1),
                           adj.rgb.data.empty() ? T(0) : adj.rgb.at(y, x, 2)};
          const T ab = adj.alpha.data.empty() ? T(0) : adj.alpha.at(y, x);
          const T db = adj.depth.data.empty() ? T(0) : adj.depth.at(y, x);
          const T nb[3] = {
              adj.normal_map.data.empty() ? T(0) : adj.normal_map.at(y, x, 0),
              adj.normal_map.data.empty() ? T(0) : adj.normal_map.at(y, x, 1),
              adj.normal_map.data.empty() ? T(0) : adj.normal_map.at(y, x, 2)};
          const T mb[3] = {
              adj.material_map.data.empty() ? T(0) : adj.material_map.at(y, x, 0),
              adj.material_map.data.empty() ? T(0) : adj.material_map.at(y, x, 1),
              adj.material_map.data.empty() ? T(0) : adj.material_map.at(y, x, 2)};
          const T sb = adj.static_mask.data.empty() ? T(0) : adj.static_mask.at(y, x);

          // Accumulators over splats behind the current one (the
          // background contributes as a virtual last layer).
          T a_rgb[3] = {T(opts.background.x) * t_end,
                        T(opts.background.y) * t_end,
                        T(opts.background.z) * t_end};
          T a_alpha = T(0), a_depth = T(0), a_smask = T(0);
          T a_normal[3] = {}, a_material[3] = {};

          for (std::size_t k = steps.size(); k-- > 0;) {
            const Step& st = steps[k];
            const auto& s = splats[std::size_t(st.id)];
            const T w = st.alpha * st.transmittance;
            const T one_minus = T(1) - st.alpha;

            // Payload adjoints.
            g.color[std::size_t(st.id)] += Vec3<T>{rb[0], rb[1], rb[2]} * w;
            g.depth[std::size_t(st.id)] += db * w;
            if (s.is_static) {
              g.normal[std::size_t(st.id)] += Vec3<T>{nb[0], nb[1], nb[2]} * w;
              g.material[std::size_t(st.id)] += Vec3<T>{mb[0], mb[1], mb[2]} * w;
            }

            // dL/dα_i = Σ_layers ḡ (payload_i T_i − behind/(1−α_i)).
            T d_alpha = T(0);
            d_alpha += rb[0] * (s.color.x * st.transmittance - a_rgb[0] / one_minus);
            d_alpha += rb[1] * (s.color.y * st.transmittance - a_rgb[1] / one_minus);
            d_alpha += rb[2] * (s.color.z * st.transmittance - a_rgb[2] / one_minus);
            d_alpha += ab * (st.transmittance - a_alpha / one_minus);
            d_alpha += db * (s.depth * st.transmittance - a_depth / one_minus);
            if (s.is_static) {
              d_alpha += nb[0] * (s.normal.x * st.transmittance - a_normal[0] / one_minus);
              d_alpha += nb[1] * (s.normal.y * st.transmittance - a_normal[1] / one_minus);
              d_alpha += nb[2] * (s.normal.z * st.transmittance - a_normal[2] / one_minus);
              d_alpha += mb[0] * (s.material.x * st.transmittance - a_material[0] / one_minus);
              d_alpha += mb[1] * (s.material.y * st.transmittance - a_material[1] / one_minus);
              d_alpha += mb[2] * (s.material.z * st.transmittance - a_material[2] / one_minus);
              d_alpha += sb * (st.transmittance - a_smask / one_minus);
            } else {
              d_alpha += nb[0] * (-a_normal[0] / one_minus);
              d_alpha += nb[1] * (-a_normal[1] / one_minus);
              d_alpha += nb[2] * (-a_normal[2] / one_minus);
              d_alpha += mb[0] * (-a_material[0] / one_minus);
              d_alpha += mb[1] * (-a_material[1] / one_minus);
              d_alpha += mb[2] * (-a_material[2] / one_minus);
              d_alpha += sb * (-a_smask / one_minus);
            }

            // Move the accumulators to "behind or equal to i".
            a_rgb[0] += s.color.x * w;
            a_rgb[1] += s.color.y * w;
            a_rgb[2] += s.color.z * w;
            a_alpha += w;
            a_depth += s.depth * w;
            if (s.is_static) {
              a_normal[0] += s.normal.x * w;
              a_normal[1] += s.normal.y * w;
              a_normal[2] += s.normal.z * w;
              a_material[0] += s.material.x * w;
              a_material[1] += s.material.y * w;
              a_material[2] += s.material.z * w;
              a_smask += w;
            }

            // α = min(cap, eff_opacity · exp(−½ d²)); the cap saturates.
            const Vec2<T> d{px.x - s.mean.x, px.y - s.mean.y};
            const T d2 = cache.conic[std::size_t(st.id)].quad(d);
            const T gauss = std::exp(T(-0.5) * d2);
            const T alpha_raw = s.eff_opacity * gauss;
            if (alpha_raw > T(opts.alpha_cap)) continue;

            g.eff_opacity[std::size_t(st.id)] += d_alpha * gauss;
            const T d_d2 = d_alpha * s.eff_opacity * gauss * T(-0.5);
            const Sym2<T>& q = cache.conic[std::size_t(st.id)];
            const Vec2<T> u{q.a * d.x + q.b * d.y, q.b * d.x + q.c * d.y};
            g.mean[std::size_t(st.id)] += u * (T(-2) * d_d2);
            // Σ̄ = −d_d2 · u uᵀ in unique-entry storage.
            g.cov2d[std::size_t(st.id)].a += -d_d2 * u.x * u.x;
            g.cov2d[std::size_t(st.id)].b += -d_d2 * T(2) * u.x * u.y;
            g.cov2d[std::size_t(st.id)].c += -d_d2 * u.y * u.y;
          }
        }
      }
    }
  }
  return g;
}

}  // namespace admgs
