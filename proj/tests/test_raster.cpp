#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "admgs/raster.hpp"
#include "admgs/rng.hpp"

using namespace admgs;
using V3 = Vec3<double>;

namespace {

ShadedSplat<double> splat_at(double x, double y, double depth, double opacity,
                             const V3& color, int source) {
  ShadedSplat<double> s;
  s.mean = {x, y};
  s.cov2d = {3.0, 0.0, 3.0};
  s.depth = depth;
  s.eff_opacity = opacity;
  s.color = color;
  s.source = source;
  return s;
}

std::vector<ShadedSplat<double>> random_scene(Rng& rng, int count, int size) {
  std::vector<ShadedSplat<double>> splats;
  for (int i = 0; i < count; ++i) {
    ShadedSplat<double> s;
    s.mean = {rng.uniform(-4.0, size + 4.0), rng.uniform(-4.0, size + 4.0)};
    // Random SPD 2x2 via A Aᵀ + εI.
    const double a = rng.normal(0, 2), b = rng.normal(0, 2),
                 c = rng.normal(0, 2), d = rng.normal(0, 2);
    s.cov2d = {a * a + b * b + 0.3, a * c + b * d, c * c + d * d + 0.3};
    s.depth = rng.uniform(0.5, 10.0);
    s.eff_opacity = rng.uniform(0.05, 0.95);
    s.color = {rng.uniform(), rng.uniform(), rng.uniform()};
    s.is_static = rng.uniform() < 0.5;
    if (s.is_static) {
      V3 n{rng.normal(), rng.normal(), rng.normal()};
      s.normal = n.normalized();
      s.material = {rng.uniform(), rng.uniform(), rng.uniform()};
    }
    s.source = i;
    splats.push_back(s);
  }
  return splats;
}

double max_abs_diff(const Image<double>& a, const Image<double>& b) {
  double worst = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
  }
  return worst;
}

}  // namespace

TEST_CASE("single splat at its mean: alpha = opacity, rgb = opacity*color") {
  // Pixel (8,8) has center (8.5, 8.5); put the mean exactly there.
  const auto s = splat_at(8.5, 8.5, 1.0, 0.4, {1.0, 0.5, 0.25}, 0);
  const auto out = rasterize_forward<double>({s}, 16, 16);
  CHECK(out.alpha.at(8, 8) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(out.rgb.at(8, 8, 0) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(out.rgb.at(8, 8, 1) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(out.rgb.at(8, 8, 2) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(out.depth.at(8, 8) == doctest::Approx(0.4 * 1.0).epsilon(1e-12));
}

TEST_CASE("two coincident splats composite front to back") {
  const auto front = splat_at(8.5, 8.5, 1.0, 0.6, {1, 0, 0}, 0);
  const auto back = splat_at(8.5, 8.5, 2.0, 0.5, {0, 1, 0}, 1);
  const auto out = rasterize_forward<double>({back, front}, 16, 16);
  // C = c1 a1 + c2 a2 (1 - a1) with the nearer splat first.
  CHECK(out.rgb.at(8, 8, 0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(out.rgb.at(8, 8, 1) == doctest::Approx(0.5 * 0.4).epsilon(1e-12));
  CHECK(out.alpha.at(8, 8) == doctest::Approx(0.6 + 0.5 * 0.4).epsilon(1e-12));
}

TEST_CASE("zero-area image is invalid") {
  CHECK_THROWS_AS(rasterize_forward<double>({}, 0, 16), InvalidArgument);
  CHECK_THROWS_AS(reference_render<double>({}, 16, 0), InvalidArgument);
}

TEST_CASE("empty splat list renders the background") {
  const auto out = reference_render<double>({}, 8, 8);
  for (const double v : out.alpha.data) CHECK(v == 0.0);
  for (const double v : out.rgb.data) CHECK(v == 0.0);
}

TEST_CASE("tiled renderer matches the brute-force reference") {
  Rng rng(31);
  double worst = 0;
  for (int scene = 0; scene < 12; ++scene) {
    const auto splats = random_scene(rng, 1 + int(rng.uniform_index(50)), 64);
    const auto tiled = rasterize_forward(splats, 64, 64);
    const auto ref = reference_render(splats, 64, 64);
    worst = std::max(worst, max_abs_diff(tiled.rgb, ref.rgb));
    worst = std::max(worst, max_abs_diff(tiled.alpha, ref.alpha));
    worst = std::max(worst, max_abs_diff(tiled.depth, ref.depth));
    worst = std::max(worst, max_abs_diff(tiled.normal_map, ref.normal_map));
    worst = std::max(worst, max_abs_diff(tiled.material_map, ref.material_map));
    worst = std::max(worst, max_abs_diff(tiled.static_mask, ref.static_mask));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("output is invariant to input splat ordering") {
  Rng rng(32);
  auto splats = random_scene(rng, 30, 32);
  const auto base = reference_render(splats, 32, 32);
  // Deterministic permutation.
  std::reverse(splats.begin(), splats.end());
  const auto permuted = reference_render(splats, 32, 32);
  CHECK(max_abs_diff(base.rgb, permuted.rgb) == 0.0);
  const auto tiled = rasterize_forward(splats, 32, 32);
  CHECK(max_abs_diff(base.rgb, tiled.rgb) <= 1e-6);
}

TEST_CASE("transmittance stays in [0,1]: alpha never exceeds 1") {
  Rng rng(33);
  const auto splats = random_scene(rng, 80, 24);
  const auto out = reference_render(splats, 24, 24);
  for (const double v : out.alpha.data) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0 + 1e-12);
  }
  for (std::size_t i = 0; i < out.static_mask.data.size(); ++i) {
    CHECK(out.static_mask.data[i] <= out.alpha.data[i] + 1e-12);
  }
}

TEST_CASE("material map stays within coverage x [0,1]") {
  Rng rng(34);
  const auto splats = random_scene(rng, 40, 32);
  const auto out = reference_render(splats, 32, 32);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = out.material_map.at(y, x, c);
        CHECK(v >= 0.0);
        CHECK(v <= out.static_mask.at(y, x) + 1e-12);
      }
    }
  }
}

TEST_CASE("backward: single splat color gradient equals its weight") {
  const auto s = splat_at(8.5, 8.5, 1.0, 0.35, {0.2, 0.4, 0.6}, 0);
  RasterCache<double> cache;
  const auto out = rasterize_forward<double>({s}, 16, 16, {}, &cache);
  (void)out;
  RenderAdjoints<double> adj;
  adj.rgb = Image<double>(16, 16, 3);
  adj.rgb.at(8, 8, 0) = 1.0;  // d loss / d rgb at the mean pixel
  const auto g = rasterize_backward<double>({s}, adj, cache);
  CHECK(g.color[0].x == doctest::Approx(0.35).epsilon(1e-12));
  CHECK(g.color[0].y == 0.0);
}

TEST_CASE("backward: zero adjoints give zero gradients") {
  Rng rng(35);
  const auto splats = random_scene(rng, 10, 16);
  RasterCache<double> cache;
  rasterize_forward(splats, 16, 16, {}, &cache);
  RenderAdjoints<double> adj;
  adj.rgb = Image<double>(16, 16, 3);  // all zeros
  const auto g = rasterize_backward(splats, adj, cache);
  for (std::size_t i = 0; i < splats.size(); ++i) {
    CHECK(g.color[i].norm() == 0.0);
    CHECK(g.eff_opacity[i] == 0.0);
    CHECK(g.mean[i].x == 0.0);
    CHECK(g.cov2d[i].a == 0.0);
  }
}

TEST_CASE("backward cache discipline") {
  RasterCache<double> cache;  // never filled by a forward pass
  RenderAdjoints<double> adj;
  CHECK_THROWS_AS(rasterize_backward<double>({}, adj, cache), ContractViolation);
}

TEST_CASE("backward matches finite differences on all splat inputs") {
  Rng rng(36);
  auto splats = random_scene(rng, 8, 16);
  RasterOptions opts;
  RasterCache<double> cache;
  rasterize_forward(splats, 16, 16, opts, &cache);

  // Random loss over every output layer.
  RenderAdjoints<double> adj;
  adj.rgb = Image<double>(16, 16, 3);
  adj.alpha = Image<double>(16, 16, 1);
  adj.depth = Image<double>(16, 16, 1);
  adj.normal_map = Image<double>(16, 16, 3);
  adj.material_map = Image<double>(16, 16, 3);
  adj.static_mask = Image<double>(16, 16, 1);
  Rng rng2(37);
  for (auto* im : {&adj.rgb, &adj.alpha, &adj.depth, &adj.normal_map,
                   &adj.material_map, &adj.static_mask}) {
    for (auto& v : im->data) v = rng2.normal();
  }
  const auto g = rasterize_backward(splats, adj, cache);

  auto loss = [&](const std::vector<ShadedSplat<double>>& ss) {
    const auto out = reference_render(ss, 16, 16, opts);
    double acc = 0;
    for (std::size_t i = 0; i < out.rgb.data.size(); ++i) acc += out.rgb.data[i] * adj.rgb.data[i];
    for (std::size_t i = 0; i < out.alpha.data.size(); ++i) acc += out.alpha.data[i] * adj.alpha.data[i];
    for (std::size_t i = 0; i < out.depth.data.size(); ++i) acc += out.depth.data[i] * adj.depth.data[i];
    for (std::size_t i = 0; i < out.normal_map.data.size(); ++i) acc += out.normal_map.data[i] * adj.normal_map.data[i];
    for (std::size_t i = 0; i < out.material_map.data.size(); ++i) acc += out.material_map.data[i] * adj.material_map.data[i];
    for (std::size_t i = 0; i < out.static_mask.data.size(); ++i) acc += out.static_mask.data[i] * adj.static_mask.data[i];
    return acc;
  };

  const double h = 1e-6;
  auto check_param = [&](double* p, double analytic) {
    const double orig = *p;
    *p = orig + h;
    const double fp = loss(splats);
    *p = orig - h;
    const double fm = loss(splats);
    *p = orig;
    const double fd = (fp - fm) / (2 * h);
    const double err = std::abs(analytic - fd) /
                       std::max({std::abs(analytic), std::abs(fd), 1e-5});
    CHECK(err < 1e-4);
  };

  for (std::size_t i = 0; i < splats.size(); ++i) {
    check_param(&splats[i].mean.x, g.mean[i].x);
    check_param(&splats[i].mean.y, g.mean[i].y);
    check_param(&splats[i].cov2d.a, g.cov2d[i].a);
    check_param(&splats[i].cov2d.b, g.cov2d[i].b);
    check_param(&splats[i].cov2d.c, g.cov2d[i].c);
    check_param(&splats[i].depth, g.depth[i]);
    check_param(&splats[i].eff_opacity, g.eff_opacity[i]);
    check_param(&splats[i].color.x, g.color[i].x);
    if (splats[i].is_static) {
      check_param(&splats[i].normal.y, g.normal[i].y);
      check_param(&splats[i].material.z, g.material[i].z);
    }
  }
}
