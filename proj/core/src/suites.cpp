#include <cmath>

#include "admgs/errors.hpp"
#include "admgs/synth.hpp"

namespace admgs {

namespace {

constexpr double kPi = 3.14159265358979323846;

Vec3<double> sun_dir(double azimuth_deg, double elevation_deg) {
  const double az = azimuth_deg * kPi / 180.0;
  const double el = elevation_deg * kPi / 180.0;
  return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
          std::sin(el)};
}

// Orbit arc around the scene center; every `test_stride`-th frame is held
// out (starting at `test_offset`).
std::vector<FrameSpec> orbit(double radius, double height, double az0_deg,
                             double az1_deg, int count,
                             const Vec3<double>& target, int test_stride,
                             int test_offset) {
  std::vector<FrameSpec> frames;
  for (int i = 0; i < count; ++i) {
    const double t = count > 1 ? double(i) / (count - 1) : 0.0;
    const double az = (az0_deg + (az1_deg - az0_deg) * t) * kPi / 180.0;
    FrameSpec f;
    f.eye = {radius * std::cos(az), radius * std::sin(az), height};
    f.target = target;
    f.timestamp = 0.5 * i;
    f.test = (i % test_stride) == test_offset;
    frames.push_back(f);
  }
  return frames;
}

SurfacePrimitive ground(double half, const Vec3<double>& albedo) {
  SurfacePrimitive p;
  p.kind = SurfaceKind::Plane;
  p.center = {0, 0, 0};
  p.half_extent = {half, half, 0};
  p.albedo = albedo;
  return p;
}

SurfacePrimitive box(const Vec3<double>& center_xy_halfz,
                     const Vec3<double>& half, const Vec3<double>& albedo) {
  SurfacePrimitive p;
  p.kind = SurfaceKind::Box;
  p.center = center_xy_halfz;
  p.half_extent = half;
  p.albedo = albedo;
  return p;
}

SurfacePrimitive sphere(const Vec3<double>& center, double radius,
                        const Vec3<double>& albedo) {
  SurfacePrimitive p;
  p.kind = SurfaceKind::Sphere;
  p.center = center;
  p.radius = radius;
  p.albedo = albedo;
  return p;
}

SyntheticSceneSpec make_sanity() {
  SyntheticSceneSpec s;
  s.name = "sanity-1splat";
  s.seed = 11;
  s.width = 40;
  s.height = 32;
  s.focal = 34;
  s.init_point_count = 220;
  s.primitives.push_back(ground(1.6, {0.55, 0.45, 0.35}));
  TraversalLighting l;
  l.sun_direction = sun_dir(60, 55);
  l.sun_intensity = {0.8, 0.78, 0.7};
  l.ambient = {0.3, 0.3, 0.34};
  s.lighting.push_back(l);
  s.trajectory.push_back(orbit(3.6, 2.4, -50, 50, 6, {0, 0, 0}, 4, 2));
  return s;
}

SyntheticSceneSpec make_decomp() {
  SyntheticSceneSpec s;
  s.name = "decomp-3trav";
  s.seed = 21;
  s.width = 96;
  s.height = 64;
  s.focal = 70;
  s.init_point_count = 4000;
  s.primitives.push_back(ground(5.0, {0.46, 0.42, 0.36}));
  s.primitives.push_back(box({1.25, 0.55, 0.8}, {0.45, 0.45, 0.8},
                             {0.66, 0.20, 0.16}));
  s.primitives.push_back(box({-1.35, -0.95, 0.35}, {0.7, 0.5, 0.35},
                             {0.18, 0.34, 0.62}));
  s.primitives.push_back(sphere({-0.9, 1.25, 0.55}, 0.55, {0.70, 0.60, 0.22}));

  TraversalLighting t0, t1, t2;
  t0.sun_direction = sun_dir(55, 38);
  t0.sun_intensity = {0.95, 0.88, 0.76};
  t0.ambient = {0.30, 0.31, 0.36};
  t1.sun_direction = sun_dir(180, 55);
  t1.sun_intensity = {0.84, 0.85, 0.88};
  t1.ambient = {0.36, 0.36, 0.38};
  t2.sun_direction = sun_dir(300, 30);
  t2.sun_intensity = {0.92, 0.78, 0.60};
  t2.ambient = {0.28, 0.28, 0.34};
  s.lighting = {t0, t1, t2};

  const Vec3<double> target{0, 0, 0.4};
  s.trajectory.push_back(orbit(6.2, 3.2, -60, 50, 12, target, 4, 2));
  s.trajectory.push_back(orbit(6.0, 3.5, -55, 58, 12, target, 4, 2));
  s.trajectory.push_back(orbit(6.4, 2.9, -48, 62, 12, target, 4, 2));
  return s;
}

SyntheticSceneSpec make_transient() {
  SyntheticSceneSpec s;
  s.name = "transient-2trav";
  s.seed = 31;
  s.width = 64;
  s.height = 44;
  s.focal = 46;
  s.init_point_count = 2600;
  s.primitives.push_back(ground(4.2, {0.42, 0.44, 0.40}));
  s.primitives.push_back(box({-1.05, 0.65, 0.5}, {0.5, 0.5, 0.5},
                             {0.20, 0.35, 0.60}));
  // Present only in traversal 0; its splats live in the static node and
  // the gate must learn to suppress them in traversal 1.
  SurfacePrimitive transient = box({0.95, -0.55, 0.6}, {0.45, 0.45, 0.6},
                                   {0.70, 0.30, 0.15});
  transient.present_in = {0};
  s.primitives.push_back(transient);

  TraversalLighting t0, t1;
  t0.sun_direction = sun_dir(70, 45);
  t0.sun_intensity = {0.88, 0.84, 0.74};
  t0.ambient = {0.30, 0.31, 0.34};
  t1.sun_direction = sun_dir(250, 50);
  t1.sun_intensity = {0.80, 0.82, 0.86};
  t1.ambient = {0.34, 0.34, 0.37};
  s.lighting = {t0, t1};

  const Vec3<double> target{0, 0, 0.35};
  s.trajectory.push_back(orbit(5.4, 2.8, -55, 55, 10, target, 4, 3));
  s.trajectory.push_back(orbit(5.6, 3.0, -50, 60, 10, target, 4, 3));
  return s;
}

SyntheticSceneSpec make_specular() {
  SyntheticSceneSpec s;
  s.name = "specular-1trav";
  s.seed = 41;
  s.width = 56;
  s.height = 40;
  s.focal = 42;
  s.init_point_count = 1800;
  s.primitives.push_back(ground(3.4, {0.35, 0.36, 0.38}));
  SurfacePrimitive glossy = sphere({0, 0, 0.7}, 0.7, {0.50, 0.50, 0.52});
  glossy.spec_strength = 0.25;
  glossy.shininess = 48;
  s.primitives.push_back(glossy);

  TraversalLighting l;
  l.sun_direction = sun_dir(120, 50);
  l.sun_intensity = {0.95, 0.93, 0.90};
  l.ambient = {0.26, 0.26, 0.28};
  s.lighting.push_back(l);
  s.trajectory.push_back(orbit(4.6, 2.2, 40, 200, 10, {0, 0, 0.5}, 4, 3));
  return s;
}

}  // namespace

std::vector<SyntheticSceneSpec> standard_suites() {
  return {make_sanity(), make_decomp(), make_transient(), make_specular()};
}

std::vector<std::string> suite_names() {
  std::vector<std::string> names;
  for (const auto& s : standard_suites()) names.push_back(s.name);
  return names;
}

SyntheticSceneSpec suite_by_name(const std::string& name) {
  for (auto& s : standard_suites()) {
    if (s.name == name) return s;
  }
  std::string known;
  for (const auto& n : suite_names()) known += " " + n;
  throw InvalidArgument("unknown suite '" + name + "'; available:" + known);
}

}  // namespace admgs
