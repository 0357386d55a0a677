#include "admgs/synth.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "admgs/errors.hpp"
#include "admgs/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace admgs {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kShadowEps = 1e-6;

std::optional<double> intersect_plane(const SurfacePrimitive& p,
                                      const Vec3<double>& o,
                                      const Vec3<double>& d) {
  if (std::abs(d.z) < 1e-12) return std::nullopt;
  const double t = (p.center.z - o.z) / d.z;
  if (t <= 1e-9) return std::nullopt;
  const Vec3<double> hit = o + d * t;
  if (std::abs(hit.x - p.center.x) > p.half_extent.x ||
      std::abs(hit.y - p.center.y) > p.half_extent.y) {
    return std::nullopt;
  }
  return t;
}

std::optional<double> intersect_box(const SurfacePrimitive& p,
                                    const Vec3<double>& o,
                                    const Vec3<double>& d) {
  double t0 = 1e-9, t1 = 1e30;
  for (int k = 0; k < 3; ++k) {
    const double lo = p.center[k] - p.half_extent[k];
    const double hi = p.center[k] + p.half_extent[k];
    if (std::abs(d[k]) < 1e-12) {
      if (o[k] < lo || o[k] > hi) return std::nullopt;
      continue;
    }
    double ta = (lo - o[k]) / d[k];
    double tb = (hi - o[k]) / d[k];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  return t0 > 1e-9 ? std::optional<double>(t0) : std::nullopt;
}

std::optional<double> intersect_sphere(const SurfacePrimitive& p,
                                       const Vec3<double>& o,
                                       const Vec3<double>& d) {
  const Vec3<double> oc = o - p.center;
  const double b = oc.dot(d);
  const double c = oc.squared_norm() - p.radius * p.radius;
  const double disc = b * b - c;
  if (disc < 0) return std::nullopt;
  const double s = std::sqrt(disc);
  double t = -b - s;
  if (t <= 1e-9) t = -b + s;
  if (t <= 1e-9) return std::nullopt;
  return t;
}

Vec3<double> primitive_normal(const SurfacePrimitive& p,
                              const Vec3<double>& hit) {
  switch (p.kind) {
    case SurfaceKind::Plane:
      return {0, 0, 1};
    case SurfaceKind::Sphere:
      return (hit - p.center).normalized();
    case SurfaceKind::Box: {
      // Face whose slab the hit point touches.
      const Vec3<double> local = hit - p.center;
      double best = -1e30;
      Vec3<double> n{1, 0, 0};
      for (int k = 0; k < 3; ++k) {
        const double v = std::abs(local[k]) / p.half_extent[k];
        if (v > best) {
          best = v;
          n = {0, 0, 0};
          n[k] = local[k] >= 0 ? 1.0 : -1.0;
        }
      }
      return n;
    }
  }
  return {0, 0, 1};
}

}  // namespace

void SyntheticSceneSpec::validate() const {
  if (lighting.empty()) {
    throw InvalidArgument("scene spec: need at least one traversal");
  }
  if (trajectory.size() != lighting.size()) {
    throw InvalidArgument("scene spec: trajectory count != traversal count");
  }
  if (primitives.empty()) {
    throw InvalidArgument("scene spec: need at least one surface primitive");
  }
  if (width <= 0 || height <= 0 || focal <= 0) {
    throw InvalidArgument("scene spec: invalid image geometry");
  }
  // Multi-traversal suites require meaningfully different sun angles.
  for (std::size_t a = 0; a < lighting.size(); ++a) {
    for (std::size_t b = a + 1; b < lighting.size(); ++b) {
      const double c = lighting[a].sun_direction.normalized().dot(
          lighting[b].sun_direction.normalized());
      const double angle = std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / kPi;
      if (angle < 10.0) {
        throw InvalidArgument(
            "scene spec: sun directions of traversals " + std::to_string(a) +
            " and " + std::to_string(b) + " differ by less than 10 degrees");
      }
    }
  }
  for (const auto& frames : trajectory) {
    if (frames.empty()) {
      throw InvalidArgument("scene spec: traversal without frames");
    }
    bool has_test = false;
    for (const auto& f : frames) has_test |= f.test;
    if (!has_test) {
      throw InvalidArgument("scene spec: every traversal needs a test frame");
    }
  }
}

std::optional<RayHit> raycast(const SyntheticSceneSpec& spec, int traversal,
                              const Vec3<double>& origin,
                              const Vec3<double>& dir) {
  RayHit best;
  best.t = 1e30;
  for (std::size_t i = 0; i < spec.primitives.size(); ++i) {
    const auto& p = spec.primitives[i];
    if (!p.present(traversal)) continue;
    std::optional<double> t;
    switch (p.kind) {
      case SurfaceKind::Plane: t = intersect_plane(p, origin, dir); break;
      case SurfaceKind::Box: t = intersect_box(p, origin, dir); break;
      case SurfaceKind::Sphere: t = intersect_sphere(p, origin, dir); break;
    }
    if (t && *t < best.t) {
      best.t = *t;
      best.primitive = int(i);
    }
  }
  if (best.primitive < 0) return std::nullopt;
  best.point = origin + dir * best.t;
  best.normal = primitive_normal(spec.primitives[std::size_t(best.primitive)],
                                 best.point);
  if (best.normal.dot(dir) > 0) best.normal = -best.normal;
  return best;
}

bool sun_visible(const SyntheticSceneSpec& spec, int traversal,
                 const Vec3<double>& point, const Vec3<double>& sun_dir) {
  const Vec3<double> o = point + sun_dir * 1e-4;
  for (const auto& p : spec.primitives) {
    if (!p.present(traversal)) continue;
    std::optional<double> t;
    switch (p.kind) {
      case SurfaceKind::Plane: t = intersect_plane(p, o, sun_dir); break;
      case SurfaceKind::Box: t = intersect_box(p, o, sun_dir); break;
      case SurfaceKind::Sphere: t = intersect_sphere(p, o, sun_dir); break;
    }
    if (t && *t > kShadowEps) return false;
  }
  return true;
}

ShadeResult analytic_shade(const Vec3<double>& point, const Vec3<double>& normal,
                           const Vec3<double>& albedo, double spec_strength,
                           double shininess, const TraversalLighting& lighting,
                           const Vec3<double>& view_dir, bool sun_visible_flag) {
  (void)point;
  const Vec3<double> l = lighting.sun_direction.normalized();
  const double vis = sun_visible_flag ? 1.0 : 0.0;
  const double ndotl = std::max(0.0, normal.dot(l));
  Vec3<double> light = lighting.ambient + lighting.sun_intensity * (ndotl * vis);
  if (spec_strength > 0) {
    const Vec3<double> h = (l + view_dir).normalized();
    const double ndoth = std::max(0.0, normal.dot(h));
    const double lobe = spec_strength * std::pow(ndoth, shininess) * vis;
    // Fold the specular lobe into the light factor so that
    // color = albedo ⊙ light holds exactly on glossy pixels too.
    light += Vec3<double>{lobe * lighting.sun_intensity.x /
                              std::max(albedo.x, kSpecularAlbedoFloor),
                          lobe * lighting.sun_intensity.y /
                              std::max(albedo.y, kSpecularAlbedoFloor),
                          lobe * lighting.sun_intensity.z /
                              std::max(albedo.z, kSpecularAlbedoFloor)};
  }
  return {albedo.cwise(light), light};
}

Vec3<double> sky_color(const TraversalLighting& lighting,
                       const Vec3<double>& dir) {
  const Vec3<double> sun = lighting.sun_direction.normalized();
  const double up = std::clamp(dir.z, 0.0, 1.0);
  const double halo = std::pow(std::max(0.0, dir.dot(sun)), 8.0);
  Vec3<double> base = lighting.ambient * (1.1 - 0.35 * up) +
                      lighting.sun_intensity * (0.10 + 0.06 * up);
  base += lighting.sun_intensity * (0.25 * halo);
  return {clamp01(base.x), clamp01(base.y), clamp01(base.z)};
}

namespace {

double primitive_area(const SurfacePrimitive& p) {
  switch (p.kind) {
    case SurfaceKind::Plane:
      return 4.0 * p.half_extent.x * p.half_extent.y;
    case SurfaceKind::Sphere:
      return 4.0 * kPi * p.radius * p.radius;
    case SurfaceKind::Box: {
      const auto& h = p.half_extent;
      double area = 8.0 * (h.x * h.y + h.y * h.z + h.z * h.x);
      if (std::abs(p.center.z - h.z) < 1e-6) area -= 4.0 * h.x * h.y;  // buried bottom
      return area;
    }
  }
  return 0;
}

void sample_primitive(const SurfacePrimitive& p, Rng& rng,
                      Vec3<double>* pos, Vec3<double>* normal) {
  switch (p.kind) {
    case SurfaceKind::Plane: {
      *pos = {p.center.x + rng.uniform(-p.half_extent.x, p.half_extent.x),
              p.center.y + rng.uniform(-p.half_extent.y, p.half_extent.y),
              p.center.z};
      *normal = {0, 0, 1};
      return;
    }
    case SurfaceKind::Sphere: {
      Vec3<double> d{rng.normal(), rng.normal(), rng.normal()};
      while (d.norm() < 1e-9) d = {rng.normal(), rng.normal(), rng.normal()};
      d = d.normalized();
      *pos = p.center + d * p.radius;
      *normal = d;
      return;
    }
    case SurfaceKind::Box: {
      const auto& h = p.half_extent;
      const bool buried = std::abs(p.center.z - h.z) < 1e-6;
      const double ax = 4.0 * h.y * h.z, ay = 4.0 * h.x * h.z,
                   az = 4.0 * h.x * h.y;
      // Face weights: ±x, ±y, +z (and −z unless buried).
      double w[6] = {ax / 2, ax / 2, ay / 2, ay / 2, az / 2,
                     buried ? 0.0 : az / 2};
      double total = 0;
      for (double v : w) total += v;
      double r = rng.uniform(0.0, total);
      int face = 0;
      for (; face < 5; ++face) {
        if (r < w[face]) break;
        r -= w[face];
      }
      const double u = rng.uniform(-1.0, 1.0), v = rng.uniform(-1.0, 1.0);
      Vec3<double> n{0, 0, 0}, q = p.center;
      switch (face) {
        case 0: n.x = 1; q.x += h.x; q.y += u * h.y; q.z += v * h.z; break;
        case 1: n.x = -1; q.x -= h.x; q.y += u * h.y; q.z += v * h.z; break;
        case 2: n.y = 1; q.y += h.y; q.x += u * h.x; q.z += v * h.z; break;
        case 3: n.y = -1; q.y -= h.y; q.x += u * h.x; q.z += v * h.z; break;
        case 4: n.z = 1; q.z += h.z; q.x += u * h.x; q.y += v * h.y; break;
        case 5: n.z = -1; q.z -= h.z; q.x += u * h.x; q.y += v * h.y; break;
      }
      *pos = q;
      *normal = n;
      return;
    }
  }
}

Camera<double> frame_camera(const SyntheticSceneSpec& spec, const FrameSpec& f) {
  return Camera<double>::look_at(f.eye, f.target, {0, 0, 1}, spec.focal,
                                 spec.focal, spec.width, spec.height);
}

}  // namespace

DatasetManifest generate_dataset(const SyntheticSceneSpec& spec,
                                 const std::string& out_dir) {
  spec.validate();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  for (const char* sub : {"rgb", "material", "normal", "depth", "light", "mask"}) {
    fs::create_directories(fs::path(out_dir) / sub, ec);
  }
  if (ec) throw IoError("generate_dataset: cannot create " + out_dir);

  DatasetManifest man;
  man.name = spec.name;
  man.seed = spec.seed;
  man.width = spec.width;
  man.height = spec.height;
  man.fx = man.fy = spec.focal;
  man.cx = spec.width / 2.0;
  man.cy = spec.height / 2.0;
  man.lighting = spec.lighting;
  man.traversals.resize(spec.lighting.size());

  double radius = 0;
  for (const auto& p : spec.primitives) {
    const double r = p.center.norm() +
                     (p.kind == SurfaceKind::Sphere
                          ? p.radius
                          : p.half_extent.norm());
    radius = std::max(radius, r);
  }
  man.scene_radius = radius;

  for (std::size_t m = 0; m < spec.lighting.size(); ++m) {
    const auto& lighting = spec.lighting[m];
    const Vec3<double> sun = lighting.sun_direction.normalized();
    for (std::size_t fi = 0; fi < spec.trajectory[m].size(); ++fi) {
      const FrameSpec& f = spec.trajectory[m][fi];
      const Camera<double> cam = frame_camera(spec, f);
      const Vec3<double> origin = cam.center();
      const Mat3<double>& rot = cam.world_to_camera.rotation;

      Image<float> rgb(spec.width, spec.height, 3);
      Image<float> material(spec.width, spec.height, 3);
      Image<float> normal(spec.width, spec.height, 3);
      Image<float> depth(spec.width, spec.height, 1);
      Image<float> light(spec.width, spec.height, 3);
      Image<float> mask(spec.width, spec.height, 1);

      for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
          const Vec3<double> dir_cam{(x + 0.5 - man.cx) / man.fx,
                                     (y + 0.5 - man.cy) / man.fy, 1.0};
          const Vec3<double> dir = rot.transposed_times(dir_cam).normalized();
          const auto hit = raycast(spec, int(m), origin, dir);
          Vec3<double> color, lval, mval, nval;
          double dval = 0, maskval = 0;
          if (hit) {
            const auto& prim = spec.primitives[std::size_t(hit->primitive)];
            const bool vis = sun_visible(spec, int(m), hit->point, sun);
            const Vec3<double> view = (origin - hit->point).normalized();
            const auto shade = analytic_shade(hit->point, hit->normal,
                                              prim.albedo, prim.spec_strength,
                                              prim.shininess, lighting, view,
                                              vis);
            color = shade.color;
            if (color.max_component() > 1.0 + 1e-9) {
              throw InvalidArgument(
                  "generate_dataset: shaded color exceeds 1; lower the "
                  "albedo/intensity budget so rgb = material * light "
                  "survives 8-bit storage");
            }
            lval = shade.light;
            mval = prim.albedo;
            nval = hit->normal;
            dval = cam.world_to_camera.apply(hit->point).z;
            maskval = prim.transient() ? 0.0 : 1.0;
          } else {
            lval = sky_color(lighting, dir);
            color = lval;
            mval = {1, 1, 1};
            nval = {0, 0, 0};
          }
          for (int c = 0; c < 3; ++c) {
            rgb.at(y, x, c) = float(clamp01(color[c]));
            material.at(y, x, c) = float(mval[c]);
            normal.at(y, x, c) = float(nval[c]);
            light.at(y, x, c) = float(lval[c]);
          }
          depth.at(y, x) = float(dval);
          mask.at(y, x) = float(maskval);
        }
      }

      char stem[64];
      std::snprintf(stem, sizeof(stem), "t%zu_f%03zu", m, fi);
      FrameRecord rec;
      rec.traversal = int(m);
      rec.camera_id = 0;
      rec.timestamp = f.timestamp;
      rec.split = f.test ? "test" : "train";
      rec.camera = cam;
      rec.rgb = std::string("rgb/") + stem + ".png";
      rec.gt_material = std::string("material/") + stem + ".pfm";
      rec.gt_normal = std::string("normal/") + stem + ".pfm";
      rec.gt_depth = std::string("depth/") + stem + ".pfm";
      rec.gt_light = std::string("light/") + stem + ".pfm";
      rec.static_mask = std::string("mask/") + stem + ".pfm";
      write_png((fs::path(out_dir) / rec.rgb).string(), rgb);
      write_pfm((fs::path(out_dir) / rec.gt_material).string(), material);
      write_pfm((fs::path(out_dir) / rec.gt_normal).string(), normal);
      write_pfm((fs::path(out_dir) / rec.gt_depth).string(), depth);
      write_pfm((fs::path(out_dir) / rec.gt_light).string(), light);
      write_pfm((fs::path(out_dir) / rec.static_mask).string(), mask);
      man.traversals[m].push_back(std::move(rec));
    }
  }

  // Initialization point cloud: area-weighted surface samples over every
  // primitive (including transients, which live in the static node and
  // are gated per traversal).
  Rng rng(spec.seed ^ 0x1e57ULL);
  PointCloud cloud;
  cloud.positions.reserve(std::size_t(spec.init_point_count));
  std::vector<double> cum;
  double total_area = 0;
  for (const auto& p : spec.primitives) {
    total_area += primitive_area(p);
    cum.push_back(total_area);
  }
  for (int i = 0; i < spec.init_point_count; ++i) {
    const double r = rng.uniform(0.0, total_area);
    std::size_t pi = std::size_t(std::lower_bound(cum.begin(), cum.end(), r) -
                                 cum.begin());
    pi = std::min(pi, spec.primitives.size() - 1);
    Vec3<double> pos, n;
    sample_primitive(spec.primitives[pi], rng, &pos, &n);
    cloud.positions.push_back(pos);
    cloud.normals.push_back(n);
  }
  man.init_points = "init_points.ply";
  write_ply((fs::path(out_dir) / man.init_points).string(), cloud);

  // Manifest.
  json j;
  j["name"] = man.name;
  j["seed"] = man.seed;
  j["width"] = man.width;
  j["height"] = man.height;
  j["camera"] = {{"fx", man.fx}, {"fy", man.fy}, {"cx", man.cx}, {"cy", man.cy}};
  j["scene_radius"] = man.scene_radius;
  j["init_points"] = man.init_points;
  j["lighting"] = json::array();
  for (const auto& l : man.lighting) {
    j["lighting"].push_back(
        {{"sun_direction", {l.sun_direction.x, l.sun_direction.y, l.sun_direction.z}},
         {"sun_intensity", {l.sun_intensity.x, l.sun_intensity.y, l.sun_intensity.z}},
         {"ambient", {l.ambient.x, l.ambient.y, l.ambient.z}}});
  }
  j["traversals"] = json::array();
  for (std::size_t m = 0; m < man.traversals.size(); ++m) {
    json jt;
    jt["id"] = m;
    jt["frames"] = json::array();
    for (const auto& r : man.traversals[m]) {
      json jf;
      jf["camera_id"] = r.camera_id;
      jf["timestamp"] = r.timestamp;
      jf["split"] = r.split;
      const auto& w = r.camera.world_to_camera;
      jf["world_to_camera"] = {
          {"rotation",
           {w.rotation.m[0][0], w.rotation.m[0][1], w.rotation.m[0][2],
            w.rotation.m[1][0], w.rotation.m[1][1], w.rotation.m[1][2],
            w.rotation.m[2][0], w.rotation.m[2][1], w.rotation.m[2][2]}},
          {"translation", {w.translation.x, w.translation.y, w.translation.z}}};
      jf["rgb"] = r.rgb;
      jf["gt_material"] = r.gt_material;
      jf["gt_normal"] = r.gt_normal;
      jf["gt_depth"] = r.gt_depth;
      jf["gt_light"] = r.gt_light;
      jf["static_mask"] = r.static_mask;
      jt["frames"].push_back(std::move(jf));
    }
    j["traversals"].push_back(std::move(jt));
  }
  write_text_file((fs::path(out_dir) / "manifest.json").string(), j.dump(2) + "\n");
  man.validate(out_dir);
  return man;
}

void DatasetManifest::validate(const std::string& root_dir) const {
  if (traversals.empty()) throw IoError("manifest: no traversals");
  for (const auto& frames : traversals) {
    bool has_test = false;
    for (const auto& r : frames) {
      if (r.split != "train" && r.split != "test") {
        throw IoError("manifest: frame with unknown split '" + r.split + "'");
      }
      has_test |= r.split == "test";
      for (const std::string* p :
           {&r.rgb, &r.gt_material, &r.gt_normal, &r.gt_depth, &r.gt_light,
            &r.static_mask}) {
        if (!fs::exists(fs::path(root_dir) / *p)) {
          throw IoError("manifest: missing file " + *p);
        }
      }
    }
    if (!has_test) throw IoError("manifest: traversal without a test frame");
  }
  if (!fs::exists(fs::path(root_dir) / init_points)) {
    throw IoError("manifest: missing init point cloud");
  }
}

DatasetManifest load_manifest(const std::string& dataset_dir) {
  const json j = json::parse(read_text_file(
      (fs::path(dataset_dir) / "manifest.json").string()));
  DatasetManifest man;
  man.name = j.at("name").get<std::string>();
  man.seed = j.at("seed").get<std::uint64_t>();
  man.width = j.at("width").get<int>();
  man.height = j.at("height").get<int>();
  man.fx = j.at("camera").at("fx").get<double>();
  man.fy = j.at("camera").at("fy").get<double>();
  man.cx = j.at("camera").at("cx").get<double>();
  man.cy = j.at("camera").at("cy").get<double>();
  man.scene_radius = j.at("scene_radius").get<double>();
  man.init_points = j.at("init_points").get<std::string>();
  for (const auto& jl : j.at("lighting")) {
    TraversalLighting l;
    auto v3 = [](const json& a) {
      return Vec3<double>{a[0].get<double>(), a[1].get<double>(),
                          a[2].get<double>()};
    };
    l.sun_direction = v3(jl.at("sun_direction"));
    l.sun_intensity = v3(jl.at("sun_intensity"));
    l.ambient = v3(jl.at("ambient"));
    man.lighting.push_back(l);
  }
  for (const auto& jt : j.at("traversals")) {
    std::vector<FrameRecord> frames;
    for (const auto& jf : jt.at("frames")) {
      FrameRecord r;
      r.traversal = jt.at("id").get<int>();
      r.camera_id = jf.at("camera_id").get<int>();
      r.timestamp = jf.at("timestamp").get<double>();
      r.split = jf.at("split").get<std::string>();
      r.camera.fx = man.fx;
      r.camera.fy = man.fy;
      r.camera.cx = man.cx;
      r.camera.cy = man.cy;
      r.camera.width = man.width;
      r.camera.height = man.height;
      const auto& jw = jf.at("world_to_camera");
      for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k)
          r.camera.world_to_camera.rotation.m[i][k] =
              jw.at("rotation")[std::size_t(i * 3 + k)].get<double>();
      r.camera.world_to_camera.translation = {
          jw.at("translation")[0].get<double>(),
          jw.at("translation")[1].get<double>(),
          jw.at("translation")[2].get<double>()};
      r.camera.validate();
      r.rgb = jf.at("rgb").get<std::string>();
      r.gt_material = jf.at("gt_material").get<std::string>();
      r.gt_normal = jf.at("gt_normal").get<std::string>();
      r.gt_depth = jf.at("gt_depth").get<std::string>();
      r.gt_light = jf.at("gt_light").get<std::string>();
      r.static_mask = jf.at("static_mask").get<std::string>();
      frames.push_back(std::move(r));
    }
    man.traversals.push_back(std::move(frames));
  }
  man.validate(dataset_dir);
  return man;
}

LoadedFrame load_frame(const std::string& dataset_dir, const FrameRecord& rec) {
  LoadedFrame f;
  f.record = rec;
  f.rgb = read_png((fs::path(dataset_dir) / rec.rgb).string());
  f.gt_material = read_pfm((fs::path(dataset_dir) / rec.gt_material).string());
  f.gt_normal = read_pfm((fs::path(dataset_dir) / rec.gt_normal).string());
  f.gt_depth = read_pfm((fs::path(dataset_dir) / rec.gt_depth).string());
  f.gt_light = read_pfm((fs::path(dataset_dir) / rec.gt_light).string());
  f.static_mask = read_pfm((fs::path(dataset_dir) / rec.static_mask).string());
  return f;
}

// ---- Spec serialization & hashing.

std::string spec_to_json(const SyntheticSceneSpec& spec) {
  json j;
  j["name"] = spec.name;
  j["seed"] = spec.seed;
  j["width"] = spec.width;
  j["height"] = spec.height;
  j["focal"] = spec.focal;
  j["init_point_count"] = spec.init_point_count;
  j["primitives"] = json::array();
  for (const auto& p : spec.primitives) {
    json jp;
    jp["kind"] = p.kind == SurfaceKind::Plane
                     ? "plane"
                     : (p.kind == SurfaceKind::Box ? "box" : "sphere");
    jp["center"] = {p.center.x, p.center.y, p.center.z};
    jp["half_extent"] = {p.half_extent.x, p.half_extent.y, p.half_extent.z};
    jp["radius"] = p.radius;
    jp["albedo"] = {p.albedo.x, p.albedo.y, p.albedo.z};
    jp["spec_strength"] = p.spec_strength;
    jp["shininess"] = p.shininess;
    jp["present_in"] = p.present_in;
    j["primitives"].push_back(std::move(jp));
  }
  j["lighting"] = json::array();
  for (const auto& l : spec.lighting) {
    j["lighting"].push_back(
        {{"sun_direction", {l.sun_direction.x, l.sun_direction.y, l.sun_direction.z}},
         {"sun_intensity", {l.sun_intensity.x, l.sun_intensity.y, l.sun_intensity.z}},
         {"ambient", {l.ambient.x, l.ambient.y, l.ambient.z}}});
  }
  j["trajectory"] = json::array();
  for (const auto& frames : spec.trajectory) {
    json jt = json::array();
    for (const auto& f : frames) {
      jt.push_back({{"eye", {f.eye.x, f.eye.y, f.eye.z}},
                    {"target", {f.target.x, f.target.y, f.target.z}},
                    {"timestamp", f.timestamp},
                    {"test", f.test}});
    }
    j["trajectory"].push_back(std::move(jt));
  }
  return j.dump(2) + "\n";
}

SyntheticSceneSpec spec_from_json_text(const std::string& text) {
  const json j = json::parse(text);
  SyntheticSceneSpec spec;
  auto v3 = [](const json& a) {
    return Vec3<double>{a[0].get<double>(), a[1].get<double>(),
                        a[2].get<double>()};
  };
  spec.name = j.at("name").get<std::string>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  spec.width = j.at("width").get<int>();
  spec.height = j.at("height").get<int>();
  spec.focal = j.at("focal").get<double>();
  spec.init_point_count = j.at("init_point_count").get<int>();
  for (const auto& jp : j.at("primitives")) {
    SurfacePrimitive p;
    const std::string kind = jp.at("kind").get<std::string>();
    p.kind = kind == "plane" ? SurfaceKind::Plane
                             : (kind == "box" ? SurfaceKind::Box
                                              : SurfaceKind::Sphere);
    p.center = v3(jp.at("center"));
    p.half_extent = v3(jp.at("half_extent"));
    p.radius = jp.at("radius").get<double>();
    p.albedo = v3(jp.at("albedo"));
    p.spec_strength = jp.at("spec_strength").get<double>();
    p.shininess = jp.at("shininess").get<double>();
    p.present_in = jp.at("present_in").get<std::vector<int>>();
    spec.primitives.push_back(std::move(p));
  }
  for (const auto& jl : j.at("lighting")) {
    TraversalLighting l;
    l.sun_direction = v3(jl.at("sun_direction"));
    l.sun_intensity = v3(jl.at("sun_intensity"));
    l.ambient = v3(jl.at("ambient"));
    spec.lighting.push_back(l);
  }
  for (const auto& jt : j.at("trajectory")) {
    std::vector<FrameSpec> frames;
    for (const auto& jf : jt) {
      FrameSpec f;
      f.eye = v3(jf.at("eye"));
      f.target = v3(jf.at("target"));
      f.timestamp = jf.at("timestamp").get<double>();
      f.test = jf.at("test").get<bool>();
      frames.push_back(f);
    }
    spec.trajectory.push_back(std::move(frames));
  }
  return spec;
}

std::uint64_t spec_hash(const SyntheticSceneSpec& spec) {
  const std::string s = spec_to_json(spec);
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace admgs
