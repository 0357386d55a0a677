#pragma once

#include <optional>
#include <string>
#include <vector>

#include "admgs/camera.hpp"
#include "admgs/image.hpp"
#include "admgs/io.hpp"
#include "admgs/vec.hpp"

namespace admgs {

// ---- Synthetic multi-traversal scenes with a known ground-truth
// factorization: every stored pixel satisfies rgb = material ⊙ light.

enum class SurfaceKind { Plane, Box, Sphere };

struct SurfacePrimitive {
  SurfaceKind kind = SurfaceKind::Plane;
  // Plane: z = 0 patch with half extents (x, y) = half_extent.x/y.
  // Box: axis-aligned, center/half_extent.
  // Sphere: center/radius.
  Vec3<double> center{};
  Vec3<double> half_extent{1, 1, 1};
  double radius = 1;
  Vec3<double> albedo{0.5, 0.5, 0.5};
  double spec_strength = 0;
  double shininess = 32;
  // Traversal ids this primitive exists in; empty = all (static).
  std::vector<int> present_in;

  bool present(int traversal) const {
    if (present_in.empty()) return true;
    for (int t : present_in) {
      if (t == traversal) return true;
    }
    return false;
  }
  bool transient() const { return !present_in.empty(); }
};

struct TraversalLighting {
  Vec3<double> sun_direction{0, 0, 1};  // unit, points toward the sun
  Vec3<double> sun_intensity{1, 1, 1};
  Vec3<double> ambient{0.2, 0.2, 0.2};
};

struct FrameSpec {
  Vec3<double> eye;
  Vec3<double> target;
  double timestamp = 0;
  bool test = false;  // held-out split
};

struct SyntheticSceneSpec {
  std::string name;
  std::uint64_t seed = 1;
  int width = 64, height = 48;
  double focal = 60;  // pixels
  std::vector<SurfacePrimitive> primitives;
  std::vector<TraversalLighting> lighting;        // one per traversal
  std::vector<std::vector<FrameSpec>> trajectory;  // per traversal
  int init_point_count = 2000;

  void validate() const;
};

// Closest-hit result of a primary ray.
struct RayHit {
  double t = 0;
  Vec3<double> point;
  Vec3<double> normal;  // geometric, oriented toward the ray origin
  int primitive = -1;
};

std::optional<RayHit> raycast(const SyntheticSceneSpec& spec, int traversal,
                              const Vec3<double>& origin,
                              const Vec3<double>& dir);

// Binary sun visibility at a surface point (hard shadows).
bool sun_visible(const SyntheticSceneSpec& spec, int traversal,
                 const Vec3<double>& point, const Vec3<double>& sun_dir);

// Blinn-Phong shading split so that color = albedo ⊙ light exactly; the
// specular lobe is folded into the light factor (divided by the albedo,
// floored at ε_a) so the identity also holds on glossy pixels.
struct ShadeResult {
  Vec3<double> color;
  Vec3<double> light;
};
ShadeResult analytic_shade(const Vec3<double>& point, const Vec3<double>& normal,
                           const Vec3<double>& albedo, double spec_strength,
                           double shininess, const TraversalLighting& light,
                           const Vec3<double>& view_dir, bool sun_visible_flag);

inline constexpr double kSpecularAlbedoFloor = 0.05;  // ε_a

// Per-traversal sky color (no geometry): a sun-tinted gradient derived
// from the lighting so no extra spec fields are needed. Clamped to [0,1];
// sky pixels store material = 1 so the factorization identity holds.
Vec3<double> sky_color(const TraversalLighting& light, const Vec3<double>& dir);

// ---- Dataset output.

struct FrameRecord {
  int traversal = 0;
  int camera_id = 0;
  double timestamp = 0;
  std::string split;  // "train" | "test"
  Camera<double> camera;
  std::string rgb, gt_material, gt_normal, gt_depth, gt_light, static_mask;
};

struct DatasetManifest {
  std::string name;
  std::uint64_t seed = 1;
  int width = 0, height = 0;
  double fx = 0, fy = 0, cx = 0, cy = 0;
  std::vector<TraversalLighting> lighting;  // generator metadata
  std::vector<std::vector<FrameRecord>> traversals;
  std::string init_points;  // relative path to the PLY cloud
  double scene_radius = 0;

  std::size_t frame_count() const {
    std::size_t n = 0;
    for (const auto& t : traversals) n += t.size();
    return n;
  }
  void validate(const std::string& root_dir) const;
};

// Ray-casts every frame, writes rgb (8-bit PNG), the float supervision
// layers (PFM), the init point cloud (PLY) and manifest.json under
// out_dir. Deterministic per (spec, seed).
DatasetManifest generate_dataset(const SyntheticSceneSpec& spec,
                                 const std::string& out_dir);

DatasetManifest load_manifest(const std::string& dataset_dir);

// One frame's ground truth as loaded images (float, [0,1] rgb).
struct LoadedFrame {
  FrameRecord record;
  Image<float> rgb, gt_material, gt_normal, gt_depth, gt_light, static_mask;
};
LoadedFrame load_frame(const std::string& dataset_dir, const FrameRecord& rec);

// ---- Fixed suites.

std::vector<SyntheticSceneSpec> standard_suites();
SyntheticSceneSpec suite_by_name(const std::string& name);
std::vector<std::string> suite_names();

// Canonical serialization of a spec (sorted-key JSON) and its FNV-1a hash;
// used by the golden-hash stability test.
std::string spec_to_json(const SyntheticSceneSpec& spec);
SyntheticSceneSpec spec_from_json_text(const std::string& text);
std::uint64_t spec_hash(const SyntheticSceneSpec& spec);

}  // namespace admgs
