#include "export_layers.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>

#include "admgs/io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace admgs {

Image<float> normal_preview(const Image<float>& normal_map) {
  Image<float> out(normal_map.width, normal_map.height, 3);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = (normal_map.data[i] + 1.f) * 0.5f;
  }
  return out;
}

Image<float> depth_preview(const Image<float>& depth) {
  float lo = 1e30f, hi = -1e30f;
  for (const float v : depth.data) {
    if (v > 0) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  Image<float> out(depth.width, depth.height, 1);
  const float span = hi > lo ? hi - lo : 1.f;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const float v = depth.data[i];
    out.data[i] = v > 0 ? 1.f - (v - lo) / span : 0.f;
  }
  return out;
}

Image<float> gray_to_rgb(const Image<float>& gray) {
  Image<float> out(gray.width, gray.height, 3);
  for (int y = 0; y < gray.height; ++y) {
    for (int x = 0; x < gray.width; ++x) {
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = gray.at(y, x);
    }
  }
  return out;
}

Image<float> hstrip(const std::vector<Image<float>>& panels) {
  const int h = panels.front().height;
  int w = 0;
  for (const auto& p : panels) w += p.width;
  Image<float> out(w, h, 3);
  int x0 = 0;
  for (const auto& p : panels) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < p.width; ++x) {
        for (int c = 0; c < 3; ++c) {
          out.at(y, x0 + x, c) = p.channels == 3 ? p.at(y, x, c) : p.at(y, x);
        }
      }
    }
    x0 += p.width;
  }
  return out;
}

void export_decomposition(const ForwardBundle<float>& bundle,
                          const std::string& out_dir) {
  fs::create_directories(out_dir);
  const auto& r = bundle.render;

  Image<float> illumination(r.rgb.width, r.rgb.height, 3);
  for (std::size_t i = 0; i < illumination.data.size(); ++i) {
    illumination.data[i] =
        r.rgb.data[i] / std::max(r.material_map.data[i], 0.01f);
  }

  auto path = [&](const char* name) {
    return (fs::path(out_dir) / name).string();
  };
  write_png(path("rgb.png"), bundle.affine_rgb);
  write_pfm(path("render_linear.pfm"), r.rgb);
  write_pfm(path("material.pfm"), r.material_map);
  write_png(path("material.png"), r.material_map);
  write_pfm(path("illumination.pfm"), illumination);
  write_png(path("illumination.png"), illumination);
  write_pfm(path("normal.pfm"), r.normal_map);
  write_png(path("normal.png"), normal_preview(r.normal_map));
  write_pfm(path("depth.pfm"), r.depth);
  write_png(path("depth.png"), depth_preview(r.depth));
  write_pfm(path("static_mask.pfm"), r.static_mask);
  write_png(path("static_mask.png"), r.static_mask);

  json meta;
  meta["layers"] = {"rgb.png (post-affine preview)",
                    "render_linear.pfm (pre-affine render)",
                    "material.pfm/png", "illumination.pfm/png",
                    "normal.pfm/png ((n+1)/2 preview)", "depth.pfm/png",
                    "static_mask.pfm/png"};
  meta["illumination_definition"] =
      "render_linear / max(material, 0.01); the exported triple satisfies "
      "render_linear = material * illumination exactly";
  meta["normal_preview_encoding"] = "(n + 1) / 2 per channel";
  write_text_file(path("meta.json"), meta.dump(2) + "\n");
}

}  // namespace admgs
